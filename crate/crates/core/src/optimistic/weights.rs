//! The delayed-upper-bound regularizer weights.

/// `huber(x, y) = ½x² − ½(|x| − |y|)₊²`
pub fn huber(x: f64, y: f64) -> f64 {
    let excess = (x.abs() - y.abs()).max(0.0);
    0.5 * x * x - 0.5 * excess * excess
}

/// Running statistics for
/// `μ_{t+1} = (2/α) max_{j ≤ t−m−1} a_{j−m+1:j} + (1/α) √(Σ_{i ≤ t−m} (a_i² + 2α b_i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DubWeights {
    alpha: f64,
    memory: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    closed_max: f64,
    sum_sq: f64,
}

impl DubWeights {
    pub fn new(alpha: f64, memory: usize) -> Self {
        assert!(alpha > 0.0, "alpha must be positive");
        Self {
            alpha,
            memory,
            a: Vec::new(),
            b: Vec::new(),
            closed_max: 0.0,
            sum_sq: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Appends the next `(a, b)` pair.
    pub fn push(&mut self, a: f64, b: f64) {
        debug_assert!(a >= 0.0 && b >= 0.0);
        // The window ending at the previous entry becomes eligible for the
        // max term only once a newer entry exists.
        if !self.a.is_empty() {
            let n = self.a.len();
            let lo = n.saturating_sub(self.memory);
            let window: f64 = self.a[lo..n].iter().sum();
            self.closed_max = self.closed_max.max(window);
        }
        self.a.push(a);
        self.b.push(b);
        self.sum_sq += a * a + 2.0 * self.alpha * b;
    }

    pub fn mu(&self) -> f64 {
        (2.0 * self.closed_max + self.sum_sq.max(0.0).sqrt()) / self.alpha
    }

    pub fn a_history(&self) -> &[f64] {
        &self.a
    }

    pub fn b_history(&self) -> &[f64] {
        &self.b
    }
}
