/// Symmetric tridiagonal system, factored once and solved many times.
///
/// Thomas algorithm without pivoting; callers only build diagonally dominant
/// (stiffness + positive mass) matrices.
#[derive(Debug, Clone)]
pub(crate) struct Tridiagonal {
    // forward-elimination multipliers and pivots
    lower: Vec<f64>,
    pivot: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    /// `diag` has length m, `off` has length m - 1 (sub = super diagonal).
    pub(crate) fn factor(diag: &[f64], off: &[f64]) -> Self {
        let m = diag.len();
        debug_assert_eq!(off.len() + 1, m.max(1));
        let mut pivot = vec![0.0; m];
        let mut lower = vec![0.0; m.saturating_sub(1)];
        if m > 0 {
            pivot[0] = diag[0];
        }
        for i in 1..m {
            lower[i - 1] = off[i - 1] / pivot[i - 1];
            pivot[i] = diag[i] - lower[i - 1] * off[i - 1];
        }
        Self {
            lower,
            pivot,
            upper: off.to_vec(),
        }
    }

    pub(crate) fn solve_in_place(&self, rhs: &mut [f64]) {
        let m = self.pivot.len();
        for i in 1..m {
            rhs[i] -= self.lower[i - 1] * rhs[i - 1];
        }
        if m > 0 {
            rhs[m - 1] /= self.pivot[m - 1];
        }
        for i in (0..m.saturating_sub(1)).rev() {
            rhs[i] = (rhs[i] - self.upper[i] * rhs[i + 1]) / self.pivot[i];
        }
    }
}
