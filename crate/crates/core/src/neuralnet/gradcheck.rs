//! Finite-difference gradient checking for piecewise-smooth functions.

/// Outcome of comparing an analytic gradient with finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// `max_i |analytic_i − numeric_i| / max_i |analytic_i|`.
    pub max_relative_error: f64,
    /// Coordinates where a ReLU kink fell inside `[x − h, x + h]` and the
    /// one-sided difference away from it was used instead.
    pub kinks: usize,
}

impl GradCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative_error <= tol
    }
}

/// Compare `analytic` against central differences of `f` at `x` with step
/// `h`. When the forward and backward one-sided differences disagree by more
/// than `kink_tol` relative to the gradient scale, a kink may lie inside the
/// stencil and the closest of the central and one-sided differences is used.
pub fn check_gradient(analytic: &[f64], x: &[f64], h: f64, kink_tol: f64, f: impl Fn(&[f64]) -> f64) -> GradCheck {
    assert_eq!(analytic.len(), x.len(), "gradient and point differ in length");
    let scale = analytic.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let norm = if scale > 0.0 { scale } else { 1.0 };
    let f0 = f(x);
    let mut p = x.to_vec();
    let mut worst = 0.0f64;
    let mut kinks = 0;
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        let fwd = (fp - f0) / h;
        let bwd = (f0 - fm) / h;
        let central = 0.5 * (fwd + bwd);
        let err = if (fwd - bwd).abs() / norm > kink_tol {
            kinks += 1;
            (analytic[i] - fwd).abs().min((analytic[i] - bwd).abs()).min((analytic[i] - central).abs())
        } else {
            (analytic[i] - central).abs()
        };
        worst = worst.max(err);
    }
    GradCheck { max_relative_error: worst / norm, kinks }
}
