/// Probabilities are clamped to `[P_CLAMP, 1 - P_CLAMP]` before taking logs.
pub const P_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub loss: f64,
    /// Derivative of the loss with respect to the log-odds.
    pub gradient: f64,
    /// Second derivative with respect to the log-odds.
    pub hessian: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of predicting `p` for target `y` (0 or 1).
pub fn logistic_loss_and_gradient(p: f64, y: f64) -> LossTerms {
    let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    LossTerms {
        loss: -(y * p.ln() + (1.0 - y) * (1.0 - p).ln()),
        gradient: p - y,
        hessian: p * (1.0 - p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_at_half() {
        let t = logistic_loss_and_gradient(0.5, 1.0);
        assert!((t.loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(t.gradient, -0.5);
        assert_eq!(t.hessian, 0.25);
        assert_eq!(logistic_loss_and_gradient(0.5, 0.0).gradient, 0.5);
    }

    #[test]
    fn clamps_extremes() {
        let t = logistic_loss_and_gradient(0.0, 1.0);
        assert!(t.loss.is_finite() && t.hessian > 0.0);
        let t = logistic_loss_and_gradient(1.0, 0.0);
        assert!(t.loss.is_finite());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    /// Central differences in log-odds space: loss for the gradient, gradient
    /// for the hessian.
    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let loss_at = |z: f64, y: f64| logistic_loss_and_gradient(sigmoid(z), y).loss;
        let grad_at = |z: f64, y: f64| logistic_loss_and_gradient(sigmoid(z), y).gradient;
        for _ in 0..100 {
            let p: f64 = rng.random_range(0.01..0.99);
            let y = if rng.random::<bool>() { 1.0 } else { 0.0 };
            let z = (p / (1.0 - p)).ln();
            let h = 1e-4;
            let fd_grad = (loss_at(z + h, y) - loss_at(z - h, y)) / (2.0 * h);
            let fd_hess = (grad_at(z + h, y) - grad_at(z - h, y)) / (2.0 * h);
            let t = logistic_loss_and_gradient(p, y);
            assert!(
                (t.gradient - fd_grad).abs() <= 1e-5 * fd_grad.abs().max(1e-12),
                "{p} {y}"
            );
            assert!(
                (t.hessian - fd_hess).abs() <= 1e-5 * fd_hess.abs().max(1e-12),
                "{p} {y}"
            );
        }
    }
}
