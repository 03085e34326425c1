//! The asymmetric elastic net loss family and its bounded transform.
//!
//! `eval_aen` is the piecewise quadratic-plus-linear loss; `eval_baen`
//! rescales it through `w -> (1/lambda)(1 - 1/(1 + eta*w))`, which caps the
//! loss at `1/lambda` and makes distant outliers nearly weightless.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the loss family.
///
/// `lambda` sets the saturation level `1/lambda`, `eta` the steepness of the
/// approach to it, `tau` the weight of the negative branch, and `p` the
/// l2-vs-l1 trade-off inside each branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    lambda: f64,
    eta: f64,
    tau: f64,
    p: f64,
}

impl LossParams {
    pub fn new(lambda: f64, eta: f64, tau: f64, p: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParam(format!("lambda must be > 0, got {lambda}")));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParam(format!("eta must be > 0, got {eta}")));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParam(format!("tau must be in [0,1], got {tau}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParam(format!("p must be in [0,1], got {p}")));
        }
        Ok(Self { lambda, eta, tau, p })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Same parameters with a different `lambda`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.eta, self.tau, self.p)
    }
}

impl Default for LossParams {
    fn default() -> Self {
        Self { lambda: 1.0, eta: 1.0, tau: 0.5, p: 0.5 }
    }
}

/// Asymmetric elastic net loss.
pub fn eval_aen(z: f64, params: &LossParams) -> f64 {
    let (p, tau) = (params.p, params.tau);
    if z >= 0.0 {
        0.5 * p * z * z + (1.0 - p) * z
    } else {
        tau * (0.5 * p * tau * z * z - (1.0 - p) * z)
    }
}

/// First derivative of the AEN loss on the smooth branches (right branch at 0).
fn aen_deriv(z: f64, params: &LossParams) -> f64 {
    let (p, tau) = (params.p, params.tau);
    if z >= 0.0 {
        p * z + (1.0 - p)
    } else {
        tau * (p * tau * z - (1.0 - p))
    }
}

/// Bounded asymmetric elastic net loss, in `[0, 1/lambda)`.
pub fn eval_baen(z: f64, params: &LossParams) -> f64 {
    let a = params.eta * eval_aen(z, params);
    // (1/lambda)(1 - 1/(1+a)) written as a/(lambda(1+a)) to avoid cancellation
    a / (params.lambda * (1.0 + a))
}

/// Gradient of the bounded loss; at exactly `z = 0` returns the right-limit
/// value (the full subdifferential is available separately).
pub fn grad_baen(z: f64, params: &LossParams) -> f64 {
    let denom = 1.0 + params.eta * eval_aen(z, params);
    params.eta * aen_deriv(z, params) / (params.lambda * denom * denom)
}

/// The subdifferential of the bounded loss at `z = 0`.
pub fn subgradient_interval_at_zero(params: &LossParams) -> (f64, f64) {
    let hi = params.eta * (1.0 - params.p) / params.lambda;
    (-params.tau * hi, hi)
}

/// Second derivative of the bounded loss; interval-valued at `z = 0`, which
/// is rejected.
pub fn second_deriv_baen(z: f64, params: &LossParams) -> Result<f64> {
    if z == 0.0 {
        return Err(Error::InvalidParam(
            "second derivative is interval-valued at z = 0".into(),
        ));
    }
    let (p, tau, eta, lambda) = (params.p, params.tau, params.eta, params.lambda);
    let g = eval_aen(z, params);
    let g1 = aen_deriv(z, params);
    let g2 = if z > 0.0 { p } else { p * tau * tau };
    let denom = 1.0 + eta * g;
    Ok((eta * g2 * denom - 2.0 * eta * eta * g1 * g1) / (lambda * denom * denom * denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(lambda: f64, eta: f64, tau: f64, p: f64) -> LossParams {
        LossParams::new(lambda, eta, tau, p).unwrap()
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(LossParams::new(0.0, 1.0, 0.5, 0.5).is_err());
        assert!(LossParams::new(1.0, -1.0, 0.5, 0.5).is_err());
        assert!(LossParams::new(1.0, 1.0, 1.5, 0.5).is_err());
        assert!(LossParams::new(1.0, 1.0, 0.5, -0.1).is_err());
        // endpoints of tau and p are accepted
        assert!(LossParams::new(1.0, 1.0, 0.0, 0.0).is_ok());
        assert!(LossParams::new(1.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn aen_hand_values() {
        let pr = params(1.0, 1.0, 0.5, 0.5);
        assert_eq!(eval_aen(0.0, &pr), 0.0);
        assert_eq!(eval_aen(2.0, &pr), 2.0);
        assert_eq!(eval_aen(-2.0, &pr), 0.75);
        let pr0 = params(1.0, 1.0, 0.0, 0.5);
        assert_eq!(eval_aen(-5.0, &pr0), 0.0);
    }

    #[test]
    fn baen_hand_values() {
        let pr = params(1.0, 1.0, 0.5, 0.5);
        assert_eq!(eval_baen(0.0, &pr), 0.0);
        assert!((eval_baen(2.0, &pr) - 2.0 / 3.0).abs() < 1e-15);
        let pr2 = params(2.0, 1.0, 0.5, 0.5);
        let v = eval_baen(1e6, &pr2);
        assert!(v < 0.5 && 0.5 - v < 1e-6);
    }

    #[test]
    fn grad_hand_values() {
        let pr = params(1.0, 1.0, 0.5, 0.5);
        assert!((grad_baen(2.0, &pr) - 1.0 / 6.0).abs() < 1e-15);
        let (lo, hi) = subgradient_interval_at_zero(&pr);
        assert!((lo + 0.25).abs() < 1e-15);
        assert!((hi - 0.5).abs() < 1e-15);
        // scalar gradient at 0 takes the right-limit value
        assert_eq!(grad_baen(0.0, &pr), hi);
    }

    #[test]
    fn grad_matches_finite_differences() {
        let sets = [
            params(1.0, 1.0, 0.5, 0.5),
            params(2.0, 0.3, 0.9, 0.7),
            params(0.5, 4.0, 0.1, 0.3),
        ];
        for pr in &sets {
            for &z in &[2.0f64, -2.0, 0.7, -0.3, 5.0, -8.0, 1e-3, -1e-3] {
                let h = 1e-6 * z.abs().max(1.0);
                let fd = (eval_baen(z + h, pr) - eval_baen(z - h, pr)) / (2.0 * h);
                let g = grad_baen(z, pr);
                assert!(
                    (fd - g).abs() <= 1e-5 * g.abs().max(1e-12),
                    "z={z} fd={fd} g={g}"
                );
            }
        }
    }

    #[test]
    fn second_deriv_hand_value_and_fd() {
        let pr = params(1.0, 1.0, 0.5, 0.5);
        assert!((second_deriv_baen(2.0, &pr).unwrap() + 1.0 / 9.0).abs() < 1e-14);
        assert!(second_deriv_baen(0.0, &pr).is_err());
        let pr1 = params(1.0, 1.0, 1.0, 0.5);
        for &z in &[-1.0f64, 1e-3, 2.5] {
            let h = 1e-5 * z.abs().max(1.0);
            let fd = (grad_baen(z + h, &pr1) - grad_baen(z - h, &pr1)) / (2.0 * h);
            let s = second_deriv_baen(z, &pr1).unwrap();
            assert!((fd - s).abs() <= 1e-3 * s.abs().max(1e-9), "z={z} fd={fd} s={s}");
        }
    }

    #[test]
    fn degenerates_to_aen_for_small_eta_lambda() {
        // p = 0 keeps L_aen <= 10 on the probed range, so the first-order
        // expansion error eta * L_aen^2 stays within the 1e-4 budget
        let pr = params(1e-6, 1e-6, 1.0, 0.0);
        let mut max_gap: f64 = 0.0;
        let mut z = -10.0;
        while z <= 10.0 {
            max_gap = max_gap.max((eval_baen(z, &pr) - eval_aen(z, &pr)).abs());
            z += 1e-3;
        }
        assert!(max_gap <= 1e-4, "max gap {max_gap}");
    }

    #[test]
    fn als_limit_is_pure_quadratic() {
        // p=1, tau=1: both branches reduce to z^2/2
        let pr = params(1.0, 1.0, 1.0, 1.0);
        for &z in &[-3.0, -0.5, 0.5, 3.0] {
            assert!((eval_aen(z, &pr) - 0.5 * z * z).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_vanishes_at_infinity() {
        let pr = LossParams::default();
        assert!(grad_baen(1e6, &pr).abs() < 1e-6);
        assert!(grad_baen(-1e6, &pr).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn baen_bounded_and_monotone(
            z in -1e6f64..1e6,
            lambda in 0.1f64..10.0,
            eta in 0.1f64..10.0,
            tau in 0.0f64..1.0,
            p in 0.0f64..1.0,
        ) {
            let pr = params(lambda, eta, tau, p);
            let v = eval_baen(z, &pr);
            prop_assert!(v >= 0.0 && v < 1.0 / lambda);
            if z >= 0.0 {
                // allow float rounding near the saturation plateau
                let v2 = eval_baen(z + 1.0, &pr);
                prop_assert!(v2 >= v - 1e-9 / lambda);
            }
        }
    }
}
