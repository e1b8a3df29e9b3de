//! Scalar approximations of the unit step used to make group positive
//! rates differentiable.
//!
//! Every approximation is evaluated at the scaled distance-to-threshold
//! `alpha * t`, where `t = output - tau`. The smoothed step replaces both
//! `max` operations of the clipped ramp `min{max{0, z + 1/2}, 1}` by the
//! smoothing `max{u, 0} ~ (u + sqrt(u^2 + mu)) / 2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};

pub const DEFAULT_ALPHA: f64 = 50.0;
pub const DEFAULT_MU: f64 = 1e-2;
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateKind {
    Heaviside,
    Linear,
    Sigmoid,
    SmoothedStep,
}

impl fmt::Display for SurrogateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SurrogateKind::Heaviside => "heaviside",
            SurrogateKind::Linear => "linear",
            SurrogateKind::Sigmoid => "sigmoid",
            SurrogateKind::SmoothedStep => "smoothed-step",
        };
        f.write_str(s)
    }
}

impl FromStr for SurrogateKind {
    type Err = FairError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "heaviside" | "step" => Ok(SurrogateKind::Heaviside),
            "linear" => Ok(SurrogateKind::Linear),
            "sigmoid" => Ok(SurrogateKind::Sigmoid),
            "smoothed-step" | "smoothed_step" | "smoothedstep" => Ok(SurrogateKind::SmoothedStep),
            other => Err(FairError::invalid(format!("unknown surrogate `{other}`"))),
        }
    }
}

/// Which step approximation to use and how it is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub kind: SurrogateKind,
    pub alpha: f64,
    /// Smoothing parameter; only read by [`SurrogateKind::SmoothedStep`].
    pub mu: f64,
    /// Prediction threshold applied to the network output.
    pub tau: f64,
}

impl Default for SurrogateSpec {
    fn default() -> Self {
        Self::smoothed_step(DEFAULT_ALPHA, DEFAULT_MU)
    }
}

impl SurrogateSpec {
    pub fn new(kind: SurrogateKind, alpha: f64, mu: f64, tau: f64) -> Result<Self> {
        let spec = Self { kind, alpha, mu, tau };
        spec.validate()?;
        Ok(spec)
    }

    pub fn heaviside() -> Self {
        Self {
            kind: SurrogateKind::Heaviside,
            alpha: 1.0,
            mu: DEFAULT_MU,
            tau: DEFAULT_TAU,
        }
    }

    pub fn linear(alpha: f64) -> Self {
        Self {
            kind: SurrogateKind::Linear,
            alpha,
            mu: DEFAULT_MU,
            tau: DEFAULT_TAU,
        }
    }

    pub fn sigmoid(alpha: f64) -> Self {
        Self {
            kind: SurrogateKind::Sigmoid,
            alpha,
            mu: DEFAULT_MU,
            tau: DEFAULT_TAU,
        }
    }

    pub fn smoothed_step(alpha: f64, mu: f64) -> Self {
        Self {
            kind: SurrogateKind::SmoothedStep,
            alpha,
            mu,
            tau: DEFAULT_TAU,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// The hard indicator at the same threshold.
    pub fn hard(&self) -> Self {
        Self::heaviside().with_tau(self.tau)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(FairError::invalid(format!(
                "surrogate scaling alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.kind == SurrogateKind::SmoothedStep && !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(FairError::invalid(format!(
                "smoothing parameter mu must be positive, got {}",
                self.mu
            )));
        }
        if !self.tau.is_finite() {
            return Err(FairError::invalid("threshold tau must be finite"));
        }
        Ok(())
    }

    /// `phi(alpha * t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(FairError::invalid(format!("surrogate argument is not finite: {t}")));
        }
        Ok(self.value(t))
    }

    /// `d/dt phi(alpha * t) = alpha * phi'(alpha * t)`.
    pub fn eval_grad(&self, t: f64) -> Result<f64> {
        if self.kind == SurrogateKind::Heaviside {
            return Err(FairError::Unsupported("the Heaviside step has no derivative".into()));
        }
        if !t.is_finite() {
            return Err(FairError::invalid(format!("surrogate argument is not finite: {t}")));
        }
        Ok(self.derivative(t))
    }

    /// Value at a network output, i.e. `phi(alpha * (output - tau))`.
    #[inline]
    pub fn at_output(&self, output: f64) -> f64 {
        self.value(output - self.tau)
    }

    pub fn is_differentiable(&self) -> bool {
        self.kind != SurrogateKind::Heaviside
    }

    #[inline]
    pub(crate) fn value(&self, t: f64) -> f64 {
        let z = self.alpha * t;
        match self.kind {
            SurrogateKind::Heaviside => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SurrogateKind::Linear => z,
            SurrogateKind::Sigmoid => sigmoid(z),
            SurrogateKind::SmoothedStep => smoothed_step(z, self.mu),
        }
    }

    /// Derivative with respect to `t`; zero for the Heaviside kind.
    #[inline]
    pub(crate) fn derivative(&self, t: f64) -> f64 {
        let z = self.alpha * t;
        let dz = match self.kind {
            SurrogateKind::Heaviside => 0.0,
            SurrogateKind::Linear => 1.0,
            SurrogateKind::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            SurrogateKind::SmoothedStep => smoothed_step_derivative(z, self.mu),
        };
        self.alpha * dz
    }
}

/// Logistic function, branching on sign so that `exp` never overflows.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(u + sqrt(u^2 + mu)) / 2` without cancellation for large negative `u`.
#[inline]
pub fn smooth_max0(u: f64, mu: f64) -> f64 {
    let root = (u * u + mu).sqrt();
    if u >= 0.0 {
        0.5 * (u + root)
    } else {
        0.5 * mu / (root - u)
    }
}

#[inline]
fn smooth_max0_derivative(u: f64, mu: f64) -> f64 {
    let root = (u * u + mu).sqrt();
    if u >= 0.0 {
        0.5 * (1.0 + u / root)
    } else {
        0.5 * mu / (root * (root - u))
    }
}

/// `1 - m(1 - m(z + 1/2))` with `m` the smoothed `max{., 0}`.
#[inline]
pub fn smoothed_step(z: f64, mu: f64) -> f64 {
    let inner = smooth_max0(z + 0.5, mu);
    1.0 - smooth_max0(1.0 - inner, mu)
}

#[inline]
fn smoothed_step_derivative(z: f64, mu: f64) -> f64 {
    let u = z + 0.5;
    let v = 1.0 - smooth_max0(u, mu);
    smooth_max0_derivative(v, mu) * smooth_max0_derivative(u, mu)
}

/// The unit step the approximations target: 1 for `t > 0`, else 0.
pub fn step(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Clipped ramp `min{max{0, z + 1/2}, 1}`, the `mu -> 0` limit of the smoothed step.
pub fn clipped_ramp(z: f64) -> f64 {
    (z + 0.5).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn central_difference(spec: &SurrogateSpec, t: f64, h: f64) -> f64 {
        (spec.value(t + h) - spec.value(t - h)) / (2.0 * h)
    }

    #[test]
    fn sigmoid_at_origin_is_half() {
        assert_eq!(SurrogateSpec::sigmoid(1.0).eval(0.0).unwrap(), 0.5);
        assert_eq!(SurrogateSpec::sigmoid(1.0).eval_grad(0.0).unwrap(), 0.25);
    }

    #[test]
    fn heaviside_values_and_no_gradient() {
        let h = SurrogateSpec::heaviside();
        assert_eq!(h.eval(-1.0).unwrap(), 0.0);
        assert_eq!(h.eval(0.0).unwrap(), 0.0);
        assert_eq!(h.eval(1e-300).unwrap(), 1.0);
        assert!(matches!(h.eval_grad(0.3), Err(FairError::Unsupported(_))));
    }

    #[test]
    fn linear_gradient_is_alpha() {
        let l = SurrogateSpec::linear(3.0);
        assert_eq!(l.eval(7.0).unwrap(), 21.0);
        assert_eq!(l.eval_grad(7.0).unwrap(), 3.0);
    }

    #[test]
    fn non_finite_argument_rejected() {
        let s = SurrogateSpec::default();
        assert!(s.eval(f64::NAN).is_err());
        assert!(s.eval(f64::INFINITY).is_err());
        assert!(s.eval_grad(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(SurrogateSpec::new(SurrogateKind::Sigmoid, 0.0, 0.01, 0.5).is_err());
        assert!(SurrogateSpec::new(SurrogateKind::SmoothedStep, 1.0, 0.0, 0.5).is_err());
        assert!(SurrogateSpec::new(SurrogateKind::Linear, 1.0, 0.0, 0.5).is_ok());
    }

    #[test]
    fn smoothed_step_at_origin() {
        // 40-digit evaluation of the nested formula: 0.49995146102230016664...
        let s = SurrogateSpec::smoothed_step(1.0, 0.01);
        assert_relative_eq!(s.eval(0.0).unwrap(), 0.499_951_461_022_300_2, epsilon = 1e-15);
        assert_relative_eq!(s.eval(0.0).unwrap(), 0.49995, epsilon = 5e-6);
    }

    #[test]
    fn smoothed_step_matches_naive_formula() {
        // Oracle: the nested formula written out literally, no cancellation guard.
        fn naive(z: f64, mu: f64) -> f64 {
            let u = z + 0.5;
            let s = 0.5 * (u + (u * u + mu).sqrt());
            let v = 1.0 - s;
            1.0 - 0.5 * (v + (v * v + mu).sqrt())
        }
        for i in -200..=200 {
            let z = i as f64 * 0.01;
            for mu in [1e-4, 1e-2, 1e-1] {
                assert_relative_eq!(smoothed_step(z, mu), naive(z, mu), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn smoothed_step_small_mu_limit() {
        let s = SurrogateSpec::smoothed_step(1.0, 1e-12);
        assert_relative_eq!(s.eval(0.2).unwrap(), clipped_ramp(0.2), epsilon = 1e-6);
        assert_relative_eq!(clipped_ramp(0.2), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn smoothed_step_gradient_against_finite_difference() {
        let s = SurrogateSpec::smoothed_step(50.0, 0.01);
        let analytic = s.eval_grad(0.01).unwrap();
        let fd = central_difference(&s, 0.01, 1e-6);
        assert_relative_eq!(analytic, fd, max_relative = 1e-5);
    }

    #[test]
    fn smoothed_step_range() {
        let mu = 0.01;
        for i in -1000..=1000 {
            let v = smoothed_step(i as f64 * 0.05, mu);
            assert!(v > -mu / 2.0 && v < 1.0, "{v}");
        }
    }

    #[test]
    fn smoothed_step_symmetry_defect_is_bounded() {
        // phi_mu(0) = 0.49995 for mu = 0.01, so phi(t) + phi(-t) = 1 holds only
        // up to O(mu); the defect is largest at the origin.
        for mu in [1e-4, 1e-3, 1e-2, 1e-1] {
            let mut worst: f64 = 0.0;
            for i in -4000..=4000 {
                let z = i as f64 * 0.001;
                worst = worst.max((smoothed_step(z, mu) + smoothed_step(-z, mu) - 1.0).abs());
            }
            assert!(worst <= mu / 2.0, "mu={mu} worst={worst}");
            assert!(worst > 0.0);
        }
    }

    proptest! {
        #[test]
        fn monotone(a in -20.0f64..20.0, b in -20.0f64..20.0, alpha in 0.1f64..100.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for spec in [SurrogateSpec::sigmoid(alpha), SurrogateSpec::smoothed_step(alpha, 0.01)] {
                prop_assert!(spec.eval(lo).unwrap() <= spec.eval(hi).unwrap());
            }
        }

        #[test]
        fn sigmoid_symmetric(t in -50.0f64..50.0, alpha in 0.1f64..100.0) {
            let s = SurrogateSpec::sigmoid(alpha);
            prop_assert!((s.eval(t).unwrap() + s.eval(-t).unwrap() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn mu_convergence(z in -5.0f64..5.0, mu in 1e-8f64..0.5) {
            prop_assert!((smoothed_step(z, mu) - clipped_ramp(z)).abs() <= mu.sqrt());
        }

        #[test]
        fn gradient_matches_finite_difference(t in -10.0f64..10.0, alpha in 0.1f64..5.0, mu in 1e-3f64..0.5) {
            for spec in [
                SurrogateSpec::linear(alpha),
                SurrogateSpec::sigmoid(alpha),
                SurrogateSpec::smoothed_step(alpha, mu),
            ] {
                let analytic = spec.eval_grad(t).unwrap();
                let fd = central_difference(&spec, t, 1e-6);
                let scale = analytic.abs().max(fd.abs()).max(1e-3);
                prop_assert!((analytic - fd).abs() / scale <= 1e-5, "{spec:?} t={t} {analytic} {fd}");
            }
        }

        #[test]
        fn scaling_sharpens(t in prop_oneof![-2.0f64..-1e-3, 1e-3f64..2.0], a1 in 0.5f64..50.0, factor in 1.0f64..20.0) {
            let a2 = a1 * factor;
            let sig = |a: f64| (SurrogateSpec::sigmoid(a).eval(t).unwrap() - step(t)).abs();
            prop_assert!(sig(a2) <= sig(a1) + 1e-15);
            // Below the origin the smoothed step undershoots to -mu/4, so the
            // approach to the step is monotone only up to that undershoot.
            let mu = 0.01;
            let sm = |a: f64| (SurrogateSpec::smoothed_step(a, mu).eval(t).unwrap() - step(t)).abs();
            prop_assert!(sm(a2) <= sm(a1) + mu / 4.0);
            if t > 0.0 {
                prop_assert!(sm(a2) <= sm(a1) + 1e-15);
            }
        }
    }
}
