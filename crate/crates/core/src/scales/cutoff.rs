use serde::{Deserialize, Serialize};

use super::ScaleLadder;
use crate::error::{Error, Result};

fn phi(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth monotone bridge on `[0, 1]` from 1 down to 0, flat to all orders at both ends.
pub fn bridge(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let (a, b) = (phi(1.0 - t), phi(t));
    a / (a + b)
}

/// One on `(-inf, a]`, zero on `[b, inf)`, smooth in between.
pub fn step_down(x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        1.0
    } else if x >= b {
        0.0
    } else {
        bridge((x - a) / (b - a))
    }
}

/// Infrared profile: one on `(-inf, 1]`, zero on `[2, inf)`.
pub fn chi0(x: f64) -> f64 {
    step_down(x, 1.0, 2.0)
}

/// `chi0(|p| / sigma)`: keeps momenta below the scale.
pub fn chi_sigma(p_abs: f64, sigma: f64) -> f64 {
    chi0(p_abs / sigma)
}

/// `1 - chi0(|p| / sigma)`: keeps momenta above the scale.
pub fn chi_tilde_sigma(p_abs: f64, sigma: f64) -> f64 {
    1.0 - chi0(p_abs / sigma)
}

/// Named cutoff functions with validated arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cutoff {
    Chi0,
    ChiSigma { sigma: f64 },
    ChiTildeSigma { sigma: f64 },
    ChiTau,
    ChiTauN { n: usize },
    F,
    FN { n: usize },
}

impl Cutoff {
    /// Evaluate at `x`. Ladder-dependent kinds need `ladder`.
    pub fn eval(&self, x: f64, ladder: Option<&ScaleLadder>) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::param("x", "must be finite"));
        }
        let need = || ladder.ok_or_else(|| Error::param("ladder", "required for this cutoff"));
        let check_sigma = |s: f64| {
            if s > 0.0 && s.is_finite() {
                Ok(s)
            } else {
                Err(Error::param("sigma", "must be positive and finite"))
            }
        };
        Ok(match *self {
            Cutoff::Chi0 => chi0(x),
            Cutoff::ChiSigma { sigma } => chi_sigma(x, check_sigma(sigma)?),
            Cutoff::ChiTildeSigma { sigma } => chi_tilde_sigma(x, check_sigma(sigma)?),
            Cutoff::ChiTau => need()?.chi_tau(x),
            Cutoff::ChiTauN { n } => need()?.chi_tau_n(x, n)?,
            Cutoff::F => need()?.f(x),
            Cutoff::FN { n } => need()?.f_n(x, n)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::{derive_ladder, ModelParams};
    use proptest::prelude::*;

    fn ladder() -> ScaleLadder {
        derive_ladder(&ModelParams::new(1.0, 2.0, 0.5, 0.0, 1.0, 1.0).unwrap(), 4, 0.0).unwrap()
    }

    #[test]
    fn profile_values() {
        assert_eq!(chi0(1.0), 1.0);
        assert_eq!(chi0(2.0), 0.0);
        assert!((chi0(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(chi_tilde_sigma(2.0 * 0.75, 0.75), 1.0);
    }

    #[test]
    fn tau_cutoff_plateaus() {
        let l = ladder();
        assert_eq!(l.chi_tau(l.tau), 1.0);
        assert_eq!(l.chi_tau(1.0), 0.0);
        assert_eq!(l.chi_tau_n(0.5 * l.sigma[2], 2).unwrap(), 1.0);
    }

    #[test]
    fn f_matches_support() {
        let l = ladder();
        let (g, e) = (l.gamma, l.eps_gamma);
        assert_eq!(l.f((g - e) * (g - e)), 1.0);
        assert_eq!(l.f(g + e), 1.0);
        assert_eq!(l.f((g - 2.0 * e) * (g - 2.0 * e)), 0.0);
        assert_eq!(l.f(g + 2.0 * e), 0.0);
        assert!(l.f(g + 1.5 * e) > 0.0 && l.f(g + 1.5 * e) < 1.0);
    }

    #[test]
    fn checked_eval_rejects_bad_sigma() {
        assert!(Cutoff::ChiSigma { sigma: 0.0 }.eval(1.0, None).is_err());
        assert!(Cutoff::ChiTau.eval(1.0, None).is_err());
        assert_eq!(Cutoff::FN { n: 1 }.eval(0.5, Some(&ladder())).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn bridge_is_monotone_and_bounded(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (x, y) = (bridge(lo), bridge(hi));
            prop_assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
            prop_assert!(x >= y);
        }

        #[test]
        fn bridge_is_antisymmetric(t in 0.0f64..1.0) {
            prop_assert!((bridge(t) + bridge(1.0 - t) - 1.0).abs() < 1e-14);
        }

        #[test]
        fn cutoffs_partition_unity(p in 0.0f64..10.0, s in 0.01f64..5.0) {
            prop_assert!((chi_sigma(p, s) + chi_tilde_sigma(p, s) - 1.0).abs() < 1e-15);
        }

        #[test]
        fn f_is_bounded(x in -1.0f64..2.0) {
            let v = ladder().f(x);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
