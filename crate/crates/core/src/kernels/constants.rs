use serde::Serialize;

use crate::error::{Error, Result};
use crate::scales::ModelParams;

/// Safety factor applied to strict upper bounds on couplings.
const STRICT: f64 = 0.99;

/// Largest admissible value of `g1 K C`; keeps the Neumann-series factors moderate.
const G1_KC_CAP: f64 = 0.5;

/// Constants of the relative bound and the coupling thresholds derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    /// Coefficient of `|H0 psi|` in the relative bound (per unit `K`).
    pub c_be: f64,
    /// Coefficient of `|psi|` in the relative bound (per unit `K`).
    pub b_be: f64,
    pub k: f64,
    pub k_tilde: f64,
    /// Coupling below which `H` is self-adjoint and `g1 K C < 1`.
    pub g1: f64,
    pub c_tilde: f64,
    pub b_tilde: f64,
    pub d_tilde: f64,
    /// Coupling below which the gap cascade holds.
    pub g_delta: f64,
}

/// `(C, B)` of the relative bound `|H_I psi| <= K (C |H0 psi| + B |psi|)`.
pub fn relative_bound_coefficients(params: &ModelParams) -> (f64, f64) {
    let (m1, mw, b, e) = (params.m1, params.m_w, params.beta, params.eta);
    let c2 = 3.0 / mw * (1.0 + 1.0 / (m1 * m1)) + 3.0 * b / (mw * m1 * m1) + 12.0 * e / (m1 * m1) * (1.0 + b);
    let b2 = 3.0 / mw * (1.0 + 1.0 / (4.0 * b)) + 12.0 * (e * (1.0 + 1.0 / (4.0 * b)) + 1.0 / (4.0 * e));
    (c2.sqrt(), b2.sqrt())
}

/// Derive all coupling constants from the model parameters, `K`, `K~` and `gamma`.
pub fn derive_constants(params: &ModelParams, k: f64, k_tilde: f64, gamma: f64) -> Result<BoundConstants> {
    params.validate()?;
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::param("K", "must be finite and non-negative"));
    }
    if !(k_tilde >= 0.0 && k_tilde.is_finite()) {
        return Err(Error::param("K~", "must be finite and non-negative"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", "must lie in (0, 1)"));
    }
    let (m1, mw, delta) = (params.m1, params.m_w, params.delta);
    let (c, b) = relative_bound_coefficients(params);

    let g1 = if k == 0.0 {
        1.0
    } else {
        let self_adjoint = (mw / (6.0 * (1.0 / (m1 * m1) + 1.0) * k * k)).sqrt();
        (STRICT * self_adjoint).min(G1_KC_CAP / (k * c))
    };
    let kc = g1 * k * c;
    if kc >= 1.0 {
        return Err(Error::NoAdmissibleCoupling(format!("g1 K C = {kc} is not below 1")));
    }
    let r = kc / (1.0 - kc);
    let c_tilde = c * (1.0 + r);
    let b_tilde = (1.0 + r * (2.0 + g1 * k * b * c / (1.0 - kc))) * b;
    let prefactor = (4.0 * (2.0 * m1 + 1.0) * gamma / (2.0 * m1 - delta)).max(2.0);
    let d_tilde = prefactor * k_tilde * (2.0 * m1 * c_tilde + b_tilde);

    let mut bound = 1.0f64.min(g1);
    if d_tilde > 0.0 {
        bound = bound.min((gamma - gamma * gamma) / (3.0 * d_tilde));
    }
    let g_delta = STRICT * bound;
    if !(g_delta > 0.0) {
        return Err(Error::NoAdmissibleCoupling("coupling threshold is not positive".into()));
    }
    Ok(BoundConstants { c_be: c, b_be: b, k, k_tilde, g1, c_tilde, b_tilde, d_tilde, g_delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> ModelParams {
        ModelParams::new(1.0, 2.0, 0.5, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn coefficients_match_hand_values() {
        let (c, b) = relative_bound_coefficients(&desk());
        assert!((c * c - 28.5).abs() < 1e-12);
        assert!((b * b - (1.875 + 18.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_norm_gives_unit_threshold() {
        let k = derive_constants(&desk(), 0.0, 0.0, 2.0 / 3.0).unwrap();
        assert_eq!(k.g1, 1.0);
        assert_eq!(k.d_tilde, 0.0);
        assert!((k.g_delta - 0.99).abs() < 1e-15);
    }

    #[test]
    fn unit_kernel_thresholds() {
        let p = desk();
        let k = derive_constants(&p, 1.0, 0.5, 2.0 / 3.0).unwrap();
        assert!((k.g1 * k.c_be - 0.5).abs() < 1e-12);
        assert!((k.c_tilde - 2.0 * k.c_be).abs() < 1e-12);
        assert!(6.0 * k.g1 * k.g1 / p.m_w * 2.0 < 1.0);
        let gamma = 2.0 / 3.0;
        assert!(k.g_delta < (gamma - gamma * gamma) / (3.0 * k.d_tilde));
        assert!(k.g_delta < k.g1);
    }
}
