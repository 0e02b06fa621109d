//! Model parameters, dispersion relations, the infrared scale ladder and smooth cutoffs.

mod cutoff;
mod modes;

pub use cutoff::{bridge, chi0, chi_sigma, chi_tilde_sigma, step_down, Cutoff};
pub use modes::{build_mode_set, GridSpec, Mode, ModeSet, Site};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Mass of the massive fermion.
    pub m1: f64,
    /// Mass of the boson.
    pub m_w: f64,
    /// Ladder parameter, `0 < delta < m1`.
    pub delta: f64,
    /// Coupling constant.
    pub g: f64,
    pub beta: f64,
    pub eta: f64,
}

impl ModelParams {
    pub fn new(m1: f64, m_w: f64, delta: f64, g: f64, beta: f64, eta: f64) -> Result<Self> {
        let p = ModelParams { m1, m_w, delta, g, beta, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        for (name, v) in [
            ("m1", self.m1),
            ("m_w", self.m_w),
            ("delta", self.delta),
            ("g", self.g),
            ("beta", self.beta),
            ("eta", self.eta),
        ] {
            finite(name, v)?;
        }
        if self.m1 <= 0.0 {
            return Err(Error::param("m1", "must be positive"));
        }
        if self.m_w <= 0.0 {
            return Err(Error::param("m_w", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < self.m1) {
            return Err(Error::param("delta", format!("must satisfy 0 < delta < m1 = {}", self.m1)));
        }
        if self.g < 0.0 {
            return Err(Error::param("g", "must be non-negative"));
        }
        if self.beta <= 0.0 {
            return Err(Error::param("beta", "must be positive"));
        }
        if self.eta <= 0.0 {
            return Err(Error::param("eta", "must be positive"));
        }
        Ok(())
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }
}

/// Particle species of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Species {
    /// Massive fermion (`b`).
    MassiveFermion,
    /// Massless neutrino (`c`).
    Neutrino,
    /// Massive boson (`a`).
    Boson,
}

impl Species {
    pub fn is_fermion(self) -> bool {
        !matches!(self, Species::Boson)
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::MassiveFermion => "massive fermion",
            Species::Neutrino => "neutrino",
            Species::Boson => "boson",
        }
    }
}

/// Free one-particle energy of `species` at momentum `p`.
pub fn dispersion(species: Species, p: [f64; 3], params: &ModelParams) -> f64 {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    match species {
        Species::MassiveFermion => (p2 + params.m1 * params.m1).sqrt(),
        Species::Neutrino => p2.sqrt(),
        Species::Boson => (p2 + params.m_w * params.m_w).sqrt(),
    }
}

/// Closed energy window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn shift(&self, by: f64) -> Window {
        Window { lo: self.lo + by, hi: self.hi + by }
    }
}

/// The geometric infrared ladder `sigma_0 > sigma_1 > ...` with its derived constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleLadder {
    pub gamma: f64,
    pub tau: f64,
    /// Smallest integer with `N * gamma >= 1`.
    pub n_cut: usize,
    pub eps_gamma: f64,
    /// The value of `g * D~` the ladder was built with.
    pub g_dtilde: f64,
    /// `sigma[n]` for `n = 0..=n_max`.
    pub sigma: Vec<f64>,
}

impl ScaleLadder {
    pub fn n_max(&self) -> usize {
        self.sigma.len() - 1
    }

    pub fn sigma(&self, n: usize) -> Result<f64> {
        self.sigma.get(n).copied().ok_or_else(|| {
            Error::param("n", format!("ladder index {n} exceeds n_max = {}", self.n_max()))
        })
    }

    /// Energy window `[(gamma - eps)^2 sigma_n, (gamma + eps) sigma_n]`.
    pub fn window(&self, n: usize) -> Result<Window> {
        let s = self.sigma(n)?;
        let (g, e) = (self.gamma, self.eps_gamma);
        Ok(Window { lo: (g - e) * (g - e) * s, hi: (g + e) * s })
    }

    /// Upper bound `(1 - 3 g D~ / gamma) sigma_n` that the gap of the cutoff Hamiltonian must exceed.
    pub fn gap_bound(&self, n: usize) -> Result<f64> {
        Ok((1.0 - 3.0 * self.g_dtilde / self.gamma) * self.sigma(n)?)
    }

    /// `chi^(tau)(lambda)`: one on `(-inf, tau]`, zero on `[1, inf)`.
    pub fn chi_tau(&self, lambda: f64) -> f64 {
        step_down(lambda, self.tau, 1.0)
    }

    /// `chi^(tau)(|p| / sigma_n)`.
    pub fn chi_tau_n(&self, p_abs: f64, n: usize) -> Result<f64> {
        Ok(self.chi_tau(p_abs / self.sigma(n)?))
    }

    /// Window function equal to one on `[(gamma - eps)^2, gamma + eps]`,
    /// vanishing outside `((gamma - 2 eps)^2, gamma + 2 eps)`.
    pub fn f(&self, lambda: f64) -> f64 {
        let (g, e) = (self.gamma, self.eps_gamma);
        let (a0, a1) = ((g - 2.0 * e) * (g - 2.0 * e), (g - e) * (g - e));
        let (b0, b1) = (g + e, g + 2.0 * e);
        if lambda <= a0 || lambda >= b1 {
            0.0
        } else if lambda < a1 {
            1.0 - step_down(lambda, a0, a1)
        } else if lambda <= b0 {
            1.0
        } else {
            step_down(lambda, b0, b1)
        }
    }

    /// `f(lambda / sigma_n)`.
    pub fn f_n(&self, lambda: f64, n: usize) -> Result<f64> {
        Ok(self.f(lambda / self.sigma(n)?))
    }

    /// Open interval outside of which `f_n` vanishes.
    pub fn f_support(&self, n: usize) -> Result<Window> {
        let s = self.sigma(n)?;
        let (g, e) = (self.gamma, self.eps_gamma);
        Ok(Window { lo: (g - 2.0 * e) * (g - 2.0 * e) * s, hi: (g + 2.0 * e) * s })
    }
}

/// Build the scale ladder up to `n_max`, given the product `g * D~`.
///
/// Pass `g_dtilde = 0` to obtain the coupling-free ladder needed to derive the constants.
pub fn derive_ladder(params: &ModelParams, n_max: usize, g_dtilde: f64) -> Result<ScaleLadder> {
    params.validate()?;
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    if !(g_dtilde >= 0.0 && g_dtilde.is_finite()) {
        return Err(Error::param("g_dtilde", "must be finite and non-negative"));
    }
    let (m1, delta) = (params.m1, params.delta);
    let gamma = 1.0 - delta / (2.0 * m1 - delta);
    let tau = 1.0 - delta / (2.0 * (2.0 * m1 - delta));

    let mut n_cut = (1.0 / gamma).ceil().max(1.0) as usize;
    while n_cut > 1 && (n_cut - 1) as f64 * gamma >= 1.0 {
        n_cut -= 1;
    }
    while (n_cut as f64) * gamma < 1.0 {
        n_cut += 1;
    }

    let slack = 1.0 - 3.0 * g_dtilde / gamma - gamma;
    if slack <= 0.0 {
        return Err(Error::NoAdmissibleCoupling(format!(
            "1 - 3 g D~ / gamma - gamma = {slack:e} is not positive"
        )));
    }
    let eps_gamma = (slack / (2.0 * n_cut as f64)).min((tau - gamma) / 4.0);

    let mut sigma = Vec::with_capacity(n_max + 1);
    sigma.push(2.0 * m1 + 1.0);
    sigma.push(m1 - delta / 2.0);
    for n in 1..n_max {
        let next = gamma * sigma[n];
        sigma.push(next);
    }
    Ok(ScaleLadder { gamma, tau, n_cut, eps_gamma, g_dtilde, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> ModelParams {
        ModelParams::new(1.0, 2.0, 0.5, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn reference_ladder() {
        let l = derive_ladder(&desk(), 4, 0.0).unwrap();
        assert_eq!(l.sigma[0], 3.0);
        assert_eq!(l.sigma[1], 0.75);
        assert!((l.sigma[2] - 0.5).abs() < 1e-15);
        assert!((l.gamma - 2.0 / 3.0).abs() < 1e-15);
        assert!((l.tau - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(l.n_cut, 2);
        assert!((l.eps_gamma - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn small_delta_gives_gamma_near_one() {
        let p = ModelParams::new(1.0, 2.0, 1e-6, 0.0, 1.0, 1.0).unwrap();
        let l = derive_ladder(&p, 2, 0.0).unwrap();
        assert!(1.0 - l.gamma < 1e-6 && l.gamma < 1.0);
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(ModelParams::new(1.0, 2.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 2.0, 0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rejects_oversized_coupling() {
        assert!(matches!(
            derive_ladder(&desk(), 3, 0.2),
            Err(Error::NoAdmissibleCoupling(_))
        ));
    }

    #[test]
    fn windows_nest_inside_f_plateau() {
        let l = derive_ladder(&desk(), 3, 0.0).unwrap();
        for n in 1..=3 {
            let w = l.window(n).unwrap();
            let s = l.sigma(n).unwrap();
            assert_eq!(l.f_n(w.lo, n).unwrap(), 1.0);
            assert_eq!(l.f_n(w.hi, n).unwrap(), 1.0);
            assert!(w.hi < l.tau * s);
        }
    }

    #[test]
    fn dispersions() {
        let p = desk();
        assert_eq!(dispersion(Species::MassiveFermion, [0.0; 3], &p), 1.0);
        assert_eq!(dispersion(Species::Boson, [0.0; 3], &p), 2.0);
        assert_eq!(dispersion(Species::Neutrino, [3.0, 4.0, 0.0], &p), 5.0);
    }
}
