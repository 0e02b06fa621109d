use num_complex::Complex64;

use super::{CheckContext, Model};
use crate::error::{Error, Result};
use crate::fock::{sector_split, HamiltonianVariant};
use crate::report::CheckReport;
use crate::spectral::{dense_eigen, eigs_lowest, ground_multiplicity, LowRank};

/// Options for the gap cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapOptions {
    /// Subtract twice the largest neutrino cell radius from the gap bound.
    pub discretization_tolerance: bool,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions { discretization_tolerance: true }
    }
}

/// Operator whose spectral function is compared with the factorized form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorizationTarget {
    /// The infrared-cut Hamiltonian `H_sigma_n`.
    CutoffHamiltonian,
    /// The full Hamiltonian `H`; factorization holds only up to `O(g)`.
    FullHamiltonian,
}

fn noise(scale: f64, dim: usize) -> f64 {
    64.0 * f64::EPSILON * (1.0 + scale * (dim as f64).sqrt())
}

/// Ground energy and gap of `H^n`.
fn upper_spectrum(model: &Model, n: usize, ctx: &CheckContext) -> Result<(f64, f64, f64)> {
    let h = model.hamiltonian(HamiltonianVariant::Upper { n })?;
    let k = 2.min(h.dim());
    let sol = eigs_lowest(&h, k, 1e-10, &ctx.solver)?;
    let gap = if k > 1 { sol.values[1] - sol.values[0] } else { f64::INFINITY };
    Ok((sol.values[0], gap, noise(h.max_abs(), h.dim())))
}

/// For each `n`: `gap(H^n) >= (1 - 3 g D~ / gamma) sigma_n` and `|E^n - E^(n+1)| <= (g D~ / gamma) sigma_(n+1)`.
pub fn check_gap_cascade(model: &Model, ns: &[usize], opts: GapOptions, ctx: &CheckContext) -> Result<CheckReport> {
    let ladder = &model.ladder;
    if ns.is_empty() {
        return Err(Error::param("gap_range", "must not be empty"));
    }
    if let Some(&n) = ns.iter().find(|&&n| n == 0 || n + 1 > ladder.n_max()) {
        return Err(Error::param("gap_range", format!("n = {n} must lie in 1..{}", ladder.n_max())));
    }
    let h_c = model.basis.c_modes.max_cell_radius();
    let slack = if opts.discretization_tolerance { 2.0 * h_c } else { 0.0 };
    let full = model.hamiltonian(HamiltonianVariant::Full)?;
    let e = eigs_lowest(&full, 1, 1e-10, &ctx.solver)?.values[0];
    let g = model.g();
    let gd = ladder.g_dtilde;

    let mut r = CheckReport::new("gap_cascade", "spectral gap of the upper-sector Hamiltonians and convergence of their ground energies", slack);
    let mut held = true;
    let (mut worst_margin, mut d1) = (f64::INFINITY, 0.0f64);
    for &n in ns {
        let sigma = ladder.sigma(n)?;
        let (en, gap, tol_n) = upper_spectrum(model, n, ctx)?;
        let (en1, _, tol_n1) = upper_spectrum(model, n + 1, ctx)?;
        let gap_bound = ladder.gap_bound(n)?;
        let diff = (en - en1).abs();
        let conv_bound = gd / ladder.gamma * ladder.sigma(n + 1)?;
        let gap_ok = gap >= gap_bound - slack;
        let conv_ok = diff <= conv_bound + tol_n + tol_n1;
        held &= gap_ok && conv_ok;
        worst_margin = worst_margin.min(gap - gap_bound);
        let dev = (e - en).abs() / sigma;
        if g > 0.0 {
            d1 = d1.max(dev / g);
        }
        r.value(format!("gap_n{n}"), gap)
            .value(format!("gap_bound_n{n}"), gap_bound)
            .value(format!("energy_n{n}"), en)
            .value(format!("energy_step_n{n}"), diff)
            .value(format!("energy_step_bound_n{n}"), conv_bound)
            .value(format!("ground_deviation_over_sigma_n{n}"), dev);
    }
    r.value("ground_energy", e)
        .value("discretization_slack", slack)
        .value("strict_margin_min", worst_margin)
        .value("d1_fit", d1)
        .value("g", g)
        .flag("coupling_admissible", g <= model.constants.g_delta)
        .assert_all(held);
    Ok(r)
}

/// `f_n(H_sigma_n - E_n) = f_n(H^n - E^n) P^n (x) f_n(dGamma(|p|))` on the split space.
pub fn check_fn_factorization(
    model: &Model,
    n: usize,
    target: FactorizationTarget,
    ctx: &CheckContext,
) -> Result<CheckReport> {
    let ladder = &model.ladder;
    let sigma = ladder.sigma(n)?;
    let split = sector_split(&model.basis, sigma)?;

    let upper = model.hamiltonian(HamiltonianVariant::Upper { n })?;
    let up = dense_eigen(&upper)?;
    let mult = ground_multiplicity(&up.values);
    let e_up = up.values[0];
    let gap = up.values.get(mult).map_or(f64::INFINITY, |v| v - e_up);
    let gap_needed = (ladder.gamma + 2.0 * ladder.eps_gamma) * sigma;

    let variant = match target {
        FactorizationTarget::CutoffHamiltonian => HamiltonianVariant::InfraredCut { sigma },
        FactorizationTarget::FullHamiltonian => HamiltonianVariant::Full,
    };
    let h = model.hamiltonian(variant)?;
    if h.dim() > ctx.solver.dense_limit {
        return Err(Error::DimensionTooLarge { dim: h.dim(), limit: ctx.solver.dense_limit });
    }
    let eig = dense_eigen(&h)?;
    let e_n = eig.values[0];
    let f = |x: f64| ladder.f_n(x, n).unwrap_or(0.0);
    let lhs = LowRank::from_function(&eig, |l| f(l - e_n));

    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    let mut weights = Vec::new();
    for k in 0..mult {
        let psi = up.vector(k);
        for low in 0..split.low_dim() as u64 {
            let w = f(split.low_energy(low, &model.basis.c_modes));
            if w != 0.0 {
                cols.push(split.embed(&psi, low));
                weights.push(Complex64::new(w, 0.0));
            }
        }
    }
    let rhs = LowRank { y: faer::Mat::from_fn(h.dim(), cols.len(), |r, c| cols[c][r]), d: weights };
    let residual = lhs.minus(&rhs).norm()?;
    let energy_gap = (e_n - e_up).abs();
    let tol = 1e-10;

    let mut r = CheckReport::new(
        "factorization",
        "spectral function of the infrared-cut Hamiltonian factorizes over the upper and lower neutrino sectors",
        tol,
    );
    r.value("n", n as f64)
        .value("residual", residual)
        .value("energy_mismatch", energy_gap)
        .value("lhs_rank", lhs.rank() as f64)
        .value("rhs_rank", rhs.rank() as f64)
        .value("ground_multiplicity_upper", mult as f64)
        .value("upper_gap", gap)
        .value("upper_gap_needed", gap_needed)
        .flag("target_full_hamiltonian", target == FactorizationTarget::FullHamiltonian);
    if gap > gap_needed {
        r.assert_all(residual <= tol && energy_gap <= tol);
    }
    Ok(r)
}
