use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use super::{CheckContext, Model};
use crate::error::{Error, Result};
use crate::fock::{build_a_tau, build_commutator, build_hamiltonian, matrix_commutator, Caps, HamiltonianVariant, Ladder};
use crate::report::CheckReport;
use crate::scales::Species;
use crate::spectral::{dense_eigen, hermitian_eigen, DenseEigen, SpectralWindowProjection};

/// Relative error of the discrete commutator against its continuum form on a smooth one-neutrino vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyProbe {
    pub err_base: f64,
    pub err_refined: f64,
    pub ratio: f64,
}

/// `|(i[H, A_n] - [H, iA_n]) psi| / |[H, iA_n] psi|` on the base grid and on the refined grid.
pub fn commutator_consistency(model: &Model, n: usize) -> Result<ConsistencyProbe> {
    let sigma = model.ladder.sigma(n)?;
    let caps = Caps { neutrino: Some(2), ..model.basis.caps };
    let base = model.basis.c_modes.grid.clone();
    let mut errs = [0.0f64; 2];
    for (slot, grid) in [base.clone(), base.refine()].iter().enumerate() {
        let (basis, g1, g2) = model.on_neutrino_grid(grid, caps)?;
        let h = build_hamiltonian(&basis, &model.params, &g1, &g2, &model.ladder, HamiltonianVariant::Full)?;
        let (a, _) = build_a_tau(&basis, n, &model.ladder)?;
        let exact = matrix_commutator(&h, &a)?;
        let target = build_commutator(&basis, n, &model.params, &g1, &g2, &model.ladder)?;

        let vac = basis.encode(basis.b_index(0).unwrap_or(0), basis.c_index(0).unwrap_or(0), 0);
        let mut psi = vec![Complex64::new(0.0, 0.0); basis.dim()];
        let center = (0.2 * sigma).ln();
        for (j, m) in basis.c_modes.modes.iter().enumerate() {
            let amp = (-(m.abs.ln() - center).powi(2) / (2.0 * 0.45 * 0.45)).exp() * m.weight.sqrt();
            if let Some((idx, sign)) = basis.apply(Species::Neutrino, j, Ladder::Create, vac) {
                psi[idx] += Complex64::new(sign * amp, 0.0);
            }
        }
        let want = target.apply_vec(&psi);
        let got = exact.apply_vec(&psi);
        let num: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = want.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        errs[slot] = num / den;
    }
    Ok(ConsistencyProbe { err_base: errs[0], err_refined: errs[1], ratio: errs[0] / errs[1] })
}

fn mourre_report(model: &Model, n: usize, eig: &DenseEigen) -> Result<CheckReport> {
    let sigma = model.ladder.sigma(n)?;
    let e = eig.ground_energy();
    let w = model.ladder.window(n)?.shift(e);
    let proj = SpectralWindowProjection::from_eigen(eig, w.lo, w.hi, 1e-10 * (1.0 + e.abs()));
    let probe = commutator_consistency(model, n)?;

    let mut r = CheckReport::new(
        "mourre",
        "positive commutator of the Hamiltonian with the conjugate dilation on the spectral window",
        0.0,
    );
    r.value("n", n as f64)
        .value("sigma", sigma)
        .value("window_lo", w.lo)
        .value("window_hi", w.hi)
        .value("rank", proj.rank as f64)
        .flag("boundary_flag", proj.boundary_flag)
        .value("consistency_base", probe.err_base)
        .value("consistency_refined", probe.err_refined)
        .value("consistency_ratio", probe.ratio);
    if proj.rank == 0 {
        return Ok(r);
    }
    let c = build_commutator(&model.basis, n, &model.params, &model.g1, &model.g2, &model.ladder)?;
    let q = &proj.basis;
    let mut cq = Mat::<Complex64>::zeros(q.nrows(), q.ncols());
    let mut buf = vec![Complex64::new(0.0, 0.0); q.nrows()];
    for col in 0..q.ncols() {
        let x: Vec<Complex64> = q.col(col).iter().copied().collect();
        c.apply(&x, &mut buf);
        for (row, v) in buf.iter().enumerate() {
            cq[(row, col)] = *v;
        }
    }
    let m = q.adjoint() * &cq;
    let m = Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mu = hermitian_eigen(&m)?.0[0];
    r.value("mu", mu).value("mu_over_sigma", mu / sigma).assert_all(mu > 0.0 && probe.ratio >= 1.8);
    Ok(r)
}

/// Mourre estimate `P [H, iA_n] P >= mu P` on the window `Delta_n + E` of the full Hamiltonian.
pub fn check_mourre(model: &Model, n: usize, ctx: &CheckContext) -> Result<CheckReport> {
    let h = model.hamiltonian(HamiltonianVariant::Full)?;
    if h.dim() > ctx.solver.dense_limit {
        return Err(Error::DimensionTooLarge { dim: h.dim(), limit: ctx.solver.dense_limit });
    }
    mourre_report(model, n, &dense_eigen(&h)?)
}

/// Mourre estimates for several `n`, plus a report on the stability of `mu / sigma_n` across scales.
pub fn check_mourre_suite(model: &Model, ns: &[usize], ctx: &CheckContext) -> Result<Vec<CheckReport>> {
    let h = model.hamiltonian(HamiltonianVariant::Full)?;
    if h.dim() > ctx.solver.dense_limit {
        return Err(Error::DimensionTooLarge { dim: h.dim(), limit: ctx.solver.dense_limit });
    }
    let eig = dense_eigen(&h)?;
    let mut out = Vec::with_capacity(ns.len() + 1);
    for &n in ns {
        out.push(mourre_report(model, n, &eig)?);
    }
    let scaled: Vec<(usize, f64)> =
        out.iter().filter_map(|r| Some((r.get("n")? as usize, r.get("mu_over_sigma")?))).collect();
    let mut s = CheckReport::new("mourre_stability", "Mourre constant scales with sigma_n", 2.0);
    for &(n, v) in &scaled {
        s.value(format!("mu_over_sigma_n{n}"), v);
    }
    if scaled.len() >= 2 {
        let hi = scaled.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let lo = scaled.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let spread = hi / lo;
        s.value("spread", spread).assert_all(lo > 0.0 && spread <= 2.0);
    }
    out.push(s);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::ModelSpec;

    #[test]
    fn desk_mourre_is_positive_and_consistent() {
        let model = ModelSpec::desk1().build().unwrap();
        let reports = check_mourre_suite(&model, &[1, 2], &CheckContext::default()).unwrap();
        for r in &reports {
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn infrared_heavy_kernel_at_strong_coupling_loses_positivity() {
        let mut spec = ModelSpec::desk1();
        spec.kernel_g1 = "exp(-10 * |p2|) / |p2|".into();
        spec.kernel_g2 = spec.kernel_g1.clone();
        let model = spec.build().unwrap().with_g_fixed_ladder(1.5);
        let r = check_mourre(&model, 1, &CheckContext::default()).unwrap();
        assert!(r.failed(), "{r:?}");
        assert!(r.get("mu").unwrap() < 0.0);
    }
}
