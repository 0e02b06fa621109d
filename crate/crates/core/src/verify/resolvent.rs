use faer::{Col, Mat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CheckContext, CheckId, Model};
use crate::error::{Error, Result};
use crate::fock::HamiltonianVariant;
use crate::report::CheckReport;
use crate::scales::ScaleLadder;
use crate::spectral::{dense_eigen, lanczos_largest, DenseEigen, FnOperator, LowRank};

/// Spectral parameters with real part in the support of `f` (in units of `sigma_n`) and `0.05 <= |Im z| <= 1`.
pub fn sample_z(rng: &mut ChaCha8Rng, ladder: &ScaleLadder, count: usize) -> Vec<Complex64> {
    let (g, e) = (ladder.gamma, ladder.eps_gamma);
    let (lo, hi) = ((g - 2.0 * e) * (g - 2.0 * e), g + 2.0 * e);
    (0..count)
        .map(|_| {
            let re = rng.random_range(lo..=hi);
            let im = rng.random_range(0.05..=1.0);
            Complex64::new(re, if rng.random_bool(0.5) { im } else { -im })
        })
        .collect()
}

/// Diagonal of `dGamma(chi_n^2 |p|)` in the Fock basis.
pub(crate) fn infrared_weight(model: &Model, n: usize) -> Result<Vec<f64>> {
    let modes = &model.basis.c_modes.modes;
    let one: Vec<f64> =
        modes.iter().map(|m| Ok(model.ladder.chi_tau_n(m.abs, n)?.powi(2) * m.abs)).collect::<Result<_>>()?;
    Ok((0..model.basis.dim())
        .map(|idx| {
            let (_, ic, _) = model.basis.decode(idx);
            let mask = model.basis.c_state(ic);
            one.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, v)| v).sum()
        })
        .collect())
}

/// `(|X (H - shift - z sigma)^(-1)|, 1 + |z| / |Im z|)` for each `z`, with `X = diag(x)` and `H` given by `eig`.
pub fn resolvent_bound_violations(
    eig: &DenseEigen,
    x: &[f64],
    shift: f64,
    sigma: f64,
    zs: &[Complex64],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let n = eig.dim();
    if x.len() != n {
        return Err(Error::param("x", "weight length must match the dimension"));
    }
    let v = &eig.vectors;
    let y = Mat::from_fn(n, n, |r, c| v[(r, c)] * x[r]);
    let gram = y.adjoint() * &y;
    zs.iter()
        .map(|&z| {
            if z.im == 0.0 {
                return Err(Error::NearSpectrum { distance: 0.0 });
            }
            let d: Vec<Complex64> =
                eig.values.iter().map(|&l| 1.0 / (Complex64::new(l - shift, 0.0) - z * sigma)).collect();
            let op = FnOperator {
                dim: n,
                f: |u: &[Complex64], out: &mut [Complex64]| {
                    let w = Col::from_fn(n, |i| u[i] * d[i]);
                    let gw = &gram * &w;
                    for (i, (o, dr)) in out.iter_mut().zip(&d).enumerate() {
                        *o = gw[i] * dr.conj();
                    }
                },
            };
            let bound = 1.0 + z.norm() / z.im.abs();
            let top = lanczos_largest(&op, 1e-9 * bound * bound, seed)?;
            Ok((top.max(0.0).sqrt(), bound))
        })
        .collect()
}

struct Sweep {
    r6: f64,
    r7: f64,
    energy: f64,
}

fn fn_difference(model: &Model, n: usize, x: &[f64], hn: &DenseEigen) -> Result<Sweep> {
    let sigma = model.ladder.sigma(n)?;
    let h = dense_eigen(&model.hamiltonian(HamiltonianVariant::Full)?)?;
    let f = |l: f64| model.ladder.f_n(l, n).unwrap_or(0.0);
    let (e, en) = (h.ground_energy(), hn.ground_energy());
    let d = LowRank::from_function(hn, |l| f(l - en)).minus(&LowRank::from_function(&h, |l| f(l - e)));
    let g = model.g();
    Ok(Sweep { r6: d.norm()? / g, r7: d.left_weighted_norm(x)? / (g * sigma), energy: e })
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Weighted resolvent bound `|X (H_n - E_n - z sigma_n)^(-1)| <= 1 + |z| / |Im z|` and the `O(g)` scaling of
/// `f_n(H_n - E_n) - f_n(H - E)`.
pub fn check_resolvent_and_fn_bounds(
    model: &Model,
    n: usize,
    z_samples: usize,
    ctx: &CheckContext,
) -> Result<CheckReport> {
    let sigma = model.ladder.sigma(n)?;
    let hn_op = model.hamiltonian(HamiltonianVariant::InfraredCut { sigma })?;
    if hn_op.dim() > ctx.solver.dense_limit {
        return Err(Error::DimensionTooLarge { dim: hn_op.dim(), limit: ctx.solver.dense_limit });
    }
    let hn = dense_eigen(&hn_op)?;
    let x = infrared_weight(model, n)?;
    let seed = ctx.seed_for(CheckId::Resolvent);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zs = vec![Complex64::new(0.0, 1.0)];
    zs.extend(sample_z(&mut rng, &model.ladder, z_samples));
    let pairs = resolvent_bound_violations(&hn, &x, hn.ground_energy(), sigma, &zs, seed)?;
    let slack = 1e-9;
    let violations = pairs.iter().filter(|(v, b)| *v > b * (1.0 + slack)).count();
    let worst = pairs.iter().map(|(v, b)| v / b).fold(0.0, f64::max);

    let mut r = CheckReport::new(
        "resolvent",
        "weighted resolvent bound for the infrared-cut Hamiltonian and O(g) closeness of cutoff spectral functions",
        1.5,
    );
    r.value("n", n as f64)
        .value("z_samples", z_samples as f64)
        .value("resolvent_violations", violations as f64)
        .value("resolvent_worst_ratio", worst)
        .value("resolvent_at_i", pairs[0].0)
        .value("resolvent_bound_at_i", pairs[0].1);

    let g0 = model.g();
    if g0 <= 0.0 {
        r.flag("sweep_skipped", true).assert_all(violations == 0);
        return Ok(r);
    }
    let mut sweep = Vec::new();
    for (k, g) in [g0, g0 / 2.0, g0 / 4.0].into_iter().enumerate() {
        let s = if k == 0 {
            fn_difference(model, n, &x, &hn)?
        } else {
            let m = model.with_g(g)?;
            let hn_g = dense_eigen(&m.hamiltonian(HamiltonianVariant::InfraredCut { sigma })?)?;
            fn_difference(&m, n, &x, &hn_g)?
        };
        r.value(format!("fn_difference_over_g_{k}"), s.r6)
            .value(format!("weighted_fn_difference_over_g_sigma_{k}"), s.r7)
            .value(format!("ground_energy_{k}"), s.energy);
        sweep.push(s);
    }
    let s6 = spread(&sweep.iter().map(|s| s.r6).collect::<Vec<_>>());
    let s7 = spread(&sweep.iter().map(|s| s.r7).collect::<Vec<_>>());
    let monotone = sweep.windows(2).all(|w| w[0].energy <= w[1].energy);
    r.value("fn_difference_spread", s6)
        .value("weighted_fn_difference_spread", s7)
        .flag("energy_non_increasing_in_g", monotone)
        .assert_all(violations == 0 && s6 <= 1.5 && s7 <= 1.5 && monotone);
    Ok(r)
}
