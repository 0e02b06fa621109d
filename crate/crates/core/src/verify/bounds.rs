use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CheckContext, CheckId, Model};
use crate::error::Result;
use crate::fock::{build_h0, build_hi, HamiltonianVariant};
use crate::report::CheckReport;
use crate::scales::{dispersion, Species};
use crate::spectral::{cluster_threshold, eigs_lowest};

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Seeded complex Gaussian vector of unit norm.
pub(crate) fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let n = norm_sqr(&v).sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    v
}

pub(crate) fn vacuum_index(model: &Model) -> usize {
    let b = &model.basis;
    b.encode(b.b_index(0).unwrap_or(0), b.c_index(0).unwrap_or(0), 0)
}

/// `|H_I psi|^2 <= K^2 (C^2 |H0 psi|^2 + B^2 |psi|^2)` on random unit vectors and the vacuum.
pub fn check_relative_bound(model: &Model, samples: usize, ctx: &CheckContext) -> Result<CheckReport> {
    let basis = &model.basis;
    let h0 = build_h0(basis, &model.params);
    let hi = build_hi(basis, &model.g1, &model.g2)?;
    let k = model.constants.k;
    let (c2, b2) = (model.constants.c_be.powi(2), model.constants.b_be.powi(2));
    let k2 = k * k;

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed_for(CheckId::RelativeBound));
    let (mut violations, mut literal_violations) = (0usize, 0usize);
    let (mut worst, mut literal_worst) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let psi = random_unit(&mut rng, basis.dim());
        let lhs = norm_sqr(&hi.apply_vec(&psi));
        let free = norm_sqr(&h0.apply_vec(&psi));
        let rhs = k2 * (c2 * free + b2);
        let literal = k2 * c2 * free + b2 / 6.0;
        violations += usize::from(lhs > rhs);
        literal_violations += usize::from(lhs > literal);
        worst = worst.max(lhs / rhs);
        literal_worst = literal_worst.max(lhs / literal);
    }

    let mut omega = vec![Complex64::new(0.0, 0.0); basis.dim()];
    omega[vacuum_index(model)] = Complex64::new(1.0, 0.0);
    let vac_lhs = norm_sqr(&hi.apply_vec(&omega));
    let vac_ratio = vac_lhs / (k2 * b2);

    let mut r = CheckReport::new("relative_bound", "relative bound of the interaction by the free Hamiltonian", 0.0);
    r.value("samples", samples as f64)
        .value("violations", violations as f64)
        .value("worst_ratio", worst)
        .value("vacuum_ratio", vac_ratio)
        .value("literal_reading_violations", literal_violations as f64)
        .value("literal_reading_worst_ratio", literal_worst)
        .value("k", k)
        .value("c_squared", c2)
        .value("b_squared", b2)
        .assert_all(violations == 0 && vac_ratio <= 1.0);
    Ok(r)
}

/// Second-order estimate `-g^2 sum |G2|^2 / (w1 + w2 + w3)` of the ground-state energy.
pub fn perturbative_energy(model: &Model) -> f64 {
    let basis = &model.basis;
    let p = &model.params;
    let mut acc = 0.0;
    for (i, b) in basis.b_modes.modes.iter().enumerate() {
        for (j, c) in basis.c_modes.modes.iter().enumerate() {
            for (m, a) in basis.a_modes.modes.iter().enumerate() {
                let w = dispersion(Species::MassiveFermion, b.momentum, p)
                    + dispersion(Species::Neutrino, c.momentum, p)
                    + dispersion(Species::Boson, a.momentum, p);
                acc += model.g2.get(i, j, m).norm_sqr() / w;
            }
        }
    }
    -p.g * p.g * acc
}

/// Ground state of `H`: non-positive, bounded by `g K B / (1 - g1 K C)`, simple, and strictly negative when coupled.
pub fn check_ground_state(model: &Model, ctx: &CheckContext) -> Result<CheckReport> {
    let h = model.hamiltonian(HamiltonianVariant::Full)?;
    let k = 2.min(h.dim());
    let sol = eigs_lowest(&h, k, 1e-10, &ctx.solver)?;
    let e = sol.values[0];
    let noise = 64.0 * f64::EPSILON * (1.0 + h.max_abs() * (h.dim() as f64).sqrt());
    let c = &model.constants;
    let g = model.g();
    let bound = g * c.k * c.b_be / (1.0 - c.g1 * c.k * c.c_be);
    let split = if k > 1 { sol.values[1] - e } else { f64::INFINITY };

    let nonpositive = e <= noise;
    let bounded = e.abs() <= bound + noise;
    let simple = split > cluster_threshold(e);
    let coupled = g > 0.0 && model.g2.norm() > 0.0;
    let negative = !coupled || e < -noise;
    let e2 = perturbative_energy(model);

    let mut r = CheckReport::new("ground_state", "ground-state energy is non-positive, bounded and simple", noise);
    r.value("energy", e)
        .value("bound", bound)
        .value("splitting", split.min(f64::MAX))
        .value("perturbative_energy", e2)
        .value("energy_over_perturbative", if e2 != 0.0 { e / e2 } else { 0.0 })
        .value("g", g)
        .value("g1", c.g1)
        .value("max_residual", sol.max_residual())
        .flag("nonpositive", nonpositive)
        .flag("bounded", bounded)
        .flag("simple", simple)
        .flag("strictly_negative", negative);
    if g <= c.g1 {
        r.assert_all(nonpositive && bounded && simple && negative);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::ModelSpec;

    #[test]
    fn unit_vectors_are_normalized_and_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let (u, v) = (random_unit(&mut a, 17), random_unit(&mut b, 17));
        assert!((norm_sqr(&u) - 1.0).abs() < 1e-14);
        assert_eq!(u, v);
    }

    #[test]
    fn shrunken_k_breaks_the_relative_bound() {
        let model = ModelSpec::desk1().build().unwrap();
        let ctx = CheckContext::default();
        assert!(check_relative_bound(&model, 200, &ctx).unwrap().passed());
        let mut broken = model.clone();
        broken.constants.k *= 0.1;
        assert!(check_relative_bound(&broken, 200, &ctx).unwrap().failed());
    }

    #[test]
    fn shrunken_k_breaks_the_ground_state_bound() {
        let model = ModelSpec::desk1().build().unwrap();
        let ctx = CheckContext::default();
        let r = check_ground_state(&model, &ctx).unwrap();
        assert!(r.passed(), "{r:?}");
        let factor = r.get("energy").unwrap().abs() / (2.0 * r.get("bound").unwrap());
        let mut broken = model.clone();
        broken.constants.k *= factor;
        assert!(check_ground_state(&broken, &ctx).unwrap().failed());
    }
}
