use num_complex::Complex64;

use super::{CheckContext, Model};
use crate::error::{Error, Result};
use crate::fock::{build_a_tau, build_commutator, ladder_operator, FockBasis, HamiltonianVariant, Ladder};
#[cfg(test)]
use crate::fock::Caps;
use crate::report::CheckReport;
use crate::scales::{dispersion, ModeSet, Species};
use crate::spectral::dense_eigen;
use crate::SparseOperator;

const EXACT: f64 = 1e-12;

/// Largest deviation of `op` from `delta * I`, over the columns accepted by `keep`.
fn deviation(op: &SparseOperator, delta: bool, keep: &dyn Fn(usize) -> bool) -> f64 {
    let mut worst = 0.0f64;
    for (r, c, v) in op.triplets() {
        if keep(c) {
            let target = if delta && r == c { 1.0 } else { 0.0 };
            worst = worst.max((v - Complex64::new(target, 0.0)).norm());
        }
    }
    if delta {
        for c in (0..op.dim()).filter(|&c| keep(c)) {
            worst = worst.max((op.get(c, c) - Complex64::new(1.0, 0.0)).norm());
        }
    }
    worst
}

struct LadderPair {
    species: Species,
    mode: usize,
    down: SparseOperator,
    up: SparseOperator,
}

fn ladders(basis: &FockBasis, species: Species) -> Result<Vec<LadderPair>> {
    (0..basis.mode_count(species))
        .map(|mode| {
            Ok(LadderPair {
                species,
                mode,
                down: ladder_operator(basis, species, mode, Ladder::Annihilate)?,
                up: ladder_operator(basis, species, mode, Ladder::Create)?,
            })
        })
        .collect()
}

/// Canonical (anti)commutation relations on `basis` and hermiticity of `operators`.
///
/// Relations involving a creation operator are tested on the columns where that creation is not cut by a cap.
pub fn check_algebra(basis: &FockBasis, operators: &[&SparseOperator]) -> Result<CheckReport> {
    let mut fermions = ladders(basis, Species::MassiveFermion)?;
    fermions.extend(ladders(basis, Species::Neutrino)?);
    let bosons = ladders(basis, Species::Boson)?;
    let all = |_: usize| true;

    let mut car = 0.0f64;
    for x in &fermions {
        for y in &fermions {
            car = car.max(deviation(&x.down.anticommutator(&y.down)?, false, &all));
            let same = x.species == y.species && x.mode == y.mode;
            let interior = |c: usize| basis.is_interior(c, y.species, y.mode);
            car = car.max(deviation(&x.down.anticommutator(&y.up)?, same, &interior));
        }
    }
    let mut ccr = 0.0f64;
    for x in &bosons {
        for y in &bosons {
            ccr = ccr.max(deviation(&x.down.commutator(&y.down)?, false, &all));
            let interior = |c: usize| basis.is_interior(c, y.species, y.mode);
            ccr = ccr.max(deviation(&x.down.commutator(&y.up)?, x.mode == y.mode, &interior));
        }
    }
    let mut mixed = 0.0f64;
    for a in &bosons {
        for f in &fermions {
            for (p, q) in [(&a.down, &f.down), (&a.down, &f.up), (&a.up, &f.down), (&a.up, &f.up)] {
                mixed = mixed.max(deviation(&p.commutator(q)?, false, &all));
            }
        }
    }
    let herm = operators.iter().map(|op| op.hermiticity_error()).fold(0.0, f64::max);

    let mut r = CheckReport::new("algebra", "canonical anticommutation and commutation relations; hermiticity", EXACT);
    r.value("car_residual", car)
        .value("ccr_residual", ccr)
        .value("mixed_residual", mixed)
        .value("hermiticity_error", herm)
        .value("operators_checked", operators.len() as f64)
        .value("dim", basis.dim() as f64)
        .assert_all(car <= EXACT && ccr <= EXACT && mixed <= EXACT && herm <= EXACT);
    Ok(r)
}

/// [`check_algebra`] on the model basis with `H`, `H_sigma1`, `H^1`, `A_1` and the commutator form.
pub fn check_algebra_model(model: &Model, _ctx: &CheckContext) -> Result<CheckReport> {
    let sigma1 = model.ladder.sigma(1)?;
    let mut ops = vec![
        model.hamiltonian(HamiltonianVariant::Full)?,
        model.hamiltonian(HamiltonianVariant::InfraredCut { sigma: sigma1 })?,
    ];
    let upper = match model.hamiltonian(HamiltonianVariant::Upper { n: 1 }) {
        Ok(h) => Some(h),
        Err(Error::SectorSplit(_)) => None,
        Err(e) => return Err(e),
    };
    let with_upper = upper.is_some();
    ops.extend(upper);
    let dilation = build_a_tau(&model.basis, 1, &model.ladder);
    let with_dilation = dilation.is_ok();
    if let Ok((a, _)) = dilation {
        ops.push(a);
        ops.push(build_commutator(&model.basis, 1, &model.params, &model.g1, &model.g2, &model.ladder)?);
    }
    let refs: Vec<&SparseOperator> = ops.iter().collect();
    let mut r = check_algebra(&model.basis, &refs)?;
    r.flag("dilation_checked", with_dilation).flag("upper_checked", with_upper);
    Ok(r)
}

fn fermion_sums(energies: &[f64], cap: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut frontier: Vec<(usize, usize, f64)> = vec![(0, 0, 0.0)];
    while let Some((next, count, sum)) = frontier.pop() {
        if count == cap {
            continue;
        }
        for (j, &e) in energies.iter().enumerate().skip(next) {
            out.push(sum + e);
            frontier.push((j + 1, count + 1, sum + e));
        }
    }
    out
}

fn boson_sums(energies: &[f64], per_mode: usize, total: usize) -> Vec<f64> {
    let mut out = Vec::new();
    fn walk(e: &[f64], per_mode: usize, left: usize, sum: f64, out: &mut Vec<f64>) {
        match e.split_first() {
            None => out.push(sum),
            Some((&first, rest)) => {
                for n in 0..=per_mode.min(left) {
                    walk(rest, per_mode, left - n, sum + n as f64 * first, out);
                }
            }
        }
    }
    walk(energies, per_mode, total, 0.0, &mut out);
    out
}

/// Free spectrum as the multiset of capped occupation sums of mode energies, sorted.
pub fn subset_sum_spectrum(model: &Model) -> Vec<f64> {
    let energies = |set: &ModeSet, s: Species| -> Vec<f64> {
        set.modes.iter().map(|m| dispersion(s, m.momentum, &model.params)).collect()
    };
    let basis = &model.basis;
    let caps = basis.caps;
    let eb = fermion_sums(&energies(&basis.b_modes, Species::MassiveFermion), caps.massive);
    let ec = fermion_sums(
        &energies(&basis.c_modes, Species::Neutrino),
        caps.neutrino.unwrap_or(basis.c_modes.len()),
    );
    let ea = boson_sums(&energies(&basis.a_modes, Species::Boson), caps.boson_per_mode, caps.boson_total);
    let mut all = Vec::with_capacity(eb.len() * ec.len() * ea.len());
    for b in &eb {
        for c in &ec {
            for a in &ea {
                all.push(b + c + a);
            }
        }
    }
    all.sort_by(f64::total_cmp);
    all
}

/// At zero coupling the spectrum of `H` is the subset-sum multiset of the mode energies.
pub fn check_free_spectrum(model: &Model, ctx: &CheckContext) -> Result<CheckReport> {
    let free = model.with_g_fixed_ladder(0.0);
    let h = free.hamiltonian(HamiltonianVariant::Full)?;
    if h.dim() > ctx.solver.dense_limit {
        return Err(Error::DimensionTooLarge { dim: h.dim(), limit: ctx.solver.dense_limit });
    }
    let eig = dense_eigen(&h)?;
    let oracle = subset_sum_spectrum(model);
    let tol = 1e-10;
    let worst = if oracle.len() == eig.values.len() {
        eig.values.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let mut r = CheckReport::new("free_spectrum", "free spectrum equals the sums of occupied mode energies", tol);
    r.value("dim", h.dim() as f64)
        .value("oracle_count", oracle.len() as f64)
        .value("max_abs_difference", worst)
        .value("ground_energy", eig.values[0])
        .assert_all(worst <= tol);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FermionSigns;
    use crate::verify::ModelSpec;

    #[test]
    fn desk_relations_and_free_spectrum_hold() {
        let model = ModelSpec::desk1().build().unwrap();
        let ctx = CheckContext::default();
        let r = check_algebra_model(&model, &ctx).unwrap();
        assert!(r.passed(), "{r:?}");
        let f = check_free_spectrum(&model, &ctx).unwrap();
        assert!(f.passed(), "{f:?}");
    }

    #[test]
    fn sector_local_signs_break_anticommutation() {
        let mut spec = ModelSpec::desk1();
        spec.signs = FermionSigns::SectorLocal;
        spec.caps.neutrino = Some(2);
        let r = check_algebra(&spec.build().unwrap().basis, &[]).unwrap();
        assert!(r.failed());
        assert!(r.get("car_residual").unwrap() > 0.5);
    }

    #[test]
    fn empty_caps_pass_vacuously() {
        let model = ModelSpec::desk1().build().unwrap();
        let caps = Caps { massive: 0, neutrino: Some(0), boson_total: 0, boson_per_mode: 0 };
        let (basis, _, _) = model.with_caps(caps).unwrap();
        assert_eq!(basis.dim(), 1);
        assert!(check_algebra(&basis, &[]).unwrap().passed());
    }

    #[test]
    fn fermion_sums_count_subsets() {
        let s = fermion_sums(&[1.0, 2.0, 4.0], 2);
        let mut s: Vec<i64> = s.iter().map(|v| *v as i64).collect();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn boson_sums_respect_caps() {
        let mut s: Vec<i64> = boson_sums(&[1.0, 10.0], 2, 2).iter().map(|v| *v as i64).collect();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 10, 11, 20]);
    }
}
