use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{FockBasis, Ladder};
use super::sparse::SparseOperator;
use super::split::sector_split;
use crate::error::{Error, Result};
use crate::kernels::{Channel, DiscreteKernel, KernelGrids};
use crate::scales::{chi_tilde_sigma, dispersion, ModelParams, ScaleLadder, Species};

/// Which Hamiltonian to assemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HamiltonianVariant {
    /// `H = H0 + g H_I(G)`.
    Full,
    /// `H_sigma = H0 + g H_I(chi~^sigma G)` on the full space.
    InfraredCut { sigma: f64 },
    /// `H^n`: the infrared-cut Hamiltonian restricted to neutrino modes with `|p| >= sigma_n`.
    Upper { n: usize },
    /// `g H_I((chi~^{sigma_{n+1}} - chi~^{sigma_n}) G)`: the interaction added between scales `n` and `n + 1`.
    Band { n: usize },
}

/// Free energy of every basis state.
pub fn free_energies(basis: &FockBasis, params: &ModelParams) -> Vec<f64> {
    let w = |species: Species, set: &crate::scales::ModeSet| -> Vec<f64> {
        set.modes.iter().map(|m| dispersion(species, m.momentum, params)).collect()
    };
    let wb = w(Species::MassiveFermion, &basis.b_modes);
    let wc = w(Species::Neutrino, &basis.c_modes);
    let wa = w(Species::Boson, &basis.a_modes);
    let e_b: Vec<f64> = (0..basis.n_b_states()).map(|i| mask_energy(basis.b_state(i), &wb)).collect();
    let e_c: Vec<f64> = (0..basis.n_c_states()).map(|i| mask_energy(basis.c_state(i), &wc)).collect();
    let e_a: Vec<f64> = (0..basis.n_a_states())
        .map(|i| basis.a_state(i).iter().zip(&wa).map(|(&n, &e)| n as f64 * e).sum())
        .collect();
    (0..basis.dim())
        .map(|idx| {
            let (ib, ic, ia) = basis.decode(idx);
            e_b[ib] + e_c[ic] + e_a[ia]
        })
        .collect()
}

fn mask_energy(mask: u64, w: &[f64]) -> f64 {
    w.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, e)| e).sum()
}

/// Free Hamiltonian (diagonal).
pub fn build_h0(basis: &FockBasis, params: &ModelParams) -> SparseOperator {
    SparseOperator::diagonal(&free_energies(basis, params), "H0")
}

fn check_grids(basis: &FockBasis, k: &DiscreteKernel) -> Result<()> {
    let grids = KernelGrids {
        b: basis.b_modes.clone(),
        c: basis.c_modes.clone(),
        a: basis.a_modes.clone(),
    };
    if !grids.same_modes(&k.grids) {
        return Err(Error::GridMismatch(format!(
            "kernel dims {:?} do not match basis modes {:?}",
            k.dims(),
            grids.dims()
        )));
    }
    Ok(())
}

/// Interaction `H_I(G1, G2)` without the coupling constant.
pub fn build_hi(basis: &FockBasis, g1: &DiscreteKernel, g2: &DiscreteKernel) -> Result<SparseOperator> {
    for (k, want) in [(g1, Channel::Absorption), (g2, Channel::Emission)] {
        check_grids(basis, k)?;
        if k.channel != want {
            return Err(Error::param("kernel", format!("expected the {want:?} channel")));
        }
    }
    let [nb, nc, na] = g1.dims();
    let cols: Vec<Vec<(usize, usize, Complex64)>> = (0..basis.dim())
        .into_par_iter()
        .map(|col| {
            let mut out = Vec::new();
            for (kernel, boson) in [(g1, Ladder::Annihilate), (g2, Ladder::Create)] {
                for m in 0..na {
                    let Some((s1, f1)) = basis.apply(Species::Boson, m, boson, col) else { continue };
                    for j in 0..nc {
                        let Some((s2, f2)) = basis.apply(Species::Neutrino, j, Ladder::Create, s1) else {
                            continue;
                        };
                        for i in 0..nb {
                            let Some((row, f3)) = basis.apply(Species::MassiveFermion, i, Ladder::Create, s2)
                            else {
                                continue;
                            };
                            let v = kernel.get(i, j, m) * (f1 * f2 * f3);
                            if v != Complex64::new(0.0, 0.0) {
                                out.push((row, col, v));
                                out.push((col, row, v.conj()));
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    SparseOperator::from_triplets(basis.dim(), cols.into_iter().flatten().collect(), true, "H_I")
}

/// `chi~^sigma(p2) G`.
pub fn keep_high(kernel: &DiscreteKernel, sigma: f64) -> DiscreteKernel {
    kernel.map_neutrino(|m| chi_tilde_sigma(m.abs, sigma))
}

/// `(chi~^{sigma_{n+1}} - chi~^{sigma_n}) G`.
pub fn band_kernel(kernel: &DiscreteKernel, ladder: &ScaleLadder, n: usize) -> Result<DiscreteKernel> {
    let (lo, hi) = (ladder.sigma(n + 1)?, ladder.sigma(n)?);
    Ok(kernel.map_neutrino(|m| chi_tilde_sigma(m.abs, lo) - chi_tilde_sigma(m.abs, hi)))
}

/// Assemble `H0 + g H_I` in one of its cutoff variants.
///
/// `Upper` lives on the basis of [`super::SectorSplit::high`]; the other variants on `basis`.
pub fn build_hamiltonian(
    basis: &FockBasis,
    params: &ModelParams,
    g1: &DiscreteKernel,
    g2: &DiscreteKernel,
    ladder: &ScaleLadder,
    variant: HamiltonianVariant,
) -> Result<SparseOperator> {
    params.validate()?;
    let g = Complex64::new(params.g, 0.0);
    match variant {
        HamiltonianVariant::Full => {
            let h = build_h0(basis, params).add_scaled(&build_hi(basis, g1, g2)?, g)?;
            Ok(h.with_label("H"))
        }
        HamiltonianVariant::InfraredCut { sigma } => {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::param("sigma", "must be positive and finite"));
            }
            let hi = build_hi(basis, &keep_high(g1, sigma), &keep_high(g2, sigma))?;
            Ok(build_h0(basis, params).add_scaled(&hi, g)?.with_label(format!("H_sigma({sigma})")))
        }
        HamiltonianVariant::Upper { n } => {
            let split = sector_split(basis, ladder.sigma(n)?)?;
            let high = &split.high;
            let sigma = split.sigma;
            let k1 = keep_high(g1, sigma).restrict_neutrino(&split.high_modes, high.c_modes.clone())?;
            let k2 = keep_high(g2, sigma).restrict_neutrino(&split.high_modes, high.c_modes.clone())?;
            let hi = build_hi(high, &k1, &k2)?;
            Ok(build_h0(high, params).add_scaled(&hi, g)?.with_label(format!("H^{n}")))
        }
        HamiltonianVariant::Band { n } => {
            let hi = build_hi(basis, &band_kernel(g1, ladder, n)?, &band_kernel(g2, ladder, n)?)?;
            Ok(hi.scale(g).with_label(format!("H_I band {n}")))
        }
    }
}
