use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{FockBasis, Ladder};
use super::sparse::SparseOperator;
use crate::error::{Error, Result};
use crate::scales::Species;

fn check_mode(basis: &FockBasis, species: Species, mode: usize) -> Result<()> {
    let count = basis.mode_count(species);
    if mode >= count {
        return Err(Error::ModeOutOfRange { species: species.name(), index: mode, count });
    }
    Ok(())
}

/// Matrix of a single creation or annihilation operator on the truncated space.
pub fn ladder_operator(basis: &FockBasis, species: Species, mode: usize, dir: Ladder) -> Result<SparseOperator> {
    check_mode(basis, species, mode)?;
    let entries = (0..basis.dim())
        .filter_map(|col| {
            basis.apply(species, mode, dir, col).map(|(row, amp)| (row, col, Complex64::new(amp, 0.0)))
        })
        .collect();
    let tag = match (species, dir) {
        (Species::MassiveFermion, Ladder::Create) => "b*",
        (Species::MassiveFermion, Ladder::Annihilate) => "b",
        (Species::Neutrino, Ladder::Create) => "c*",
        (Species::Neutrino, Ladder::Annihilate) => "c",
        (Species::Boson, Ladder::Create) => "a*",
        (Species::Boson, Ladder::Annihilate) => "a",
    };
    SparseOperator::from_triplets(basis.dim(), entries, false, format!("{tag}[{mode}]"))
}

/// Total particle number of one species.
pub fn number_operator(basis: &FockBasis, species: Species) -> SparseOperator {
    let d: Vec<f64> = (0..basis.dim()).map(|i| basis.occupation(i, species) as f64).collect();
    SparseOperator::diagonal(&d, format!("N[{}]", species.name()))
}

/// Second quantization `dGamma(h) = sum_{jl} h_jl x*_j x_l` of a one-particle matrix.
pub fn second_quantize(
    basis: &FockBasis,
    species: Species,
    h: &Mat<Complex64>,
    label: impl Into<String>,
) -> Result<SparseOperator> {
    let n = basis.mode_count(species);
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::GridMismatch(format!(
            "one-particle matrix is {}x{}, species has {n} modes",
            h.nrows(),
            h.ncols()
        )));
    }
    let mut hermitian = true;
    for j in 0..n {
        for l in 0..n {
            if (h[(j, l)] - h[(l, j)].conj()).norm() > 1e-14 * (1.0 + h[(j, l)].norm()) {
                hermitian = false;
            }
        }
    }
    let cols: Vec<Vec<(usize, usize, Complex64)>> = (0..basis.dim())
        .into_par_iter()
        .map(|col| {
            let mut out = Vec::new();
            for l in 0..n {
                let Some((mid, s1)) = basis.apply(species, l, Ladder::Annihilate, col) else {
                    continue;
                };
                for j in 0..n {
                    let v = h[(j, l)];
                    if v == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    if let Some((row, s2)) = basis.apply(species, j, Ladder::Create, mid) {
                        out.push((row, col, v * (s1 * s2)));
                    }
                }
            }
            out
        })
        .collect();
    SparseOperator::from_triplets(basis.dim(), cols.into_iter().flatten().collect(), hermitian, label)
}
