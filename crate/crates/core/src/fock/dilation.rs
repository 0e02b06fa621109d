use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;

use super::basis::FockBasis;
use super::hamiltonian::build_hi;
use super::ops::second_quantize;
use super::sparse::SparseOperator;
use crate::error::{Error, Result};
use crate::kernels::DiscreteKernel;
use crate::scales::{GridSpec, ModeSet, ModelParams, ScaleLadder, Site, Species};
use crate::spectral::{hermitian_eigen, real_symmetric_eigen};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn require_radial(modes: &ModeSet) -> Result<()> {
    match modes.grid {
        GridSpec::LogRadial { .. } => Ok(()),
        GridSpec::Cartesian { .. } => {
            Err(Error::GridMismatch("the dilation generator needs a log-radial neutrino grid".into()))
        }
    }
}

/// Dilation generator `i (r d/dr + 3/2)` in orthonormal mode coordinates, hermitized.
pub fn dilation_generator(modes: &ModeSet) -> Result<Mat<Complex64>> {
    require_radial(modes)?;
    let n = modes.len();
    let sqrt_w: Vec<f64> = modes.modes.iter().map(|m| m.weight.sqrt()).collect();
    let u: Vec<f64> = modes.modes.iter().map(|m| m.abs.ln()).collect();
    let mut m = Mat::<Complex64>::zeros(n, n);
    for j in 0..n {
        let (down, up) = modes.radial_neighbours(j);
        let (lo, hi) = (down.unwrap_or(j), up.unwrap_or(j));
        if lo != hi {
            let du = u[hi] - u[lo];
            m[(j, hi)] += I * (sqrt_w[j] / sqrt_w[hi] / du);
            m[(j, lo)] -= I * (sqrt_w[j] / sqrt_w[lo] / du);
        }
        m[(j, j)] += I * 1.5;
    }
    Ok(Mat::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5))
}

/// `chi_n a0 chi_n` with `chi_n(p) = chi^(tau)(|p| / sigma_n)`.
pub fn one_particle_dilation(modes: &ModeSet, n: usize, ladder: &ScaleLadder) -> Result<Mat<Complex64>> {
    let a0 = dilation_generator(modes)?;
    let chi: Vec<f64> =
        modes.modes.iter().map(|m| ladder.chi_tau_n(m.abs, n)).collect::<Result<_>>()?;
    Ok(Mat::from_fn(a0.nrows(), a0.ncols(), |r, c| a0[(r, c)] * (chi[r] * chi[c])))
}

/// Conjugate generator `A_n = dGamma(a_n)` on the neutrino sector, with its one-particle matrix.
pub fn build_a_tau(
    basis: &FockBasis,
    n: usize,
    ladder: &ScaleLadder,
) -> Result<(SparseOperator, Mat<Complex64>)> {
    let a = one_particle_dilation(&basis.c_modes, n, ladder)?;
    let op = second_quantize(basis, Species::Neutrino, &a, format!("A_{n}"))?;
    let mut op = op;
    op.hermitian = true;
    Ok((op, a))
}

/// Continuum form of `[H, i A_n]`: `dGamma(chi_n^2 |p|) + g H_I(-i a_n G)`.
pub fn build_commutator(
    basis: &FockBasis,
    n: usize,
    params: &ModelParams,
    g1: &DiscreteKernel,
    g2: &DiscreteKernel,
    ladder: &ScaleLadder,
) -> Result<SparseOperator> {
    let a = one_particle_dilation(&basis.c_modes, n, ladder)?;
    let nc = basis.c_modes.len();
    let mut free = Mat::<Complex64>::zeros(nc, nc);
    for (j, m) in basis.c_modes.modes.iter().enumerate() {
        let chi = ladder.chi_tau_n(m.abs, n)?;
        free[(j, j)] = Complex64::new(chi * chi * m.abs, 0.0);
    }
    let free_part = second_quantize(basis, Species::Neutrino, &free, "dGamma(chi^2 |p|)")?;
    let t = |j: usize, l: usize| -I * a[(j, l)];
    let hi = build_hi(basis, &g1.apply_neutrino(&t), &g2.apply_neutrino(&t))?;
    let out = free_part.add_scaled(&hi, Complex64::new(params.g, 0.0))?;
    let mut out = out.with_label(format!("[H, iA_{n}]"));
    out.hermitian = true;
    Ok(out)
}

/// Matrix commutator `i (H A - A H)`.
pub fn matrix_commutator(h: &SparseOperator, a: &SparseOperator) -> Result<SparseOperator> {
    Ok(h.commutator(a)?.scale(I).with_label(format!("i[{}, {}]", h.label, a.label)))
}

/// Discrete `|b|^2 = -Laplacian` in momentum space, as a quadratic form in orthonormal mode coordinates.
pub fn position_laplacian(modes: &ModeSet) -> Mat<f64> {
    let n = modes.len();
    let mut lap = Mat::<f64>::zeros(n, n);
    let sqrt_w: Vec<f64> = modes.modes.iter().map(|m| m.weight.sqrt()).collect();
    let mut edge = |j: usize, l: usize, length: f64, measure: f64| {
        let (dj, dl) = (-1.0 / (length * sqrt_w[j]), 1.0 / (length * sqrt_w[l]));
        lap[(j, j)] += measure * dj * dj;
        lap[(l, l)] += measure * dl * dl;
        lap[(j, l)] += measure * dj * dl;
        lap[(l, j)] += measure * dj * dl;
    };
    match &modes.grid {
        GridSpec::LogRadial { angular_points, .. } => {
            for j in 0..n {
                if let (_, Some(l)) = modes.radial_neighbours(j) {
                    let (rj, rl) = (modes.modes[j].abs, modes.modes[l].abs);
                    let mid = 0.5 * (rj + rl);
                    let measure = 4.0 * PI * mid * mid * (rl - rj) / *angular_points as f64;
                    edge(j, l, rl - rj, measure);
                }
            }
        }
        GridSpec::Cartesian { lambda, points_per_axis } => {
            let h = 2.0 * lambda / *points_per_axis as f64;
            for j in 0..n {
                let Site::Lattice(sj) = modes.modes[j].site else { continue };
                for l in 0..n {
                    let Site::Lattice(sl) = modes.modes[l].site else { continue };
                    if modes.modes[l].internal != modes.modes[j].internal {
                        continue;
                    }
                    let step: Vec<usize> = (0..3).filter(|&k| sj[k] != sl[k]).collect();
                    if step.len() == 1 && sl[step[0]] == sj[step[0]] + 1 {
                        edge(j, l, h, h * h * h);
                    }
                }
            }
        }
    }
    lap
}

/// The total position weight `B = dGamma(<b>)` on the neutrino sector and its spectral data.
#[derive(Debug, Clone)]
pub struct BWeight {
    pub op: SparseOperator,
    /// `<b> = (1 + |b|^2)^(1/2)` on one neutrino.
    pub one_particle: Mat<f64>,
    pub s: f64,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
}

impl BWeight {
    /// Dense `(B + 1)^p`.
    pub fn power(&self, p: f64) -> Mat<Complex64> {
        let v = &self.eigenvectors;
        let d: Vec<f64> = self.eigenvalues.iter().map(|&l| (l + 1.0).powf(p)).collect();
        let n = v.nrows();
        let mut scaled = v.clone();
        for c in 0..n {
            for r in 0..n {
                scaled[(r, c)] *= d[c];
            }
        }
        let prod = &scaled * v.transpose();
        Mat::from_fn(n, n, |r, c| Complex64::new(prod[(r, c)], 0.0))
    }

    /// `(B + 1)^(-s)`.
    pub fn inverse_weight(&self) -> Mat<Complex64> {
        self.power(-self.s)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// Build `B` and the spectral data needed for `(B + 1)^(-s)`.
pub fn build_b_weight(basis: &FockBasis, s: f64) -> Result<BWeight> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param("s", "must lie in (0, 1]"));
    }
    let lap = position_laplacian(&basis.c_modes);
    let (vals, vecs) = real_symmetric_eigen(&lap)?;
    let n = lap.nrows();
    let one_particle = {
        let mut scaled = vecs.clone();
        for c in 0..n {
            let f = (1.0 + vals[c].max(0.0)).sqrt();
            for r in 0..n {
                scaled[(r, c)] *= f;
            }
        }
        &scaled * vecs.transpose()
    };
    let h = Mat::from_fn(n, n, |r, c| Complex64::new(one_particle[(r, c)], 0.0));
    let op = second_quantize(basis, Species::Neutrino, &h, "B")?;
    let (eigenvalues, cvecs) = hermitian_eigen(&op.to_dense())?;
    let eigenvectors = Mat::from_fn(cvecs.nrows(), cvecs.ncols(), |r, c| cvecs[(r, c)].re);
    let mut op = op;
    op.hermitian = true;
    Ok(BWeight { op, one_particle, s, eigenvalues, eigenvectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis::tests::{desk_caps, desk_modes};
    use crate::fock::basis::{enumerate_basis, FermionSigns};
    use crate::fock::ops::number_operator;
    use crate::scales::{build_mode_set, derive_ladder};

    fn ladder() -> ScaleLadder {
        derive_ladder(&ModelParams::new(1.0, 2.0, 0.5, 0.0, 1.0, 1.0).unwrap(), 4, 0.0).unwrap()
    }

    #[test]
    fn generator_is_hermitian_and_purely_imaginary() {
        let (_, c, _) = desk_modes();
        let a = dilation_generator(&c).unwrap();
        for r in 0..a.nrows() {
            for k in 0..a.ncols() {
                assert!((a[(r, k)] - a[(k, r)].conj()).norm() < 1e-15);
                assert_eq!(a[(r, k)].re, 0.0);
            }
        }
    }

    #[test]
    fn cutoff_generator_vanishes_above_scale() {
        let (_, c, _) = desk_modes();
        let l = ladder();
        let a = one_particle_dilation(&c, 1, &l).unwrap();
        for (j, m) in c.modes.iter().enumerate() {
            if m.abs >= l.sigma[1] {
                for k in 0..a.ncols() {
                    assert_eq!(a[(j, k)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn cartesian_grid_has_no_generator() {
        let g = GridSpec::Cartesian { lambda: 1.0, points_per_axis: 2 };
        let c = build_mode_set(Species::Neutrino, &g, 1).unwrap();
        assert!(matches!(dilation_generator(&c), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn single_mode_weight_is_number_operator() {
        let (b, c, a) = desk_modes();
        let one = std::sync::Arc::new(c.subset(&[3]));
        let basis = enumerate_basis(b, one, a, desk_caps(None), FermionSigns::JordanWigner, 10_000).unwrap();
        let w = build_b_weight(&basis, 0.75).unwrap();
        assert_eq!(w.one_particle[(0, 0)], 1.0);
        let n = number_operator(&basis, Species::Neutrino);
        assert!(w.op.add_scaled(&n, Complex64::new(-1.0, 0.0)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn weight_powers_invert() {
        let (b, c, a) = desk_modes();
        let basis = enumerate_basis(b, c, a, desk_caps(Some(2)), FermionSigns::JordanWigner, 10_000).unwrap();
        let w = build_b_weight(&basis, 0.6).unwrap();
        assert_eq!(w.op.get(0, 0).norm(), 0.0);
        let prod = &w.power(-0.6) * &w.power(0.6);
        for r in 0..prod.nrows() {
            for k in 0..prod.ncols() {
                let want = if r == k { 1.0 } else { 0.0 };
                assert!((prod[(r, k)] - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
        }
        assert!(build_b_weight(&basis, 0.0).is_err());
    }

    #[test]
    fn laplacian_annihilates_constants_in_physical_coordinates() {
        let (_, c, _) = desk_modes();
        let lap = position_laplacian(&c);
        let v: Vec<f64> = c.modes.iter().map(|m| m.weight.sqrt()).collect();
        for r in 0..lap.nrows() {
            let s: f64 = (0..lap.ncols()).map(|k| lap[(r, k)] * v[k]).sum();
            assert!(s.abs() < 1e-9, "{s}");
        }
    }
}
