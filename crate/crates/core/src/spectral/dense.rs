use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::SparseOperator;

fn linalg<E: std::fmt::Debug>(e: E) -> Error {
    Error::Linalg(format!("{e:?}"))
}

/// Eigen-decomposition of a real symmetric matrix; eigenvalues ascending.
pub fn real_symmetric_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    if m.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let e = m.self_adjoint_eigen(Side::Lower).map_err(linalg)?;
    let vals: Vec<f64> = e.S().column_vector().iter().copied().collect();
    Ok((vals, e.U().to_owned()))
}

/// Eigen-decomposition of a hermitian matrix; uses the real solver when the matrix is real.
pub fn hermitian_eigen(m: &Mat<Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    let (r, c) = (m.nrows(), m.ncols());
    let real = (0..c).all(|j| (0..r).all(|i| m[(i, j)].im == 0.0));
    if real {
        let re = Mat::from_fn(r, c, |i, j| m[(i, j)].re);
        let (vals, vecs) = real_symmetric_eigen(&re)?;
        return Ok((vals, Mat::from_fn(r, c, |i, j| Complex64::new(vecs[(i, j)], 0.0))));
    }
    if r == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let e = m.self_adjoint_eigen(Side::Lower).map_err(linalg)?;
    let vals: Vec<f64> = e.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, e.U().to_owned()))
}

/// Full eigen-decomposition of a materialized operator.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<Complex64>,
}

impl DenseEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.values[0]
    }

    /// Indices of eigenvalues in the closed interval.
    pub fn indices_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.values[i] >= lo && self.values[i] <= hi).collect()
    }

    /// Columns of the selected eigenvectors.
    pub fn columns(&self, idx: &[usize]) -> Mat<Complex64> {
        Mat::from_fn(self.dim(), idx.len(), |r, c| self.vectors[(r, idx[c])])
    }

    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.col(i).iter().copied().collect()
    }
}

pub fn dense_eigen(op: &SparseOperator) -> Result<DenseEigen> {
    let (values, vectors) = hermitian_eigen(&op.to_dense())?;
    Ok(DenseEigen { values, vectors })
}

/// Spectral norm of a hermitian matrix.
pub fn hermitian_norm(m: &Mat<Complex64>) -> Result<f64> {
    let (vals, _) = hermitian_eigen(m)?;
    Ok(vals.iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

/// Largest singular value of a general matrix.
pub fn spectral_norm(m: &Mat<Complex64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let s = m.singular_values().map_err(linalg)?;
    Ok(s.into_iter().fold(0.0, f64::max))
}

/// Triangular factor `R` with `Y^* Y = R^* R`, of size `min(n, r) x r`.
pub fn gram_factor(y: &Mat<Complex64>) -> Mat<Complex64> {
    if y.ncols() == 0 {
        return Mat::zeros(0, 0);
    }
    let qr = y.qr();
    if y.nrows() >= y.ncols() {
        qr.thin_R().to_owned()
    } else {
        qr.R().to_owned()
    }
}

/// `|| Y diag(d) Y^* ||` computed on the column space of `Y`.
pub fn low_rank_norm(y: &Mat<Complex64>, d: &[Complex64]) -> Result<f64> {
    assert_eq!(y.ncols(), d.len());
    if d.is_empty() {
        return Ok(0.0);
    }
    let r = gram_factor(y);
    let mut rd = r.clone();
    for (j, &dj) in d.iter().enumerate() {
        for i in 0..rd.nrows() {
            rd[(i, j)] *= dj;
        }
    }
    let core = &rd * r.adjoint();
    if d.iter().all(|z| z.im == 0.0) {
        let h = Mat::from_fn(core.nrows(), core.ncols(), |i, j| (core[(i, j)] + core[(j, i)].conj()) * 0.5);
        hermitian_norm(&h)
    } else {
        spectral_norm(&core)
    }
}
