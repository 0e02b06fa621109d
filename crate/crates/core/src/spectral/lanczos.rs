use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::SparseOperator;

use super::dense::{hermitian_eigen, real_symmetric_eigen};

/// A hermitian map applied to vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        SparseOperator::dim(self)
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        SparseOperator::apply(self, x, y)
    }
}

/// Dense hermitian matrix as an operator.
pub struct DenseOperator<'a>(pub &'a Mat<Complex64>);

impl LinearOperator for DenseOperator<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let m = self.0;
        y.fill(Complex64::new(0.0, 0.0));
        for (c, &xc) in x.iter().enumerate() {
            if xc == Complex64::new(0.0, 0.0) {
                continue;
            }
            let col = m.col(c);
            for (r, yr) in y.iter_mut().enumerate() {
                *yr += col[r] * xc;
            }
        }
    }
}

/// Operator given by a closure.
pub struct FnOperator<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[Complex64], &mut [Complex64]) + Sync> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub dense_limit: usize,
    pub force: Option<Method>,
    pub seed: u64,
    pub max_restarts: usize,
    pub krylov_dim: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { dense_limit: 3000, force: None, seed: 0x5eed, max_restarts: 200, krylov_dim: None }
    }
}

impl SolverOptions {
    pub fn lanczos(seed: u64) -> Self {
        SolverOptions { force: Some(Method::Lanczos), seed, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    /// Columns are eigenvectors.
    pub vectors: Mat<Complex64>,
    pub residuals: Vec<f64>,
    pub method: Method,
    pub iterations: usize,
}

impl EigenSolution {
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.col(i).iter().copied().collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, &r| a.max(r))
    }
}

pub(crate) fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(a: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn orthogonalize(v: &mut [Complex64], against: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for q in against {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect()
}

pub(crate) fn residual(op: &dyn LinearOperator, v: &[Complex64], theta: f64) -> f64 {
    let mut w = vec![Complex64::new(0.0, 0.0); v.len()];
    op.apply(v, &mut w);
    axpy(Complex64::new(-theta, 0.0), v, &mut w);
    norm(&w)
}

/// Lowest `k` eigenpairs by restarted Lanczos with locking.
pub fn lanczos_lowest(op: &dyn LinearOperator, k: usize, tol: f64, opts: &SolverOptions) -> Result<EigenSolution> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must lie in 1..={n}")));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<Complex64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut start = random_vector(&mut rng, n);
    let mut best_residual = f64::INFINITY;
    let mut iterations = 0;

    for _cycle in 0..opts.max_restarts {
        let avail = n - locked.len();
        if avail == 0 {
            break;
        }
        let m = opts.krylov_dim.unwrap_or_else(|| (4 * k).max(80)).min(avail).max(1);

        let mut q0 = start.clone();
        orthogonalize(&mut q0, &locked);
        let mut nq = norm(&q0);
        if nq < 1e-8 {
            q0 = random_vector(&mut rng, n);
            orthogonalize(&mut q0, &locked);
            nq = norm(&q0);
        }
        q0.iter_mut().for_each(|z| *z /= nq);

        let mut basis: Vec<Vec<Complex64>> = vec![q0];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut scale = 0.0f64;
        let mut exhausted = false;
        loop {
            let j = basis.len() - 1;
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            op.apply(&basis[j], &mut w);
            iterations += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            axpy(Complex64::new(-a, 0.0), &basis[j], &mut w);
            if j > 0 {
                axpy(Complex64::new(-beta[j - 1], 0.0), &basis[j - 1], &mut w);
            }
            orthogonalize(&mut w, &locked);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);
            scale = scale.max(a.abs()).max(b);
            if basis.len() == m {
                break;
            }
            if b <= 1e-12 * scale.max(1.0) {
                exhausted = true;
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|z| *z /= b);
            basis.push(w);
        }

        let len = basis.len();
        let t = Mat::from_fn(len, len, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let (theta, s) = real_symmetric_eigen(&t)?;
        let ritz: Vec<Vec<Complex64>> = (0..len)
            .map(|i| {
                let mut y = vec![Complex64::new(0.0, 0.0); n];
                for (jj, q) in basis.iter().enumerate() {
                    axpy(Complex64::new(s[(jj, i)], 0.0), q, &mut y);
                }
                let ny = norm(&y);
                y.iter_mut().for_each(|z| *z /= ny);
                y
            })
            .collect();

        let kth = if locked_vals.len() >= k {
            let mut sorted = locked_vals.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            Some(sorted[k - 1])
        } else {
            None
        };

        let mut newly = 0;
        let mut lowest_unconverged: Option<usize> = None;
        let mut above_kth = false;
        for i in 0..len {
            if let Some(kv) = kth {
                if theta[i] > kv + 1e-8 * (1.0 + kv.abs()) {
                    above_kth = true;
                    break;
                }
            }
            let r = residual(op, &ritz[i], theta[i]);
            if r > tol && !exhausted {
                best_residual = best_residual.min(r);
                lowest_unconverged = Some(i);
                break;
            }
            let mut v = ritz[i].clone();
            orthogonalize(&mut v, &locked);
            let nv = norm(&v);
            if nv < 0.5 {
                continue;
            }
            v.iter_mut().for_each(|z| *z /= nv);
            locked.push(v);
            locked_vals.push(theta[i]);
            newly += 1;
            if locked.len() == n {
                break;
            }
        }

        if locked.len() == n || (newly == 0 && above_kth) {
            return finish(op, locked, k, iterations);
        }
        start = match lowest_unconverged {
            Some(i) => ritz[i].clone(),
            None => random_vector(&mut rng, n),
        };
    }
    Err(Error::NonConvergence {
        requested: k,
        converged: locked.len().min(k),
        iterations,
        residual: best_residual,
    })
}

fn finish(op: &dyn LinearOperator, locked: Vec<Vec<Complex64>>, k: usize, iterations: usize) -> Result<EigenSolution> {
    let n = op.dim();
    let l = locked.len();
    let mut applied = Vec::with_capacity(l);
    for v in &locked {
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        op.apply(v, &mut w);
        applied.push(w);
    }
    let small = Mat::from_fn(l, l, |r, c| dot(&locked[r], &applied[c]));
    let small = Mat::from_fn(l, l, |r, c| (small[(r, c)] + small[(c, r)].conj()) * 0.5);
    let (vals, rot) = hermitian_eigen(&small)?;
    let vectors = Mat::from_fn(n, k, |r, c| (0..l).map(|j| locked[j][r] * rot[(j, c)]).sum());
    let residuals = (0..k)
        .map(|c| {
            let v: Vec<Complex64> = vectors.col(c).iter().copied().collect();
            residual(op, &v, vals[c])
        })
        .collect();
    Ok(EigenSolution { values: vals[..k].to_vec(), vectors, residuals, method: Method::Lanczos, iterations })
}

/// Largest eigenvalue of a hermitian operator.
///
/// Single-vector Lanczos with full reorthogonalization, thick-restarted from the top Ritz vector.
/// Returns once the true residual of the top Ritz pair is at most `tol`.
pub fn lanczos_largest(op: &dyn LinearOperator, tol: f64, seed: u64) -> Result<f64> {
    const KRYLOV: usize = 120;
    const RESTARTS: usize = 200;
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let n = op.dim();
    if n == 0 {
        return Err(Error::param("k", "operator has dimension 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = random_vector(&mut rng, n);
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..RESTARTS {
        let nq = norm(&start);
        let mut basis = vec![start.iter().map(|z| z / nq).collect::<Vec<_>>()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let m = KRYLOV.min(n);
        let top;
        loop {
            let j = basis.len() - 1;
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            op.apply(&basis[j], &mut w);
            iterations += 1;
            alpha.push(dot(&basis[j], &w).re);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);
            let len = basis.len();
            let exhausted = len == n || b <= 1e-14 * alpha.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            if len % 8 == 0 || len == m || exhausted {
                let t = Mat::from_fn(len, len, |r, c| match r.abs_diff(c) {
                    0 => alpha[r],
                    1 => beta[r.min(c)],
                    _ => 0.0,
                });
                let (theta, s) = real_symmetric_eigen(&t)?;
                let estimate = if exhausted { 0.0 } else { (b * s[(len - 1, len - 1)]).abs() };
                if estimate <= tol || len == m {
                    top = (theta[len - 1], s.col(len - 1).iter().copied().collect::<Vec<f64>>());
                    break;
                }
            }
            beta.push(b);
            w.iter_mut().for_each(|z| *z /= b);
            basis.push(w);
        }
        let (theta, coeffs) = top;
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for (c, q) in coeffs.iter().zip(&basis) {
            axpy(Complex64::new(*c, 0.0), q, &mut y);
        }
        let ny = norm(&y);
        y.iter_mut().for_each(|z| *z /= ny);
        let r = residual(op, &y, theta);
        if r <= tol {
            return Ok(theta);
        }
        best = best.min(r);
        start = y;
    }
    Err(Error::NonConvergence { requested: 1, converged: 0, iterations, residual: best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(n: usize) -> SparseOperator {
        SparseOperator::diagonal(&(1..=n).map(|i| i as f64).collect::<Vec<_>>(), "d")
    }

    #[test]
    fn diagonal_spectrum_exact() {
        let sol = lanczos_lowest(&diag(200), 6, 1e-10, &SolverOptions::default()).unwrap();
        for (i, v) in sol.values.iter().enumerate() {
            assert!((v - (i + 1) as f64).abs() < 1e-10);
        }
        assert!(sol.max_residual() <= 1e-10);
    }

    #[test]
    fn degenerate_values_all_found() {
        let vals: Vec<f64> = (0..150).map(|i| (i / 3) as f64).collect();
        let op = SparseOperator::diagonal(&vals, "d");
        let sol = lanczos_lowest(&op, 7, 1e-10, &SolverOptions::default()).unwrap();
        assert_eq!(
            sol.values.iter().map(|v| v.round() as i64).collect::<Vec<_>>(),
            vec![0, 0, 0, 1, 1, 1, 2]
        );
    }

    #[test]
    fn small_space_is_exhausted() {
        let sol = lanczos_lowest(&diag(5), 5, 1e-12, &SolverOptions::default()).unwrap();
        assert!((sol.values[4] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn largest_of_diagonal() {
        assert!((lanczos_largest(&diag(300), 1e-10, 3).unwrap() - 300.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = lanczos_lowest(&diag(120), 3, 1e-10, &SolverOptions::default()).unwrap();
        let b = lanczos_lowest(&diag(120), 3, 1e-10, &SolverOptions::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.iterations, b.iterations);
    }
}
