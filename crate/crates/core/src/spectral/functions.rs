use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{BWeight, SparseOperator};

use super::dense::{dense_eigen, gram_factor, spectral_norm, DenseEigen};
use super::lanczos::{lanczos_lowest, residual, EigenSolution, Method, SolverOptions};

/// Relative width under which eigenvalues count as one cluster.
pub const CLUSTER_RTOL: f64 = 1e-8;

pub fn cluster_threshold(e: f64) -> f64 {
    CLUSTER_RTOL * (1.0 + e.abs())
}

/// Number of eigenvalues in the cluster starting at `values[0]`.
pub fn ground_multiplicity(values: &[f64]) -> usize {
    match values.first() {
        None => 0,
        Some(&e) => values.iter().take_while(|&&v| v - e <= cluster_threshold(e)).count(),
    }
}

/// Lowest `k` eigenpairs, dense below the limit and Lanczos above it.
pub fn eigs_lowest(m: &SparseOperator, k: usize, tol: f64, opts: &SolverOptions) -> Result<EigenSolution> {
    let n = m.dim();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must lie in 1..={n}")));
    }
    let method = opts.force.unwrap_or(if n <= opts.dense_limit { Method::Dense } else { Method::Lanczos });
    match method {
        Method::Lanczos => lanczos_lowest(m, k, tol, opts),
        Method::Dense => {
            if n > opts.dense_limit {
                return Err(Error::DimensionTooLarge { dim: n, limit: opts.dense_limit });
            }
            let eig = dense_eigen(m)?;
            let vectors = eig.columns(&(0..k).collect::<Vec<_>>());
            let residuals = (0..k)
                .map(|c| {
                    let v: Vec<Complex64> = vectors.col(c).iter().copied().collect();
                    residual(m, &v, eig.values[c])
                })
                .collect();
            Ok(EigenSolution { values: eig.values[..k].to_vec(), vectors, residuals, method, iterations: 0 })
        }
    }
}

/// Orthonormal basis of the spectral subspace for a closed interval.
#[derive(Debug, Clone)]
pub struct SpectralWindowProjection {
    pub lo: f64,
    pub hi: f64,
    pub rank: usize,
    pub values: Vec<f64>,
    pub basis: Mat<Complex64>,
    /// An eigenvalue sits within tolerance of a window edge.
    pub boundary_flag: bool,
}

impl SpectralWindowProjection {
    pub fn from_eigen(eig: &DenseEigen, lo: f64, hi: f64, tol: f64) -> Self {
        let idx = eig.indices_in(lo, hi);
        let boundary_flag = eig.values.iter().any(|&v| (v - lo).abs() <= tol || (v - hi).abs() <= tol);
        SpectralWindowProjection {
            lo,
            hi,
            rank: idx.len(),
            values: idx.iter().map(|&i| eig.values[i]).collect(),
            basis: eig.columns(&idx),
            boundary_flag,
        }
    }

    /// Dense projector `Q Q^*`.
    pub fn projector(&self) -> Mat<Complex64> {
        &self.basis * self.basis.adjoint()
    }
}

/// Spectral projection of `m` onto `[lo, hi]`.
pub fn spectral_projection(
    m: &SparseOperator,
    lo: f64,
    hi: f64,
    tol: f64,
    opts: &SolverOptions,
) -> Result<SpectralWindowProjection> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::param("interval", "bounds must be finite with lo <= hi"));
    }
    let n = m.dim();
    if n <= opts.dense_limit && opts.force != Some(Method::Lanczos) {
        return Ok(SpectralWindowProjection::from_eigen(&dense_eigen(m)?, lo, hi, tol));
    }
    let mut k = 8.min(n);
    loop {
        let sol = lanczos_lowest(m, k, tol, opts)?;
        if sol.values[k - 1] > hi + tol || k == n {
            let idx: Vec<usize> = (0..k).filter(|&i| sol.values[i] >= lo && sol.values[i] <= hi).collect();
            let boundary_flag = sol.values.iter().any(|&v| (v - lo).abs() <= tol || (v - hi).abs() <= tol);
            return Ok(SpectralWindowProjection {
                lo,
                hi,
                rank: idx.len(),
                values: idx.iter().map(|&i| sol.values[i]).collect(),
                basis: Mat::from_fn(n, idx.len(), |r, c| sol.vectors[(r, idx[c])]),
                boundary_flag,
            });
        }
        k = (2 * k).min(n);
    }
}

/// `Y diag(d) Y^*`, kept factored.
#[derive(Debug, Clone)]
pub struct LowRank {
    pub y: Mat<Complex64>,
    pub d: Vec<Complex64>,
}

impl LowRank {
    /// `f` applied to the decomposed operator, keeping only columns with `f != 0`.
    pub fn from_function(eig: &DenseEigen, f: impl Fn(f64) -> f64) -> Self {
        let idx: Vec<usize> = (0..eig.dim()).filter(|&i| f(eig.values[i]) != 0.0).collect();
        LowRank {
            y: eig.columns(&idx),
            d: idx.iter().map(|&i| Complex64::new(f(eig.values[i]), 0.0)).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let mut yd = self.y.clone();
        for (c, &dc) in self.d.iter().enumerate() {
            for r in 0..yd.nrows() {
                yd[(r, c)] *= dc;
            }
        }
        &yd * self.y.adjoint()
    }

    /// `self - other` as a single factored operator.
    pub fn minus(&self, other: &LowRank) -> LowRank {
        let n = self.y.nrows();
        let (a, b) = (self.rank(), other.rank());
        let y = Mat::from_fn(n, a + b, |r, c| if c < a { self.y[(r, c)] } else { other.y[(r, c - a)] });
        let d = self.d.iter().copied().chain(other.d.iter().map(|z| -z)).collect();
        LowRank { y, d }
    }

    /// Operator norm.
    pub fn norm(&self) -> Result<f64> {
        super::dense::low_rank_norm(&self.y, &self.d)
    }

    /// Norm of `diag(x) Y diag(d) Y^*`.
    pub fn left_weighted_norm(&self, x: &[f64]) -> Result<f64> {
        if self.rank() == 0 {
            return Ok(0.0);
        }
        let r = gram_factor(&self.y);
        let mut xyd = self.y.clone();
        for c in 0..xyd.ncols() {
            for row in 0..xyd.nrows() {
                xyd[(row, c)] *= self.d[c] * x[row];
            }
        }
        spectral_norm(&(&xyd * r.adjoint()))
    }
}

/// `f(M)` by spectral calculus, materialized as a sparse operator.
pub fn apply_function(m: &SparseOperator, f: impl Fn(f64) -> f64, dense_limit: usize) -> Result<SparseOperator> {
    let n = m.dim();
    if n > dense_limit {
        return Err(Error::DimensionTooLarge { dim: n, limit: dense_limit });
    }
    let eig = dense_eigen(m)?;
    let dense = LowRank::from_function(&eig, f).to_dense();
    let mut entries = Vec::new();
    for c in 0..n {
        for r in 0..n {
            let v = dense[(r, c)];
            if v != Complex64::new(0.0, 0.0) {
                entries.push((r, c, v));
            }
        }
    }
    SparseOperator::from_triplets(n, entries, true, format!("f({})", m.label))
}

/// `|| W^(-s) (M - lambda - i eps)^(-1) W^(-s) ||` with `W = B + 1`.
pub fn weighted_resolvent_norm(eig: &DenseEigen, weight: &BWeight, s: f64, lambda: f64, eps: f64) -> Result<f64> {
    if !(s > 0.5 && s < 1.0) {
        return Err(Error::param("s", "must lie in (1/2, 1)"));
    }
    if !(eps > 0.0) {
        return Err(Error::param("eps", "must be positive"));
    }
    let dist = eig
        .values
        .iter()
        .map(|&v| Complex64::new(v - lambda, -eps).norm())
        .fold(f64::INFINITY, f64::min);
    if dist < 1e-13 {
        return Err(Error::NearSpectrum { distance: dist });
    }
    let z = &weight.power(-s) * &eig.vectors;
    let d: Vec<Complex64> = eig.values.iter().map(|&v| Complex64::new(1.0, 0.0) / Complex64::new(v - lambda, -eps)).collect();
    super::dense::low_rank_norm(&z, &d)
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagationCurve {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Recurrence time `pi / (smallest level spacing)` bounding the fit window.
    pub recurrence_time: f64,
    pub slope: Option<f64>,
    pub slope_ci95: Option<f64>,
}

/// `|| (B+1)^(-s) e^(-itM) f(M) (B+1)^(-s) ||` on a time grid, with a log-log slope fit.
pub fn propagation_decay(
    eig: &DenseEigen,
    weight: &BWeight,
    f: impl Fn(f64) -> f64,
    s: f64,
    times: &[f64],
) -> Result<PropagationCurve> {
    let sel = LowRank::from_function(eig, &f);
    let energies: Vec<f64> = eig.values.iter().copied().filter(|&v| f(v) != 0.0).collect();
    let top = energies.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min_gap = energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > cluster_threshold(top))
        .fold(f64::INFINITY, f64::min);
    let recurrence_time = std::f64::consts::PI / min_gap;

    let wy = &weight.power(-s) * &sel.y;
    let r = gram_factor(&wy);
    let mut norms = Vec::with_capacity(times.len());
    for &t in times {
        let d: Vec<Complex64> = energies
            .iter()
            .zip(&sel.d)
            .map(|(&e, &fv)| fv * Complex64::from_polar(1.0, -t * e))
            .collect();
        let mut rd = r.clone();
        for (c, &dc) in d.iter().enumerate() {
            for row in 0..rd.nrows() {
                rd[(row, c)] *= dc;
            }
        }
        norms.push(if d.is_empty() { 0.0 } else { spectral_norm(&(&rd * r.adjoint()))? });
    }

    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(&norms)
        .filter(|(&t, &v)| t > 0.0 && t <= recurrence_time && v > 0.0)
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .collect();
    let (slope, slope_ci95) = match fit_line(&pts) {
        Some((b, se)) => (Some(b), se.map(|e| 1.96 * e)),
        None => (None, None),
    };
    Ok(PropagationCurve { times: times.to_vec(), norms, recurrence_time, slope, slope_ci95 })
}

/// Least-squares slope and its standard error.
pub(crate) fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, Option<f64>)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    if pts.len() < 3 {
        return Some((b, None));
    }
    let sse: f64 = pts.iter().map(|p| (p.1 - my - b * (p.0 - mx)).powi(2)).sum();
    Some((b, Some((sse / (n - 2.0) / sxx).sqrt())))
}
