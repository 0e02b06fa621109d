use std::fmt::Write as _;
use std::io::{BufRead, Write};

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    /// Declared hermiticity; see [`SparseOperator::hermiticity_error`] for the measured one.
    pub hermitian: bool,
    pub label: String,
}

impl SparseOperator {
    /// Assemble from `(row, col, value)` entries; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(
        dim: usize,
        mut entries: Vec<(usize, usize, Complex64)>,
        hermitian: bool,
        label: impl Into<String>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::param("entry", format!("({r}, {c}) outside dimension {dim}")));
        }
        entries.par_sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().expect("nonempty") += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let keep: Vec<bool> = vals.iter().map(|v| *v != ZERO).collect();
        let mut k = 0;
        let (mut c2, mut v2) = (Vec::with_capacity(cols.len()), Vec::with_capacity(vals.len()));
        for i in 0..rows.len() {
            if keep[i] {
                row_ptr[rows[i] + 1] += 1;
                c2.push(cols[i]);
                v2.push(vals[i]);
                k += 1;
            }
        }
        debug_assert_eq!(k, c2.len());
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseOperator { dim, row_ptr, cols: c2, vals: v2, hermitian, label: label.into() })
    }

    pub fn zero(dim: usize, label: impl Into<String>) -> Self {
        SparseOperator {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hermitian: true,
            label: label.into(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim], "identity")
    }

    pub fn diagonal(values: &[f64], label: impl Into<String>) -> Self {
        let entries = values.iter().enumerate().map(|(i, &v)| (i, i, Complex64::new(v, 0.0))).collect();
        Self::from_triplets(values.len(), entries, true, label).expect("indices in range")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Entries of row `r` as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// `y = self * x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim];
        self.apply(x, &mut y);
        y
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |M_ij - conj(M_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.triplets().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> SparseOperator {
        let entries = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        SparseOperator::from_triplets(self.dim, entries, self.hermitian, format!("{}^*", self.label))
            .expect("same dimension")
    }

    pub fn scale(&self, factor: Complex64) -> SparseOperator {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= factor);
        if factor.im != 0.0 {
            out.hermitian = false;
        }
        out
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &SparseOperator, factor: Complex64) -> Result<SparseOperator> {
        self.check_dim(other)?;
        let entries = self.triplets().chain(other.triplets().map(|(r, c, v)| (r, c, factor * v))).collect();
        SparseOperator::from_triplets(
            self.dim,
            entries,
            self.hermitian && other.hermitian && factor.im == 0.0,
            self.label.clone(),
        )
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.add_scaled(other, Complex64::new(1.0, 0.0))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other)?;
        let rows: Vec<Vec<(usize, usize, Complex64)>> = (0..self.dim)
            .into_par_iter()
            .map(|r| {
                let mut acc: Vec<(usize, Complex64)> = Vec::new();
                for (k, a) in self.row(r) {
                    for (c, b) in other.row(k) {
                        acc.push((c, a * b));
                    }
                }
                acc.sort_unstable_by_key(|e| e.0);
                let mut out: Vec<(usize, usize, Complex64)> = Vec::new();
                for (c, v) in acc {
                    match out.last_mut() {
                        Some(last) if last.1 == c => last.2 += v,
                        _ => out.push((r, c, v)),
                    }
                }
                out
            })
            .collect();
        SparseOperator::from_triplets(
            self.dim,
            rows.into_iter().flatten().collect(),
            false,
            format!("{} {}", self.label, other.label),
        )
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &SparseOperator) -> Result<SparseOperator> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.add_scaled(&ba, Complex64::new(-1.0, 0.0))
    }

    /// Anticommutator `{self, other}`.
    pub fn anticommutator(&self, other: &SparseOperator) -> Result<SparseOperator> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.add(&ba)
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let mut m = Mat::<Complex64>::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Real part as a dense matrix; meaningful when [`SparseOperator::is_real`] holds.
    pub fn to_dense_real(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v.re;
        }
        m
    }

    /// Restrict to the rows and columns in `keep` (in that order).
    pub fn compress(&self, keep: &[usize]) -> SparseOperator {
        let mut pos = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            pos[old] = new;
        }
        let entries = keep
            .iter()
            .enumerate()
            .flat_map(|(nr, &r)| {
                let pos = &pos;
                self.row(r).filter_map(move |(c, v)| (pos[c] != usize::MAX).then(|| (nr, pos[c], v)))
            })
            .collect();
        SparseOperator::from_triplets(keep.len(), entries, self.hermitian, self.label.clone())
            .expect("indices in range")
    }

    fn check_dim(&self, other: &SparseOperator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::param(
                "operator",
                format!("dimension mismatch {} vs {}", self.dim, other.dim),
            ));
        }
        Ok(())
    }

    /// Serialize in the plain-text triplet format.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = String::with_capacity(64 + 48 * self.nnz());
        writeln!(buf, "dim {}", self.dim).expect("string write");
        writeln!(buf, "hermitian {}", u8::from(self.hermitian)).expect("string write");
        writeln!(buf, "label {}", self.label.replace('\n', " ")).expect("string write");
        for (r, c, v) in self.triplets() {
            writeln!(buf, "{r} {c} {:?} {:?}", v.re, v.im).expect("string write");
        }
        w.write_all(buf.as_bytes())?;
        Ok(())
    }

    /// Parse the plain-text triplet format.
    pub fn read_triplets<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut header = |key: &str| -> Result<String> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::Format { line: 0, message: format!("missing `{key}` header") })?;
            let line = line?;
            let rest = line.strip_prefix(key).ok_or_else(|| Error::Format {
                line: n + 1,
                message: format!("expected `{key}` header"),
            })?;
            Ok(rest.strip_prefix(' ').unwrap_or(rest).to_string())
        };
        let dim: usize = header("dim")?
            .trim()
            .parse()
            .map_err(|_| Error::Format { line: 1, message: "bad dimension".into() })?;
        let hermitian = match header("hermitian")?.trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            _ => return Err(Error::Format { line: 2, message: "bad hermitian flag".into() }),
        };
        let label = header("label")?;
        let mut entries = Vec::new();
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Format { line: n + 1, message: m.to_string() };
            let mut it = line.split_whitespace();
            let mut next = || it.next().ok_or_else(|| bad("expected `row col re im`"));
            let r: usize = next()?.parse().map_err(|_| bad("bad row"))?;
            let c: usize = next()?.parse().map_err(|_| bad("bad column"))?;
            let re: f64 = next()?.parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = next()?.parse().map_err(|_| bad("bad imaginary part"))?;
            if r >= dim || c >= dim {
                return Err(bad("index outside dimension"));
            }
            entries.push((r, c, Complex64::new(re, im)));
        }
        SparseOperator::from_triplets(dim, entries, hermitian, label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseOperator::from_triplets(2, vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 1.0))], false, "m")
            .unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 1.0));
        assert_eq!(m.get(1, 0), c(0.0, 0.0));
    }

    #[test]
    fn product_and_commutator() {
        let x = SparseOperator::from_triplets(2, vec![(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))], true, "x")
            .unwrap();
        let z = SparseOperator::diagonal(&[1.0, -1.0], "z");
        let xz = x.matmul(&z).unwrap();
        assert_eq!(xz.get(0, 1), c(-1.0, 0.0));
        let comm = x.commutator(&z).unwrap();
        assert_eq!(comm.get(0, 1), c(-2.0, 0.0));
        assert_eq!(comm.get(1, 0), c(2.0, 0.0));
        assert_eq!(x.anticommutator(&z).unwrap().nnz(), 0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SparseOperator::from_triplets(2, vec![(2, 0, c(1.0, 0.0))], false, "").is_err());
        let bad = "dim 2\nhermitian 1\nlabel x\n0 5 1 0\n";
        assert!(SparseOperator::read_triplets(bad.as_bytes()).is_err());
        assert!(SparseOperator::read_triplets("dim x\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn triplet_round_trip_is_bit_exact(
            entries in proptest::collection::vec((0usize..7, 0usize..7, any::<f64>(), any::<f64>()), 0..40),
            herm in any::<bool>(),
        ) {
            let entries: Vec<_> = entries
                .into_iter()
                .filter(|e| e.2.is_finite() && e.3.is_finite())
                .map(|(r, cc, a, b)| (r, cc, c(a, b)))
                .collect();
            let m = SparseOperator::from_triplets(7, entries, herm, "label with spaces").unwrap();
            let mut buf = Vec::new();
            m.write_triplets(&mut buf).unwrap();
            let back = SparseOperator::read_triplets(buf.as_slice()).unwrap();
            prop_assert_eq!(back.nnz(), m.nnz());
            for ((r1, c1, v1), (r2, c2, v2)) in m.triplets().zip(back.triplets()) {
                prop_assert_eq!((r1, c1), (r2, c2));
                prop_assert_eq!(v1.re.to_bits(), v2.re.to_bits());
                prop_assert_eq!(v1.im.to_bits(), v2.im.to_bits());
            }
            prop_assert_eq!(back.hermitian, herm);
            prop_assert_eq!(back.label, "label with spaces");
        }

        #[test]
        fn apply_matches_dense(vals in proptest::collection::vec(-5.0f64..5.0, 9), x in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let entries = (0..9).map(|k| (k / 3, k % 3, c(vals[k], 0.5 * vals[k]))).collect();
            let m = SparseOperator::from_triplets(3, entries, false, "m").unwrap();
            let xv: Vec<_> = x.iter().map(|&v| c(v, -v)).collect();
            let y = m.apply_vec(&xv);
            let d = m.to_dense();
            for r in 0..3 {
                let want: Complex64 = (0..3).map(|k| d[(r, k)] * xv[k]).sum();
                prop_assert!((want - y[r]).norm() < 1e-12);
            }
        }
    }
}
