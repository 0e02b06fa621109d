//! Coupling kernels: the expression language, discretization on mode grids,
//! kernel norms, the infrared hypotheses and the derived coupling constants.

mod constants;
mod expr;
mod hypotheses;

pub use constants::{derive_constants, BoundConstants};
pub use expr::{parse_kernel, KernelExpr, KernelPoint, Momentum, Var};
pub use hypotheses::{check_hypotheses, HypothesisSummary, IrProfile};

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scales::{Mode, ModeSet, Species};

/// The three mode sets a kernel lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrids {
    pub b: Arc<ModeSet>,
    pub c: Arc<ModeSet>,
    pub a: Arc<ModeSet>,
}

impl KernelGrids {
    pub fn new(b: Arc<ModeSet>, c: Arc<ModeSet>, a: Arc<ModeSet>) -> Result<Self> {
        for (set, want) in [
            (&b, Species::MassiveFermion),
            (&c, Species::Neutrino),
            (&a, Species::Boson),
        ] {
            if set.species != want {
                return Err(Error::GridMismatch(format!(
                    "expected {} modes, got {}",
                    want.name(),
                    set.species.name()
                )));
            }
        }
        Ok(KernelGrids { b, c, a })
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.b.len(), self.c.len(), self.a.len()]
    }

    pub(crate) fn same_modes(&self, other: &KernelGrids) -> bool {
        self.b.modes == other.b.modes && self.c.modes == other.c.modes && self.a.modes == other.a.modes
    }
}

/// Which interaction term a kernel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Channel {
    /// `b* c* a + h.c.`
    Absorption,
    /// `b* c* a* + h.c.`
    Emission,
}

impl Channel {
    pub fn from_alpha(alpha: u8) -> Result<Self> {
        match alpha {
            1 => Ok(Channel::Absorption),
            2 => Ok(Channel::Emission),
            _ => Err(Error::param("alpha", "must be 1 or 2")),
        }
    }

    pub fn alpha(self) -> u8 {
        match self {
            Channel::Absorption => 1,
            Channel::Emission => 2,
        }
    }
}

/// Kernel sampled on a product grid, with quadrature weights absorbed:
/// `amp[i, j, m] = G(xi_i, xi_j, xi_m) * sqrt(w_i w_j w_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    pub channel: Channel,
    pub grids: KernelGrids,
    amplitudes: Vec<Complex64>,
    pub provenance: String,
}

impl DiscreteKernel {
    pub fn zeros(channel: Channel, grids: KernelGrids) -> Self {
        let [nb, nc, na] = grids.dims();
        DiscreteKernel {
            channel,
            grids,
            amplitudes: vec![Complex64::new(0.0, 0.0); nb * nc * na],
            provenance: "zero".into(),
        }
    }

    /// Kernel whose amplitudes are given directly by `f(i, j, m)`.
    pub fn from_amplitudes(
        channel: Channel,
        grids: KernelGrids,
        provenance: impl Into<String>,
        f: impl Fn(usize, usize, usize) -> Complex64,
    ) -> Result<Self> {
        let [nb, nc, na] = grids.dims();
        let mut amplitudes = Vec::with_capacity(nb * nc * na);
        for i in 0..nb {
            for j in 0..nc {
                for m in 0..na {
                    let v = f(i, j, m);
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::NonFiniteKernel { b: i, c: j, a: m });
                    }
                    amplitudes.push(v);
                }
            }
        }
        Ok(DiscreteKernel { channel, grids, amplitudes, provenance: provenance.into() })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grids.dims()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, m: usize) -> Complex64 {
        let [_, nc, na] = self.dims();
        self.amplitudes[(i * nc + j) * na + m]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Discrete `L^2` norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|z| *z *= factor);
        out
    }

    /// Multiply by a function of the neutrino mode.
    pub fn map_neutrino(&self, f: impl Fn(&Mode) -> f64) -> Self {
        let [nb, nc, na] = self.dims();
        let factors: Vec<f64> = self.grids.c.modes.iter().map(f).collect();
        let mut out = self.clone();
        for i in 0..nb {
            for (j, &fj) in factors.iter().enumerate() {
                for m in 0..na {
                    out.amplitudes[(i * nc + j) * na + m] *= fj;
                }
            }
        }
        out
    }

    /// Restrict the neutrino index to `indices` of the current grid, now described by `c`.
    pub fn restrict_neutrino(&self, indices: &[usize], c: Arc<ModeSet>) -> Result<Self> {
        if c.len() != indices.len() {
            return Err(Error::GridMismatch("restricted neutrino set has the wrong size".into()));
        }
        let grids = KernelGrids::new(self.grids.b.clone(), c, self.grids.a.clone())?;
        let src = self;
        DiscreteKernel::from_amplitudes(self.channel, grids, self.provenance.clone(), |i, j, m| {
            src.get(i, indices[j], m)
        })
    }

    /// Norm of the kernel restricted to `|p2| <= sigma`.
    pub fn ir_norm(&self, sigma: f64) -> f64 {
        self.map_neutrino(|m| if m.abs <= sigma { 1.0 } else { 0.0 }).norm()
    }

    /// Apply a one-particle operator `t` (given by rows) on the neutrino index: `G'_j = sum_l t[j][l] G_l`.
    pub fn apply_neutrino(&self, t: &dyn Fn(usize, usize) -> Complex64) -> Self {
        let [nb, nc, na] = self.dims();
        let mut out = self.clone();
        for i in 0..nb {
            for j in 0..nc {
                for m in 0..na {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for l in 0..nc {
                        let tj = t(j, l);
                        if tj != Complex64::new(0.0, 0.0) {
                            acc += tj * self.get(i, l, m);
                        }
                    }
                    out.amplitudes[(i * nc + j) * na + m] = acc;
                }
            }
        }
        out
    }
}

/// Sampling point for the kernel at grid indices `(i, j, m)`.
pub fn kernel_point(grids: &KernelGrids, i: usize, j: usize, m: usize) -> KernelPoint {
    let (b, c, a) = (&grids.b.modes[i], &grids.c.modes[j], &grids.a.modes[m]);
    KernelPoint {
        p1: b.momentum,
        p2: c.momentum,
        k: a.momentum,
        s1: b.internal_value,
        s2: c.internal_value,
        lam: a.internal_value,
    }
}

/// Sample `expr` on the product grid.
pub fn discretize_kernel(
    expr: &KernelExpr,
    channel: Channel,
    grids: &KernelGrids,
    scale: f64,
) -> Result<DiscreteKernel> {
    if !scale.is_finite() {
        return Err(Error::param("scale", "must be finite"));
    }
    DiscreteKernel::from_amplitudes(channel, grids.clone(), expr.to_string(), |i, j, m| {
        let w = (grids.b.modes[i].weight * grids.c.modes[j].weight * grids.a.modes[m].weight).sqrt();
        Complex64::new(scale * expr.eval(&kernel_point(grids, i, j, m)) * w, 0.0)
    })
}

/// Kernel expressions together with the common scale applied on discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSource {
    pub g1: KernelExpr,
    pub g2: KernelExpr,
    pub scale: f64,
}

impl KernelSource {
    pub fn discretize(&self, grids: &KernelGrids) -> Result<(DiscreteKernel, DiscreteKernel)> {
        Ok((
            discretize_kernel(&self.g1, Channel::Absorption, grids, self.scale)?,
            discretize_kernel(&self.g2, Channel::Emission, grids, self.scale)?,
        ))
    }

    /// Source rescaled so that the discretized pair on `grids` has `K = target`.
    pub fn normalized(g1: KernelExpr, g2: KernelExpr, grids: &KernelGrids, target: f64) -> Result<Self> {
        let unit = KernelSource { g1, g2, scale: 1.0 };
        let (a, b) = unit.discretize(grids)?;
        let k = coupling_norm(&a, &b);
        if k == 0.0 {
            return Err(Error::param("kernel", "cannot normalize a vanishing kernel"));
        }
        Ok(KernelSource { scale: target / k, ..unit })
    }
}

/// `K = sqrt(|G1|^2 + |G2|^2)`.
pub fn coupling_norm(g1: &DiscreteKernel, g2: &DiscreteKernel) -> f64 {
    (g1.norm_sqr() + g2.norm_sqr()).sqrt()
}

/// Norms of a kernel pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelNorms {
    pub g1: f64,
    pub g2: f64,
    /// `K = sqrt(g1^2 + g2^2)`.
    pub k: f64,
    /// Joint norm restricted to `|p2| <= sigma`, if a scale was given.
    pub ir: Option<f64>,
}

pub fn kernel_norms(g1: &DiscreteKernel, g2: &DiscreteKernel, sigma: Option<f64>) -> KernelNorms {
    KernelNorms {
        g1: g1.norm(),
        g2: g2.norm(),
        k: coupling_norm(g1, g2),
        ir: sigma.map(|s| (g1.ir_norm(s).powi(2) + g2.ir_norm(s).powi(2)).sqrt()),
    }
}


#[cfg(test)]
mod tests {
    use super::test_grids::desk_grids;
    use super::*;

    #[test]
    fn discretization_absorbs_weights() {
        let grids = desk_grids();
        let e = parse_kernel("1").unwrap();
        let k = discretize_kernel(&e, Channel::Emission, &grids, 1.0).unwrap();
        let want: f64 = grids.b.modes.iter().map(|m| m.weight).sum::<f64>()
            * grids.c.modes.iter().map(|m| m.weight).sum::<f64>()
            * grids.a.modes.iter().map(|m| m.weight).sum::<f64>();
        assert!((k.norm_sqr() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let grids = desk_grids();
        let e = parse_kernel("1 / (|p2| - 0.2)").unwrap();
        assert!(matches!(
            discretize_kernel(&e, Channel::Absorption, &grids, 1.0),
            Err(Error::NonFiniteKernel { c: 2, .. })
        ));
    }

    #[test]
    fn ir_norm_is_monotone_and_reaches_full_norm() {
        let grids = desk_grids();
        let e = parse_kernel("gauss(|p2|, 1) * |p2|").unwrap();
        let k = discretize_kernel(&e, Channel::Emission, &grids, 1.0).unwrap();
        let mut last = 0.0;
        for s in [0.01, 0.05, 0.1, 0.3, 1.0, 2.0] {
            let v = k.ir_norm(s);
            assert!(v >= last);
            last = v;
        }
        assert_eq!(last, k.norm());
    }

    #[test]
    fn channel_alpha_round_trip() {
        assert_eq!(Channel::from_alpha(2).unwrap().alpha(), 2);
        assert!(Channel::from_alpha(3).is_err());
    }
}
