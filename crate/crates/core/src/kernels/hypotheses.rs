use serde::Serialize;

use super::{discretize_kernel, kernel_point, DiscreteKernel, KernelExpr, KernelGrids, KernelSource, Momentum, Var};
use crate::error::Result;
use crate::scales::{build_mode_set, ScaleLadder};
use std::sync::Arc;

/// One sample of the infrared profile `sigma -> |1_{|p2| <= sigma} G|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrProfile {
    pub sigma: f64,
    pub ir_norm: f64,
    pub ratio: f64,
}

/// Grid diagnostics of the infrared regularity assumptions on the kernels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisSummary {
    /// `sum |G|^2 / |p2|^2` over both channels.
    pub inv_p2_norm: f64,
    /// Same quantity after one refinement of the neutrino grid.
    pub inv_p2_norm_refined: Option<f64>,
    /// Smallest `K~` with `|1_{|p2| <= sigma} G| <= K~ sigma` on all sampled scales.
    pub k_tilde: f64,
    pub ir_profile: Vec<IrProfile>,
    /// Smallest `K~~` with `int_{|p2| <= sigma} |(p2 . grad) G|^2 <= K~~ sigma` on all sampled scales.
    pub k_tilde_tilde: Option<f64>,
    /// `sum_{i,j} p_i^2 p_j^2 |d_i d_j G|^2` over both channels.
    pub second_moment: Option<f64>,
    /// Points where symbolic derivatives were singular and central differences were used.
    pub fd_fallbacks: usize,
}

const P2: [Var; 3] = [
    Var::Component(Momentum::P2, 0),
    Var::Component(Momentum::P2, 1),
    Var::Component(Momentum::P2, 2),
];

fn inv_p2(k: &DiscreteKernel) -> f64 {
    let [nb, nc, na] = k.dims();
    let mut acc = 0.0;
    for i in 0..nb {
        for j in 0..nc {
            let r = k.grids.c.modes[j].abs;
            for m in 0..na {
                let v = k.get(i, j, m).norm_sqr();
                if v > 0.0 {
                    acc += v / (r * r);
                }
            }
        }
    }
    acc
}

/// Scales at which the infrared profile is sampled: the ladder plus every neutrino radius up to `sigma_0`.
fn sample_scales(grids: &KernelGrids, ladder: &ScaleLadder) -> Vec<f64> {
    let top = ladder.sigma[0];
    let mut s: Vec<f64> = ladder.sigma.clone();
    s.extend(grids.c.modes.iter().map(|m| m.abs).filter(|&r| r > 0.0 && r <= top));
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

struct Derivs<'a> {
    expr: &'a KernelExpr,
    first: Vec<KernelExpr>,
    second: Vec<Vec<KernelExpr>>,
    h: f64,
    fallbacks: usize,
}

impl<'a> Derivs<'a> {
    fn new(expr: &'a KernelExpr, h: f64) -> Self {
        let first: Vec<KernelExpr> = P2.iter().map(|&v| expr.derivative(v)).collect();
        let second = first.iter().map(|d| P2.iter().map(|&v| d.derivative(v)).collect()).collect();
        Derivs { expr, first, second, h, fallbacks: 0 }
    }

    fn d1(&mut self, c: usize, pt: &super::KernelPoint) -> f64 {
        let v = self.first[c].eval(pt);
        if v.is_finite() {
            return v;
        }
        self.fallbacks += 1;
        let h = self.h;
        (self.expr.eval(&pt.shifted(P2[c], h)) - self.expr.eval(&pt.shifted(P2[c], -h))) / (2.0 * h)
    }

    fn d2(&mut self, a: usize, b: usize, pt: &super::KernelPoint) -> f64 {
        let v = self.second[a][b].eval(pt);
        if v.is_finite() {
            return v;
        }
        self.fallbacks += 1;
        let h = self.h;
        let f = |sa: f64, sb: f64| self.expr.eval(&pt.shifted(P2[a], sa * h).shifted(P2[b], sb * h));
        (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * h * h)
    }
}

struct DerivativeSums {
    /// `|(p2 . grad) G|^2` amplitudes per neutrino mode.
    dilation_by_mode: Vec<f64>,
    second_moment: f64,
}

fn derivative_sums(grids: &KernelGrids, scale: f64, d: &mut Derivs) -> DerivativeSums {
    let [nb, nc, na] = grids.dims();
    let mut dilation_by_mode = vec![0.0; nc];
    let mut second_moment = 0.0;
    for i in 0..nb {
        for (j, slot) in dilation_by_mode.iter_mut().enumerate() {
            for m in 0..na {
                let w = grids.b.modes[i].weight * grids.c.modes[j].weight * grids.a.modes[m].weight;
                let pt = kernel_point(grids, i, j, m);
                let p = pt.p2;
                let mut dil = 0.0;
                for c in 0..3 {
                    if p[c] != 0.0 {
                        dil += p[c] * d.d1(c, &pt);
                    }
                }
                *slot += scale * scale * dil * dil * w;
                for a in 0..3 {
                    for b in 0..3 {
                        let pp = p[a] * p[a] * p[b] * p[b];
                        if pp != 0.0 {
                            let v = d.d2(a, b, &pt);
                            second_moment += pp * scale * scale * v * v * w;
                        }
                    }
                }
            }
        }
    }
    DerivativeSums { dilation_by_mode, second_moment }
}

/// Evaluate the infrared regularity diagnostics for a kernel pair.
///
/// Derivative-based quantities need the kernel expressions in `source`.
pub fn check_hypotheses(
    g1: &DiscreteKernel,
    g2: &DiscreteKernel,
    ladder: &ScaleLadder,
    source: Option<&KernelSource>,
) -> Result<HypothesisSummary> {
    let grids = &g1.grids;
    let inv_p2_norm = inv_p2(g1) + inv_p2(g2);

    let scales = sample_scales(grids, ladder);
    let ir_profile: Vec<IrProfile> = scales
        .iter()
        .map(|&sigma| {
            let ir_norm = (g1.ir_norm(sigma).powi(2) + g2.ir_norm(sigma).powi(2)).sqrt();
            IrProfile { sigma, ir_norm, ratio: ir_norm / sigma }
        })
        .collect();
    let k_tilde = ir_profile.iter().map(|p| p.ratio).fold(0.0, f64::max);

    let (mut inv_p2_norm_refined, mut k_tilde_tilde, mut second_moment) = (None, None, None);
    let mut fd_fallbacks = 0;
    if let Some(src) = source {
        let finer = Arc::new(build_mode_set(
            grids.c.species,
            &grids.c.grid.refine(),
            grids.c.internal_dim,
        )?);
        let fine_grids = KernelGrids::new(grids.b.clone(), finer, grids.a.clone())?;
        let f1 = discretize_kernel(&src.g1, g1.channel, &fine_grids, src.scale)?;
        let f2 = discretize_kernel(&src.g2, g2.channel, &fine_grids, src.scale)?;
        inv_p2_norm_refined = Some(inv_p2(&f1) + inv_p2(&f2));

        let h = 1e-4 * grids.c.grid.lambda();
        let mut ktt = 0.0f64;
        let mut sm = 0.0;
        for expr in [&src.g1, &src.g2] {
            let mut d = Derivs::new(expr, h);
            let sums = derivative_sums(grids, src.scale, &mut d);
            fd_fallbacks += d.fallbacks;
            sm += sums.second_moment;
            for &sigma in &scales {
                let inside: f64 = grids
                    .c
                    .modes
                    .iter()
                    .zip(&sums.dilation_by_mode)
                    .filter(|(m, _)| m.abs <= sigma)
                    .map(|(_, v)| v)
                    .sum();
                ktt = ktt.max(inside / sigma);
            }
        }
        k_tilde_tilde = Some(ktt);
        second_moment = Some(sm);
    }
    Ok(HypothesisSummary {
        inv_p2_norm,
        inv_p2_norm_refined,
        k_tilde,
        ir_profile,
        k_tilde_tilde,
        second_moment,
        fd_fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::test_grids::desk_grids;
    use crate::kernels::{parse_kernel, Channel};
    use crate::scales::{derive_ladder, ModelParams};

    fn ladder() -> ScaleLadder {
        derive_ladder(&ModelParams::new(1.0, 2.0, 0.5, 0.0, 1.0, 1.0).unwrap(), 4, 0.0).unwrap()
    }

    fn source(e1: &str, e2: &str) -> KernelSource {
        KernelSource { g1: parse_kernel(e1).unwrap(), g2: parse_kernel(e2).unwrap(), scale: 1.0 }
    }

    #[test]
    fn profile_is_bounded_by_fitted_constant() {
        let grids = desk_grids();
        let src = source("gauss(|p2|, 1)", "|p2| * gauss(|p2|, 1)");
        let (g1, g2) = src.discretize(&grids).unwrap();
        let s = check_hypotheses(&g1, &g2, &ladder(), Some(&src)).unwrap();
        for p in &s.ir_profile {
            assert!(p.ir_norm <= s.k_tilde * p.sigma * (1.0 + 1e-12));
        }
        assert!(s.inv_p2_norm.is_finite() && s.inv_p2_norm > 0.0);
        assert!(s.k_tilde_tilde.unwrap() > 0.0);
        assert_eq!(s.fd_fallbacks, 0);
    }

    #[test]
    fn radial_dilation_of_power_law() {
        // (p . grad) |p|^2 = 2 |p|^2 exactly.
        let grids = desk_grids();
        let src = source("0", "|p2|^2");
        let (g1, g2) = src.discretize(&grids).unwrap();
        let s = check_hypotheses(&g1, &g2, &ladder(), Some(&src)).unwrap();
        let top = ladder().sigma[0];
        let want = 4.0 * g2.norm_sqr() / top;
        let full_ratio: f64 = s.k_tilde_tilde.unwrap();
        assert!(full_ratio >= want * (1.0 - 1e-12));
    }

    #[test]
    fn singular_derivative_uses_finite_differences() {
        let b = crate::scales::build_mode_set(
            crate::scales::Species::Neutrino,
            &crate::scales::GridSpec::Cartesian { lambda: 0.3, points_per_axis: 3 },
            1,
        )
        .unwrap();
        let g = desk_grids();
        let grids = KernelGrids::new(g.b.clone(), Arc::new(b), g.a.clone()).unwrap();
        let src = source("0", "gauss(|p2|, 1)");
        let g1 = DiscreteKernel::zeros(Channel::Absorption, grids.clone());
        let g2 = discretize_kernel(&src.g2, Channel::Emission, &grids, 1.0).unwrap();
        let s = check_hypotheses(&g1, &g2, &ladder(), Some(&src)).unwrap();
        assert!(s.k_tilde_tilde.unwrap().is_finite());
        assert!(s.inv_p2_norm.is_infinite());
    }
}
