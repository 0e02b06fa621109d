use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{build_hamiltonian, enumerate_basis, Caps, FermionSigns, FockBasis, HamiltonianVariant};
use crate::kernels::{
    check_hypotheses, coupling_norm, derive_constants, parse_kernel, BoundConstants, DiscreteKernel, HypothesisSummary,
    KernelGrids, KernelSource,
};
use crate::scales::{build_mode_set, derive_ladder, GridSpec, ModelParams, ScaleLadder, Species};
use crate::SparseOperator;

/// How the coupling constant is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Coupling {
    Absolute(f64),
    /// A fraction of the cascade threshold `g_delta`.
    FractionOfThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesGrid {
    pub grid: GridSpec,
    pub internal_dim: usize,
}

/// Everything needed to assemble a [`Model`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub m1: f64,
    pub m_w: f64,
    pub delta: f64,
    pub beta: f64,
    pub eta: f64,
    pub coupling: Coupling,
    pub massive: SpeciesGrid,
    pub neutrino: SpeciesGrid,
    pub boson: SpeciesGrid,
    pub caps: Caps,
    pub signs: FermionSigns,
    pub kernel_g1: String,
    pub kernel_g2: String,
    /// Rescale both kernels so that `K` takes this value on the grid.
    pub normalize_k: Option<f64>,
    pub n_max: usize,
    pub dim_limit: usize,
}

pub const CANONICAL_GAUSSIAN: &str = "gauss(|p1|, 1) * gauss(|p2|, 1) * gauss(|k|, 1)";

impl ModelSpec {
    /// Reference desk-scale configuration.
    pub fn desk1() -> Self {
        let cell = GridSpec::Cartesian { lambda: 0.5, points_per_axis: 1 };
        ModelSpec {
            m1: 1.0,
            m_w: 2.0,
            delta: 0.5,
            beta: 1.0,
            eta: 1.0,
            coupling: Coupling::FractionOfThreshold(0.1),
            massive: SpeciesGrid { grid: cell.clone(), internal_dim: 2 },
            neutrino: SpeciesGrid {
                grid: GridSpec::LogRadial { radii: vec![0.05, 0.1, 0.2, 0.4, 0.8, 1.5], angular_points: 1 },
                internal_dim: 1,
            },
            boson: SpeciesGrid { grid: cell, internal_dim: 2 },
            caps: Caps { massive: 2, neutrino: None, boson_total: 2, boson_per_mode: 2 },
            signs: FermionSigns::JordanWigner,
            kernel_g1: CANONICAL_GAUSSIAN.into(),
            kernel_g2: CANONICAL_GAUSSIAN.into(),
            normalize_k: Some(1.0),
            n_max: 4,
            dim_limit: 200_000,
        }
    }

    /// Two-pass assembly: constants from the coupling-free ladder, then the ladder for the chosen coupling.
    pub fn build(&self) -> Result<Model> {
        let params0 = ModelParams::new(self.m1, self.m_w, self.delta, 0.0, self.beta, self.eta)?;
        let b = Arc::new(build_mode_set(Species::MassiveFermion, &self.massive.grid, self.massive.internal_dim)?);
        let c = Arc::new(build_mode_set(Species::Neutrino, &self.neutrino.grid, self.neutrino.internal_dim)?);
        let a = Arc::new(build_mode_set(Species::Boson, &self.boson.grid, self.boson.internal_dim)?);
        let basis = enumerate_basis(b.clone(), c.clone(), a.clone(), self.caps, self.signs, self.dim_limit)?;
        let grids = KernelGrids::new(b, c, a)?;
        let (e1, e2) = (parse_kernel(&self.kernel_g1)?, parse_kernel(&self.kernel_g2)?);
        let source = match self.normalize_k {
            Some(k) => KernelSource::normalized(e1, e2, &grids, k)?,
            None => KernelSource { g1: e1, g2: e2, scale: 1.0 },
        };
        let (g1, g2) = source.discretize(&grids)?;

        let ladder0 = derive_ladder(&params0, self.n_max, 0.0)?;
        let hypotheses = check_hypotheses(&g1, &g2, &ladder0, Some(&source))?;
        let constants = derive_constants(&params0, coupling_norm(&g1, &g2), hypotheses.k_tilde, ladder0.gamma)?;
        let g = match self.coupling {
            Coupling::Absolute(g) => g,
            Coupling::FractionOfThreshold(f) => f * constants.g_delta,
        };
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::param("g", "must be finite and non-negative"));
        }
        let params = params0.with_g(g);
        params.validate()?;
        let ladder = derive_ladder(&params, self.n_max, g * constants.d_tilde)?;
        Ok(Model { params, ladder, basis, g1, g2, source, constants, hypotheses })
    }
}

/// An assembled model: basis, discretized kernels, ladder and derived constants.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub ladder: ScaleLadder,
    pub basis: FockBasis,
    pub g1: DiscreteKernel,
    pub g2: DiscreteKernel,
    pub source: KernelSource,
    pub constants: BoundConstants,
    pub hypotheses: HypothesisSummary,
}

impl Model {
    pub fn g(&self) -> f64 {
        self.params.g
    }

    pub fn hamiltonian(&self, variant: HamiltonianVariant) -> Result<SparseOperator> {
        build_hamiltonian(&self.basis, &self.params, &self.g1, &self.g2, &self.ladder, variant)
    }

    /// Same model at another coupling, with the ladder rebuilt for it.
    pub fn with_g(&self, g: f64) -> Result<Model> {
        let params = self.params.with_g(g);
        params.validate()?;
        let ladder = derive_ladder(&params, self.ladder.n_max(), g * self.constants.d_tilde)?;
        Ok(Model { params, ladder, ..self.clone() })
    }

    /// Same model at another coupling, keeping the current ladder even if `g` leaves the admissible range.
    pub fn with_g_fixed_ladder(&self, g: f64) -> Model {
        Model { params: self.params.with_g(g), ..self.clone() }
    }

    /// Basis and kernels on another neutrino grid with other caps; kernels are resampled from their expressions.
    pub fn on_neutrino_grid(&self, grid: &GridSpec, caps: Caps) -> Result<(FockBasis, DiscreteKernel, DiscreteKernel)> {
        let c = Arc::new(build_mode_set(Species::Neutrino, grid, self.basis.c_modes.internal_dim)?);
        let basis = enumerate_basis(
            self.basis.b_modes.clone(),
            c.clone(),
            self.basis.a_modes.clone(),
            caps,
            self.basis.signs,
            usize::MAX,
        )?;
        let grids = KernelGrids::new(self.basis.b_modes.clone(), c, self.basis.a_modes.clone())?;
        let (g1, g2) = self.source.discretize(&grids)?;
        Ok((basis, g1, g2))
    }

    /// Basis and kernels with other caps on the same grids.
    pub fn with_caps(&self, caps: Caps) -> Result<(FockBasis, DiscreteKernel, DiscreteKernel)> {
        let basis = enumerate_basis(
            self.basis.b_modes.clone(),
            self.basis.c_modes.clone(),
            self.basis.a_modes.clone(),
            caps,
            self.basis.signs,
            usize::MAX,
        )?;
        Ok((basis, self.g1.clone(), self.g2.clone()))
    }

    /// `K` of the discretized kernels.
    pub fn coupling_norm(&self) -> f64 {
        coupling_norm(&self.g1, &self.g2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_model_constants() {
        let m = ModelSpec::desk1().build().unwrap();
        assert_eq!(m.basis.dim(), 1536);
        assert!((m.coupling_norm() - 1.0).abs() < 1e-12);
        assert!((m.ladder.gamma - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.ladder.eps_gamma - 1.0 / 24.0).abs() < 1e-15);
        assert!((m.g() - 0.1 * m.constants.g_delta).abs() < 1e-18);
        assert!(m.g() > 0.0 && m.g() < 1e-4);
    }

    #[test]
    fn absolute_coupling_and_validation() {
        let mut spec = ModelSpec::desk1();
        spec.coupling = Coupling::Absolute(0.0);
        assert_eq!(spec.build().unwrap().g(), 0.0);
        spec.delta = 1.5;
        assert!(spec.build().unwrap_err().is_validation());
    }
}
