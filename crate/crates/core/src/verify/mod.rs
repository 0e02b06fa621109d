//! Numerical certificates: each check assembles operators for a model and tests one inequality or identity.

mod algebra;
mod bounds;
mod cascade;
mod model;
mod mourre;
mod resolvent;
mod solver;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::CheckReport;
use crate::spectral::SolverOptions;

pub use algebra::{check_algebra, check_algebra_model, check_free_spectrum, subset_sum_spectrum};
pub use bounds::{check_ground_state, check_relative_bound};
pub use cascade::{check_fn_factorization, check_gap_cascade, FactorizationTarget, GapOptions};
pub use model::{Coupling, Model, ModelSpec, SpeciesGrid, CANONICAL_GAUSSIAN};
pub use mourre::{check_mourre, check_mourre_suite, commutator_consistency, ConsistencyProbe};
pub use resolvent::{check_resolvent_and_fn_bounds, resolvent_bound_violations, sample_z};
pub use solver::{check_hypotheses_report, check_lanczos_dense};

/// Run-wide settings shared by all checks.
#[derive(Debug, Clone)]
pub struct CheckContext {
    pub seed: u64,
    pub config_hash: String,
    pub solver: SolverOptions,
    pub relative_bound_samples: usize,
    pub z_samples: usize,
    pub gap_range: Vec<usize>,
    pub mourre_n: Vec<usize>,
    pub factorization_n: usize,
    pub resolvent_n: usize,
}

impl Default for CheckContext {
    fn default() -> Self {
        CheckContext {
            seed: 7,
            config_hash: String::new(),
            solver: SolverOptions::default(),
            relative_bound_samples: 10_000,
            z_samples: 50,
            gap_range: vec![1, 2, 3],
            mourre_n: vec![1, 2],
            factorization_n: 1,
            resolvent_n: 1,
        }
    }
}

impl CheckContext {
    /// Independent seed for one check.
    pub fn seed_for(&self, id: CheckId) -> u64 {
        self.seed ^ (id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }

    pub(crate) fn stamp(&self, mut r: CheckReport) -> CheckReport {
        r.seed = self.seed;
        r.config_hash = self.config_hash.clone();
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    Algebra,
    FreeSpectrum,
    RelativeBound,
    GroundState,
    GapCascade,
    Factorization,
    Mourre,
    Resolvent,
    LanczosDense,
    Hypotheses,
}

impl CheckId {
    pub const ALL: [CheckId; 10] = [
        CheckId::Algebra,
        CheckId::FreeSpectrum,
        CheckId::RelativeBound,
        CheckId::GroundState,
        CheckId::GapCascade,
        CheckId::Factorization,
        CheckId::Mourre,
        CheckId::Resolvent,
        CheckId::LanczosDense,
        CheckId::Hypotheses,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::Algebra => "algebra",
            CheckId::FreeSpectrum => "free_spectrum",
            CheckId::RelativeBound => "relative_bound",
            CheckId::GroundState => "ground_state",
            CheckId::GapCascade => "gap_cascade",
            CheckId::Factorization => "factorization",
            CheckId::Mourre => "mourre",
            CheckId::Resolvent => "resolvent",
            CheckId::LanczosDense => "lanczos_dense",
            CheckId::Hypotheses => "hypotheses",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::param("check", format!("unknown check `{s}`")))
    }
}

/// Run one check family.
pub fn run_check(model: &Model, ctx: &CheckContext, id: CheckId) -> Result<Vec<CheckReport>> {
    let reports = match id {
        CheckId::Algebra => vec![check_algebra_model(model, ctx)?],
        CheckId::FreeSpectrum => vec![check_free_spectrum(model, ctx)?],
        CheckId::RelativeBound => vec![check_relative_bound(model, ctx.relative_bound_samples, ctx)?],
        CheckId::GroundState => vec![check_ground_state(model, ctx)?],
        CheckId::GapCascade => vec![check_gap_cascade(model, &ctx.gap_range, GapOptions::default(), ctx)?],
        CheckId::Factorization => {
            vec![check_fn_factorization(model, ctx.factorization_n, FactorizationTarget::CutoffHamiltonian, ctx)?]
        }
        CheckId::Mourre => check_mourre_suite(model, &ctx.mourre_n, ctx)?,
        CheckId::Resolvent => vec![check_resolvent_and_fn_bounds(model, ctx.resolvent_n, ctx.z_samples, ctx)?],
        CheckId::LanczosDense => vec![check_lanczos_dense(model, ctx)?],
        CheckId::Hypotheses => vec![check_hypotheses_report(model, ctx)?],
    };
    Ok(reports.into_iter().map(|r| ctx.stamp(r)).collect())
}

/// Run the selected checks on `jobs` threads; reports come back in selection order.
pub fn run_checks(model: &Model, ctx: &CheckContext, selection: &[CheckId], jobs: usize) -> Result<Vec<CheckReport>> {
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::param("jobs", e.to_string()))?;
    let results: Vec<Result<Vec<CheckReport>>> =
        pool.install(|| selection.par_iter().map(|&id| run_check(model, ctx, id)).collect());
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
