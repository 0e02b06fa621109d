use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::fock::{build_a_tau, build_commutator, build_h0, build_hi, HamiltonianVariant};
use crate::report::CheckReport;
use crate::spectral::eigs_lowest;
use crate::verify::{run_checks, CheckId, Model};
use crate::SparseOperator;

/// Subcommands of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    GapCascade,
    Mourre,
    Hypotheses,
    VerifyAll,
    ExportOperator,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::GapCascade => "gap-cascade",
            Command::Mourre => "mourre",
            Command::Hypotheses => "hypotheses",
            Command::VerifyAll => "verify-all",
            Command::ExportOperator => "export-operator",
        }
    }

    fn checks(self, config: &ExperimentConfig) -> Vec<CheckId> {
        match self {
            Command::VerifyAll => config.checks.clone(),
            Command::GapCascade => vec![CheckId::GapCascade],
            Command::Mourre => vec![CheckId::Mourre],
            Command::Hypotheses => vec![CheckId::Hypotheses],
            Command::Spectrum | Command::ExportOperator => Vec::new(),
        }
    }
}

/// Operators that can be exported in triplet format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorName {
    Free,
    Interaction,
    Full,
    InfraredCut(usize),
    Upper(usize),
    Dilation(usize),
    Commutator(usize),
}

impl FromStr for OperatorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let indexed = |prefix: &str| s.strip_prefix(prefix).and_then(|n| n.parse::<usize>().ok());
        let name = match s {
            "h0" => OperatorName::Free,
            "hi" => OperatorName::Interaction,
            "h" => OperatorName::Full,
            _ => {
                if let Some(n) = indexed("h_sigma") {
                    OperatorName::InfraredCut(n)
                } else if let Some(n) = indexed("h_upper") {
                    OperatorName::Upper(n)
                } else if let Some(n) = indexed("commutator") {
                    OperatorName::Commutator(n)
                } else if let Some(n) = indexed("a") {
                    OperatorName::Dilation(n)
                } else {
                    return Err(Error::param(
                        "operator",
                        format!("unknown operator `{s}` (h0, hi, h, h_sigma<n>, h_upper<n>, a<n>, commutator<n>)"),
                    ));
                }
            }
        };
        Ok(name)
    }
}

impl fmt::Display for OperatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorName::Free => write!(f, "h0"),
            OperatorName::Interaction => write!(f, "hi"),
            OperatorName::Full => write!(f, "h"),
            OperatorName::InfraredCut(n) => write!(f, "h_sigma{n}"),
            OperatorName::Upper(n) => write!(f, "h_upper{n}"),
            OperatorName::Dilation(n) => write!(f, "a{n}"),
            OperatorName::Commutator(n) => write!(f, "commutator{n}"),
        }
    }
}

impl OperatorName {
    pub fn build(self, model: &Model) -> Result<SparseOperator> {
        let op = match self {
            OperatorName::Free => build_h0(&model.basis, &model.params),
            OperatorName::Interaction => build_hi(&model.basis, &model.g1, &model.g2)?,
            OperatorName::Full => model.hamiltonian(HamiltonianVariant::Full)?,
            OperatorName::InfraredCut(n) => {
                model.hamiltonian(HamiltonianVariant::InfraredCut { sigma: model.ladder.sigma(n)? })?
            }
            OperatorName::Upper(n) => model.hamiltonian(HamiltonianVariant::Upper { n })?,
            OperatorName::Dilation(n) => build_a_tau(&model.basis, n, &model.ladder)?.0,
            OperatorName::Commutator(n) => {
                build_commutator(&model.basis, n, &model.params, &model.g1, &model.g2, &model.ladder)?
            }
        };
        Ok(op.with_label(self.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of one run; written last as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub toolkit_version: String,
    pub command: Command,
    pub seed: u64,
    pub stages: Vec<StageTiming>,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub reports: Vec<CheckReport>,
    pub model: Model,
}

impl RunOutcome {
    pub fn any_failed(&self) -> bool {
        self.reports.iter().any(CheckReport::failed)
    }
}

struct Writer {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, bytes)?;
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }
}

struct Clock {
    stages: Vec<StageTiming>,
}

impl Clock {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        self.stages.push(StageTiming { stage: stage.into(), seconds: t.elapsed().as_secs_f64() });
        Ok(out)
    }
}

/// `index,eigenvalue,residual` rows for the lowest `k` eigenvalues (all when `k = 0`).
pub fn spectrum_csv(op: &SparseOperator, k: usize, config: &ExperimentConfig) -> Result<String> {
    let dim = op.dim();
    let k = match k {
        0 if dim <= config.dense_limit => dim,
        0 => 20.min(dim),
        k => k.min(dim),
    };
    let sol = eigs_lowest(op, k, 1e-10, &config.context().solver)?;
    let mut out = String::from("index,eigenvalue,residual\n");
    for (i, (v, r)) in sol.values.iter().zip(&sol.residuals).enumerate() {
        out.push_str(&format!("{i},{v:.17e},{r:.3e}\n"));
    }
    Ok(out)
}

/// Assemble the model, run `command`, and write every output under `config.out`.
pub fn run(config: &ExperimentConfig, command: Command, jobs: usize) -> Result<RunOutcome> {
    config.validate()?;
    let mut clock = Clock { stages: Vec::new() };
    let model = clock.time("assemble", || config.model.build())?;
    let ctx = config.context();
    let mut w = Writer { root: config.out.clone(), artifacts: Vec::new() };

    let selection = command.checks(config);
    let reports = clock.time("checks", || run_checks(&model, &ctx, &selection, jobs))?;

    clock.time("write", || {
        match command {
            Command::Spectrum => {
                let h = model.hamiltonian(HamiltonianVariant::Full)?;
                w.write("spectra/h.csv", spectrum_csv(&h, config.spectrum_k, config)?.as_bytes())?;
                for (i, &g) in config.g_sweep.iter().enumerate() {
                    let m = model.with_g_fixed_ladder(g);
                    let h = m.hamiltonian(HamiltonianVariant::Full)?;
                    w.write(&format!("spectra/h_sweep{i}.csv"), spectrum_csv(&h, config.spectrum_k, config)?.as_bytes())?;
                }
            }
            Command::GapCascade => {
                for &n in &config.gap_range {
                    let h = model.hamiltonian(HamiltonianVariant::Upper { n })?;
                    w.write(&format!("spectra/h_upper{n}.csv"), spectrum_csv(&h, 0, config)?.as_bytes())?;
                }
            }
            Command::VerifyAll => {
                let h = model.hamiltonian(HamiltonianVariant::Full)?;
                w.write("spectra/h.csv", spectrum_csv(&h, config.spectrum_k, config)?.as_bytes())?;
            }
            Command::Mourre | Command::Hypotheses | Command::ExportOperator => {}
        }
        let export: Vec<String> = if command == Command::ExportOperator && config.export.is_empty() {
            vec!["h".into()]
        } else {
            config.export.clone()
        };
        for name in &export {
            let op = name.parse::<OperatorName>()?.build(&model)?;
            let mut buf = Vec::new();
            op.write_triplets(&mut buf)?;
            w.write(&format!("operators/{name}.triplet"), &buf)?;
        }
        let mut body = serde_json::to_vec_pretty(&reports)?;
        body.push(b'\n');
        w.write("report.json", &body)
    })?;

    let manifest = RunManifest {
        config_hash: ctx.config_hash.clone(),
        toolkit_version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed: config.seed,
        stages: clock.stages,
        artifacts: w.artifacts,
    };
    let mut body = serde_json::to_vec_pretty(&manifest)?;
    body.push(b'\n');
    fs::write(config.out.join("manifest.json"), body)?;
    Ok(RunOutcome { manifest, reports, model })
}

/// Read an operator written by `export-operator`.
pub fn read_operator(path: &Path) -> Result<SparseOperator> {
    let f = fs::File::open(path)?;
    SparseOperator::read_triplets(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_names_round_trip() {
        for s in ["h0", "hi", "h", "h_sigma2", "h_upper1", "a1", "commutator2"] {
            assert_eq!(s.parse::<OperatorName>().unwrap().to_string(), s);
        }
        assert!("x1".parse::<OperatorName>().is_err());
        assert!("a".parse::<OperatorName>().is_err());
    }
}
