use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::{Caps, FermionSigns};
use crate::kernels::parse_kernel;
use crate::scales::{build_mode_set, GridSpec, ModelParams, Species};
use crate::spectral::SolverOptions;
use crate::verify::{CheckContext, CheckId, Coupling, ModelSpec, SpeciesGrid};

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.into(), message: message.into() }
}

/// A validated experiment: model, check selection and run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Extra couplings for the spectrum subcommand.
    pub g_sweep: Vec<f64>,
    pub checks: Vec<CheckId>,
    pub gap_range: Vec<usize>,
    pub mourre_n: Vec<usize>,
    pub factorization_n: usize,
    pub resolvent_n: usize,
    pub relative_bound_samples: usize,
    pub z_samples: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub dense_limit: usize,
    /// Number of eigenvalues written by the spectrum subcommand; 0 means all.
    pub spectrum_k: usize,
    pub export: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ctx = CheckContext::default();
        ExperimentConfig {
            model: ModelSpec::desk1(),
            g_sweep: Vec::new(),
            checks: CheckId::ALL.to_vec(),
            gap_range: ctx.gap_range,
            mourre_n: ctx.mourre_n,
            factorization_n: ctx.factorization_n,
            resolvent_n: ctx.resolvent_n,
            relative_bound_samples: ctx.relative_bound_samples,
            z_samples: ctx.z_samples,
            seed: ctx.seed,
            out: PathBuf::from("out"),
            dense_limit: ctx.solver.dense_limit,
            spectrum_k: 0,
            export: Vec::new(),
        }
    }
}

fn parse_num<T: FromStr>(field: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| config_err(field, format!("cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(field: &str, v: &str) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(field, s.trim())).collect()
}

/// `1..3` (inclusive) or `1, 2, 3`.
fn parse_range(field: &str, v: &str) -> Result<Vec<usize>> {
    match v.split_once("..") {
        Some((a, b)) => {
            let (a, b): (usize, usize) = (parse_num(field, a.trim())?, parse_num(field, b.trim())?);
            if a > b {
                return Err(config_err(field, "empty range"));
            }
            Ok((a..=b).collect())
        }
        None => parse_list(field, v),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn optional<T: FromStr>(field: &str, v: &str) -> Result<Option<T>> {
    if v == "none" {
        Ok(None)
    } else {
        parse_num(field, v).map(Some)
    }
}

/// Split `key = value` text into a map; `#` starts a comment.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(&format!("line {}", i + 1), "expected `key = value`"))?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(config_err(&format!("line {}", i + 1), "empty key"));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(config_err(&key, "duplicate key"));
        }
    }
    Ok(out)
}

const SPECIES: [(&str, Species); 3] =
    [("massive", Species::MassiveFermion), ("neutrino", Species::Neutrino), ("boson", Species::Boson)];

fn species_grid<'a>(spec: &'a mut ModelSpec, name: &str) -> &'a mut SpeciesGrid {
    match name {
        "massive" => &mut spec.massive,
        "neutrino" => &mut spec.neutrino,
        _ => &mut spec.boson,
    }
}

impl ExperimentConfig {
    /// Parse and validate config text; unspecified keys keep the reference values.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = parse_entries(text)?;
        let mut c = ExperimentConfig::default();
        c.apply(&mut entries)?;
        if let Some(k) = entries.keys().next() {
            return Err(config_err(k, "unknown key"));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn apply(&mut self, e: &mut BTreeMap<String, String>) -> Result<()> {
        let mut take = |k: &str| e.remove(k).map(|v| (k.to_string(), v));
        let m = &mut self.model;
        if let Some((k, v)) = take("model.m1") {
            m.m1 = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("model.mw") {
            m.m_w = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("model.delta") {
            m.delta = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("model.beta") {
            m.beta = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("model.eta") {
            m.eta = parse_num(&k, &v)?;
        }
        match (take("coupling.g"), take("coupling.g_factor")) {
            (Some(_), Some(_)) => {
                return Err(config_err("coupling.g", "set either coupling.g or coupling.g_factor, not both"))
            }
            (Some((k, v)), None) => m.coupling = Coupling::Absolute(parse_num(&k, &v)?),
            (None, Some((k, v))) => m.coupling = Coupling::FractionOfThreshold(parse_num(&k, &v)?),
            (None, None) => {}
        }
        if let Some((k, v)) = take("coupling.g_sweep") {
            self.g_sweep = parse_list(&k, &v)?;
        }

        for (name, _) in SPECIES {
            let key = |f: &str| format!("grid.{name}.{f}");
            let geometry = take(&key("geometry"));
            let lambda = take(&key("lambda"));
            let points = take(&key("points_per_axis"));
            let radii = take(&key("radii"));
            let r_min = take(&key("r_min"));
            let r_max = take(&key("r_max"));
            let shells = take(&key("shells"));
            let angular = take(&key("angular_points"));
            let internal = take(&key("internal_dim"));
            let sg = species_grid(m, name);
            if let Some((k, v)) = internal {
                sg.internal_dim = parse_num(&k, &v)?;
            }
            let current = sg.grid.clone();
            let kind = match &geometry {
                Some((k, v)) => match v.as_str() {
                    "cartesian" | "log_radial" => v.clone(),
                    _ => return Err(config_err(k, "expected `cartesian` or `log_radial`")),
                },
                None => match current {
                    GridSpec::Cartesian { .. } => "cartesian".into(),
                    GridSpec::LogRadial { .. } => "log_radial".into(),
                },
            };
            let stray = |keys: &[&Option<(String, String)>]| -> Result<()> {
                match keys.iter().find_map(|o| o.as_ref()) {
                    Some((k, _)) => Err(config_err(k, format!("not used by a {kind} grid"))),
                    None => Ok(()),
                }
            };
            sg.grid = if kind == "cartesian" {
                stray(&[&radii, &r_min, &r_max, &shells, &angular])?;
                let (l0, p0) = match current {
                    GridSpec::Cartesian { lambda, points_per_axis } => (lambda, points_per_axis),
                    GridSpec::LogRadial { .. } => (1.0, 1),
                };
                GridSpec::Cartesian {
                    lambda: lambda.map(|(k, v)| parse_num(&k, &v)).transpose()?.unwrap_or(l0),
                    points_per_axis: points.map(|(k, v)| parse_num(&k, &v)).transpose()?.unwrap_or(p0),
                }
            } else {
                stray(&[&lambda, &points])?;
                let (r0, a0) = match current {
                    GridSpec::LogRadial { radii, angular_points } => (radii, angular_points),
                    GridSpec::Cartesian { .. } => (Vec::new(), 1),
                };
                let angular_points = angular.map(|(k, v)| parse_num(&k, &v)).transpose()?.unwrap_or(a0);
                match (radii, r_min, r_max, shells) {
                    (Some((k, v)), None, None, None) => GridSpec::LogRadial { radii: parse_list(&k, &v)?, angular_points },
                    (None, Some((k0, v0)), Some((k1, v1)), Some((k2, v2))) => GridSpec::geometric(
                        parse_num(&k0, &v0)?,
                        parse_num(&k1, &v1)?,
                        parse_num(&k2, &v2)?,
                        angular_points,
                    )
                    .map_err(|e| config_err(&k0, e.to_string()))?,
                    (None, None, None, None) => GridSpec::LogRadial { radii: r0, angular_points },
                    _ => {
                        return Err(config_err(
                            &key("radii"),
                            "give either radii or all of r_min, r_max and shells",
                        ))
                    }
                }
            };
        }

        if let Some((k, v)) = take("caps.massive") {
            m.caps.massive = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("caps.neutrino") {
            m.caps.neutrino = optional(&k, &v)?;
        }
        if let Some((k, v)) = take("caps.boson_total") {
            m.caps.boson_total = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("caps.boson_per_mode") {
            m.caps.boson_per_mode = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("caps.signs") {
            m.signs = match v.as_str() {
                "jordan_wigner" => FermionSigns::JordanWigner,
                "sector_local" => FermionSigns::SectorLocal,
                _ => return Err(config_err(&k, "expected `jordan_wigner` or `sector_local`")),
            };
        }
        if let Some((k, v)) = take("caps.dim_limit") {
            m.dim_limit = parse_num(&k, &v)?;
        }
        if let Some((_, v)) = take("kernel.g1") {
            m.kernel_g1 = v;
        }
        if let Some((_, v)) = take("kernel.g2") {
            m.kernel_g2 = v;
        }
        if let Some((k, v)) = take("kernel.normalize_k") {
            m.normalize_k = optional(&k, &v)?;
        }
        if let Some((k, v)) = take("ladder.n_max") {
            m.n_max = parse_num(&k, &v)?;
        }

        if let Some((k, v)) = take("checks.select") {
            self.checks = if v == "all" {
                CheckId::ALL.to_vec()
            } else {
                v.split(',')
                    .map(|s| s.trim().parse::<CheckId>().map_err(|e| config_err(&k, e.to_string())))
                    .collect::<Result<_>>()?
            };
        }
        if let Some((k, v)) = take("checks.gap_range") {
            self.gap_range = parse_range(&k, &v)?;
        }
        if let Some((k, v)) = take("checks.mourre_n") {
            self.mourre_n = parse_range(&k, &v)?;
        }
        if let Some((k, v)) = take("checks.factorization_n") {
            self.factorization_n = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("checks.resolvent_n") {
            self.resolvent_n = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("checks.relative_bound_samples") {
            self.relative_bound_samples = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("checks.z_samples") {
            self.z_samples = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("run.seed") {
            self.seed = parse_num(&k, &v)?;
        }
        if let Some((_, v)) = take("run.out") {
            self.out = PathBuf::from(v);
        }
        if let Some((k, v)) = take("run.dense_limit") {
            self.dense_limit = parse_num(&k, &v)?;
        }
        if let Some((k, v)) = take("run.spectrum_k") {
            self.spectrum_k = parse_num(&k, &v)?;
        }
        if let Some((_, v)) = take("run.export") {
            self.export = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        Ok(())
    }

    /// Check every precondition that does not need operator assembly.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        ModelParams::new(m.m1, m.m_w, m.delta, 0.0, m.beta, m.eta).map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                let field = if name == "m_w" { "model.mw".to_string() } else { format!("model.{name}") };
                config_err(&field, reason)
            }
            other => other,
        })?;
        match m.coupling {
            Coupling::Absolute(g) if !(g >= 0.0 && g.is_finite()) => {
                return Err(config_err("coupling.g", "must be finite and non-negative"))
            }
            Coupling::FractionOfThreshold(f) if !(f >= 0.0 && f < 1.0) => {
                return Err(config_err("coupling.g_factor", "must lie in [0, 1)"))
            }
            _ => {}
        }
        if self.g_sweep.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(config_err("coupling.g_sweep", "couplings must be finite and non-negative"));
        }
        for (name, species) in SPECIES {
            let sg = match name {
                "massive" => &m.massive,
                "neutrino" => &m.neutrino,
                _ => &m.boson,
            };
            build_mode_set(species, &sg.grid, sg.internal_dim)
                .map_err(|e| config_err(&format!("grid.{name}"), e.to_string()))?;
        }
        if m.caps.boson_per_mode == 0 && m.caps.boson_total > 0 {
            return Err(config_err("caps.boson_per_mode", "must be positive when bosons are allowed"));
        }
        parse_kernel(&m.kernel_g1).map_err(|e| config_err("kernel.g1", e.to_string()))?;
        parse_kernel(&m.kernel_g2).map_err(|e| config_err("kernel.g2", e.to_string()))?;
        if let Some(k) = m.normalize_k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(config_err("kernel.normalize_k", "must be positive"));
            }
        }
        if m.n_max < 2 {
            return Err(config_err("ladder.n_max", "must be at least 2"));
        }
        if self.checks.is_empty() {
            return Err(config_err("checks.select", "select at least one check"));
        }
        let in_ladder = |field: &str, ns: &[usize], top: usize| -> Result<()> {
            match ns.iter().find(|&&n| n == 0 || n > top) {
                Some(n) => Err(config_err(field, format!("n = {n} must lie in 1..={top}"))),
                None if ns.is_empty() => Err(config_err(field, "must not be empty")),
                None => Ok(()),
            }
        };
        in_ladder("checks.gap_range", &self.gap_range, m.n_max - 1)?;
        in_ladder("checks.mourre_n", &self.mourre_n, m.n_max)?;
        in_ladder("checks.factorization_n", &[self.factorization_n], m.n_max)?;
        in_ladder("checks.resolvent_n", &[self.resolvent_n], m.n_max)?;
        if self.relative_bound_samples == 0 {
            return Err(config_err("checks.relative_bound_samples", "must be positive"));
        }
        if self.dense_limit == 0 {
            return Err(config_err("run.dense_limit", "must be positive"));
        }
        for name in &self.export {
            super::run::OperatorName::from_str(name).map_err(|e| config_err("run.export", e.to_string()))?;
        }
        Ok(())
    }

    /// Every effective setting as canonical `key -> value` text.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let m = &self.model;
        let mut e = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            e.insert(k.to_string(), v);
        };
        put("model.m1", m.m1.to_string());
        put("model.mw", m.m_w.to_string());
        put("model.delta", m.delta.to_string());
        put("model.beta", m.beta.to_string());
        put("model.eta", m.eta.to_string());
        match m.coupling {
            Coupling::Absolute(g) => put("coupling.g", g.to_string()),
            Coupling::FractionOfThreshold(f) => put("coupling.g_factor", f.to_string()),
        }
        put("coupling.g_sweep", join(&self.g_sweep));
        for (name, sg) in [("massive", &m.massive), ("neutrino", &m.neutrino), ("boson", &m.boson)] {
            let key = |f: &str| format!("grid.{name}.{f}");
            match &sg.grid {
                GridSpec::Cartesian { lambda, points_per_axis } => {
                    put(&key("geometry"), "cartesian".into());
                    put(&key("lambda"), lambda.to_string());
                    put(&key("points_per_axis"), points_per_axis.to_string());
                }
                GridSpec::LogRadial { radii, angular_points } => {
                    put(&key("geometry"), "log_radial".into());
                    put(&key("radii"), join(radii));
                    put(&key("angular_points"), angular_points.to_string());
                }
            }
            put(&key("internal_dim"), sg.internal_dim.to_string());
        }
        put("caps.massive", m.caps.massive.to_string());
        put("caps.neutrino", m.caps.neutrino.map_or("none".into(), |c| c.to_string()));
        put("caps.boson_total", m.caps.boson_total.to_string());
        put("caps.boson_per_mode", m.caps.boson_per_mode.to_string());
        put(
            "caps.signs",
            match m.signs {
                FermionSigns::JordanWigner => "jordan_wigner",
                FermionSigns::SectorLocal => "sector_local",
            }
            .into(),
        );
        put("caps.dim_limit", m.dim_limit.to_string());
        put("kernel.g1", m.kernel_g1.clone());
        put("kernel.g2", m.kernel_g2.clone());
        put("kernel.normalize_k", m.normalize_k.map_or("none".into(), |k| k.to_string()));
        put("ladder.n_max", m.n_max.to_string());
        put("checks.select", join(&self.checks.iter().map(|c| c.as_str()).collect::<Vec<_>>()));
        put("checks.gap_range", join(&self.gap_range));
        put("checks.mourre_n", join(&self.mourre_n));
        put("checks.factorization_n", self.factorization_n.to_string());
        put("checks.resolvent_n", self.resolvent_n.to_string());
        put("checks.relative_bound_samples", self.relative_bound_samples.to_string());
        put("checks.z_samples", self.z_samples.to_string());
        put("run.seed", self.seed.to_string());
        put("run.out", self.out.display().to_string());
        put("run.dense_limit", self.dense_limit.to_string());
        put("run.spectrum_k", self.spectrum_k.to_string());
        put("run.export", self.export.join(", "));
        e
    }

    /// Canonical text: sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the canonical text without the output directory.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries().iter().filter(|(k, _)| k.as_str() != "run.out") {
            h.update(format!("{k} = {v}\n").as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn context(&self) -> CheckContext {
        CheckContext {
            seed: self.seed,
            config_hash: self.hash(),
            solver: SolverOptions { dense_limit: self.dense_limit, seed: self.seed, ..SolverOptions::default() },
            relative_bound_samples: self.relative_bound_samples,
            z_samples: self.z_samples,
            gap_range: self.gap_range.clone(),
            mourre_n: self.mourre_n.clone(),
            factorization_n: self.factorization_n,
            resolvent_n: self.resolvent_n,
        }
    }

    pub fn caps(&self) -> Caps {
        self.model.caps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_reference_configuration() {
        let c = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "model.delta = 0.25\ncoupling.g = 1e-5\ngrid.neutrino.r_min = 0.05\ngrid.neutrino.r_max = 1.6\n\
                    grid.neutrino.shells = 5\nchecks.gap_range = 1..2\ncaps.neutrino = 3\n";
        let c = ExperimentConfig::parse(text).unwrap();
        let again = ExperimentConfig::parse(&c.canonical()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.gap_range, vec![1, 2]);
    }

    #[test]
    fn hash_ignores_output_directory_only() {
        let a = ExperimentConfig::parse("run.out = a").unwrap();
        let b = ExperimentConfig::parse("run.out = b").unwrap();
        let c = ExperimentConfig::parse("run.seed = 8").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn errors_name_the_field() {
        let field = |text: &str| match ExperimentConfig::parse(text).unwrap_err() {
            Error::Config { field, .. } => field,
            e => panic!("unexpected {e}"),
        };
        assert_eq!(field("model.delta = 1.0"), "model.delta");
        assert_eq!(field("model.m1 = abc"), "model.m1");
        assert_eq!(field("bogus.key = 1"), "bogus.key");
        assert_eq!(field("checks.gap_range = 1..4"), "checks.gap_range");
        assert_eq!(field("grid.boson.radii = 1, 2"), "grid.boson.radii");
        assert_eq!(field("kernel.g1 = gauss(|p1|"), "kernel.g1");
        assert_eq!(field("no equals sign"), "line 1");
    }
}
