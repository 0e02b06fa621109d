use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weakfock::experiment::{run, Command, ExperimentConfig, RunOutcome};
use weakfock::{CheckReport, Error, Status};

#[derive(Parser)]
#[command(name = "weakfock", version, about = "Numerical checks for a truncated weak-interaction Fock model")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Eigenvalues of H as CSV.
    Spectrum(Common),
    /// Gap cascade table for the configured range of n.
    GapCascade(Common),
    /// Mourre estimates and commutator consistency.
    Mourre(Common),
    /// Kernel hypotheses and derived constants.
    Hypotheses(Common),
    /// Every selected check; exit status 1 if any fails.
    VerifyAll(Common),
    /// Write operators in sparse triplet format.
    ExportOperator {
        #[command(flatten)]
        common: Common,
        /// Operator names (h0, hi, h, h_sigma<n>, h_upper<n>, a<n>, commutator<n>); defaults to run.export or `h`.
        #[arg(long = "operator", value_delimiter = ',')]
        operators: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config; the reference configuration when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest dimension handled by dense diagonalization.
    #[arg(long)]
    dense_limit: Option<usize>,
    /// Checks run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if let Some(d) = self.dense_limit {
            c.dense_limit = d;
        }
        c.validate()?;
        Ok(c)
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Measured => "MEASURED",
    }
}

fn print_summary(reports: &[CheckReport]) {
    for r in reports {
        println!("{:<9} {}", status_word(r.status), r.check_id);
    }
}

fn print_gap_table(config: &ExperimentConfig, reports: &[CheckReport]) {
    let Some(r) = reports.iter().find(|r| r.check_id == "gap_cascade") else { return };
    println!("{:>3} {:>22} {:>14} {:>14} {:>14}", "n", "E^n", "gap", "bound", "margin");
    for n in &config.gap_range {
        let get = |k: &str| r.get(&format!("{k}_n{n}")).unwrap_or(f64::NAN);
        let (gap, bound) = (get("gap"), get("gap_bound"));
        println!("{n:>3} {:>22.15e} {gap:>14.6e} {bound:>14.6e} {:>14.6e}", get("energy"), gap - bound);
    }
}

fn print_values(reports: &[CheckReport]) {
    for r in reports {
        println!("[{}] {}", r.check_id, status_word(r.status));
        for (k, v) in &r.values {
            println!("  {k:<32} {v:.10e}");
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } | Error::Linalg(_) => 3,
        e if e.is_validation() => 2,
        _ => 1,
    }
}

fn execute(cli: Cli) -> Result<(RunOutcome, ExperimentConfig, Command), Error> {
    let (common, command, ops) = match cli.command {
        Sub::Spectrum(c) => (c, Command::Spectrum, Vec::new()),
        Sub::GapCascade(c) => (c, Command::GapCascade, Vec::new()),
        Sub::Mourre(c) => (c, Command::Mourre, Vec::new()),
        Sub::Hypotheses(c) => (c, Command::Hypotheses, Vec::new()),
        Sub::VerifyAll(c) => (c, Command::VerifyAll, Vec::new()),
        Sub::ExportOperator { common, operators } => (common, Command::ExportOperator, operators),
    };
    let mut config = common.load()?;
    if !ops.is_empty() {
        config.export = ops;
        config.validate()?;
    }
    let outcome = run(&config, command, common.jobs)?;
    Ok((outcome, config, command))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok((outcome, config, command)) => {
            match command {
                Command::GapCascade => print_gap_table(&config, &outcome.reports),
                Command::Mourre | Command::Hypotheses => print_values(&outcome.reports),
                _ => {}
            }
            print_summary(&outcome.reports);
            for a in &outcome.manifest.artifacts {
                println!("wrote {}", config.out.join(&a.path).display());
            }
            println!("wrote {}", config.out.join("manifest.json").display());
            if outcome.any_failed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
