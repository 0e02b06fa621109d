//! Acceptance suite for the reference configuration: one PASS/FAIL line per criterion.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use weakfock::fock::Caps;
use weakfock::verify::{
    check_algebra_model, check_fn_factorization, check_free_spectrum, check_gap_cascade, check_ground_state,
    check_lanczos_dense, check_mourre_suite, check_relative_bound, check_resolvent_and_fn_bounds, CheckContext,
    FactorizationTarget, GapOptions, Model, ModelSpec,
};
use weakfock::CheckReport;

struct Outcome {
    ok: bool,
    detail: String,
}

fn from_reports(reports: &[CheckReport], keys: &[&str]) -> Outcome {
    let ok = reports.iter().all(CheckReport::passed);
    let detail = reports
        .iter()
        .flat_map(|r| keys.iter().filter_map(move |k| r.get(k).map(|v| format!("{k}={v:.3e}"))))
        .collect::<Vec<_>>()
        .join(" ");
    Outcome { ok, detail }
}

fn criterion(id: u32, name: &str, budget: Duration, failures: &mut u32, f: impl FnOnce() -> Outcome) {
    let t = Instant::now();
    let out = f();
    let took = t.elapsed();
    let ok = out.ok && took <= budget;
    if !ok {
        *failures += 1;
    }
    println!(
        "{} criterion {id:>2}: {name} [{:.1}s / {}s] {}",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        budget.as_secs(),
        out.detail,
    );
    if took > budget {
        println!("     criterion {id:>2}: runtime budget exceeded");
    }
}

fn with_neutrino_cap(model: &Model, cap: usize) -> Model {
    let caps = Caps { neutrino: Some(cap), ..model.basis.caps };
    let (basis, g1, g2) = model.with_caps(caps).expect("capped basis");
    Model { basis, g1, g2, ..model.clone() }
}

fn verify_all(out: &std::path::Path) -> (Option<i32>, Duration) {
    let t = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_weakfock"))
        .args(["verify-all", "--out", out.to_str().unwrap()])
        .output()
        .expect("binary runs")
        .status;
    (status.code(), t.elapsed())
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let ctx = CheckContext::default();
    let model = ModelSpec::desk1().build().expect("reference model");
    let mut failures = 0;

    criterion(1, "algebra exactness and hermiticity", secs(10), &mut failures, || {
        let r = check_algebra_model(&model, &ctx).unwrap();
        from_reports(&[r], &["car_residual", "ccr_residual", "mixed_residual", "hermiticity_error"])
    });
    criterion(2, "free spectrum equals subset sums", secs(5), &mut failures, || {
        let full = check_free_spectrum(&model, &ctx).unwrap();
        let capped = check_free_spectrum(&with_neutrino_cap(&model, 2), &ctx).unwrap();
        from_reports(&[capped, full], &["dim", "max_abs_difference"])
    });
    criterion(3, "relative bound on 10^4 random vectors", secs(30), &mut failures, || {
        let r = check_relative_bound(&model, 10_000, &ctx).unwrap();
        from_reports(&[r], &["violations", "worst_ratio", "vacuum_ratio"])
    });
    criterion(4, "ground state bound, simplicity and sign", secs(10), &mut failures, || {
        let r = check_ground_state(&model, &ctx).unwrap();
        from_reports(&[r], &["energy", "bound", "splitting"])
    });
    criterion(5, "gap cascade for n = 1, 2, 3", secs(60), &mut failures, || {
        let r = check_gap_cascade(&model, &[1, 2, 3], GapOptions::default(), &ctx).unwrap();
        from_reports(&[r], &["strict_margin_min", "discretization_slack"])
    });
    criterion(6, "factorization identity at n = 1", secs(30), &mut failures, || {
        let r = check_fn_factorization(&model, 1, FactorizationTarget::CutoffHamiltonian, &ctx).unwrap();
        from_reports(&[r], &["residual", "upper_gap", "upper_gap_needed"])
    });
    criterion(7, "Mourre positivity, stability and commutator consistency", secs(120), &mut failures, || {
        let rs = check_mourre_suite(&model, &[1, 2], &ctx).unwrap();
        from_reports(&rs, &["mu_over_sigma", "consistency_ratio", "spread"])
    });
    criterion(8, "resolvent bound and g-sweep ratios", secs(120), &mut failures, || {
        let r = check_resolvent_and_fn_bounds(&model, 1, 50, &ctx).unwrap();
        from_reports(&[r], &["resolvent_violations", "resolvent_worst_ratio", "fn_difference_spread", "weighted_fn_difference_spread"])
    });
    criterion(9, "Lanczos agrees with dense diagonalization", secs(600), &mut failures, || {
        let r = check_lanczos_dense(&model, &ctx).unwrap();
        from_reports(&[r], &["operators_compared", "max_difference"])
    });
    criterion(10, "verify-all end to end, byte-identical rerun", secs(1200), &mut failures, || {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        let (code_a, t_a) = verify_all(&a);
        let (code_b, t_b) = verify_all(&b);
        let same = fs::read(a.join("report.json")).ok() == fs::read(b.join("report.json")).ok()
            && fs::read(a.join("spectra/h.csv")).ok() == fs::read(b.join("spectra/h.csv")).ok();
        let ok = code_a == Some(0) && code_b == Some(0) && same && t_a <= secs(600) && t_b <= secs(600);
        Outcome {
            ok,
            detail: format!(
                "exit={code_a:?},{code_b:?} identical={same} runs={:.1}s,{:.1}s",
                t_a.as_secs_f64(),
                t_b.as_secs_f64()
            ),
        }
    });

    println!("{} of 10 criteria failed", failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
