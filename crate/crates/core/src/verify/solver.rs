use super::{CheckContext, CheckId, Model};
use crate::error::Result;
use crate::fock::{build_a_tau, build_b_weight, build_commutator, build_h0, HamiltonianVariant};
use crate::report::CheckReport;
use crate::spectral::{eigs_lowest, lanczos_lowest, Method, SolverOptions};
use crate::SparseOperator;

/// Operators compared by the solver cross-check, with their names.
fn solver_operators(model: &Model) -> Result<Vec<(String, SparseOperator)>> {
    let mut ops = vec![
        ("h0".to_string(), build_h0(&model.basis, &model.params)),
        ("h".to_string(), model.hamiltonian(HamiltonianVariant::Full)?),
        ("h_sigma1".to_string(), model.hamiltonian(HamiltonianVariant::InfraredCut { sigma: model.ladder.sigma(1)? })?),
    ];
    for n in 1..model.ladder.n_max() {
        ops.push((format!("h_upper{n}"), model.hamiltonian(HamiltonianVariant::Upper { n })?));
    }
    if let Ok((a, _)) = build_a_tau(&model.basis, 1, &model.ladder) {
        ops.push(("a1".to_string(), a));
        ops.push((
            "commutator1".to_string(),
            build_commutator(&model.basis, 1, &model.params, &model.g1, &model.g2, &model.ladder)?,
        ));
        ops.push(("b_weight".to_string(), build_b_weight(&model.basis, 0.75)?.op));
    }
    Ok(ops)
}

/// Lanczos against dense diagonalization on the five lowest eigenvalues of every operator below the dense limit.
pub fn check_lanczos_dense(model: &Model, ctx: &CheckContext) -> Result<CheckReport> {
    let tol = 1e-10;
    let dense_opts = SolverOptions { force: Some(Method::Dense), ..ctx.solver.clone() };
    let lanczos_opts = SolverOptions::lanczos(ctx.seed_for(CheckId::LanczosDense));
    let mut r = CheckReport::new("lanczos_dense", "iterative and dense eigensolvers agree", tol);
    let (mut worst, mut compared) = (0.0f64, 0usize);
    for (name, op) in solver_operators(model)? {
        if op.dim() > ctx.solver.dense_limit {
            continue;
        }
        let k = 5.min(op.dim());
        let dense = eigs_lowest(&op, k, 1e-12, &dense_opts)?;
        let iter = lanczos_lowest(&op, k, 1e-9, &lanczos_opts)?;
        let diff = dense.values.iter().zip(&iter.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r.value(format!("{name}_max_difference"), diff).value(format!("{name}_residual"), iter.max_residual());
        worst = worst.max(diff);
        compared += 1;
    }
    r.value("operators_compared", compared as f64)
        .value("max_difference", worst)
        .assert_all(compared > 0 && worst <= tol);
    Ok(r)
}

/// Kernel hypotheses and derived constants, reported without assertion.
pub fn check_hypotheses_report(model: &Model, _ctx: &CheckContext) -> Result<CheckReport> {
    let h = &model.hypotheses;
    let c = &model.constants;
    let mut r = CheckReport::new("hypotheses", "kernel regularity hypotheses and derived coupling constants", 0.0);
    r.value("k", c.k)
        .value("k_tilde", c.k_tilde)
        .value("inv_p2_norm", h.inv_p2_norm)
        .value("c_be", c.c_be)
        .value("b_be", c.b_be)
        .value("g1", c.g1)
        .value("c_tilde", c.c_tilde)
        .value("b_tilde", c.b_tilde)
        .value("d_tilde", c.d_tilde)
        .value("g_delta", c.g_delta)
        .value("g", model.g())
        .value("finite_difference_fallbacks", h.fd_fallbacks as f64);
    if let Some(v) = h.inv_p2_norm_refined {
        r.value("inv_p2_norm_refined", v);
    }
    if let Some(v) = h.k_tilde_tilde {
        r.value("k_tilde_tilde", v);
    }
    if let Some(v) = h.second_moment {
        r.value("second_moment", v);
    }
    for p in &h.ir_profile {
        r.value(format!("ir_ratio_sigma_{:.6}", p.sigma), p.ratio);
    }
    Ok(r)
}
