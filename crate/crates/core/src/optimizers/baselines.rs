//! Comparison solvers: proximal gradient descent, proximal SGD, regularized
//! dual averaging, prox-SVRG with last-stage averaging and SAGA.
//!
//! Without a budget, `stages` counts full-gradient steps for GD, passes of `n`
//! stochastic steps for SGD, RDA and SAGA, and outer stages for SVRG.

use super::{OutputKind, RunResult, RunTrace, SolverConfig, SolverKind, StageSnapshot, Tracker};
use crate::error::{config, Result};
use crate::estimators::{RunningAverage, SagaTable, SvrgAnchor, SAGA_STEP_EVALS, SVRG_STEP_EVALS};
use crate::problem::CompositeProblem;
use crate::sampling::{build_q, SeededRng};
use crate::vector::DenseVector;

/// Step limit for single-loop solvers: a budget wins over a pass count.
fn step_limit(cfg: &SolverConfig, steps_per_stage: u64) -> u64 {
    match (cfg.budget, cfg.stages) {
        (Some(_), _) => u64::MAX,
        (None, Some(s)) => s as u64 * steps_per_stage,
        (None, None) => unreachable!("validated: stages or budget is set"),
    }
}

fn single_loop_result(
    tracker: Tracker<'_>,
    output: DenseVector,
    last: DenseVector,
    stages_completed: usize,
) -> RunResult {
    let (trace, total_grad_evals) = tracker.finish();
    RunResult {
        x_tilde: output.clone(),
        v_tilde: last,
        output,
        trace,
        total_grad_evals,
        stages_completed,
        stage_iterates: Vec::new(),
    }
}

/// `x_t = prox_{R/η}(x_{t−1} − ∇F(x_{t−1})/η)` with η = L̄ by default.
pub fn prox_gd_run(problem: &CompositeProblem, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate_common()?;
    let n = problem.n() as u64;
    let eta = cfg.eta_or(problem.lbar())?;
    let reg = problem.reg();
    let trace = RunTrace::new(SolverKind::ProxGd, cfg.seed, OutputKind::FinalIterate, false);
    let mut tracker = Tracker::new(problem, cfg, trace);
    let mut x = cfg.initial_point(problem)?;
    let mut y = DenseVector::zeros(problem.dim());
    tracker.record(1, &x);
    let limit = step_limit(cfg, 1);
    let mut steps = 0;
    while steps < limit && !tracker.would_exceed(n) {
        let grad = problem.smooth_gradient(&x);
        for ((yj, xj), gj) in y.iter_mut().zip(x.iter()).zip(grad.iter()) {
            *yj = xj - gj / eta;
        }
        reg.prox_into(&y, 1.0 / eta, &mut x);
        tracker.charge(n);
        steps += 1;
        tracker.record_if_due(1, &x);
    }
    tracker.record(1, &x);
    Ok(single_loop_result(tracker, x.clone(), x, steps as usize))
}

/// Proximal SGD with uniform sampling.
///
/// Step `1/η_t`: `1/(η₀ + μt)` with η₀ = L_max when μ > 0, otherwise
/// `1/(η₀ √t)` with η₀ = L_max. `eta` overrides η₀.
pub fn prox_sgd_run(problem: &CompositeProblem, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate_common()?;
    let n = problem.n();
    let mu = problem.mu();
    let eta0 = cfg.eta_or(problem.lmax())?;
    let reg = problem.reg();
    let trace = RunTrace::new(SolverKind::ProxSgd, cfg.seed, OutputKind::FinalIterate, false);
    let mut tracker = Tracker::new(problem, cfg, trace);
    let mut rng = SeededRng::new(cfg.seed);
    let mut x = cfg.initial_point(problem)?;
    tracker.record(1, &x);
    let limit = step_limit(cfg, n as u64);
    let mut t = 0u64;
    while t < limit && !tracker.would_exceed(1) {
        t += 1;
        let i = rng.below(n);
        let step = if mu > 0.0 {
            1.0 / (eta0 + mu * t as f64)
        } else {
            1.0 / (eta0 * (t as f64).sqrt())
        };
        let g = problem.grad_scalar(i, &x);
        let mut y = x.clone();
        problem.add_scaled_row(i, -step * g, &mut y);
        reg.prox_into(&y, step, &mut x);
        tracker.charge(1);
        tracker.record_if_due(1, &x);
    }
    tracker.record(1, &x);
    Ok(single_loop_result(tracker, x.clone(), x, 1))
}

/// Regularized dual averaging with uniform sampling:
/// `x_t = prox_{(t/η_t) R}(x₀ − (t/η_t) ḡ_t)` with `η_t = γ √t`, γ = L_max by
/// default (`eta` overrides γ).
pub fn rda_run(problem: &CompositeProblem, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate_common()?;
    let n = problem.n();
    let gamma = cfg.eta_or(problem.lmax())?;
    let reg = problem.reg();
    let trace = RunTrace::new(SolverKind::Rda, cfg.seed, OutputKind::FinalIterate, false);
    let mut tracker = Tracker::new(problem, cfg, trace);
    let mut rng = SeededRng::new(cfg.seed);
    let x0 = cfg.initial_point(problem)?;
    let mut x = x0.clone();
    let mut gbar = RunningAverage::new(problem.dim());
    let mut g = DenseVector::zeros(problem.dim());
    let mut y = DenseVector::zeros(problem.dim());
    tracker.record(1, &x);
    let limit = step_limit(cfg, n as u64);
    let mut t = 0u64;
    while t < limit && !tracker.would_exceed(1) {
        t += 1;
        let i = rng.below(n);
        g.fill(0.0);
        problem.add_scaled_row(i, problem.grad_scalar(i, &x), &mut g);
        gbar.push(&g);
        let scale = t as f64 / (gamma * (t as f64).sqrt());
        for ((yj, x0j), gj) in y.iter_mut().zip(x0.iter()).zip(gbar.value().iter()) {
            *yj = x0j - scale * gj;
        }
        reg.prox_into(&y, scale, &mut x);
        tracker.charge(1);
        tracker.record_if_due(1, &x);
    }
    tracker.record(1, &x);
    Ok(single_loop_result(tracker, x.clone(), x, 1))
}

/// Prox-SVRG with nonuniform sampling. Each stage runs `m` (default `2n`)
/// steps `x_k = prox_{R/η}(x_{k−1} − g_k/η)` from `x̃_{s−1}` and sets `x̃_s` to
/// the average of `x_1..x_m`, which is also the reported output.
pub fn svrg_run(problem: &CompositeProblem, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate_common()?;
    let n = problem.n();
    let eta = cfg.eta_or(4.0 * problem.lbar())?;
    let m = cfg.m1.unwrap_or(2 * n);
    let reg = problem.reg();
    let q = build_q(problem.lipschitz())?;
    let trace = RunTrace::new(SolverKind::Svrg, cfg.seed, OutputKind::IterateAverage, false);
    let mut tracker = Tracker::new(problem, cfg, trace);
    let mut rng = SeededRng::new(cfg.seed);
    let mut x_tilde = cfg.initial_point(problem)?;
    let mut x = x_tilde.clone();
    let mut g = DenseVector::zeros(problem.dim());
    let mut y = DenseVector::zeros(problem.dim());
    let mut stage_iterates = Vec::new();
    if cfg.keep_stage_iterates {
        stage_iterates.push(StageSnapshot {
            stage: 0,
            grad_evals: 0,
            x_tilde: x_tilde.clone(),
            v_tilde: x_tilde.clone(),
        });
    }
    tracker.record(0, &x_tilde);

    let mut stages_completed = 0;
    let mut s = 1;
    while cfg.stages.is_none_or(|max| s <= max) {
        if tracker.would_exceed(n as u64 + SVRG_STEP_EVALS) {
            break;
        }
        let anchor = SvrgAnchor::new(problem, &x_tilde)?;
        tracker.charge(n as u64);
        x.copy_from_slice(&x_tilde);
        let mut avg = RunningAverage::new(problem.dim());
        let mut truncated = false;
        for _ in 0..m {
            if tracker.would_exceed(SVRG_STEP_EVALS) {
                truncated = true;
                break;
            }
            let i = q.sample(&mut rng);
            anchor.estimate_into(problem, i, &x, q.q(i), &mut g);
            for ((yj, xj), gj) in y.iter_mut().zip(x.iter()).zip(g.iter()) {
                *yj = xj - gj / eta;
            }
            reg.prox_into(&y, 1.0 / eta, &mut x);
            avg.push(&x);
            tracker.charge(SVRG_STEP_EVALS);
            if tracker.due() {
                tracker.record(s, avg.value());
            }
        }
        if avg.count() > 0 {
            x_tilde = avg.value().clone();
        }
        if truncated {
            break;
        }
        stages_completed = s;
        if cfg.keep_stage_iterates {
            stage_iterates.push(StageSnapshot {
                stage: s,
                grad_evals: tracker.evals(),
                x_tilde: x_tilde.clone(),
                v_tilde: x.clone(),
            });
        }
        tracker.record(s, &x_tilde);
        s += 1;
    }
    tracker.record(stages_completed + 1, &x_tilde);
    let mut res = single_loop_result(tracker, x_tilde, x, stages_completed);
    res.stage_iterates = stage_iterates;
    Ok(res)
}

/// SAGA with uniform sampling and step `1/η`, η = 3 L_max by default.
/// Reports the last iterate when μ > 0 and the running average of all
/// iterates when μ = 0.
pub fn saga_run(problem: &CompositeProblem, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate_common()?;
    let n = problem.n();
    let eta = cfg.eta_or(3.0 * problem.lmax())?;
    let reg = problem.reg();
    let averaged = problem.mu() == 0.0;
    let output_kind = if averaged {
        OutputKind::IterateAverage
    } else {
        OutputKind::FinalIterate
    };
    let trace = RunTrace::new(SolverKind::Saga, cfg.seed, output_kind, false);
    let mut tracker = Tracker::new(problem, cfg, trace);
    let mut rng = SeededRng::new(cfg.seed);
    let mut x = cfg.initial_point(problem)?;
    let mut avg = RunningAverage::new(problem.dim());
    let mut g = DenseVector::zeros(problem.dim());
    let mut y = DenseVector::zeros(problem.dim());
    tracker.record(1, &x);
    if tracker.would_exceed(n as u64 + SAGA_STEP_EVALS) {
        return Err(config("budget too small for one SAGA step"));
    }
    let mut table = SagaTable::new(problem, &x, cfg.saga_dense_table)?;
    tracker.charge(n as u64);

    let limit = step_limit(cfg, n as u64);
    let mut t = 0u64;
    while t < limit && !tracker.would_exceed(SAGA_STEP_EVALS) {
        t += 1;
        let i = rng.below(n);
        table.estimate_and_update_into(problem, i, &x, &mut g);
        for ((yj, xj), gj) in y.iter_mut().zip(x.iter()).zip(g.iter()) {
            *yj = xj - gj / eta;
        }
        reg.prox_into(&y, 1.0 / eta, &mut x);
        if averaged {
            avg.push(&x);
        }
        tracker.charge(SAGA_STEP_EVALS);
        if tracker.due() {
            tracker.record(1, if averaged { avg.value() } else { &x });
        }
    }
    let output = if averaged && avg.count() > 0 {
        avg.value().clone()
    } else {
        x.clone()
    };
    tracker.record(1, &output);
    Ok(single_loop_result(tracker, output, x, 1))
}
