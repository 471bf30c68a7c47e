//! Multistage variance-reduced dual averaging.
//!
//! Each stage `s` starts from `x₀ = x̃_{s−1}`, `v₀ = (1 − α) ṽ_{s−1} + α x̃_{s−1}`,
//! `u₀ = v₀`, `ḡ₀ = 0` and runs `m_s` inner steps of
//!
//! ```text
//! g_t  = variance-reduced estimate of ∇F(u_{t−1})
//! ḡ_t  = (1 − 1/t) ḡ_{t−1} + g_t / t
//! v_t  = prox_{(t/η) R}(v₀ − (t/η) ḡ_t)           dual averaging
//! x_t  = prox_{(1/(ηt)) R}(u_{t−1} − g_t / (ηt))   gradient step
//! u_t  = (1 − 1/(t+1)) x_t + v_t / (t+1)
//! ```
//!
//! ending with `x̃_s = x_{m_s}`, `ṽ_s = v_{m_s}`. SVRDA draws `i_t` from the
//! Lipschitz-proportional distribution and uses the SVRG anchor estimator;
//! SADA draws uniformly and uses a SAGA table refilled at every stage start.

use log::debug;

use super::{
    default_alpha, default_m1, stage_length, OutputChoice, OutputKind, RunResult, RunTrace, SolverConfig, SolverKind,
    StageSnapshot, Tracker,
};
use crate::error::{config, invalid, Result};
use crate::estimators::{RunningAverage, SagaTable, SvrgAnchor, SAGA_STEP_EVALS, SVRG_STEP_EVALS};
use crate::problem::{CompositeProblem, Regularizer};
use crate::sampling::{build_q, SamplingDistribution, SeededRng};
use crate::vector::DenseVector;

/// Inner-loop state of one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageState {
    pub x: DenseVector,
    pub v: DenseVector,
    pub u: DenseVector,
    pub gbar: RunningAverage,
    pub v0: DenseVector,
    pub t: u64,
    /// The most recent estimate `g_t`.
    pub g: DenseVector,
    scratch: DenseVector,
}

impl StageState {
    /// Stage start with `x = x₀` and `u = v = v₀`.
    pub fn new(x0: &[f64], v0: &[f64]) -> Self {
        let d = x0.len();
        Self {
            x: x0.to_vec().into(),
            v: v0.to_vec().into(),
            u: v0.to_vec().into(),
            gbar: RunningAverage::new(d),
            v0: v0.to_vec().into(),
            t: 0,
            g: DenseVector::zeros(d),
            scratch: DenseVector::zeros(d),
        }
    }

    /// Applies the dual-averaging, gradient and coupling updates for the
    /// estimate already stored in `self.g`.
    fn advance(&mut self, reg: &Regularizer, eta: f64) {
        self.t += 1;
        let t = self.t as f64;
        self.gbar.push(&self.g);

        let da_scale = t / eta;
        for ((s, v0), gb) in self
            .scratch
            .iter_mut()
            .zip(self.v0.iter())
            .zip(self.gbar.value().iter())
        {
            *s = v0 - da_scale * gb;
        }
        reg.prox_into(&self.scratch, da_scale, &mut self.v);

        let gd_scale = 1.0 / (eta * t);
        for ((s, u), g) in self.scratch.iter_mut().zip(self.u.iter()).zip(self.g.iter()) {
            *s = u - gd_scale * g;
        }
        reg.prox_into(&self.scratch, gd_scale, &mut self.x);

        let w = 1.0 / (t + 1.0);
        for ((u, x), v) in self.u.iter_mut().zip(self.x.iter()).zip(self.v.iter()) {
            *u = (1.0 - w) * x + w * v;
        }
    }
}

fn check_step_args(state: &StageState, problem: &CompositeProblem, i: usize, eta: f64) -> Result<()> {
    if i >= problem.n() {
        return Err(invalid(format!("sample index {i} out of range")));
    }
    if !(eta > 0.0) {
        return Err(invalid(format!("eta must be positive, got {eta}")));
    }
    problem.check_dim(&state.x)
}

/// One SVRDA inner step with sampled index `i` of probability `q_i`.
pub fn svrda_inner_step(
    state: &mut StageState,
    anchor: &SvrgAnchor,
    i: usize,
    q_i: f64,
    eta: f64,
    problem: &CompositeProblem,
) -> Result<()> {
    check_step_args(state, problem, i, eta)?;
    if !(q_i > 0.0) {
        return Err(invalid(format!("sampling probability must be positive, got {q_i}")));
    }
    anchor.estimate_into(problem, i, &state.u, q_i, &mut state.g);
    state.advance(problem.reg(), eta);
    Ok(())
}

/// One SADA inner step with uniformly sampled index `i`.
pub fn sada_inner_step(
    state: &mut StageState,
    table: &mut SagaTable,
    i: usize,
    eta: f64,
    problem: &CompositeProblem,
) -> Result<()> {
    check_step_args(state, problem, i, eta)?;
    table.estimate_and_update_into(problem, i, &state.u, &mut state.g);
    state.advance(problem.reg(), eta);
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Method {
    Svrda,
    Sada,
}

enum StageEstimator<'q> {
    Svrg {
        anchor: SvrgAnchor,
        q: &'q SamplingDistribution,
    },
    Saga {
        table: SagaTable,
    },
}

pub fn svrda_run(problem: &CompositeProblem, cfg: &SolverConfig) -> Result<RunResult> {
    run(problem, cfg, Method::Svrda)
}

pub fn sada_run(problem: &CompositeProblem, cfg: &SolverConfig) -> Result<RunResult> {
    run(problem, cfg, Method::Sada)
}

fn run(problem: &CompositeProblem, cfg: &SolverConfig, method: Method) -> Result<RunResult> {
    cfg.validate_common()?;
    let n = problem.n();
    let mu = problem.mu();
    let (kind, smoothness, step_evals) = match method {
        Method::Svrda => (SolverKind::Svrda, problem.lbar(), SVRG_STEP_EVALS),
        Method::Sada => (SolverKind::Sada, problem.lmax(), SAGA_STEP_EVALS),
    };
    let eta = cfg.eta_or(match method {
        Method::Svrda => 4.0 * problem.lbar(),
        Method::Sada => 5.0 * problem.lmax(),
    })?;
    if eta <= smoothness {
        return Err(config(format!(
            "{kind} needs eta > {smoothness} (the smoothness constant), got {eta}"
        )));
    }
    let alpha = default_alpha(mu, cfg.alpha_override)?;
    let m1 = cfg.m1.unwrap_or_else(|| default_m1(eta, mu, n));
    if let Some(stages) = cfg.stages {
        // surface overflow before doing any work
        stage_length(m1, stages, mu)?;
    }
    let v_guaranteed = mu > 0.0;
    let output_kind = match cfg.output {
        OutputChoice::XTilde => OutputKind::XTilde,
        OutputChoice::VTilde if v_guaranteed => OutputKind::VTilde,
        OutputChoice::VTilde => {
            return Err(config("v_tilde output carries no guarantee when mu = 0; use x_tilde"));
        }
    };
    debug!("{kind}: eta={eta} m1={m1} alpha={alpha} mu={mu}");

    let q = match method {
        Method::Svrda => Some(build_q(problem.lipschitz())?),
        Method::Sada => None,
    };
    let mut rng = SeededRng::new(cfg.seed);
    let mut tracker = Tracker::new(problem, cfg, RunTrace::new(kind, cfg.seed, output_kind, v_guaranteed));

    let mut x_tilde = cfg.initial_point(problem)?;
    let mut v_tilde = x_tilde.clone();
    let pick = |x: &DenseVector, v: &DenseVector| -> DenseVector {
        match output_kind {
            OutputKind::VTilde => v.clone(),
            _ => x.clone(),
        }
    };
    let mut stage_iterates = Vec::new();
    if cfg.keep_stage_iterates {
        stage_iterates.push(StageSnapshot {
            stage: 0,
            grad_evals: 0,
            x_tilde: x_tilde.clone(),
            v_tilde: v_tilde.clone(),
        });
    }
    tracker.record(0, &pick(&x_tilde, &v_tilde));

    let mut stages_completed = 0;
    let mut s = 1;
    'stages: while cfg.stages.is_none_or(|max| s <= max) {
        if tracker.would_exceed(n as u64 + step_evals) {
            break;
        }
        let m_s = stage_length(m1, s, mu)?;
        let mut estimator = match method {
            Method::Svrda => StageEstimator::Svrg {
                anchor: SvrgAnchor::new(problem, &x_tilde)?,
                q: q.as_ref().expect("distribution built for svrda"),
            },
            Method::Sada => StageEstimator::Saga {
                table: SagaTable::new(problem, &x_tilde, cfg.saga_dense_table)?,
            },
        };
        tracker.charge(n as u64);

        let v0: DenseVector = v_tilde
            .iter()
            .zip(x_tilde.iter())
            .map(|(v, x)| (1.0 - alpha) * v + alpha * x)
            .collect();
        let mut state = StageState::new(&x_tilde, &v0);
        tracker.record_if_due(s, &pick(&x_tilde, &v_tilde));

        let mut truncated = false;
        for _ in 0..m_s {
            if tracker.would_exceed(step_evals) {
                truncated = true;
                break;
            }
            match &mut estimator {
                StageEstimator::Svrg { anchor, q } => {
                    let i = q.sample(&mut rng);
                    anchor.estimate_into(problem, i, &state.u, q.q(i), &mut state.g);
                }
                StageEstimator::Saga { table } => {
                    let i = rng.below(n);
                    table.estimate_and_update_into(problem, i, &state.u, &mut state.g);
                }
            }
            state.advance(problem.reg(), eta);
            tracker.charge(step_evals);
            if tracker.due() {
                tracker.record(s, &pick(&state.x, &state.v));
            }
        }

        if state.t > 0 {
            x_tilde = state.x;
            v_tilde = state.v;
        }
        if truncated {
            tracker.record(s, &pick(&x_tilde, &v_tilde));
            break 'stages;
        }
        stages_completed = s;
        if cfg.keep_stage_iterates {
            stage_iterates.push(StageSnapshot {
                stage: s,
                grad_evals: tracker.evals(),
                x_tilde: x_tilde.clone(),
                v_tilde: v_tilde.clone(),
            });
        }
        tracker.record(s, &pick(&x_tilde, &v_tilde));
        s += 1;
    }

    let output = pick(&x_tilde, &v_tilde);
    let (trace, total_grad_evals) = tracker.finish();
    Ok(RunResult {
        x_tilde,
        v_tilde,
        output,
        trace,
        total_grad_evals,
        stages_completed,
        stage_iterates,
    })
}
