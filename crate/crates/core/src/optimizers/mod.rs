//! Solvers for the composite problem.
//!
//! The multistage dual-averaging solvers ([`svrda_run`], [`sada_run`]) and the
//! baselines ([`prox_gd_run`], [`prox_sgd_run`], [`rda_run`], [`svrg_run`],
//! [`saga_run`]) share [`SolverConfig`], [`RunResult`] and the trace format.

mod baselines;
mod multistage;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baselines::{prox_gd_run, prox_sgd_run, rda_run, saga_run, svrg_run};
pub use multistage::{sada_inner_step, sada_run, svrda_inner_step, svrda_run, StageState};
pub(crate) use trace::Tracker;
pub use trace::{OutputKind, RunTrace, TraceRow};

use crate::error::{config, Error, Result};
use crate::problem::CompositeProblem;
use crate::vector::DenseVector;

/// Which final iterate of a multistage solver is reported as its output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputChoice {
    /// `x̃_S`, the gradient-step iterate. Valid for every μ.
    #[default]
    XTilde,
    /// `ṽ_S`, the dual-averaging iterate. Only guaranteed when μ > 0.
    VTilde,
}

/// Solver parameters. Fields left as `None` take the solver's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Inverse step size η.
    pub eta: Option<f64>,
    /// First-stage inner iteration count m₁ (inner loop length for SVRG).
    pub m1: Option<usize>,
    /// Number of stages S (passes for single-loop solvers).
    pub stages: Option<usize>,
    /// Replaces the default α of the stage anchor mix; must lie in [0, 1].
    pub alpha_override: Option<f64>,
    pub seed: u64,
    /// Trace cadence in gradient evaluations; defaults to `n`.
    pub checkpoint_every: Option<u64>,
    /// Gradient-evaluation budget. The run stops before any step that would
    /// exceed it.
    pub budget: Option<u64>,
    pub output: OutputChoice,
    /// Store full per-sample gradient vectors in the SAGA table.
    pub saga_dense_table: bool,
    /// Keep `(x̃_s, ṽ_s)` for every stage in the result.
    pub keep_stage_iterates: bool,
    pub record_wallclock: bool,
    /// Starting point `x̃₀`; zero when absent.
    pub initial_point: Option<DenseVector>,
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub(crate) fn initial_point(&self, problem: &CompositeProblem) -> Result<DenseVector> {
        match &self.initial_point {
            Some(x) => {
                problem.check_dim(x)?;
                if !x.is_finite() {
                    return Err(config("initial point must be finite"));
                }
                Ok(x.clone())
            }
            None => Ok(DenseVector::zeros(problem.dim())),
        }
    }

    pub(crate) fn eta_or(&self, default: f64) -> Result<f64> {
        let eta = self.eta.unwrap_or(default);
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(config(format!("eta must be positive and finite, got {eta}")));
        }
        Ok(eta)
    }

    fn validate_common(&self) -> Result<()> {
        if self.m1 == Some(0) {
            return Err(config("m1 must be at least 1"));
        }
        if self.stages == Some(0) {
            return Err(config("stages must be at least 1"));
        }
        if self.checkpoint_every == Some(0) {
            return Err(config("checkpoint_every must be at least 1"));
        }
        if self.budget == Some(0) {
            return Err(config("budget must be positive"));
        }
        if self.stages.is_none() && self.budget.is_none() {
            return Err(config("either stages or budget must be set"));
        }
        Ok(())
    }
}

/// `(x̃_s, ṽ_s)` at the end of stage `s`; stage 0 is the starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct StageSnapshot {
    pub stage: usize,
    pub grad_evals: u64,
    pub x_tilde: DenseVector,
    pub v_tilde: DenseVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Final gradient-step iterate, or the guaranteed average for averaging
    /// baselines.
    pub x_tilde: DenseVector,
    /// Final dual-averaging iterate; for baselines, the last raw iterate.
    pub v_tilde: DenseVector,
    /// The iterate the trace reports, per the solver's output rule.
    pub output: DenseVector,
    pub trace: RunTrace,
    pub total_grad_evals: u64,
    pub stages_completed: usize,
    /// Filled when `keep_stage_iterates` is set.
    pub stage_iterates: Vec<StageSnapshot>,
}

/// `m_s`: `m₁` when μ > 0, `2^{s−1} m₁` when μ = 0.
pub fn stage_length(m1: usize, s: usize, mu: f64) -> Result<usize> {
    if s == 0 {
        return Err(config("stage index starts at 1"));
    }
    if mu > 0.0 {
        return Ok(m1);
    }
    u32::try_from(s - 1)
        .ok()
        .and_then(|shift| 1usize.checked_shl(shift))
        .and_then(|factor| factor.checked_mul(m1))
        .ok_or_else(|| config(format!("stage length 2^{} · {m1} overflows", s - 1)))
}

/// α for the stage anchor mix `v₀ = (1 − α) ṽ + α x̃`.
pub fn default_alpha(mu: f64, override_alpha: Option<f64>) -> Result<f64> {
    match override_alpha {
        Some(a) if (0.0..=1.0).contains(&a) => Ok(a),
        Some(a) => Err(config(format!("alpha must lie in [0, 1], got {a}"))),
        None if mu > 0.0 => Ok(0.25),
        None => Ok(0.0),
    }
}

/// Default m₁: `⌈η / (2μ)⌉` when μ > 0, `n` otherwise.
///
/// Quotients within 1e-9 of an integer snap to it, so that exact settings
/// such as η = 4, μ = 0.1 are not pushed up by rounding error.
pub fn default_m1(eta: f64, mu: f64, n: usize) -> usize {
    if mu > 0.0 {
        let ratio = eta / (2.0 * mu);
        let nearest = ratio.round();
        let m = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest
        } else {
            ratio.ceil()
        };
        (m as usize).max(1)
    } else {
        n
    }
}

/// Identifies a solver in configs, traces and file names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Svrda,
    Sada,
    ProxGd,
    ProxSgd,
    Rda,
    Svrg,
    Saga,
}

impl SolverKind {
    pub const ALL: [SolverKind; 7] = [
        SolverKind::Svrda,
        SolverKind::Sada,
        SolverKind::ProxGd,
        SolverKind::ProxSgd,
        SolverKind::Rda,
        SolverKind::Svrg,
        SolverKind::Saga,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Svrda => "svrda",
            SolverKind::Sada => "sada",
            SolverKind::ProxGd => "prox_gd",
            SolverKind::ProxSgd => "prox_sgd",
            SolverKind::Rda => "rda",
            SolverKind::Svrg => "svrg",
            SolverKind::Saga => "saga",
        }
    }

    pub fn run(self, problem: &CompositeProblem, cfg: &SolverConfig) -> Result<RunResult> {
        match self {
            SolverKind::Svrda => svrda_run(problem, cfg),
            SolverKind::Sada => sada_run(problem, cfg),
            SolverKind::ProxGd => prox_gd_run(problem, cfg),
            SolverKind::ProxSgd => prox_sgd_run(problem, cfg),
            SolverKind::Rda => rda_run(problem, cfg),
            SolverKind::Svrg => svrg_run(problem, cfg),
            SolverKind::Saga => saga_run(problem, cfg),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| config(format!("unknown solver '{s}'")))
    }
}
