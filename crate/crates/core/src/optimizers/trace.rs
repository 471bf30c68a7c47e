use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{SolverConfig, SolverKind};
use crate::error::Result;
use crate::problem::CompositeProblem;

/// Which iterate a trace's objective and NNZ columns are measured at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    XTilde,
    VTilde,
    /// Average of iterates (prox-SVRG last stage, SAGA with μ = 0).
    IterateAverage,
    /// Last raw iterate (SAGA with μ > 0, SGD, RDA, GD).
    FinalIterate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub grad_evals: u64,
    pub stage: usize,
    /// `P` at the reported output. Converted to a gap against a reference
    /// when written out.
    pub objective: f64,
    pub nnz: usize,
    pub wallclock_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub solver: SolverKind,
    pub seed: u64,
    pub guaranteed_output: OutputKind,
    /// False when μ = 0: `ṽ` carries no guarantee and is never the primary
    /// output.
    pub v_tilde_guaranteed: bool,
    pub rows: Vec<TraceRow>,
}

pub const CSV_HEADER: &str = "grad_evals,stage,objective_gap,nnz,wallclock_s";

impl RunTrace {
    pub fn new(solver: SolverKind, seed: u64, guaranteed_output: OutputKind, v_tilde_guaranteed: bool) -> Self {
        Self {
            solver,
            seed,
            guaranteed_output,
            v_tilde_guaranteed,
            rows: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Writes the trace as CSV with `objective_gap = objective − p_star`,
    /// floored at `gap_floor`.
    pub fn write_csv<W: Write>(&self, mut w: W, p_star: f64, gap_floor: f64) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for row in &self.rows {
            let gap = (row.objective - p_star).max(gap_floor);
            writeln!(
                w,
                "{},{},{:e},{},{}",
                row.grad_evals, row.stage, gap, row.nnz, row.wallclock_s
            )?;
        }
        Ok(())
    }
}

/// Gradient-evaluation counter, budget guard and checkpoint recorder shared
/// by all solvers.
pub(crate) struct Tracker<'a> {
    problem: &'a CompositeProblem,
    evals: u64,
    every: u64,
    next_checkpoint: u64,
    budget: Option<u64>,
    started: Option<Instant>,
    pub trace: RunTrace,
}

impl<'a> Tracker<'a> {
    pub fn new(problem: &'a CompositeProblem, cfg: &SolverConfig, trace: RunTrace) -> Self {
        let every = cfg.checkpoint_every.unwrap_or(problem.n() as u64).max(1);
        Self {
            problem,
            evals: 0,
            every,
            next_checkpoint: every,
            budget: cfg.budget,
            started: cfg.record_wallclock.then(Instant::now),
            trace,
        }
    }

    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn charge(&mut self, k: u64) {
        self.evals += k;
    }

    /// True when spending `k` more evaluations would exceed the budget.
    pub fn would_exceed(&self, k: u64) -> bool {
        self.budget.is_some_and(|b| self.evals + k > b)
    }

    pub fn due(&self) -> bool {
        self.evals >= self.next_checkpoint
    }

    /// Records a row at the current count unless one already exists there.
    pub fn record(&mut self, stage: usize, output: &[f64]) {
        if self.trace.rows.last().is_some_and(|r| r.grad_evals >= self.evals) {
            return;
        }
        let wallclock_s = self.started.map_or(0.0, |t| t.elapsed().as_secs_f64());
        self.trace.rows.push(TraceRow {
            grad_evals: self.evals,
            stage,
            objective: self.problem.objective(output),
            nnz: output.iter().filter(|&&v| v != 0.0).count(),
            wallclock_s,
        });
        while self.next_checkpoint <= self.evals {
            self.next_checkpoint += self.every;
        }
    }

    pub fn record_if_due(&mut self, stage: usize, output: &[f64]) {
        if self.due() {
            self.record(stage, output);
        }
    }

    pub fn finish(self) -> (RunTrace, u64) {
        (self.trace, self.evals)
    }
}
