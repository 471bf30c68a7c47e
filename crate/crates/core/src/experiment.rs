//! Experiment driver: high-precision reference solutions, objective-gap and
//! sparsity metrics, and the multi-solver, multi-seed grid that writes one CSV
//! trace per run plus a JSON manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic, normalize_features, parse_libsvm_with, Dataset, ParseOptions, SyntheticSpec};
use crate::error::{config, Error, Result};
use crate::optimizers::{OutputKind, RunResult, SolverConfig, SolverKind};
use crate::problem::{CompositeProblem, Regularizer, SmoothLoss};
use crate::vector::{dist_sq, DenseVector};

/// Full-gradient step cap for [`compute_reference`].
pub const REFERENCE_ITERATION_CAP: u64 = 10_000_000;
/// Extra proximal-gradient sweeps after the stopping test passes.
const REFINEMENT_SWEEPS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub x_star: DenseVector,
    pub p_star: f64,
    pub iterations: u64,
    pub tol: f64,
}

/// `‖x − prox(x − ∇F(x)/L̄, 1/L̄)‖`, zero exactly at minimizers.
pub fn prox_gradient_mapping_norm(problem: &CompositeProblem, x: &[f64]) -> f64 {
    let mut next = DenseVector::zeros(problem.dim());
    prox_gd_step(problem, x, &mut next);
    dist_sq(x, &next).sqrt()
}

fn prox_gd_step(problem: &CompositeProblem, x: &[f64], out: &mut [f64]) {
    let lbar = problem.lbar();
    let grad = problem.smooth_gradient(x);
    let y: Vec<f64> = x.iter().zip(grad.iter()).map(|(xi, gi)| xi - gi / lbar).collect();
    problem.reg().prox_into(&y, 1.0 / lbar, out);
}

/// Runs proximal gradient descent with step `1/L̄` from zero until the
/// gradient-mapping norm is at most `tol · max(1, ‖x‖)`, then refines with a
/// few extra sweeps.
pub fn compute_reference(problem: &CompositeProblem, tol: f64) -> Result<Reference> {
    compute_reference_capped(problem, tol, REFERENCE_ITERATION_CAP)
}

pub fn compute_reference_capped(problem: &CompositeProblem, tol: f64, cap: u64) -> Result<Reference> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference tolerance must be positive, got {tol}"
        )));
    }
    let mut x = DenseVector::zeros(problem.dim());
    let mut next = DenseVector::zeros(problem.dim());
    for it in 1..=cap {
        prox_gd_step(problem, &x, &mut next);
        let step = dist_sq(&x, &next).sqrt();
        std::mem::swap(&mut x, &mut next);
        if step <= tol * x.norm().max(1.0) {
            for _ in 0..REFINEMENT_SWEEPS {
                prox_gd_step(problem, &x, &mut next);
                std::mem::swap(&mut x, &mut next);
            }
            let p_star = problem.objective(&x);
            return Ok(Reference {
                x_star: x,
                p_star,
                iterations: it + REFINEMENT_SWEEPS as u64,
                tol,
            });
        }
    }
    Err(Error::Convergence(format!(
        "reference solver did not reach tolerance {tol} within {cap} full-gradient steps"
    )))
}

/// `P(x) − p_star`, clamped at `−10 · reference_tol` (with a warning) when the
/// reference is looser than the point being measured.
pub fn objective_gap(problem: &CompositeProblem, x: &[f64], p_star: f64, reference_tol: f64) -> f64 {
    let gap = problem.objective(x) - p_star;
    let floor = -10.0 * reference_tol;
    if gap < floor {
        warn!("objective gap {gap:e} below {floor:e}: reference solution is too loose");
        floor
    } else {
        gap
    }
}

/// Number of coordinates that are not exactly zero.
pub fn nnz(x: &[f64]) -> usize {
    x.iter().filter(|&&v| v != 0.0).count()
}

/// Number of coordinates with `|x_j| > threshold`.
pub fn nnz_above(x: &[f64], threshold: f64) -> usize {
    x.iter().filter(|v| v.abs() > threshold).count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// A libsvm text file.
    Path {
        path: PathBuf,
        #[serde(default)]
        dim: Option<usize>,
    },
    Synthetic(SyntheticSpec),
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_reference_tol() -> f64 {
    1e-10
}

/// A grid of runs over one problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Standardize features to zero mean and unit variance.
    #[serde(default)]
    pub normalize: bool,
    pub loss: SmoothLoss,
    #[serde(default)]
    pub l1: f64,
    #[serde(default)]
    pub l2: f64,
    pub solvers: Vec<SolverKind>,
    /// Per-solver settings; seed, budget and cadence are filled from the grid.
    #[serde(default)]
    pub overrides: BTreeMap<SolverKind, SolverConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Gradient-evaluation budget per run.
    pub budget: u64,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
    /// Wall-clock times make traces differ between reruns; off by default.
    #[serde(default)]
    pub record_wallclock: bool,
    /// Also report `|x_j| > threshold` counts for final outputs.
    #[serde(default)]
    pub nnz_threshold: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(config("budget must be positive"));
        }
        Regularizer::from_weights(self.l1, self.l2)?;
        if self.solvers.is_empty() {
            return Err(config("at least one solver is required"));
        }
        if self.seeds.is_empty() {
            return Err(config("at least one seed is required"));
        }
        if !(self.reference_tol > 0.0) {
            return Err(config("reference_tol must be positive"));
        }
        if self.checkpoint_every == Some(0) {
            return Err(config("checkpoint_every must be positive"));
        }
        Ok(())
    }

    pub fn regularizer(&self) -> Result<Regularizer> {
        Regularizer::from_weights(self.l1, self.l2)
    }

    /// Solver settings for one grid cell.
    pub fn solver_config(&self, kind: SolverKind, seed: u64) -> SolverConfig {
        let mut cfg = self.overrides.get(&kind).cloned().unwrap_or_default();
        cfg.seed = seed;
        cfg.budget = Some(cfg.budget.unwrap_or(self.budget).min(self.budget));
        cfg.checkpoint_every = cfg.checkpoint_every.or(self.checkpoint_every);
        cfg.record_wallclock = self.record_wallclock;
        cfg
    }
}

/// Loads (and optionally normalizes) the configured dataset.
pub fn load_dataset(source: &DatasetSource, loss: SmoothLoss, normalize: bool) -> Result<Dataset> {
    let ds = match source {
        DatasetSource::Path { path, dim } => {
            let file = File::open(path)?;
            let opts = ParseOptions {
                dim: *dim,
                binary: loss == SmoothLoss::Logistic,
            };
            parse_libsvm_with(BufReader::new(file), opts)?
        }
        DatasetSource::Synthetic(spec) => generate_synthetic(spec)?.0,
    };
    Ok(if normalize { normalize_features(&ds) } else { ds })
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<CompositeProblem> {
    let ds = load_dataset(&cfg.dataset, cfg.loss, cfg.normalize)?;
    CompositeProblem::from_dataset(&ds, cfg.loss, cfg.regularizer()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver: SolverKind,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_grad_evals: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_nnz: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_nnz_thresholded: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guaranteed_output: Option<OutputKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_tilde_guaranteed: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub n: usize,
    pub d: usize,
    pub lbar: f64,
    pub lmax: f64,
    pub mu: f64,
    pub p_star: f64,
    pub reference_iterations: u64,
    pub runs: Vec<RunRecord>,
}

impl Manifest {
    pub fn all_ok(&self) -> bool {
        self.runs.iter().all(|r| r.status == RunStatus::Ok)
    }
}

pub fn csv_name(kind: SolverKind, seed: u64) -> String {
    format!("{kind}_seed{seed}.csv")
}

/// Runs every (solver, seed) pair concurrently on the current rayon pool and
/// writes `<solver>_seed<seed>.csv` files and `manifest.json` into `out_dir`.
/// Failed runs are recorded in the manifest and do not stop the grid.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    info!(
        "problem: n={} d={} L̄={:.4e} L_max={:.4e} μ={}",
        problem.n(),
        problem.dim(),
        problem.lbar(),
        problem.lmax(),
        problem.mu()
    );
    let reference = compute_reference(&problem, cfg.reference_tol)?;
    info!(
        "reference: P*={:.12e} after {} steps",
        reference.p_star, reference.iterations
    );
    fs::create_dir_all(out_dir)?;

    let cells: Vec<(SolverKind, u64)> = cfg
        .solvers
        .iter()
        .flat_map(|&k| cfg.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let runs = cells
        .par_iter()
        .map(|&(kind, seed)| run_cell(cfg, &problem, &reference, kind, seed, out_dir))
        .collect();

    let manifest = Manifest {
        config: cfg.clone(),
        n: problem.n(),
        d: problem.dim(),
        lbar: problem.lbar(),
        lmax: problem.lmax(),
        mu: problem.mu(),
        p_star: reference.p_star,
        reference_iterations: reference.iterations,
        runs,
    };
    let file = File::create(out_dir.join("manifest.json"))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(manifest)
}

fn run_cell(
    cfg: &ExperimentConfig,
    problem: &CompositeProblem,
    reference: &Reference,
    kind: SolverKind,
    seed: u64,
    out_dir: &Path,
) -> RunRecord {
    let failed = |e: Error| RunRecord {
        solver: kind,
        seed,
        status: RunStatus::Failed,
        error: Some(e.to_string()),
        csv: None,
        total_grad_evals: None,
        final_gap: None,
        final_nnz: None,
        final_nnz_thresholded: None,
        guaranteed_output: None,
        v_tilde_guaranteed: None,
    };
    let solver_cfg = cfg.solver_config(kind, seed);
    let result = match kind.run(problem, &solver_cfg) {
        Ok(r) => r,
        Err(e) => {
            warn!("{kind} seed {seed} failed: {e}");
            return failed(e);
        }
    };
    let name = csv_name(kind, seed);
    if let Err(e) = write_trace(&result, reference, &out_dir.join(&name)) {
        return failed(e);
    }
    RunRecord {
        solver: kind,
        seed,
        status: RunStatus::Ok,
        error: None,
        csv: Some(name),
        total_grad_evals: Some(result.total_grad_evals),
        final_gap: Some(objective_gap(problem, &result.output, reference.p_star, reference.tol)),
        final_nnz: Some(nnz(&result.output)),
        final_nnz_thresholded: cfg.nnz_threshold.map(|t| nnz_above(&result.output, t)),
        guaranteed_output: Some(result.trace.guaranteed_output),
        v_tilde_guaranteed: Some(result.trace.v_tilde_guaranteed),
    }
}

fn write_trace(result: &RunResult, reference: &Reference, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    result
        .trace
        .write_csv(&mut w, reference.p_star, -10.0 * reference.tol)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Sample;
    use crate::vector::SparseVector;

    fn one_d_quadratic(a: f64, b: f64) -> CompositeProblem {
        let s = Sample::new(SparseVector::from_dense(&[a]), b);
        CompositeProblem::new(vec![s], 1, SmoothLoss::SquaredError, Regularizer::None).unwrap()
    }

    #[test]
    fn reference_for_scalar_quadratic() {
        let p = one_d_quadratic(2.0, 3.0);
        let r = compute_reference(&p, 1e-12).unwrap();
        assert!((r.x_star[0] - 1.5).abs() <= 1e-12);
        assert!(r.p_star.abs() <= 1e-20);
    }

    #[test]
    fn reference_rejects_bad_tolerance() {
        let p = one_d_quadratic(1.0, 1.0);
        assert!(compute_reference(&p, 0.0).is_err());
    }

    #[test]
    fn reference_reports_cap() {
        let p = one_d_quadratic(1.0, 1.0).with_regularizer(Regularizer::None).unwrap();
        let samples = vec![
            Sample::new(SparseVector::from_dense(&[1.0, 0.0]), 1.0),
            Sample::new(SparseVector::from_dense(&[0.0, 1e-3]), 1.0),
        ];
        let slow = CompositeProblem::new(samples, 2, SmoothLoss::SquaredError, Regularizer::None).unwrap();
        assert!(compute_reference_capped(&p, 1e-12, 1000).is_ok());
        assert!(matches!(
            compute_reference_capped(&slow, 1e-14, 10),
            Err(Error::Convergence(_))
        ));
    }

    #[test]
    fn gap_is_clamped() {
        let p = one_d_quadratic(1.0, 0.0);
        assert_eq!(objective_gap(&p, &[0.0], 1.0, 1e-6), -10.0 * 1e-6);
        assert_eq!(objective_gap(&p, &[2.0], 0.0, 1e-6), 2.0);
    }

    #[test]
    fn nnz_examples() {
        assert_eq!(nnz(&[0.0, 0.0]), 0);
        assert_eq!(nnz(&[1e-300, 0.0, -2.0]), 2);
        assert_eq!(nnz_above(&[1e-300, 0.0, -2.0], 1e-10), 1);
    }

    #[test]
    fn config_parses_with_defaults() {
        let json = r#"{
            "dataset": {"synthetic": {"n": 10, "d": 3, "k": 1, "label_kind": "regression"}},
            "loss": "squared_error",
            "l1": 0.1,
            "solvers": ["svrda", "saga"],
            "overrides": {"svrda": {"eta": 5.0}},
            "budget": 100
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.seeds, [0]);
        assert_eq!(cfg.reference_tol, 1e-10);
        cfg.validate().unwrap();
        let sc = cfg.solver_config(SolverKind::Svrda, 7);
        assert_eq!(sc.eta, Some(5.0));
        assert_eq!(sc.seed, 7);
        assert_eq!(sc.budget, Some(100));
        let bad = json.replace("\"budget\": 100", "\"budget\": 100, \"bogus\": 1");
        assert!(serde_json::from_str::<ExperimentConfig>(&bad).is_err());
    }
}
