//! Variance-reduced gradient estimators.
//!
//! * [`SvrgAnchor`]: `g = (∇f_i(u) − ∇f_i(x₀)) / (n q_i) + ∇F(x₀)` with an
//!   importance weight for nonuniform sampling.
//! * [`SagaTable`]: `g = ∇f_i(u) − ∇f_i(φ_i) + (1/n) Σ_j ∇f_j(φ_j)`, after which
//!   `φ_i ← u`.
//! * [`RunningAverage`]: `ḡ_t = (1 − 1/t) ḡ_{t−1} + g_t / t`.
//!
//! Gradient-evaluation accounting: an SVRG estimate costs 2, a SAGA estimate
//! costs 1 (the old table gradient is stored), and building either an anchor
//! or a table costs `n`.

use crate::error::{invalid, Result};
use crate::problem::CompositeProblem;
use crate::vector::DenseVector;

/// Gradient evaluations charged for one SVRG estimate.
pub const SVRG_STEP_EVALS: u64 = 2;
/// Gradient evaluations charged for one SAGA estimate.
pub const SAGA_STEP_EVALS: u64 = 1;

/// Stage anchor `x₀` with its cached full gradient.
#[derive(Clone, Debug)]
pub struct SvrgAnchor {
    point: DenseVector,
    full_grad: DenseVector,
}

impl SvrgAnchor {
    /// Computes `∇F(x₀)`; costs `n` gradient evaluations.
    pub fn new(problem: &CompositeProblem, point: &[f64]) -> Result<Self> {
        problem.check_dim(point)?;
        Ok(Self {
            point: point.to_vec().into(),
            full_grad: problem.smooth_gradient(point),
        })
    }

    pub fn point(&self) -> &DenseVector {
        &self.point
    }

    pub fn full_grad(&self) -> &DenseVector {
        &self.full_grad
    }

    /// Writes the estimate at `u` for sampled index `i` into `out`.
    pub fn estimate_into(&self, problem: &CompositeProblem, i: usize, u: &[f64], q_i: f64, out: &mut [f64]) {
        debug_assert!(q_i > 0.0);
        out.copy_from_slice(&self.full_grad);
        let diff = problem.grad_scalar(i, u) - problem.grad_scalar(i, &self.point);
        if diff != 0.0 {
            problem.add_scaled_row(i, diff / (problem.n() as f64 * q_i), out);
        }
    }
}

/// Checked SVRG estimate. Costs [`SVRG_STEP_EVALS`] gradient evaluations.
pub fn svrg_estimate(
    anchor: &SvrgAnchor,
    i: usize,
    u: &[f64],
    q_i: f64,
    problem: &CompositeProblem,
) -> Result<DenseVector> {
    if !(q_i > 0.0) {
        return Err(invalid(format!("sampling probability must be positive, got {q_i}")));
    }
    if i >= problem.n() {
        return Err(invalid(format!("sample index {i} out of range")));
    }
    problem.check_dim(u)?;
    let mut out = DenseVector::zeros(problem.dim());
    anchor.estimate_into(problem, i, u, q_i, &mut out);
    Ok(out)
}

#[derive(Clone, Debug)]
enum TableStorage {
    /// One margin and gradient scalar per sample: `∇f_i(φ_i) = scalar_i · a_i`.
    Scalar { margins: Vec<f64>, scalars: Vec<f64> },
    /// Full per-sample gradient vectors.
    Dense { grads: Vec<DenseVector> },
}

/// SAGA gradient table over points `φ_i` with the running mean of the stored
/// gradients.
#[derive(Clone, Debug)]
pub struct SagaTable {
    storage: TableStorage,
    mean_grad: DenseVector,
    updates_since_refresh: usize,
}

impl SagaTable {
    /// Fills the table with `φ_i = point` for every `i`; costs `n` gradient
    /// evaluations. `dense` selects per-sample vector storage instead of
    /// one scalar per sample.
    pub fn new(problem: &CompositeProblem, point: &[f64], dense: bool) -> Result<Self> {
        problem.check_dim(point)?;
        let n = problem.n();
        let storage = if dense {
            TableStorage::Dense {
                grads: (0..n).map(|i| problem.sample_grad(i, point)).collect(),
            }
        } else {
            let margins: Vec<f64> = (0..n).map(|i| problem.margin(i, point)).collect();
            let scalars = margins
                .iter()
                .enumerate()
                .map(|(i, &z)| problem.grad_scalar_at_margin(i, z))
                .collect();
            TableStorage::Scalar { margins, scalars }
        };
        let mut table = Self {
            storage,
            mean_grad: DenseVector::zeros(problem.dim()),
            updates_since_refresh: 0,
        };
        table.mean_grad = table.recompute_mean(problem);
        Ok(table)
    }

    pub fn mean_grad(&self) -> &DenseVector {
        &self.mean_grad
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, TableStorage::Dense { .. })
    }

    /// Stored margins `a_iᵀφ_i`, available for scalar storage.
    pub fn margins(&self) -> Option<&[f64]> {
        match &self.storage {
            TableStorage::Scalar { margins, .. } => Some(margins),
            TableStorage::Dense { .. } => None,
        }
    }

    /// The stored gradient `∇f_i(φ_i)` as a dense vector.
    pub fn stored_grad(&self, problem: &CompositeProblem, i: usize) -> DenseVector {
        match &self.storage {
            TableStorage::Scalar { scalars, .. } => {
                let mut g = DenseVector::zeros(problem.dim());
                problem.add_scaled_row(i, scalars[i], &mut g);
                g
            }
            TableStorage::Dense { grads } => grads[i].clone(),
        }
    }

    /// `(1/n) Σ ∇f_i(φ_i)` from scratch.
    pub fn recompute_mean(&self, problem: &CompositeProblem) -> DenseVector {
        match &self.storage {
            TableStorage::Scalar { scalars, .. } => problem.gradient_from_scalars(scalars),
            TableStorage::Dense { grads } => {
                let mut mean = DenseVector::zeros(problem.dim());
                for g in grads {
                    mean.axpy(1.0, g);
                }
                mean.scale(1.0 / grads.len() as f64);
                mean
            }
        }
    }

    /// Writes `g = ∇f_i(u) − ∇f_i(φ_i) + mean` into `out`, then sets `φ_i ← u`
    /// and updates the mean incrementally. The mean is recomputed from
    /// scratch every `n` updates.
    pub fn estimate_and_update_into(&mut self, problem: &CompositeProblem, i: usize, u: &[f64], out: &mut [f64]) {
        let n = problem.n();
        out.copy_from_slice(&self.mean_grad);
        match &mut self.storage {
            TableStorage::Scalar { margins, scalars } => {
                let z = problem.margin(i, u);
                let fresh = problem.grad_scalar_at_margin(i, z);
                let diff = fresh - scalars[i];
                if diff != 0.0 {
                    problem.add_scaled_row(i, diff, out);
                    problem.add_scaled_row(i, diff / n as f64, &mut self.mean_grad);
                }
                margins[i] = z;
                scalars[i] = fresh;
            }
            TableStorage::Dense { grads } => {
                let fresh = problem.sample_grad(i, u);
                let old = &grads[i];
                for ((o, m), (f, g)) in out
                    .iter_mut()
                    .zip(self.mean_grad.iter_mut())
                    .zip(fresh.iter().zip(old.iter()))
                {
                    let diff = f - g;
                    *o += diff;
                    *m += diff / n as f64;
                }
                grads[i] = fresh;
            }
        }
        self.updates_since_refresh += 1;
        if self.updates_since_refresh >= n {
            self.mean_grad = self.recompute_mean(problem);
            self.updates_since_refresh = 0;
        }
    }
}

/// Checked SAGA estimate and table update. Costs [`SAGA_STEP_EVALS`].
pub fn saga_estimate_and_update(
    table: &mut SagaTable,
    i: usize,
    u: &[f64],
    problem: &CompositeProblem,
) -> Result<DenseVector> {
    if i >= problem.n() {
        return Err(invalid(format!("sample index {i} out of range")));
    }
    problem.check_dim(u)?;
    let mut out = DenseVector::zeros(problem.dim());
    table.estimate_and_update_into(problem, i, u, &mut out);
    Ok(out)
}

/// Running mean `ḡ_t` of the estimates pushed so far.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningAverage {
    value: DenseVector,
    count: u64,
}

impl RunningAverage {
    pub fn new(d: usize) -> Self {
        Self {
            value: DenseVector::zeros(d),
            count: 0,
        }
    }

    pub fn value(&self) -> &DenseVector {
        &self.value
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `ḡ_t = (1 − 1/t) ḡ_{t−1} + (1/t) g`
    pub fn push(&mut self, g: &[f64]) {
        debug_assert_eq!(g.len(), self.value.len());
        self.count += 1;
        let t = self.count as f64;
        let keep = 1.0 - 1.0 / t;
        let add = 1.0 / t;
        for (v, gi) in self.value.iter_mut().zip(g) {
            *v = keep * *v + add * gi;
        }
    }
}

pub fn running_average_push(mut avg: RunningAverage, g: &[f64]) -> RunningAverage {
    avg.push(g);
    avg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Regularizer, Sample, SmoothLoss};
    use crate::sampling::build_q;
    use crate::vector::SparseVector;

    fn problem(loss: SmoothLoss) -> CompositeProblem {
        let rows: [(&[f64], f64); 3] = [
            (&[1.0, -0.5, 0.0], 1.0),
            (&[0.0, 2.0, 1.5], -1.0),
            (&[-1.0, 0.25, 3.0], 1.0),
        ];
        let samples = rows
            .iter()
            .map(|(a, b)| Sample::new(SparseVector::from_dense(a), *b))
            .collect();
        CompositeProblem::new(samples, 3, loss, Regularizer::None).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn svrg_at_anchor_returns_anchor_gradient() {
        let p = problem(SmoothLoss::Logistic);
        let x0 = [0.1, -0.2, 0.3];
        let anchor = SvrgAnchor::new(&p, &x0).unwrap();
        let q = build_q(p.lipschitz()).unwrap();
        for i in 0..p.n() {
            let g = svrg_estimate(&anchor, i, &x0, q.q(i), &p).unwrap();
            assert_eq!(&g, anchor.full_grad());
        }
    }

    #[test]
    fn svrg_single_sample_is_full_gradient() {
        let s = Sample::new(SparseVector::from_dense(&[0.5, 2.0]), 1.0);
        let p = CompositeProblem::new(vec![s], 2, SmoothLoss::SquaredError, Regularizer::None).unwrap();
        let anchor = SvrgAnchor::new(&p, &[1.0, -1.0]).unwrap();
        let u = [0.25, 0.5];
        let g = svrg_estimate(&anchor, 0, &u, 1.0, &p).unwrap();
        assert!(close(&g, &p.smooth_gradient(&u), 1e-15));
    }

    #[test]
    fn svrg_rejects_nonpositive_q() {
        let p = problem(SmoothLoss::SquaredError);
        let anchor = SvrgAnchor::new(&p, &[0.0; 3]).unwrap();
        assert!(svrg_estimate(&anchor, 0, &[0.0; 3], 0.0, &p).is_err());
        assert!(svrg_estimate(&anchor, 0, &[0.0; 3], -0.5, &p).is_err());
        assert!(svrg_estimate(&anchor, 5, &[0.0; 3], 0.5, &p).is_err());
    }

    #[test]
    fn saga_at_table_point_returns_mean() {
        for dense in [false, true] {
            let p = problem(SmoothLoss::Logistic);
            let phi = [0.3, 0.1, -0.4];
            let mut table = SagaTable::new(&p, &phi, dense).unwrap();
            let mean = table.mean_grad().clone();
            let g = saga_estimate_and_update(&mut table, 1, &phi, &p).unwrap();
            assert_eq!(g, mean);
            assert!(close(table.mean_grad(), &mean, 1e-15));
        }
    }

    #[test]
    fn saga_single_sample_is_full_gradient() {
        let s = Sample::new(SparseVector::from_dense(&[1.5, -1.0]), -1.0);
        let p = CompositeProblem::new(vec![s], 2, SmoothLoss::Logistic, Regularizer::None).unwrap();
        let mut table = SagaTable::new(&p, &[2.0, 2.0], false).unwrap();
        let u = [-0.5, 0.75];
        let g = saga_estimate_and_update(&mut table, 0, &u, &p).unwrap();
        assert!(close(&g, &p.smooth_gradient(&u), 1e-15));
    }

    #[test]
    fn saga_table_initialised_at_point() {
        let p = problem(SmoothLoss::SquaredError);
        let x = [0.5, -1.0, 2.0];
        let table = SagaTable::new(&p, &x, false).unwrap();
        let margins = table.margins().unwrap();
        for (i, &z) in margins.iter().enumerate() {
            assert_eq!(z, p.margin(i, &x));
            assert_eq!(table.stored_grad(&p, i), p.sample_grad(i, &x));
        }
        assert!(close(table.mean_grad(), &p.smooth_gradient(&x), 1e-15));
    }

    #[test]
    fn running_average_examples() {
        let mut avg = RunningAverage::new(2);
        avg.push(&[1.0, -2.0]);
        assert_eq!(avg.value().as_slice(), &[1.0, -2.0]);
        avg.push(&[1.0, -2.0]);
        assert_eq!(avg.value().as_slice(), &[1.0, -2.0]);

        let avg = [[1.0], [3.0], [5.0]]
            .iter()
            .fold(RunningAverage::new(1), |a, g| running_average_push(a, g));
        assert_eq!(avg.value().as_slice(), &[3.0]);
        assert_eq!(avg.count(), 3);
    }
}
