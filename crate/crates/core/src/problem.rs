//! The composite objective `P(x) = F(x) + R(x)` with `F = (1/n) Σ f_i`.
//!
//! Every `f_i` is a generalized linear loss `ℓ(a_iᵀx, b_i)`, so a per-sample
//! gradient is a scalar multiple of the feature row. Regularizers are
//! separable and have closed-form proximal mappings.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Normalization};
use crate::error::{invalid, Result};
use crate::vector::{DenseVector, SparseVector};

/// Floor applied to per-sample Lipschitz constants so that every sampling
/// probability is strictly positive.
pub const LIPSCHITZ_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothLoss {
    /// `(1/2)(aᵀx − b)²`
    SquaredError,
    /// `log(1 + exp(−b aᵀx))` with `b ∈ {+1, −1}`
    Logistic,
}

impl SmoothLoss {
    /// Loss as a function of the margin `z = aᵀx`.
    pub fn value_at(self, z: f64, label: f64) -> f64 {
        match self {
            SmoothLoss::SquaredError => 0.5 * (z - label) * (z - label),
            SmoothLoss::Logistic => log1p_exp(-label * z),
        }
    }

    /// Derivative of the loss with respect to the margin.
    pub fn derivative_at(self, z: f64, label: f64) -> f64 {
        match self {
            SmoothLoss::SquaredError => z - label,
            SmoothLoss::Logistic => {
                // −b / (1 + exp(b z)) = −b σ(−b z)
                let m = label * z;
                if m > 0.0 {
                    let e = (-m).exp();
                    -label * e / (1.0 + e)
                } else {
                    -label / (1.0 + m.exp())
                }
            }
        }
    }

    /// Upper bound on the second derivative with respect to the margin.
    pub fn curvature(self) -> f64 {
        match self {
            SmoothLoss::SquaredError => 1.0,
            SmoothLoss::Logistic => 0.25,
        }
    }
}

/// `log(1 + exp(z))` without overflow.
pub fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// One training example `(a_i, b_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: SparseVector,
    pub label: f64,
}

impl Sample {
    pub fn new(features: SparseVector, label: f64) -> Self {
        Self { features, label }
    }
}

fn check_sample_dim(s: &Sample, x: &[f64]) -> Result<()> {
    if s.features.min_dim() > x.len() {
        return Err(invalid(format!(
            "sample has feature index {} but x has dimension {}",
            s.features.min_dim() - 1,
            x.len()
        )));
    }
    Ok(())
}

pub fn loss_value(loss: SmoothLoss, s: &Sample, x: &[f64]) -> Result<f64> {
    check_sample_dim(s, x)?;
    Ok(loss.value_at(s.features.dot(x), s.label))
}

/// `∇f_i(x)`, supported on the support of `a_i`.
pub fn loss_grad(loss: SmoothLoss, s: &Sample, x: &[f64]) -> Result<SparseVector> {
    check_sample_dim(s, x)?;
    let g = loss.derivative_at(s.features.dot(x), s.label);
    Ok(s.features.scaled(g))
}

/// Lipschitz constant of `∇f_i`, before flooring.
pub fn lipschitz_constant(loss: SmoothLoss, s: &Sample) -> f64 {
    loss.curvature() * s.features.norm_sq()
}

/// A separable regularizer `R(x) = λ1‖x‖₁ + (λ2/2)‖x‖₂²` and its special cases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    None,
    L1 { l1: f64 },
    SquaredL2 { l2: f64 },
    ElasticNet { l1: f64, l2: f64 },
}

impl Regularizer {
    /// Picks the narrowest kind that represents `λ1‖x‖₁ + (λ2/2)‖x‖²`.
    pub fn from_weights(l1: f64, l2: f64) -> Result<Self> {
        let reg = match (l1 > 0.0, l2 > 0.0) {
            (false, false) => Regularizer::None,
            (true, false) => Regularizer::L1 { l1 },
            (false, true) => Regularizer::SquaredL2 { l2 },
            (true, true) => Regularizer::ElasticNet { l1, l2 },
        };
        // catches negative and NaN weights, which fall into the branches above
        reg.validate_weights(l1, l2)?;
        Ok(reg)
    }

    fn validate_weights(&self, l1: f64, l2: f64) -> Result<()> {
        for (name, w) in [("l1", l1), ("l2", l2)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid(format!("{name} weight must be finite and ≥ 0, got {w}")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_weights(self.l1(), self.l2())
    }

    pub fn l1(&self) -> f64 {
        match *self {
            Regularizer::L1 { l1 } | Regularizer::ElasticNet { l1, .. } => l1,
            _ => 0.0,
        }
    }

    pub fn l2(&self) -> f64 {
        match *self {
            Regularizer::SquaredL2 { l2 } | Regularizer::ElasticNet { l2, .. } => l2,
            _ => 0.0,
        }
    }

    /// Strong-convexity modulus μ.
    pub fn mu(&self) -> f64 {
        self.l2()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (l1, l2) = (self.l1(), self.l2());
        let mut v = 0.0;
        if l1 != 0.0 {
            v += l1 * x.iter().map(|xi| xi.abs()).sum::<f64>();
        }
        if l2 != 0.0 {
            v += 0.5 * l2 * x.iter().map(|xi| xi * xi).sum::<f64>();
        }
        v
    }

    /// `argmin_x (1/2)‖x − y‖² + c R(x)`, checked.
    pub fn prox(&self, y: &[f64], c: f64) -> Result<DenseVector> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("prox scale must be positive, got {c}")));
        }
        let mut out = DenseVector::zeros(y.len());
        self.prox_into(y, c, &mut out);
        Ok(out)
    }

    /// Unchecked prox writing into `out`. `c` must be positive.
    pub fn prox_into(&self, y: &[f64], c: f64, out: &mut [f64]) {
        debug_assert!(c > 0.0);
        debug_assert_eq!(y.len(), out.len());
        let threshold = c * self.l1();
        let shrink = 1.0 / (1.0 + c * self.l2());
        match self {
            Regularizer::None => out.copy_from_slice(y),
            Regularizer::L1 { .. } => {
                for (o, &yi) in out.iter_mut().zip(y) {
                    *o = soft_threshold(yi, threshold);
                }
            }
            Regularizer::SquaredL2 { .. } => {
                for (o, &yi) in out.iter_mut().zip(y) {
                    *o = yi * shrink;
                }
            }
            Regularizer::ElasticNet { .. } => {
                for (o, &yi) in out.iter_mut().zip(y) {
                    *o = soft_threshold(yi, threshold) * shrink;
                }
            }
        }
    }

    /// One element of `∂R(x)`, using 0 for the ℓ1 part at zero coordinates.
    pub fn subgradient(&self, x: &[f64]) -> DenseVector {
        let (l1, l2) = (self.l1(), self.l2());
        x.iter()
            .map(|&xi| {
                let s = if xi > 0.0 {
                    1.0
                } else if xi < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                l1 * s + l2 * xi
            })
            .collect()
    }
}

/// `sign(y) max(|y| − t, 0)`, returning an exact zero inside the threshold.
pub fn soft_threshold(y: f64, t: f64) -> f64 {
    if y > t {
        y - t
    } else if y < -t {
        y + t
    } else {
        0.0
    }
}

/// Lazily applied per-feature standardization: the effective row is
/// `ã_ij = (a_ij − mean_j) · weight_j` with `weight_j = 1/std_j`, or 0 for
/// constant features.
#[derive(Clone, Debug)]
struct Centering {
    mean: Vec<f64>,
    weight: Vec<f64>,
    /// `mean_j · weight_j`
    shift: Vec<f64>,
}

impl Centering {
    fn from_normalization(norm: &Normalization) -> Self {
        let weight: Vec<f64> = norm
            .std
            .iter()
            .zip(&norm.constant)
            .map(|(&s, &c)| if c { 0.0 } else { 1.0 / s })
            .collect();
        let shift = norm.mean.iter().zip(&weight).map(|(m, w)| m * w).collect();
        Self {
            mean: norm.mean.clone(),
            weight,
            shift,
        }
    }

    /// `Σ_j mean_j weight_j x_j`, shared by every row.
    fn offset(&self, x: &[f64]) -> f64 {
        crate::vector::dot(&self.shift, x)
    }

    fn row_norm_sq(&self, row: &SparseVector) -> f64 {
        let mut total: f64 = self.shift.iter().map(|s| s * s).sum();
        for (j, a) in row.iter() {
            let w = self.weight[j];
            let centered = (a - self.mean[j]) * w;
            total += centered * centered - self.shift[j] * self.shift[j];
        }
        total.max(0.0)
    }
}

/// The full composite problem: samples, loss family, regularizer, and the
/// smoothness constants derived from them.
#[derive(Clone, Debug)]
pub struct CompositeProblem {
    samples: Vec<Sample>,
    d: usize,
    loss: SmoothLoss,
    reg: Regularizer,
    centering: Option<Centering>,
    lipschitz: Vec<f64>,
    lbar: f64,
    lmax: f64,
}

impl CompositeProblem {
    pub fn new(samples: Vec<Sample>, d: usize, loss: SmoothLoss, reg: Regularizer) -> Result<Self> {
        Self::build(samples, d, loss, reg, None)
    }

    /// Builds the problem from a dataset. A pending (lazy) normalization is
    /// applied as an affine view of the sparse rows.
    pub fn from_dataset(ds: &Dataset, loss: SmoothLoss, reg: Regularizer) -> Result<Self> {
        let centering = ds
            .normalization
            .as_ref()
            .filter(|n| !n.materialized)
            .map(Centering::from_normalization);
        Self::build(ds.samples.clone(), ds.d, loss, reg, centering)
    }

    fn build(
        samples: Vec<Sample>,
        d: usize,
        loss: SmoothLoss,
        reg: Regularizer,
        centering: Option<Centering>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("problem needs at least one sample"));
        }
        reg.validate()?;
        for (i, s) in samples.iter().enumerate() {
            if s.features.min_dim() > d {
                return Err(invalid(format!(
                    "sample {i} has feature index {} ≥ d = {d}",
                    s.features.min_dim() - 1
                )));
            }
            if !s.label.is_finite() {
                return Err(invalid(format!("sample {i} has non-finite label")));
            }
            if loss == SmoothLoss::Logistic && s.label != 1.0 && s.label != -1.0 {
                return Err(invalid(format!(
                    "logistic loss needs labels in {{+1, -1}}, sample {i} has {}",
                    s.label
                )));
            }
        }
        if let Some(c) = &centering {
            if c.mean.len() != d {
                return Err(invalid("normalization metadata does not match dimension"));
            }
        }
        let lipschitz: Vec<f64> = samples
            .iter()
            .map(|s| {
                let norm_sq = match &centering {
                    Some(c) => c.row_norm_sq(&s.features),
                    None => s.features.norm_sq(),
                };
                (loss.curvature() * norm_sq).max(LIPSCHITZ_FLOOR)
            })
            .collect();
        let n = samples.len() as f64;
        let lbar = lipschitz.iter().sum::<f64>() / n;
        let lmax = lipschitz.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            samples,
            d,
            loss,
            reg,
            centering,
            lipschitz,
            lbar,
            lmax,
        })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn loss(&self) -> SmoothLoss {
        self.loss
    }

    pub fn reg(&self) -> &Regularizer {
        &self.reg
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Same data and loss with another regularizer.
    pub fn with_regularizer(&self, reg: Regularizer) -> Result<Self> {
        reg.validate()?;
        Ok(Self { reg, ..self.clone() })
    }

    pub fn mu(&self) -> f64 {
        self.reg.mu()
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    /// `L̄ = (1/n) Σ L_i`
    pub fn lbar(&self) -> f64 {
        self.lbar
    }

    /// `L_max = max_i L_i`
    pub fn lmax(&self) -> f64 {
        self.lmax
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(invalid(format!("expected dimension {}, got {}", self.d, x.len())));
        }
        Ok(())
    }

    fn margin_with_offset(&self, i: usize, x: &[f64], offset: f64) -> f64 {
        let row = &self.samples[i].features;
        match &self.centering {
            None => row.dot(x),
            Some(c) => row.iter().map(|(j, a)| a * c.weight[j] * x[j]).sum::<f64>() - offset,
        }
    }

    fn offset(&self, x: &[f64]) -> f64 {
        self.centering.as_ref().map_or(0.0, |c| c.offset(x))
    }

    /// `a_iᵀx` in the effective (possibly centered) feature space.
    pub fn margin(&self, i: usize, x: &[f64]) -> f64 {
        self.margin_with_offset(i, x, self.offset(x))
    }

    /// Scalar `ℓ'(a_iᵀx, b_i)` such that `∇f_i(x) = scalar · a_i`.
    pub fn grad_scalar(&self, i: usize, x: &[f64]) -> f64 {
        self.grad_scalar_at_margin(i, self.margin(i, x))
    }

    pub fn grad_scalar_at_margin(&self, i: usize, z: f64) -> f64 {
        self.loss.derivative_at(z, self.samples[i].label)
    }

    /// `y += alpha · a_i`
    pub fn add_scaled_row(&self, i: usize, alpha: f64, y: &mut [f64]) {
        let row = &self.samples[i].features;
        match &self.centering {
            None => row.axpy_into(alpha, y),
            Some(c) => {
                for (yj, s) in y.iter_mut().zip(&c.shift) {
                    *yj -= alpha * s;
                }
                for (j, a) in row.iter() {
                    y[j] += alpha * a * c.weight[j];
                }
            }
        }
    }

    /// Dense `∇f_i(x)`.
    pub fn sample_grad(&self, i: usize, x: &[f64]) -> DenseVector {
        let mut out = DenseVector::zeros(self.d);
        self.add_scaled_row(i, self.grad_scalar(i, x), &mut out);
        out
    }

    pub fn sample_loss(&self, i: usize, x: &[f64]) -> f64 {
        self.loss.value_at(self.margin(i, x), self.samples[i].label)
    }

    /// `F(x)`
    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let offset = self.offset(x);
        let total: f64 = (0..self.n())
            .map(|i| {
                let z = self.margin_with_offset(i, x, offset);
                self.loss.value_at(z, self.samples[i].label)
            })
            .sum();
        total / self.n() as f64
    }

    /// `P(x) = F(x) + R(x)`
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.reg.value(x)
    }

    /// Per-sample gradient scalars `ℓ'(a_iᵀx, b_i)` for all `i`.
    pub fn grad_scalars(&self, x: &[f64]) -> Vec<f64> {
        let offset = self.offset(x);
        (0..self.n())
            .map(|i| self.grad_scalar_at_margin(i, self.margin_with_offset(i, x, offset)))
            .collect()
    }

    /// `∇F(x)` assembled from per-sample gradient scalars.
    pub fn gradient_from_scalars(&self, scalars: &[f64]) -> DenseVector {
        debug_assert_eq!(scalars.len(), self.n());
        let inv_n = 1.0 / self.n() as f64;
        let mut out = DenseVector::zeros(self.d);
        let mut scalar_sum = 0.0;
        for (s, &g) in self.samples.iter().zip(scalars) {
            match &self.centering {
                None => s.features.axpy_into(g * inv_n, &mut out),
                Some(c) => {
                    for (j, a) in s.features.iter() {
                        out[j] += g * inv_n * a * c.weight[j];
                    }
                    scalar_sum += g;
                }
            }
        }
        if let Some(c) = &self.centering {
            out.axpy(-scalar_sum * inv_n, &c.shift);
        }
        out
    }

    /// `∇F(x) = (1/n) Σ ∇f_i(x)`. Costs `n` gradient evaluations.
    pub fn smooth_gradient(&self, x: &[f64]) -> DenseVector {
        debug_assert_eq!(x.len(), self.d);
        self.gradient_from_scalars(&self.grad_scalars(x))
    }
}

/// `P(x)`, checked.
pub fn full_objective(p: &CompositeProblem, x: &[f64]) -> Result<f64> {
    p.check_dim(x)?;
    Ok(p.objective(x))
}

/// `∇F(x)`, checked.
pub fn full_gradient(p: &CompositeProblem, x: &[f64]) -> Result<DenseVector> {
    p.check_dim(x)?;
    Ok(p.smooth_gradient(x))
}

pub fn prox(reg: &Regularizer, y: &[f64], c: f64) -> Result<DenseVector> {
    reg.prox(y, c)
}

pub fn reg_value(reg: &Regularizer, x: &[f64]) -> f64 {
    reg.value(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(idx: Vec<usize>, vals: Vec<f64>, b: f64) -> Sample {
        Sample::new(SparseVector::new(idx, vals).unwrap(), b)
    }

    fn dense_sample(a: &[f64], b: f64) -> Sample {
        Sample::new(SparseVector::from_dense_all(a), b)
    }

    #[test]
    fn loss_value_examples() {
        let s = dense_sample(&[1.0, 0.0], 0.0);
        assert_eq!(loss_value(SmoothLoss::SquaredError, &s, &[0.0, 5.0]).unwrap(), 0.0);

        let zero = dense_sample(&[0.0, 0.0, 0.0], 1.0);
        let v = loss_value(SmoothLoss::Logistic, &zero, &[3.0, -1.0, 2.0]).unwrap();
        assert_eq!(v, std::f64::consts::LN_2);

        let s = dense_sample(&[1.0, 2.0], 1.0);
        assert_eq!(loss_value(SmoothLoss::SquaredError, &s, &[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn loss_rejects_short_x() {
        let s = sample(vec![4], vec![1.0], 1.0);
        assert!(loss_value(SmoothLoss::SquaredError, &s, &[0.0; 3]).is_err());
        assert!(loss_grad(SmoothLoss::Logistic, &s, &[0.0; 3]).is_err());
    }

    #[test]
    fn logistic_is_stable_for_large_margins() {
        let s = dense_sample(&[1.0], -1.0);
        let v = loss_value(SmoothLoss::Logistic, &s, &[800.0]).unwrap();
        assert_relative_eq!(v, 800.0, max_relative = 1e-15);
        let v = loss_value(SmoothLoss::Logistic, &s, &[-800.0]).unwrap();
        assert_eq!(v, 0.0);
        let g = SmoothLoss::Logistic.derivative_at(-800.0, -1.0);
        assert!(g.is_finite() && g.abs() < 1e-300);
        let g = SmoothLoss::Logistic.derivative_at(800.0, -1.0);
        assert_eq!(g, 1.0);
    }

    #[test]
    fn loss_grad_examples() {
        let s = dense_sample(&[1.0, 0.0], 0.0);
        let g = loss_grad(SmoothLoss::SquaredError, &s, &[0.0, 0.0]).unwrap();
        assert_eq!(g.to_dense(2).as_slice(), &[0.0, 0.0]);

        let s = dense_sample(&[1.0, 0.0], 1.0);
        let g = loss_grad(SmoothLoss::Logistic, &s, &[0.0, 0.0]).unwrap();
        assert_eq!(g.to_dense(2).as_slice(), &[-0.5, 0.0]);

        let s = dense_sample(&[1.0, 2.0], 1.0);
        let g = loss_grad(SmoothLoss::SquaredError, &s, &[1.0, 1.0]).unwrap();
        assert_eq!(g.to_dense(2).as_slice(), &[2.0, 4.0]);
    }

    #[test]
    fn grad_support_is_within_row_support() {
        let s = sample(vec![1, 4], vec![2.0, -1.0], -1.0);
        let g = loss_grad(SmoothLoss::Logistic, &s, &[0.3; 6]).unwrap();
        assert_eq!(g.indices(), &[1, 4]);
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(
            lipschitz_constant(SmoothLoss::Logistic, &dense_sample(&[2.0, 0.0], 1.0)),
            1.0
        );
        assert_eq!(
            lipschitz_constant(SmoothLoss::SquaredError, &dense_sample(&[0.0, 0.0], 1.0)),
            0.0
        );
        assert_eq!(
            lipschitz_constant(SmoothLoss::SquaredError, &dense_sample(&[3.0, 4.0], 1.0)),
            25.0
        );
    }

    #[test]
    fn zero_rows_get_floored_lipschitz() {
        let p = CompositeProblem::new(
            vec![dense_sample(&[0.0, 0.0], 0.0), dense_sample(&[3.0, 4.0], 1.0)],
            2,
            SmoothLoss::SquaredError,
            Regularizer::None,
        )
        .unwrap();
        assert_eq!(p.lipschitz(), &[LIPSCHITZ_FLOOR, 25.0]);
        assert_eq!(p.lmax(), 25.0);
        assert_relative_eq!(p.lbar(), (25.0 + LIPSCHITZ_FLOOR) / 2.0);
    }

    #[test]
    fn problem_validation() {
        let s = dense_sample(&[1.0], 0.5);
        assert!(CompositeProblem::new(vec![], 1, SmoothLoss::SquaredError, Regularizer::None).is_err());
        assert!(CompositeProblem::new(vec![s.clone()], 1, SmoothLoss::Logistic, Regularizer::None).is_err());
        assert!(CompositeProblem::new(vec![s.clone()], 0, SmoothLoss::SquaredError, Regularizer::None).is_err());
        assert!(CompositeProblem::new(vec![s], 1, SmoothLoss::SquaredError, Regularizer::L1 { l1: -1.0 }).is_err());
    }

    #[test]
    fn full_objective_examples() {
        let p = CompositeProblem::new(
            vec![dense_sample(&[1.0], 0.0)],
            1,
            SmoothLoss::SquaredError,
            Regularizer::None,
        )
        .unwrap();
        assert_eq!(full_objective(&p, &[0.0]).unwrap(), 0.0);
        assert!(full_objective(&p, &[0.0, 1.0]).is_err());

        let p = CompositeProblem::new(
            vec![sample(vec![], vec![], 0.0)],
            2,
            SmoothLoss::SquaredError,
            Regularizer::L1 { l1: 1.0 },
        )
        .unwrap();
        assert_eq!(full_objective(&p, &[1.0, -2.0]).unwrap(), 3.0);
    }

    #[test]
    fn full_gradient_n1_equals_loss_grad() {
        let s = dense_sample(&[0.5, -2.0, 1.0], 1.0);
        let p = CompositeProblem::new(vec![s.clone()], 3, SmoothLoss::Logistic, Regularizer::None).unwrap();
        let x = [0.2, 0.1, -0.7];
        let g = full_gradient(&p, &x).unwrap();
        assert_eq!(g, loss_grad(SmoothLoss::Logistic, &s, &x).unwrap().to_dense(3));
        assert!(full_gradient(&p, &[0.0]).is_err());
    }

    #[test]
    fn full_gradient_vanishes_at_least_squares_solution() {
        // rows e1, e2, e1+e2 with labels 1, 2, 3 are consistent at x = (1, 2)
        let p = CompositeProblem::new(
            vec![
                dense_sample(&[1.0, 0.0], 1.0),
                dense_sample(&[0.0, 1.0], 2.0),
                dense_sample(&[1.0, 1.0], 3.0),
            ],
            2,
            SmoothLoss::SquaredError,
            Regularizer::None,
        )
        .unwrap();
        let g = full_gradient(&p, &[1.0, 2.0]).unwrap();
        assert!(g.norm() <= 1e-8);
    }

    #[test]
    fn prox_examples() {
        let r = Regularizer::L1 { l1: 1.0 };
        let p = r.prox(&[3.0, -0.5, 1.0], 1.0).unwrap();
        assert_eq!(p.as_slice(), &[2.0, 0.0, 0.0]);

        let y = [1.5, -2.0, 0.0];
        for reg in [
            Regularizer::None,
            Regularizer::L1 { l1: 0.0 },
            Regularizer::SquaredL2 { l2: 0.0 },
            Regularizer::ElasticNet { l1: 0.0, l2: 0.0 },
        ] {
            assert_eq!(reg.prox(&y, 3.7).unwrap().as_slice(), &y);
        }

        let r = Regularizer::ElasticNet { l1: 0.5, l2: 2.0 };
        assert_eq!(r.prox(&[2.0], 1.0).unwrap().as_slice(), &[0.5]);
    }

    #[test]
    fn prox_rejects_nonpositive_scale() {
        let r = Regularizer::L1 { l1: 1.0 };
        assert!(r.prox(&[1.0], 0.0).is_err());
        assert!(r.prox(&[1.0], -1.0).is_err());
        assert!(r.prox(&[1.0], f64::NAN).is_err());
    }

    #[test]
    fn reg_value_examples() {
        assert_eq!(Regularizer::None.value(&[1.0, 2.0]), 0.0);
        assert_eq!(Regularizer::L1 { l1: 2.0 }.value(&[1.0, -1.0]), 4.0);
        assert_eq!(Regularizer::ElasticNet { l1: 1.0, l2: 2.0 }.value(&[3.0]), 12.0);
    }

    #[test]
    fn mu_per_kind() {
        assert_eq!(Regularizer::None.mu(), 0.0);
        assert_eq!(Regularizer::L1 { l1: 3.0 }.mu(), 0.0);
        assert_eq!(Regularizer::SquaredL2 { l2: 0.5 }.mu(), 0.5);
        assert_eq!(Regularizer::ElasticNet { l1: 1.0, l2: 0.25 }.mu(), 0.25);
    }

    #[test]
    fn from_weights_picks_kind() {
        assert_eq!(Regularizer::from_weights(0.0, 0.0).unwrap(), Regularizer::None);
        assert_eq!(
            Regularizer::from_weights(1.0, 0.0).unwrap(),
            Regularizer::L1 { l1: 1.0 }
        );
        assert_eq!(
            Regularizer::from_weights(1.0, 2.0).unwrap(),
            Regularizer::ElasticNet { l1: 1.0, l2: 2.0 }
        );
        assert!(Regularizer::from_weights(-1.0, 0.0).is_err());
        assert!(Regularizer::from_weights(f64::NAN, 0.0).is_err());
    }
}
