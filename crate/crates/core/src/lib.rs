//! Stochastic variance-reduced dual averaging for regularized empirical risk
//! minimization.
//!
//! The library minimizes composite objectives `P(x) = (1/n) Σ f_i(x) + R(x)`
//! where each `f_i` is a smooth generalized linear loss and `R` is a simple
//! (possibly nonsmooth) regularizer with a closed-form proximal mapping.
//!
//! Two multistage solvers keep the sparsity that proximal steps produce:
//!
//! * **SVRDA** couples a dual-averaging step with a proximal gradient step,
//!   feeding both an SVRG-style estimator with Lipschitz-proportional
//!   sampling.
//! * **SADA** does the same with a SAGA gradient table and uniform sampling.
//!
//! Both return the proximal iterate `x̃_S` (and `ṽ_S` for strongly convex
//! regularizers) instead of an average of past iterates. Proximal GD,
//! proximal SGD, RDA, prox-SVRG and SAGA are included as baselines, and
//! [`experiment`] drives benchmark grids that emit CSV traces.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod optimizers;
pub mod problem;
pub mod sampling;
pub mod vector;

pub use error::{Error, Result};
pub use optimizers::{OutputChoice, RunResult, RunTrace, SolverConfig, SolverKind};
pub use problem::{CompositeProblem, Regularizer, Sample, SmoothLoss};
pub use vector::{DenseVector, SparseVector};
