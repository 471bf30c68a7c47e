//! Test-only oracles written directly from the formulas on dense rows, with no
//! calls into the library's objective or gradient code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svrda_core::data::{generate_synthetic, LabelKind, SyntheticSpec};
use svrda_core::{CompositeProblem, Regularizer, Sample, SmoothLoss, SparseVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense_rows(p: &CompositeProblem) -> Vec<Vec<f64>> {
    p.samples()
        .iter()
        .map(|s| {
            let mut row = vec![0.0; p.dim()];
            for (j, v) in s.features.iter() {
                row[j] = v;
            }
            row
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn naive_loss(loss: SmoothLoss, z: f64, b: f64) -> f64 {
    match loss {
        SmoothLoss::SquaredError => 0.5 * (z - b) * (z - b),
        SmoothLoss::Logistic => (1.0 + (-b * z).exp()).ln(),
    }
}

pub fn naive_dloss(loss: SmoothLoss, z: f64, b: f64) -> f64 {
    match loss {
        SmoothLoss::SquaredError => z - b,
        SmoothLoss::Logistic => -b / (1.0 + (b * z).exp()),
    }
}

pub fn naive_reg(l1: f64, l2: f64, x: &[f64]) -> f64 {
    l1 * x.iter().map(|v| v.abs()).sum::<f64>() + 0.5 * l2 * x.iter().map(|v| v * v).sum::<f64>()
}

pub fn naive_objective(p: &CompositeProblem, x: &[f64]) -> f64 {
    let rows = dense_rows(p);
    let f: f64 = rows
        .iter()
        .zip(p.samples())
        .map(|(r, s)| naive_loss(p.loss(), dot(r, x), s.label))
        .sum::<f64>()
        / rows.len() as f64;
    f + naive_reg(p.reg().l1(), p.reg().l2(), x)
}

pub fn naive_sample_grad(p: &CompositeProblem, i: usize, x: &[f64]) -> Vec<f64> {
    let row = &dense_rows(p)[i];
    let c = naive_dloss(p.loss(), dot(row, x), p.samples()[i].label);
    row.iter().map(|a| c * a).collect()
}

pub fn naive_full_grad(p: &CompositeProblem, x: &[f64]) -> Vec<f64> {
    let rows = dense_rows(p);
    let mut g = vec![0.0; p.dim()];
    for (r, s) in rows.iter().zip(p.samples()) {
        let c = naive_dloss(p.loss(), dot(r, x), s.label);
        for (gj, a) in g.iter_mut().zip(r) {
            *gj += c * a;
        }
    }
    let n = rows.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

/// Smoothness constant of each sample loss: curvature bound times `‖a_i‖²`.
pub fn naive_lipschitz(p: &CompositeProblem) -> Vec<f64> {
    let curv = match p.loss() {
        SmoothLoss::SquaredError => 1.0,
        SmoothLoss::Logistic => 0.25,
    };
    dense_rows(p).iter().map(|r| (curv * dot(r, r)).max(1e-12)).collect()
}

/// Dense problem with entries uniform in `[-1, 1]`; a fraction of entries is
/// zeroed when `density < 1`.
pub fn random_problem(
    seed: u64,
    n: usize,
    d: usize,
    loss: SmoothLoss,
    reg: Regularizer,
    density: f64,
) -> CompositeProblem {
    let mut r = rng(seed);
    let samples = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..d)
                .map(|_| {
                    if r.random::<f64>() < density {
                        r.random_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            if row.iter().all(|v| *v == 0.0) {
                row[r.random_range(0..d)] = 1.0;
            }
            let label = match loss {
                SmoothLoss::SquaredError => r.random_range(-2.0..2.0),
                SmoothLoss::Logistic => {
                    if r.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            Sample::new(SparseVector::from_dense(&row), label)
        })
        .collect();
    CompositeProblem::new(samples, d, loss, reg).unwrap()
}

pub fn random_point(r: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| r.random_range(-scale..scale)).collect()
}

pub fn synthetic_problem(
    n: usize,
    d: usize,
    k: usize,
    noise_std: f64,
    label_kind: LabelKind,
    seed: u64,
    reg: Regularizer,
) -> CompositeProblem {
    let spec = SyntheticSpec {
        n,
        d,
        k,
        noise_std,
        label_kind,
        seed,
    };
    let (ds, _) = generate_synthetic(&spec).unwrap();
    let loss = match label_kind {
        LabelKind::Regression => SmoothLoss::SquaredError,
        LabelKind::Binary => SmoothLoss::Logistic,
    };
    CompositeProblem::from_dataset(&ds, loss, reg).unwrap()
}

/// Soft-thresholding prox of `c·(λ1|x| + λ2/2 x²)` written from the scalar
/// optimality condition.
pub fn naive_prox_scalar(y: f64, c: f64, l1: f64, l2: f64) -> f64 {
    let t = c * l1;
    let shrunk = if y > t {
        y - t
    } else if y < -t {
        y + t
    } else {
        0.0
    };
    shrunk / (1.0 + c * l2)
}

pub fn assert_close_slices(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (j, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "coordinate {j}: {x} vs {y} (tol {tol})");
    }
}
