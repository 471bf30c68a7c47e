//! Dataset ingestion: libsvm text format, per-feature standardization and
//! synthetic sparse-ground-truth generators.

use std::io::{BufRead, Write};

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::problem::Sample;
use crate::sampling::SeededRng;
use crate::vector::{DenseVector, SparseVector};

/// Fraction of nonzeros above which centered data is stored densely.
pub const DENSIFY_THRESHOLD: f64 = 0.5;

/// Per-feature standardization parameters (population convention).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features with zero variance; mapped to all-zero.
    pub constant: Vec<bool>,
    /// True when the samples already hold standardized values. When false the
    /// problem applies `(a − mean) / std` as an affine view of the raw rows.
    pub materialized: bool,
}

impl Normalization {
    pub fn constant_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.constant.iter().enumerate().filter(|(_, &c)| c).map(|(j, _)| j)
    }

    fn apply(&self, j: usize, a: f64) -> f64 {
        if self.constant[j] {
            0.0
        } else {
            (a - self.mean[j]) / self.std[j]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub d: usize,
    pub normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, d: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoSamples);
        }
        if let Some((i, s)) = samples.iter().enumerate().find(|(_, s)| s.features.min_dim() > d) {
            return Err(Error::InvalidArgument(format!(
                "sample {i} has feature index {} ≥ d = {d}",
                s.features.min_dim() - 1
            )));
        }
        Ok(Self {
            samples,
            d,
            normalization: None,
        })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    /// Effective feature value `ã_ij`, applying a pending normalization.
    pub fn feature(&self, i: usize, j: usize) -> f64 {
        let row = &self.samples[i].features;
        let raw = match row.indices().binary_search(&j) {
            Ok(k) => row.values()[k],
            Err(_) => 0.0,
        };
        match &self.normalization {
            Some(norm) if !norm.materialized => norm.apply(j, raw),
            _ => raw,
        }
    }

    /// Effective feature matrix, row-major.
    pub fn dense_rows(&self) -> Vec<DenseVector> {
        (0..self.n())
            .map(|i| (0..self.d).map(|j| self.feature(i, j)).collect())
            .collect()
    }

    /// Writes any pending normalization into the samples.
    pub fn materialize(&self) -> Dataset {
        match &self.normalization {
            Some(norm) if !norm.materialized => {
                let samples = self
                    .dense_rows()
                    .into_iter()
                    .zip(&self.samples)
                    .map(|(row, s)| Sample::new(SparseVector::from_dense(&row), s.label))
                    .collect();
                Dataset {
                    samples,
                    d: self.d,
                    normalization: Some(Normalization {
                        materialized: true,
                        ..norm.clone()
                    }),
                }
            }
            _ => self.clone(),
        }
    }
}

/// Options for [`parse_libsvm_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Feature dimension; must cover the largest index seen.
    pub dim: Option<usize>,
    /// Require binary labels, remapping `0` to `−1`.
    pub binary: bool,
}

pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    parse_libsvm_with(reader, ParseOptions::default())
}

/// Parses `<label> <idx>:<val> ...` lines with 1-based ascending indices.
/// Blank lines and `#` comments are skipped; CRLF endings are accepted.
pub fn parse_libsvm_with<R: BufRead>(reader: R, opts: ParseOptions) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut max_dim = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse { line: lineno, message };
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let mut label: f64 = label_tok
            .parse()
            .map_err(|_| perr(format!("invalid label '{label_tok}'")))?;
        if !label.is_finite() {
            return Err(perr(format!("non-finite label '{label_tok}'")));
        }
        if opts.binary {
            label = if label == 1.0 {
                1.0
            } else if label == -1.0 || label == 0.0 {
                -1.0
            } else {
                return Err(perr(format!("binary label must be ±1 or 0/1, got '{label_tok}'")));
            };
        }
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected <index>:<value>, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| perr(format!("invalid feature index '{idx}'")))?;
            if idx == 0 {
                return Err(perr("feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| perr(format!("invalid feature value '{val}'")))?;
            if !val.is_finite() {
                return Err(perr(format!("non-finite feature value '{val}'")));
            }
            if indices.last().is_some_and(|&last| idx - 1 <= last) {
                return Err(perr(format!("feature indices must be ascending at '{tok}'")));
            }
            indices.push(idx - 1);
            values.push(val);
        }
        max_dim = max_dim.max(indices.last().map_or(0, |&j| j + 1));
        let features = SparseVector::new(indices, values).map_err(|e| perr(e.to_string()))?;
        samples.push(Sample::new(features, label));
    }
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let d = match opts.dim {
        Some(d) if d < max_dim => {
            return Err(config(format!(
                "dimension {d} is smaller than the largest index {max_dim}"
            )));
        }
        Some(d) => d,
        None => max_dim,
    };
    Dataset::new(samples, d)
}

/// Writes samples in libsvm format. Values use the shortest representation
/// that parses back to the same `f64`. A pending normalization is written
/// out applied.
pub fn write_libsvm<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    let ds = ds.materialize();
    for s in &ds.samples {
        write!(w, "{}", s.label)?;
        for (j, v) in s.features.iter() {
            write!(w, " {}:{}", j + 1, v)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Standardizes every feature to zero mean and unit population variance.
///
/// Constant features become zero and are flagged. When the centered data
/// would be more than half nonzero the result is stored densely; otherwise
/// the raw sparse rows are kept and the normalization is left pending for
/// the problem to apply as an affine view.
pub fn normalize_features(ds: &Dataset) -> Dataset {
    let ds = ds.materialize();
    let n = ds.n() as f64;
    let d = ds.d;
    let mut sum = vec![0.0; d];
    let mut nnz = vec![0usize; d];
    for s in &ds.samples {
        for (j, v) in s.features.iter() {
            sum[j] += v;
            nnz[j] += 1;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let mut sq = vec![0.0; d];
    for s in &ds.samples {
        for (j, v) in s.features.iter() {
            sq[j] += (v - mean[j]) * (v - mean[j]) - mean[j] * mean[j];
        }
    }
    let std: Vec<f64> = (0..d)
        .map(|j| ((sq[j] + n * mean[j] * mean[j]) / n).max(0.0).sqrt())
        .collect();
    let constant: Vec<bool> = (0..d).map(|j| std[j] <= 1e-12 * mean[j].abs().max(1.0)).collect();

    let centered_nnz: usize = (0..d)
        .map(|j| match (constant[j], mean[j] != 0.0) {
            (true, _) => 0,
            (false, true) => ds.n(),
            (false, false) => nnz[j],
        })
        .sum();
    let density = centered_nnz as f64 / (ds.n() * d).max(1) as f64;
    let norm = Normalization {
        mean,
        std,
        constant,
        materialized: false,
    };
    let lazy = Dataset {
        samples: ds.samples,
        d,
        normalization: Some(norm),
    };
    if density > DENSIFY_THRESHOLD {
        lazy.materialize()
    } else {
        lazy
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Regression,
    Binary,
}

/// Parameters of a synthetic problem with a sparse ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// Number of nonzero ground-truth coordinates.
    pub k: usize,
    #[serde(default)]
    pub noise_std: f64,
    pub label_kind: LabelKind,
    #[serde(default)]
    pub seed: u64,
}

/// Draws a dataset with standard normal features and a ground truth with `k`
/// entries of ±1 at random positions.
///
/// Draw order: support positions, support signs, then per sample the `d`
/// features followed by one noise value.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, DenseVector)> {
    if spec.k > spec.d {
        return Err(config(format!("support size k = {} exceeds d = {}", spec.k, spec.d)));
    }
    if spec.n == 0 || spec.d == 0 {
        return Err(config("synthetic data needs n ≥ 1 and d ≥ 1"));
    }
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return Err(config(format!(
            "noise_std must be finite and ≥ 0, got {}",
            spec.noise_std
        )));
    }
    let mut rng = SeededRng::new(spec.seed);
    let mut support = index::sample(rng.inner_mut(), spec.d, spec.k).into_vec();
    support.sort_unstable();
    let mut truth = DenseVector::zeros(spec.d);
    for &j in &support {
        truth[j] = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
    }
    let mut samples = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let row: Vec<f64> = (0..spec.d).map(|_| StandardNormal.sample(rng.inner_mut())).collect();
        let noise: f64 = StandardNormal.sample(rng.inner_mut());
        let z = truth.dot(&row) + spec.noise_std * noise;
        let label = match spec.label_kind {
            LabelKind::Regression => z,
            LabelKind::Binary if z >= 0.0 => 1.0,
            LabelKind::Binary => -1.0,
        };
        samples.push(Sample::new(SparseVector::from_dense_all(&row), label));
    }
    Ok((Dataset::new(samples, spec.d)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(ds: &Dataset, j: usize) -> Vec<f64> {
        (0..ds.n()).map(|i| ds.feature(i, j)).collect()
    }

    #[test]
    fn parses_basic_line() {
        let ds = parse_libsvm("+1 1:0.5 3:2\n".as_bytes()).unwrap();
        assert_eq!(ds.n(), 1);
        assert_eq!(ds.d, 3);
        let s = &ds.samples[0];
        assert_eq!(s.label, 1.0);
        assert_eq!(s.features.indices(), &[0, 2]);
        assert_eq!(s.features.values(), &[0.5, 2.0]);
    }

    #[test]
    fn skips_comments_blank_lines_and_crlf() {
        let text = "# header\r\n\r\n-1 2:1.5 # trailing\r\n1 1:1\r\n";
        let ds = parse_libsvm(text.as_bytes()).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.samples[0].label, -1.0);
        assert_eq!(ds.d, 2);
    }

    #[test]
    fn empty_stream_has_no_samples() {
        let err = parse_libsvm("".as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "no samples");
        assert!(matches!(parse_libsvm("# only\n\n".as_bytes()), Err(Error::NoSamples)));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("1 1:1\n1 x:2\n", 2),
            ("1 1:1\n\n1 3:1 2:1\n", 3),
            ("abc 1:1\n", 1),
            ("1 0:1\n", 1),
            ("1 1:1 1:2\n", 1),
            ("1 1=2\n", 1),
            ("1 1:nan\n", 1),
        ];
        for (text, line) in cases {
            match parse_libsvm(text.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn binary_labels_remap_zero() {
        let opts = ParseOptions {
            binary: true,
            ..Default::default()
        };
        let ds = parse_libsvm_with("0 1:1\n1 1:2\n-1 1:3\n+1 1:4\n".as_bytes(), opts).unwrap();
        let labels: Vec<f64> = ds.samples.iter().map(|s| s.label).collect();
        assert_eq!(labels, [-1.0, 1.0, -1.0, 1.0]);
        assert!(parse_libsvm_with("2 1:1\n".as_bytes(), opts).is_err());
    }

    #[test]
    fn dimension_override() {
        let opts = ParseOptions {
            dim: Some(10),
            ..Default::default()
        };
        assert_eq!(parse_libsvm_with("1 3:1\n".as_bytes(), opts).unwrap().d, 10);
        let opts = ParseOptions {
            dim: Some(2),
            ..Default::default()
        };
        assert!(parse_libsvm_with("1 3:1\n".as_bytes(), opts).is_err());
    }

    #[test]
    fn normalizes_simple_column() {
        let ds = parse_libsvm("1 1:1\n1 1:3\n".as_bytes()).unwrap();
        let norm = normalize_features(&ds);
        assert_eq!(column(&norm, 0), [-1.0, 1.0]);
    }

    #[test]
    fn constant_column_is_zeroed_and_flagged() {
        let ds = parse_libsvm("1 1:5 2:1\n1 1:5 2:2\n1 1:5 2:4\n".as_bytes()).unwrap();
        let norm = normalize_features(&ds);
        assert_eq!(column(&norm, 0), [0.0, 0.0, 0.0]);
        let meta = norm.normalization.as_ref().unwrap();
        assert_eq!(meta.constant_features().collect::<Vec<_>>(), [0]);
    }

    #[test]
    fn normalized_column_is_unchanged() {
        let ds = parse_libsvm("1 1:-1\n1 1:1\n1 1:-1\n1 1:1\n".as_bytes()).unwrap();
        let norm = normalize_features(&ds);
        for (a, b) in column(&norm, 0).iter().zip([-1.0, 1.0, -1.0, 1.0]) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn sparse_centered_data_stays_lazy() {
        // zero-mean columns keep their sparsity after centering
        let mut text = String::new();
        for i in 0..20 {
            let sign = if i < 10 { 1 } else { -1 };
            text.push_str(&format!("1 {}:{sign}\n", (i % 10) + 1));
        }
        let ds = parse_libsvm(text.as_bytes()).unwrap();
        let norm = normalize_features(&ds);
        assert!(!norm.normalization.as_ref().unwrap().materialized);
        let dense = normalize_features(&generate_synthetic(&spec(30, 4, 2)).unwrap().0);
        assert!(dense.normalization.as_ref().unwrap().materialized);
    }

    fn spec(n: usize, d: usize, k: usize) -> SyntheticSpec {
        SyntheticSpec {
            n,
            d,
            k,
            noise_std: 0.1,
            label_kind: LabelKind::Regression,
            seed: 5,
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let (a, ta) = generate_synthetic(&spec(20, 8, 3)).unwrap();
        let (b, tb) = generate_synthetic(&spec(20, 8, 3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert_eq!(ta.nnz(), 3);
        assert!(ta.iter().all(|&v| v == 0.0 || v.abs() == 1.0));
    }

    #[test]
    fn synthetic_zero_support_noiseless_labels_are_zero() {
        let s = SyntheticSpec {
            noise_std: 0.0,
            ..spec(15, 6, 0)
        };
        let (ds, truth) = generate_synthetic(&s).unwrap();
        assert_eq!(truth.nnz(), 0);
        assert!(ds.samples.iter().all(|s| s.label == 0.0));
    }

    #[test]
    fn synthetic_rejects_bad_support() {
        assert!(generate_synthetic(&spec(5, 3, 4)).is_err());
    }

    #[test]
    fn synthetic_binary_labels() {
        let s = SyntheticSpec {
            label_kind: LabelKind::Binary,
            ..spec(40, 5, 2)
        };
        let (ds, _) = generate_synthetic(&s).unwrap();
        assert!(ds.samples.iter().all(|s| s.label == 1.0 || s.label == -1.0));
    }
}
