//! Sparse labeled datasets in LIBSVM / SVMlight text format.
//!
//! ```text
//! +1 1:0.5 3:0.5   # optional comment
//! -1 2:1.0
//! ```
//!
//! Feature indices are 1-based on disk and 0-based in memory. Labels are
//! thresholded at zero: anything positive becomes `+1`, everything else `-1`.

use std::fmt::Write as _;
use std::io::{self, BufRead};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no examples")]
    NoExamples,
    #[error("degenerate data: every example is the zero vector")]
    Degenerate,
    #[error("scale divisor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid example: {0}")]
    InvalidExample(String),
}

/// One labeled training point with a cached squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseExample {
    indices: Vec<usize>,
    values: Vec<f64>,
    label: f64,
    sq_norm: f64,
}

impl SparseExample {
    /// Builds an example from sorted `(index, value)` data.
    ///
    /// Explicit zeros are dropped. Indices must be strictly increasing and
    /// values finite; the label is thresholded at zero.
    pub fn new(indices: Vec<usize>, values: Vec<f64>, label: f64) -> Result<Self, DatasetError> {
        if indices.len() != values.len() {
            return Err(DatasetError::InvalidExample(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DatasetError::InvalidExample(
                "indices must be strictly increasing".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(DatasetError::InvalidExample(format!(
                "non-finite value {v}"
            )));
        }
        if !label.is_finite() {
            return Err(DatasetError::InvalidExample(format!(
                "non-finite label {label}"
            )));
        }
        let (indices, values): (Vec<_>, Vec<_>) = indices
            .into_iter()
            .zip(values)
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        let label = if label > 0.0 { 1.0 } else { -1.0 };
        Ok(Self::from_parts(indices, values, label))
    }

    fn from_parts(indices: Vec<usize>, values: Vec<f64>, label: f64) -> Self {
        let sq_norm = values.iter().map(|v| v * v).sum();
        SparseExample {
            indices,
            values,
            label,
            sq_norm,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `+1.0` or `-1.0`.
    pub fn label(&self) -> f64 {
        self.label
    }

    /// Cached `‖x‖²`.
    pub fn sq_norm(&self) -> f64 {
        self.sq_norm
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Iterates over stored `(index, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// One past the largest stored index (0 for the empty example).
    pub fn min_dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i + 1)
    }

    fn scaled(&self, factor: f64) -> Self {
        let values = self.values.iter().map(|v| v / factor).collect();
        Self::from_parts(self.indices.clone(), values, self.label)
    }
}

/// An immutable collection of examples, i.e. the columns of the data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<SparseExample>,
    dim: usize,
    scale_factor: f64,
    max_norm: f64,
}

impl Dataset {
    /// Creates a dataset of dimension `max(1, dim, 1 + largest index)`.
    pub fn new(examples: Vec<SparseExample>, dim: usize) -> Result<Self, DatasetError> {
        if examples.is_empty() {
            return Err(DatasetError::NoExamples);
        }
        let needed = examples
            .iter()
            .map(SparseExample::min_dim)
            .max()
            .unwrap_or(0);
        let dim = dim.max(needed).max(1);
        let max_norm = max_norm(&examples);
        Ok(Dataset {
            examples,
            dim,
            scale_factor: 1.0,
            max_norm,
        })
    }

    pub fn examples(&self) -> &[SparseExample] {
        &self.examples
    }

    pub fn example(&self, i: usize) -> &SparseExample {
        &self.examples[i]
    }

    pub fn n(&self) -> usize {
        self.examples.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Product of all factors divided out by [`normalize`].
    pub fn scale_factor(&self) -> f64 {
        self.scale_factor
    }

    /// `max_i ‖x_i‖`.
    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    pub fn nnz(&self) -> usize {
        self.examples.iter().map(SparseExample::nnz).sum()
    }

    /// Returns a copy padded to at least `dim` features.
    pub fn with_dim(&self, dim: usize) -> Dataset {
        let mut out = self.clone();
        out.dim = out.dim.max(dim);
        out
    }

    /// Serializes to LIBSVM text with 1-based indices.
    ///
    /// Values use the shortest representation that round-trips exactly.
    pub fn to_libsvm_string(&self) -> String {
        let mut out = String::new();
        for ex in &self.examples {
            out.push_str(if ex.label > 0.0 { "+1" } else { "-1" });
            for (i, v) in ex.iter() {
                let _ = write!(out, " {}:{}", i + 1, v);
            }
            out.push('\n');
        }
        out
    }
}

fn max_norm(examples: &[SparseExample]) -> f64 {
    examples
        .iter()
        .map(|e| e.sq_norm)
        .fold(0.0f64, f64::max)
        .sqrt()
}

/// Parses LIBSVM text. Blank lines and `#` comments are skipped; `qid:` tokens
/// are ignored.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset, DatasetError> {
    let mut examples = Vec::new();
    let mut dim = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        if content.trim().is_empty() {
            continue;
        }
        let (ex, declared) = parse_line(content, lineno)?;
        dim = dim.max(declared);
        examples.push(ex);
    }
    Dataset::new(examples, dim)
}

/// Convenience wrapper over [`parse_libsvm`] for in-memory text.
pub fn parse_libsvm_str(text: &str) -> Result<Dataset, DatasetError> {
    parse_libsvm(text.as_bytes())
}

/// Reads and parses a LIBSVM file from disk.
pub fn read_libsvm_file(path: impl AsRef<std::path::Path>) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(io::BufReader::new(file))
}

/// Returns the example and the largest declared index, zeros included.
fn parse_line(content: &str, line: usize) -> Result<(SparseExample, usize), DatasetError> {
    let err = |msg: String| DatasetError::Parse { line, msg };
    let mut tokens = content.split_whitespace();
    let label_tok = tokens.next().ok_or_else(|| err("missing label".into()))?;
    let label: f64 = label_tok
        .parse()
        .map_err(|_| err(format!("bad label {label_tok:?}")))?;
    if !label.is_finite() {
        return Err(err(format!("non-finite label {label_tok:?}")));
    }

    let mut indices = Vec::new();
    let mut values = Vec::new();
    for tok in tokens {
        let (idx_str, val_str) = tok
            .split_once(':')
            .ok_or_else(|| err(format!("malformed token {tok:?}")))?;
        if idx_str == "qid" {
            continue;
        }
        let idx: usize = idx_str
            .parse()
            .map_err(|_| err(format!("bad feature index in {tok:?}")))?;
        if idx == 0 {
            return Err(err(format!("feature indices are 1-based, got {tok:?}")));
        }
        let val: f64 = val_str
            .parse()
            .map_err(|_| err(format!("bad feature value in {tok:?}")))?;
        if !val.is_finite() {
            return Err(err(format!("non-finite feature value in {tok:?}")));
        }
        let idx = idx - 1;
        if let Some(&prev) = indices.last() {
            if idx == prev {
                return Err(err(format!("duplicate index {}", idx + 1)));
            }
            if idx < prev {
                return Err(err(format!(
                    "non-increasing index {} after {}",
                    idx + 1,
                    prev + 1
                )));
            }
        }
        indices.push(idx);
        values.push(val);
    }
    let declared = indices.last().map_or(0, |&i| i + 1);
    let ex = SparseExample::new(indices, values, label).map_err(|e| err(e.to_string()))?;
    Ok((ex, declared))
}

/// Divides every example by the global maximum norm, so `max_i ‖x_i‖ = 1`.
///
/// Uniform scaling keeps the relative geometry (and `nσ²`) intact. A dataset
/// whose maximum norm is already 1 to within a few ulps is returned unchanged.
pub fn normalize(ds: &Dataset) -> Result<Dataset, DatasetError> {
    let m = ds.max_norm;
    if m == 0.0 {
        return Err(DatasetError::Degenerate);
    }
    if (m - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(ds.clone());
    }
    rescale(ds, m)
}

/// Divides every example by `divisor`, e.g. a test set by its training set's
/// [`Dataset::scale_factor`].
pub fn rescale(ds: &Dataset, divisor: f64) -> Result<Dataset, DatasetError> {
    if !(divisor.is_finite() && divisor > 0.0) {
        return Err(DatasetError::InvalidScale(divisor));
    }
    if divisor == 1.0 {
        return Ok(ds.clone());
    }
    let examples: Vec<_> = ds.examples.iter().map(|e| e.scaled(divisor)).collect();
    let max_norm = max_norm(&examples);
    Ok(Dataset {
        examples,
        dim: ds.dim,
        scale_factor: ds.scale_factor * divisor,
        max_norm,
    })
}

/// Seeded shuffle-and-partition into `(train, test)`.
///
/// `|test| = floor(test_fraction · n)`; both halves keep the original
/// relative order. An empty test side is returned as `None`.
pub fn split(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Option<Dataset>), DatasetError> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(DatasetError::InvalidSplit(format!(
            "test fraction {test_fraction} not in [0, 1)"
        )));
    }
    let n = ds.n();
    let n_test = (test_fraction * n as f64).floor() as usize;
    if n_test == 0 {
        return Ok((ds.clone(), None));
    }
    if n < 2 {
        return Err(DatasetError::InvalidSplit(
            "need at least two examples".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test_idx, train_idx) = order.split_at_mut(n_test);
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    let pick = |idx: &[usize]| Dataset {
        examples: idx.iter().map(|&i| ds.examples[i].clone()).collect(),
        dim: ds.dim,
        scale_factor: ds.scale_factor,
        max_norm: 0.0,
    };
    let mut train = pick(train_idx);
    let mut test = pick(test_idx);
    train.max_norm = max_norm(&train.examples);
    test.max_norm = max_norm(&test.examples);
    Ok((train, Some(test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_lines() {
        let ds = parse_libsvm_str("+1 1:0.5 3:0.5\n-1 2:1.0").unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.dim(), 3);
        let e0 = ds.example(0);
        assert_eq!(e0.indices(), &[0, 2]);
        assert_eq!(e0.values(), &[0.5, 0.5]);
        assert_eq!(e0.label(), 1.0);
        assert_eq!(ds.example(1).label(), -1.0);
        assert_eq!(e0.sq_norm(), 0.5);
    }

    #[test]
    fn empty_input_has_no_examples() {
        let err = parse_libsvm_str("").unwrap_err();
        assert_eq!(err.to_string(), "no examples");
        assert!(matches!(
            parse_libsvm_str("# only a comment\n\n").unwrap_err(),
            DatasetError::NoExamples
        ));
    }

    #[test]
    fn duplicate_index_is_rejected_with_line() {
        match parse_libsvm_str("1 1:1 1:2").unwrap_err() {
            DatasetError::Parse { line, msg } => {
                assert_eq!(line, 1);
                assert!(msg.contains("duplicate"), "{msg}");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn decreasing_and_malformed_tokens() {
        let err = parse_libsvm_str("+1 1:1\n-1 3:1 2:1\n").unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 2, .. }));
        let err = parse_libsvm_str("+1 1:1\n+1 1:1\n-1 oops\n").unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 3, .. }));
        assert!(parse_libsvm_str("+1 0:1").is_err());
        assert!(parse_libsvm_str("abc 1:1").is_err());
        assert!(parse_libsvm_str("+1 1:nan").is_err());
    }

    #[test]
    fn labels_threshold_at_zero_and_comments_are_ignored() {
        let ds = parse_libsvm_str("2 1:1 # two\n0 1:1\n1 qid:3 2:1\n-3 1:1").unwrap();
        let labels: Vec<f64> = ds.examples().iter().map(|e| e.label()).collect();
        assert_eq!(labels, vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(ds.example(2).indices(), &[1]);
    }

    #[test]
    fn explicit_zeros_are_dropped() {
        let ds = parse_libsvm_str("+1 1:0 2:3 4:0.0").unwrap();
        assert_eq!(ds.example(0).indices(), &[1]);
        assert_eq!(ds.dim(), 4);
    }

    #[test]
    fn normalize_divides_by_max_norm() {
        let ds = parse_libsvm_str("+1 1:2\n-1 2:1").unwrap();
        let norm = normalize(&ds).unwrap();
        assert_eq!(norm.scale_factor(), 2.0);
        assert_eq!(norm.max_norm(), 1.0);
        assert_eq!(norm.example(0).values(), &[1.0]);
        assert_eq!(norm.example(1).values(), &[0.5]);
    }

    #[test]
    fn rescale_applies_a_foreign_factor() {
        let test = parse_libsvm_str("+1 1:4 3:2").unwrap();
        let scaled = rescale(&test, 2.0).unwrap();
        assert_eq!(scaled.example(0).values(), &[2.0, 1.0]);
        assert_eq!(scaled.scale_factor(), 2.0);
        assert!(rescale(&test, 0.0).is_err());
    }

    #[test]
    fn normalize_identity_case() {
        let ds = parse_libsvm_str("+1 1:1\n-1 2:0.5").unwrap();
        let norm = normalize(&ds).unwrap();
        assert_eq!(norm, ds);
        assert_eq!(norm.scale_factor(), 1.0);
    }

    #[test]
    fn normalize_three_four_five() {
        let ds = parse_libsvm_str("+1 1:3 2:4").unwrap();
        let norm = normalize(&ds).unwrap();
        let e = norm.example(0);
        assert!((e.values()[0] - 0.6).abs() < 1e-15);
        assert!((e.values()[1] - 0.8).abs() < 1e-15);
        assert!((e.sq_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_all_zero() {
        let ds = parse_libsvm_str("+1\n-1 1:0").unwrap();
        assert!(matches!(normalize(&ds), Err(DatasetError::Degenerate)));
    }

    #[test]
    fn split_counts_and_determinism() {
        let text: String = (0..10).map(|i| format!("+1 {}:1\n", i + 1)).collect();
        let ds = parse_libsvm_str(&text).unwrap();
        let (train, test) = split(&ds, 0.2, 7).unwrap();
        let test = test.unwrap();
        assert_eq!(train.n(), 8);
        assert_eq!(test.n(), 2);
        let mut all: Vec<usize> = train
            .examples()
            .iter()
            .chain(test.examples())
            .map(|e| e.indices()[0])
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());

        let (train2, test2) = split(&ds, 0.2, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(Some(test), test2);

        let (full, none) = split(&ds, 0.0, 7).unwrap();
        assert_eq!(full, ds);
        assert!(none.is_none());
        assert!(split(&ds, 1.0, 7).is_err());
    }
}
