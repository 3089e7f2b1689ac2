//! Dataset ingestion and streaming.
//!
//! Parses LIBSVM-format text (gzip accepted for `*.gz` paths), generates
//! synthetic Gaussian streams, and replays a dataset in configurable orders,
//! including deliberately non-i.i.d. ones (label-sorted, block-alternating).

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    #[inline]
    pub fn as_f64(self) -> f64 {
        match self {
            Label::Neg => -1.0,
            Label::Pos => 1.0,
        }
    }

    #[inline]
    pub fn opposite(self) -> Label {
        match self {
            Label::Neg => Label::Pos,
            Label::Pos => Label::Neg,
        }
    }

    /// Default binarization: strictly positive numeric labels are positive.
    #[inline]
    pub fn from_numeric(v: f64) -> Label {
        if v > 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }
}

/// Sparse feature vector with strictly increasing 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    entries: Vec<(u32, f64)>,
}

impl SparseVec {
    pub fn empty() -> Self {
        SparseVec {
            entries: Vec::new(),
        }
    }

    /// Builds from `(index, value)` pairs, validating the index invariant.
    pub fn from_pairs(pairs: Vec<(u32, f64)>) -> Result<Self> {
        let mut prev = 0u32;
        for &(idx, _) in &pairs {
            if idx == 0 {
                return Err(Error::InvalidInput(
                    "feature index 0; indices are 1-based".into(),
                ));
            }
            if idx <= prev {
                return Err(Error::InvalidInput(format!(
                    "feature indices must be strictly increasing: {idx} after {prev}"
                )));
            }
            prev = idx;
        }
        Ok(SparseVec { entries: pairs })
    }

    /// Builds from a dense slice; index `j` (0-based) becomes feature `j+1`.
    /// Exact zeros are kept out of the sparse form.
    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (j as u32 + 1, v))
            .collect();
        SparseVec { entries }
    }

    #[inline]
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries.iter().copied()
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn max_index(&self) -> u32 {
        self.entries.last().map(|&(i, _)| i).unwrap_or(0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            out[(i - 1) as usize] = v;
        }
        out
    }

    /// Squared Euclidean distance via a sorted merge walk.
    pub fn sq_distance(&self, other: &SparseVec) -> f64 {
        let a = &self.entries;
        let b = &other.entries;
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    sum += a[i].1 * a[i].1;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    sum += b[j].1 * b[j].1;
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let d = a[i].1 - b[j].1;
                    sum += d * d;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum += a[i..].iter().map(|(_, v)| v * v).sum::<f64>();
        sum += b[j..].iter().map(|(_, v)| v * v).sum::<f64>();
        sum
    }
}

/// One labeled instance flowing through the stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: SparseVec,
    pub label: Label,
}

/// Immutable, fully loaded dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    dim: usize,
    examples: Vec<Example>,
}

impl Dataset {
    /// Validates the invariants: nonempty, both classes present.
    pub fn new(name: impl Into<String>, examples: Vec<Example>) -> Result<Self> {
        let name = name.into();
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let has_pos = examples.iter().any(|e| e.label == Label::Pos);
        let has_neg = examples.iter().any(|e| e.label == Label::Neg);
        if !has_pos || !has_neg {
            return Err(Error::SingleClass(name));
        }
        let dim = examples
            .iter()
            .map(|e| e.features.max_index() as usize)
            .max()
            .unwrap_or(0);
        Ok(Dataset {
            name,
            dim,
            examples,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.examples.iter().filter(|e| e.label == label).count()
    }

    /// Canonical LIBSVM serialization: `<±1> <idx>:<val> ...`, one per line.
    pub fn to_libsvm_string(&self) -> String {
        let mut out = String::new();
        for ex in &self.examples {
            out.push_str(if ex.label == Label::Pos { "+1" } else { "-1" });
            for (i, v) in ex.features.iter() {
                out.push_str(&format!(" {i}:{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Restricted view used for splits; keeps name and recomputes nothing else.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let examples = indices.iter().map(|&i| self.examples[i].clone()).collect();
        Dataset::new(self.name.clone(), examples)
    }
}

/// Controls multiclass binarization and naming at parse time.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub name: String,
    /// Numeric label values mapped to the positive class. When absent,
    /// strictly positive labels are positive.
    pub positive_labels: Option<Vec<f64>>,
}

impl ParseOptions {
    pub fn named(name: impl Into<String>) -> Self {
        ParseOptions {
            name: name.into(),
            positive_labels: None,
        }
    }

    pub fn with_positive_labels(mut self, labels: Vec<f64>) -> Self {
        self.positive_labels = Some(labels);
        self
    }
}

/// Parses LIBSVM text: one `<label> <idx>:<val> ...` example per line,
/// `#` starts a comment running to end of line.
pub fn parse_libsvm<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<Dataset> {
    let mut examples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut parts = line.split_whitespace();
        let Some(label_tok) = parts.next() else {
            continue;
        };

        let ln = lineno + 1;
        let raw: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: ln,
            msg: format!("invalid label '{label_tok}'"),
        })?;
        let label = match &opts.positive_labels {
            Some(set) => {
                if set.contains(&raw) {
                    Label::Pos
                } else {
                    Label::Neg
                }
            }
            None => Label::from_numeric(raw),
        };

        let mut pairs: Vec<(u32, f64)> = Vec::new();
        let mut prev_idx = 0u32;
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: ln,
                msg: format!("expected <index>:<value>, got '{tok}'"),
            })?;
            let idx: u32 = idx_s.parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("invalid feature index '{idx_s}'"),
            })?;
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("invalid feature value '{val_s}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: ln,
                    msg: "feature index 0; indices are 1-based".into(),
                });
            }
            if idx <= prev_idx {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!(
                        "feature indices must be strictly increasing: {idx} after {prev_idx}"
                    ),
                });
            }
            prev_idx = idx;
            pairs.push((idx, val));
        }
        examples.push(Example {
            features: SparseVec { entries: pairs },
            label,
        });
    }
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(opts.name.clone(), examples)
}

/// Loads a LIBSVM file; transparently decompresses when the path ends in `.gz`.
pub fn load_path(path: impl AsRef<Path>, opts: &ParseOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        Error::InvalidInput(format!(
            "cannot open dataset file '{}': {e}",
            path.display()
        ))
    })?;
    let mut opts = opts.clone();
    if opts.name.is_empty() {
        opts.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string());
    }
    if path.extension().is_some_and(|e| e == "gz") {
        let gz = flate2::read::GzDecoder::new(file);
        parse_libsvm(BufReader::new(gz), &opts)
    } else {
        parse_libsvm(BufReader::new(file), &opts)
    }
}

/// Feature rescaling applied once after load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormScheme {
    #[default]
    None,
    /// Each example rescaled to unit Euclidean norm (zero vectors unchanged).
    UnitL2,
    /// Each dimension rescaled to the unit interval by dataset-wide min/max.
    /// A dimension
    /// absent from some example contributes an implicit 0 to its min/max;
    /// constant dimensions map to 0.
    MinMax,
}

pub fn normalize(ds: &Dataset, scheme: NormScheme) -> Result<Dataset> {
    match scheme {
        NormScheme::None => Ok(ds.clone()),
        NormScheme::UnitL2 => {
            let examples = ds
                .examples
                .iter()
                .map(|ex| {
                    let norm = ex.features.l2_norm();
                    if norm == 0.0 {
                        return ex.clone();
                    }
                    let entries = ex.features.iter().map(|(i, v)| (i, v / norm)).collect();
                    Example {
                        features: SparseVec { entries },
                        label: ex.label,
                    }
                })
                .collect();
            Dataset::new(ds.name.clone(), examples)
        }
        NormScheme::MinMax => Ok(min_max_normalize(ds)),
    }
}

fn min_max_normalize(ds: &Dataset) -> Dataset {
    let d = ds.dim;
    let n = ds.len();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    let mut count = vec![0usize; d];
    for ex in &ds.examples {
        for (i, v) in ex.features.iter() {
            let j = (i - 1) as usize;
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
            count[j] += 1;
        }
    }
    for j in 0..d {
        if count[j] < n {
            min[j] = min[j].min(0.0);
            max[j] = max[j].max(0.0);
        }
    }
    // Image of an implicit zero under the per-dimension affine map; nonzero
    // images force densification of the affected dimension.
    let zero_image: Vec<f64> = (0..d)
        .map(|j| {
            if count[j] == 0 || max[j] <= min[j] {
                0.0
            } else {
                -min[j] / (max[j] - min[j])
            }
        })
        .collect();
    let dense_dims: Vec<u32> = (0..d)
        .filter(|&j| count[j] < n && zero_image[j] != 0.0)
        .map(|j| j as u32 + 1)
        .collect();

    let examples = ds
        .examples
        .iter()
        .map(|ex| {
            let mut entries: Vec<(u32, f64)> = Vec::with_capacity(ex.features.nnz());
            for (i, v) in ex.features.iter() {
                let j = (i - 1) as usize;
                let scaled = if max[j] <= min[j] {
                    0.0
                } else {
                    (v - min[j]) / (max[j] - min[j])
                };
                if scaled != 0.0 {
                    entries.push((i, scaled));
                }
            }
            for &i in &dense_dims {
                if ex.features.iter().all(|(k, _)| k != i) {
                    entries.push((i, zero_image[(i - 1) as usize]));
                }
            }
            entries.sort_by_key(|&(i, _)| i);
            Example {
                features: SparseVec { entries },
                label: ex.label,
            }
        })
        .collect();
    // Scaling never removes a class, so the invariant check cannot fail here.
    Dataset {
        name: ds.name.clone(),
        dim: d,
        examples,
    }
}

/// Arrival order of a replayed dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamOrder {
    /// Uniform permutation; equal seeds yield identical permutations.
    Shuffled(u64),
    /// Original file order.
    AsIs,
    /// All negatives, then all positives: a maximally non-i.i.d. order.
    SortedByLabel,
    /// Alternating same-label runs of `block_size`, negatives first;
    /// within-class order shuffled under `seed`.
    BlockAlternating { block_size: usize, seed: u64 },
}

/// Yields each example of `ds` exactly once, in the requested order.
pub fn stream<'a>(ds: &'a Dataset, order: StreamOrder) -> impl Iterator<Item = &'a Example> + 'a {
    let idx = stream_indices(ds, order);
    idx.into_iter().map(move |i| &ds.examples[i])
}

/// The permutation behind [`stream`], exposed for split bookkeeping.
pub fn stream_indices(ds: &Dataset, order: StreamOrder) -> Vec<usize> {
    let n = ds.len();
    match order {
        StreamOrder::AsIs => (0..n).collect(),
        StreamOrder::Shuffled(seed) => {
            let mut idx: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            idx.shuffle(&mut rng);
            idx
        }
        StreamOrder::SortedByLabel => {
            let mut idx: Vec<usize> = (0..n).collect();
            // Stable partition: negatives first, original order within class.
            idx.sort_by_key(|&i| ds.examples[i].label == Label::Pos);
            idx
        }
        StreamOrder::BlockAlternating { block_size, seed } => {
            let block = block_size.max(1);
            let mut neg: Vec<usize> = Vec::new();
            let mut pos: Vec<usize> = Vec::new();
            for (i, ex) in ds.examples.iter().enumerate() {
                match ex.label {
                    Label::Neg => neg.push(i),
                    Label::Pos => pos.push(i),
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            neg.shuffle(&mut rng);
            pos.shuffle(&mut rng);
            let mut out = Vec::with_capacity(n);
            let (mut ni, mut pi) = (0, 0);
            let mut take_neg = true;
            while ni < neg.len() || pi < pos.len() {
                if take_neg && ni < neg.len() {
                    let end = (ni + block).min(neg.len());
                    out.extend_from_slice(&neg[ni..end]);
                    ni = end;
                } else if !take_neg && pi < pos.len() {
                    let end = (pi + block).min(pos.len());
                    out.extend_from_slice(&pos[pi..end]);
                    pi = end;
                }
                take_neg = !take_neg;
            }
            out
        }
    }
}

pub(crate) fn synthetic_name(n_per_class: usize, dim: usize, separation: f64, seed: u64) -> String {
    format!("synthetic(n={n_per_class},d={dim},sep={separation},seed={seed})")
}

/// Two isotropic unit-variance Gaussian clouds with class means at
/// ±(separation/2)·e₁, emitted alternating positive/negative.
pub fn make_synthetic_gaussians(
    n_per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_per_class < 1 {
        return Err(Error::InvalidInput("n_per_class must be >= 1".into()));
    }
    if dim < 1 {
        return Err(Error::InvalidInput("dim must be >= 1".into()));
    }
    if !(separation >= 0.0) {
        return Err(Error::InvalidInput("separation must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = separation / 2.0;
    let mut examples = Vec::with_capacity(2 * n_per_class);
    let mut buf = vec![0.0f64; dim];
    for _ in 0..n_per_class {
        for &label in &[Label::Pos, Label::Neg] {
            let shift = if label == Label::Pos { half } else { -half };
            for (j, b) in buf.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *b = if j == 0 { z + shift } else { z };
            }
            examples.push(Example {
                features: SparseVec::from_dense(&buf),
                label,
            });
        }
    }
    Dataset::new(synthetic_name(n_per_class, dim, separation, seed), examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse_str(s: &str) -> Result<Dataset> {
        parse_libsvm(Cursor::new(s), &ParseOptions::named("t"))
    }

    #[test]
    fn parse_basic() {
        let ds = parse_str("+1 1:0.5 3:2.0\n-1 2:1.0").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 3);
        assert_eq!(ds.examples()[0].label, Label::Pos);
        assert_eq!(ds.examples()[1].label, Label::Neg);
        assert_eq!(ds.examples()[0].features.to_dense(3), vec![0.5, 0.0, 2.0]);
    }

    #[test]
    fn parse_empty_is_error() {
        assert!(matches!(parse_str(""), Err(Error::EmptyDataset)));
        assert!(matches!(
            parse_str("# only comments\n\n"),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn parse_positive_class_set() {
        let opts = ParseOptions::named("t").with_positive_labels(vec![1.0]);
        let ds = parse_libsvm(Cursor::new("3 1:1.0\n1 2:1.0"), &opts).unwrap();
        assert_eq!(ds.examples()[0].label, Label::Neg);
        assert_eq!(ds.examples()[1].label, Label::Pos);
    }

    #[test]
    fn parse_malformed_carries_line_number() {
        let err = parse_str("+1 1:0.5\n-1 2:oops").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_non_increasing_indices() {
        let err = parse_str("+1 3:1.0 2:1.0\n-1 1:1.0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_str("+1 2:1.0 2:1.0\n-1 1:1.0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn parse_mid_line_comment_and_blank_lines() {
        let ds = parse_str("+1 1:0.5 # trailing note\n\n-1 1:1.0\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.examples()[0].features.nnz(), 1);
    }

    #[test]
    fn default_binarization_maps_zero_to_negative() {
        let ds = parse_str("0 1:1.0\n2 1:1.0").unwrap();
        assert_eq!(ds.examples()[0].label, Label::Neg);
        assert_eq!(ds.examples()[1].label, Label::Pos);
    }

    #[test]
    fn single_class_dataset_is_rejected() {
        assert!(matches!(
            parse_str("+1 1:1.0\n+1 2:1.0"),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn unit_l2_three_four_five() {
        let ds = parse_str("+1 1:3.0 2:4.0\n-1 1:1.0").unwrap();
        let out = normalize(&ds, NormScheme::UnitL2).unwrap();
        let dense = out.examples()[0].features.to_dense(2);
        assert!((dense[0] - 0.6).abs() < 1e-15);
        assert!((dense[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalize_none_is_identity() {
        let ds = parse_str("+1 1:3.0\n-1 2:4.0").unwrap();
        let out = normalize(&ds, NormScheme::None).unwrap();
        assert_eq!(out.examples(), ds.examples());
    }

    #[test]
    fn min_max_constant_dimension_maps_to_zero() {
        let ds = parse_str("+1 1:2.0\n-1 1:2.0\n+1 1:2.0 2:5.0").unwrap();
        let out = normalize(&ds, NormScheme::MinMax).unwrap();
        for ex in out.examples() {
            assert!(
                ex.features.iter().all(|(i, _)| i != 1),
                "constant dim kept: {ex:?}"
            );
        }
        // dim 2 present in one of three examples: min includes implicit 0.
        assert_eq!(out.examples()[2].features.to_dense(2)[1], 1.0);
    }

    #[test]
    fn min_max_negative_min_densifies() {
        let ds = parse_str("+1 1:-2.0\n-1 2:1.0").unwrap();
        let out = normalize(&ds, NormScheme::MinMax).unwrap();
        // dim 1 range [-2, 0]: the negative example maps to 0, the implicit
        // zero of the second example maps to 1.
        assert_eq!(out.examples()[0].features.to_dense(2)[0], 0.0);
        assert_eq!(out.examples()[1].features.to_dense(2)[0], 1.0);
    }

    #[test]
    fn stream_as_is_and_sorted() {
        let ds = parse_str("+1 1:1.0\n-1 2:1.0\n+1 3:1.0").unwrap();
        let as_is: Vec<_> = stream(&ds, StreamOrder::AsIs).map(|e| e.label).collect();
        assert_eq!(as_is, vec![Label::Pos, Label::Neg, Label::Pos]);
        let sorted: Vec<_> = stream(&ds, StreamOrder::SortedByLabel)
            .map(|e| e.label)
            .collect();
        assert_eq!(sorted, vec![Label::Neg, Label::Pos, Label::Pos]);
    }

    #[test]
    fn stream_shuffled_is_deterministic() {
        let ds = make_synthetic_gaussians(20, 3, 1.0, 5).unwrap();
        let a: Vec<usize> = stream_indices(&ds, StreamOrder::Shuffled(7));
        let b: Vec<usize> = stream_indices(&ds, StreamOrder::Shuffled(7));
        assert_eq!(a, b);
        let c: Vec<usize> = stream_indices(&ds, StreamOrder::Shuffled(8));
        assert_ne!(a, c);
    }

    #[test]
    fn block_alternating_runs() {
        let ds = make_synthetic_gaussians(6, 2, 0.0, 1).unwrap();
        let labels: Vec<_> = stream(
            &ds,
            StreamOrder::BlockAlternating {
                block_size: 3,
                seed: 2,
            },
        )
        .map(|e| e.label)
        .collect();
        assert_eq!(labels.len(), 12);
        for chunk in labels.chunks(3) {
            assert!(
                chunk.iter().all(|&l| l == chunk[0]),
                "mixed block: {labels:?}"
            );
        }
        assert_eq!(labels[0], Label::Neg);
        assert_ne!(labels[0], labels[3]);
    }

    #[test]
    fn synthetic_shape_and_determinism() {
        let ds = make_synthetic_gaussians(1, 2, 0.0, 9).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.count_label(Label::Pos), 1);
        assert_eq!(ds.count_label(Label::Neg), 1);

        let a = make_synthetic_gaussians(50, 4, 2.0, 11).unwrap();
        let b = make_synthetic_gaussians(50, 4, 2.0, 11).unwrap();
        assert_eq!(a.examples(), b.examples());
    }

    #[test]
    fn synthetic_separation_gives_high_oracle_auc() {
        // Score each example by its first coordinate and count ordered pairs.
        let ds = make_synthetic_gaussians(200, 3, 10.0, 13).unwrap();
        let score = |ex: &Example| ex.features.to_dense(3)[0];
        let pos: Vec<f64> = ds
            .examples()
            .iter()
            .filter(|e| e.label == Label::Pos)
            .map(score)
            .collect();
        let neg: Vec<f64> = ds
            .examples()
            .iter()
            .filter(|e| e.label == Label::Neg)
            .map(score)
            .collect();
        let mut wins = 0.0;
        for p in &pos {
            for n in &neg {
                if p > n {
                    wins += 1.0;
                } else if p == n {
                    wins += 0.5;
                }
            }
        }
        let auc = wins / (pos.len() * neg.len()) as f64;
        assert!(auc >= 0.99, "oracle AUC {auc}");
    }

    #[test]
    fn libsvm_round_trip() {
        let ds = parse_str("+1 1:0.5 3:2.0\n-1 2:1.0 7:-0.25").unwrap();
        let text = ds.to_libsvm_string();
        let back = parse_str(&text).unwrap();
        assert_eq!(back.examples(), ds.examples());
        assert_eq!(back.dim(), ds.dim());
    }

    #[test]
    fn gzip_load_matches_plain() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        use std::io::Write;

        let text = "+1 1:0.5\n-1 2:1.5\n";
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("toy.libsvm");
        std::fs::write(&plain, text).unwrap();
        let gz_path = dir.path().join("toy.libsvm.gz");
        let mut enc = GzEncoder::new(File::create(&gz_path).unwrap(), Compression::default());
        enc.write_all(text.as_bytes()).unwrap();
        enc.finish().unwrap();

        let a = load_path(&plain, &ParseOptions::default()).unwrap();
        let b = load_path(&gz_path, &ParseOptions::default()).unwrap();
        assert_eq!(a.examples(), b.examples());
    }
}
