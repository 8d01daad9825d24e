//! Multi-label datasets: sparse feature vectors, label sets, file parsing,
//! imbalance statistics, label filtering and cross-validation splits.
//!
//! The on-disk format is one instance per line:
//!
//! ```text
//! #dims 3 5 4
//! 1,3 0:0.5 4:2.0
//!  0:1.0
//! 2 1:1 3:1
//! ```
//!
//! The label field is a comma-separated list (possibly empty) and every
//! following token is `index:value`. The optional `#dims n d m` header pins
//! the dimensions; a bare `n d m` first line is accepted as well.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, ParseError, Result};
use crate::rng::{self, Stream};

/// A feature vector stored as strictly increasing `(index, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector from entries that must already be strictly increasing.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "sparse indices must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(last, _)) = entries.last() {
            if last >= dim {
                return Err(Error::IndexOutOfRange { index: last, bound: dim });
            }
        }
        Ok(SparseVector { dim, entries })
    }

    /// Sorts the entries first; duplicate indices are rejected.
    pub fn from_unsorted(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        Self::new(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector { dim, entries: Vec::new() }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        SparseVector { dim: values.len(), entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

/// The set of relevant labels of one instance, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LabelSet {
    labels: Vec<usize>,
}

impl LabelSet {
    /// Sorts and deduplicates `labels`; every index must be below `m`.
    pub fn new(mut labels: Vec<usize>, m: usize) -> Result<Self> {
        labels.sort_unstable();
        labels.dedup();
        if let Some(&last) = labels.last() {
            if last >= m {
                return Err(Error::IndexOutOfRange { index: last, bound: m });
            }
        }
        Ok(LabelSet { labels })
    }

    /// Trusts the caller that `labels` is strictly increasing.
    pub(crate) fn from_sorted(labels: Vec<usize>) -> Self {
        debug_assert!(labels.windows(2).all(|w| w[0] < w[1]));
        LabelSet { labels }
    }

    pub fn empty() -> Self {
        LabelSet::default()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.labels.binary_search(&j).is_ok()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().copied()
    }

    pub fn max_label(&self) -> Option<usize> {
        self.labels.last().copied()
    }

    /// Size of the intersection with `other` (merge of two sorted lists).
    pub fn intersection_len(&self, other: &LabelSet) -> usize {
        let (mut a, mut b) = (self.labels.iter().peekable(), other.labels.iter().peekable());
        let mut count = 0;
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    count += 1;
                    a.next();
                    b.next();
                }
            }
        }
        count
    }

    pub fn is_disjoint(&self, other: &LabelSet) -> bool {
        self.intersection_len(other) == 0
    }

    /// Labels in `0..m` that are not in the set.
    pub fn complement(&self, m: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(m.saturating_sub(self.len()));
        let mut it = self.labels.iter().peekable();
        for j in 0..m {
            if it.peek() == Some(&&j) {
                it.next();
            } else {
                out.push(j);
            }
        }
        out
    }
}

impl FromIterator<usize> for LabelSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut labels: Vec<usize> = iter.into_iter().collect();
        labels.sort_unstable();
        labels.dedup();
        LabelSet { labels }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: SparseVector,
    pub labels: LabelSet,
}

/// Declared dimensions `(n, d, m)` of a dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub n: usize,
    pub d: usize,
    pub m: usize,
}

/// `n` instances over `d` features and `m` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    m: usize,
    instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(d: usize, m: usize, instances: Vec<Instance>) -> Result<Self> {
        for (i, inst) in instances.iter().enumerate() {
            if inst.features.dim() != d {
                return Err(Error::InvalidArgument(format!(
                    "instance {i}: feature dim {} != {d}",
                    inst.features.dim()
                )));
            }
            if let Some(j) = inst.labels.max_label() {
                if j >= m {
                    return Err(Error::InvalidArgument(format!(
                        "instance {i}: label {j} out of range for m={m}"
                    )));
                }
            }
        }
        Ok(Dataset { d, m, instances })
    }

    pub fn n(&self) -> usize {
        self.instances.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dims(&self) -> Dims {
        Dims { n: self.n(), d: self.d, m: self.m }
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn get(&self, i: usize) -> &Instance {
        &self.instances[i]
    }

    /// Instances at `indices`, in that order, with the parent's `d` and `m`.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            d: self.d,
            m: self.m,
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }

    /// Dense `n × d` feature matrix.
    pub fn feature_matrix(&self) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.n(), self.d);
        for (i, inst) in self.instances.iter().enumerate() {
            for (f, v) in inst.features.iter() {
                x[(i, f)] = v;
            }
        }
        x
    }

    /// Dense `n × m` 0/1 label matrix.
    pub fn label_matrix(&self) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.n(), self.m);
        for (i, inst) in self.instances.iter().enumerate() {
            for j in inst.labels.iter() {
                y[(i, j)] = 1.0;
            }
        }
        y
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.m];
        for inst in &self.instances {
            for j in inst.labels.iter() {
                counts[j] += 1;
            }
        }
        counts
    }

    /// Writes the dataset in the text format read by [`parse_multilabel`],
    /// including a `#dims` header. An instance with no labels and no nonzero
    /// features becomes a blank line, which the parser skips.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#dims {} {} {}", self.n(), self.d, self.m)?;
        for inst in &self.instances {
            let labels: Vec<String> = inst.labels.iter().map(|j| j.to_string()).collect();
            write!(out, "{}", labels.join(","))?;
            for (f, v) in inst.features.iter() {
                write!(out, " {f}:{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Dimensions to enforce; overrides any header in the file.
    pub declared: Option<Dims>,
    /// Shift every feature and label index by −1 on read.
    pub one_based: bool,
}

fn parse_header(line: &str) -> Option<Dims> {
    let rest = line.strip_prefix("#dims").unwrap_or(line);
    let nums: Vec<usize> = rest
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    match nums.as_slice() {
        [n, d, m] => Some(Dims { n: *n, d: *d, m: *m }),
        _ => None,
    }
}

fn parse_index(token: &str, line: usize, one_based: bool) -> Result<usize, ParseError> {
    let raw: usize = token.parse().map_err(|_| ParseError::NonNumeric {
        line,
        token: token.to_string(),
    })?;
    if one_based {
        raw.checked_sub(1).ok_or_else(|| ParseError::Malformed {
            line,
            message: "index 0 in a one-based file".into(),
        })
    } else {
        Ok(raw)
    }
}

/// Parses a dataset. Without declared dimensions, `(n, d, m)` are inferred as
/// (instance count, max feature index + 1, max label index + 1).
///
/// Blank lines and `#` comment lines are skipped.
pub fn parse_multilabel<R: BufRead>(reader: R, opts: ParseOptions) -> Result<Dataset, ParseError> {
    let mut declared = opts.declared;
    let mut rows: Vec<(Vec<usize>, Vec<(usize, f64)>, usize)> = Vec::new();
    let mut first_content = true;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_end();
        if trimmed.trim().is_empty() {
            continue;
        }
        if first_content {
            first_content = false;
            let is_dims = trimmed.starts_with("#dims")
                || (!trimmed.contains(':') && !trimmed.contains(',') && parse_header(trimmed).is_some());
            if is_dims {
                let dims = parse_header(trimmed).ok_or_else(|| ParseError::Malformed {
                    line: line_no,
                    message: "expected `#dims n d m`".into(),
                })?;
                if declared.is_none() {
                    declared = Some(dims);
                }
                continue;
            }
        }
        if trimmed.starts_with('#') {
            continue;
        }

        let mut tokens = trimmed.split_whitespace().peekable();
        let mut labels = Vec::new();
        // Leading whitespace means the label field is empty.
        let starts_blank = trimmed.starts_with(char::is_whitespace);
        if !starts_blank {
            if let Some(first) = tokens.peek() {
                if !first.contains(':') {
                    let field = tokens.next().unwrap_or_default();
                    for tok in field.split(',').filter(|t| !t.is_empty()) {
                        labels.push(parse_index(tok, line_no, opts.one_based)?);
                    }
                }
            }
        }
        let mut feats = Vec::new();
        for tok in tokens {
            let (i, v) = tok.split_once(':').ok_or_else(|| ParseError::Malformed {
                line: line_no,
                message: format!("expected index:value, found {tok:?}"),
            })?;
            let index = parse_index(i, line_no, opts.one_based)?;
            let value: f64 = v.parse().map_err(|_| ParseError::NonNumeric {
                line: line_no,
                token: v.to_string(),
            })?;
            if !value.is_finite() {
                return Err(ParseError::NonNumeric { line: line_no, token: v.to_string() });
            }
            feats.push((index, value));
        }
        feats.sort_by_key(|e| e.0);
        if feats.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(ParseError::Malformed {
                line: line_no,
                message: "duplicate feature index".into(),
            });
        }
        labels.sort_unstable();
        labels.dedup();
        rows.push((labels, feats, line_no));
    }

    let (d, m) = match declared {
        Some(dims) => {
            if dims.n != rows.len() {
                return Err(ParseError::InstanceCount { declared: dims.n, found: rows.len() });
            }
            (dims.d, dims.m)
        }
        None => {
            let d = rows
                .iter()
                .filter_map(|r| r.1.last().map(|e| e.0 + 1))
                .max()
                .unwrap_or(0);
            let m = rows
                .iter()
                .filter_map(|r| r.0.last().map(|j| j + 1))
                .max()
                .unwrap_or(0);
            (d, m)
        }
    };

    let mut instances = Vec::with_capacity(rows.len());
    for (labels, feats, line) in rows {
        if let Some(&(index, _)) = feats.last() {
            if index >= d {
                return Err(ParseError::FeatureOutOfRange { line, index, dim: d });
            }
        }
        if let Some(&index) = labels.last() {
            if index >= m {
                return Err(ParseError::LabelOutOfRange { line, index, labels: m });
            }
        }
        instances.push(Instance {
            features: SparseVector { dim: d, entries: feats },
            labels: LabelSet::from_sorted(labels),
        });
    }
    Ok(Dataset { d, m, instances })
}

/// Label-imbalance profile of a dataset.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetStats {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub per_label_positive_count: Vec<usize>,
    /// `(n − c_j) / c_j`; `None` for labels with no positive instance.
    pub imr_per_label: Vec<Option<f64>>,
    /// Mean of the defined entries of `imr_per_label`.
    pub imr_mean: Option<f64>,
    pub undefined_imr_labels: Vec<usize>,
    pub label_cardinality: f64,
    pub label_density: f64,
}

pub fn compute_stats(ds: &Dataset) -> Result<DatasetStats> {
    let n = ds.n();
    if n == 0 {
        return Err(Error::InvalidArgument("cannot profile an empty dataset".into()));
    }
    let counts = ds.label_counts();
    let imr: Vec<Option<f64>> = counts
        .iter()
        .map(|&c| (c > 0).then(|| (n - c) as f64 / c as f64))
        .collect();
    let defined: Vec<f64> = imr.iter().flatten().copied().collect();
    let imr_mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    let undefined = imr
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(j, _)| j)
        .collect();
    let total: usize = ds.instances().iter().map(|i| i.labels.len()).sum();
    let cardinality = total as f64 / n as f64;
    let density = if ds.m() == 0 { 0.0 } else { cardinality / ds.m() as f64 };
    Ok(DatasetStats {
        n,
        d: ds.d(),
        m: ds.m(),
        per_label_positive_count: counts,
        imr_per_label: imr,
        imr_mean,
        undefined_imr_labels: undefined,
        label_cardinality: cardinality,
        label_density: density,
    })
}

/// Old→new label index map produced by [`filter_min_label_frequency`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub old_to_new: Vec<Option<usize>>,
    pub new_to_old: Vec<usize>,
}

impl LabelMap {
    pub fn as_btree(&self) -> BTreeMap<usize, usize> {
        self.new_to_old.iter().enumerate().map(|(new, &old)| (old, new)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Filtered {
    pub dataset: Dataset,
    pub map: LabelMap,
    /// Set when no label survived the threshold.
    pub empty_label_space: bool,
}

/// Drops labels with fewer than `t` relevant instances and compacts the
/// surviving indices. Instances whose label sets become empty are kept.
pub fn filter_min_label_frequency(ds: &Dataset, t: usize) -> Result<Filtered> {
    if t == 0 {
        return Err(Error::InvalidArgument("threshold must be at least 1".into()));
    }
    let counts = ds.label_counts();
    let mut old_to_new = vec![None; ds.m()];
    let mut new_to_old = Vec::new();
    for (j, &c) in counts.iter().enumerate() {
        if c >= t {
            old_to_new[j] = Some(new_to_old.len());
            new_to_old.push(j);
        }
    }
    let instances = ds
        .instances()
        .iter()
        .map(|inst| Instance {
            features: inst.features.clone(),
            labels: LabelSet::from_sorted(inst.labels.iter().filter_map(|j| old_to_new[j]).collect()),
        })
        .collect();
    let empty = new_to_old.is_empty();
    if empty {
        log::warn!("label filter with t={t} removed every label");
    }
    Ok(Filtered {
        dataset: Dataset { d: ds.d(), m: new_to_old.len(), instances },
        map: LabelMap { old_to_new, new_to_old },
        empty_label_space: empty,
    })
}

/// One cross-validation fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Instance-index partition behind [`kfold_split`]: a seeded permutation cut
/// into `folds` contiguous chunks whose sizes differ by at most one, larger
/// chunks first.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::InvalidArgument(format!(
            "folds must satisfy 2 <= folds <= n (folds={folds}, n={n})"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, Stream::Split));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(perm[start..start + size].to_vec());
        start += size;
    }
    Ok(out)
}

pub fn kfold_split(ds: &Dataset, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let parts = kfold_indices(ds.n(), folds, seed)?;
    let mut fold_of = vec![0usize; ds.n()];
    for (f, part) in parts.iter().enumerate() {
        for &i in part {
            fold_of[i] = f;
        }
    }
    Ok(parts
        .iter()
        .enumerate()
        .map(|(f, test_idx)| {
            let train_idx: Vec<usize> = (0..ds.n()).filter(|&i| fold_of[i] != f).collect();
            Fold {
                train: ds.subset(&train_idx),
                test: ds.subset(test_idx),
                train_indices: train_idx,
                test_indices: test_idx.clone(),
            }
        })
        .collect())
}
