//! Example-based multi-label metrics.
//!
//! Conventions for empty sets: F score and accuracy are 1 when both sets are
//! empty, and F score is 0 whenever the intersection is empty otherwise.

use crate::dataset::{Dataset, LabelSet, SparseVector};
use crate::error::{Error, Result};
use crate::model::PredictionRule;

/// `|pred Δ truth| / m`.
pub fn hamming_loss(pred: &LabelSet, truth: &LabelSet, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let inter = pred.intersection_len(truth);
    (pred.len() + truth.len() - 2 * inter) as f64 / m as f64
}

/// Harmonic mean of precision and recall, i.e. `2|p ∩ t| / (|p| + |t|)`.
pub fn f_score(pred: &LabelSet, truth: &LabelSet) -> f64 {
    if pred.is_empty() && truth.is_empty() {
        return 1.0;
    }
    let inter = pred.intersection_len(truth);
    if inter == 0 {
        return 0.0;
    }
    let p = inter as f64 / pred.len() as f64;
    let r = inter as f64 / truth.len() as f64;
    2.0 * p * r / (p + r)
}

/// `|p ∩ t| / |p ∪ t|`.
pub fn accuracy(pred: &LabelSet, truth: &LabelSet) -> f64 {
    let inter = pred.intersection_len(truth);
    let union = pred.len() + truth.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Anything that turns a feature vector into label scores and a label set.
pub trait Predictor: Sync {
    fn num_labels(&self) -> usize;

    fn predict_scores(&self, x: &SparseVector) -> Result<Vec<f64>>;

    fn predict_labels(&self, x: &SparseVector, rule: &PredictionRule) -> Result<LabelSet> {
        Ok(rule.apply(&self.predict_scores(x)?))
    }
}

impl Predictor for crate::model::EmbeddingModel {
    fn num_labels(&self) -> usize {
        self.m()
    }
    fn predict_scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        crate::model::EmbeddingModel::predict_scores(self, x)
    }
}

impl Predictor for crate::lsdr::LsdrModel {
    fn num_labels(&self) -> usize {
        self.m()
    }
    fn predict_scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        self.predict(x)
    }
}

/// Predicts every label irrelevant, whatever the rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllIrrelevant {
    pub m: usize,
}

impl Predictor for AllIrrelevant {
    fn num_labels(&self) -> usize {
        self.m
    }
    fn predict_scores(&self, _x: &SparseVector) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.m])
    }
    fn predict_labels(&self, _x: &SparseVector, _rule: &PredictionRule) -> Result<LabelSet> {
        Ok(LabelSet::empty())
    }
}

/// Dataset means of the three metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct MetricTriple {
    pub hamming_loss: f64,
    pub f_score: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Evaluation {
    pub means: MetricTriple,
    /// Instances where both the prediction and the truth were empty.
    pub empty_convention_hits: usize,
}

pub fn evaluate(predictor: &dyn Predictor, ds: &Dataset, rule: &PredictionRule) -> Result<Evaluation> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate on an empty dataset".into()));
    }
    if predictor.num_labels() != ds.m() {
        return Err(Error::DimensionMismatch { expected: ds.m(), found: predictor.num_labels() });
    }
    let mut sums = MetricTriple::default();
    let mut hits = 0;
    for inst in ds.instances() {
        let pred = predictor.predict_labels(&inst.features, rule)?;
        if pred.is_empty() && inst.labels.is_empty() {
            hits += 1;
        }
        sums.hamming_loss += hamming_loss(&pred, &inst.labels, ds.m());
        sums.f_score += f_score(&pred, &inst.labels);
        sums.accuracy += accuracy(&pred, &inst.labels);
    }
    let n = ds.n() as f64;
    Ok(Evaluation {
        means: MetricTriple {
            hamming_loss: sums.hamming_loss / n,
            f_score: sums.f_score / n,
            accuracy: sums.accuracy / n,
        },
        empty_convention_hits: hits,
    })
}
