//! Cross-validation harness and report rendering.

use std::time::Instant;

use serde::Serialize;

use crate::dataset::{kfold_split, Dataset, LabelSet, SparseVector};
use crate::error::{Error, Result};
use crate::lsdr::{cplst_fit, cssml_fit, faie_fit, plst_fit, LsdrMethod, LsdrModel, DEFAULT_RIDGE};
use crate::metrics::{evaluate, AllIrrelevant, MetricTriple, Predictor};
use crate::model::{EmbeddingModel, PredictionRule};
use crate::rbl::{leml_train, wsabie_train, LemlConfig, WarpConfig};
use crate::training::{train, NoProgress, TrainConfig};

/// Any fitted model this crate can produce.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Embedding(EmbeddingModel),
    Lsdr(LsdrModel),
    Baseline { m: usize },
}

impl TrainedModel {
    pub fn d(&self) -> Option<usize> {
        match self {
            TrainedModel::Embedding(m) => Some(m.d()),
            TrainedModel::Lsdr(m) => Some(m.d()),
            TrainedModel::Baseline { .. } => None,
        }
    }
}

impl Predictor for TrainedModel {
    fn num_labels(&self) -> usize {
        match self {
            TrainedModel::Embedding(m) => m.m(),
            TrainedModel::Lsdr(m) => m.m(),
            TrainedModel::Baseline { m } => *m,
        }
    }

    fn predict_scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Embedding(m) => m.predict_scores(x),
            TrainedModel::Lsdr(m) => m.predict(x),
            TrainedModel::Baseline { m } => AllIrrelevant { m: *m }.predict_scores(x),
        }
    }

    fn predict_labels(&self, x: &SparseVector, rule: &PredictionRule) -> Result<LabelSet> {
        match self {
            TrainedModel::Baseline { .. } => Ok(LabelSet::empty()),
            _ => Ok(rule.apply(&self.predict_scores(x)?)),
        }
    }
}

/// An algorithm together with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainerSpec {
    Rmls(TrainConfig),
    Lsdr { method: LsdrMethod, k: usize, ridge: f64, faie_alpha: f64 },
    Wsabie(WarpConfig),
    Leml(LemlConfig),
    Baseline,
}

impl TrainerSpec {
    pub fn lsdr(method: LsdrMethod, k: usize) -> Self {
        TrainerSpec::Lsdr { method, k, ridge: DEFAULT_RIDGE, faie_alpha: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TrainerSpec::Rmls(_) => "rmls",
            TrainerSpec::Lsdr { method, .. } => method.name(),
            TrainerSpec::Wsabie(_) => "wsabie",
            TrainerSpec::Leml(_) => "leml",
            TrainerSpec::Baseline => "baseline",
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            TrainerSpec::Rmls(c) => Some(c.k),
            TrainerSpec::Lsdr { k, .. } => Some(*k),
            TrainerSpec::Wsabie(c) => Some(c.k),
            TrainerSpec::Leml(c) => Some(c.k),
            TrainerSpec::Baseline => None,
        }
    }

    pub fn fit(&self, ds: &Dataset) -> Result<TrainedModel> {
        Ok(match self {
            TrainerSpec::Rmls(cfg) => TrainedModel::Embedding(train(ds, cfg, &mut NoProgress)?),
            TrainerSpec::Lsdr { method, k, ridge, faie_alpha } => TrainedModel::Lsdr(
                match method {
                    LsdrMethod::Plst => plst_fit(ds, *k, *ridge)?,
                    LsdrMethod::Cplst => cplst_fit(ds, *k, *ridge)?,
                    LsdrMethod::Faie => faie_fit(ds, *k, *faie_alpha, *ridge)?,
                    LsdrMethod::Cssml => cssml_fit(ds, *k, *ridge)?,
                }
                .model,
            ),
            TrainerSpec::Wsabie(cfg) => TrainedModel::Embedding(wsabie_train(ds, cfg)?),
            TrainerSpec::Leml(cfg) => TrainedModel::Embedding(leml_train(ds, cfg)?.model),
            TrainerSpec::Baseline => TrainedModel::Baseline { m: ds.m() },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanStd { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3}±{:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(flatten)]
    pub metrics: MetricTriple,
    pub train_seconds: f64,
    pub empty_convention_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub algorithm: String,
    pub k: Option<usize>,
    pub folds: usize,
    pub seed: u64,
    pub rule: String,
    pub hamming_loss: MeanStd,
    pub f_score: MeanStd,
    pub accuracy: MeanStd,
    pub wall_time_seconds: MeanStd,
    pub per_fold: Vec<FoldResult>,
}

impl MetricsReport {
    /// `algorithm,k,fold,hamming_loss,f_score,accuracy` rows; no timings, so
    /// the bytes depend only on the inputs and seeds.
    pub fn csv_rows(&self) -> String {
        let k = self.k.map_or_else(|| "-".to_string(), |k| k.to_string());
        let mut out = String::new();
        for f in &self.per_fold {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.algorithm, k, f.fold, f.metrics.hamming_loss, f.metrics.f_score, f.metrics.accuracy
            ));
        }
        out
    }

    pub const CSV_HEADER: &'static str = "algorithm,k,fold,hamming_loss,f_score,accuracy\n";

    /// One Markdown row: `| algorithm | k | hamming | f | accuracy |`.
    pub fn markdown_row(&self) -> String {
        let k = self.k.map_or_else(|| "-".to_string(), |k| k.to_string());
        format!(
            "| {} | {} | {} | {} | {} |",
            self.algorithm, k, self.hamming_loss, self.f_score, self.accuracy
        )
    }

    pub const MARKDOWN_HEADER: &'static str =
        "| Algorithm | k | Hamming loss | F score | Accuracy |\n|---|---|---|---|---|";
}

/// Trains on each training split and evaluates on its test split. Folds may
/// run on up to `jobs` threads; results are merged in fold order.
pub fn cross_validate(
    ds: &Dataset,
    spec: &TrainerSpec,
    folds: usize,
    seed: u64,
    rule: &PredictionRule,
    jobs: usize,
) -> Result<MetricsReport> {
    let splits = kfold_split(ds, folds, seed)?;
    let run = |(f, fold): (usize, &crate::dataset::Fold)| -> Result<FoldResult> {
        let start = Instant::now();
        let model = spec.fit(&fold.train).map_err(|e| Error::Fold { fold: f, source: Box::new(e) })?;
        let secs = start.elapsed().as_secs_f64();
        let eval = evaluate(&model, &fold.test, rule).map_err(|e| Error::Fold { fold: f, source: Box::new(e) })?;
        Ok(FoldResult {
            fold: f,
            n_train: fold.train.n(),
            n_test: fold.test.n(),
            metrics: eval.means,
            train_seconds: secs,
            empty_convention_hits: eval.empty_convention_hits,
        })
    };
    let results: Vec<Result<FoldResult>> = if jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| splits.par_iter().enumerate().map(run).collect())
    } else {
        splits.iter().enumerate().map(run).collect()
    };
    let per_fold: Vec<FoldResult> = results.into_iter().collect::<Result<_>>()?;
    let pick = |g: fn(&FoldResult) -> f64| MeanStd::of(&per_fold.iter().map(g).collect::<Vec<_>>());
    let hits: usize = per_fold.iter().map(|f| f.empty_convention_hits).sum();
    if hits > 0 {
        log::info!("{hits} test instances had empty truth and empty prediction (scored 1 by convention)");
    }
    Ok(MetricsReport {
        algorithm: spec.name().to_string(),
        k: spec.k(),
        folds,
        seed,
        rule: rule.to_string(),
        hamming_loss: pick(|f| f.metrics.hamming_loss),
        f_score: pick(|f| f.metrics.f_score),
        accuracy: pick(|f| f.metrics.accuracy),
        wall_time_seconds: pick(|f| f.train_seconds),
        per_fold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std() {
        let v = MeanStd::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(v.mean, 2.5);
        assert!((v.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[7.0]).std, 0.0);
        assert_eq!(format!("{}", MeanStd { mean: 0.0634, std: 0.0021 }), "0.063±0.002");
    }
}
