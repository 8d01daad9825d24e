//! RMLS training: negative-sampled cost-sensitive loss, mini-batch SGD and
//! Adagrad.
//!
//! For every instance the trainer keeps all relevant labels `P` and draws
//! `alpha·|P|` irrelevant labels uniformly, fresh for every batch. The sampled
//! loss is an unbiased estimate of the full loss with irrelevant labels
//! weighted by `1/C`, `C = |N| / (alpha·|P|)`.

mod adagrad;
mod loss;
mod objective;
mod sampling;

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;

pub use adagrad::{adagrad_update, AdagradState};
pub use loss::{point_loss, LossKind, PointLoss, PROB_FLOOR};
pub use objective::{
    batch_gradients, batch_objective, batch_objective_and_gradients, cost_sensitive_loss, implied_cost_ratio,
    sampled_instance_loss, touched_labels, BatchItem, BatchStats, Gradients,
};
pub use sampling::sample_negatives;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{init_model, EmbeddingModel, Theta};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    /// Sampled negatives per relevant label.
    pub alpha: usize,
    pub lambda: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub theta: Theta,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 50,
            alpha: 5,
            lambda: 0.001,
            eta: 0.1,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 30,
            loss: LossKind::CrossEntropy,
            theta: Theta::Identity,
            seed: 0,
            init_scale: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.k == 0 {
            return bad("k must be positive");
        }
        if self.alpha == 0 {
            return bad("alpha must be a positive integer");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be nonnegative");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be nonnegative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive");
        }
        Ok(())
    }
}

/// One line of training progress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochProgress {
    pub epoch: usize,
    pub mean_objective: f64,
    pub elapsed_seconds: f64,
}

pub trait ProgressSink {
    fn epoch(&mut self, progress: &EpochProgress);
}

impl ProgressSink for Vec<EpochProgress> {
    fn epoch(&mut self, progress: &EpochProgress) {
        self.push(*progress);
    }
}

/// Discards progress.
pub struct NoProgress;

impl ProgressSink for NoProgress {
    fn epoch(&mut self, _: &EpochProgress) {}
}

/// Writes `epoch,mean_objective,elapsed_seconds` rows.
pub struct CsvProgress<W: Write> {
    out: W,
    header_written: bool,
}

impl<W: Write> CsvProgress<W> {
    pub fn new(out: W) -> Self {
        CsvProgress { out, header_written: false }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> ProgressSink for CsvProgress<W> {
    fn epoch(&mut self, p: &EpochProgress) {
        if !self.header_written {
            let _ = writeln!(self.out, "epoch,mean_objective,elapsed_seconds");
            self.header_written = true;
        }
        let _ = writeln!(self.out, "{},{},{:.6}", p.epoch, p.mean_objective, p.elapsed_seconds);
    }
}

/// Trains an RMLS model with mini-batch SGD and Adagrad.
pub fn train(ds: &Dataset, config: &TrainConfig, progress: &mut dyn ProgressSink) -> Result<EmbeddingModel> {
    config.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    let sigma = config.loss.natural_sigma();
    let mut model = init_model(ds.d(), config.k, ds.m(), config.seed, config.init_scale, config.theta, sigma)?;
    let mut state = AdagradState::new(&model);
    let mut shuffle_rng = rng::stream(config.seed, Stream::Shuffle);
    let mut sample_rng = rng::stream(config.seed, Stream::Sampling);
    let mut order: Vec<usize> = (0..ds.n()).collect();
    let start = Instant::now();
    let mut clamp_events = 0usize;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<BatchItem<'_>> = chunk
                .iter()
                .map(|&i| {
                    let inst = ds.get(i);
                    BatchItem {
                        x: &inst.features,
                        positives: &inst.labels,
                        negatives: sample_negatives(&inst.labels, ds.m(), config.alpha, &mut sample_rng),
                    }
                })
                .collect();
            let (stats, grads) = batch_objective_and_gradients(&model, &batch, config.lambda, config.loss)?;
            if !stats.objective.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite objective at epoch {epoch}, batch {b}; try a smaller eta (currently {})",
                    config.eta
                )));
            }
            clamp_events += stats.clamped;
            adagrad_update(&mut state, &mut model, &grads, config.eta, config.epsilon);
            sum += stats.objective;
            batches += 1;
        }
        if !model.is_finite() {
            return Err(Error::Numerical(format!(
                "parameters became non-finite at epoch {epoch}; try a smaller eta (currently {})",
                config.eta
            )));
        }
        progress.epoch(&EpochProgress {
            epoch,
            mean_objective: sum / batches as f64,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
    }
    if clamp_events > 0 {
        log::debug!("{clamp_events} cross-entropy terms hit the probability clamp");
    }
    Ok(model)
}
