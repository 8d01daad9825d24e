//! Seeded synthetic multi-label data.
//!
//! Labels follow a Zipf popularity curve, so rare labels are heavily
//! imbalanced. Features are bag-of-words counts: every relevant label emits a
//! few words from its own vocabulary and the rest is background noise. Rows
//! are L2-normalized.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;

use crate::dataset::{Dataset, Instance, LabelSet, SparseVector};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Target mean number of relevant labels per instance (at least 1).
    pub cardinality: f64,
    /// Zipf exponent for label popularity.
    pub zipf: f64,
    /// Vocabulary size of each label.
    pub words_per_label: usize,
    /// Words emitted per relevant label.
    pub signal_words: usize,
    /// Background words per instance.
    pub noise_words: usize,
    /// Probability that a relevant label is swapped for a random one after
    /// the features are drawn.
    pub label_noise: f64,
}

impl SyntheticConfig {
    /// Same shape as the Enron e-mail corpus: 1702 × 1001 features, 53 labels,
    /// about 3.4 labels per message.
    pub fn enron_shaped() -> Self {
        SyntheticConfig {
            n: 1702,
            d: 1001,
            m: 53,
            cardinality: 3.4,
            zipf: 1.0,
            words_per_label: 12,
            signal_words: 4,
            noise_words: 30,
            label_noise: 0.1,
        }
    }

    /// Smaller imbalanced set used to study the sampling ratio.
    pub fn imbalanced() -> Self {
        SyntheticConfig {
            n: 1000,
            d: 300,
            m: 50,
            cardinality: 4.0,
            zipf: 0.8,
            words_per_label: 8,
            signal_words: 3,
            noise_words: 20,
            label_noise: 0.1,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.n == 0 || self.d == 0 || self.m == 0 {
            return bad("n, d and m must be positive");
        }
        if !(self.cardinality >= 1.0 && self.cardinality <= self.m as f64) {
            return bad("cardinality must lie in [1, m]");
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return bad("label_noise must lie in [0, 1]");
        }
        if self.words_per_label == 0 || self.words_per_label > self.d {
            return bad("words_per_label must lie in [1, d]");
        }
        Ok(())
    }
}

const EXTRA_TRIALS: usize = 12;

pub fn generate(cfg: &SyntheticConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = rng::stream(seed, Stream::Synthetic);
    let vocab: Vec<Vec<usize>> = (0..cfg.m)
        .map(|_| rand::seq::index::sample(&mut rng, cfg.d, cfg.words_per_label).into_vec())
        .collect();
    let popularity =
        WeightedIndex::new((0..cfg.m).map(|j| 1.0 / ((j + 1) as f64).powf(cfg.zipf))).expect("weights are positive");
    let extra_p = ((cfg.cardinality - 1.0) / EXTRA_TRIALS as f64).min(1.0);

    let mut instances = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let want = (1 + (0..EXTRA_TRIALS).filter(|_| rng.gen_bool(extra_p)).count()).min(cfg.m);
        let mut labels: Vec<usize> = Vec::with_capacity(want);
        while labels.len() < want {
            let j = popularity.sample(&mut rng);
            if !labels.contains(&j) {
                labels.push(j);
            }
        }
        let mut counts = vec![0.0f64; cfg.d];
        for &j in &labels {
            for _ in 0..cfg.signal_words {
                counts[vocab[j][rng.gen_range(0..cfg.words_per_label)]] += 1.0;
            }
        }
        for _ in 0..cfg.noise_words {
            counts[rng.gen_range(0..cfg.d)] += 1.0;
        }
        for slot in labels.iter_mut() {
            if rng.gen_bool(cfg.label_noise) {
                *slot = rng.gen_range(0..cfg.m);
            }
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        let entries: Vec<(usize, f64)> =
            counts.iter().enumerate().filter(|(_, c)| **c > 0.0).map(|(i, c)| (i, c / norm)).collect();
        instances.push(Instance {
            features: SparseVector::new(cfg.d, entries)?,
            labels: LabelSet::new(labels, cfg.m)?,
        });
    }
    Dataset::new(cfg.d, cfg.m, instances)
}
