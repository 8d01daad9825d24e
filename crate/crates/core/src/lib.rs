//! Multi-label classification with low-dimensional label embeddings.
//!
//! The main learner, [`train`], fits a linear feature map `W` and one
//! embedding vector per label, scoring label `j` as `σ(θ(xW)·l_j)`. Each
//! update uses all relevant labels of an instance and a small uniform sample
//! of the irrelevant ones, reweighted so the sampled loss stays unbiased.
//!
//! Baselines live in [`lsdr`] (PLST, CPLST, FaIE, CSS_ML) and [`rbl`]
//! (WSABIE, LEML). [`eval::cross_validate`] runs any of them under k-fold
//! cross-validation.

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod lsdr;
pub mod metrics;
pub mod model;
pub mod persist;
pub mod rbl;
pub mod rng;
pub mod synthetic;
pub mod training;

pub use dataset::{
    compute_stats, filter_min_label_frequency, kfold_split, parse_multilabel, Dataset, DatasetStats, Dims, Instance,
    LabelSet, ParseOptions, SparseVector,
};
pub use error::{Error, ParseError, Result};
pub use eval::{cross_validate, MetricsReport, TrainedModel, TrainerSpec};
pub use metrics::{accuracy, evaluate, f_score, hamming_loss, Predictor};
pub use model::{init_model, EmbeddingModel, PredictionRule, Sigma, Theta};
pub use training::{train, LossKind, TrainConfig};
