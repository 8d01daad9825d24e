//! The shared representation model.
//!
//! A sparse feature vector `x` is mapped to `h = θ(xW)` with `W` of shape
//! `d × k`; label `j` owns a vector `l_j` of length `k` and scores
//! `f^j(x) = σ(hᵀ l_j)`. RMLS, WSABIE and LEML all produce this model, and a
//! fitted LSDR model converts into it with identity activations.

use rand::Rng as _;
use rand::seq::SliceRandom as _;

use crate::dataset::{LabelSet, SparseVector};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Activation applied to `xW`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Theta {
    #[default]
    Identity,
    Tanh,
    Rectifier,
}

impl Theta {
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Theta::Identity => u,
            Theta::Tanh => u.tanh(),
            Theta::Rectifier => u.max(0.0),
        }
    }

    /// Derivative at pre-activation `u`.
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Theta::Identity => 1.0,
            Theta::Tanh => {
                let t = u.tanh();
                1.0 - t * t
            }
            Theta::Rectifier => {
                if u > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Theta::Identity => 0,
            Theta::Tanh => 1,
            Theta::Rectifier => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Theta::Identity),
            1 => Some(Theta::Tanh),
            2 => Some(Theta::Rectifier),
            _ => None,
        }
    }
}

impl std::str::FromStr for Theta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "linear" => Ok(Theta::Identity),
            "tanh" => Ok(Theta::Tanh),
            "rectifier" | "relu" => Ok(Theta::Rectifier),
            _ => Err(Error::Config(format!("unknown theta activation {s:?}"))),
        }
    }
}

/// Output activation applied to `hᵀ l_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sigma {
    #[default]
    Logistic,
    Identity,
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Sigma {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Sigma::Logistic => logistic(z),
            Sigma::Identity => z,
        }
    }

    /// Derivative at raw score `z`, given `a = σ(z)`.
    pub fn derivative(self, _z: f64, a: f64) -> f64 {
        match self {
            Sigma::Logistic => a * (1.0 - a),
            Sigma::Identity => 1.0,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Sigma::Logistic => 0,
            Sigma::Identity => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Sigma::Logistic),
            1 => Some(Sigma::Identity),
            _ => None,
        }
    }
}

impl std::str::FromStr for Sigma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" | "sigmoid" => Ok(Sigma::Logistic),
            "identity" | "linear" => Ok(Sigma::Identity),
            _ => Err(Error::Config(format!("unknown sigma activation {s:?}"))),
        }
    }
}

/// How a score vector becomes a predicted label set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionRule {
    /// Every label whose score is at least the cutoff.
    Threshold(f64),
    /// The `k` highest scores, ties toward the smaller label index.
    TopK(usize),
}

impl Default for PredictionRule {
    fn default() -> Self {
        PredictionRule::Threshold(0.5)
    }
}

impl PredictionRule {
    pub fn apply(&self, scores: &[f64]) -> LabelSet {
        match *self {
            PredictionRule::Threshold(cut) => LabelSet::from_sorted(
                scores
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| **s >= cut)
                    .map(|(j, _)| j)
                    .collect(),
            ),
            PredictionRule::TopK(k) => {
                let mut order: Vec<usize> = (0..scores.len()).collect();
                // stable sort keeps smaller indices first among equal scores
                order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
                order.truncate(k.min(scores.len()));
                order.into_iter().collect()
            }
        }
    }

    /// Checks the rule against the output activation and label count.
    pub fn validate(&self, sigma: Sigma, m: usize) -> Result<()> {
        match *self {
            PredictionRule::Threshold(c) if !c.is_finite() => {
                Err(Error::InvalidArgument("threshold must be finite".into()))
            }
            PredictionRule::Threshold(c) if sigma == Sigma::Logistic && !(0.0 < c && c < 1.0) => Err(
                Error::InvalidArgument(format!("threshold {c} outside (0,1) for logistic output")),
            ),
            PredictionRule::TopK(0) => Err(Error::InvalidArgument("top_k must be positive".into())),
            PredictionRule::TopK(k) if k > m => {
                Err(Error::InvalidArgument(format!("top_k={k} exceeds m={m}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for PredictionRule {
    type Err = Error;
    /// `threshold:0.5` or `topk:3`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("rule {s:?} must look like threshold:X or topk:K")))?;
        match kind {
            "threshold" => value
                .parse()
                .map(PredictionRule::Threshold)
                .map_err(|_| Error::Config(format!("bad threshold {value:?}"))),
            "topk" | "top_k" => value
                .parse()
                .map(PredictionRule::TopK)
                .map_err(|_| Error::Config(format!("bad top-k {value:?}"))),
            _ => Err(Error::Config(format!("unknown rule kind {kind:?}"))),
        }
    }
}

impl std::fmt::Display for PredictionRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PredictionRule::Threshold(c) => write!(f, "threshold:{c}"),
            PredictionRule::TopK(k) => write!(f, "topk:{k}"),
        }
    }
}

/// Feature mapping `W` (row-major `d × k`) and label vectors `L` (stored
/// label by label, i.e. the `k × m` matrix in column-major order).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    d: usize,
    k: usize,
    m: usize,
    w: Vec<f64>,
    l: Vec<f64>,
    pub theta: Theta,
    pub sigma: Sigma,
}

impl EmbeddingModel {
    pub fn zeros(d: usize, k: usize, m: usize, theta: Theta, sigma: Sigma) -> Self {
        EmbeddingModel { d, k, m, w: vec![0.0; d * k], l: vec![0.0; k * m], theta, sigma }
    }

    /// `w` is row-major `d × k`; `l` holds `m` consecutive label vectors of length `k`.
    pub fn from_parts(
        d: usize,
        k: usize,
        m: usize,
        w: Vec<f64>,
        l: Vec<f64>,
        theta: Theta,
        sigma: Sigma,
    ) -> Result<Self> {
        if w.len() != d * k {
            return Err(Error::DimensionMismatch { expected: d * k, found: w.len() });
        }
        if l.len() != k * m {
            return Err(Error::DimensionMismatch { expected: k * m, found: l.len() });
        }
        if w.iter().chain(l.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("model contains non-finite entries".into()));
        }
        Ok(EmbeddingModel { d, k, m, w, l, theta, sigma })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of trainable parameters, `d·k + k·m`.
    pub fn parameter_count(&self) -> usize {
        self.d * self.k + self.k * self.m
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }
    pub fn w_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }
    pub fn l(&self) -> &[f64] {
        &self.l
    }
    pub fn l_mut(&mut self) -> &mut [f64] {
        &mut self.l
    }

    pub fn w_row(&self, f: usize) -> &[f64] {
        &self.w[f * self.k..(f + 1) * self.k]
    }

    pub fn label_vec(&self, j: usize) -> &[f64] {
        &self.l[j * self.k..(j + 1) * self.k]
    }

    pub fn label_vec_mut(&mut self, j: usize) -> &mut [f64] {
        let k = self.k;
        &mut self.l[j * k..(j + 1) * k]
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(self.l.iter()).all(|v| v.is_finite())
    }

    /// Pre-activation `xW`.
    pub fn pre_activation(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: x.dim() });
        }
        let mut u = vec![0.0; self.k];
        for (f, v) in x.iter() {
            for (acc, w) in u.iter_mut().zip(self.w_row(f)) {
                *acc += v * w;
            }
        }
        Ok(u)
    }

    /// `h = θ(xW)`.
    pub fn represent(&self, x: &SparseVector) -> Result<Vec<f64>> {
        let mut h = self.pre_activation(x)?;
        for v in &mut h {
            *v = self.theta.apply(*v);
        }
        Ok(h)
    }

    /// Raw score `hᵀ l_j`, before σ.
    pub fn raw_score(&self, h: &[f64], j: usize) -> f64 {
        dot(h, self.label_vec(j))
    }

    /// `σ(hᵀ l_j)`.
    pub fn score(&self, h: &[f64], j: usize) -> Result<f64> {
        if j >= self.m {
            return Err(Error::IndexOutOfRange { index: j, bound: self.m });
        }
        if h.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, found: h.len() });
        }
        Ok(self.sigma.apply(self.raw_score(h, j)))
    }

    pub fn predict_scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        let h = self.represent(x)?;
        Ok((0..self.m).map(|j| self.sigma.apply(self.raw_score(&h, j))).collect())
    }

    pub fn predict_labels(&self, x: &SparseVector, rule: &PredictionRule) -> Result<LabelSet> {
        Ok(rule.apply(&self.predict_scores(x)?))
    }

    pub fn frobenius_sq_w(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_sq_l(&self) -> f64 {
        self.l.iter().map(|v| v * v).sum()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Random model with entries i.i.d. uniform on `[−scale/√k, scale/√k]`.
pub fn init_model(
    d: usize,
    k: usize,
    m: usize,
    seed: u64,
    scale: f64,
    theta: Theta,
    sigma: Sigma,
) -> Result<EmbeddingModel> {
    if d == 0 || k == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("dims must be positive (d={d}, k={k}, m={m})")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("init scale must be positive, got {scale}")));
    }
    let bound = scale / (k as f64).sqrt();
    let mut rng = rng::stream(seed, Stream::Init);
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len).map(|_| rng.gen_range(-bound..=bound)).collect()
    };
    let w = draw(d * k);
    let l = draw(k * m);
    Ok(EmbeddingModel { d, k, m, w, l, theta, sigma })
}

/// Random sparse vector helper used by tests across the crate.
#[doc(hidden)]
pub fn random_sparse(rng: &mut crate::rng::Rng, dim: usize, density: f64) -> SparseVector {
    let mut entries: Vec<(usize, f64)> = (0..dim)
        .filter_map(|i| rng.gen_bool(density).then(|| (i, rng.gen_range(-1.0..1.0))))
        .collect();
    if entries.is_empty() && dim > 0 {
        entries.push((rng.gen_range(0..dim), 1.0));
    }
    entries.shuffle(rng);
    SparseVector::from_unsorted(dim, entries).expect("indices are unique")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_model(3, 2, 4, 7, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        let b = init_model(3, 2, 4, 7, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        assert_eq!(a.w(), b.w());
        assert_eq!(a.l(), b.l());
        let c = init_model(5, 4, 6, 1, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        assert!(c.w().iter().chain(c.l()).all(|v| v.abs() <= 0.5));
        assert_eq!(c.parameter_count(), 5 * 4 + 4 * 6);
        assert!(init_model(0, 1, 1, 0, 1.0, Theta::Identity, Sigma::Logistic).is_err());
        assert!(init_model(1, 1, 1, 0, 0.0, Theta::Identity, Sigma::Logistic).is_err());
    }

    #[test]
    fn init_mean_within_three_sigma() {
        // 10^4 draws of U(-b, b): sd of the mean is b / sqrt(3 * 10^4)
        let model = init_model(2500, 4, 1, 11, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        let n = model.w().len() as f64;
        let mean = model.w().iter().sum::<f64>() / n;
        let b = 0.5;
        assert!(mean.abs() < 3.0 * b / (3.0 * n).sqrt(), "mean {mean}");
    }

    #[test]
    fn represent_basis_and_zero() {
        let model = init_model(4, 3, 2, 5, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        let e2 = SparseVector::new(4, vec![(2, 1.0)]).unwrap();
        assert_eq!(model.represent(&e2).unwrap(), model.w_row(2));
        for theta in [Theta::Identity, Theta::Tanh] {
            let mut m2 = model.clone();
            m2.theta = theta;
            assert!(m2.represent(&SparseVector::zeros(4)).unwrap().iter().all(|v| *v == 0.0));
            assert!(m2.predict_scores(&SparseVector::zeros(4)).unwrap().iter().all(|v| *v == 0.5));
        }
        assert!(model.represent(&SparseVector::zeros(3)).is_err());
    }

    #[test]
    fn represent_matches_dense_oracle() {
        let mut rng = crate::rng::Rng::seed_from_u64(3);
        let model = init_model(9, 4, 5, 2, 1.0, Theta::Identity, Sigma::Identity).unwrap();
        let x = random_sparse(&mut rng, 9, 0.5);
        let dense = x.to_dense();
        let h = model.represent(&x).unwrap();
        for c in 0..4 {
            let expect: f64 = (0..9).map(|f| dense[f] * model.w()[f * 4 + c]).sum();
            assert!((h[c] - expect).abs() < 1e-12);
        }
        let scores = model.predict_scores(&x).unwrap();
        for j in 0..5 {
            let expect: f64 = (0..4).map(|c| h[c] * model.l()[j * 4 + c]).sum();
            assert!((scores[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn scoring() {
        let model = EmbeddingModel::from_parts(1, 2, 1, vec![0.0, 0.0], vec![1.0, 2.0], Theta::Identity, Sigma::Identity)
            .unwrap();
        assert_eq!(model.score(&[1.0, 2.0], 0).unwrap(), 5.0);
        assert!(model.score(&[1.0, 2.0], 1).is_err());
        let mut logistic_model = model.clone();
        logistic_model.sigma = Sigma::Logistic;
        assert_eq!(logistic_model.score(&[0.0, 0.0], 0).unwrap(), 0.5);
        for z in [-30.0, -2.5, 0.3, 7.0] {
            assert!((logistic(z) + logistic(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn predict_scores_agree_with_score_calls() {
        let model = init_model(6, 3, 3, 8, 1.0, Theta::Tanh, Sigma::Logistic).unwrap();
        let x = SparseVector::new(6, vec![(1, 0.3), (4, -1.2)]).unwrap();
        let h = model.represent(&x).unwrap();
        let scores = model.predict_scores(&x).unwrap();
        for (j, s) in scores.iter().enumerate() {
            assert_eq!(*s, model.score(&h, j).unwrap());
        }
    }

    #[test]
    fn prediction_rules() {
        assert_eq!(PredictionRule::Threshold(0.5).apply(&[0.9, 0.1, 0.6]).as_slice(), &[0, 2]);
        assert_eq!(PredictionRule::TopK(1).apply(&[0.4, 0.4, 0.1]).as_slice(), &[0]);
        assert_eq!(PredictionRule::Threshold(0.5).apply(&[0.5; 3]).as_slice(), &[0, 1, 2]);
        assert_eq!(PredictionRule::TopK(2).apply(&[0.1, 0.3, 0.3, 0.2]).as_slice(), &[1, 2]);
        assert_eq!("topk:3".parse::<PredictionRule>().unwrap(), PredictionRule::TopK(3));
        assert_eq!("threshold:0.25".parse::<PredictionRule>().unwrap(), PredictionRule::Threshold(0.25));
        assert!("nope".parse::<PredictionRule>().is_err());
        assert!(PredictionRule::Threshold(1.5).validate(Sigma::Logistic, 3).is_err());
        assert!(PredictionRule::Threshold(1.5).validate(Sigma::Identity, 3).is_ok());
        assert!(PredictionRule::TopK(4).validate(Sigma::Logistic, 3).is_err());
    }

    #[test]
    fn linear_model_is_xwl() {
        let mut rng = crate::rng::Rng::seed_from_u64(19);
        let model = init_model(7, 3, 4, 4, 1.0, Theta::Identity, Sigma::Identity).unwrap();
        let x = random_sparse(&mut rng, 7, 0.6);
        let dense = x.to_dense();
        let scores = model.predict_scores(&x).unwrap();
        for j in 0..4 {
            let mut expect = 0.0;
            for f in 0..7 {
                for c in 0..3 {
                    expect += dense[f] * model.w()[f * 3 + c] * model.l()[j * 3 + c];
                }
            }
            assert!((scores[j] - expect).abs() < 1e-12);
        }
    }
}
