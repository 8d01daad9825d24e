//! Representation-based baselines sharing [`EmbeddingModel`]: WSABIE trained
//! with the WARP loss, and LEML solved by alternating ridge regressions.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataset::{Dataset, SparseVector};
use crate::error::{Error, Result};
use crate::model::{init_model, EmbeddingModel, Sigma, Theta};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct WarpConfig {
    pub k: usize,
    pub eta: f64,
    pub epochs: usize,
    pub margin: f64,
    /// Negative draws per step before giving up; `None` means `m − 1`.
    pub max_trials: Option<usize>,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for WarpConfig {
    fn default() -> Self {
        WarpConfig { k: 50, eta: 0.05, epochs: 10, margin: 1.0, max_trials: None, seed: 0, init_scale: 1.0 }
    }
}

impl WarpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.epochs == 0 {
            return Err(Error::Config("wsabie k and epochs must be positive".into()));
        }
        if !(self.eta > 0.0) || !(self.margin >= 0.0) || !(self.init_scale > 0.0) {
            return Err(Error::Config("wsabie eta and init_scale must be positive, margin nonnegative".into()));
        }
        if self.max_trials == Some(0) {
            return Err(Error::Config("wsabie max_trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Rank weight `Σ_{r=1}^{⌊m_neg / trials⌋} 1/r` for a violation found after
/// `trials` draws among `m_neg` negatives.
pub fn warp_rank_weight(trials: usize, m_neg: usize) -> f64 {
    assert!(trials >= 1 && trials <= m_neg, "need 1 <= trials <= m_neg");
    let rank = m_neg / trials;
    (1..=rank).map(|r| 1.0 / r as f64).sum()
}

/// Outcome of one WARP step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WarpStep {
    /// No violating negative within the trial budget.
    NoViolation,
    Updated { positive: usize, negative: usize, trials: usize, weight: f64 },
}

fn project_unit_ball(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// A single WARP update for instance `x` and relevant label `positive`.
pub fn warp_step<R: rand::Rng + ?Sized>(
    model: &mut EmbeddingModel,
    x: &SparseVector,
    positives: &crate::dataset::LabelSet,
    positive: usize,
    config: &WarpConfig,
    rng: &mut R,
) -> Result<WarpStep> {
    let m = model.m();
    let m_neg = m - positives.len();
    if m_neg == 0 {
        return Ok(WarpStep::NoViolation);
    }
    let budget = config.max_trials.unwrap_or(m.saturating_sub(1)).clamp(1, m_neg);
    let h = model.represent(x)?;
    let s_pos = model.raw_score(&h, positive);
    let mut found = None;
    for trials in 1..=budget {
        let mut j = rng.gen_range(0..m);
        while positives.contains(j) {
            j = rng.gen_range(0..m);
        }
        if model.raw_score(&h, j) + config.margin > s_pos {
            found = Some((j, trials));
            break;
        }
    }
    let Some((negative, trials)) = found else {
        return Ok(WarpStep::NoViolation);
    };
    let weight = warp_rank_weight(trials, m_neg);
    let k = model.k();
    let step = config.eta * weight;
    let l_pos = model.label_vec(positive).to_vec();
    let l_neg = model.label_vec(negative).to_vec();
    // loss = weight·(margin − hᵀl_p + hᵀl_n), θ = identity
    let grad_h: Vec<f64> = (0..k).map(|c| l_neg[c] - l_pos[c]).collect();
    for (f, v) in x.iter() {
        let row = &mut model.w_mut()[f * k..(f + 1) * k];
        for c in 0..k {
            row[c] -= step * v * grad_h[c];
        }
    }
    {
        let lp = model.label_vec_mut(positive);
        for c in 0..k {
            lp[c] += step * h[c];
        }
        project_unit_ball(lp);
    }
    {
        let ln = model.label_vec_mut(negative);
        for c in 0..k {
            ln[c] -= step * h[c];
        }
        project_unit_ball(ln);
    }
    Ok(WarpStep::Updated { positive, negative, trials, weight })
}

/// Fraction of `(instance, relevant, irrelevant)` triples violating the margin.
pub fn warp_violation_rate(model: &EmbeddingModel, ds: &Dataset, margin: f64) -> Result<f64> {
    let (mut bad, mut total) = (0usize, 0usize);
    for inst in ds.instances() {
        if inst.labels.is_empty() {
            continue;
        }
        let h = model.represent(&inst.features)?;
        let scores: Vec<f64> = (0..model.m()).map(|j| model.raw_score(&h, j)).collect();
        let negatives = inst.labels.complement(model.m());
        for p in inst.labels.iter() {
            for &n in &negatives {
                total += 1;
                bad += usize::from(scores[n] + margin > scores[p]);
            }
        }
    }
    Ok(if total == 0 { 0.0 } else { bad as f64 / total as f64 })
}

/// Trains WSABIE with constant-rate SGD on the WARP loss. One epoch is one
/// pass over all `(instance, relevant label)` pairs in random order.
pub fn wsabie_train(ds: &Dataset, config: &WarpConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    let mut model =
        init_model(ds.d(), config.k, ds.m(), config.seed, config.init_scale, Theta::Identity, Sigma::Identity)?;
    for j in 0..model.m() {
        project_unit_ball(model.label_vec_mut(j));
    }
    let mut pairs: Vec<(usize, usize)> = ds
        .instances()
        .iter()
        .enumerate()
        .flat_map(|(i, inst)| inst.labels.iter().map(move |p| (i, p)))
        .collect();
    let mut shuffle_rng = rng::stream(config.seed, Stream::Shuffle);
    let mut warp_rng = rng::stream(config.seed, Stream::Warp);
    for epoch in 1..=config.epochs {
        rand::seq::SliceRandom::shuffle(pairs.as_mut_slice(), &mut shuffle_rng);
        for &(i, p) in &pairs {
            let inst = ds.get(i);
            warp_step(&mut model, &inst.features, &inst.labels, p, config, &mut warp_rng)?;
        }
        if !model.is_finite() {
            return Err(Error::Numerical(format!(
                "WSABIE parameters became non-finite in epoch {epoch}; lower eta (currently {})",
                config.eta
            )));
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemlConfig {
    pub k: usize,
    pub lambda: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for LemlConfig {
    fn default() -> Self {
        LemlConfig { k: 50, lambda: 0.001, sweeps: 10, seed: 0 }
    }
}

/// LEML result with the objective after initialization and every half-sweep.
#[derive(Debug, Clone)]
pub struct LemlFit {
    pub model: EmbeddingModel,
    /// `trace[0]` is the initial objective; then W-solve, L-solve, W-solve, …
    pub trace: Vec<f64>,
    /// A near-singular system had its diagonal jittered by `LEML_JITTER`.
    pub jittered: bool,
}

pub const LEML_JITTER: f64 = 1e-10;

/// `‖Y − X W L‖² + λ(‖W‖² + ‖L‖²)` with `W` as `d × k` and `L` as `k × m`.
pub fn leml_objective(x: &DMatrix<f64>, y: &DMatrix<f64>, w: &DMatrix<f64>, l: &DMatrix<f64>, lambda: f64) -> f64 {
    let resid = y - (x * w) * l;
    resid.norm_squared() + lambda * (w.norm_squared() + l.norm_squared())
}

/// Exact minimizer over `W` for fixed `L`.
///
/// With `XᵀX = U Λ Uᵀ` and `L Lᵀ = V Σ Vᵀ` the normal equations
/// `XᵀX W L Lᵀ + λ W = XᵀY Lᵀ` decouple into one scalar equation per
/// (eigen-direction, code dimension) pair.
struct WSolver {
    u: DMatrix<f64>,
    lam: Vec<f64>,
    xty: DMatrix<f64>,
}

impl WSolver {
    fn new(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(x.tr_mul(x));
        WSolver { u: eig.eigenvectors, lam: eig.eigenvalues.iter().map(|v| v.max(0.0)).collect(), xty: x.tr_mul(y) }
    }

    fn solve(&self, l: &DMatrix<f64>, lambda: f64, jittered: &mut bool) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(l * l.transpose());
        let v = &eig.eigenvectors;
        let sig: Vec<f64> = eig.eigenvalues.iter().map(|s| s.max(0.0)).collect();
        let mut b = self.u.tr_mul(&(&self.xty * l.transpose())) * v;
        for a in 0..b.nrows() {
            for c in 0..b.ncols() {
                let mut denom = self.lam[a] * sig[c] + lambda;
                if denom < LEML_JITTER {
                    denom += LEML_JITTER;
                    *jittered = true;
                }
                b[(a, c)] /= denom;
            }
        }
        &self.u * b * v.transpose()
    }
}

fn solve_l(z: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64, jittered: &mut bool) -> DMatrix<f64> {
    let k = z.ncols();
    let mut gram = z.tr_mul(z);
    for i in 0..k {
        gram[(i, i)] += lambda;
    }
    let rhs = z.tr_mul(y);
    if let Some(ch) = gram.clone().cholesky() {
        return ch.solve(&rhs);
    }
    *jittered = true;
    for i in 0..k {
        gram[(i, i)] += LEML_JITTER;
    }
    match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => crate::linalg::lstsq(&gram, &rhs).unwrap_or_else(|_| DMatrix::zeros(k, y.ncols())),
    }
}

/// LEML with squared loss, minimized by alternating exact ridge solves.
pub fn leml_train(ds: &Dataset, config: &LemlConfig) -> Result<LemlFit> {
    if config.k == 0 || config.sweeps == 0 {
        return Err(Error::Config("leml k and sweeps must be positive".into()));
    }
    if !(config.lambda >= 0.0 && config.lambda.is_finite()) {
        return Err(Error::Config("leml lambda must be nonnegative".into()));
    }
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    let x = ds.feature_matrix();
    let y = ds.label_matrix();
    let (d, k, m) = (ds.d(), config.k, ds.m());
    let init = init_model(d, k, m, config.seed, 1.0, Theta::Identity, Sigma::Identity)?;
    let mut w = DMatrix::from_row_slice(d, k, init.w());
    let mut l = DMatrix::from_column_slice(k, m, init.l());
    let solver = WSolver::new(&x, &y);
    let mut jittered = false;
    let mut trace = vec![leml_objective(&x, &y, &w, &l, config.lambda)];
    for _ in 0..config.sweeps {
        w = solver.solve(&l, config.lambda, &mut jittered);
        trace.push(leml_objective(&x, &y, &w, &l, config.lambda));
        let z = &x * &w;
        l = solve_l(&z, &y, config.lambda, &mut jittered);
        trace.push(leml_objective(&x, &y, &w, &l, config.lambda));
    }
    if jittered {
        log::warn!("LEML: near-singular normal equations, diagonal jittered by {LEML_JITTER}");
    }
    let mut w_rows = Vec::with_capacity(d * k);
    for f in 0..d {
        w_rows.extend(w.row(f).iter());
    }
    let model = EmbeddingModel::from_parts(d, k, m, w_rows, l.as_slice().to_vec(), Theta::Identity, Sigma::Identity)
        .map_err(|_| Error::Numerical("LEML produced non-finite parameters".into()))?;
    Ok(LemlFit { model, trace, jittered })
}
