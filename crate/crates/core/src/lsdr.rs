//! Label-space dimension reduction baselines.
//!
//! Every method encodes the `n × m` label matrix `Y` into `k`-dimensional
//! codes, fits a ridge regressor from features to codes and decodes codes
//! back to label scores:
//!
//! * PLST: codes `Y V`, `V` the top-`k` eigenvectors of `YᵀY`.
//! * CPLST: same with `Yᵀ H Y`, `H = X X⁺` the hat matrix of the features.
//! * FaIE: codes are the top-`k` eigenvectors of `Y Yᵀ + α H` scaled by the
//!   square roots of their eigenvalues; decoding is least squares.
//! * CSS_ML: `k` label columns picked by pivoted QR on `Y`; the other labels
//!   are reconstructed as least-squares combinations of the picked ones.

use nalgebra::DMatrix;

use crate::dataset::{Dataset, SparseVector};
use crate::error::{Error, Result};
use crate::linalg::{column_space_basis, lstsq, ridge_regression, sym_top_k};
use crate::model::{EmbeddingModel, Sigma, Theta};

/// Default ridge coefficient for every feature→code regression.
pub const DEFAULT_RIDGE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsdrMethod {
    Plst,
    Cplst,
    Faie,
    Cssml,
}

impl LsdrMethod {
    pub fn tag(self) -> u8 {
        match self {
            LsdrMethod::Plst => 0,
            LsdrMethod::Cplst => 1,
            LsdrMethod::Faie => 2,
            LsdrMethod::Cssml => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(LsdrMethod::Plst),
            1 => Some(LsdrMethod::Cplst),
            2 => Some(LsdrMethod::Faie),
            3 => Some(LsdrMethod::Cssml),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LsdrMethod::Plst => "plst",
            LsdrMethod::Cplst => "cplst",
            LsdrMethod::Faie => "faie",
            LsdrMethod::Cssml => "cssml",
        }
    }
}

/// Conditions worth reporting that do not stop a fit.
#[derive(Debug, Clone, PartialEq)]
pub enum LsdrFlag {
    /// Fewer than `k` directions carry nonzero spectrum; the trailing
    /// directions contribute nothing to the codes.
    RankDeficient { rank: usize, k: usize },
    /// CSS_ML ran out of independent label columns and filled the remaining
    /// picks by smallest unselected index.
    FilledSelection { filled: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsdrModel {
    pub method: LsdrMethod,
    pub k: usize,
    /// `d × k` ridge coefficients mapping features to codes.
    pub regressor: DMatrix<f64>,
    /// `k × m` map from codes to label scores.
    pub decode: DMatrix<f64>,
    /// Picked label columns (CSS_ML only).
    pub selected_labels: Vec<usize>,
    pub flags: Vec<LsdrFlag>,
}

/// A fitted model plus what the fit saw on its training data.
#[derive(Debug, Clone)]
pub struct LsdrFit {
    pub model: LsdrModel,
    /// Training codes, `n × k`.
    pub codes: DMatrix<f64>,
    /// Eigenvalues behind the selected directions (empty for CSS_ML).
    pub eigenvalues: Vec<f64>,
}

impl LsdrFit {
    /// Sum of the selected eigenvalues, i.e. the maximized trace objective.
    pub fn trace_objective(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

impl LsdrModel {
    pub fn d(&self) -> usize {
        self.regressor.nrows()
    }

    pub fn m(&self) -> usize {
        self.decode.ncols()
    }

    pub fn parameter_count(&self) -> usize {
        self.d() * self.k + self.k * self.m()
    }

    /// Encoded prediction `x · regressor`.
    pub fn predict_code(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), found: x.dim() });
        }
        let mut code = vec![0.0; self.k];
        for (f, v) in x.iter() {
            for (c, acc) in code.iter_mut().enumerate() {
                *acc += v * self.regressor[(f, c)];
            }
        }
        Ok(code)
    }

    /// Real-valued label scores `x · regressor · decode`.
    pub fn predict(&self, x: &SparseVector) -> Result<Vec<f64>> {
        let code = self.predict_code(x)?;
        Ok((0..self.m())
            .map(|j| code.iter().enumerate().map(|(c, v)| v * self.decode[(c, j)]).sum())
            .collect())
    }

    /// The same linear predictor as an embedding model with identity
    /// activations: `W = regressor`, `L = decode`.
    pub fn to_embedding_model(&self) -> EmbeddingModel {
        let (d, k, m) = (self.d(), self.k, self.m());
        let mut w = Vec::with_capacity(d * k);
        for f in 0..d {
            w.extend(self.regressor.row(f).iter());
        }
        let l: Vec<f64> = self.decode.as_slice().to_vec(); // column-major k × m
        EmbeddingModel::from_parts(d, k, m, w, l, Theta::Identity, Sigma::Identity)
            .expect("shapes are consistent by construction")
    }
}

pub fn lsdr_predict(model: &LsdrModel, x: &SparseVector) -> Result<Vec<f64>> {
    model.predict(x)
}

fn check_k(k: usize, bound: usize, what: &str) -> Result<()> {
    if k == 0 || k > bound {
        return Err(Error::InvalidArgument(format!("k must satisfy 1 <= k <= {what} (k={k}, {what}={bound})")));
    }
    Ok(())
}

fn rank_flag(eigenvalues: &[f64], scale: f64, k: usize) -> Option<LsdrFlag> {
    let tol = scale.max(1.0) * 1e-10;
    let rank = eigenvalues.iter().filter(|v| **v > tol).count();
    (rank < k).then_some(LsdrFlag::RankDeficient { rank, k })
}

/// Shared tail of PLST and CPLST: `V` from the `m × m` matrix `gram`.
fn fit_from_label_gram(
    method: LsdrMethod,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    k: usize,
    ridge: f64,
) -> Result<LsdrFit> {
    let (vals, v) = sym_top_k(gram, k)?;
    let mut flags = Vec::new();
    let scale = vals.first().copied().unwrap_or(0.0);
    flags.extend(rank_flag(&vals, scale, k));
    let codes = y * &v;
    let regressor = ridge_regression(x, &codes, ridge)?;
    Ok(LsdrFit {
        model: LsdrModel { method, k, regressor, decode: v.transpose(), selected_labels: Vec::new(), flags },
        codes,
        eigenvalues: vals,
    })
}

pub fn plst_fit(ds: &Dataset, k: usize, ridge: f64) -> Result<LsdrFit> {
    check_k(k, ds.m(), "m")?;
    let y = ds.label_matrix();
    let x = ds.feature_matrix();
    let gram = y.tr_mul(&y);
    fit_from_label_gram(LsdrMethod::Plst, &x, &y, &gram, k, ridge)
}

pub fn cplst_fit(ds: &Dataset, k: usize, ridge: f64) -> Result<LsdrFit> {
    check_k(k, ds.m(), "m")?;
    let y = ds.label_matrix();
    let x = ds.feature_matrix();
    // Yᵀ H Y = (QᵀY)ᵀ (QᵀY) with H = Q Qᵀ
    let q = column_space_basis(&x);
    let qy = q.tr_mul(&y);
    let gram = qy.tr_mul(&qy);
    fit_from_label_gram(LsdrMethod::Cplst, &x, &y, &gram, k, ridge)
}

pub fn faie_fit(ds: &Dataset, k: usize, alpha: f64, ridge: f64) -> Result<LsdrFit> {
    check_k(k, ds.n(), "n")?;
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("FaIE alpha must be nonnegative, got {alpha}")));
    }
    let y = ds.label_matrix();
    let x = ds.feature_matrix();
    let mut big = &y * y.transpose();
    if alpha > 0.0 {
        let q = column_space_basis(&x);
        big += (&q * q.transpose()) * alpha;
    }
    let (vals, vecs) = sym_top_k(&big, k)?;
    let mut flags = Vec::new();
    let scale = vals.first().copied().unwrap_or(0.0);
    flags.extend(rank_flag(&vals, scale, k));
    let mut codes = vecs;
    for (c, &lam) in vals.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        codes.column_mut(c).scale_mut(s);
    }
    let decode = lstsq(&codes, &y)?;
    let regressor = ridge_regression(&x, &codes, ridge)?;
    Ok(LsdrFit {
        model: LsdrModel { method: LsdrMethod::Faie, k, regressor, decode, selected_labels: Vec::new(), flags },
        codes,
        eigenvalues: vals,
    })
}

/// Greedy column-pivoted QR on the columns of `y`: repeatedly picks the column
/// with the largest residual norm (ties toward the smaller index) and
/// orthogonalizes the rest against it. Returns the picks and any indices
/// filled in after the residual vanished.
pub fn pivoted_column_selection(y: &DMatrix<f64>, k: usize) -> (Vec<usize>, Vec<usize>) {
    let (n, m) = y.shape();
    let mut resid = y.clone();
    let mut norms: Vec<f64> = (0..m).map(|j| resid.column(j).norm_squared()).collect();
    let total: f64 = norms.iter().sum();
    let tol = total.max(1.0) * 1e-20;
    let mut chosen = vec![false; m];
    let mut picks = Vec::with_capacity(k);
    let mut filled = Vec::new();
    while picks.len() < k {
        let best = (0..m).filter(|&j| !chosen[j]).fold(None, |best: Option<usize>, j| match best {
            Some(b) if norms[b] >= norms[j] => Some(b),
            _ => Some(j),
        });
        let Some(p) = best else { break };
        if norms[p] <= tol {
            break;
        }
        chosen[p] = true;
        picks.push(p);
        let q = resid.column(p).normalize();
        for j in 0..m {
            if chosen[j] {
                continue;
            }
            let proj = q.dot(&resid.column(j));
            for r in 0..n {
                resid[(r, j)] -= proj * q[r];
            }
            norms[j] = resid.column(j).norm_squared();
        }
    }
    for j in 0..m {
        if picks.len() >= k {
            break;
        }
        if !chosen[j] {
            chosen[j] = true;
            picks.push(j);
            filled.push(j);
        }
    }
    (picks, filled)
}

pub fn cssml_fit(ds: &Dataset, k: usize, ridge: f64) -> Result<LsdrFit> {
    check_k(k, ds.m(), "m")?;
    let y = ds.label_matrix();
    let x = ds.feature_matrix();
    let (selected, filled) = pivoted_column_selection(&y, k);
    let mut flags = Vec::new();
    if !filled.is_empty() {
        log::warn!("CSS_ML: only {} independent label columns; filled {:?}", k - filled.len(), filled);
        flags.push(LsdrFlag::FilledSelection { filled });
    }
    let codes = y.select_columns(selected.iter());
    let decode = lstsq(&codes, &y)?;
    let regressor = ridge_regression(&x, &codes, ridge)?;
    Ok(LsdrFit {
        model: LsdrModel { method: LsdrMethod::Cssml, k, regressor, decode, selected_labels: selected, flags },
        codes,
        eigenvalues: Vec::new(),
    })
}
