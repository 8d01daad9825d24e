//! Dense reference implementations shared by the integration tests. Nothing
//! here calls into nalgebra, so the oracles are independent of the library's
//! own linear algebra.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmls::{Dataset, Instance, LabelSet, SparseVector};

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| (0..cols).map(|j| (0..inner).map(|t| row[t] * b[t][j]).sum()).collect())
        .collect()
}

pub fn trace(a: &Mat) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues in descending order and the eigenvectors as columns.
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Mat = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (vals, vecs)
}

/// Orthogonal projector onto the column space of `x`, i.e. `X X⁺`, built from
/// the eigenvectors of `X Xᵀ` with nonnegligible eigenvalues.
pub fn hat_matrix(x: &Mat) -> Mat {
    let xxt = matmul(x, &transpose(x));
    let (vals, vecs) = jacobi_eigen(&xxt);
    let n = x.len();
    let tol = vals.first().copied().unwrap_or(0.0).max(1.0) * 1e-10;
    let mut h = vec![vec![0.0; n]; n];
    for (c, &lam) in vals.iter().enumerate() {
        if lam > tol {
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += vecs[i][c] * vecs[j][c];
                }
            }
        }
    }
    h
}

pub fn top_sum(vals: &[f64], k: usize) -> f64 {
    vals.iter().take(k).sum()
}

pub fn dense_features(ds: &Dataset) -> Mat {
    ds.instances().iter().map(|i| i.features.to_dense()).collect()
}

pub fn dense_labels(ds: &Dataset) -> Mat {
    ds.instances()
        .iter()
        .map(|i| (0..ds.m()).map(|j| if i.labels.contains(j) { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Dense random features and label sets with at least one label per row.
pub fn random_dataset(seed: u64, n: usize, d: usize, m: usize, label_p: f64) -> Dataset {
    let mut r = rng(seed);
    let instances = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
            let mut labels: Vec<usize> = (0..m).filter(|_| r.gen_bool(label_p)).collect();
            if labels.is_empty() {
                labels.push(r.gen_range(0..m));
            }
            Instance { features: SparseVector::from_dense(&x), labels: LabelSet::new(labels, m).unwrap() }
        })
        .collect();
    Dataset::new(d, m, instances).unwrap()
}

use rmls::training::{batch_gradients, batch_objective, BatchItem, LossKind};
use rmls::EmbeddingModel;

/// Largest norm-wise relative error between the analytic batch gradient and
/// central differences with step `h`, over `W` and every label vector.
pub fn gradient_error(model: &EmbeddingModel, batch: &[BatchItem<'_>], lambda: f64, loss: LossKind, h: f64) -> f64 {
    let grads = batch_gradients(model, batch, lambda, loss).unwrap();
    let f = |m: &EmbeddingModel| batch_objective(m, batch, lambda, loss).unwrap();
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut probe = model.clone();
    for i in 0..model.w().len() {
        let orig = probe.w()[i];
        probe.w_mut()[i] = orig + h;
        let up = f(&probe);
        probe.w_mut()[i] = orig - h;
        let down = f(&probe);
        probe.w_mut()[i] = orig;
        analytic.push(grads.w[i]);
        numeric.push((up - down) / (2.0 * h));
    }
    for j in 0..model.m() {
        for c in 0..model.k() {
            let orig = probe.label_vec(j)[c];
            probe.label_vec_mut(j)[c] = orig + h;
            let up = f(&probe);
            probe.label_vec_mut(j)[c] = orig - h;
            let down = f(&probe);
            probe.label_vec_mut(j)[c] = orig;
            analytic.push(grads.labels.get(&j).map_or(0.0, |g| g[c]));
            numeric.push((up - down) / (2.0 * h));
        }
    }
    let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Labels given by the signs of a random linear map of the features, so a
/// linear scorer can separate them.
pub fn separable_dataset(seed: u64, n: usize, d: usize, m: usize) -> Dataset {
    let mut r = rng(seed);
    let b: Mat = (0..d).map(|_| (0..m).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let instances = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
            let s: Vec<f64> = (0..m).map(|j| (0..d).map(|f| x[f] * b[f][j]).sum()).collect();
            let mut labels: Vec<usize> = (0..m).filter(|&j| s[j] > 0.0).collect();
            if labels.is_empty() {
                labels.push((0..m).max_by(|&i, &j| s[i].partial_cmp(&s[j]).unwrap()).unwrap());
            }
            Instance { features: SparseVector::from_dense(&x), labels: LabelSet::new(labels, m).unwrap() }
        })
        .collect();
    Dataset::new(d, m, instances).unwrap()
}
