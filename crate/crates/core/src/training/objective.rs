//! Instance losses, the regularized batch objective and its gradients.

use std::collections::BTreeMap;

use crate::dataset::{LabelSet, SparseVector};
use crate::error::{Error, Result};
use crate::model::EmbeddingModel;
use crate::training::loss::{point_loss, LossKind};

/// One training instance with its sampled negatives.
#[derive(Debug, Clone)]
pub struct BatchItem<'a> {
    pub x: &'a SparseVector,
    pub positives: &'a LabelSet,
    pub negatives: LabelSet,
}

fn label_loss(model: &EmbeddingModel, h: &[f64], j: usize, y: bool, loss: LossKind) -> f64 {
    point_loss(loss, model.sigma, model.raw_score(h, j), y).loss
}

/// Loss over the relevant labels plus the sampled irrelevant labels.
pub fn sampled_instance_loss(
    model: &EmbeddingModel,
    x: &SparseVector,
    positives: &LabelSet,
    negatives: &LabelSet,
    loss: LossKind,
) -> Result<f64> {
    if !positives.is_disjoint(negatives) {
        return Err(Error::InvalidArgument("sampled negatives overlap the relevant labels".into()));
    }
    check_labels(model, positives)?;
    check_labels(model, negatives)?;
    let h = model.represent(x)?;
    let pos: f64 = positives.iter().map(|j| label_loss(model, &h, j, true, loss)).sum();
    let neg: f64 = negatives.iter().map(|j| label_loss(model, &h, j, false, loss)).sum();
    Ok(pos + neg)
}

/// Full loss with every irrelevant label down-weighted by `1/C`.
pub fn cost_sensitive_loss(
    model: &EmbeddingModel,
    x: &SparseVector,
    positives: &LabelSet,
    c: f64,
    loss: LossKind,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("cost ratio must be positive, got {c}")));
    }
    check_labels(model, positives)?;
    let h = model.represent(x)?;
    let pos: f64 = positives.iter().map(|j| label_loss(model, &h, j, true, loss)).sum();
    let neg: f64 = positives
        .complement(model.m())
        .into_iter()
        .map(|j| label_loss(model, &h, j, false, loss))
        .sum();
    Ok(pos + neg / c)
}

/// The cost ratio whose weighted loss the sampled loss estimates without bias:
/// `C = |N| / (alpha·|P|)`.
pub fn implied_cost_ratio(m: usize, n_pos: usize, alpha: usize) -> f64 {
    (m - n_pos) as f64 / (alpha * n_pos) as f64
}

fn check_labels(model: &EmbeddingModel, set: &LabelSet) -> Result<()> {
    match set.max_label() {
        Some(j) if j >= model.m() => Err(Error::IndexOutOfRange { index: j, bound: model.m() }),
        _ => Ok(()),
    }
}

/// Labels appearing in any `P ∪ S` of the batch, ascending.
pub fn touched_labels(batch: &[BatchItem<'_>]) -> Vec<usize> {
    let mut touched: Vec<usize> = batch
        .iter()
        .flat_map(|it| it.positives.iter().chain(it.negatives.iter()))
        .collect();
    touched.sort_unstable();
    touched.dedup();
    touched
}

/// Sum of sampled instance losses plus `λ‖W‖² + λ Σ_{j touched} ‖l_j‖²`.
pub fn batch_objective(model: &EmbeddingModel, batch: &[BatchItem<'_>], lambda: f64, loss: LossKind) -> Result<f64> {
    let mut total = 0.0;
    for it in batch {
        total += sampled_instance_loss(model, it.x, it.positives, &it.negatives, loss)?;
    }
    let reg_l: f64 = touched_labels(batch)
        .into_iter()
        .map(|j| model.label_vec(j).iter().map(|v| v * v).sum::<f64>())
        .sum();
    Ok(total + lambda * (model.frobenius_sq_w() + reg_l))
}

/// Gradient of [`batch_objective`]: dense for `W`, and one `k`-vector per
/// touched label (every other label column has zero gradient).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w: Vec<f64>,
    pub labels: BTreeMap<usize, Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BatchStats {
    pub objective: f64,
    /// Cross-entropy terms whose probability hit the clamp.
    pub clamped: usize,
}

/// Objective and gradients in one pass.
pub fn batch_objective_and_gradients(
    model: &EmbeddingModel,
    batch: &[BatchItem<'_>],
    lambda: f64,
    loss: LossKind,
) -> Result<(BatchStats, Gradients)> {
    let k = model.k();
    let mut grad_w = vec![0.0; model.d() * k];
    let mut labels: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut stats = BatchStats::default();
    let mut grad_h = vec![0.0; k];

    for it in batch {
        if !it.positives.is_disjoint(&it.negatives) {
            return Err(Error::InvalidArgument("sampled negatives overlap the relevant labels".into()));
        }
        check_labels(model, it.positives)?;
        check_labels(model, &it.negatives)?;
        if it.positives.is_empty() && it.negatives.is_empty() {
            continue;
        }
        let u = model.pre_activation(it.x)?;
        let h: Vec<f64> = u.iter().map(|&v| model.theta.apply(v)).collect();
        grad_h.iter_mut().for_each(|g| *g = 0.0);

        let targets = it
            .positives
            .iter()
            .map(|j| (j, true))
            .chain(it.negatives.iter().map(|j| (j, false)));
        for (j, y) in targets {
            let lv = model.label_vec(j);
            let p = point_loss(loss, model.sigma, crate::model::dot(&h, lv), y);
            stats.objective += p.loss;
            stats.clamped += usize::from(p.clamped);
            let gl = labels.entry(j).or_insert_with(|| vec![0.0; k]);
            for c in 0..k {
                gl[c] += p.grad * h[c];
                grad_h[c] += p.grad * lv[c];
            }
        }
        for c in 0..k {
            grad_h[c] *= model.theta.derivative(u[c]);
        }
        for (f, v) in it.x.iter() {
            let row = &mut grad_w[f * k..(f + 1) * k];
            for c in 0..k {
                row[c] += v * grad_h[c];
            }
        }
    }

    // Touched labels always have an entry, including those of instances whose
    // loss terms were all skipped above.
    let touched = touched_labels(batch);
    let mut reg = model.frobenius_sq_w();
    for j in touched {
        let lv = model.label_vec(j);
        reg += lv.iter().map(|v| v * v).sum::<f64>();
        let gl = labels.entry(j).or_insert_with(|| vec![0.0; k]);
        for c in 0..k {
            gl[c] += 2.0 * lambda * lv[c];
        }
    }
    if lambda != 0.0 {
        for (g, w) in grad_w.iter_mut().zip(model.w()) {
            *g += 2.0 * lambda * w;
        }
    }
    stats.objective += lambda * reg;
    Ok((stats, Gradients { w: grad_w, labels }))
}

pub fn batch_gradients(model: &EmbeddingModel, batch: &[BatchItem<'_>], lambda: f64, loss: LossKind) -> Result<Gradients> {
    batch_objective_and_gradients(model, batch, lambda, loss).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, random_sparse, Sigma, Theta};
    use crate::rng::Rng;
    use rand::SeedableRng;

    fn set(v: &[usize]) -> LabelSet {
        v.iter().copied().collect()
    }

    #[test]
    fn empty_sets_give_zero() {
        let model = init_model(3, 2, 4, 1, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        let x = SparseVector::new(3, vec![(0, 1.0)]).unwrap();
        let v = sampled_instance_loss(&model, &x, &LabelSet::empty(), &LabelSet::empty(), LossKind::CrossEntropy)
            .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn two_logistic_zero_terms() {
        let model = init_model(3, 2, 4, 1, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        let x = SparseVector::zeros(3);
        let v = sampled_instance_loss(&model, &x, &set(&[0]), &set(&[1]), LossKind::CrossEntropy).unwrap();
        assert!((v - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!(sampled_instance_loss(&model, &x, &set(&[0]), &set(&[0]), LossKind::CrossEntropy).is_err());
    }

    #[test]
    fn sampled_loss_matches_termwise_sum() {
        let mut rng = Rng::seed_from_u64(5);
        let model = init_model(6, 3, 8, 2, 1.5, Theta::Tanh, Sigma::Logistic).unwrap();
        let x = random_sparse(&mut rng, 6, 0.5);
        let (p, s) = (set(&[1, 6]), set(&[0, 3, 7]));
        let h = model.represent(&x).unwrap();
        let mut expect = 0.0;
        for j in 0..8 {
            let z: f64 = (0..3).map(|c| h[c] * model.l()[j * 3 + c]).sum();
            let a = 1.0 / (1.0 + (-z).exp());
            if p.contains(j) {
                expect -= a.ln();
            } else if s.contains(j) {
                expect -= (1.0 - a).ln();
            }
        }
        let got = sampled_instance_loss(&model, &x, &p, &s, LossKind::CrossEntropy).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn cost_sensitive_weights() {
        let model = init_model(4, 2, 6, 3, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        let x = SparseVector::new(4, vec![(1, 0.7), (2, -0.4)]).unwrap();
        let p = set(&[2]);
        let all_neg: LabelSet = p.complement(6).into_iter().collect();
        let full = sampled_instance_loss(&model, &x, &p, &all_neg, LossKind::LeastSquares).unwrap();
        let c1 = cost_sensitive_loss(&model, &x, &p, 1.0, LossKind::LeastSquares).unwrap();
        assert!((full - c1).abs() < 1e-14);
        // alpha = |N|/|P| makes C = 1
        assert_eq!(implied_cost_ratio(6, 1, 5), 1.0);
        assert!(cost_sensitive_loss(&model, &x, &p, 0.0, LossKind::LeastSquares).is_err());
    }

    #[test]
    fn objective_regularizer() {
        let model = init_model(3, 2, 4, 9, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        let x = SparseVector::new(3, vec![(0, 1.0)]).unwrap();
        let p = set(&[1]);
        let batch = vec![BatchItem { x: &x, positives: &p, negatives: set(&[3]) }];
        let plain = batch_objective(&model, &batch, 0.0, LossKind::CrossEntropy).unwrap();
        let inst = sampled_instance_loss(&model, &x, &p, &set(&[3]), LossKind::CrossEntropy).unwrap();
        assert_eq!(plain, inst);

        let zero = crate::model::EmbeddingModel::zeros(3, 2, 4, Theta::Identity, Sigma::Logistic);
        let with = batch_objective(&zero, &batch, 1.0, LossKind::CrossEntropy).unwrap();
        let without = batch_objective(&zero, &batch, 0.0, LossKind::CrossEntropy).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn gradients_vanish_without_terms() {
        let model = init_model(3, 2, 4, 9, 1.0, Theta::Identity, Sigma::Logistic).unwrap();
        let x = SparseVector::new(3, vec![(0, 1.0)]).unwrap();
        let p = LabelSet::empty();
        let batch = vec![BatchItem { x: &x, positives: &p, negatives: LabelSet::empty() }];
        let g = batch_gradients(&model, &batch, 0.0, LossKind::CrossEntropy).unwrap();
        assert!(g.w.iter().all(|v| *v == 0.0));
        assert!(g.labels.is_empty());

        let g = batch_gradients(&model, &batch, 0.25, LossKind::CrossEntropy).unwrap();
        for (gw, w) in g.w.iter().zip(model.w()) {
            assert!((gw - 0.5 * w).abs() < 1e-15);
        }
    }

    #[test]
    fn only_touched_columns_have_gradients() {
        let model = init_model(5, 3, 20, 4, 1.0, Theta::Tanh, Sigma::Logistic).unwrap();
        let x = SparseVector::new(5, vec![(1, 1.0), (3, 0.5)]).unwrap();
        let p = set(&[2, 9]);
        let batch = vec![BatchItem { x: &x, positives: &p, negatives: set(&[0, 15, 19]) }];
        let g = batch_gradients(&model, &batch, 0.1, LossKind::CrossEntropy).unwrap();
        assert_eq!(g.labels.keys().copied().collect::<Vec<_>>(), vec![0, 2, 9, 15, 19]);
    }
}
