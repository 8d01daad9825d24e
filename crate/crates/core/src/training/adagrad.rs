use crate::model::EmbeddingModel;
use crate::training::objective::Gradients;

/// Per-coordinate squared-gradient accumulators, shaped like `W` and `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub w: Vec<f64>,
    pub l: Vec<f64>,
}

impl AdagradState {
    pub fn new(model: &EmbeddingModel) -> Self {
        AdagradState { w: vec![0.0; model.w().len()], l: vec![0.0; model.l().len()] }
    }
}

#[inline]
fn step(param: &mut f64, acc: &mut f64, g: f64, eta: f64, epsilon: f64) {
    if g == 0.0 {
        return;
    }
    *acc += g * g;
    *param -= eta * g / (acc.sqrt() + epsilon);
}

/// `G ← G + g²; θ ← θ − η g / (√G + ε)` for `W` and the touched label columns.
pub fn adagrad_update(state: &mut AdagradState, model: &mut EmbeddingModel, grads: &Gradients, eta: f64, epsilon: f64) {
    assert_eq!(state.w.len(), model.w().len(), "adagrad state shape for W");
    assert_eq!(state.l.len(), model.l().len(), "adagrad state shape for L");
    assert_eq!(grads.w.len(), model.w().len(), "gradient shape for W");
    for ((p, acc), &g) in model.w_mut().iter_mut().zip(state.w.iter_mut()).zip(&grads.w) {
        step(p, acc, g, eta, epsilon);
    }
    let k = model.k();
    for (&j, gl) in &grads.labels {
        let params = model.label_vec_mut(j);
        let accs = &mut state.l[j * k..(j + 1) * k];
        for c in 0..k {
            step(&mut params[c], &mut accs[c], gl[c], eta, epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sigma, Theta};
    use std::collections::BTreeMap;

    fn one_param(value: f64) -> EmbeddingModel {
        EmbeddingModel::from_parts(1, 1, 2, vec![value], vec![0.0, 0.0], Theta::Identity, Sigma::Logistic).unwrap()
    }

    fn grad_w(g: f64) -> Gradients {
        Gradients { w: vec![g], labels: BTreeMap::new() }
    }

    #[test]
    fn first_step_is_eta() {
        let mut model = one_param(1.0);
        let mut state = AdagradState::new(&model);
        adagrad_update(&mut state, &mut model, &grad_w(2.0), 0.1, 1e-8);
        assert!((model.w()[0] - 0.9).abs() < 1e-9);
        assert_eq!(state.w[0], 4.0);
    }

    #[test]
    fn zero_gradient_is_noop() {
        let mut model = one_param(1.0);
        let mut state = AdagradState::new(&model);
        adagrad_update(&mut state, &mut model, &grad_w(0.0), 0.1, 1e-8);
        assert_eq!(model.w()[0], 1.0);
        assert_eq!(state.w[0], 0.0);
    }

    #[test]
    fn repeated_gradient_shrinks_step() {
        let mut model = one_param(0.0);
        let mut state = AdagradState::new(&model);
        adagrad_update(&mut state, &mut model, &grad_w(1.0), 0.1, 1e-8);
        let first = model.w()[0];
        adagrad_update(&mut state, &mut model, &grad_w(1.0), 0.1, 1e-8);
        let second = model.w()[0] - first;
        assert!((second / first - 1.0 / 2f64.sqrt()).abs() < 1e-7);

        let mut last = second.abs();
        let mut acc = state.w[0];
        for _ in 0..20 {
            let before = model.w()[0];
            adagrad_update(&mut state, &mut model, &grad_w(-1.0), 0.1, 1e-8);
            let step = (model.w()[0] - before).abs();
            assert!(step <= last + 1e-15);
            assert!(state.w[0] >= acc);
            last = step;
            acc = state.w[0];
        }
    }

    #[test]
    fn untouched_label_columns_stay_put() {
        let mut model = EmbeddingModel::from_parts(1, 2, 3, vec![0.0, 0.0], vec![1.0; 6], Theta::Identity, Sigma::Logistic)
            .unwrap();
        let mut state = AdagradState::new(&model);
        let grads = Gradients { w: vec![0.0, 0.0], labels: BTreeMap::from([(1, vec![0.5, -0.5])]) };
        adagrad_update(&mut state, &mut model, &grads, 0.1, 1e-8);
        assert_eq!(model.label_vec(0), &[1.0, 1.0]);
        assert_eq!(model.label_vec(2), &[1.0, 1.0]);
        assert_ne!(model.label_vec(1), &[1.0, 1.0]);
    }
}
