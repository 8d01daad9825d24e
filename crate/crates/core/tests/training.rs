mod common;

use common::*;
use rand::Rng;
use rmls::model::random_sparse;
use rmls::rng::{stream, Stream};
use rmls::training::{
    cost_sensitive_loss, implied_cost_ratio, sample_negatives, sampled_instance_loss, BatchItem, EpochProgress,
    LossKind, NoProgress,
};
use rmls::{init_model, train, LabelSet, Sigma, Theta, TrainConfig};

const LOSSES: [LossKind; 3] = [LossKind::CrossEntropy, LossKind::LeastSquares, LossKind::L2Hinge];

#[test]
fn sampled_loss_is_unbiased_by_enumeration() {
    // m = 10, |P| = 2, alpha = 2: every one of the C(8,4) = 70 subsets
    let (m, alpha) = (10, 2);
    for loss in LOSSES {
        let model = init_model(5, 3, m, 11, 2.0, Theta::Tanh, loss.natural_sigma()).unwrap();
        let mut r = stream(4, Stream::Synthetic);
        let x = random_sparse(&mut r, 5, 0.8);
        let pos = LabelSet::new(vec![2, 7], m).unwrap();
        let neg = pos.complement(m);
        let mut total = 0.0;
        let mut count = 0;
        for mask in 0u32..(1 << neg.len()) {
            if mask.count_ones() != 4 {
                continue;
            }
            let s: Vec<usize> = (0..neg.len()).filter(|b| mask & (1 << b) != 0).map(|b| neg[b]).collect();
            total += sampled_instance_loss(&model, &x, &pos, &LabelSet::new(s, m).unwrap(), loss).unwrap();
            count += 1;
        }
        assert_eq!(count, 70);
        let c = implied_cost_ratio(m, 2, alpha);
        assert_eq!(c, 2.0);
        let want = cost_sensitive_loss(&model, &x, &pos, c, loss).unwrap();
        assert!((total / 70.0 - want).abs() < 1e-10, "{loss:?}");
    }
}

#[test]
fn batch_gradients_match_finite_differences() {
    let mut r = common::rng(77);
    for problem in 0..20 {
        let d = r.gen_range(1..=6);
        let k = r.gen_range(1..=4);
        let m = r.gen_range(2..=10);
        for loss in LOSSES {
            for theta in [Theta::Identity, Theta::Tanh] {
                let model = init_model(d, k, m, problem, 1.5, theta, loss.natural_sigma()).unwrap();
                let xs: Vec<_> = (0..3).map(|_| random_sparse(&mut r, d, 0.7)).collect();
                let ps: Vec<LabelSet> = (0..3)
                    .map(|_| {
                        let j = r.gen_range(0..m);
                        LabelSet::new(vec![j], m).unwrap()
                    })
                    .collect();
                let batch: Vec<BatchItem<'_>> = xs
                    .iter()
                    .zip(&ps)
                    .map(|(x, p)| BatchItem { x, positives: p, negatives: sample_negatives(p, m, 2, &mut r) })
                    .collect();
                let err = gradient_error(&model, &batch, 0.01, loss, 1e-5);
                assert!(err < 1e-5, "problem {problem} {loss:?} {theta:?}: {err}");
            }
        }
    }
}

fn toy() -> rmls::Dataset {
    separable_dataset(3, 20, 5, 4)
}

#[test]
fn training_reduces_objective() {
    let ds = toy();
    for loss in LOSSES {
        let cfg = TrainConfig { k: 4, epochs: 50, batch_size: 4, alpha: 1, lambda: 1e-4, eta: 0.2, loss, ..Default::default() };
        let mut log: Vec<EpochProgress> = Vec::new();
        train(&ds, &cfg, &mut log).unwrap();
        assert_eq!(log.len(), 50);
        let (first, last) = (log[0].mean_objective, log[49].mean_objective);
        assert!(last < 0.5 * first, "{loss:?}: {first} -> {last}");
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let ds = toy();
    let cfg = TrainConfig { k: 3, epochs: 5, ..Default::default() };
    let a = train(&ds, &cfg, &mut NoProgress).unwrap();
    let b = train(&ds, &cfg, &mut NoProgress).unwrap();
    assert_eq!(a, b);
    let c = train(&ds, &TrainConfig { seed: 1, ..cfg }, &mut NoProgress).unwrap();
    assert_ne!(a, c);
}

#[test]
fn diverging_step_size_is_reported() {
    let ds = toy();
    let cfg = TrainConfig { k: 4, epochs: 200, eta: 1e6, lambda: 0.0, loss: LossKind::LeastSquares, ..Default::default() };
    match train(&ds, &cfg, &mut NoProgress) {
        Err(rmls::Error::Numerical(msg)) => assert!(msg.contains("eta")),
        // Adagrad bounds each step by eta, so large eta can still be finite
        Ok(model) => assert!(model.is_finite()),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn tanh_and_rectifier_models_train() {
    let ds = toy();
    for theta in [Theta::Tanh, Theta::Rectifier] {
        let cfg = TrainConfig { k: 4, epochs: 20, theta, ..Default::default() };
        let model = train(&ds, &cfg, &mut NoProgress).unwrap();
        assert_eq!(model.theta, theta);
        assert_eq!(model.sigma, Sigma::Logistic);
    }
}
