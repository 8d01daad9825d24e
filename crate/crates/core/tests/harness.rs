mod common;

use common::separable_dataset;
use rmls::eval::MeanStd;
use rmls::lsdr::LsdrMethod;
use rmls::rbl::{LemlConfig, WarpConfig};
use rmls::{compute_stats, cross_validate, PredictionRule, TrainConfig, TrainerSpec};

fn rule() -> PredictionRule {
    PredictionRule::Threshold(0.5)
}

#[test]
fn baseline_report_matches_label_density() {
    let ds = separable_dataset(1, 60, 5, 7);
    let report = cross_validate(&ds, &TrainerSpec::Baseline, 5, 3, &rule(), 1).unwrap();
    assert_eq!(report.per_fold.len(), 5);
    let density = compute_stats(&ds).unwrap().label_density;
    // equal-sized folds, so the mean of fold densities is the overall density
    assert!((report.hamming_loss.mean - density).abs() < 1e-12);
    assert_eq!(report.f_score, MeanStd { mean: 0.0, std: 0.0 });
    assert_eq!(report.accuracy, MeanStd { mean: 0.0, std: 0.0 });
}

#[test]
fn reports_are_deterministic_and_thread_independent() {
    let ds = separable_dataset(2, 50, 6, 5);
    let spec = TrainerSpec::Rmls(TrainConfig { k: 3, epochs: 4, ..Default::default() });
    let a = cross_validate(&ds, &spec, 5, 7, &rule(), 1).unwrap();
    let b = cross_validate(&ds, &spec, 5, 7, &rule(), 3).unwrap();
    assert_eq!(a.csv_rows(), b.csv_rows());
    assert_eq!(a.csv_rows().lines().count(), 5);
    let c = cross_validate(&ds, &spec, 5, 8, &rule(), 1).unwrap();
    assert_ne!(a.csv_rows(), c.csv_rows());
}

#[test]
fn every_algorithm_runs_under_cross_validation() {
    let ds = separable_dataset(3, 40, 6, 6);
    let specs = [
        TrainerSpec::Rmls(TrainConfig { k: 3, epochs: 3, ..Default::default() }),
        TrainerSpec::lsdr(LsdrMethod::Plst, 3),
        TrainerSpec::lsdr(LsdrMethod::Cplst, 3),
        TrainerSpec::lsdr(LsdrMethod::Faie, 3),
        TrainerSpec::lsdr(LsdrMethod::Cssml, 3),
        TrainerSpec::Wsabie(WarpConfig { k: 3, epochs: 2, ..Default::default() }),
        TrainerSpec::Leml(LemlConfig { k: 3, sweeps: 2, ..Default::default() }),
        TrainerSpec::Baseline,
    ];
    for spec in &specs {
        let r = cross_validate(&ds, spec, 4, 0, &PredictionRule::TopK(2), 1).unwrap();
        assert_eq!(r.algorithm, spec.name());
        for v in [r.hamming_loss.mean, r.f_score.mean, r.accuracy.mean] {
            assert!((0.0..=1.0).contains(&v), "{}: {v}", spec.name());
        }
    }
}

#[test]
fn fold_errors_carry_the_fold_index() {
    let ds = separable_dataset(4, 20, 3, 4);
    // k larger than m fails inside every fold
    let err = cross_validate(&ds, &TrainerSpec::lsdr(LsdrMethod::Plst, 9), 4, 0, &rule(), 1).unwrap_err();
    assert!(matches!(err, rmls::Error::Fold { fold: 0, .. }), "{err}");
}
