use crate::error::{Error, Result};
use crate::model::Sigma;

/// Per-label classification loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    CrossEntropy,
    LeastSquares,
    L2Hinge,
}

impl LossKind {
    /// Output activation the loss is defined against.
    pub fn natural_sigma(self) -> Sigma {
        match self {
            LossKind::CrossEntropy | LossKind::LeastSquares => Sigma::Logistic,
            LossKind::L2Hinge => Sigma::Identity,
        }
    }

    pub fn check_sigma(self, sigma: Sigma) -> Result<()> {
        match (self, sigma) {
            (LossKind::CrossEntropy, Sigma::Identity) => {
                Err(Error::Config("cross_entropy requires logistic sigma".into()))
            }
            (LossKind::L2Hinge, Sigma::Logistic) => {
                Err(Error::Config("l2_hinge requires identity sigma".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "cross_entropy",
            LossKind::LeastSquares => "least_squares",
            LossKind::L2Hinge => "l2_hinge",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_entropy" | "cross-entropy" | "logistic" => Ok(LossKind::CrossEntropy),
            "least_squares" | "least-squares" | "squared" => Ok(LossKind::LeastSquares),
            "l2_hinge" | "l2-hinge" | "squared_hinge" => Ok(LossKind::L2Hinge),
            _ => Err(Error::Config(format!("unknown loss {s:?}"))),
        }
    }
}

/// Smallest probability fed to the logarithm of the cross-entropy loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLoss {
    pub loss: f64,
    /// Derivative of `loss` with respect to the raw score.
    pub grad: f64,
    /// The activated score had to be clamped into `[PROB_FLOOR, 1 − PROB_FLOOR]`.
    pub clamped: bool,
}

/// Loss of one label given its raw score `raw` and target `y ∈ {0, 1}`.
pub fn point_loss(kind: LossKind, sigma: Sigma, raw: f64, y: bool) -> PointLoss {
    let a = sigma.apply(raw);
    let t = if y { 1.0 } else { 0.0 };
    match kind {
        LossKind::CrossEntropy => {
            let clamped_a = a.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            let loss = if y { -clamped_a.ln() } else { -(1.0 - clamped_a).ln() };
            PointLoss { loss, grad: a - t, clamped: clamped_a != a }
        }
        LossKind::LeastSquares => {
            let r = a - t;
            PointLoss { loss: r * r, grad: 2.0 * r * sigma.derivative(raw, a), clamped: false }
        }
        LossKind::L2Hinge => {
            let s = 2.0 * t - 1.0;
            let slack = (1.0 - s * raw).max(0.0);
            PointLoss { loss: slack * slack, grad: -2.0 * s * slack, clamped: false }
        }
    }
}
