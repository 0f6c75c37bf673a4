//! Support vector classification: a kernel SVC trained by an SMO-style
//! dual solver, a linear SVC trained by dual coordinate descent with
//! hinge or squared-hinge loss, and a Crammer-Singer joint multiclass
//! solver.

mod crammer_singer;
mod kernel;
mod linear;
mod smo;

pub use crammer_singer::{cs_predict, cs_scores, train_crammer_singer, CsModel};
pub use kernel::{kernel_eval, KernelSpec};
pub use linear::{train_linear_dcd, LinearModel};
pub use smo::{decision_value, train_svc_smo, BinarySvmModel};

use thiserror::Error;

use crate::textio::TextIoError;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training set is empty or too small")]
    EmptyTrainingSet,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("label must be -1 or +1, got {0}")]
    BadBinaryLabel(i8),
    #[error("class index {index} out of range for {n_classes} classes")]
    ClassIndexOutOfRange { index: usize, n_classes: usize },
    #[error("feature matrix contains a non-finite value")]
    NonFiniteFeature,
    #[error("model parse error: {0}")]
    Parse(#[from] TextIoError),
}

/// Binary loss used by the linear dual coordinate descent path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Hinge,
    SquaredHinge,
}

impl Loss {
    pub fn label(&self) -> &'static str {
        match self {
            Loss::Hinge => "hinge",
            Loss::SquaredHinge => "squared_hinge",
        }
    }

    pub fn parse(s: &str) -> Option<Loss> {
        match s {
            "hinge" => Some(Loss::Hinge),
            "squared_hinge" => Some(Loss::SquaredHinge),
            _ => None,
        }
    }
}

/// Shared trainer settings. `max_iterations` counts outer solver steps:
/// working-set updates for SMO, full sweeps for the coordinate-descent
/// paths.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub c: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Read by the linear path only; the Crammer-Singer solver accepts
    /// it but its result must not depend on it.
    pub loss: Loss,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            max_iterations: 10_000,
            tolerance: 1e-3,
            loss: Loss::Hinge,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_loss(mut self, loss: Loss) -> Self {
        self.loss = loss;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Solver telemetry returned next to every trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDiagnostics {
    pub iterations_used: usize,
    /// True when the stopping tolerance was met before the iteration
    /// budget ran out.
    pub converged: bool,
    /// Dual objective in maximization form (`e·α - ½ αᵀQα`); by weak
    /// duality it never exceeds the primal.
    pub dual_objective: f64,
    pub primal_objective: f64,
    /// Hinge slack per training example.
    pub slacks: Vec<f64>,
    /// Remaining maximal KKT violation at exit.
    pub kkt_violation: f64,
}

pub(crate) fn validate_binary_labels(labels: &[i8]) -> Result<(), SvmError> {
    let mut pos = false;
    let mut neg = false;
    for &y in labels {
        match y {
            1 => pos = true,
            -1 => neg = true,
            other => return Err(SvmError::BadBinaryLabel(other)),
        }
    }
    if !(pos && neg) {
        return Err(SvmError::SingleClass);
    }
    Ok(())
}

pub(crate) fn validate_finite(features: &crate::types::DenseMatrix) -> Result<(), SvmError> {
    for r in 0..features.n_rows() {
        if features.row(r).iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFiniteFeature);
        }
    }
    Ok(())
}
