//! Linear SVC trained by dual coordinate descent.
//!
//! Hinge loss keeps the dual box `[0, C]`; squared hinge lifts the
//! upper bound and adds a diagonal `1/(2C)` term. The bias is realized
//! as an appended constant feature of value 1, so it is regularized
//! (unlike the kernel path's free ρ). One iteration is one full sweep
//! over the examples in a seeded random order.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::textio::{self, Lines};
use crate::types::DenseMatrix;

use super::{validate_binary_labels, validate_finite, Loss, SvmError, TrainConfig,
    TrainingDiagnostics};

/// Trained linear SVC: `f(x) = w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.weights.len() {
            return Err(SvmError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(crate::types::dot(&self.weights, x) + self.bias)
    }
}

/// Train a linear SVC on ±1 labels.
pub fn train_linear_dcd(
    features: &DenseMatrix,
    labels: &[i8],
    config: &TrainConfig,
) -> Result<(LinearModel, TrainingDiagnostics), SvmError> {
    let n = features.n_rows();
    if n < 2 || labels.len() != n {
        return Err(SvmError::EmptyTrainingSet);
    }
    validate_binary_labels(labels)?;
    validate_finite(features)?;
    let d = features.n_cols();
    let c = config.c;
    let (upper, diag_shift) = match config.loss {
        Loss::Hinge => (c, 0.0),
        Loss::SquaredHinge => (f64::INFINITY, 1.0 / (2.0 * c)),
    };

    // augmented self inner products ‖x̂_i‖² = ‖x_i‖² + 1
    let q_diag: Vec<f64> = (0..n)
        .map(|i| crate::types::dot(features.row(i), features.row(i)) + 1.0 + diag_shift)
        .collect();

    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; d + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut sweeps = 0usize;
    let mut converged = false;
    let mut max_pg = f64::INFINITY;
    while sweeps < config.max_iterations {
        order.shuffle(&mut rng);
        max_pg = 0.0;
        for &i in &order {
            let xi = features.row(i);
            let yi = labels[i] as f64;
            let margin = crate::types::dot(&w[..d], xi) + w[d];
            let g = yi * margin - 1.0 + diag_shift * alpha[i];
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == upper {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, upper);
                let step = (alpha[i] - old) * yi;
                for (wt, &x) in w[..d].iter_mut().zip(xi) {
                    *wt += step * x;
                }
                w[d] += step;
            }
        }
        sweeps += 1;
        if max_pg < config.tolerance {
            converged = true;
            break;
        }
    }

    let model = LinearModel {
        weights: w[..d].to_vec(),
        bias: w[d],
    };
    let mut slacks = Vec::with_capacity(n);
    for (i, &label) in labels.iter().enumerate() {
        let margin = model.decision_value(features.row(i)).expect("dims fixed");
        slacks.push((1.0 - label as f64 * margin).max(0.0));
    }
    let w_norm_sq: f64 = w.iter().map(|v| v * v).sum();
    let loss_term: f64 = match config.loss {
        Loss::Hinge => slacks.iter().sum(),
        Loss::SquaredHinge => slacks.iter().map(|s| s * s).sum(),
    };
    let sum_alpha: f64 = alpha.iter().sum();
    let diag_term: f64 = alpha.iter().map(|a| a * a).sum::<f64>() * diag_shift;
    Ok((
        model,
        TrainingDiagnostics {
            iterations_used: sweeps,
            converged,
            dual_objective: sum_alpha - 0.5 * (w_norm_sq + diag_term),
            primal_objective: 0.5 * w_norm_sq + c * loss_term,
            slacks,
            kkt_violation: max_pg,
        },
    ))
}

impl LinearModel {
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "svm_linear v1");
        let _ = writeln!(out, "bias {}", textio::fmt_f64(self.bias));
        let _ = writeln!(out, "n_features {}", self.weights.len());
        let _ = writeln!(out, "weights {}", textio::join_f64(&self.weights));
        let _ = writeln!(out, "end svm_linear");
        out
    }

    pub fn read_text(text: &str) -> Result<Self, SvmError> {
        let mut lines = Lines::new(text);
        Self::read_from(&mut lines)
    }

    pub(crate) fn read_from(lines: &mut Lines<'_>) -> Result<Self, SvmError> {
        lines.expect_exact("svm_linear v1")?;
        let bias: f64 = lines.tagged_value("bias")?;
        let n_features: usize = lines.tagged_value("n_features")?;
        let weights: Vec<f64> = lines.tagged_vec("weights")?;
        if weights.len() != n_features {
            return Err(crate::textio::TextIoError::Malformed(
                "weight count mismatch".into(),
            )
            .into());
        }
        lines.expect_exact("end svm_linear")?;
        Ok(LinearModel { weights, bias })
    }
}
