//! Binary kernel SVC trained by sequential minimal optimization on the
//! dual `min ½ αᵀQα - eᵀα` with `yᵀα = 0`, `0 ≤ α ≤ C`, where
//! `Q_ij = y_i y_j K(x_i, x_j)`.
//!
//! Working sets are picked by the maximal-violating-pair rule and each
//! pair is solved analytically. One iteration is one pair update.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::rc::Rc;

use crate::textio::{self, Lines};
use crate::types::DenseMatrix;

use super::{validate_binary_labels, validate_finite, KernelSpec, SvmError, TrainConfig,
    TrainingDiagnostics};

/// Trained kernel SVC: support vectors with dual coefficients and the
/// intercept of the decision function `Σ y_i α_i K(x_i, x) + ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvmModel {
    pub support_indices: Vec<usize>,
    pub alphas: Vec<f64>,
    pub support_labels: Vec<i8>,
    pub support_vectors: Vec<Vec<f64>>,
    pub intercept: f64,
    pub kernel: KernelSpec,
}

impl BinarySvmModel {
    pub fn n_support(&self) -> usize {
        self.alphas.len()
    }

    pub fn n_features(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }
}

/// Pre-sign decision value `Σ y_i α_i K(x_i, x) + ρ`.
pub fn decision_value(x: &[f64], model: &BinarySvmModel) -> Result<f64, SvmError> {
    if x.len() != model.n_features() {
        return Err(SvmError::DimensionMismatch {
            expected: model.n_features(),
            got: x.len(),
        });
    }
    let mut value = model.intercept;
    for i in 0..model.n_support() {
        value += model.support_labels[i] as f64
            * model.alphas[i]
            * model.kernel.eval_unchecked(&model.support_vectors[i], x);
    }
    Ok(value)
}

/// FIFO cache of kernel matrix rows.
struct KernelCache<'a> {
    features: &'a DenseMatrix,
    kernel: &'a KernelSpec,
    rows: HashMap<usize, Rc<Vec<f64>>>,
    order: std::collections::VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    fn new(features: &'a DenseMatrix, kernel: &'a KernelSpec) -> Self {
        let n = features.n_rows();
        // ~64 MiB of cached rows, never fewer than four
        let capacity = ((64 << 20) / (8 * n.max(1))).clamp(4, n.max(4));
        KernelCache {
            features,
            kernel,
            rows: HashMap::new(),
            order: std::collections::VecDeque::new(),
            capacity,
        }
    }

    fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        if let Some(row) = self.rows.get(&i) {
            return Rc::clone(row);
        }
        let xi = self.features.row(i);
        let row: Vec<f64> = (0..self.features.n_rows())
            .map(|t| self.kernel.eval_unchecked(xi, self.features.row(t)))
            .collect();
        let row = Rc::new(row);
        if self.rows.len() >= self.capacity {
            if let Some(evict) = self.order.pop_front() {
                self.rows.remove(&evict);
            }
        }
        self.rows.insert(i, Rc::clone(&row));
        self.order.push_back(i);
        row
    }
}

/// Train a binary kernel SVC. Returns the model plus diagnostics; when
/// the iteration budget runs out before the KKT tolerance is met the
/// diagnostics carry `converged = false` and the remaining violation.
pub fn train_svc_smo(
    features: &DenseMatrix,
    labels: &[i8],
    kernel: &KernelSpec,
    config: &TrainConfig,
) -> Result<(BinarySvmModel, TrainingDiagnostics), SvmError> {
    let n = features.n_rows();
    if n < 2 || labels.len() != n {
        return Err(SvmError::EmptyTrainingSet);
    }
    validate_binary_labels(labels)?;
    validate_finite(features)?;
    let c = config.c;
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();

    let mut cache = KernelCache::new(features, kernel);
    let self_k: Vec<f64> = (0..n)
        .map(|i| kernel.eval_unchecked(features.row(i), features.row(i)))
        .collect();

    let mut alpha = vec![0.0f64; n];
    // gradient of the dual objective: G = Qα - e
    let mut grad = vec![-1.0f64; n];

    let in_up = |t: usize, alpha: &[f64]| {
        (labels[t] == 1 && alpha[t] < c) || (labels[t] == -1 && alpha[t] > 0.0)
    };
    let in_low = |t: usize, alpha: &[f64]| {
        (labels[t] == 1 && alpha[t] > 0.0) || (labels[t] == -1 && alpha[t] < c)
    };

    let mut iterations = 0usize;
    let mut converged = false;
    let mut violation = f64::INFINITY;
    while iterations < config.max_iterations {
        // maximal violating pair
        let mut m_val = f64::NEG_INFINITY;
        let mut m_idx = usize::MAX;
        let mut low_val = f64::INFINITY;
        let mut low_idx = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(t, &alpha) && v > m_val {
                m_val = v;
                m_idx = t;
            }
            if in_low(t, &alpha) && v < low_val {
                low_val = v;
                low_idx = t;
            }
        }
        violation = m_val - low_val;
        if violation <= config.tolerance || m_idx == usize::MAX || low_idx == usize::MAX {
            converged = violation <= config.tolerance;
            break;
        }
        let (i, j) = (m_idx, low_idx);
        let ki = cache.row(i);
        let kj = cache.row(j);

        let old_ai = alpha[i];
        let old_aj = alpha[j];
        // curvature along the feasible pair direction is
        // ‖φ(x_i) - φ(x_j)‖² for either label combination
        if labels[i] != labels[j] {
            let mut quad = self_k[i] + self_k[j] - 2.0 * ki[j];
            if quad <= 0.0 {
                quad = 1e-12;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = self_k[i] + self_k[j] - 2.0 * ki[j];
            if quad <= 0.0 {
                quad = 1e-12;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let delta_i = alpha[i] - old_ai;
        let delta_j = alpha[j] - old_aj;
        if delta_i == 0.0 && delta_j == 0.0 {
            // numerically stuck pair; treat the remaining violation as
            // the exit state
            break;
        }
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * delta_i + y[j] * kj[t] * delta_j);
        }
        iterations += 1;
    }
    if !converged && iterations >= config.max_iterations {
        // recompute the final violation for the diagnostics
        let mut m_val = f64::NEG_INFINITY;
        let mut low_val = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(t, &alpha) {
                m_val = m_val.max(v);
            }
            if in_low(t, &alpha) {
                low_val = low_val.min(v);
            }
        }
        violation = m_val - low_val;
        converged = violation <= config.tolerance;
    }

    let intercept = compute_intercept(&alpha, &y, &grad, c);

    // raw decision value per training point: d_t = y_t (G_t + 1)
    let mut slacks = Vec::with_capacity(n);
    for t in 0..n {
        let d_t = y[t] * (grad[t] + 1.0);
        slacks.push((1.0 - y[t] * (d_t + intercept)).max(0.0));
    }
    let sum_alpha: f64 = alpha.iter().sum();
    let alpha_dot_grad: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * g).sum();
    // αᵀQα = αᵀ(G + e) = αᵀG + Σα
    let quad_term = alpha_dot_grad + sum_alpha;
    let dual_objective = sum_alpha - 0.5 * quad_term;
    let primal_objective = 0.5 * quad_term + c * slacks.iter().sum::<f64>();

    let mut support_indices = Vec::new();
    let mut alphas = Vec::new();
    let mut support_labels = Vec::new();
    let mut support_vectors = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_indices.push(t);
            alphas.push(alpha[t]);
            support_labels.push(labels[t]);
            support_vectors.push(features.row(t).to_vec());
        }
    }

    Ok((
        BinarySvmModel {
            support_indices,
            alphas,
            support_labels,
            support_vectors,
            intercept,
            kernel: *kernel,
        },
        TrainingDiagnostics {
            iterations_used: iterations,
            converged,
            dual_objective,
            primal_objective,
            slacks,
            kkt_violation: violation,
        },
    ))
}

/// ρ from the free support vectors (average of `-y_t G_t`), falling
/// back to the midpoint of the feasible interval when none are free.
fn compute_intercept(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut n_free = 0usize;
    let mut sum_free = 0.0;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            n_free += 1;
            sum_free += v;
        } else if (alpha[t] == 0.0 && y[t] > 0.0) || (alpha[t] >= c && y[t] < 0.0) {
            lower = lower.max(v);
        } else {
            upper = upper.min(v);
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (lower + upper) / 2.0
    }
}

impl BinarySvmModel {
    /// Structured-text serialization; reals carry 17 significant digits
    /// so a round trip reproduces identical decision values.
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "svm_kernel v1");
        let _ = writeln!(out, "{}", self.kernel.write_line());
        let _ = writeln!(out, "intercept {}", textio::fmt_f64(self.intercept));
        let _ = writeln!(out, "n_features {}", self.n_features());
        let _ = writeln!(out, "n_support {}", self.n_support());
        for i in 0..self.n_support() {
            let _ = writeln!(
                out,
                "sv {} {} {} {}",
                self.support_indices[i],
                self.support_labels[i],
                textio::fmt_f64(self.alphas[i]),
                textio::join_f64(&self.support_vectors[i])
            );
        }
        let _ = writeln!(out, "end svm_kernel");
        out
    }

    pub fn read_text(text: &str) -> Result<Self, SvmError> {
        let mut lines = Lines::new(text);
        Self::read_from(&mut lines)
    }

    pub(crate) fn read_from(lines: &mut Lines<'_>) -> Result<Self, SvmError> {
        lines.expect_exact("svm_kernel v1")?;
        let kernel = KernelSpec::read_from(lines)?;
        let intercept: f64 = lines.tagged_value("intercept")?;
        let n_features: usize = lines.tagged_value("n_features")?;
        let n_support: usize = lines.tagged_value("n_support")?;
        let mut support_indices = Vec::with_capacity(n_support);
        let mut alphas = Vec::with_capacity(n_support);
        let mut support_labels = Vec::with_capacity(n_support);
        let mut support_vectors = Vec::with_capacity(n_support);
        for _ in 0..n_support {
            let rest = lines.expect_tagged("sv")?;
            let mut it = rest.split_ascii_whitespace();
            support_indices.push(textio::parse_field(it.next(), "index")?);
            support_labels.push(textio::parse_field(it.next(), "label")?);
            alphas.push(textio::parse_field(it.next(), "alpha")?);
            let mut vector = Vec::with_capacity(n_features);
            for _ in 0..n_features {
                vector.push(textio::parse_field(it.next(), "sv entry")?);
            }
            support_vectors.push(vector);
        }
        lines.expect_exact("end svm_kernel")?;
        Ok(BinarySvmModel {
            support_indices,
            alphas,
            support_labels,
            support_vectors,
            intercept,
            kernel,
        })
    }
}
