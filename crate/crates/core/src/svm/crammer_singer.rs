//! Crammer-Singer multiclass SVM.
//!
//! The joint dual is decomposed into one small sub-problem per example:
//! project that example's dual vector onto `{ d : Σ_c d_c = 0,
//! d_c ≤ C·[y_i = c] }`, solved exactly by a sorting-based projection.
//! Examples are swept in a seeded random order until the maximal KKT
//! violation drops below the tolerance or the sweep budget runs out.
//! The loss flag in the config is deliberately ignored: results must
//! not depend on it.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::textio::{self, Lines, TextIoError};
use crate::types::{dot, DenseMatrix};

use super::{validate_finite, SvmError, TrainConfig, TrainingDiagnostics};

/// Joint multiclass model: one weight vector per class, prediction by
/// arg-max score.
#[derive(Debug, Clone, PartialEq)]
pub struct CsModel {
    class_weights: Vec<Vec<f64>>,
    classes: Vec<String>,
}

impl CsModel {
    pub fn n_classes(&self) -> usize {
        self.class_weights.len()
    }

    pub fn n_features(&self) -> usize {
        self.class_weights.first().map_or(0, Vec::len)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_weights(&self, class: usize) -> &[f64] {
        &self.class_weights[class]
    }

    /// Attach class names (catalog order). Lengths must match.
    pub fn with_classes(mut self, classes: Vec<String>) -> Self {
        assert_eq!(classes.len(), self.class_weights.len());
        self.classes = classes;
        self
    }
}

/// Per-class scores `W_c · x`.
pub fn cs_scores(x: &[f64], model: &CsModel) -> Result<Vec<f64>, SvmError> {
    if x.len() != model.n_features() {
        return Err(SvmError::DimensionMismatch {
            expected: model.n_features(),
            got: x.len(),
        });
    }
    Ok(model
        .class_weights
        .iter()
        .map(|w| dot(w, x))
        .collect())
}

/// Arg-max class, lowest index on ties.
pub fn cs_predict(x: &[f64], model: &CsModel) -> Result<usize, SvmError> {
    let scores = cs_scores(x, model)?;
    let mut best = 0usize;
    for (c, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = c;
        }
    }
    Ok(best)
}

/// Train the Crammer-Singer model on class-index labels.
pub fn train_crammer_singer(
    features: &DenseMatrix,
    labels: &[usize],
    n_classes: usize,
    config: &TrainConfig,
) -> Result<(CsModel, TrainingDiagnostics), SvmError> {
    let n = features.n_rows();
    if n == 0 || labels.len() != n {
        return Err(SvmError::EmptyTrainingSet);
    }
    if n_classes < 2 {
        return Err(SvmError::SingleClass);
    }
    for &y in labels {
        if y >= n_classes {
            return Err(SvmError::ClassIndexOutOfRange {
                index: y,
                n_classes,
            });
        }
    }
    {
        let first = labels[0];
        if labels.iter().all(|&y| y == first) {
            return Err(SvmError::SingleClass);
        }
    }
    validate_finite(features)?;

    let d = features.n_cols();
    let k = n_classes;
    let c = config.c;
    let self_dot: Vec<f64> = (0..n).map(|i| dot(features.row(i), features.row(i))).collect();

    // α is n×k row-major; w is k weight vectors.
    let mut alpha = vec![0.0f64; n * k];
    let mut w = vec![vec![0.0f64; d]; k];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut g = vec![0.0f64; k];
    let mut b = vec![0.0f64; k];
    let mut d_new = vec![0.0f64; k];

    let mut sweeps = 0usize;
    let mut converged = false;
    let mut max_violation = f64::INFINITY;
    while sweeps < config.max_iterations {
        order.shuffle(&mut rng);
        max_violation = 0.0;
        for &i in &order {
            let a_i = self_dot[i];
            if a_i == 0.0 {
                continue;
            }
            let xi = features.row(i);
            let yi = labels[i];
            let ai = &alpha[i * k..(i + 1) * k];
            for m in 0..k {
                g[m] = dot(&w[m], xi) + if m == yi { 0.0 } else { 1.0 };
            }
            // violation: max over all G minus min over the increasable
            // coordinates (α below its bound)
            let mut max_g = f64::NEG_INFINITY;
            let mut min_g = f64::INFINITY;
            for m in 0..k {
                max_g = max_g.max(g[m]);
                let bound = if m == yi { c } else { 0.0 };
                if ai[m] < bound {
                    min_g = min_g.min(g[m]);
                }
            }
            let violation = if min_g.is_finite() {
                (max_g - min_g).max(0.0)
            } else {
                0.0
            };
            max_violation = max_violation.max(violation);
            if violation < 1e-12 {
                continue;
            }
            for m in 0..k {
                b[m] = g[m] - a_i * ai[m];
            }
            solve_subproblem(a_i, &b, yi, c, &mut d_new);
            for m in 0..k {
                let delta = d_new[m] - ai[m];
                if delta != 0.0 {
                    for (wt, &x) in w[m].iter_mut().zip(xi) {
                        *wt += delta * x;
                    }
                }
            }
            alpha[i * k..(i + 1) * k].copy_from_slice(&d_new);
        }
        sweeps += 1;
        if max_violation < config.tolerance {
            converged = true;
            break;
        }
    }

    let model = CsModel {
        class_weights: w,
        classes: (0..k).map(|c| c.to_string()).collect(),
    };

    // hinge slack: max_m (wₘ·x + e_m) - w_y·x
    let mut slacks = Vec::with_capacity(n);
    for (i, &yi) in labels.iter().enumerate() {
        let xi = features.row(i);
        let score_y = dot(&model.class_weights[yi], xi);
        let mut worst = 0.0f64;
        for m in 0..k {
            let e = if m == yi { 0.0 } else { 1.0 };
            worst = worst.max(dot(&model.class_weights[m], xi) + e - score_y);
        }
        slacks.push(worst);
    }
    let w_norm_sq: f64 = model
        .class_weights
        .iter()
        .map(|w| dot(w, w))
        .sum();
    // dual objective (max form): -½ Σ‖wₘ‖² - Σ e·α
    let e_dot_alpha: f64 = (0..n)
        .map(|i| {
            (0..k)
                .filter(|&m| m != labels[i])
                .map(|m| alpha[i * k + m])
                .sum::<f64>()
        })
        .sum();
    Ok((
        model,
        TrainingDiagnostics {
            iterations_used: sweeps,
            converged,
            dual_objective: -0.5 * w_norm_sq - e_dot_alpha,
            primal_objective: 0.5 * w_norm_sq + c * slacks.iter().sum::<f64>(),
            slacks,
            kkt_violation: max_violation,
        },
    ))
}

/// Exact solution of one per-example sub-problem:
/// minimize ½A Σ d² + Σ B d  s.t.  Σ d = 0,  d_m ≤ C·[m = y].
///
/// The optimum is `d_m = min(C_m, (β - B_m)/A)` with β fixed by the
/// zero-sum constraint; β comes from a descending scan of
/// `D_m = B_m + A·C_m`.
fn solve_subproblem(a: f64, b: &[f64], y: usize, c: f64, out: &mut [f64]) {
    let k = b.len();
    let mut d: Vec<f64> = b.to_vec();
    d[y] += a * c;
    d.sort_unstable_by(|p, q| q.partial_cmp(p).expect("finite"));
    let mut beta_acc = d[0] - a * c;
    let mut r = 1usize;
    while r < k && beta_acc < (r as f64) * d[r] {
        beta_acc += d[r];
        r += 1;
    }
    let beta = beta_acc / r as f64;
    for m in 0..k {
        let bound = if m == y { c } else { 0.0 };
        out[m] = bound.min((beta - b[m]) / a);
    }
}

impl CsModel {
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "svm_cs v1");
        let _ = writeln!(out, "n_classes {}", self.n_classes());
        let _ = writeln!(out, "n_features {}", self.n_features());
        for (i, name) in self.classes.iter().enumerate() {
            let _ = writeln!(out, "class {i} {name}");
        }
        for (i, w) in self.class_weights.iter().enumerate() {
            let _ = writeln!(out, "w {} {}", i, textio::join_f64(w));
        }
        let _ = writeln!(out, "end svm_cs");
        out
    }

    pub fn read_text(text: &str) -> Result<Self, SvmError> {
        let mut lines = Lines::new(text);
        Self::read_from(&mut lines)
    }

    /// Read from a line cursor positioned at the model header, for
    /// embedding in larger files.
    pub fn read_from(lines: &mut Lines<'_>) -> Result<Self, SvmError> {
        lines.expect_exact("svm_cs v1")?;
        let n_classes: usize = lines.tagged_value("n_classes")?;
        let n_features: usize = lines.tagged_value("n_features")?;
        let mut classes = Vec::with_capacity(n_classes);
        for i in 0..n_classes {
            let rest = lines.expect_tagged("class")?;
            let (idx, name) = rest
                .split_once(' ')
                .ok_or_else(|| TextIoError::Malformed("class line needs index and name".into()))?;
            if idx.parse::<usize>().ok() != Some(i) {
                return Err(TextIoError::Malformed(format!("class {idx} out of order")).into());
            }
            classes.push(name.to_string());
        }
        let mut class_weights = Vec::with_capacity(n_classes);
        for i in 0..n_classes {
            let rest = lines.expect_tagged("w")?;
            let mut it = rest.split_ascii_whitespace();
            let idx: usize = textio::parse_field(it.next(), "class index")?;
            if idx != i {
                return Err(TextIoError::Malformed(format!("w {idx} out of order")).into());
            }
            let mut weights = Vec::with_capacity(n_features);
            for _ in 0..n_features {
                weights.push(textio::parse_field(it.next(), "weight")?);
            }
            class_weights.push(weights);
        }
        lines.expect_exact("end svm_cs")?;
        Ok(CsModel {
            class_weights,
            classes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{train_linear_dcd, Loss};
    use proptest::prelude::*;

    fn config() -> TrainConfig {
        TrainConfig {
            c: 1.0,
            max_iterations: 5_000,
            tolerance: 1e-8,
            loss: Loss::Hinge,
            seed: 3,
        }
    }

    #[test]
    fn single_point_is_fit() {
        let features = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![-1.0, 0.2]]);
        let (model, _) = train_crammer_singer(&features, &[2, 0], 3, &config()).unwrap();
        assert_eq!(cs_predict(features.row(0), &model).unwrap(), 2);
    }

    #[test]
    fn one_hot_classes_train_to_zero_error() {
        let k = 3;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in 0..k {
            for rep in 0..5 {
                let mut row = vec![0.0; k];
                row[class] = 1.0 + 0.01 * rep as f64;
                rows.push(row);
                labels.push(class);
            }
        }
        let features = DenseMatrix::from_rows(&rows);
        let (model, diag) = train_crammer_singer(&features, &labels, k, &config()).unwrap();
        assert!(diag.converged);
        for (row, &y) in rows.iter().zip(&labels) {
            assert_eq!(cs_predict(row, &model).unwrap(), y);
        }
    }

    #[test]
    fn binary_case_matches_linear_dcd_predictions() {
        // 1-D {0, 1}: class 0 ↔ label -1, class 1 ↔ label +1
        let features = DenseMatrix::from_rows(&[vec![0.0], vec![1.0]]);
        let cfg = TrainConfig {
            c: 1000.0,
            max_iterations: 20_000,
            tolerance: 1e-8,
            loss: Loss::Hinge,
            seed: 5,
        };
        let (cs, _) = train_crammer_singer(&features, &[0, 1], 2, &cfg).unwrap();
        let (linear, _) = train_linear_dcd(&features, &[-1, 1], &cfg).unwrap();
        for x in [[0.0], [1.0]] {
            let cs_class = cs_predict(&x, &cs).unwrap();
            let lin_class = if linear.decision_value(&x).unwrap() > 0.0 {
                1
            } else {
                0
            };
            assert_eq!(cs_class, lin_class, "x = {x:?}");
        }
    }

    #[test]
    fn scores_and_ties() {
        let model = CsModel {
            class_weights: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            classes: vec!["a".into(), "b".into(), "c".into()],
        };
        // zero input: all scores zero, tie broken to class 0
        assert_eq!(cs_predict(&[0.0, 0.0], &model).unwrap(), 0);
        // classes 0 and 2 tie; lowest index wins
        assert_eq!(cs_predict(&[2.0, 1.0], &model).unwrap(), 0);
        // scaling doubles scores, argmax unchanged
        let s1 = cs_scores(&[0.3, 0.9], &model).unwrap();
        let s2 = cs_scores(&[0.6, 1.8], &model).unwrap();
        for (a, b) in s1.iter().zip(&s2) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
        assert!(matches!(
            cs_scores(&[1.0], &model),
            Err(SvmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_inputs() {
        let features = DenseMatrix::from_rows(&[vec![1.0], vec![2.0]]);
        assert!(matches!(
            train_crammer_singer(&features, &[0, 3], 3, &config()),
            Err(SvmError::ClassIndexOutOfRange { index: 3, .. })
        ));
        assert!(matches!(
            train_crammer_singer(&features, &[1, 1], 3, &config()),
            Err(SvmError::SingleClass)
        ));
    }

    #[test]
    fn loss_flag_never_changes_the_model() {
        let features = DenseMatrix::from_rows(&[
            vec![0.1, 0.9],
            vec![0.8, 0.2],
            vec![0.4, 0.4],
            vec![-0.3, 0.6],
        ]);
        let labels = [0, 1, 2, 0];
        let hinge = TrainConfig {
            loss: Loss::Hinge,
            ..config()
        };
        let squared = TrainConfig {
            loss: Loss::SquaredHinge,
            ..config()
        };
        let (a, _) = train_crammer_singer(&features, &labels, 3, &hinge).unwrap();
        let (b, _) = train_crammer_singer(&features, &labels, 3, &squared).unwrap();
        assert_eq!(a.write_text(), b.write_text());
    }

    // independent route: solve the β equation by bisection and compare
    fn subproblem_bisection(a: f64, b: &[f64], y: usize, c: f64) -> Vec<f64> {
        let bound = |m: usize| if m == y { c } else { 0.0 };
        let h = |beta: f64| -> f64 {
            (0..b.len())
                .map(|m| bound(m).min((beta - b[m]) / a))
                .sum()
        };
        let mut lo = b.iter().cloned().fold(f64::INFINITY, f64::min) - a * c - 1.0;
        let mut hi = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + a * c + 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let beta = 0.5 * (lo + hi);
        (0..b.len()).map(|m| bound(m).min((beta - b[m]) / a)).collect()
    }

    proptest! {
        #[test]
        fn subproblem_matches_bisection(
            b in proptest::collection::vec(-5.0f64..5.0, 2..6),
            y_pick in 0usize..6,
            a in 0.1f64..4.0,
            c in 0.05f64..10.0,
        ) {
            let y = y_pick % b.len();
            let mut fast = vec![0.0; b.len()];
            solve_subproblem(a, &b, y, c, &mut fast);
            let slow = subproblem_bisection(a, &b, y, c);
            let sum: f64 = fast.iter().sum();
            prop_assert!(sum.abs() < 1e-9, "sum {sum}");
            for (m, (f, s)) in fast.iter().zip(&slow).enumerate() {
                prop_assert!((f - s).abs() < 1e-6, "m={m} fast={f} slow={s}");
                let bound = if m == y { c } else { 0.0 };
                prop_assert!(*f <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn round_trip() {
        let model = CsModel {
            class_weights: vec![vec![0.5, -1.5], vec![2.0, 0.25]],
            classes: vec!["java".into(), "python".into()],
        };
        let back = CsModel::read_text(&model.write_text()).unwrap();
        assert_eq!(model, back);
    }
}
