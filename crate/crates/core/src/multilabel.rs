//! One-vs-rest multi-label classification and the set-overlap metrics:
//! per-example Jaccard accuracy, set precision/recall, percentage
//! error, and exact-match (subset) accuracy.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::LabelCatalog;
use crate::svm::{
    cs_scores, decision_value, train_linear_dcd, train_svc_smo, BinarySvmModel, CsModel,
    KernelSpec, LinearModel, SvmError, TrainConfig, TrainingDiagnostics,
};
use crate::textio::{self, Lines, TextIoError};
use crate::types::DenseMatrix;

#[derive(Debug, Error)]
pub enum MultilabelError {
    #[error("truth and prediction lists differ in length ({truths} vs {predictions})")]
    LengthMismatch { truths: usize, predictions: usize },
    #[error("evaluation requires at least one example")]
    EmptyEvaluation,
    #[error("example {index} has an empty truth set")]
    EmptyTruth { index: usize },
    #[error("catalog must contain at least two labels")]
    CatalogTooSmall,
    #[error("label `{0}` is outside the catalog")]
    LabelOutsideCatalog(String),
    #[error("class `{class}` has no {side} example")]
    OneSidedClass { class: String, side: &'static str },
    #[error("feature rows and label sets differ in length")]
    FeatureLabelMismatch,
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("model parse error: {0}")]
    Parse(#[from] TextIoError),
}

/// A set of tags attached to one example.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSet(BTreeSet<String>);

impl<S: Into<String>> FromIterator<S> for LabelSet {
    fn from_iter<I: IntoIterator<Item = S>>(labels: I) -> Self {
        LabelSet(labels.into_iter().map(Into::into).collect())
    }
}

impl LabelSet {
    pub fn new() -> Self {
        LabelSet(BTreeSet::new())
    }

    pub fn insert(&mut self, label: impl Into<String>) {
        self.0.insert(label.into());
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.contains(label)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    fn intersection_size(&self, other: &LabelSet) -> usize {
        self.0.intersection(&other.0).count()
    }

    fn union_size(&self, other: &LabelSet) -> usize {
        self.0.union(&other.0).count()
    }
}

/// How per-class decision values become a label set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRule {
    pub threshold: f64,
    /// When no value clears the threshold, predict the top-scoring
    /// class so the prediction is never empty.
    pub fallback_top1: bool,
}

impl Default for DecisionRule {
    fn default() -> Self {
        DecisionRule {
            threshold: 0.0,
            fallback_top1: true,
        }
    }
}

/// One binary member per class, kernel or linear.
#[derive(Debug, Clone, PartialEq)]
pub enum BinaryMember {
    Kernel(BinarySvmModel),
    Linear(LinearModel),
}

impl BinaryMember {
    fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        match self {
            BinaryMember::Kernel(m) => decision_value(x, m),
            BinaryMember::Linear(m) => m.decision_value(x),
        }
    }
}

/// Which binary trainer backs each one-vs-rest member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainerChoice {
    Smo(KernelSpec),
    LinearDcd,
}

/// One-vs-rest model over a label catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrModel {
    classes: Vec<String>,
    members: Vec<BinaryMember>,
    pub decision_rule: DecisionRule,
}

impl OvrModel {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn member(&self, class: usize) -> &BinaryMember {
        &self.members[class]
    }
}

/// Train one binary model per catalog class (`+1` iff the class is in
/// the example's label set). Classes train independently; the members
/// are assembled in catalog order so the model is deterministic.
pub fn train_ovr(
    features: &DenseMatrix,
    label_sets: &[LabelSet],
    catalog: &LabelCatalog,
    trainer: &TrainerChoice,
    config: &TrainConfig,
    rule: DecisionRule,
) -> Result<(OvrModel, Vec<TrainingDiagnostics>), MultilabelError> {
    if catalog.len() < 2 {
        return Err(MultilabelError::CatalogTooSmall);
    }
    if features.n_rows() != label_sets.len() {
        return Err(MultilabelError::FeatureLabelMismatch);
    }
    for set in label_sets {
        for label in set.iter() {
            if !catalog.contains(label) {
                return Err(MultilabelError::LabelOutsideCatalog(label.to_string()));
            }
        }
    }
    for class in &catalog.labels {
        let positives = label_sets.iter().filter(|s| s.contains(class)).count();
        if positives == 0 {
            return Err(MultilabelError::OneSidedClass {
                class: class.clone(),
                side: "positive",
            });
        }
        if positives == label_sets.len() {
            return Err(MultilabelError::OneSidedClass {
                class: class.clone(),
                side: "negative",
            });
        }
    }

    let trained: Vec<Result<(BinaryMember, TrainingDiagnostics), SvmError>> = catalog
        .labels
        .par_iter()
        .map(|class| {
            let labels: Vec<i8> = label_sets
                .iter()
                .map(|s| if s.contains(class) { 1 } else { -1 })
                .collect();
            match trainer {
                TrainerChoice::Smo(kernel) => train_svc_smo(features, &labels, kernel, config)
                    .map(|(m, d)| (BinaryMember::Kernel(m), d)),
                TrainerChoice::LinearDcd => train_linear_dcd(features, &labels, config)
                    .map(|(m, d)| (BinaryMember::Linear(m), d)),
            }
        })
        .collect();
    let mut members = Vec::with_capacity(catalog.len());
    let mut diagnostics = Vec::with_capacity(catalog.len());
    for result in trained {
        let (member, diag) = result?;
        members.push(member);
        diagnostics.push(diag);
    }
    Ok((
        OvrModel {
            classes: catalog.labels.clone(),
            members,
            decision_rule: rule,
        },
        diagnostics,
    ))
}

/// Per-class decision values in catalog order.
pub fn decision_values(x: &[f64], model: &OvrModel) -> Result<Vec<f64>, MultilabelError> {
    model
        .members
        .iter()
        .map(|m| m.decision_value(x).map_err(MultilabelError::from))
        .collect()
}

/// `Z = {c : f_c(x) > threshold}`, with the optional top-1 fallback
/// keeping the prediction nonempty.
pub fn predict_labels(x: &[f64], model: &OvrModel) -> Result<LabelSet, MultilabelError> {
    let values = decision_values(x, model)?;
    Ok(labels_from_values(&values, model))
}

pub(crate) fn labels_from_values(values: &[f64], model: &OvrModel) -> LabelSet {
    let rule = model.decision_rule;
    let mut set = LabelSet::new();
    for (c, &v) in values.iter().enumerate() {
        if v > rule.threshold {
            set.insert(model.classes[c].clone());
        }
    }
    if set.is_empty() && rule.fallback_top1 && !values.is_empty() {
        let mut best = 0usize;
        for (c, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = c;
            }
        }
        set.insert(model.classes[best].clone());
    }
    set
}

/// Label set from a Crammer-Singer model: every class whose score is
/// within `margin` of the maximum (margin 0 gives the plain top-1).
pub fn predict_labels_cs(
    x: &[f64],
    model: &CsModel,
    margin: f64,
) -> Result<LabelSet, MultilabelError> {
    let scores = cs_scores(x, model)?;
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut set = LabelSet::new();
    for (c, &s) in scores.iter().enumerate() {
        if s >= max - margin {
            set.insert(model.classes()[c].clone());
        }
    }
    Ok(set)
}

/// Multi-label evaluation over aligned truth/prediction lists.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub percentage_error: f64,
    pub subset_accuracy: f64,
    pub n_examples: usize,
}

/// Mean per-example Jaccard accuracy, set precision and recall,
/// percentage error `(1 - accuracy) * 100`, and exact-match subset
/// accuracy. An empty prediction contributes 0 to its precision term.
pub fn evaluate(
    truths: &[LabelSet],
    predictions: &[LabelSet],
) -> Result<EvalReport, MultilabelError> {
    if truths.len() != predictions.len() {
        return Err(MultilabelError::LengthMismatch {
            truths: truths.len(),
            predictions: predictions.len(),
        });
    }
    if truths.is_empty() {
        return Err(MultilabelError::EmptyEvaluation);
    }
    let mut accuracy_sum = 0.0;
    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut exact = 0usize;
    for (index, (truth, pred)) in truths.iter().zip(predictions).enumerate() {
        if truth.is_empty() {
            return Err(MultilabelError::EmptyTruth { index });
        }
        let inter = truth.intersection_size(pred) as f64;
        let union = truth.union_size(pred) as f64;
        accuracy_sum += inter / union;
        if !pred.is_empty() {
            precision_sum += inter / pred.len() as f64;
        }
        recall_sum += inter / truth.len() as f64;
        if truth == pred {
            exact += 1;
        }
    }
    let n = truths.len() as f64;
    let accuracy = accuracy_sum / n;
    Ok(EvalReport {
        accuracy,
        precision: precision_sum / n,
        recall: recall_sum / n,
        percentage_error: (1.0 - accuracy) * 100.0,
        subset_accuracy: exact as f64 / n,
        n_examples: truths.len(),
    })
}

impl EvalReport {
    /// CSV export: `metric,value` header plus one row per metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "metric,value");
        let _ = writeln!(out, "accuracy,{}", textio::fmt_f64(self.accuracy));
        let _ = writeln!(out, "precision,{}", textio::fmt_f64(self.precision));
        let _ = writeln!(out, "recall,{}", textio::fmt_f64(self.recall));
        let _ = writeln!(
            out,
            "percentage_error,{}",
            textio::fmt_f64(self.percentage_error)
        );
        let _ = writeln!(
            out,
            "subset_accuracy,{}",
            textio::fmt_f64(self.subset_accuracy)
        );
        out
    }
}

impl OvrModel {
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ovr v1");
        let _ = writeln!(
            out,
            "threshold {}",
            textio::fmt_f64(self.decision_rule.threshold)
        );
        let _ = writeln!(
            out,
            "fallback_top1 {}",
            if self.decision_rule.fallback_top1 { 1 } else { 0 }
        );
        let _ = writeln!(out, "n_classes {}", self.classes.len());
        for (i, class) in self.classes.iter().enumerate() {
            let _ = writeln!(out, "class {i} {class}");
        }
        for (i, member) in self.members.iter().enumerate() {
            match member {
                BinaryMember::Kernel(m) => {
                    let _ = writeln!(out, "member {i} kernel");
                    out.push_str(&m.write_text());
                }
                BinaryMember::Linear(m) => {
                    let _ = writeln!(out, "member {i} linear");
                    out.push_str(&m.write_text());
                }
            }
        }
        let _ = writeln!(out, "end ovr");
        out
    }

    pub fn read_text(text: &str) -> Result<Self, MultilabelError> {
        let mut lines = Lines::new(text);
        Self::read_from(&mut lines)
    }

    /// Read from a line cursor positioned at the model header, for
    /// embedding in larger files.
    pub fn read_from(lines: &mut Lines<'_>) -> Result<Self, MultilabelError> {
        lines.expect_exact("ovr v1")?;
        let threshold: f64 = lines.tagged_value("threshold")?;
        let fallback: u8 = lines.tagged_value("fallback_top1")?;
        let n_classes: usize = lines.tagged_value("n_classes")?;
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
        let mut members = Vec::with_capacity(n_classes);
        for i in 0..n_classes {
            let rest = lines.expect_tagged("member")?;
            let mut it = rest.split_ascii_whitespace();
            let idx: usize = textio::parse_field(it.next(), "member index")?;
            if idx != i {
                return Err(TextIoError::Malformed(format!("member {idx} out of order")).into());
            }
            match it.next() {
                Some("kernel") => {
                    members.push(BinaryMember::Kernel(BinarySvmModel::read_from(lines)?))
                }
                Some("linear") => {
                    members.push(BinaryMember::Linear(LinearModel::read_from(lines)?))
                }
                other => {
                    return Err(
                        TextIoError::Malformed(format!("unknown member kind {other:?}")).into(),
                    )
                }
            }
        }
        lines.expect_exact("end ovr")?;
        Ok(OvrModel {
            classes,
            members,
            decision_rule: DecisionRule {
                threshold,
                fallback_top1: fallback != 0,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(labels: &[&str]) -> LabelSet {
        LabelSet::from_iter(labels.iter().copied())
    }

    fn catalog(labels: &[&str]) -> LabelCatalog {
        LabelCatalog {
            labels: labels.iter().map(|l| l.to_string()).collect(),
            counts: vec![1; labels.len()],
        }
    }

    #[test]
    fn evaluate_identity_case() {
        let truths = vec![set(&["a", "b"]), set(&["c"])];
        let report = evaluate(&truths, &truths.clone()).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.subset_accuracy, 1.0);
        assert_eq!(report.percentage_error, 0.0);
    }

    #[test]
    fn evaluate_partial_overlap() {
        let report = evaluate(&[set(&["a", "b"])], &[set(&["b", "c"])]).unwrap();
        assert_eq!(report.accuracy, 1.0 / 3.0);
        assert_eq!(report.precision, 0.5);
        assert_eq!(report.recall, 0.5);
        assert_eq!(report.subset_accuracy, 0.0);
    }

    #[test]
    fn percentage_error_matches_reported_best_accuracy() {
        // accuracy 0.5475 -> percentage error 45.25, exactly
        let mut truths = Vec::new();
        let mut preds = Vec::new();
        for i in 0..400 {
            truths.push(set(&["a"]));
            preds.push(if i < 219 { set(&["a"]) } else { set(&["b"]) });
        }
        let report = evaluate(&truths, &preds).unwrap();
        assert_eq!(report.accuracy, 0.5475);
        assert_eq!(report.percentage_error, 45.25);
    }

    #[test]
    fn evaluate_error_paths() {
        assert!(matches!(
            evaluate(&[set(&["a"])], &[]),
            Err(MultilabelError::LengthMismatch { .. })
        ));
        assert!(matches!(
            evaluate(&[], &[]),
            Err(MultilabelError::EmptyEvaluation)
        ));
        assert!(matches!(
            evaluate(&[set(&[])], &[set(&["a"])]),
            Err(MultilabelError::EmptyTruth { index: 0 })
        ));
        // empty prediction contributes zero precision, not NaN
        let report = evaluate(&[set(&["a"]), set(&["b"])], &[set(&[]), set(&["b"])]).unwrap();
        assert_eq!(report.precision, 0.5);
        assert!(report.accuracy.is_finite());
    }

    fn toy_ovr(values_rule: DecisionRule) -> OvrModel {
        // linear members with fixed weights so decision values are
        // easy to stage: f_c(x) = w_c · x + b_c
        OvrModel {
            classes: vec!["c0".into(), "c1".into(), "c2".into()],
            members: vec![
                BinaryMember::Linear(LinearModel {
                    weights: vec![3.0],
                    bias: -1.0,
                }),
                BinaryMember::Linear(LinearModel {
                    weights: vec![0.0],
                    bias: -1.0,
                }),
                BinaryMember::Linear(LinearModel {
                    weights: vec![1.5],
                    bias: -1.0,
                }),
            ],
            decision_rule: values_rule,
        }
    }

    #[test]
    fn predict_label_rules() {
        let model = toy_ovr(DecisionRule::default());
        // x = 1: values (+2, -1, +0.5) -> {c0, c2}
        assert_eq!(predict_labels(&[1.0], &model).unwrap(), set(&["c0", "c2"]));
        // x = -2/3: values (-3, -1, -2), all negative -> fallback to
        // the largest (c1)
        assert_eq!(
            predict_labels(&[-2.0 / 3.0], &model).unwrap(),
            set(&["c1"])
        );
        // fallback off -> empty set
        let no_fallback = toy_ovr(DecisionRule {
            threshold: 0.0,
            fallback_top1: false,
        });
        assert!(predict_labels(&[-2.0 / 3.0], &no_fallback)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn cs_label_rules() {
        let model = CsModel::read_text(
            "svm_cs v1\nn_classes 3\nn_features 1\nclass 0 a\nclass 1 b\nclass 2 c\n\
             w 0 3.0000000000000000e0\nw 1 1.0000000000000000e0\nw 2 3.0000000000000000e0\nend svm_cs\n",
        )
        .unwrap();
        // scores (3, 1, 3): both maxima at margin 0
        assert_eq!(
            predict_labels_cs(&[1.0], &model, 0.0).unwrap(),
            set(&["a", "c"])
        );
        // wide margin takes everything
        assert_eq!(
            predict_labels_cs(&[1.0], &model, f64::INFINITY)
                .unwrap()
                .len(),
            3
        );
        // distinct max is a singleton
        let dv = predict_labels_cs(&[-1.0], &model, 0.0).unwrap();
        assert_eq!(dv, set(&["b"]));
    }

    #[test]
    fn train_ovr_separable() {
        // class "x" along +e0, class "y" along +e1
        let mut rows = Vec::new();
        let mut sets = Vec::new();
        for i in 0..6 {
            let t = 1.0 + i as f64 * 0.1;
            rows.push(vec![t, 0.0]);
            sets.push(set(&["x"]));
            rows.push(vec![0.0, t]);
            sets.push(set(&["y"]));
        }
        let features = DenseMatrix::from_rows(&rows);
        let config = TrainConfig {
            c: 10.0,
            max_iterations: 20_000,
            tolerance: 1e-6,
            ..TrainConfig::default()
        };
        for trainer in [
            TrainerChoice::LinearDcd,
            TrainerChoice::Smo(KernelSpec::Linear),
        ] {
            let (model, diags) = train_ovr(
                &features,
                &sets,
                &catalog(&["x", "y"]),
                &trainer,
                &config,
                DecisionRule::default(),
            )
            .unwrap();
            assert_eq!(diags.len(), 2);
            for (row, truth) in rows.iter().zip(&sets) {
                let pred = predict_labels(row, &model).unwrap();
                assert_eq!(&pred, truth, "{trainer:?} on {row:?}");
            }
        }
    }

    #[test]
    fn train_ovr_rejects_one_sided_and_small_catalogs() {
        let features = DenseMatrix::from_rows(&[vec![0.0], vec![1.0]]);
        let sets = vec![set(&["a"]), set(&["a"])];
        let err = train_ovr(
            &features,
            &sets,
            &catalog(&["a", "b"]),
            &TrainerChoice::LinearDcd,
            &TrainConfig::default(),
            DecisionRule::default(),
        );
        match err {
            Err(MultilabelError::OneSidedClass { class, .. }) => {
                assert!(class == "a" || class == "b")
            }
            other => panic!("expected OneSidedClass, got {other:?}"),
        }
        let err = train_ovr(
            &features,
            &sets,
            &catalog(&["a"]),
            &TrainerChoice::LinearDcd,
            &TrainConfig::default(),
            DecisionRule::default(),
        );
        assert!(matches!(err, Err(MultilabelError::CatalogTooSmall)));
    }

    #[test]
    fn train_ovr_is_deterministic() {
        let rows = vec![
            vec![1.0, 0.2],
            vec![0.1, 1.4],
            vec![1.2, 0.1],
            vec![0.3, 0.9],
        ];
        let sets = vec![set(&["x"]), set(&["y"]), set(&["x"]), set(&["y"])];
        let features = DenseMatrix::from_rows(&rows);
        let config = TrainConfig::default().with_seed(17);
        let run = || {
            let (model, _) = train_ovr(
                &features,
                &sets,
                &catalog(&["x", "y"]),
                &TrainerChoice::LinearDcd,
                &config,
                DecisionRule::default(),
            )
            .unwrap();
            model.write_text()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn ovr_round_trip_reproduces_decisions() {
        let rows = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.1, 0.1],
            vec![0.2, 0.8],
        ];
        let sets = vec![set(&["x"]), set(&["y"]), set(&["x"]), set(&["y"])];
        let features = DenseMatrix::from_rows(&rows);
        let (model, _) = train_ovr(
            &features,
            &sets,
            &catalog(&["x", "y"]),
            &TrainerChoice::Smo(KernelSpec::rbf(0.5)),
            &TrainConfig::default(),
            DecisionRule::default(),
        )
        .unwrap();
        let back = OvrModel::read_text(&model.write_text()).unwrap();
        assert_eq!(model, back);
        for row in &rows {
            let a = decision_values(row, &model).unwrap();
            let b = decision_values(row, &back).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    proptest! {
        #[test]
        fn subset_accuracy_never_exceeds_jaccard(
            pairs in proptest::collection::vec(
                (proptest::collection::btree_set(0u8..5, 1..4),
                 proptest::collection::btree_set(0u8..5, 0..4)),
                1..12
            )
        ) {
            let truths: Vec<LabelSet> = pairs.iter()
                .map(|(t, _)| LabelSet::from_iter(t.iter().map(|x| format!("l{x}"))))
                .collect();
            let preds: Vec<LabelSet> = pairs.iter()
                .map(|(_, p)| LabelSet::from_iter(p.iter().map(|x| format!("l{x}"))))
                .collect();
            let report = evaluate(&truths, &preds).unwrap();
            prop_assert!(report.subset_accuracy <= report.accuracy + 1e-12);
            prop_assert!(report.accuracy <= 1.0 + 1e-12);
            prop_assert!(report.percentage_error >= -1e-12);
            prop_assert!(report.percentage_error <= 100.0 + 1e-12);
            if report.accuracy == 1.0 {
                prop_assert_eq!(report.subset_accuracy, 1.0);
                prop_assert_eq!(report.precision, 1.0);
                prop_assert_eq!(report.recall, 1.0);
            }
        }

        #[test]
        fn evaluate_is_permutation_invariant(
            pairs in proptest::collection::vec(
                (proptest::collection::btree_set(0u8..4, 1..3),
                 proptest::collection::btree_set(0u8..4, 1..3)),
                2..10
            ),
            seed in 0u64..1000
        ) {
            let truths: Vec<LabelSet> = pairs.iter()
                .map(|(t, _)| LabelSet::from_iter(t.iter().map(|x| format!("l{x}"))))
                .collect();
            let preds: Vec<LabelSet> = pairs.iter()
                .map(|(_, p)| LabelSet::from_iter(p.iter().map(|x| format!("l{x}"))))
                .collect();
            let base = evaluate(&truths, &preds).unwrap();
            // deterministic shuffle of the paired lists
            let mut idx: Vec<usize> = (0..truths.len()).collect();
            let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
            for i in (1..idx.len()).rev() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                idx.swap(i, (state as usize) % (i + 1));
            }
            let t2: Vec<LabelSet> = idx.iter().map(|&i| truths[i].clone()).collect();
            let p2: Vec<LabelSet> = idx.iter().map(|&i| preds[i].clone()).collect();
            let shuffled = evaluate(&t2, &p2).unwrap();
            prop_assert!((base.accuracy - shuffled.accuracy).abs() < 1e-12);
            prop_assert!((base.precision - shuffled.precision).abs() < 1e-12);
            prop_assert!((base.recall - shuffled.recall).abs() < 1e-12);
            prop_assert_eq!(base.subset_accuracy, shuffled.subset_accuracy);
        }

        #[test]
        fn singleton_sets_reduce_to_plain_accuracy(
            pairs in proptest::collection::vec((0u8..4, 0u8..4), 1..20)
        ) {
            let truths: Vec<LabelSet> = pairs.iter().map(|(t, _)| set(&[&format!("l{t}")])).collect();
            let preds: Vec<LabelSet> = pairs.iter().map(|(_, p)| set(&[&format!("l{p}")])).collect();
            let report = evaluate(&truths, &preds).unwrap();
            let plain = pairs.iter().filter(|(t, p)| t == p).count() as f64 / pairs.len() as f64;
            prop_assert_eq!(report.subset_accuracy, plain);
            prop_assert!((report.accuracy - plain).abs() < 1e-12);
            prop_assert!((report.precision - plain).abs() < 1e-12);
            prop_assert!((report.recall - plain).abs() < 1e-12);
        }
    }
}
