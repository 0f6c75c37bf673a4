//! tf-idf vectorization: vocabulary fitting with document-frequency
//! bounds, augmented term frequency, and sparse matrix assembly.
//!
//! Weights use the augmented tf form `0.5 + 0.5 * f / max_f` for terms
//! present in a document (absent terms weigh 0, keeping rows sparse)
//! and `idf = ln(N / df)` with the natural logarithm.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::textio::{self, Lines, TextIoError};
use crate::textpipe::TokenDoc;
use crate::types::{SparseRow, TermDocMatrix};

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(
        "vocabulary is empty after filtering (min_doc_freq={min_doc_freq}, \
         max_doc_ratio={max_doc_ratio})"
    )]
    EmptyVocabulary {
        min_doc_freq: usize,
        max_doc_ratio: f64,
    },
    #[error("term frequency is undefined for an empty document")]
    EmptyDocument,
    #[error("model parse error: {0}")]
    Parse(#[from] TextIoError),
}

/// Document-frequency bounds used to filter the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterPolicy {
    pub min_doc_freq: usize,
    /// Terms appearing in more than this fraction of documents are
    /// dropped.
    pub max_doc_ratio: f64,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            min_doc_freq: 2,
            max_doc_ratio: 0.95,
        }
    }
}

impl FilterPolicy {
    /// Keep everything; used by small hand-built corpora in tests.
    pub fn keep_all() -> Self {
        FilterPolicy {
            min_doc_freq: 1,
            max_doc_ratio: 1.0,
        }
    }
}

/// Retained terms with dense column indices in first-occurrence order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    term_to_index: HashMap<String, u32>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.term_to_index.get(term).copied()
    }

    pub fn term(&self, index: u32) -> &str {
        &self.terms[index as usize]
    }

    pub fn doc_freq_of(&self, index: u32) -> usize {
        self.doc_freq[index as usize]
    }
}

/// Fitted tf-idf weights: vocabulary plus per-term idf.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    policy: FilterPolicy,
}

impl TfIdfModel {
    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self, index: u32) -> f64 {
        self.idf[index as usize]
    }

    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn policy(&self) -> FilterPolicy {
        self.policy
    }
}

/// Fit a model: vocabulary = terms with `doc_freq >= min_doc_freq` and
/// `doc_freq / N <= max_doc_ratio`, indices in first-occurrence order,
/// `idf = ln(N / df)`.
pub fn fit(corpus: &[TokenDoc], policy: FilterPolicy) -> Result<TfIdfModel, VectorizeError> {
    if corpus.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let n_docs = corpus.len();
    let mut df: HashMap<&str, usize> = HashMap::new();
    let mut first_occurrence: Vec<&str> = Vec::new();
    for doc in corpus {
        let mut seen_in_doc: HashSet<&str> = HashSet::new();
        for token in &doc.tokens {
            if !df.contains_key(token.as_str()) {
                first_occurrence.push(token);
                df.insert(token, 0);
            }
            if seen_in_doc.insert(token) {
                *df.get_mut(token.as_str()).unwrap() += 1;
            }
        }
    }
    let mut terms = Vec::new();
    let mut doc_freq = Vec::new();
    let mut idf = Vec::new();
    let mut term_to_index = HashMap::new();
    for term in first_occurrence {
        let d = df[term];
        if d < policy.min_doc_freq || (d as f64) / (n_docs as f64) > policy.max_doc_ratio {
            continue;
        }
        term_to_index.insert(term.to_string(), terms.len() as u32);
        terms.push(term.to_string());
        doc_freq.push(d);
        idf.push((n_docs as f64 / d as f64).ln());
    }
    if terms.is_empty() {
        return Err(VectorizeError::EmptyVocabulary {
            min_doc_freq: policy.min_doc_freq,
            max_doc_ratio: policy.max_doc_ratio,
        });
    }
    Ok(TfIdfModel {
        vocabulary: Vocabulary {
            terms,
            term_to_index,
            doc_freq,
            n_docs,
        },
        idf,
        policy,
    })
}

/// Augmented term frequency of `term` within `doc`: 0 when absent,
/// otherwise `0.5 + 0.5 * f / max_f`.
pub fn term_frequency(term: &str, doc: &TokenDoc) -> Result<f64, VectorizeError> {
    if doc.tokens.is_empty() {
        return Err(VectorizeError::EmptyDocument);
    }
    let mut count = 0usize;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &doc.tokens {
        *counts.entry(t).or_insert(0) += 1;
        if t == term {
            count += 1;
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    let max_f = *counts.values().max().expect("nonempty");
    Ok(0.5 + 0.5 * (count as f64) / (max_f as f64))
}

/// tf-idf row for one document. Out-of-vocabulary tokens are ignored
/// and explicit zeros (idf 0) are dropped; an empty document maps to
/// the zero row.
pub fn transform(doc: &TokenDoc, model: &TfIdfModel) -> SparseRow {
    if doc.tokens.is_empty() {
        return SparseRow::new();
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &doc.tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    let max_f = *counts.values().max().expect("nonempty") as f64;
    let mut row: SparseRow = counts
        .into_iter()
        .filter_map(|(term, count)| {
            let col = model.vocabulary.index_of(term)?;
            let tf = 0.5 + 0.5 * (count as f64) / max_f;
            let weight = tf * model.idf(col);
            (weight != 0.0).then_some((col, weight))
        })
        .collect();
    row.sort_unstable_by_key(|&(col, _)| col);
    row
}

/// Stack per-document rows into the document-term matrix, one row per
/// corpus document in order.
pub fn build_matrix(corpus: &[TokenDoc], model: &TfIdfModel) -> TermDocMatrix {
    let rows: Vec<SparseRow> = corpus.par_iter().map(|doc| transform(doc, model)).collect();
    TermDocMatrix::from_rows(model.n_terms(), &rows)
}

impl TfIdfModel {
    /// Structured-text export with terms, indices, doc counts, idf and
    /// the filter policy.
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tfidf v1");
        let _ = writeln!(out, "n_docs {}", self.vocabulary.n_docs);
        let _ = writeln!(
            out,
            "policy {} {}",
            self.policy.min_doc_freq,
            textio::fmt_f64(self.policy.max_doc_ratio)
        );
        let _ = writeln!(out, "n_terms {}", self.vocabulary.len());
        for (i, term) in self.vocabulary.terms.iter().enumerate() {
            let _ = writeln!(
                out,
                "term {} {} {} {}",
                i,
                self.vocabulary.doc_freq[i],
                textio::fmt_f64(self.idf[i]),
                term
            );
        }
        let _ = writeln!(out, "end tfidf");
        out
    }

    pub fn read_text(text: &str) -> Result<Self, VectorizeError> {
        let mut lines = Lines::new(text);
        Self::read_from(&mut lines)
    }

    /// Read from a line cursor positioned at the model header, for
    /// embedding in larger files.
    pub fn read_from(lines: &mut Lines<'_>) -> Result<Self, VectorizeError> {
        lines.expect_exact("tfidf v1")?;
        let n_docs: usize = lines.tagged_value("n_docs")?;
        let policy_line = lines.expect_tagged("policy")?;
        let mut it = policy_line.split_ascii_whitespace();
        let min_doc_freq: usize = textio::parse_field(it.next(), "min_doc_freq")?;
        let max_doc_ratio: f64 = textio::parse_field(it.next(), "max_doc_ratio")?;
        let n_terms: usize = lines.tagged_value("n_terms")?;
        let mut terms = Vec::with_capacity(n_terms);
        let mut doc_freq = Vec::with_capacity(n_terms);
        let mut idf = Vec::with_capacity(n_terms);
        let mut term_to_index = HashMap::with_capacity(n_terms);
        for _ in 0..n_terms {
            let rest = lines.expect_tagged("term")?;
            let mut it = rest.splitn(4, ' ');
            let index: usize = textio::parse_field(it.next(), "index")?;
            let df: usize = textio::parse_field(it.next(), "doc_freq")?;
            let w: f64 = textio::parse_field(it.next(), "idf")?;
            let term = it
                .next()
                .ok_or_else(|| TextIoError::Malformed("missing term text".into()))?;
            if index != terms.len() {
                return Err(TextIoError::Malformed(format!("term index {index} out of order")).into());
            }
            term_to_index.insert(term.to_string(), index as u32);
            terms.push(term.to_string());
            doc_freq.push(df);
            idf.push(w);
        }
        lines.expect_exact("end tfidf")?;
        Ok(TfIdfModel {
            vocabulary: Vocabulary {
                terms,
                term_to_index,
                doc_freq,
                n_docs,
            },
            idf,
            policy: FilterPolicy {
                min_doc_freq,
                max_doc_ratio,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: u64, tokens: &[&str]) -> TokenDoc {
        TokenDoc {
            id,
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            tags: vec![],
        }
    }

    #[test]
    fn idf_values() {
        let corpus = vec![
            doc(1, &["sort", "x"]),
            doc(2, &["x"]),
            doc(3, &["x"]),
            doc(4, &["x"]),
        ];
        let model = fit(&corpus, FilterPolicy::keep_all()).unwrap();
        let sort = model.vocabulary().index_of("sort").unwrap();
        assert_eq!(model.idf(sort), 4.0f64.ln());
        // a term present in every document has idf exactly zero
        let x = model.vocabulary().index_of("x").unwrap();
        assert_eq!(model.idf(x), 0.0);
    }

    #[test]
    fn min_doc_freq_filters() {
        let corpus = vec![doc(1, &["rare", "common"]), doc(2, &["common"])];
        let policy = FilterPolicy {
            min_doc_freq: 2,
            max_doc_ratio: 1.0,
        };
        let model = fit(&corpus, policy).unwrap();
        assert!(model.vocabulary().index_of("rare").is_none());
        assert!(model.vocabulary().index_of("common").is_some());
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let corpus = vec![doc(1, &["a"]), doc(2, &["b"])];
        let policy = FilterPolicy {
            min_doc_freq: 3,
            max_doc_ratio: 1.0,
        };
        match fit(&corpus, policy) {
            Err(VectorizeError::EmptyVocabulary { min_doc_freq, .. }) => {
                assert_eq!(min_doc_freq, 3)
            }
            other => panic!("expected EmptyVocabulary, got {other:?}"),
        }
    }

    #[test]
    fn term_frequency_examples() {
        let d = doc(1, &["a", "a", "a", "b"]);
        assert_eq!(term_frequency("a", &d).unwrap(), 1.0);
        assert_eq!(term_frequency("b", &d).unwrap(), 0.5 + 0.5 / 3.0);
        assert_eq!(term_frequency("zz", &d).unwrap(), 0.0);
        let empty = doc(2, &[]);
        assert!(matches!(
            term_frequency("a", &empty),
            Err(VectorizeError::EmptyDocument)
        ));
    }

    #[test]
    fn transform_examples() {
        // idf(a) = 0 (in both docs), idf(b) = ln 2
        let corpus = vec![doc(1, &["a", "b"]), doc(2, &["a"])];
        let model = fit(&corpus, FilterPolicy::keep_all()).unwrap();
        let row = transform(&doc(3, &["a", "a", "b"]), &model);
        let b = model.vocabulary().index_of("b").unwrap();
        assert_eq!(row, vec![(b, 0.75 * 2.0f64.ln())]);

        assert!(transform(&doc(4, &["zz", "qq"]), &model).is_empty());

        let row = transform(&doc(5, &["b", "b", "b"]), &model);
        assert_eq!(row, vec![(b, 1.0 * 2.0f64.ln())]);
    }

    #[test]
    fn build_matrix_stacks_rows() {
        let corpus = vec![doc(1, &["a", "b"]), doc(2, &["a"])];
        let model = fit(&corpus, FilterPolicy::keep_all()).unwrap();
        let empty: Vec<TokenDoc> = vec![];
        assert_eq!(build_matrix(&empty, &model).n_rows(), 0);

        let single = vec![doc(3, &["a", "b"])];
        let m = build_matrix(&single, &model);
        assert_eq!(m.n_rows(), 1);
        let (cols, vals) = m.row(0);
        let expected = transform(&single[0], &model);
        assert_eq!(cols.len(), expected.len());
        assert_eq!(vals, expected.iter().map(|e| e.1).collect::<Vec<_>>());
    }

    #[test]
    fn first_occurrence_column_order() {
        let corpus = vec![doc(1, &["beta", "alpha"]), doc(2, &["gamma", "beta", "alpha"])];
        let model = fit(&corpus, FilterPolicy::keep_all()).unwrap();
        assert_eq!(model.vocabulary().index_of("beta"), Some(0));
        assert_eq!(model.vocabulary().index_of("alpha"), Some(1));
        assert_eq!(model.vocabulary().index_of("gamma"), Some(2));
    }

    #[test]
    fn model_round_trip() {
        let corpus = vec![doc(1, &["a", "b", "c"]), doc(2, &["a", "b"]), doc(3, &["a"])];
        let model = fit(&corpus, FilterPolicy::default()).unwrap();
        let back = TfIdfModel::read_text(&model.write_text()).unwrap();
        assert_eq!(model, back);
        assert_eq!(model.write_text(), back.write_text());
    }

    proptest! {
        #[test]
        fn tf_range_invariant(tokens in proptest::collection::vec("[a-c]", 1..12), term in "[a-d]") {
            let d = doc(1, &tokens.iter().map(String::as_str).collect::<Vec<_>>());
            let tf = term_frequency(&term, &d).unwrap();
            let mut counts = HashMap::new();
            for t in &tokens {
                *counts.entry(t.as_str()).or_insert(0usize) += 1;
            }
            let max_f = *counts.values().max().unwrap();
            if tf != 0.0 {
                prop_assert!(tf >= 0.5 + 0.5 / max_f as f64 - 1e-15);
                prop_assert!(tf <= 1.0);
            }
            // the maximal-count term always has tf exactly 1.0
            let (top, _) = counts.iter().max_by_key(|(_, c)| **c).unwrap();
            prop_assert_eq!(term_frequency(top, &d).unwrap(), 1.0);
        }

        #[test]
        fn idf_non_increasing_in_df(n_a in 1usize..6, n_b in 1usize..6) {
            // df(a) = n_a, df(b) = n_b over 6 docs
            let corpus: Vec<TokenDoc> = (0..6).map(|i| {
                let mut tokens = vec!["pad"];
                if i < n_a { tokens.push("a"); }
                if i < n_b { tokens.push("b"); }
                doc(i as u64 + 1, &tokens)
            }).collect();
            let model = fit(&corpus, FilterPolicy::keep_all()).unwrap();
            let ia = model.vocabulary().index_of("a").unwrap();
            let ib = model.vocabulary().index_of("b").unwrap();
            if n_a <= n_b {
                prop_assert!(model.idf(ia) >= model.idf(ib));
            }
        }

        #[test]
        fn transform_weights_finite_nonnegative(
            docs in proptest::collection::vec(proptest::collection::vec("[a-e]", 0..10), 1..8)
        ) {
            let corpus: Vec<TokenDoc> = docs.iter().enumerate().map(|(i, toks)| {
                doc(i as u64 + 1, &toks.iter().map(String::as_str).collect::<Vec<_>>())
            }).collect();
            if let Ok(model) = fit(&corpus, FilterPolicy::keep_all()) {
                for d in &corpus {
                    for (_, w) in transform(d, &model) {
                        prop_assert!(w.is_finite());
                        prop_assert!(w >= 0.0);
                    }
                }
            }
        }

        #[test]
        fn fit_is_deterministic(
            docs in proptest::collection::vec(proptest::collection::vec("[a-e]", 0..8), 1..6)
        ) {
            let corpus: Vec<TokenDoc> = docs.iter().enumerate().map(|(i, toks)| {
                doc(i as u64 + 1, &toks.iter().map(String::as_str).collect::<Vec<_>>())
            }).collect();
            if let Ok(m1) = fit(&corpus, FilterPolicy::keep_all()) {
                let m2 = fit(&corpus, FilterPolicy::keep_all()).unwrap();
                prop_assert_eq!(m1.write_text(), m2.write_text());
            }
        }
    }
}
