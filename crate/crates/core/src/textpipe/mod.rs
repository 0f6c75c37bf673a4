//! Token normalization: tokenization with a preserve list, stopword
//! removal, optional rule-based lemmatization and Porter stemming.

mod lemma;
mod porter;

pub use lemma::lemmatize;
pub use porter::porter_stem;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::ingest::CleanPost;

#[derive(Debug, Error)]
pub enum TextPipeError {
    #[error("preserve term `{0}` is also a stopword")]
    PreserveStopwordOverlap(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A document reduced to normalized tokens, tags carried through.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDoc {
    pub id: u64,
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

/// Tokenization settings. Preserve terms are matched against the raw
/// text ahead of splitting (longest match at token boundaries) and are
/// exempt from stemming and lemmatization.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    stopwords: HashSet<String>,
    preserve_ordered: Vec<String>,
    preserve_set: HashSet<String>,
    lemma_exceptions: HashMap<String, String>,
    pub enable_stemming: bool,
    pub enable_lemmatization: bool,
}

impl PipelineConfig {
    /// Build a config, checking that no preserve term is a stopword.
    pub fn new(
        stopwords: HashSet<String>,
        preserve_terms: HashSet<String>,
        lemma_exceptions: HashMap<String, String>,
        enable_stemming: bool,
        enable_lemmatization: bool,
    ) -> Result<Self, TextPipeError> {
        let preserve_set: HashSet<String> =
            preserve_terms.iter().map(|t| t.to_lowercase()).collect();
        if let Some(term) = preserve_set.iter().find(|t| stopwords.contains(*t)) {
            return Err(TextPipeError::PreserveStopwordOverlap(term.clone()));
        }
        // Longest first so the longest candidate wins at each position;
        // lexicographic second for a deterministic order.
        let mut preserve_ordered: Vec<String> = preserve_set.iter().cloned().collect();
        preserve_ordered.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Ok(PipelineConfig {
            stopwords,
            preserve_ordered,
            preserve_set,
            lemma_exceptions,
            enable_stemming,
            enable_lemmatization,
        })
    }

    /// The bundled defaults: SMART stopword list, the stock preserve
    /// terms, stemming on, lemmatization off.
    pub fn default_config() -> Self {
        PipelineConfig::new(
            default_stopwords(),
            default_preserve_terms(),
            default_lemma_exceptions(),
            true,
            false,
        )
        .expect("bundled lists are disjoint")
    }

    /// Empty stopword and preserve lists, all stages off.
    pub fn bare() -> Self {
        PipelineConfig::new(HashSet::new(), HashSet::new(), HashMap::new(), false, false).unwrap()
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Result<Self, TextPipeError> {
        if let Some(term) = self.preserve_set.iter().find(|t| stopwords.contains(*t)) {
            return Err(TextPipeError::PreserveStopwordOverlap(term.clone()));
        }
        self.stopwords = stopwords;
        Ok(self)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn is_preserved(&self, token: &str) -> bool {
        self.preserve_set.contains(token)
    }

    pub fn lemma_exceptions(&self) -> &HashMap<String, String> {
        &self.lemma_exceptions
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn preserve_terms(&self) -> &HashSet<String> {
        &self.preserve_set
    }
}

/// Parse a word-list file: one token per line, `#` comments ignored.
pub fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// Parse a lemma table file: `form<TAB>lemma` per line, `#` comments.
pub fn parse_lemma_table(text: &str) -> HashMap<String, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let (form, lemma) = l.split_once('\t')?;
            Some((form.trim().to_lowercase(), lemma.trim().to_lowercase()))
        })
        .collect()
}

pub fn default_stopwords() -> HashSet<String> {
    parse_word_list(include_str!("../../data/stopwords_smart.txt"))
}

pub fn default_preserve_terms() -> HashSet<String> {
    parse_word_list(include_str!("../../data/preserve_terms.txt"))
}

pub fn default_lemma_exceptions() -> HashMap<String, String> {
    parse_lemma_table(include_str!("../../data/lemma_exceptions.txt"))
}

/// Split text into lowercase tokens.
///
/// The text is scanned left to right. At every token boundary (start of
/// input or after a non-alphanumeric character) the longest matching
/// preserve term is taken as a whole token; everything else splits on
/// any character that is not a letter or digit. Pure-digit tokens and
/// single-character tokens (unless preserved) are dropped.
pub fn tokenize(text: &str, config: &PipelineConfig) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut pending = String::new();
    let mut at_boundary = true;
    let mut i = 0;
    while i < lower.len() {
        if at_boundary {
            if let Some(term) = longest_preserve_match(&lower[i..], &config.preserve_ordered) {
                flush(&mut pending, &mut tokens, config);
                tokens.push(term.to_string());
                i += term.len();
                // The character before the next position is the term's
                // last character; preserve terms end mid-word only when
                // they end alphanumeric.
                at_boundary = !term
                    .chars()
                    .next_back()
                    .is_some_and(|c| c.is_alphanumeric());
                continue;
            }
        }
        let c = lower[i..].chars().next().unwrap();
        if c.is_alphanumeric() {
            pending.push(c);
            at_boundary = false;
        } else {
            flush(&mut pending, &mut tokens, config);
            at_boundary = true;
        }
        i += c.len_utf8();
    }
    flush(&mut pending, &mut tokens, config);
    tokens
}

fn longest_preserve_match<'a>(rest: &str, ordered: &'a [String]) -> Option<&'a str> {
    ordered
        .iter()
        .find(|term| rest.starts_with(term.as_str()))
        .map(String::as_str)
}

fn flush(pending: &mut String, tokens: &mut Vec<String>, config: &PipelineConfig) {
    if pending.is_empty() {
        return;
    }
    let token = std::mem::take(pending);
    if token.bytes().all(|b| b.is_ascii_digit()) {
        return;
    }
    if token.chars().count() == 1 && !config.is_preserved(&token) {
        return;
    }
    tokens.push(token);
}

/// Drop stopwords, preserving token order.
pub fn remove_stopwords(tokens: Vec<String>, config: &PipelineConfig) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !config.is_stopword(t))
        .collect()
}

/// Full normalization: tokenize, remove stopwords, then lemmatize and
/// stem when enabled (lemmatization runs before stemming). Preserve
/// terms skip both reduction stages.
pub fn run_pipeline(post: &CleanPost, config: &PipelineConfig) -> TokenDoc {
    let tokens = tokenize(&post.text, config);
    let tokens = remove_stopwords(tokens, config);
    let tokens = tokens
        .into_iter()
        .map(|t| {
            if config.is_preserved(&t) {
                return t;
            }
            let t = if config.enable_lemmatization {
                lemmatize(&t, &config.lemma_exceptions)
            } else {
                t
            };
            if config.enable_stemming {
                porter_stem(&t)
            } else {
                t
            }
        })
        .collect();
    TokenDoc {
        id: post.id,
        tokens,
        tags: post.tags.clone(),
    }
}
