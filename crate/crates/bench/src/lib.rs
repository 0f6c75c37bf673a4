//! Benchmark fixtures shared by the criterion targets.

use sxtag_core::experiment::{featurize, fit_projection, FittedProjection};
use sxtag_core::ingest;
use sxtag_core::multilabel::LabelSet;
use sxtag_core::synthetic::{self, SyntheticOptions};
use sxtag_core::textpipe::{self, PipelineConfig, TokenDoc};
use sxtag_core::types::DenseMatrix;
use sxtag_core::vectorize::FilterPolicy;

pub struct Fixture {
    pub docs: Vec<TokenDoc>,
    pub label_sets: Vec<LabelSet>,
    pub catalog: ingest::LabelCatalog,
    pub projection: FittedProjection,
    pub features: DenseMatrix,
}

/// Tokenized synthetic corpus plus fitted projection and features.
pub fn fixture(n_posts: usize, n_tags: usize) -> Fixture {
    let posts = synthetic::generate(&SyntheticOptions {
        n_posts,
        n_tags,
        seed: 1234,
    });
    let clean = ingest::strip_all(&posts);
    let (catalog, clean) = ingest::select_labels(&clean, n_tags).unwrap();
    let pipeline = PipelineConfig::default_config();
    let docs: Vec<TokenDoc> = clean
        .iter()
        .map(|p| textpipe::run_pipeline(p, &pipeline))
        .collect();
    let label_sets: Vec<LabelSet> = docs
        .iter()
        .map(|d| LabelSet::from_iter(d.tags.iter().cloned()))
        .collect();
    let projection = fit_projection(&docs, FilterPolicy::default(), 0.9, 200, 1).unwrap();
    let features = featurize(&docs, &projection);
    Fixture {
        docs,
        label_sets,
        catalog,
        projection,
        features,
    }
}
