//! Multi-label question tagging toolkit.
//!
//! The pipeline runs in stages: dump ingestion ([`ingest`]), token
//! normalization ([`textpipe`]), tf-idf vectorization ([`vectorize`]),
//! truncated SVD projection into concept space ([`svd`]), SVM training
//! ([`svm`]), one-vs-rest multi-label prediction and evaluation
//! ([`multilabel`]), and a deterministic experiment harness
//! ([`experiment`]) that sweeps kernels, regularization and iteration
//! budgets and writes the result tables as CSV.

pub mod experiment;
pub mod ingest;
pub mod multilabel;
pub mod svd;
pub mod svm;
pub mod synthetic;
pub mod textio;
pub mod textpipe;
pub mod types;
pub mod vectorize;

pub use experiment::{ExperimentConfig, ExperimentError, RunRecord, Technique};
pub use ingest::{CleanPost, DumpFormat, IngestError, LabelCatalog, ParseMode, RawPost};
pub use multilabel::{DecisionRule, EvalReport, LabelSet, MultilabelError, OvrModel};
pub use svd::{SvdError, SvdModel};
pub use svm::{
    BinarySvmModel, CsModel, KernelSpec, LinearModel, Loss, SvmError, TrainConfig,
    TrainingDiagnostics,
};
pub use textpipe::{PipelineConfig, TextPipeError, TokenDoc};
pub use types::{DenseMatrix, TermDocMatrix};
pub use vectorize::{TfIdfModel, VectorizeError, Vocabulary};
