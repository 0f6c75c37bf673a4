//! Deterministic experiment harness: dataset split, k-fold cross
//! validation, grid execution over kernels / C / iteration budgets /
//! techniques, and CSV table emission.
//!
//! The idf weights and the SVD basis are always fitted on training
//! documents only and applied to held-out documents, both for the main
//! train/test split and inside every cross-validation fold.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{self, CleanPost, IngestError, LabelCatalog, ParseMode};
use crate::multilabel::{
    self, DecisionRule, EvalReport, LabelSet, MultilabelError, TrainerChoice,
};
use crate::svd::{self, SvdError, SvdModel};
use crate::svm::{
    train_crammer_singer, KernelSpec, Loss, SvmError, TrainConfig,
};
use crate::textio::{self, TextIoError};
use crate::textpipe::{self, PipelineConfig, TextPipeError, TokenDoc};
use crate::types::DenseMatrix;
use crate::vectorize::{self, FilterPolicy, TfIdfModel, VectorizeError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    TextPipe(#[from] TextPipeError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error(transparent)]
    Svd(#[from] SvdError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Multilabel(#[from] MultilabelError),
    #[error("split of {n} at ratio {ratio} leaves one side empty")]
    DegenerateSplit { n: usize, ratio: f64 },
    #[error("cannot make {k} folds from {n} items")]
    BadKfold { n: usize, k: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("record parse error: {0}")]
    Parse(#[from] TextIoError),
}

/// Multi-label training technique for the linear table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Technique {
    Ovr,
    CrammerSinger,
}

impl Technique {
    pub fn label(&self) -> &'static str {
        match self {
            Technique::Ovr => "ovr",
            Technique::CrammerSinger => "crammer_singer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ovr" => Some(Technique::Ovr),
            "crammer_singer" | "cs" => Some(Technique::CrammerSinger),
            _ => None,
        }
    }
}

/// Kernel choice before the feature dimension is known; gamma defaults
/// to `1 / n_features` at training time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    Rbf,
    Poly(u32),
    Sigmoid,
}

impl KernelKind {
    pub fn to_spec(self, n_features: usize) -> KernelSpec {
        let gamma = KernelSpec::default_gamma(n_features);
        match self {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Rbf => KernelSpec::Rbf { gamma },
            KernelKind::Poly(degree) => KernelSpec::Polynomial {
                gamma,
                degree,
                coef0: 0.0,
            },
            KernelKind::Sigmoid => KernelSpec::Sigmoid { gamma, coef0: 0.0 },
        }
    }

    pub fn label(&self) -> String {
        match self {
            KernelKind::Linear => "linear".into(),
            KernelKind::Rbf => "rbf".into(),
            KernelKind::Poly(d) => format!("poly{d}"),
            KernelKind::Sigmoid => "sigmoid".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(KernelKind::Linear),
            "rbf" => Some(KernelKind::Rbf),
            "sigmoid" => Some(KernelKind::Sigmoid),
            _ => {
                let d = s.strip_prefix("poly")?.parse().ok()?;
                Some(KernelKind::Poly(d))
            }
        }
    }
}

/// Where the corpus comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSpec {
    PostsXml(PathBuf),
    Lines { posts: PathBuf, tags: PathBuf },
}

/// Full experiment configuration. Defaults mirror the stock protocol:
/// 80/20 split, 5 folds, 90% retained variance, top-10 tags.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub input: InputSpec,
    pub n_posts_cap: Option<usize>,
    pub k_top_tags: usize,
    pub split_ratio: f64,
    pub kfold_k: usize,
    pub variance_target: f64,
    pub svd_rank_cap: usize,
    pub kernel_grid: Vec<KernelKind>,
    pub c_grid: Vec<f64>,
    pub iteration_grid: Vec<usize>,
    pub loss_grid: Vec<Loss>,
    pub technique_grid: Vec<Technique>,
    pub seed: u64,
    pub strict_parse: bool,
    pub enable_stemming: bool,
    pub enable_lemmatization: bool,
    pub stopword_file: Option<PathBuf>,
    pub preserve_file: Option<PathBuf>,
    pub lemma_file: Option<PathBuf>,
    pub min_doc_freq: usize,
    pub max_doc_ratio: f64,
    pub tolerance: f64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(input: InputSpec, output_dir: PathBuf) -> Self {
        ExperimentConfig {
            input,
            n_posts_cap: None,
            k_top_tags: 10,
            split_ratio: 0.8,
            kfold_k: 5,
            variance_target: 0.9,
            svd_rank_cap: 3000,
            kernel_grid: vec![KernelKind::Rbf, KernelKind::Linear],
            c_grid: vec![1000.0, 0.001],
            iteration_grid: vec![200, 1000],
            loss_grid: vec![Loss::Hinge, Loss::SquaredHinge],
            technique_grid: vec![Technique::Ovr, Technique::CrammerSinger],
            seed: 7,
            strict_parse: false,
            enable_stemming: true,
            enable_lemmatization: false,
            stopword_file: None,
            preserve_file: None,
            lemma_file: None,
            min_doc_freq: 2,
            max_doc_ratio: 0.95,
            tolerance: 1e-3,
            output_dir,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(ExperimentError::Config(
                "split_ratio must lie in (0, 1)".into(),
            ));
        }
        if self.kfold_k < 2 {
            return Err(ExperimentError::Config("kfold_k must be at least 2".into()));
        }
        if self.kernel_grid.is_empty() && self.technique_grid.is_empty() {
            return Err(ExperimentError::Config("all grids are empty".into()));
        }
        if !self.kernel_grid.is_empty() && (self.c_grid.is_empty() || self.iteration_grid.is_empty())
        {
            return Err(ExperimentError::Config(
                "kernel sweep needs nonempty c and iteration grids".into(),
            ));
        }
        if !self.technique_grid.is_empty()
            && (self.loss_grid.is_empty() || self.c_grid.is_empty() || self.iteration_grid.is_empty())
        {
            return Err(ExperimentError::Config(
                "technique sweep needs nonempty loss, c and iteration grids".into(),
            ));
        }
        Ok(())
    }

    /// Canonical `key = value` echo; also the config-file format.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        match &self.input {
            InputSpec::PostsXml(p) => {
                let _ = writeln!(out, "input_xml = {}", p.display());
            }
            InputSpec::Lines { posts, tags } => {
                let _ = writeln!(out, "input_posts = {}", posts.display());
                let _ = writeln!(out, "input_tags = {}", tags.display());
            }
        }
        if let Some(cap) = self.n_posts_cap {
            let _ = writeln!(out, "n_posts = {cap}");
        }
        let _ = writeln!(out, "k_top_tags = {}", self.k_top_tags);
        let _ = writeln!(out, "split_ratio = {}", self.split_ratio);
        let _ = writeln!(out, "kfold_k = {}", self.kfold_k);
        let _ = writeln!(out, "variance_target = {}", self.variance_target);
        let _ = writeln!(out, "svd_rank_cap = {}", self.svd_rank_cap);
        let kernels: Vec<String> = self.kernel_grid.iter().map(|k| k.label()).collect();
        let _ = writeln!(out, "kernels = {}", kernels.join(","));
        let cs: Vec<String> = self.c_grid.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "c = {}", cs.join(","));
        let iters: Vec<String> = self.iteration_grid.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "iterations = {}", iters.join(","));
        let losses: Vec<&str> = self.loss_grid.iter().map(|l| l.label()).collect();
        let _ = writeln!(out, "losses = {}", losses.join(","));
        let techniques: Vec<&str> = self.technique_grid.iter().map(|t| t.label()).collect();
        let _ = writeln!(out, "techniques = {}", techniques.join(","));
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "strict = {}", self.strict_parse);
        let _ = writeln!(out, "stemming = {}", self.enable_stemming);
        let _ = writeln!(out, "lemmatization = {}", self.enable_lemmatization);
        if let Some(p) = &self.stopword_file {
            let _ = writeln!(out, "stopword_file = {}", p.display());
        }
        if let Some(p) = &self.preserve_file {
            let _ = writeln!(out, "preserve_file = {}", p.display());
        }
        if let Some(p) = &self.lemma_file {
            let _ = writeln!(out, "lemma_file = {}", p.display());
        }
        let _ = writeln!(out, "min_doc_freq = {}", self.min_doc_freq);
        let _ = writeln!(out, "max_doc_ratio = {}", self.max_doc_ratio);
        let _ = writeln!(out, "tolerance = {}", self.tolerance);
        out
    }
}

// ---------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------

/// Seeded uniform shuffle; the first `⌊ratio·n⌋` shuffled indices are
/// the training set. Both sides are returned sorted ascending.
pub fn split(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), ExperimentError> {
    assert!(n >= 2, "need at least two items to split");
    assert!(ratio > 0.0 && ratio < 1.0, "ratio must lie in (0, 1)");
    let n_train = (ratio * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(ExperimentError::DegenerateSplit { n, ratio });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut train = indices[..n_train].to_vec();
    let mut test = indices[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// One `(train, validation)` index pair per fold, each side sorted.
pub type FoldIndices = (Vec<usize>, Vec<usize>);

/// Seeded shuffle followed by `k` contiguous validation folds with
/// sizes differing by at most one. Returns `(train, validation)` index
/// pairs, each side sorted ascending.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<FoldIndices>, ExperimentError> {
    if k < 2 || k > n {
        return Err(ExperimentError::BadKfold { n, k });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let mut validation = indices[start..start + size].to_vec();
        let mut train: Vec<usize> = indices[..start]
            .iter()
            .chain(&indices[start + size..])
            .copied()
            .collect();
        validation.sort_unstable();
        train.sort_unstable();
        folds.push((train, validation));
        start += size;
    }
    Ok(folds)
}

// ---------------------------------------------------------------------
// Preprocessing shared by the main split and the CV folds
// ---------------------------------------------------------------------

/// tf-idf and SVD models fitted on one training subset.
#[derive(Debug, Clone)]
pub struct FittedProjection {
    pub tfidf: TfIdfModel,
    pub svd: SvdModel,
}

/// Fit tf-idf and the truncated SVD on training documents only, then
/// select the rank holding `variance_target` of the oversampled
/// spectrum.
pub fn fit_projection(
    train_docs: &[TokenDoc],
    policy: FilterPolicy,
    variance_target: f64,
    rank_cap: usize,
    seed: u64,
) -> Result<FittedProjection, ExperimentError> {
    let tfidf = vectorize::fit(train_docs, policy)?;
    let matrix = vectorize::build_matrix(train_docs, &tfidf);
    let max_rank = matrix
        .n_rows()
        .min(matrix.n_cols())
        .min(rank_cap.max(1));
    let oversampled = svd::truncated_svd(&matrix, max_rank, seed)?;
    let k = svd::choose_rank(oversampled.singular_values(), variance_target)?;
    Ok(FittedProjection {
        tfidf,
        svd: oversampled.truncate(k),
    })
}

/// Project documents into concept space with fitted models.
pub fn featurize(docs: &[TokenDoc], projection: &FittedProjection) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = docs
        .par_iter()
        .map(|doc| {
            let row = vectorize::transform(doc, &projection.tfidf);
            svd::project(&row, projection.tfidf.n_terms(), &projection.svd)
                .expect("transform row matches fitted vocabulary")
        })
        .collect();
    DenseMatrix::from_rows(&rows)
}

// ---------------------------------------------------------------------
// Grid cells
// ---------------------------------------------------------------------

/// One grid point. Kernel sweeps train one-vs-rest kernel SVCs over
/// `kernel × C × iterations`; technique sweeps train the linear paths
/// over `technique × loss` at the softest C and the largest iteration
/// budget in the grids.
#[derive(Debug, Clone, PartialEq)]
pub enum CellKind {
    KernelSweep { kernel: KernelKind },
    LinearTechnique { technique: Technique, loss: Loss },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellKey {
    pub kind: CellKind,
    pub c: f64,
    pub iterations: usize,
}

impl CellKey {
    fn describe(&self) -> String {
        match &self.kind {
            CellKind::KernelSweep { kernel } => format!(
                "technique=svc kernel={} loss=- c={} iterations={}",
                kernel.label(),
                self.c,
                self.iterations
            ),
            CellKind::LinearTechnique { technique, loss } => format!(
                "technique={} kernel=linear loss={} c={} iterations={}",
                technique.label(),
                loss.label(),
                self.c,
                self.iterations
            ),
        }
    }
}

/// Metrics of one successfully-trained cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    /// Percentage errors on the train and test side of the main split.
    pub train_error: f64,
    pub test_error: f64,
    pub train_report: EvalReport,
    pub test_report: EvalReport,
    pub cv_fold_accuracy: Vec<f64>,
    pub cv_mean_accuracy: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub key: CellKey,
    pub outcome: Result<CellMetrics, String>,
    /// Not serialized: kept out of the record files so identical runs
    /// produce identical bytes.
    pub wall_time: Duration,
}

/// Everything one experiment run produced.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config_echo: String,
    pub catalog: LabelCatalog,
    pub n_documents: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub vocabulary_size: usize,
    pub svd_rank: usize,
    pub retained_variance: f64,
    pub cells: Vec<CellResult>,
    pub notes: Vec<String>,
    /// Paths written by `emit_tables`. Like wall times, these are kept
    /// out of the serialized record (output directories vary between
    /// otherwise identical runs).
    pub artifacts: Vec<PathBuf>,
}

fn enumerate_cells(config: &ExperimentConfig) -> Vec<CellKey> {
    let mut cells = Vec::new();
    for &kernel in &config.kernel_grid {
        for &c in &config.c_grid {
            for &iterations in &config.iteration_grid {
                cells.push(CellKey {
                    kind: CellKind::KernelSweep { kernel },
                    c,
                    iterations,
                });
            }
        }
    }
    if !config.technique_grid.is_empty() {
        // the linear table runs at the softest C and the largest budget
        let c = config
            .c_grid
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let iterations = *config.iteration_grid.iter().max().unwrap_or(&10_000);
        for &technique in &config.technique_grid {
            for &loss in &config.loss_grid {
                cells.push(CellKey {
                    kind: CellKind::LinearTechnique { technique, loss },
                    c,
                    iterations,
                });
            }
        }
    }
    cells
}

// ---------------------------------------------------------------------
// Experiment execution
// ---------------------------------------------------------------------

fn load_posts(config: &ExperimentConfig) -> Result<Vec<ingest::RawPost>, ExperimentError> {
    let mode = if config.strict_parse {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    };
    let report = match &config.input {
        InputSpec::PostsXml(path) => {
            let file = fs::File::open(path)?;
            ingest::parse_posts_xml(BufReader::new(file), mode)?
        }
        InputSpec::Lines { posts, tags } => {
            let posts = fs::File::open(posts)?;
            let tags = fs::File::open(tags)?;
            ingest::parse_posts_lines(BufReader::new(posts), BufReader::new(tags), mode)?
        }
    };
    Ok(report.posts)
}

/// Load the pipeline configuration for an experiment.
pub fn pipeline_config(config: &ExperimentConfig) -> Result<PipelineConfig, ExperimentError> {
    let stopwords = match &config.stopword_file {
        Some(path) => textpipe::parse_word_list(&fs::read_to_string(path)?),
        None => textpipe::default_stopwords(),
    };
    let preserve = match &config.preserve_file {
        Some(path) => textpipe::parse_word_list(&fs::read_to_string(path)?),
        None => textpipe::default_preserve_terms(),
    };
    let lemmas = match &config.lemma_file {
        Some(path) => textpipe::parse_lemma_table(&fs::read_to_string(path)?),
        None => textpipe::default_lemma_exceptions(),
    };
    Ok(PipelineConfig::new(
        stopwords,
        preserve,
        lemmas,
        config.enable_stemming,
        config.enable_lemmatization,
    )?)
}

/// Run the full experiment from files on disk.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord, ExperimentError> {
    let posts = load_posts(config)?;
    run_experiment_on(posts, config)
}

/// Run the experiment on already-parsed posts.
pub fn run_experiment_on(
    mut posts: Vec<ingest::RawPost>,
    config: &ExperimentConfig,
) -> Result<RunRecord, ExperimentError> {
    config.validate()?;
    if let Some(cap) = config.n_posts_cap {
        posts.truncate(cap);
    }
    let clean: Vec<CleanPost> = ingest::strip_all(&posts);
    let (catalog, clean) = ingest::select_labels(&clean, config.k_top_tags)?;
    let pipeline = pipeline_config(config)?;
    let docs: Vec<TokenDoc> = clean
        .par_iter()
        .map(|post| textpipe::run_pipeline(post, &pipeline))
        .collect();
    let label_sets: Vec<LabelSet> = docs
        .iter()
        .map(|d| LabelSet::from_iter(d.tags.iter().cloned()))
        .collect();

    let (train_idx, test_idx) = split(docs.len(), config.split_ratio, config.seed)?;
    let select =
        |idx: &[usize]| -> Vec<TokenDoc> { idx.iter().map(|&i| docs[i].clone()).collect() };
    let select_sets =
        |idx: &[usize]| -> Vec<LabelSet> { idx.iter().map(|&i| label_sets[i].clone()).collect() };
    let train_docs = select(&train_idx);
    let test_docs = select(&test_idx);
    let train_sets = select_sets(&train_idx);
    let test_sets = select_sets(&test_idx);

    let policy = FilterPolicy {
        min_doc_freq: config.min_doc_freq,
        max_doc_ratio: config.max_doc_ratio,
    };
    let projection = fit_projection(
        &train_docs,
        policy,
        config.variance_target,
        config.svd_rank_cap,
        config.seed,
    )?;
    let train_features = featurize(&train_docs, &projection);
    let test_features = featurize(&test_docs, &projection);

    // one preprocessing fit per CV fold, shared across all grid cells
    let folds = kfold(train_docs.len(), config.kfold_k, config.seed.wrapping_add(1))?;
    let mut fold_data = Vec::with_capacity(folds.len());
    for (fold_train, fold_val) in &folds {
        let ft_docs: Vec<TokenDoc> = fold_train.iter().map(|&i| train_docs[i].clone()).collect();
        let fv_docs: Vec<TokenDoc> = fold_val.iter().map(|&i| train_docs[i].clone()).collect();
        let fold_projection = fit_projection(
            &ft_docs,
            policy,
            config.variance_target,
            config.svd_rank_cap,
            config.seed,
        )?;
        let ft_sets: Vec<LabelSet> = fold_train.iter().map(|&i| train_sets[i].clone()).collect();
        let fv_sets: Vec<LabelSet> = fold_val.iter().map(|&i| train_sets[i].clone()).collect();
        fold_data.push((
            featurize(&ft_docs, &fold_projection),
            ft_sets,
            featurize(&fv_docs, &fold_projection),
            fv_sets,
        ));
    }

    let cells = enumerate_cells(config);
    let mut results = Vec::with_capacity(cells.len());
    for key in cells {
        let started = std::time::Instant::now();
        let outcome = run_cell(
            &key,
            config,
            &catalog,
            &train_features,
            &train_sets,
            &test_features,
            &test_sets,
            &fold_data,
        );
        results.push(CellResult {
            key,
            outcome: outcome.map_err(|e| e.to_string()),
            wall_time: started.elapsed(),
        });
    }

    let mut notes = Vec::new();
    if config.technique_grid.is_empty() {
        notes.push("technique grid empty: technique tables omitted".to_string());
    }
    if config.kernel_grid.is_empty() {
        notes.push("kernel grid empty: kernel and iteration tables omitted".to_string());
    }

    Ok(RunRecord {
        config_echo: config.echo(),
        catalog,
        n_documents: docs.len(),
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        vocabulary_size: projection.tfidf.n_terms(),
        svd_rank: projection.svd.rank(),
        retained_variance: projection.svd.retained_variance(),
        cells: results,
        notes,
        artifacts: Vec::new(),
    })
}

/// Train and score the classifier of one cell on given features.
fn train_and_score(
    key: &CellKey,
    config: &ExperimentConfig,
    catalog: &LabelCatalog,
    train_features: &DenseMatrix,
    train_sets: &[LabelSet],
    eval_sets: &[(&DenseMatrix, &[LabelSet])],
) -> Result<(Vec<EvalReport>, bool), ExperimentError> {
    let train_config = TrainConfig {
        c: key.c,
        max_iterations: key.iterations,
        tolerance: config.tolerance,
        loss: match key.kind {
            CellKind::LinearTechnique { loss, .. } => loss,
            CellKind::KernelSweep { .. } => Loss::Hinge,
        },
        seed: config.seed,
    };
    match &key.kind {
        CellKind::KernelSweep { kernel } => {
            let spec = kernel.to_spec(train_features.n_cols());
            let (model, diags) = multilabel::train_ovr(
                train_features,
                train_sets,
                catalog,
                &TrainerChoice::Smo(spec),
                &train_config,
                DecisionRule::default(),
            )?;
            let converged = diags.iter().all(|d| d.converged);
            let reports = score_ovr(&model, eval_sets)?;
            Ok((reports, converged))
        }
        CellKind::LinearTechnique { technique, .. } => match technique {
            Technique::Ovr => {
                let (model, diags) = multilabel::train_ovr(
                    train_features,
                    train_sets,
                    catalog,
                    &TrainerChoice::LinearDcd,
                    &train_config,
                    DecisionRule::default(),
                )?;
                let converged = diags.iter().all(|d| d.converged);
                let reports = score_ovr(&model, eval_sets)?;
                Ok((reports, converged))
            }
            Technique::CrammerSinger => {
                // single-label adaptation: each example trains as its
                // lowest-indexed catalog tag
                let labels: Vec<usize> = train_sets
                    .iter()
                    .map(|s| {
                        catalog
                            .labels
                            .iter()
                            .position(|l| s.contains(l))
                            .expect("label sets verified against catalog")
                    })
                    .collect();
                let (model, diag) = train_crammer_singer(
                    train_features,
                    &labels,
                    catalog.len(),
                    &train_config,
                )?;
                let model = model.with_classes(catalog.labels.clone());
                let mut reports = Vec::new();
                for (features, sets) in eval_sets {
                    let predictions: Vec<LabelSet> = (0..features.n_rows())
                        .map(|r| multilabel::predict_labels_cs(features.row(r), &model, 0.0))
                        .collect::<Result<_, _>>()?;
                    reports.push(multilabel::evaluate(sets, &predictions)?);
                }
                Ok((reports, diag.converged))
            }
        },
    }
}

fn score_ovr(
    model: &multilabel::OvrModel,
    eval_sets: &[(&DenseMatrix, &[LabelSet])],
) -> Result<Vec<EvalReport>, ExperimentError> {
    let mut reports = Vec::new();
    for (features, sets) in eval_sets {
        let predictions: Vec<LabelSet> = (0..features.n_rows())
            .map(|r| multilabel::predict_labels(features.row(r), model))
            .collect::<Result<_, _>>()?;
        reports.push(multilabel::evaluate(sets, &predictions)?);
    }
    Ok(reports)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    key: &CellKey,
    config: &ExperimentConfig,
    catalog: &LabelCatalog,
    train_features: &DenseMatrix,
    train_sets: &[LabelSet],
    test_features: &DenseMatrix,
    test_sets: &[LabelSet],
    fold_data: &[(DenseMatrix, Vec<LabelSet>, DenseMatrix, Vec<LabelSet>)],
) -> Result<CellMetrics, ExperimentError> {
    let (reports, converged) = train_and_score(
        key,
        config,
        catalog,
        train_features,
        train_sets,
        &[
            (train_features, train_sets),
            (test_features, test_sets),
        ],
    )?;
    let [train_report, test_report]: [EvalReport; 2] =
        reports.try_into().expect("two evaluation sides");

    let mut cv_fold_accuracy = Vec::with_capacity(fold_data.len());
    for (ft_features, ft_sets, fv_features, fv_sets) in fold_data {
        let (fold_reports, _) = train_and_score(
            key,
            config,
            catalog,
            ft_features,
            ft_sets,
            &[(fv_features, fv_sets)],
        )?;
        cv_fold_accuracy.push(fold_reports[0].accuracy);
    }
    let cv_mean_accuracy = cv_fold_accuracy.iter().sum::<f64>() / cv_fold_accuracy.len() as f64;

    Ok(CellMetrics {
        train_error: train_report.percentage_error,
        test_error: test_report.percentage_error,
        train_report,
        test_report,
        cv_fold_accuracy,
        cv_mean_accuracy,
        converged,
    })
}

// ---------------------------------------------------------------------
// Record serialization and table emission
// ---------------------------------------------------------------------

impl RunRecord {
    /// Deterministic text serialization. Wall times are deliberately
    /// excluded so identical runs serialize identically.
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run_record v1");
        let _ = writeln!(out, "begin config");
        out.push_str(&self.config_echo);
        let _ = writeln!(out, "end config");
        let _ = writeln!(out, "labels {}", self.catalog.labels.join(","));
        let counts: Vec<String> = self.catalog.counts.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "label_counts {}", counts.join(","));
        let _ = writeln!(
            out,
            "documents {} train {} test {}",
            self.n_documents, self.n_train, self.n_test
        );
        let _ = writeln!(out, "vocabulary {}", self.vocabulary_size);
        let _ = writeln!(
            out,
            "svd_rank {} retained_variance {}",
            self.svd_rank,
            textio::fmt_f64(self.retained_variance)
        );
        for note in &self.notes {
            let _ = writeln!(out, "note {note}");
        }
        let _ = writeln!(out, "cells {}", self.cells.len());
        for (i, cell) in self.cells.iter().enumerate() {
            match &cell.outcome {
                Ok(m) => {
                    let folds: Vec<String> =
                        m.cv_fold_accuracy.iter().map(|a| textio::fmt_f64(*a)).collect();
                    let _ = writeln!(
                        out,
                        "cell {i} {} status=ok train_error={} test_error={} \
                         train_accuracy={} train_precision={} train_recall={} \
                         train_subset_accuracy={} \
                         test_accuracy={} test_precision={} test_recall={} \
                         test_subset_accuracy={} cv_mean={} cv_folds={} converged={}",
                        cell.key.describe(),
                        textio::fmt_f64(m.train_error),
                        textio::fmt_f64(m.test_error),
                        textio::fmt_f64(m.train_report.accuracy),
                        textio::fmt_f64(m.train_report.precision),
                        textio::fmt_f64(m.train_report.recall),
                        textio::fmt_f64(m.train_report.subset_accuracy),
                        textio::fmt_f64(m.test_report.accuracy),
                        textio::fmt_f64(m.test_report.precision),
                        textio::fmt_f64(m.test_report.recall),
                        textio::fmt_f64(m.test_report.subset_accuracy),
                        textio::fmt_f64(m.cv_mean_accuracy),
                        folds.join(","),
                        u8::from(m.converged),
                    );
                }
                Err(message) => {
                    let _ = writeln!(
                        out,
                        "cell {i} {} status=error message={message}",
                        cell.key.describe()
                    );
                }
            }
        }
        let _ = writeln!(out, "end run_record");
        out
    }
}

fn csv_row(fields: &[String]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains(',') || f.contains('"') || f.contains('\n') {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    let mut line = quoted.join(",");
    line.push('\n');
    line
}

fn pct(x: f64) -> String {
    format!("{x:.2}")
}

/// Write the result tables and the run record under `dir`. The paths
/// are recorded on the run record and returned.
pub fn emit_tables(record: &mut RunRecord, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    // full per-cell dump
    let mut cells_csv = csv_row(&[
        "technique".into(),
        "kernel".into(),
        "loss".into(),
        "c".into(),
        "iterations".into(),
        "train_error".into(),
        "test_error".into(),
        "test_accuracy".into(),
        "test_precision".into(),
        "test_recall".into(),
        "test_subset_accuracy".into(),
        "cv_mean_accuracy".into(),
        "converged".into(),
        "error".into(),
    ]);
    for cell in &record.cells {
        let (technique, kernel, loss) = match &cell.key.kind {
            CellKind::KernelSweep { kernel } => {
                ("svc".to_string(), kernel.label(), "-".to_string())
            }
            CellKind::LinearTechnique { technique, loss } => (
                technique.label().to_string(),
                "linear".to_string(),
                loss.label().to_string(),
            ),
        };
        let mut fields = vec![
            technique,
            kernel,
            loss,
            cell.key.c.to_string(),
            cell.key.iterations.to_string(),
        ];
        match &cell.outcome {
            Ok(m) => {
                fields.extend([
                    pct(m.train_error),
                    pct(m.test_error),
                    textio::fmt_f64(m.test_report.accuracy),
                    textio::fmt_f64(m.test_report.precision),
                    textio::fmt_f64(m.test_report.recall),
                    textio::fmt_f64(m.test_report.subset_accuracy),
                    textio::fmt_f64(m.cv_mean_accuracy),
                    u8::from(m.converged).to_string(),
                    String::new(),
                ]);
            }
            Err(message) => {
                fields.extend(std::iter::repeat_n(String::new(), 8));
                fields.push(message.clone());
            }
        }
        cells_csv.push_str(&csv_row(&fields));
    }
    let cells_path = dir.join("cells.csv");
    fs::write(&cells_path, cells_csv)?;
    written.push(cells_path);

    let find_kernel_cell = |kernel: KernelKind, c: f64, iterations: usize| {
        record.cells.iter().find(|cell| {
            cell.key.c == c
                && cell.key.iterations == iterations
                && cell.key.kind == CellKind::KernelSweep { kernel }
        })
    };

    // iteration × C table for a fixed kernel (rbf when present)
    if !record.cells.is_empty() {
        let kernels: Vec<KernelKind> = dedup_kernels(record);
        let c_values = dedup_c(record);
        let iteration_values = dedup_iterations(record);
        if !kernels.is_empty() {
            let fixed_kernel = if kernels.contains(&KernelKind::Rbf) {
                KernelKind::Rbf
            } else {
                kernels[0]
            };
            for (side, pick) in [("train", 0usize), ("test", 1usize)] {
                let mut csv = csv_row(
                    &std::iter::once("iterations".to_string())
                        .chain(c_values.iter().map(|c| format!("C = {c}")))
                        .collect::<Vec<_>>(),
                );
                for &iterations in &iteration_values {
                    let mut fields = vec![iterations.to_string()];
                    for &c in &c_values {
                        fields.push(table_value(
                            find_kernel_cell(fixed_kernel, c, iterations),
                            pick,
                        ));
                    }
                    csv.push_str(&csv_row(&fields));
                }
                let path = dir.join(format!(
                    "table_iterations_{}_{}.csv",
                    fixed_kernel.label(),
                    side
                ));
                fs::write(&path, csv)?;
                written.push(path);
            }

            // kernel × C table at the largest iteration budget
            let fixed_iterations = *iteration_values.iter().max().unwrap();
            for (side, pick) in [("train", 0usize), ("test", 1usize)] {
                let mut csv = csv_row(
                    &std::iter::once("kernel".to_string())
                        .chain(c_values.iter().map(|c| format!("C = {c}")))
                        .collect::<Vec<_>>(),
                );
                for &kernel in &kernels {
                    let mut fields = vec![kernel.label()];
                    for &c in &c_values {
                        fields.push(table_value(
                            find_kernel_cell(kernel, c, fixed_iterations),
                            pick,
                        ));
                    }
                    csv.push_str(&csv_row(&fields));
                }
                let path = dir.join(format!("table_kernels_{side}.csv"));
                fs::write(&path, csv)?;
                written.push(path);
            }
        }

        // technique × loss table
        let techniques = dedup_techniques(record);
        let losses = dedup_losses(record);
        if !techniques.is_empty() {
            for (side, pick) in [("train", 0usize), ("test", 1usize)] {
                let mut csv = csv_row(
                    &std::iter::once("technique".to_string())
                        .chain(losses.iter().map(|l| l.label().to_string()))
                        .collect::<Vec<_>>(),
                );
                for &technique in &techniques {
                    let mut fields = vec![technique.label().to_string()];
                    for &loss in &losses {
                        let cell = record.cells.iter().find(|cell| {
                            cell.key.kind == CellKind::LinearTechnique { technique, loss }
                        });
                        fields.push(table_value(cell, pick));
                    }
                    csv.push_str(&csv_row(&fields));
                }
                let path = dir.join(format!("table_techniques_{side}.csv"));
                fs::write(&path, csv)?;
                written.push(path);
            }
        }
    }

    let record_path = dir.join("run_record.txt");
    fs::write(&record_path, record.write_text())?;
    written.push(record_path);
    record.artifacts = written.clone();
    Ok(written)
}

fn table_value(cell: Option<&CellResult>, side: usize) -> String {
    match cell.map(|c| &c.outcome) {
        Some(Ok(m)) => pct(if side == 0 { m.train_error } else { m.test_error }),
        Some(Err(_)) => "error".to_string(),
        None => String::new(),
    }
}

fn dedup_kernels(record: &RunRecord) -> Vec<KernelKind> {
    let mut out = Vec::new();
    for cell in &record.cells {
        if let CellKind::KernelSweep { kernel } = cell.key.kind {
            if !out.contains(&kernel) {
                out.push(kernel);
            }
        }
    }
    out
}

fn dedup_c(record: &RunRecord) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for cell in &record.cells {
        if matches!(cell.key.kind, CellKind::KernelSweep { .. })
            && !out.contains(&cell.key.c)
        {
            out.push(cell.key.c);
        }
    }
    out
}

fn dedup_iterations(record: &RunRecord) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for cell in &record.cells {
        if matches!(cell.key.kind, CellKind::KernelSweep { .. })
            && !out.contains(&cell.key.iterations)
        {
            out.push(cell.key.iterations);
        }
    }
    out
}

fn dedup_techniques(record: &RunRecord) -> Vec<Technique> {
    let mut out = Vec::new();
    for cell in &record.cells {
        if let CellKind::LinearTechnique { technique, .. } = cell.key.kind {
            if !out.contains(&technique) {
                out.push(technique);
            }
        }
    }
    out
}

fn dedup_losses(record: &RunRecord) -> Vec<Loss> {
    let mut out = Vec::new();
    for cell in &record.cells {
        if let CellKind::LinearTechnique { loss, .. } = cell.key.kind {
            if !out.contains(&loss) {
                out.push(loss);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------

/// Parse a `key = value` config file into overrides applied on top of
/// `base`. Unknown keys are rejected.
pub fn apply_config_file(
    base: &mut ExperimentConfig,
    text: &str,
) -> Result<(), ExperimentError> {
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ExperimentError::Config(format!(
                "line {}: expected `key = value`",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        apply_config_pair(base, key, value)
            .map_err(|e| ExperimentError::Config(format!("line {}: {e}", lineno + 1)))?;
    }
    Ok(())
}

pub fn apply_config_pair(
    config: &mut ExperimentConfig,
    key: &str,
    value: &str,
) -> Result<(), String> {
    let parse_f64 = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number `{v}`"));
    let parse_usize = |v: &str| v.parse::<usize>().map_err(|_| format!("bad integer `{v}`"));
    let parse_bool = |v: &str| match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("bad boolean `{v}`")),
    };
    match key {
        "input_xml" => config.input = InputSpec::PostsXml(PathBuf::from(value)),
        "input_posts" => match &mut config.input {
            InputSpec::Lines { posts, .. } => *posts = PathBuf::from(value),
            _ => {
                config.input = InputSpec::Lines {
                    posts: PathBuf::from(value),
                    tags: PathBuf::new(),
                }
            }
        },
        "input_tags" => match &mut config.input {
            InputSpec::Lines { tags, .. } => *tags = PathBuf::from(value),
            _ => {
                config.input = InputSpec::Lines {
                    posts: PathBuf::new(),
                    tags: PathBuf::from(value),
                }
            }
        },
        "n_posts" => config.n_posts_cap = Some(parse_usize(value)?),
        "k_top_tags" => config.k_top_tags = parse_usize(value)?,
        "split_ratio" => config.split_ratio = parse_f64(value)?,
        "kfold_k" => config.kfold_k = parse_usize(value)?,
        "variance_target" => config.variance_target = parse_f64(value)?,
        "svd_rank_cap" => config.svd_rank_cap = parse_usize(value)?,
        "kernels" => {
            config.kernel_grid = split_list(value)
                .map(|s| KernelKind::parse(s).ok_or_else(|| format!("unknown kernel `{s}`")))
                .collect::<Result<_, _>>()?;
        }
        "c" => {
            config.c_grid = split_list(value).map(parse_f64).collect::<Result<_, _>>()?;
        }
        "iterations" => {
            config.iteration_grid = split_list(value)
                .map(parse_usize)
                .collect::<Result<_, _>>()?;
        }
        "losses" => {
            config.loss_grid = split_list(value)
                .map(|s| Loss::parse(s).ok_or_else(|| format!("unknown loss `{s}`")))
                .collect::<Result<_, _>>()?;
        }
        "techniques" => {
            config.technique_grid = split_list(value)
                .map(|s| Technique::parse(s).ok_or_else(|| format!("unknown technique `{s}`")))
                .collect::<Result<_, _>>()?;
        }
        "seed" => config.seed = value.parse().map_err(|_| format!("bad seed `{value}`"))?,
        "strict" => config.strict_parse = parse_bool(value)?,
        "stemming" => config.enable_stemming = parse_bool(value)?,
        "lemmatization" => config.enable_lemmatization = parse_bool(value)?,
        "stopword_file" => config.stopword_file = Some(PathBuf::from(value)),
        "preserve_file" => config.preserve_file = Some(PathBuf::from(value)),
        "lemma_file" => config.lemma_file = Some(PathBuf::from(value)),
        "min_doc_freq" => config.min_doc_freq = parse_usize(value)?,
        "max_doc_ratio" => config.max_doc_ratio = parse_f64(value)?,
        "tolerance" => config.tolerance = parse_f64(value)?,
        "output_dir" => config.output_dir = PathBuf::from(value),
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}
