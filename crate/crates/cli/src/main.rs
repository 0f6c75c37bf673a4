//! `sxtag` — tag prediction for question dumps.
//!
//! Verbs: `synth` (seeded corpus), `ingest` (dump -> clean text),
//! `preprocess` (clean text -> tokens), `train` (corpus -> model
//! bundle), `evaluate` (model + labeled corpus -> metrics),
//! `experiment` (grid sweep with CSV tables), `predict` (model + one
//! post -> tags).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence
//! failure in strict mode.

mod bundle;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bundle::{Classifier, ModelBundle};
use sxtag_core::experiment::{
    self, apply_config_file, apply_config_pair, ExperimentConfig, InputSpec,
};
use sxtag_core::ingest::{self, CleanPost, ParseMode, RawPost};
use sxtag_core::multilabel::{
    self, evaluate, DecisionRule, LabelSet, TrainerChoice,
};
use sxtag_core::svd;
use sxtag_core::svm::{train_crammer_singer, KernelSpec, Loss, TrainConfig};
use sxtag_core::synthetic::{self, SyntheticOptions};
use sxtag_core::textpipe::{self, PipelineConfig};
use sxtag_core::vectorize::{self, FilterPolicy};

#[derive(Parser)]
#[command(name = "sxtag", version, about = "Multi-label question tagger")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus in the line-record layout.
    Synth(SynthArgs),
    /// Parse a dump, strip markup and code, keep the top-K tags.
    Ingest(IngestArgs),
    /// Tokenize a cleaned corpus into normalized token lists.
    Preprocess(PreprocessArgs),
    /// Train a classifier and write a self-contained model bundle.
    Train(TrainArgs),
    /// Evaluate a model bundle against a labeled corpus.
    Evaluate(EvaluateArgs),
    /// Run the full grid experiment and write the CSV tables.
    Experiment(ExperimentArgs),
    /// Predict tags for one post file (one tag per line).
    Predict(PredictArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Posts.xml dump file.
    #[arg(long, conflicts_with_all = ["posts", "tags"])]
    xml: Option<PathBuf>,
    /// Line-record posts file (`id<TAB>title<TAB>body`).
    #[arg(long, requires = "tags")]
    posts: Option<PathBuf>,
    /// Tag sidecar (`id<TAB>tag1,tag2,...`).
    #[arg(long, requires = "posts")]
    tags: Option<PathBuf>,
    /// Abort on the first malformed record (and on non-convergence
    /// where training is involved).
    #[arg(long)]
    strict: bool,
    /// Keep only the first N posts.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Disable Porter stemming.
    #[arg(long)]
    no_stemming: bool,
    /// Enable the rule-based lemmatizer.
    #[arg(long)]
    lemmatization: bool,
    /// Override the bundled stopword list (one token per line).
    #[arg(long)]
    stopword_file: Option<PathBuf>,
    /// Override the bundled preserve-term list.
    #[arg(long)]
    preserve_file: Option<PathBuf>,
    /// Override the bundled lemma exception table
    /// (`form<TAB>lemma` per line).
    #[arg(long)]
    lemma_file: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "synth-corpus")]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    posts: usize,
    #[arg(long, default_value_t = 10)]
    tags: usize,
    #[arg(long, default_value_t = 20241)]
    seed: u64,
    /// Also write the corpus as a Posts.xml dump.
    #[arg(long)]
    xml: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 10)]
    k_top_tags: usize,
    #[arg(long, default_value = "ingested")]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Directory produced by `ingest`.
    #[arg(long)]
    clean: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value = "preprocessed")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 10)]
    k_top_tags: usize,
    /// Classifier: `linear` (dual coordinate descent), `svc-linear`,
    /// `svc-rbf`, `svc-poly2`, `svc-poly3`, `svc-sigmoid`, or `cs`
    /// (Crammer-Singer).
    #[arg(long, default_value = "linear")]
    classifier: String,
    #[arg(long, default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Loss for the linear path: `hinge` or `squared_hinge`.
    #[arg(long, default_value = "hinge")]
    loss: String,
    #[arg(long, default_value_t = 0.9)]
    variance_target: f64,
    #[arg(long, default_value_t = 3000)]
    rank_cap: usize,
    #[arg(long, default_value_t = 2)]
    min_doc_freq: usize,
    #[arg(long, default_value_t = 0.95)]
    max_doc_ratio: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output bundle path.
    #[arg(long, default_value = "model.txt")]
    model: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Also write the metric CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file in `key = value` form; CLI flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Output directory for tables and the run record.
    #[arg(long, default_value = "experiment-out")]
    out: PathBuf,
    /// Remaining overrides as `key=value` pairs (same keys as the
    /// config file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    k_top_tags: Option<usize>,
    #[arg(long)]
    kernels: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    iterations: Option<String>,
    #[arg(long)]
    losses: Option<String>,
    #[arg(long)]
    techniques: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kfold: Option<usize>,
    #[arg(long)]
    split_ratio: Option<f64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// A file holding one post (plain text or HTML).
    #[arg(long)]
    post: PathBuf,
}

enum CliError {
    Usage(String),
    Data(String),
    Convergence(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Convergence(m) => m,
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/usage text
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Predict(args) => cmd_predict(args),
    }
}

// ---------------------------------------------------------------------
// shared loading helpers
// ---------------------------------------------------------------------

fn load_posts(input: &InputArgs) -> Result<Vec<RawPost>, CliError> {
    let mode = if input.strict {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    };
    let report = match (&input.xml, &input.posts, &input.tags) {
        (Some(xml), None, None) => {
            let file = fs::File::open(xml).map_err(data_err)?;
            ingest::parse_posts_xml(BufReader::new(file), mode).map_err(data_err)?
        }
        (None, Some(posts), Some(tags)) => {
            let posts = fs::File::open(posts).map_err(data_err)?;
            let tags = fs::File::open(tags).map_err(data_err)?;
            ingest::parse_posts_lines(BufReader::new(posts), BufReader::new(tags), mode)
                .map_err(data_err)?
        }
        _ => {
            return Err(CliError::Usage(
                "provide either --xml FILE or --posts FILE --tags FILE".into(),
            ))
        }
    };
    if !report.record_errors.is_empty() {
        eprintln!(
            "skipped {} malformed record(s); first: line {}: {}",
            report.record_errors.len(),
            report.record_errors[0].line,
            report.record_errors[0].message
        );
    }
    let mut posts = report.posts;
    if let Some(cap) = input.cap {
        posts.truncate(cap);
    }
    if posts.is_empty() {
        return Err(CliError::Data("no usable posts in input".into()));
    }
    Ok(posts)
}

fn pipeline_from(args: &PipelineArgs) -> Result<PipelineConfig, CliError> {
    let stopwords = match &args.stopword_file {
        Some(path) => textpipe::parse_word_list(&fs::read_to_string(path).map_err(data_err)?),
        None => textpipe::default_stopwords(),
    };
    let preserve = match &args.preserve_file {
        Some(path) => textpipe::parse_word_list(&fs::read_to_string(path).map_err(data_err)?),
        None => textpipe::default_preserve_terms(),
    };
    let lemmas = match &args.lemma_file {
        Some(path) => textpipe::parse_lemma_table(&fs::read_to_string(path).map_err(data_err)?),
        None => textpipe::default_lemma_exceptions(),
    };
    PipelineConfig::new(stopwords, preserve, lemmas, !args.no_stemming, args.lemmatization)
        .map_err(data_err)
}

fn write_clean_corpus(dir: &Path, posts: &[CleanPost]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(data_err)?;
    let mut text = String::new();
    let mut tags = String::new();
    for post in posts {
        text.push_str(&format!("{}\t{}\n", post.id, post.text));
        tags.push_str(&format!("{}\t{}\n", post.id, post.tags.join(",")));
    }
    fs::write(dir.join("clean_posts.tsv"), text).map_err(data_err)?;
    fs::write(dir.join("clean_tags.tsv"), tags).map_err(data_err)?;
    Ok(())
}

fn read_clean_corpus(dir: &Path) -> Result<Vec<CleanPost>, CliError> {
    let text = fs::read_to_string(dir.join("clean_posts.tsv")).map_err(data_err)?;
    let tags = fs::read_to_string(dir.join("clean_tags.tsv")).map_err(data_err)?;
    let mut tag_map = std::collections::HashMap::new();
    for line in tags.lines() {
        if let Some((id, list)) = line.split_once('\t') {
            let id: u64 = id.parse().map_err(data_err)?;
            let tags: Vec<String> = list
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            tag_map.insert(id, tags);
        }
    }
    let mut posts = Vec::new();
    for line in text.lines() {
        let Some((id, body)) = line.split_once('\t') else {
            continue;
        };
        let id: u64 = id.parse().map_err(data_err)?;
        posts.push(CleanPost {
            id,
            text: body.to_string(),
            tags: tag_map.get(&id).cloned().unwrap_or_default(),
        });
    }
    Ok(posts)
}

// ---------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let posts = synthetic::generate(&SyntheticOptions {
        n_posts: args.posts,
        n_tags: args.tags,
        seed: args.seed,
    });
    fs::create_dir_all(&args.out).map_err(data_err)?;
    let (post_lines, tag_lines) = synthetic::to_line_format(&posts);
    fs::write(args.out.join("posts.tsv"), post_lines).map_err(data_err)?;
    fs::write(args.out.join("tags.tsv"), tag_lines).map_err(data_err)?;
    if args.xml {
        fs::write(args.out.join("Posts.xml"), synthetic::to_posts_xml(&posts))
            .map_err(data_err)?;
    }
    println!(
        "wrote {} posts with {} tags to {}",
        args.posts,
        args.tags,
        args.out.display()
    );
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    let posts = load_posts(&args.input)?;
    let clean = ingest::strip_all(&posts);
    let (catalog, kept) = ingest::select_labels(&clean, args.k_top_tags).map_err(data_err)?;
    write_clean_corpus(&args.out, &kept)?;
    let mut catalog_text = String::new();
    for (label, count) in catalog.labels.iter().zip(&catalog.counts) {
        catalog_text.push_str(&format!("{label}\t{count}\n"));
    }
    fs::write(args.out.join("catalog.tsv"), catalog_text).map_err(data_err)?;
    println!(
        "kept {} of {} posts across {} tags -> {}",
        kept.len(),
        posts.len(),
        catalog.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<(), CliError> {
    let posts = read_clean_corpus(&args.clean)?;
    let pipeline = pipeline_from(&args.pipeline)?;
    fs::create_dir_all(&args.out).map_err(data_err)?;
    let mut tokens = String::new();
    let mut tags = String::new();
    for post in &posts {
        let doc = textpipe::run_pipeline(post, &pipeline);
        tokens.push_str(&format!("{}\t{}\n", doc.id, doc.tokens.join(" ")));
        tags.push_str(&format!("{}\t{}\n", doc.id, doc.tags.join(",")));
    }
    fs::write(args.out.join("tokens.tsv"), tokens).map_err(data_err)?;
    fs::write(args.out.join("doc_tags.tsv"), tags).map_err(data_err)?;
    println!("tokenized {} posts -> {}", posts.len(), args.out.display());
    Ok(())
}

struct PreparedCorpus {
    catalog: ingest::LabelCatalog,
    features: sxtag_core::DenseMatrix,
    label_sets: Vec<LabelSet>,
    tfidf: sxtag_core::TfIdfModel,
    svd: sxtag_core::SvdModel,
}

fn prepare(
    posts: &[RawPost],
    pipeline: &PipelineConfig,
    k_top_tags: usize,
    policy: FilterPolicy,
    variance_target: f64,
    rank_cap: usize,
    seed: u64,
) -> Result<PreparedCorpus, CliError> {
    let clean = ingest::strip_all(posts);
    let (catalog, kept) = ingest::select_labels(&clean, k_top_tags).map_err(data_err)?;
    let docs: Vec<_> = kept
        .iter()
        .map(|p| textpipe::run_pipeline(p, pipeline))
        .collect();
    let label_sets: Vec<LabelSet> = docs
        .iter()
        .map(|d| LabelSet::from_iter(d.tags.iter().cloned()))
        .collect();
    let projection = experiment::fit_projection(&docs, policy, variance_target, rank_cap, seed)
        .map_err(data_err)?;
    let features = experiment::featurize(&docs, &projection);
    Ok(PreparedCorpus {
        catalog,
        features,
        label_sets,
        tfidf: projection.tfidf,
        svd: projection.svd,
    })
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let posts = load_posts(&args.input)?;
    let pipeline = pipeline_from(&args.pipeline)?;
    let policy = FilterPolicy {
        min_doc_freq: args.min_doc_freq,
        max_doc_ratio: args.max_doc_ratio,
    };
    let prepared = prepare(
        &posts,
        &pipeline,
        args.k_top_tags,
        policy,
        args.variance_target,
        args.rank_cap,
        args.seed,
    )?;
    let loss = Loss::parse(&args.loss)
        .ok_or_else(|| CliError::Usage(format!("unknown loss `{}`", args.loss)))?;
    let config = TrainConfig {
        c: args.c,
        max_iterations: args.iterations,
        tolerance: args.tolerance,
        loss,
        seed: args.seed,
    };
    let n_features = prepared.features.n_cols();
    let (classifier, converged) = match args.classifier.as_str() {
        "linear" => {
            let (model, diags) = multilabel::train_ovr(
                &prepared.features,
                &prepared.label_sets,
                &prepared.catalog,
                &TrainerChoice::LinearDcd,
                &config,
                DecisionRule::default(),
            )
            .map_err(data_err)?;
            (
                Classifier::Ovr(model),
                diags.iter().all(|d| d.converged),
            )
        }
        "cs" => {
            let labels: Vec<usize> = prepared
                .label_sets
                .iter()
                .map(|s| {
                    prepared
                        .catalog
                        .labels
                        .iter()
                        .position(|l| s.contains(l))
                        .expect("labels verified by select_labels")
                })
                .collect();
            let (model, diag) = train_crammer_singer(
                &prepared.features,
                &labels,
                prepared.catalog.len(),
                &config,
            )
            .map_err(data_err)?;
            (
                Classifier::CrammerSinger(model.with_classes(prepared.catalog.labels.clone())),
                diag.converged,
            )
        }
        other => {
            let kernel = other
                .strip_prefix("svc-")
                .and_then(|k| match k {
                    "linear" => Some(KernelSpec::Linear),
                    "rbf" => Some(KernelSpec::Rbf {
                        gamma: KernelSpec::default_gamma(n_features),
                    }),
                    "sigmoid" => Some(KernelSpec::Sigmoid {
                        gamma: KernelSpec::default_gamma(n_features),
                        coef0: 0.0,
                    }),
                    poly => poly.strip_prefix("poly").and_then(|d| {
                        d.parse().ok().map(|degree| KernelSpec::Polynomial {
                            gamma: KernelSpec::default_gamma(n_features),
                            degree,
                            coef0: 0.0,
                        })
                    }),
                })
                .ok_or_else(|| {
                    CliError::Usage(format!("unknown classifier `{}`", args.classifier))
                })?;
            let (model, diags) = multilabel::train_ovr(
                &prepared.features,
                &prepared.label_sets,
                &prepared.catalog,
                &TrainerChoice::Smo(kernel),
                &config,
                DecisionRule::default(),
            )
            .map_err(data_err)?;
            (
                Classifier::Ovr(model),
                diags.iter().all(|d| d.converged),
            )
        }
    };
    if args.input.strict && !converged {
        return Err(CliError::Convergence(format!(
            "training did not converge within {} iterations at tolerance {}",
            args.iterations, args.tolerance
        )));
    }
    let bundle = ModelBundle {
        pipeline,
        tfidf: prepared.tfidf,
        svd: prepared.svd,
        catalog: prepared.catalog,
        classifier,
    };
    fs::write(&args.model, bundle.write_text()).map_err(data_err)?;
    println!(
        "trained `{}` on {} posts ({} features) -> {}",
        args.classifier,
        prepared.label_sets.len(),
        n_features,
        args.model.display()
    );
    if !converged {
        eprintln!("warning: training stopped at the iteration budget before reaching tolerance");
    }
    Ok(())
}

fn bundle_predict(bundle: &ModelBundle, post: &RawPost) -> Result<LabelSet, CliError> {
    let clean = ingest::strip_html_code(post);
    let doc = textpipe::run_pipeline(&clean, &bundle.pipeline);
    let row = vectorize::transform(&doc, &bundle.tfidf);
    let projected =
        svd::project(&row, bundle.tfidf.n_terms(), &bundle.svd).map_err(data_err)?;
    match &bundle.classifier {
        Classifier::Ovr(model) => {
            multilabel::predict_labels(&projected, model).map_err(data_err)
        }
        Classifier::CrammerSinger(model) => {
            multilabel::predict_labels_cs(&projected, model, 0.0).map_err(data_err)
        }
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.model).map_err(data_err)?;
    let bundle = ModelBundle::read_text(&text).map_err(CliError::Data)?;
    let posts = load_posts(&args.input)?;
    let mut truths = Vec::new();
    let mut predictions = Vec::new();
    for post in &posts {
        // restrict truths to the model's catalog, drop uncovered posts
        let truth: Vec<String> = post
            .tags
            .iter()
            .filter(|t| bundle.catalog.contains(t))
            .cloned()
            .collect();
        if truth.is_empty() {
            continue;
        }
        truths.push(LabelSet::from_iter(truth));
        predictions.push(bundle_predict(&bundle, post)?);
    }
    if truths.is_empty() {
        return Err(CliError::Data(
            "no post in the input carries a catalog tag".into(),
        ));
    }
    let report = evaluate(&truths, &predictions).map_err(data_err)?;
    let csv = report.to_csv();
    print!("{csv}");
    if let Some(out) = &args.out {
        fs::write(out, csv).map_err(data_err)?;
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    // defaults <- config file <- CLI flags
    let input = match (&args.input.xml, &args.input.posts, &args.input.tags) {
        (Some(xml), None, None) => InputSpec::PostsXml(xml.clone()),
        (None, Some(posts), Some(tags)) => InputSpec::Lines {
            posts: posts.clone(),
            tags: tags.clone(),
        },
        (None, None, None) if args.config.is_some() => {
            // the config file must name the input
            InputSpec::PostsXml(PathBuf::new())
        }
        _ => {
            return Err(CliError::Usage(
                "provide either --xml FILE or --posts FILE --tags FILE".into(),
            ))
        }
    };
    let mut config = ExperimentConfig::new(input, args.out.clone());
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(data_err)?;
        apply_config_file(&mut config, &text).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    // re-apply explicit input flags so they override the file
    if let Some(xml) = &args.input.xml {
        config.input = InputSpec::PostsXml(xml.clone());
    } else if let (Some(posts), Some(tags)) = (&args.input.posts, &args.input.tags) {
        config.input = InputSpec::Lines {
            posts: posts.clone(),
            tags: tags.clone(),
        };
    }
    config.strict_parse = config.strict_parse || args.input.strict;
    config.n_posts_cap = args.input.cap.or(config.n_posts_cap);
    config.output_dir = args.out.clone();
    let flag_pairs: Vec<(&str, Option<String>)> = vec![
        ("k_top_tags", args.k_top_tags.map(|v| v.to_string())),
        ("kernels", args.kernels.clone()),
        ("c", args.c.clone()),
        ("iterations", args.iterations.clone()),
        ("losses", args.losses.clone()),
        ("techniques", args.techniques.clone()),
        ("seed", args.seed.map(|v| v.to_string())),
        ("kfold_k", args.kfold.map(|v| v.to_string())),
        ("split_ratio", args.split_ratio.map(|v| v.to_string())),
    ];
    for (key, value) in flag_pairs.into_iter() {
        if let Some(value) = value {
            apply_config_pair(&mut config, key, &value).map_err(CliError::Usage)?;
        }
    }
    for pair in &args.sets {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{pair}`")))?;
        apply_config_pair(&mut config, key.trim(), value.trim()).map_err(CliError::Usage)?;
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut record = experiment::run_experiment(&config).map_err(data_err)?;
    let written = experiment::emit_tables(&mut record, &config.output_dir).map_err(data_err)?;
    println!(
        "documents {} (train {}, test {}), vocabulary {}, svd rank {}",
        record.n_documents,
        record.n_train,
        record.n_test,
        record.vocabulary_size,
        record.svd_rank
    );
    let mut failures = 0usize;
    for cell in &record.cells {
        match &cell.outcome {
            Ok(m) => println!(
                "{} -> train {:.2}% test {:.2}%",
                describe_cell(&cell.key),
                m.train_error,
                m.test_error
            ),
            Err(e) => {
                failures += 1;
                println!("{} -> failed: {e}", describe_cell(&cell.key));
            }
        }
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    if config.strict_parse && failures > 0 {
        return Err(CliError::Convergence(format!(
            "{failures} grid cell(s) failed in strict mode"
        )));
    }
    Ok(())
}

fn describe_cell(key: &experiment::CellKey) -> String {
    use experiment::CellKind;
    match &key.kind {
        CellKind::KernelSweep { kernel } => format!(
            "svc kernel={} c={} iterations={}",
            kernel.label(),
            key.c,
            key.iterations
        ),
        CellKind::LinearTechnique { technique, loss } => format!(
            "{} loss={} c={} iterations={}",
            technique.label(),
            loss.label(),
            key.c,
            key.iterations
        ),
    }
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.model).map_err(data_err)?;
    let bundle = ModelBundle::read_text(&text).map_err(CliError::Data)?;
    let content = fs::read_to_string(&args.post).map_err(data_err)?;
    let post = RawPost {
        id: 1,
        title: String::new(),
        body_html: content,
        tags: vec![],
    };
    let labels = bundle_predict(&bundle, &post)?;
    for label in labels.iter() {
        println!("{label}");
    }
    Ok(())
}
