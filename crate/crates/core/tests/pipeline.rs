//! End-to-end pipeline checks on the synthetic corpus.

use sxtag_core::experiment::{
    self, apply_config_file, ExperimentConfig, InputSpec, KernelKind, Technique,
};
use sxtag_core::svm::Loss;
use sxtag_core::synthetic::{self, SyntheticOptions};
use sxtag_core::vectorize::FilterPolicy;
use sxtag_core::{ingest, textpipe};

fn small_config(dir: &std::path::Path) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(
        InputSpec::PostsXml(dir.join("unused.xml")),
        dir.to_path_buf(),
    );
    config.k_top_tags = 4;
    config.kfold_k = 3;
    config.kernel_grid = vec![KernelKind::Linear];
    config.c_grid = vec![10.0];
    config.iteration_grid = vec![2000];
    config.technique_grid = vec![Technique::Ovr, Technique::CrammerSinger];
    config.loss_grid = vec![Loss::Hinge, Loss::SquaredHinge];
    config.min_doc_freq = 1;
    config.seed = 13;
    config
}

fn small_corpus() -> Vec<ingest::RawPost> {
    synthetic::generate(&SyntheticOptions {
        n_posts: 120,
        n_tags: 4,
        seed: 99,
    })
}

#[test]
fn experiment_runs_and_emits_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let mut record = experiment::run_experiment_on(small_corpus(), &config).unwrap();

    // 1 kernel cell + 2 techniques × 2 losses
    assert_eq!(record.cells.len(), 5);
    for cell in &record.cells {
        let metrics = cell.outcome.as_ref().expect("cell trained");
        assert!(metrics.train_error >= 0.0 && metrics.train_error <= 100.0);
        assert!(metrics.test_error >= 0.0 && metrics.test_error <= 100.0);
        // k-fold mean equals the arithmetic mean of the folds
        let mean = metrics.cv_fold_accuracy.iter().sum::<f64>()
            / metrics.cv_fold_accuracy.len() as f64;
        assert!((metrics.cv_mean_accuracy - mean).abs() < 1e-12);
        assert_eq!(metrics.cv_fold_accuracy.len(), config.kfold_k);
    }

    let written = experiment::emit_tables(&mut record, dir.path()).unwrap();
    assert!(written.iter().any(|p| p.ends_with("cells.csv")));
    assert!(written.iter().any(|p| p.ends_with("run_record.txt")));
    assert!(written.iter().any(|p| p.ends_with("table_techniques_test.csv")));
    assert_eq!(record.artifacts, written);

    // planted keywords make the linear one-vs-rest cell strong
    let linear_cell = record
        .cells
        .iter()
        .find(|c| matches!(c.key.kind, experiment::CellKind::KernelSweep { .. }))
        .unwrap();
    let metrics = linear_cell.outcome.as_ref().unwrap();
    assert!(
        metrics.test_report.subset_accuracy > 0.7,
        "subset accuracy {}",
        metrics.test_report.subset_accuracy
    );

    // the two Crammer-Singer cells are identical despite the loss flag
    let cs_cells: Vec<_> = record
        .cells
        .iter()
        .filter(|c| {
            matches!(
                c.key.kind,
                experiment::CellKind::LinearTechnique {
                    technique: Technique::CrammerSinger,
                    ..
                }
            )
        })
        .collect();
    assert_eq!(cs_cells.len(), 2);
    let a = cs_cells[0].outcome.as_ref().unwrap();
    let b = cs_cells[1].outcome.as_ref().unwrap();
    assert_eq!(a.train_error.to_bits(), b.train_error.to_bits());
    assert_eq!(a.test_error.to_bits(), b.test_error.to_bits());
}

#[test]
fn experiment_is_byte_deterministic() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut config_a = small_config(dir_a.path());
    config_a.kfold_k = 2;
    config_a.technique_grid = vec![Technique::Ovr];
    config_a.loss_grid = vec![Loss::Hinge];
    let mut config_b = config_a.clone();
    config_b.output_dir = dir_b.path().to_path_buf();

    let mut record_a = experiment::run_experiment_on(small_corpus(), &config_a).unwrap();
    let mut record_b = experiment::run_experiment_on(small_corpus(), &config_b).unwrap();
    assert_eq!(record_a.write_text(), record_b.write_text());

    experiment::emit_tables(&mut record_a, dir_a.path()).unwrap();
    experiment::emit_tables(&mut record_b, dir_b.path()).unwrap();
    for name in ["cells.csv", "run_record.txt", "table_kernels_test.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn fitted_models_ignore_test_documents() {
    let posts = small_corpus();
    let clean = ingest::strip_all(&posts);
    let (_, clean) = ingest::select_labels(&clean, 4).unwrap();
    let pipeline = textpipe::PipelineConfig::default_config();
    let docs: Vec<_> = clean
        .iter()
        .map(|p| textpipe::run_pipeline(p, &pipeline))
        .collect();
    let (train_idx, test_idx) = experiment::split(docs.len(), 0.8, 5).unwrap();

    let fit = |docs: &[sxtag_core::textpipe::TokenDoc]| {
        experiment::fit_projection(docs, FilterPolicy::keep_all(), 0.9, 50, 5).unwrap()
    };
    let train_docs: Vec<_> = train_idx.iter().map(|&i| docs[i].clone()).collect();
    let baseline = fit(&train_docs);

    // replace every test document in turn with junk; the fitted
    // tf-idf and SVD bytes must not move
    let mut mutated = docs.clone();
    for &i in &test_idx {
        mutated[i].tokens = vec!["junkzz".to_string(), "replaced".to_string()];
    }
    let train_docs_again: Vec<_> = train_idx.iter().map(|&i| mutated[i].clone()).collect();
    let refit = fit(&train_docs_again);
    assert_eq!(baseline.tfidf.write_text(), refit.tfidf.write_text());
    assert_eq!(baseline.svd.write_text(), refit.svd.write_text());
}

#[test]
fn single_cell_grid_and_omitted_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.technique_grid = vec![];
    config.kfold_k = 2;
    let mut record = experiment::run_experiment_on(small_corpus(), &config).unwrap();
    // one kernel × one C × one iteration budget -> exactly one cell
    assert_eq!(record.cells.len(), 1);
    assert!(record
        .notes
        .iter()
        .any(|n| n.contains("technique") && n.contains("omitted")));

    let written = experiment::emit_tables(&mut record, dir.path()).unwrap();
    assert!(!written
        .iter()
        .any(|p| p.to_string_lossy().contains("table_techniques")));
    assert!(written.iter().any(|p| p.ends_with("table_kernels_test.csv")));
}

#[test]
fn config_file_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    apply_config_file(&mut config, "seed = 21\nkernels = rbf\nc = 5\n").unwrap();
    assert_eq!(config.seed, 21);
    assert_eq!(config.kernel_grid, vec![KernelKind::Rbf]);
    assert_eq!(config.c_grid, vec![5.0]);
}
