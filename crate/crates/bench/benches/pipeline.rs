//! Pipeline stage benchmarks on the synthetic corpus.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use sxtag_bench::fixture;
use sxtag_core::multilabel::{train_ovr, DecisionRule, TrainerChoice};
use sxtag_core::svd::truncated_svd;
use sxtag_core::svm::{train_crammer_singer, KernelSpec, TrainConfig};
use sxtag_core::textpipe::{porter_stem, run_pipeline, PipelineConfig};
use sxtag_core::vectorize::{build_matrix, fit, FilterPolicy};
use sxtag_core::{ingest, synthetic};

fn bench_textpipe(c: &mut Criterion) {
    let posts = synthetic::generate(&synthetic::SyntheticOptions {
        n_posts: 200,
        n_tags: 10,
        seed: 5,
    });
    let clean = ingest::strip_all(&posts);
    let config = PipelineConfig::default_config();

    c.bench_function("strip_html_200_posts", |b| {
        b.iter(|| black_box(ingest::strip_all(black_box(&posts))))
    });
    c.bench_function("tokenize_stem_200_posts", |b| {
        b.iter(|| {
            for post in &clean {
                black_box(run_pipeline(black_box(post), &config));
            }
        })
    });
    let words = ["generalizations", "oscillators", "relational", "hopping", "controlled"];
    c.bench_function("porter_stem_5_words", |b| {
        b.iter(|| {
            for w in words {
                black_box(porter_stem(black_box(w)));
            }
        })
    });
}

fn bench_vectorize_svd(c: &mut Criterion) {
    let fx = fixture(400, 10);
    c.bench_function("tfidf_fit_400_docs", |b| {
        b.iter(|| black_box(fit(black_box(&fx.docs), FilterPolicy::default()).unwrap()))
    });
    let model = fit(&fx.docs, FilterPolicy::default()).unwrap();
    let matrix = build_matrix(&fx.docs, &model);
    c.bench_function("build_matrix_400_docs", |b| {
        b.iter(|| black_box(build_matrix(black_box(&fx.docs), &model)))
    });
    c.bench_function("truncated_svd_rank20", |b| {
        b.iter(|| {
            black_box(
                truncated_svd(black_box(&matrix), 20.min(matrix.n_rows().min(matrix.n_cols())), 3)
                    .unwrap(),
            )
        })
    });
}

fn bench_trainers(c: &mut Criterion) {
    let fx = fixture(300, 6);
    let config = TrainConfig {
        c: 10.0,
        max_iterations: 20_000,
        tolerance: 1e-4,
        ..TrainConfig::default()
    };

    let mut group = c.benchmark_group("trainers");
    group.sample_size(10);
    group.bench_function("ovr_linear_dcd", |b| {
        b.iter(|| {
            black_box(
                train_ovr(
                    &fx.features,
                    &fx.label_sets,
                    &fx.catalog,
                    &TrainerChoice::LinearDcd,
                    &config,
                    DecisionRule::default(),
                )
                .unwrap(),
            )
        })
    });
    group.bench_function("ovr_smo_rbf", |b| {
        let kernel = KernelSpec::Rbf {
            gamma: KernelSpec::default_gamma(fx.features.n_cols()),
        };
        b.iter(|| {
            black_box(
                train_ovr(
                    &fx.features,
                    &fx.label_sets,
                    &fx.catalog,
                    &TrainerChoice::Smo(kernel),
                    &config,
                    DecisionRule::default(),
                )
                .unwrap(),
            )
        })
    });
    group.bench_function("crammer_singer", |b| {
        let labels: Vec<usize> = fx
            .label_sets
            .iter()
            .map(|s| {
                fx.catalog
                    .labels
                    .iter()
                    .position(|l| s.contains(l))
                    .unwrap()
            })
            .collect();
        b.iter(|| {
            black_box(
                train_crammer_singer(&fx.features, &labels, fx.catalog.len(), &config).unwrap(),
            )
        })
    });
    group.finish();
}

criterion_group!(benches, bench_textpipe, bench_vectorize_svd, bench_trainers);
criterion_main!(benches);
