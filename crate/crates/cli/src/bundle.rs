//! Self-contained predictor bundle: pipeline settings, fitted tf-idf
//! and SVD models, the label catalog, and the trained classifier in
//! one text file.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use sxtag_core::ingest::LabelCatalog;
use sxtag_core::multilabel::OvrModel;
use sxtag_core::svm::CsModel;
use sxtag_core::textio::{Lines, TextIoError};
use sxtag_core::textpipe::PipelineConfig;
use sxtag_core::{SvdModel, TfIdfModel};

pub enum Classifier {
    Ovr(OvrModel),
    CrammerSinger(CsModel),
}

pub struct ModelBundle {
    pub pipeline: PipelineConfig,
    pub tfidf: TfIdfModel,
    pub svd: SvdModel,
    pub catalog: LabelCatalog,
    pub classifier: Classifier,
}

impl ModelBundle {
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sxtag bundle v1");
        let _ = writeln!(out, "begin pipeline");
        let _ = writeln!(
            out,
            "stemming {}",
            u8::from(self.pipeline.enable_stemming)
        );
        let _ = writeln!(
            out,
            "lemmatization {}",
            u8::from(self.pipeline.enable_lemmatization)
        );
        let mut stopwords: Vec<&String> = self.pipeline.stopwords().iter().collect();
        stopwords.sort();
        for word in stopwords {
            let _ = writeln!(out, "stopword {word}");
        }
        let mut preserve: Vec<&String> = self.pipeline.preserve_terms().iter().collect();
        preserve.sort();
        for term in preserve {
            let _ = writeln!(out, "preserve {term}");
        }
        let mut lemmas: Vec<(&String, &String)> =
            self.pipeline.lemma_exceptions().iter().collect();
        lemmas.sort();
        for (form, lemma) in lemmas {
            let _ = writeln!(out, "lemma {form} {lemma}");
        }
        let _ = writeln!(out, "end pipeline");
        let _ = writeln!(out, "begin catalog {}", self.catalog.len());
        for (label, count) in self.catalog.labels.iter().zip(&self.catalog.counts) {
            let _ = writeln!(out, "label {count} {label}");
        }
        let _ = writeln!(out, "end catalog");
        out.push_str(&self.tfidf.write_text());
        out.push_str(&self.svd.write_text());
        match &self.classifier {
            Classifier::Ovr(model) => {
                let _ = writeln!(out, "classifier ovr");
                out.push_str(&model.write_text());
            }
            Classifier::CrammerSinger(model) => {
                let _ = writeln!(out, "classifier cs");
                out.push_str(&model.write_text());
            }
        }
        let _ = writeln!(out, "end bundle");
        out
    }

    pub fn read_text(text: &str) -> Result<Self, String> {
        let mut lines = Lines::new(text);
        let parse = |e: TextIoError| e.to_string();
        lines.expect_exact("sxtag bundle v1").map_err(parse)?;
        lines.expect_exact("begin pipeline").map_err(parse)?;
        let stemming: u8 = lines.tagged_value("stemming").map_err(parse)?;
        let lemmatization: u8 = lines.tagged_value("lemmatization").map_err(parse)?;
        let mut stopwords = HashSet::new();
        let mut preserve = HashSet::new();
        let mut lemmas = HashMap::new();
        loop {
            let line = lines.next_line().map_err(parse)?;
            if line == "end pipeline" {
                break;
            }
            if let Some(word) = line.strip_prefix("stopword ") {
                stopwords.insert(word.to_string());
            } else if let Some(term) = line.strip_prefix("preserve ") {
                preserve.insert(term.to_string());
            } else if let Some(rest) = line.strip_prefix("lemma ") {
                let (form, lemma) = rest
                    .split_once(' ')
                    .ok_or_else(|| "lemma line needs form and lemma".to_string())?;
                lemmas.insert(form.to_string(), lemma.to_string());
            } else {
                return Err(format!("unexpected pipeline line `{line}`"));
            }
        }
        let pipeline = PipelineConfig::new(
            stopwords,
            preserve,
            lemmas,
            stemming != 0,
            lemmatization != 0,
        )
        .map_err(|e| e.to_string())?;

        let n_labels: usize = lines.tagged_value("begin catalog").map_err(parse)?;
        let mut labels = Vec::with_capacity(n_labels);
        let mut counts = Vec::with_capacity(n_labels);
        for _ in 0..n_labels {
            let rest = lines.expect_tagged("label").map_err(parse)?;
            let (count, label) = rest
                .split_once(' ')
                .ok_or_else(|| "label line needs count and name".to_string())?;
            counts.push(count.parse::<usize>().map_err(|_| "bad label count")?);
            labels.push(label.to_string());
        }
        lines.expect_exact("end catalog").map_err(parse)?;
        let catalog = LabelCatalog { labels, counts };

        let tfidf = TfIdfModel::read_from(&mut lines).map_err(|e| e.to_string())?;
        let svd = SvdModel::read_from(&mut lines).map_err(|e| e.to_string())?;
        let kind = lines.expect_tagged("classifier").map_err(parse)?;
        let classifier = match kind {
            "ovr" => Classifier::Ovr(OvrModel::read_from(&mut lines).map_err(|e| e.to_string())?),
            "cs" => Classifier::CrammerSinger(
                CsModel::read_from(&mut lines).map_err(|e| e.to_string())?,
            ),
            other => return Err(format!("unknown classifier kind `{other}`")),
        };
        lines.expect_exact("end bundle").map_err(parse)?;
        Ok(ModelBundle {
            pipeline,
            tfidf,
            svd,
            catalog,
            classifier,
        })
    }
}
