//! Experiment driver: loads a corpus, runs seeded encoder + head trainings
//! and aggregates accuracies into reports and grid tables.
//!
//! With a test split present, one experiment is `folds` independent runs,
//! each re-drawing the filter bank and the shuffle order, training on
//! train+dev and scoring the fixed test split. Without a test split the
//! pooled train+dev data is cross-validated with [`kfold_split`].

pub mod synthetic;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    filter_top_k_intents, kfold_split, parse_intent_tsv, read_embedding_file, toy_embeddings,
    DatasetSplit, EmbeddingSequence, LabeledUtterance,
};
use crate::encoder::{init_filter_bank, EncoderKind, FeatureVector, FilterBank, DEFAULT_MAX_LEN};
use crate::error::{QtcError, Result};
use crate::model::{accuracy, train, TrainConfig};
use crate::rng::SeedStream;

/// The four `(n, k)` cells of the evaluation grid.
pub const GRID_CELLS: [(usize, usize); 4] = [(1, 4), (2, 2), (2, 3), (2, 4)];
pub const GRID_ENCODERS: [EncoderKind; 2] = [EncoderKind::Tcn, EncoderKind::Qtc];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub encoder: EncoderKind,
    pub filters: usize,
    pub kernel: usize,
    pub seed: u64,
    pub folds: usize,
    pub max_len: usize,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderKind::Qtc,
            filters: 2,
            kernel: 4,
            seed: 42,
            folds: 10,
            max_len: DEFAULT_MAX_LEN,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        // shape bounds are owned by the encoder
        init_filter_bank(self.encoder, self.filters, self.kernel, 1, 0)?;
        if self.folds == 0 {
            return Err(QtcError::config("folds must be at least 1"));
        }
        if self.max_len == 0 {
            return Err(QtcError::config("max length must be at least 1"));
        }
        self.train.validate()
    }

    /// Bank and shuffle seeds of run `r`, taken as consecutive pairs from
    /// the experiment's seed stream.
    pub fn run_seeds(&self) -> Vec<(u64, u64)> {
        let mut stream = SeedStream::new(self.seed);
        (0..self.folds)
            .map(|_| (stream.next_u64(), stream.next_u64()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbeddingSource {
    /// Hashed stand-in vectors of dimension `dim`.
    Toy { dim: usize, corpus_seed: u64 },
    /// Precomputed QTCE files, one per split.
    Qtce {
        train: PathBuf,
        dev: Option<PathBuf>,
        test: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub embeddings: EmbeddingSource,
    /// Keep only the most frequent intents of the train split.
    pub top_k_intents: Option<usize>,
}

/// Utterances with their embedding sequences, split-aligned.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub split: DatasetSplit,
    pub train: Vec<EmbeddingSequence>,
    pub dev: Vec<EmbeddingSequence>,
    pub test: Vec<EmbeddingSequence>,
    dim: usize,
}

fn toy_all(
    utts: &[LabeledUtterance],
    dim: usize,
    corpus_seed: u64,
) -> Result<Vec<EmbeddingSequence>> {
    utts.iter()
        .map(|u| toy_embeddings(u, dim, corpus_seed))
        .collect()
}

/// Pairs every utterance with the record of the same id, checking labels.
fn join_records(
    split_name: &str,
    utts: &[LabeledUtterance],
    records: Vec<EmbeddingSequence>,
) -> Result<Vec<EmbeddingSequence>> {
    let mut by_id: HashMap<String, EmbeddingSequence> = HashMap::with_capacity(records.len());
    for r in records {
        let id = r.id().to_string();
        if by_id.insert(id.clone(), r).is_some() {
            return Err(QtcError::Data(format!(
                "{split_name} embeddings contain duplicate id {id}"
            )));
        }
    }
    utts.iter()
        .map(|u| {
            let rec = by_id.remove(&u.id).ok_or_else(|| {
                QtcError::Data(format!(
                    "{split_name} embeddings lack a record for {}",
                    u.id
                ))
            })?;
            if rec.label() != u.label {
                return Err(QtcError::Data(format!(
                    "{split_name} record {} is labeled {} but the corpus says {}",
                    u.id,
                    rec.label(),
                    u.label
                )));
            }
            Ok(rec)
        })
        .collect()
}

impl Corpus {
    pub fn load(source: &DataSource) -> Result<Self> {
        let read = |p: &Option<PathBuf>| -> Result<Vec<LabeledUtterance>> {
            p.as_ref().map_or(Ok(Vec::new()), parse_intent_tsv)
        };
        let train = parse_intent_tsv(&source.train)?;
        let dev = read(&source.dev)?;
        let test = read(&source.test)?;
        let split = match source.top_k_intents {
            Some(k) => filter_top_k_intents(train, dev, test, k)?,
            None => DatasetSplit::new(train, dev, test),
        };
        match &source.embeddings {
            EmbeddingSource::Toy { dim, corpus_seed } => Self::with_toy(split, *dim, *corpus_seed),
            EmbeddingSource::Qtce { train, dev, test } => {
                let load = |name: &str, path: &Option<PathBuf>, n: usize| match path {
                    Some(p) => read_embedding_file(p),
                    None if n == 0 => Ok(Vec::new()),
                    None => Err(QtcError::config(format!(
                        "the {name} split needs an embeddings file"
                    ))),
                };
                let train_rec = read_embedding_file(train)?;
                let dev_rec = load("dev", dev, split.dev.len())?;
                let test_rec = load("test", test, split.test.len())?;
                Self::with_embeddings(split, train_rec, dev_rec, test_rec)
            }
        }
    }

    pub fn with_toy(split: DatasetSplit, dim: usize, corpus_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(QtcError::config(
                "toy embedding dimension must be at least 1",
            ));
        }
        let train = toy_all(&split.train, dim, corpus_seed)?;
        let dev = toy_all(&split.dev, dim, corpus_seed)?;
        let test = toy_all(&split.test, dim, corpus_seed)?;
        Ok(Self {
            split,
            train,
            dev,
            test,
            dim,
        })
    }

    /// Joins precomputed records onto the split by utterance id. Records
    /// for utterances absent from the split are ignored.
    pub fn with_embeddings(
        split: DatasetSplit,
        train: Vec<EmbeddingSequence>,
        dev: Vec<EmbeddingSequence>,
        test: Vec<EmbeddingSequence>,
    ) -> Result<Self> {
        let train = join_records("train", &split.train, train)?;
        let dev = join_records("dev", &split.dev, dev)?;
        let test = join_records("test", &split.test, test)?;
        let dim = train
            .iter()
            .chain(&dev)
            .chain(&test)
            .map(EmbeddingSequence::dim)
            .next()
            .ok_or_else(|| QtcError::Data("corpus has no utterances".into()))?;
        if let Some(bad) = train
            .iter()
            .chain(&dev)
            .chain(&test)
            .find(|s| s.dim() != dim)
        {
            return Err(QtcError::Data(format!(
                "record {} has dimension {} but the corpus uses {dim}",
                bad.id(),
                bad.dim()
            )));
        }
        Ok(Self {
            split,
            train,
            dev,
            test,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn labeled(&self, utts: &[LabeledUtterance]) -> Vec<usize> {
        utts.iter()
            .map(|u| {
                self.split
                    .class_of(&u.label)
                    .expect("label index covers all splits")
            })
            .collect()
    }
}

/// Features for every sequence, extracted in parallel. Output order
/// follows input order.
pub fn extract_features(
    bank: &FilterBank,
    seqs: &[EmbeddingSequence],
    max_len: usize,
) -> Result<Vec<FeatureVector>> {
    seqs.par_iter().map(|s| bank.features(s, max_len)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Independent seeded runs scored on the fixed test split.
    SeededRuns,
    /// K-fold cross-validation over train+dev.
    KFold,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::SeededRuns => "seeded-runs",
            Protocol::KFold => "k-fold",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ExperimentConfig,
    pub protocol: Protocol,
    pub embedding_dim: usize,
    pub num_classes: usize,
    /// Accuracy (fraction correct) of each run.
    pub runs: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `runs`.
    pub std: f64,
    /// Accuracy of always predicting the most frequent training label.
    pub majority_baseline: f64,
    pub wall_time_s: f64,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl MetricsReport {
    /// Recomputes `mean` and `std` from `runs` and checks ranges.
    pub fn check_consistency(&self) -> Result<()> {
        if self.runs.len() != self.config.folds {
            return Err(QtcError::Data(format!(
                "report has {} runs but {} folds",
                self.runs.len(),
                self.config.folds
            )));
        }
        if self.runs.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(QtcError::Data("run accuracy outside [0, 1]".into()));
        }
        let (mean, std) = mean_std(&self.runs);
        if (mean - self.mean).abs() > 1e-12 || (std - self.std).abs() > 1e-12 {
            return Err(QtcError::Data(format!(
                "report mean/std ({}, {}) disagree with runs ({mean}, {std})",
                self.mean, self.std
            )));
        }
        Ok(())
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn majority_class(labels: &[usize], classes: usize) -> usize {
    let mut counts = vec![0usize; classes];
    for &l in labels {
        counts[l] += 1;
    }
    // lowest index wins ties
    counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map_or(0, |(i, _)| i)
}

fn fraction_of(labels: &[usize], class: usize) -> f64 {
    labels.iter().filter(|&&l| l == class).count() as f64 / labels.len() as f64
}

pub fn run_experiment(source: &DataSource, config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    let corpus = Corpus::load(source)?;
    run_experiment_on(&corpus, config)
}

pub fn run_experiment_on(corpus: &Corpus, config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    let started = Instant::now();
    let classes = corpus.split.num_classes();
    if classes < 2 {
        return Err(QtcError::config(format!(
            "need at least 2 intent classes (got {classes})"
        )));
    }

    let pool_seqs: Vec<EmbeddingSequence> =
        corpus.train.iter().chain(&corpus.dev).cloned().collect();
    let pool_utts: Vec<LabeledUtterance> = corpus
        .split
        .train
        .iter()
        .chain(&corpus.split.dev)
        .cloned()
        .collect();
    let pool_labels = corpus.labeled(&pool_utts);
    if pool_labels.is_empty() {
        return Err(QtcError::Data("no training utterances".into()));
    }
    let test_labels = corpus.labeled(&corpus.split.test);

    let seeds = config.run_seeds();
    let build = |bank_seed: u64| {
        init_filter_bank(
            config.encoder,
            config.filters,
            config.kernel,
            corpus.dim,
            bank_seed,
        )
    };
    let mut runs = Vec::with_capacity(config.folds);
    let protocol;
    let majority_baseline;

    if !test_labels.is_empty() {
        protocol = Protocol::SeededRuns;
        let majority = majority_class(&pool_labels, classes);
        majority_baseline = fraction_of(&test_labels, majority);
        for &(bank_seed, shuffle_seed) in &seeds {
            let bank = build(bank_seed)?;
            let train_set: Vec<(FeatureVector, usize)> =
                extract_features(&bank, &pool_seqs, config.max_len)?
                    .into_iter()
                    .zip(pool_labels.iter().copied())
                    .collect();
            let test_set: Vec<(FeatureVector, usize)> =
                extract_features(&bank, &corpus.test, config.max_len)?
                    .into_iter()
                    .zip(test_labels.iter().copied())
                    .collect();
            let head = train(
                &train_set,
                classes,
                &TrainConfig {
                    shuffle_seed,
                    ..config.train
                },
            )?;
            runs.push(accuracy(&head, &test_set)?);
        }
    } else {
        protocol = Protocol::KFold;
        let folds = kfold_split(pool_labels.len(), config.folds, config.seed)?;
        let mut baselines = Vec::with_capacity(folds.len());
        for ((bank_seed, shuffle_seed), (train_idx, held_idx)) in seeds.iter().zip(&folds) {
            let bank = build(*bank_seed)?;
            let feats = extract_features(&bank, &pool_seqs, config.max_len)?;
            let pick = |idx: &[usize]| -> Vec<(&[f64], usize)> {
                idx.iter()
                    .map(|&i| (feats[i].values.as_slice(), pool_labels[i]))
                    .collect()
            };
            let train_set = pick(train_idx);
            let held_set = pick(held_idx);
            let head = train(
                &train_set,
                classes,
                &TrainConfig {
                    shuffle_seed: *shuffle_seed,
                    ..config.train
                },
            )?;
            runs.push(accuracy(&head, &held_set)?);
            let train_labels: Vec<usize> = train_idx.iter().map(|&i| pool_labels[i]).collect();
            let held_labels: Vec<usize> = held_idx.iter().map(|&i| pool_labels[i]).collect();
            baselines.push(fraction_of(
                &held_labels,
                majority_class(&train_labels, classes),
            ));
        }
        majority_baseline = mean_std(&baselines).0;
    }

    let (mean, std) = mean_std(&runs);
    let report = MetricsReport {
        config: *config,
        protocol,
        embedding_dim: corpus.dim,
        num_classes: classes,
        runs,
        mean,
        std,
        majority_baseline,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    report.check_consistency()?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub encoder: EncoderKind,
    pub filters: usize,
    pub kernel: usize,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
}

/// Runs every encoder over the four `(n, k)` cells with the rest of
/// `base` unchanged.
pub fn run_grid(corpus: &Corpus, base: &ExperimentConfig) -> Result<GridReport> {
    let mut cells = Vec::with_capacity(GRID_ENCODERS.len() * GRID_CELLS.len());
    for encoder in GRID_ENCODERS {
        for (filters, kernel) in GRID_CELLS {
            let config = ExperimentConfig {
                encoder,
                filters,
                kernel,
                ..*base
            };
            let report = run_experiment_on(corpus, &config)
                .map_err(|e| e.context(format!("grid cell {encoder} (n={filters}, k={kernel})")))?;
            cells.push(GridCell {
                encoder,
                filters,
                kernel,
                report,
            });
        }
    }
    Ok(GridReport { cells })
}

impl GridReport {
    pub fn cell(&self, encoder: EncoderKind, filters: usize, kernel: usize) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.encoder == encoder && c.filters == filters && c.kernel == kernel)
    }

    /// Mean accuracy in percent, rows per encoder, columns per `(n, k)`.
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<8}", "(n,k)");
        for (n, k) in GRID_CELLS {
            let _ = write!(out, "{:>9}", format!("({n},{k})"));
        }
        out.push('\n');
        for encoder in GRID_ENCODERS {
            let _ = write!(out, "{:<8}", encoder.to_string().to_uppercase());
            for (n, k) in GRID_CELLS {
                match self.cell(encoder, n, k) {
                    Some(c) => {
                        let _ = write!(out, "{:>9.2}", c.report.mean * 100.0);
                    }
                    None => {
                        let _ = write!(out, "{:>9}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// One line of a feature dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub label: String,
    pub features: Vec<f64>,
}

/// Writes `{id, label, features}` JSON Lines for every sequence.
pub fn write_feature_dump(
    path: impl AsRef<Path>,
    bank: &FilterBank,
    seqs: &[EmbeddingSequence],
    max_len: usize,
) -> Result<()> {
    let feats = extract_features(bank, seqs, max_len)?;
    let mut w = BufWriter::new(File::create(path)?);
    for (s, f) in seqs.iter().zip(feats) {
        let rec = FeatureRecord {
            id: s.id().to_string(),
            label: s.label().to_string(),
            features: f.values,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
