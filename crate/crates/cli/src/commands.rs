use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qtc_core::data::{read_embedding_file, write_embedding_file};
use qtc_core::harness::{extract_features, run_experiment, run_grid, write_feature_dump, Corpus};
use qtc_core::model::{accuracy, train as fit};
use qtc_core::{
    init_filter_bank, EmbeddingSequence, ExperimentConfig, FilterBank, QtcError, SoftmaxHead,
    TrainConfig,
};

use crate::args::{
    experiment, DumpFormat, EncoderArgs, EvalArgs, FeaturesArgs, PredictArgs, TrainArgs,
};

/// `out.qtce` with tag `dev` becomes `out.dev.qtce`.
fn sibling(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    out.with_file_name(name)
}

fn dump_format(requested: Option<DumpFormat>, out: &Path) -> DumpFormat {
    requested.unwrap_or_else(|| match out.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "json") => DumpFormat::Jsonl,
        _ => DumpFormat::Qtce,
    })
}

/// The bank of the first seeded run, shared by `train`, `predict` and the
/// JSONL feature dump.
fn first_run_bank(config: &ExperimentConfig, dim: usize) -> Result<(FilterBank, u64)> {
    let (bank_seed, shuffle_seed) = config.run_seeds()[0];
    let bank = init_filter_bank(
        config.encoder,
        config.filters,
        config.kernel,
        dim,
        bank_seed,
    )?;
    Ok((bank, shuffle_seed))
}

fn single_run(encoder: &EncoderArgs) -> ExperimentConfig {
    ExperimentConfig {
        encoder: encoder.encoder,
        filters: encoder.filters,
        kernel: encoder.kernel,
        seed: encoder.seed,
        folds: 1,
        max_len: encoder.max_len,
        train: TrainConfig::default(),
    }
}

pub fn features(a: &FeaturesArgs) -> Result<()> {
    let config = single_run(&a.encoder);
    let format = dump_format(a.format, &a.out);
    if format == DumpFormat::Jsonl {
        config.validate()?;
    }
    let corpus = Corpus::load(&a.data.source())?;
    let splits = [
        (None, &corpus.train, true),
        (Some("dev"), &corpus.dev, a.data.dev.is_some()),
        (Some("test"), &corpus.test, a.data.test.is_some()),
    ];
    let bank = match format {
        DumpFormat::Jsonl => Some(first_run_bank(&config, corpus.dim())?.0),
        DumpFormat::Qtce => None,
    };
    for (tag, seqs, present) in splits {
        if !present {
            continue;
        }
        let path = tag.map_or_else(|| a.out.clone(), |t| sibling(&a.out, t));
        match &bank {
            Some(bank) => write_feature_dump(&path, bank, seqs, config.max_len),
            None => write_embedding_file(&path, seqs),
        }
        .with_context(|| format!("writing {}", path.display()))?;
        println!("{} records -> {}", seqs.len(), path.display());
    }
    Ok(())
}

fn class_indices(corpus: &Corpus, seqs: &[EmbeddingSequence]) -> Vec<usize> {
    seqs.iter()
        .map(|s| {
            corpus
                .split
                .class_of(s.label())
                .expect("labels come from the split")
        })
        .collect()
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let config = experiment(&a.encoder, &a.training, 1);
    config.validate()?;
    let corpus = Corpus::load(&a.data.source())?;
    let classes = corpus.split.num_classes();
    if classes < 2 {
        return Err(
            QtcError::Config(format!("need at least 2 intent classes (got {classes})")).into(),
        );
    }
    let (bank, shuffle_seed) = first_run_bank(&config, corpus.dim())?;
    let pool: Vec<EmbeddingSequence> = corpus.train.iter().chain(&corpus.dev).cloned().collect();
    let data: Vec<_> = extract_features(&bank, &pool, config.max_len)?
        .into_iter()
        .zip(class_indices(&corpus, &pool))
        .collect();
    let head = fit(
        &data,
        classes,
        &TrainConfig {
            shuffle_seed,
            ..config.train
        },
    )?
    .with_labels(corpus.split.labels())?;
    head.save_json(&a.head)
        .with_context(|| format!("writing {}", a.head.display()))?;
    println!(
        "trained {} head on {} utterances ({} classes, {} features) -> {}",
        config.encoder,
        data.len(),
        classes,
        head.features(),
        a.head.display()
    );
    println!("train accuracy {:.4}", accuracy(&head, &data)?);
    if !corpus.test.is_empty() {
        let test: Vec<_> = extract_features(&bank, &corpus.test, config.max_len)?
            .into_iter()
            .zip(class_indices(&corpus, &corpus.test))
            .collect();
        println!("test accuracy {:.4}", accuracy(&head, &test)?);
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let config = experiment(&a.encoder, &a.training, a.folds);
    let report = run_experiment(&a.data.source(), &config)?;
    println!(
        "{} (n={}, k={}) {}: mean {:.2}% ± {:.2}% over {} runs, majority baseline {:.2}%",
        config.encoder,
        config.filters,
        config.kernel,
        report.protocol,
        report.mean * 100.0,
        report.std * 100.0,
        report.runs.len(),
        report.majority_baseline * 100.0
    );
    if let Some(out) = &a.out {
        report
            .save_json(out)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

pub fn grid(a: &EvalArgs) -> Result<()> {
    let base = experiment(&a.encoder, &a.training, a.folds);
    base.train.validate()?;
    let corpus = Corpus::load(&a.data.source())?;
    let report = run_grid(&corpus, &base)?;
    print!("{}", report.render_table());
    if let Some(out) = &a.out {
        report
            .save_json(out)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let config = single_run(&a.encoder);
    config.validate()?;
    let head =
        SoftmaxHead::load_json(&a.head).with_context(|| format!("reading {}", a.head.display()))?;
    let seqs = read_embedding_file(&a.embeddings)
        .with_context(|| format!("reading {}", a.embeddings.display()))?;
    let mut sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let Some(first) = seqs.first() else {
        return Ok(());
    };
    let (bank, _) = first_run_bank(&config, first.dim())?;
    if bank.feature_len() != head.features() {
        return Err(QtcError::Shape {
            context: "head features",
            expected: bank.feature_len(),
            actual: head.features(),
        }
        .into());
    }
    let mut matched = 0usize;
    for (seq, f) in seqs
        .iter()
        .zip(extract_features(&bank, &seqs, config.max_len)?)
    {
        let class = head.predict_class(&f.values)?;
        let label = head
            .labels()
            .get(class)
            .cloned()
            .unwrap_or_else(|| class.to_string());
        matched += usize::from(label == seq.label());
        writeln!(sink, "{}\t{}", seq.id(), label)?;
    }
    sink.flush()?;
    eprintln!(
        "{} records, {} predictions agree with the stored labels",
        seqs.len(),
        matched
    );
    Ok(())
}
