//! Intent corpora, splits and per-token embeddings.
//!
//! Corpora are UTF-8 TSV files with one `utterance<TAB>intent` per line.
//! Embeddings arrive either precomputed in the QTCE binary format (see
//! [`qtce`]) or from [`toy_embeddings`], a hashed stand-in that needs no
//! external model.

pub mod qtce;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::rng::{mix, SeedStream};

pub use qtce::{read_embedding_file, write_embedding_file};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledUtterance {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: String,
}

/// A `T × D` matrix of per-token embeddings for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    id: String,
    label: String,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingSequence {
    /// `values` is row-major with `dim` columns; its length fixes `T`.
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        dim: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(QtcError::config("embedding dimension must be at least 1"));
        }
        if values.len() % dim != 0 {
            return Err(QtcError::Data(format!(
                "{} embedding values do not form rows of width {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QtcError::Data(
                "embedding contains non-finite values".into(),
            ));
        }
        Ok(Self {
            id: id.into(),
            label: label.into(),
            dim,
            values,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Token count `T`.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }

    /// Keeps only the first `max_len` tokens.
    pub fn truncated(&self, max_len: usize) -> Self {
        let keep = self.len().min(max_len) * self.dim;
        Self {
            id: self.id.clone(),
            label: self.label.clone(),
            dim: self.dim,
            values: self.values[..keep].to_vec(),
        }
    }
}

/// Train/dev/test utterances with a shared label index.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledUtterance>,
    pub dev: Vec<LabeledUtterance>,
    pub test: Vec<LabeledUtterance>,
    label_index: BTreeMap<String, usize>,
}

impl DatasetSplit {
    /// Indexes labels in lexicographic order, so the mapping depends only on
    /// the label set.
    pub fn new(
        train: Vec<LabeledUtterance>,
        dev: Vec<LabeledUtterance>,
        test: Vec<LabeledUtterance>,
    ) -> Self {
        let mut labels: Vec<&str> = train
            .iter()
            .chain(&dev)
            .chain(&test)
            .map(|u| u.label.as_str())
            .collect();
        labels.sort_unstable();
        labels.dedup();
        let label_index = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l.to_string(), i))
            .collect();
        Self {
            train,
            dev,
            test,
            label_index,
        }
    }

    pub fn label_index(&self) -> &BTreeMap<String, usize> {
        &self.label_index
    }

    pub fn class_of(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn num_classes(&self) -> usize {
        self.label_index.len()
    }

    /// Label names ordered by class index.
    pub fn labels(&self) -> Vec<String> {
        self.label_index.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parses TSV text. Blank lines are skipped but still counted, so ids and
/// error messages carry physical line numbers.
pub fn parse_intent_text(text: &str) -> Result<Vec<LabeledUtterance>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (utterance, label) = match (parts.next(), parts.next(), parts.next()) {
            (Some(u), Some(l), None) => (u, l.trim()),
            _ => {
                return Err(QtcError::Parse {
                    line: line_no,
                    message: "expected exactly one TAB separating utterance and intent".into(),
                })
            }
        };
        if label.is_empty() {
            return Err(QtcError::Parse {
                line: line_no,
                message: "empty intent label".into(),
            });
        }
        out.push(LabeledUtterance {
            id: format!("line-{line_no}"),
            tokens: utterance
                .split_whitespace()
                .map(str::to_lowercase)
                .collect(),
            label: label.to_string(),
        });
    }
    Ok(out)
}

pub fn parse_intent_tsv(path: impl AsRef<Path>) -> Result<Vec<LabeledUtterance>> {
    let text = fs::read_to_string(path)?;
    parse_intent_text(&text)
}

/// Keeps the `k` most frequent intents of the train split (ties broken by
/// label) and drops every other utterance from all three splits.
pub fn filter_top_k_intents(
    train: Vec<LabeledUtterance>,
    dev: Vec<LabeledUtterance>,
    test: Vec<LabeledUtterance>,
    k: usize,
) -> Result<DatasetSplit> {
    if k == 0 {
        return Err(QtcError::config("top-k intent filter needs k >= 1"));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for u in &train {
        *counts.entry(u.label.as_str()).or_default() += 1;
    }
    if counts.len() < k {
        return Err(QtcError::config(format!(
            "requested top {k} intents but the train split has only {}",
            counts.len()
        )));
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let keep: Vec<String> = ranked[..k].iter().map(|(l, _)| l.to_string()).collect();

    let retain = |v: Vec<LabeledUtterance>| -> Vec<LabeledUtterance> {
        v.into_iter().filter(|u| keep.contains(&u.label)).collect()
    };
    Ok(DatasetSplit::new(retain(train), retain(dev), retain(test)))
}

/// `(train_indices, heldout_indices)` for each fold.
pub type Fold = (Vec<usize>, Vec<usize>);

/// Shuffles `0..num_items` with `seed` and cuts it into `folds` contiguous
/// heldout blocks whose sizes differ by at most one (larger blocks first).
pub fn kfold_split(num_items: usize, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if folds < 2 {
        return Err(QtcError::Argument(format!(
            "k-fold split needs at least 2 folds (got {folds})"
        )));
    }
    if num_items < folds {
        return Err(QtcError::Argument(format!(
            "cannot split {num_items} items into {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..num_items).collect();
    SeedStream::new(seed).shuffle(&mut order);

    let base = num_items / folds;
    let extra = num_items % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let heldout = order[start..start + size].to_vec();
        let train = order[..start]
            .iter()
            .chain(&order[start + size..])
            .copied()
            .collect();
        out.push((train, heldout));
        start += size;
    }
    Ok(out)
}

/// FNV-1a 64-bit hash of the token's UTF-8 bytes.
pub fn token_hash(token: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(token.as_bytes());
    h.finish()
}

/// Deterministic stand-in embedding for a single token: `dim` draws from
/// `Normal(0, σ²)` with variance `σ² = 1/√dim`, seeded by the token hash.
pub fn toy_token_vector(token: &str, dim: usize, corpus_seed: u64) -> Vec<f32> {
    let mut stream = SeedStream::new(mix(corpus_seed ^ token_hash(token)));
    let scale = (dim as f64).powf(-0.25);
    (0..dim).map(|_| (stream.normal() * scale) as f32).collect()
}

/// Embeds every token of `utt` with [`toy_token_vector`].
pub fn toy_embeddings(
    utt: &LabeledUtterance,
    dim: usize,
    corpus_seed: u64,
) -> Result<EmbeddingSequence> {
    let mut values = Vec::with_capacity(utt.tokens.len() * dim);
    for token in &utt.tokens {
        values.extend(toy_token_vector(token, dim, corpus_seed));
    }
    EmbeddingSequence::new(utt.id.clone(), utt.label.clone(), dim, values)
}
