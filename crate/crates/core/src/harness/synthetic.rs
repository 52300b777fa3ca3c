//! A small keyword corpus for exercising the full pipeline without any
//! external data.

use crate::data::{DatasetSplit, LabeledUtterance};
use crate::rng::SeedStream;

const FILLER: &[&str] = &[
    "please", "the", "a", "now", "for", "me", "can", "you", "i", "want", "to", "some", "this",
    "that", "my",
];

#[derive(Debug, Clone, Copy)]
pub struct KeywordCorpusSpec {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Inclusive range of filler words per utterance.
    pub filler: (usize, usize),
    pub seed: u64,
}

impl Default for KeywordCorpusSpec {
    /// 7 classes, 140 train and 70 test utterances.
    fn default() -> Self {
        Self {
            classes: 7,
            train_per_class: 20,
            test_per_class: 10,
            filler: (0, 2),
            seed: 2021,
        }
    }
}

/// Each class `c` owns two keywords, `kw{c}a` and `kw{c}b`. Every utterance
/// opens with both of its class keywords and trails off into a few shared
/// filler words. Labels are `intent{c}`.
pub fn keyword_corpus(spec: &KeywordCorpusSpec) -> DatasetSplit {
    let mut stream = SeedStream::new(spec.seed);
    let mut make = |split: &str, per_class: usize| {
        let mut out = Vec::with_capacity(spec.classes * per_class);
        for c in 0..spec.classes {
            for i in 0..per_class {
                let (lo, hi) = spec.filler;
                let n_filler = lo + (stream.next_u64() % (hi - lo + 1) as u64) as usize;
                let mut tokens = vec![format!("kw{c}a"), format!("kw{c}b")];
                for _ in 0..n_filler {
                    let w = FILLER[(stream.next_u64() % FILLER.len() as u64) as usize];
                    tokens.push(w.to_string());
                }
                out.push(LabeledUtterance {
                    id: format!("{split}-{c}-{i}"),
                    tokens,
                    label: format!("intent{c}"),
                });
            }
        }
        out
    };
    let train = make("train", spec.train_per_class);
    let test = make("test", spec.test_per_class);
    DatasetSplit::new(train, Vec::new(), test)
}

/// TSV rendering of utterances, one `tokens<TAB>label` per line.
pub fn to_tsv(utterances: &[LabeledUtterance]) -> String {
    utterances
        .iter()
        .map(|u| format!("{}\t{}\n", u.tokens.join(" "), u.label))
        .collect()
}
