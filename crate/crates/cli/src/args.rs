use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use qtc_core::harness::{DataSource, EmbeddingSource};
use qtc_core::model::Optimizer;
use qtc_core::{EncoderKind, ExperimentConfig, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "qtc",
    version,
    about = "Quantum temporal convolution for intent classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump embeddings (QTCE) or pooled filter features (JSON Lines).
    Features(FeaturesArgs),
    /// Train a softmax head on train+dev and save it as JSON.
    Train(TrainArgs),
    /// Run a seeded experiment and report accuracy over all runs.
    Eval(EvalArgs),
    /// Run both encoders over the (n, k) grid and print the accuracy table.
    Grid(EvalArgs),
    /// Label the records of a QTCE file with a trained head.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["embeddings", "toy_dim"])))]
pub struct DataArgs {
    /// Training utterances, one `tokens<TAB>label` per line.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// QTCE embeddings for the train split.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "embeddings")]
    pub dev_embeddings: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "embeddings")]
    pub test_embeddings: Option<PathBuf>,
    /// Use hashed toy embeddings of dimension D instead of QTCE files.
    #[arg(long, value_name = "D")]
    pub toy_dim: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "toy_dim")]
    pub toy_seed: u64,
    /// Keep only the K most frequent training intents.
    #[arg(long = "top-k", value_name = "K")]
    pub top_k: Option<usize>,
}

impl DataArgs {
    pub fn source(&self) -> DataSource {
        let embeddings = match (&self.embeddings, self.toy_dim) {
            (Some(train), _) => EmbeddingSource::Qtce {
                train: train.clone(),
                dev: self.dev_embeddings.clone(),
                test: self.test_embeddings.clone(),
            },
            (None, dim) => EmbeddingSource::Toy {
                dim: dim.unwrap_or_default(),
                corpus_seed: self.toy_seed,
            },
        };
        DataSource {
            train: self.train.clone(),
            dev: self.dev.clone(),
            test: self.test.clone(),
            embeddings,
            top_k_intents: self.top_k,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Args)]
pub struct EncoderArgs {
    #[arg(long, default_value = "qtc")]
    pub encoder: EncoderKind,
    /// Number of filters n.
    #[arg(long, default_value_t = 2)]
    pub filters: usize,
    /// Kernel size k (qubits per circuit).
    #[arg(long, default_value_t = 4)]
    pub kernel: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct TrainingArgs {
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, value_enum, default_value = "adam")]
    pub optimizer: OptimizerArg,
}

pub fn experiment(enc: &EncoderArgs, training: &TrainingArgs, folds: usize) -> ExperimentConfig {
    ExperimentConfig {
        encoder: enc.encoder,
        filters: enc.filters,
        kernel: enc.kernel,
        seed: enc.seed,
        folds,
        max_len: enc.max_len,
        train: TrainConfig {
            learning_rate: training.lr,
            epochs: training.epochs,
            batch_size: training.batch_size,
            optimizer: match training.optimizer {
                OptimizerArg::Adam => Optimizer::default(),
                OptimizerArg::Sgd => Optimizer::Sgd,
            },
            shuffle_seed: 0,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpFormat {
    Qtce,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    /// Output for the train split; dev and test go to `<stem>.dev.<ext>`
    /// and `<stem>.test.<ext>`.
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the extension of `--out`, else qtce.
    #[arg(long, value_enum)]
    pub format: Option<DumpFormat>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Where to write the trained head.
    #[arg(long)]
    pub head: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub head: PathBuf,
    /// QTCE file with the records to label.
    #[arg(long, value_name = "PATH")]
    pub embeddings: PathBuf,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    /// Write `id<TAB>label` lines here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
