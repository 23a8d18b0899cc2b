use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "lscm",
    version,
    about = "Tree-guided context modeling for referring segmentation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a dataset directory; logs `iter,lr,loss` CSV to stdout.
    Train(TrainArgs),
    /// Score predicted masks, or a checkpoint, against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic train/val dataset.
    GenData(GenDataArgs),
    /// Dump per-word attention maps and the masked adjacency for one sample.
    AttnDump(AttnDumpArgs),
    /// Run the finite-difference gradient suite.
    Gradcheck(GradcheckArgs),
    /// Read CoNLL-U from stdin and print the tree mask S.
    Treemask(TreemaskArgs),
}

/// Flags shared by every command that reads a configuration.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Off-tree edge weight α in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Graph-convolution layers: a count or `adaptive`.
    #[arg(long = "n-layers")]
    pub n_layers: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Total training iterations (the poly schedule's horizon).
    #[arg(long)]
    pub iters: Option<u64>,
    /// Dataset root, or a split directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Run directory for checkpoints, vocabulary and effective config.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from this checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop after this many iterations in total, leaving the schedule as is.
    #[arg(long = "stop-at")]
    pub stop_at: Option<u64>,
    /// Keep the convolutional feature stack fixed.
    #[arg(long = "freeze-cnn")]
    pub freeze_cnn: bool,
    /// Initial word vectors, `word v1 … vC_e` per line.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Directory of predicted masks laid out like the dataset.
    #[arg(long, conflicts_with = "checkpoint")]
    pub pred: Option<PathBuf>,
    /// Checkpoint to run over the data instead of reading predictions.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Vocabulary file; defaults to `vocab.txt` beside the checkpoint.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Where to write predicted `mask.pgm` and `prob.csv` per sample.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub common: Overrides,
    #[arg(long)]
    pub out: PathBuf,
    /// Training samples (default from config, 2000).
    #[arg(long)]
    pub train: Option<usize>,
    /// Validation samples (default from config, 200).
    #[arg(long)]
    pub val: Option<usize>,
    /// `simple`, `attribute`, `relation`, or weights `s:a:r`.
    #[arg(long)]
    pub mix: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct AttnDumpArgs {
    #[command(flatten)]
    pub common: Overrides,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// One sample directory.
    #[arg(long)]
    pub sample: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Random instances per operation.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Random instances of the full-model check.
    #[arg(long = "model-trials", default_value_t = 2)]
    pub model_trials: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TreemaskArgs {
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
}
