use std::path::PathBuf;

use cast_core::reducer::ReduceMethod;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cast", version, about = "Topic modelling with corpus-contextualized candidate words")]
pub struct Cli {
    /// Random seed for every stochastic stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Only print results and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// JSON run configuration (or a previous artifact); flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a topic model and write model.json.
    Model(ModelArgs),
    /// Score a fitted model with NPMI, topic diversity and optionally an LLM.
    Eval(EvalCmdArgs),
    /// Print the self-similarity table of the vocabulary.
    SsReport(SsReportArgs),
    /// Sweep self-similarity thresholds over several seeds.
    Ablate(AblateArgs),
    /// Check a CASTEMB file and print summary statistics.
    Validate(ValidateArgs),
    /// Write a planted-topic corpus and matching synthetic embeddings.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Corpus: one document per line, or JSON lines with a "text" field.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// CASTEMB embeddings aligned with the corpus.
    #[arg(long, short)]
    pub embeddings: Option<PathBuf>,
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub min_word_freq: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reducer {
    Umap,
    Pca,
}

impl From<Reducer> for ReduceMethod {
    fn from(r: Reducer) -> Self {
        match r {
            Reducer::Umap => ReduceMethod::Umap,
            Reducer::Pca => ReduceMethod::Pca,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub ss_threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub reducer: Option<Reducer>,
    #[arg(long)]
    pub n_components: Option<usize>,
    #[arg(long)]
    pub n_neighbors: Option<usize>,
    #[arg(long)]
    pub min_dist: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_topics: Option<u64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Rank every candidate under every topic instead of its nearest one.
    #[arg(long)]
    pub soft_words: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// NPMI co-occurrence window in tokens; 0 means whole documents.
    #[arg(long)]
    pub window_size: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Words per topic to score.
    #[arg(long)]
    pub eval_top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, short, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalCmdArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Reference corpus; defaults to the corpus the model was fitted on.
    #[arg(long, short)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Chat-completions URL for LLM scoring. The key is read from CAST_LLM_API_KEY.
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4")]
    pub llm_model: String,
    /// Also write the report here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SsReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.4,0.3")]
    pub thresholds: Vec<f64>,
    /// Rows per column.
    #[arg(long, default_value_t = 10)]
    pub rows: usize,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7")]
    pub thresholds: Vec<f64>,
    /// Runs per threshold, with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub embeddings: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Embed this corpus instead of generating a planted one.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "corpus.jsonl")]
    pub out_corpus: PathBuf,
    #[arg(long, default_value = "corpus.castemb")]
    pub out_embeddings: PathBuf,
    /// Ground-truth document topics and word plan (planted corpora only).
    #[arg(long)]
    pub out_truth: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub topics: usize,
    #[arg(long, default_value_t = 200)]
    pub docs_per_topic: usize,
    #[arg(long, default_value_t = 30)]
    pub words_per_topic: usize,
    #[arg(long, default_value_t = 40)]
    pub doc_len: usize,
    #[arg(long, default_value_t = 0.3)]
    pub noise_scale: f64,
    #[arg(long, default_value_t = 0.5)]
    pub topic_spread: f64,
}
