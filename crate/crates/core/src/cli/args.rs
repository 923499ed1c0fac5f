use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ingest::EmbeddingFormat;
use crate::stats::ComponentBudget;

#[derive(Debug, Parser)]
#[command(name = "embedprobe", version, about = "Embedding-space forensics: PCA, LDA, cluster regression and contamination detection")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Standardize each embedding dimension before fitting.
    #[arg(long, global = true)]
    pub standardize: bool,
    /// Output directory (for `embed`, a file path with an embedding extension is also accepted).
    #[arg(long, global = true, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Omit wall-clock fields so reports are byte-stable.
    #[arg(long, global = true)]
    pub deterministic: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed texts through a remote embedding service.
    Embed(EmbedArgs),
    /// Principal component scores, loadings and scree table.
    Pca(PcaArgs),
    /// Linear discriminant analysis with a train/test split.
    Lda(LdaArgs),
    /// Regress latent scores on indicator features.
    Regress(RegressArgs),
    /// Isolation-forest contamination sweep.
    Detect(DetectArgs),
    /// Kernel density estimates of one latent axis, per class.
    Kde(KdeArgs),
    /// Explained-variance spectrum and its elbow.
    Scree(ScreeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Embed(_) => "embed",
            Command::Pca(_) => "pca",
            Command::Lda(_) => "lda",
            Command::Regress(_) => "regress",
            Command::Detect(_) => "detect",
            Command::Kde(_) => "kde",
            Command::Scree(_) => "scree",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingArg {
    /// The service returns one pooled vector per text.
    Service,
    /// The service returns token states; mean-pool and L2-normalize locally.
    Mean,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    /// jsonl records `{"id", "label", "text"}`.
    #[arg(long)]
    pub texts: PathBuf,
    /// Base URL of the embedding service; texts are POSTed to `<url>/embed`.
    #[arg(long)]
    pub service_url: String,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    pub token_env: Option<String>,
    /// Texts per request.
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    #[arg(long, value_enum, default_value_t = PoolingArg::Service)]
    pub pooling: PoolingArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Embedding file (jsonl, csv or packed binary).
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Format override; inferred from the extension otherwise.
    #[arg(long)]
    pub format: Option<EmbeddingFormat>,
    /// jsonl records `{"id", "label", "text"}` aligned by id with the embeddings.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PcaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Component budget: a positive integer or `elbow`.
    #[arg(long, default_value = "elbow")]
    pub components: ComponentBudget,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScreeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of leading components to tabulate (default: all).
    #[arg(long)]
    pub max_components: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LdaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Fraction of each class used for fitting.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Shrinkage weight in [0, 1] blending within-class scatter toward a scaled identity.
    #[arg(long)]
    pub shrinkage: Option<f64>,
    /// Draw the split without stratifying by class.
    #[arg(long)]
    pub no_stratify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Pca,
    Lda,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IndicatorArgs {
    /// 1 when the label is one of these (repeatable).
    #[arg(long = "label-target")]
    pub label_target: Vec<String>,
    /// Named rule preset (repeatable): stackexchange-phrases, arxiv-five-words,
    /// arxiv-econ-words, we-our, short-abstract, lists.
    #[arg(long)]
    pub preset: Vec<String>,
    /// Comma-separated phrases; fires at `--min-hits` distinct matches.
    #[arg(long, value_delimiter = ',')]
    pub phrases: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub min_hits: usize,
    /// Count a detected list as one phrase hit.
    #[arg(long)]
    pub lists_as_hit: bool,
    /// Comma-separated words matched at word boundaries.
    #[arg(long, value_delimiter = ',')]
    pub words: Vec<String>,
    /// Comma-separated words whose total occurrences must reach `--min-count`.
    #[arg(long, value_delimiter = ',')]
    pub count_words: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub min_count: usize,
    /// 1 when the whitespace-normalized length is below this many characters.
    #[arg(long)]
    pub length_below: Option<usize>,
    /// 1 when the special-character ratio exceeds this value.
    #[arg(long)]
    pub special_ratio_above: Option<f64>,
    /// 1 when the text contains a list.
    #[arg(long)]
    pub lists: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegressArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Latent space the scores come from.
    #[arg(long, value_enum, default_value_t = Space::Pca)]
    pub space: Space,
    /// 1-based axes; more than one regresses the indicator on all of them jointly.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub axes: Vec<usize>,
    /// LDA shrinkage when `--space lda`.
    #[arg(long)]
    pub shrinkage: Option<f64>,
    #[command(flatten)]
    pub indicators: IndicatorArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    /// Real reference embeddings.
    #[arg(long)]
    pub reference: PathBuf,
    /// Synthetic embeddings mixed into reference samples.
    #[arg(long)]
    pub contaminants: PathBuf,
    /// Reference sample sizes (default: 100,200,300,400,500,1000,2000).
    #[arg(long = "n", value_delimiter = ',')]
    pub n_reference: Vec<usize>,
    /// Contaminant counts (default: 1,2,4,6,8,10,12,15,20).
    #[arg(long = "m", value_delimiter = ',')]
    pub m_contaminants: Vec<usize>,
    /// Random draws per (N, M) cell.
    #[arg(long, default_value_t = 50)]
    pub seeds: usize,
    /// Component budget: a positive integer or `elbow`.
    #[arg(long, default_value = "50")]
    pub n_pcs: ComponentBudget,
    /// Largest forest size; tree counts are tuned over a grid up to this.
    #[arg(long, default_value_t = 200)]
    pub max_trees: usize,
    /// Forest subsample size (default: min(256, N + M)).
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Fit standardization and PCA on the reference rows only.
    #[arg(long)]
    pub pca_on_reference_only: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KdeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Latent space the scores come from.
    #[arg(long, value_enum, default_value_t = Space::Pca)]
    pub space: Space,
    /// 1-based axis.
    #[arg(long, default_value_t = 1)]
    pub axis: usize,
    /// Evaluation points spanning the scores plus three bandwidths each side.
    #[arg(long, default_value_t = 200)]
    pub grid_points: usize,
    /// Fixed bandwidth; Scott's rule per class otherwise.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// LDA shrinkage when `--space lda`.
    #[arg(long)]
    pub shrinkage: Option<f64>,
}
