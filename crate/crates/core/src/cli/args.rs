use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use stitchseg::ensemble::Aggregator;
use stitchseg::eval::Variant;
use stitchseg::morphology::CloseOrder;
use stitchseg::prompt::PromptStrategy;
use stitchseg::segmenter::BackendKind;

#[derive(Debug, Parser)]
#[command(name = "stitchseg", version, about = "One-shot segmentation by stitching a key/query pair and prompting a segmenter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one query image given a key image and its mask.
    Segment(SegmentArgs),
    /// Evaluate one strategy/aggregator over a scene manifest.
    Evaluate(EvaluateArgs),
    /// Run all four strategies x {best, cwmv} x {raw, processed} over a manifest.
    Compare(EvaluateArgs),
}

fn parse_strategy(s: &str) -> Result<PromptStrategy, String> {
    s.parse().map_err(|e: stitchseg::Error| e.to_string())
}

fn parse_aggregator(s: &str) -> Result<Aggregator, String> {
    s.parse().map_err(|e: stitchseg::Error| e.to_string())
}

fn parse_close_order(s: &str) -> Result<CloseOrder, String> {
    s.parse().map_err(|e: stitchseg::Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: stitchseg::Error| e.to_string())
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    match s {
        "mock" => Ok(BackendKind::Mock),
        "http" => Ok(BackendKind::Http),
        other => Err(format!("unknown backend '{other}' (expected mock or http)")),
    }
}

/// Pipeline flags shared by every subcommand. Unset flags fall back to the
/// config file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file with the same fields as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Prompt strategy: p1 (key only), p2 (key + query positive),
    /// p3 (key negatives + query positive), p4 (p2 + key mask prompt).
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<PromptStrategy>,

    /// Number of ensemble runs K.
    #[arg(long, short = 'k')]
    pub runs: Option<usize>,

    #[arg(long = "seed")]
    pub master_seed: Option<u64>,

    #[arg(long)]
    pub n_pos_key: Option<usize>,

    #[arg(long)]
    pub n_neg_key: Option<usize>,

    #[arg(long)]
    pub n_pos_query: Option<usize>,

    /// best | cwmv
    #[arg(long, value_parser = parse_aggregator)]
    pub aggregator: Option<Aggregator>,

    /// CWMV divisor: threshold = sum of confidences / m.
    #[arg(long)]
    pub m: Option<f64>,

    /// Side of the square closing element (odd).
    #[arg(long)]
    pub close_side: Option<u32>,

    /// stitched | query-half
    #[arg(long, value_parser = parse_close_order)]
    pub close_order: Option<CloseOrder>,

    /// Allow key and query of different widths (heights must still match).
    #[arg(long)]
    pub allow_width_mismatch: bool,

    /// mock | http
    #[arg(long, value_parser = parse_backend)]
    pub backend: Option<BackendKind>,

    /// Base URL of the segmentation service (default: $STITCHSEG_ENDPOINT).
    #[arg(long)]
    pub endpoint: Option<String>,

    /// Request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,

    /// Never send concurrent requests to the backend.
    #[arg(long)]
    pub serial: bool,

    /// Cap on concurrent backend requests (0 = number of CPUs).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Pool pixels across scenes instead of averaging per-scene IoU.
    #[arg(long)]
    pub pooled: bool,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub key: PathBuf,

    #[arg(long)]
    pub key_mask: PathBuf,

    #[arg(long)]
    pub query: PathBuf,

    /// Where to write the query-half mask PNG.
    #[arg(long)]
    pub out: PathBuf,

    /// Also write the stitched image with the prediction and prompts drawn.
    #[arg(long)]
    pub overlay: Option<PathBuf>,

    /// Truth mask for the mock backend: query-sized, or stitched-sized.
    #[arg(long)]
    pub mock_truth: Option<PathBuf>,

    /// Write the aggregated mask without morphological closing.
    #[arg(long)]
    pub raw: bool,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// CSV with columns scene_id,key_image,key_mask,query_image,query_truth.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Directory for report.csv and summary.csv.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,

    /// Use this key image for every scene (requires --shared-key-mask).
    #[arg(long, requires = "shared_key_mask")]
    pub shared_key: Option<PathBuf>,

    #[arg(long, requires = "shared_key")]
    pub shared_key_mask: Option<PathBuf>,

    /// Variants to report for `evaluate` (compare always reports both).
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,

    #[command(flatten)]
    pub common: CommonArgs,
}
