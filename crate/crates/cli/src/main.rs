use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Build entity graphs from threaded conversations and export them for the
/// viewer.
#[derive(Parser)]
#[command(name = "entigraph", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a dump, keep the most active threads and drop bot comments.
    Ingest(IngestArgs),
    /// Link every comment to a set of entities.
    Link(LinkArgs),
    /// Build the star-expanded entity graph and the conversation paths.
    Build(BuildArgs),
    /// Combine graphs of differently labelled corpora.
    Merge(MergeArgs),
    /// Cross-validated generalization and next-set prediction.
    Predict(PredictArgs),
    /// Depth-pinned force-directed layout.
    Layout(LayoutArgs),
    /// Spreading activation from one set-vertex.
    Activate(ActivateArgs),
    /// Write the viewer bundle.
    Export(ExportArgs),
}

#[derive(Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `reddit-jsonl` or `canonical-json`.
    #[arg(long, default_value = "reddit-jsonl")]
    pub format: String,
    #[arg(long)]
    pub output: PathBuf,
    /// Fraction of threads to keep, by comment count.
    #[arg(long, default_value_t = 0.2)]
    pub top_fraction: f64,
    /// Newline-separated bot account names.
    #[arg(long)]
    pub botlist: Option<PathBuf>,
    /// Where to write the ingest counters as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args)]
pub struct LinkArgs {
    /// Canonical corpus written by `ingest`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// `surface<TAB>entity<TAB>prior` dictionary.
    #[arg(long, conflicts_with = "prelinked", required_unless_present = "prelinked")]
    pub gazetteer: Option<PathBuf>,
    /// Existing `{comment_id, entities}` annotations to adopt instead.
    #[arg(long)]
    pub prelinked: Option<PathBuf>,
    #[arg(long, default_value_t = entigraph::linking::DEFAULT_MIN_PRIOR)]
    pub min_prior: f64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    /// Corpus label; defaults to the corpus file stem.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long, default_value_t = entigraph::tree::DEFAULT_MIN_PATH_LEN)]
    pub min_path_len: usize,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the retained paths, needed by `predict`.
    #[arg(long)]
    pub paths_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct MergeArgs {
    #[arg(required = true, num_args = 2..)]
    pub graphs: Vec<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub paths: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, env = "ENTIGRAPH_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub generalization_csv: Option<PathBuf>,
    #[arg(long)]
    pub wmd_csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct LayoutArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, env = "ENTIGRAPH_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub iterations_per_depth: usize,
    #[arg(long, default_value_t = 10.0)]
    pub column_spacing: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ideal_distance: f64,
    #[arg(long, default_value_t = 2.0)]
    pub initial_temperature: f64,
}

#[derive(Args)]
pub struct ActivateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Set-vertex id such as `s0:Barack_Obama`.
    #[arg(long)]
    pub source: String,
    #[arg(long = "firing-threshold", short = 'F', default_value_t = 0.3)]
    pub firing_threshold: f64,
    #[arg(long, short = 'D', default_value_t = 0.5)]
    pub decay: f64,
    /// `out-normalized` or `global-max`.
    #[arg(long, default_value = "out-normalized")]
    pub normalization: String,
    /// Only follow edges observed in this corpus.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub layout: PathBuf,
    #[arg(long)]
    pub activation: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Link(a) => commands::link(a),
        Command::Build(a) => commands::build(a),
        Command::Merge(a) => commands::merge(a),
        Command::Predict(a) => commands::predict(a),
        Command::Layout(a) => commands::layout(a),
        Command::Activate(a) => commands::activate(a),
        Command::Export(a) => commands::export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = match err.downcast_ref::<entigraph::Error>() {
                Some(e) => e.kind(),
                None if err.downcast_ref::<std::io::Error>().is_some() => "io",
                None => "other",
            };
            let report = serde_json::json!({ "error": kind, "message": format!("{err:#}") });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
