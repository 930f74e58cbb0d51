//! `confex`: explain unexpected correlations in aggregate query results.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use confex_core::acquire::DBPEDIA_RESOURCE;
use confex_core::dataset::DEFAULT_BINS;
use confex_core::subgroups::DEFAULT_MIN_SIZE;

#[derive(Parser)]
#[command(name = "confex", version, about = "Find confounding attributes behind query correlations")]
struct Cli {
    /// Cap on worker threads used by parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a small set of attributes that explains the exposure-outcome correlation.
    Explain(ExplainArgs),
    /// List the largest data subgroups a prior explanation leaves unexplained.
    Subgroups(SubgroupsArgs),
    /// Extract entity attributes from a knowledge graph into an attribute table.
    Acquire(AcquireArgs),
    /// Show which candidate attributes pruning drops and why.
    PruneReport(PruneArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Attribute tables to left-join; the first column is the join key.
    #[arg(long = "attrs")]
    attrs: Vec<PathBuf>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Equal-frequency bins for numeric columns.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Columns read as categorical even when every value is numeric.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
}

#[derive(Args)]
struct CiArgs {
    /// CMI threshold in bits below which variables count as independent.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Stratified permutations for the independence test; 0 disables it.
    #[arg(long, default_value_t = 0)]
    permutations: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weighting {
    Auto,
    CompleteCase,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Query definition (JSON).
    #[arg(long)]
    query: PathBuf,
    /// Maximum explanation size.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[command(flatten)]
    ci: CiArgs,
    /// Threshold for the logical-dependency pruning rule, in bits.
    #[arg(long, default_value_t = 0.05)]
    fd_epsilon: f64,
    /// Restrict candidates to these columns.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<String>>,
    /// Missing-data handling for attributes with gaps.
    #[arg(long, value_enum, default_value_t = Weighting::Auto)]
    weights: Weighting,
    /// Predictors for the missingness model.
    #[arg(long, value_delimiter = ',')]
    ipw_predictors: Option<Vec<String>>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print per-stage timings and embed them in the report.
    #[arg(long)]
    profile: bool,
}

#[derive(Args)]
struct SubgroupsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Query definition (JSON); defaults to the one in the explanation report.
    #[arg(long)]
    query: Option<PathBuf>,
    /// Report written by `explain`.
    #[arg(long)]
    explanation: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Score threshold in bits; a tenth of the query's CMI when absent.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MIN_SIZE)]
    min_size: usize,
    /// Columns to refine on, in enumeration order.
    #[arg(long, value_delimiter = ',')]
    refinable: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AcquireArgs {
    #[arg(long)]
    data: PathBuf,
    /// Column whose labels name the entities.
    #[arg(long)]
    key_column: String,
    /// CSV of `label,iri` pairs consulted before the prefix rule.
    #[arg(long)]
    alias_file: Option<PathBuf>,
    #[arg(long, default_value = "https://dbpedia.org/sparql")]
    endpoint: String,
    /// Link unmatched labels to this prefix plus the label.
    #[arg(long, default_value = DBPEDIA_RESOURCE)]
    prefix: String,
    /// Only link labels through the alias file.
    #[arg(long)]
    no_prefix: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    hops: u8,
    /// Cache directory; `$CONFEX_CACHE_DIR` or `.confex-cache` when absent.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Serve from the cache only.
    #[arg(long)]
    offline: bool,
    /// Aggregation per attribute: a JSON object or a path to one.
    #[arg(long)]
    agg_spec: Option<String>,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 30)]
    timeout: u64,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Write per-entity fetch diagnostics here (JSON).
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Attribute-table CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PruneArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    query: PathBuf,
    #[command(flatten)]
    ci: CiArgs,
    #[arg(long, default_value_t = 0.05)]
    fd_epsilon: f64,
    #[arg(long, default_value_t = 0.9)]
    max_missing: f64,
    #[arg(long, default_value_t = 0.9)]
    high_entropy: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: &Cli) -> confex_core::Result<()> {
    if let Some(n) = cli.threads {
        confex_core::set_thread_limit(n)?;
    }
    match &cli.command {
        Command::Explain(a) => commands::explain_cmd(a),
        Command::Subgroups(a) => commands::subgroups_cmd(a),
        Command::Acquire(a) => commands::acquire_cmd(a),
        Command::PruneReport(a) => commands::prune_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{obj}");
            ExitCode::FAILURE
        }
    }
}
