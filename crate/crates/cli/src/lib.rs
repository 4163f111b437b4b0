//! `rdbprofile` command line: one subcommand per stage of the profiling
//! pipeline. Exit codes are 0 on success, 1 on validation errors and 2 on
//! usage errors; every file output is written atomically and gets a
//! `<out>.manifest.json` beside it.

mod data;
mod lab;
pub mod output;
mod selection;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use data::{read_embeddings, read_feature_csv, IngestReport};
pub use selection::{RouteOutput, SimilarityOutput};

#[derive(Debug, Parser)]
#[command(name = "rdbprofile", version, about = "Training-free profiling and routing of relational prediction tasks")]
struct Cli {
    /// Seed threaded through every stochastic stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for internal parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Load a database and report table, relation and graph statistics.
    Ingest(IngestArgs),
    /// Profile a task into an embedding JSON (JSONL for several tasks).
    Profile(ProfileArgs),
    /// Per-metapath homophily profile of a task.
    Homophily(HomophilyArgs),
    /// Typed-path sketch features of one node type as CSV.
    Sketch(SketchArgs),
    /// Landscape indicators of loss surfaces, with optional post-selection.
    Landscape(LandscapeArgs),
    /// Performance bank maintenance and analysis.
    #[command(subcommand)]
    Bank(BankCommand),
    /// Predict the winning family for a task embedding.
    Route(RouteArgs),
    /// Leave-one-task-out accuracy of the meta-classifier.
    Loo(LooArgs),
    /// Budgeted replay search over a bank task.
    Hpo(HpoArgs),
    /// Agreement between embedding similarity and bank similarity.
    Similarity(SimilarityArgs),
    /// Metapath CSBM experiments.
    #[command(subcommand)]
    Csbm(CsbmCommand),
}

#[derive(Debug, Args, Serialize)]
struct DbArgs {
    #[arg(long, env = "RDBPROFILE_SCHEMA")]
    schema: PathBuf,
    /// Directory holding the table files (default: the schema's directory).
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[command(flatten)]
    db: DbArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ProfileArgs {
    #[command(flatten)]
    db: DbArgs,
    /// Task JSON; repeat for several tasks.
    #[arg(long, required = true)]
    task: Vec<PathBuf>,
    #[arg(long, default_value_t = 20)]
    walks: usize,
    #[arg(long, default_value_t = 4)]
    walk_length: usize,
    #[arg(long, default_value_t = 2000)]
    max_seeds: usize,
    /// Include the entity-mean heuristic feature.
    #[arg(long)]
    heuristic: bool,
    /// Include the eight affinity probe features.
    #[arg(long)]
    probes: bool,
    /// Append a budget feature with this value.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum WeightingArg {
    Unweighted,
    Witness,
}

#[derive(Debug, Args, Serialize)]
struct HomophilyArgs {
    #[command(flatten)]
    db: DbArgs,
    #[arg(long)]
    task: PathBuf,
    #[arg(long, default_value_t = 2)]
    max_legs: usize,
    #[arg(long, value_enum, default_value = "unweighted")]
    weighting: WeightingArg,
    /// Skip FK-pair augmentation of the graph.
    #[arg(long)]
    no_fk_pairs: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Dense,
    Tensor,
}

#[derive(Debug, Args, Serialize)]
struct SketchArgs {
    #[command(flatten)]
    db: DbArgs,
    #[arg(long, value_enum, default_value = "dense")]
    mode: ModeArg,
    /// Sketch width.
    #[arg(long, default_value_t = 64)]
    d: usize,
    /// Maximum path length T.
    #[arg(long, default_value_t = 2)]
    horizon: usize,
    /// Node type (table) whose rows are the sketch sources.
    #[arg(long)]
    source_type: String,
    /// Add FK-pair edges before sketching.
    #[arg(long)]
    fk_pairs: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Task JSON for affinity probe scores.
    #[arg(long, requires = "affinity_out")]
    task: Option<PathBuf>,
    #[arg(long, requires = "task")]
    affinity_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DirectionArg {
    Higher,
    Lower,
}

#[derive(Debug, Args, Serialize)]
struct LandscapeArgs {
    /// Surface JSON files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Validation score per file, for post-selection.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    val: Vec<f64>,
    #[arg(long, value_enum, default_value = "higher")]
    direction: DirectionArg,
    /// Interpolate missing rays from the grid.
    #[arg(long)]
    fallback: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ByArg {
    Val,
    Test,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum BankCommand {
    /// Append validated records from a JSONL file.
    Add {
        #[arg(long, env = "RDBPROFILE_BANK")]
        bank: PathBuf,
        #[arg(long)]
        from: PathBuf,
    },
    /// Winning family per task.
    Winners {
        #[arg(long, env = "RDBPROFILE_BANK")]
        bank: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        by: ByArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Task-by-task rank similarity over shared configurations.
    Similarity {
        #[arg(long, env = "RDBPROFILE_BANK")]
        bank: PathBuf,
        #[arg(long, default_value_t = 2)]
        min_shared: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Knn,
    Logistic,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GeneratorArg {
    Random,
    Tpe,
}

#[derive(Debug, Args, Serialize)]
struct MetaArgs {
    #[arg(long, env = "RDBPROFILE_BANK")]
    bank: PathBuf,
    /// Embeddings of bank tasks (JSON or JSONL); repeatable.
    #[arg(long, env = "RDBPROFILE_EMBEDDINGS", value_delimiter = ',', required = true)]
    embeddings: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "knn")]
    kind: KindArg,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Winner selection for budget-free routing.
    #[arg(long, value_enum, default_value = "test")]
    by: ByArg,
    /// Budgets at which bank winners are replayed for budget-aware routing.
    #[arg(long, value_delimiter = ',', default_value = "3,10,30")]
    budgets: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    replay_seeds: u64,
    #[arg(long, value_enum, default_value = "tpe")]
    generator: GeneratorArg,
}

#[derive(Debug, Args, Serialize)]
struct RouteArgs {
    #[command(flatten)]
    meta: MetaArgs,
    /// Embedding of the task to route.
    #[arg(long)]
    embedding: PathBuf,
    /// Route for this search budget (budget-aware classifier).
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct LooArgs {
    #[command(flatten)]
    meta: MetaArgs,
    /// Evaluate the budget-aware classifier over `--budgets`.
    #[arg(long)]
    budgeted: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FamilyArg {
    Rdl,
    Dfs,
}

#[derive(Debug, Args, Serialize)]
struct HpoArgs {
    #[arg(long, env = "RDBPROFILE_BANK")]
    bank: PathBuf,
    /// Bank task to replay.
    #[arg(long)]
    task: String,
    #[arg(long)]
    budget: usize,
    #[arg(long, value_enum, default_value = "tpe")]
    generator: GeneratorArg,
    #[arg(long)]
    no_post_select: bool,
    /// Search only this family.
    #[arg(long, value_enum, conflicts_with = "route")]
    family: Option<FamilyArg>,
    /// Search only the family chosen by a prior `route` output.
    #[arg(long)]
    route: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimilarityArgs {
    /// Embeddings (JSON or JSONL); repeatable.
    #[arg(long, env = "RDBPROFILE_EMBEDDINGS", value_delimiter = ',', required = true)]
    embeddings: Vec<PathBuf>,
    /// Bank similarity produced by `bank similarity`.
    #[arg(long)]
    gt: PathBuf,
    /// Also fit a triplet projection of the embedding space.
    #[arg(long)]
    project: bool,
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 0.1)]
    step_size: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CsbmSpecArgs {
    /// Spec JSON; overrides the flags below.
    #[arg(long, conflicts_with_all = ["gamma", "degree"])]
    spec: Option<PathBuf>,
    /// Gate per metapath.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    gamma: Vec<f64>,
    /// Expected degree per metapath; a single value applies to all.
    #[arg(long, value_delimiter = ',')]
    degree: Vec<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    pi: Option<f64>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum CsbmCommand {
    /// Gated vs linear error under strong, sign-mixed and zero-info regimes.
    Gating {
        #[command(flatten)]
        spec: CsbmSpecArgs,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error of estimated-gate scoring against labeled-set size.
    Crossover {
        #[command(flatten)]
        spec: CsbmSpecArgs,
        #[arg(long, value_delimiter = ',', default_value = "10,30,100,300,1000")]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 30)]
        seeds: usize,
        #[arg(long, default_value_t = 1000)]
        train_pool: usize,
        #[arg(long, default_value_t = 1000)]
        test_pool: usize,
        /// Write `n,gated_mean,linear_mean` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear and gated SNR proxies of a spec.
    Snr {
        #[command(flatten)]
        spec: CsbmSpecArgs,
        #[arg(long, default_value_t = 20_000)]
        mc_samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse `args` (program name first), run the command and return the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Ingest(a) => data::ingest(a, seed),
        Command::Profile(a) => data::profile(a, seed),
        Command::Homophily(a) => data::homophily(a, seed),
        Command::Sketch(a) => data::sketch(a, seed),
        Command::Landscape(a) => selection::landscape(a, seed),
        Command::Bank(b) => selection::bank(b, seed),
        Command::Route(a) => selection::route(a, seed),
        Command::Loo(a) => selection::loo(a, seed),
        Command::Hpo(a) => selection::hpo(a, seed),
        Command::Similarity(a) => selection::similarity(a, seed),
        Command::Csbm(c) => lab::csbm(c, seed),
    }
}
