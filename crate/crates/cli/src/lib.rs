//! Command implementations behind the `invsim` binary.
//!
//! Every command writes its result to `out` and diagnostics to `err`, and
//! returns a [`CliError`] whose [`CliError::exit_code`] the binary exits with.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use invsim_core::ingest::{self, compute_stats, render_stats_table, save_graph, BlogCatalogFiles};
use invsim_core::inv_sim::investigative_match;
use invsim_core::oracle::{exhaustive_partial_search_unbounded, generate_graph, GenSpec, OracleSurvivor};
use invsim_core::report::{group_results, rank_top_k, serialize_report, RankKey, ReportFormat};
use invsim_core::{validate_query, MatchError, Mode};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag values.
    Usage(String),
    /// Unreadable, malformed or invalid input, or an unwritable output path.
    Input(String),
    /// The engine and the oracle disagree, or an internal check failed.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Invariant(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn output(e: io::Error) -> CliError {
    CliError::Input(format!("writing output: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "invsim", version, about = "Investigative graph pattern matching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank persons whose activity matches the query fully or in part.
    Match(MatchArgs),
    /// Check a query's structural preconditions.
    Validate(ValidateArgs),
    /// Node and edge counts of a graph, overall and by label.
    Stats(StatsArgs),
    /// Write a synthetic graph from a generator spec.
    Gen(GenArgs),
    /// Convert raw BlogCatalog relation files into node and edge files.
    ConvertBlogcatalog(ConvertArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GraphPaths {
    #[arg(long)]
    pub graph_nodes: PathBuf,
    #[arg(long)]
    pub graph_edges: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub graph: GraphPaths,
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, default_value_t = invsim_core::inv_sim::DEFAULT_HOP_BOUND)]
    pub hops: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Cross-check survivors against exhaustive search.
    #[arg(long)]
    pub oracle: bool,
    /// Worker threads; defaults to all available.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = RankBy::Size)]
    pub rank_by: RankBy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Tsv => ReportFormat::Tsv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankBy {
    Size,
    Jaccard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValidateMode {
    Dual,
    Investigative,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long, value_enum, default_value_t = ValidateMode::Investigative)]
    pub mode: ValidateMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsFormat {
    Table,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub graph: GraphPaths,
    #[arg(long, value_enum, default_value_t = StatsFormat::Table)]
    pub format: StatsFormat,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub id_userid: PathBuf,
    #[arg(long)]
    pub userid_userid: PathBuf,
    #[arg(long)]
    pub userid_weblog: PathBuf,
    #[arg(long)]
    pub weblog_tag: PathBuf,
    /// Tag id to tag string.
    #[arg(long)]
    pub tags: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn cmd_match(args: &MatchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if args.top_k == 0 {
        return Err(CliError::Usage("--top-k must be at least 1".into()));
    }
    if args.hops == 0 {
        return Err(CliError::Usage("--hops must be at least 1".into()));
    }
    let threads = match args.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Invariant(format!("thread pool: {e}")))?;

    let g = ingest::load_graph(&args.graph.graph_nodes, &args.graph.graph_edges).map_err(input)?;
    let q = ingest::load_query(&args.query).map_err(input)?;
    let _ = writeln!(err, "graph: {} nodes, {} edges", g.node_count(), g.edge_count());

    let outcome = pool
        .install(|| investigative_match(&q, &g, args.hops))
        .map_err(|e| match e {
            MatchError::InvalidQuery(report) => {
                CliError::Input(format!("{}: query is not valid for investigative matching\n{report}", args.query.display()))
            }
            other => CliError::Invariant(other.to_string()),
        })?;
    let _ = writeln!(
        err,
        "anchors: {} examined, {} survived, {} matched pairs",
        outcome.candidates,
        outcome.anchors.len(),
        outcome.relation.len()
    );

    if args.oracle {
        let expected = exhaustive_partial_search_unbounded(&q, &g, args.hops).map_err(input)?;
        let found: Vec<OracleSurvivor> = outcome
            .anchors
            .iter()
            .map(|r| OracleSurvivor::from_engine(&q, &g, r))
            .collect();
        if found != expected {
            let first = found
                .iter()
                .zip(&expected)
                .find(|(a, b)| a != b)
                .map(|(a, _)| a.anchor.clone())
                .unwrap_or_else(|| "survivor count".into());
            let _ = writeln!(err, "agreement: DISAGREE");
            return Err(CliError::Invariant(format!(
                "engine and exhaustive search disagree ({} vs {} survivors; first difference at {first})",
                found.len(),
                expected.len()
            )));
        }
        let _ = writeln!(err, "agreement: exact");
    }

    let key = match args.rank_by {
        RankBy::Size => RankKey::RelevantSize,
        RankBy::Jaccard => RankKey::Jaccard,
    };
    let ranked = rank_top_k(group_results(&q, &g, &outcome), args.top_k, key).map_err(|e| CliError::Usage(e.to_string()))?;
    let bytes = serialize_report(&ranked, args.format.into()).map_err(|e| CliError::Invariant(e.to_string()))?;
    out.write_all(&bytes).map_err(output)
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let q = ingest::load_query(&args.query).map_err(input)?;
    let mode = match args.mode {
        ValidateMode::Dual => Mode::Dual,
        ValidateMode::Investigative => Mode::Investigative,
    };
    let report = validate_query(&q, mode);
    write!(out, "{report}").map_err(output)?;
    if report.is_ok() {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "{}: {} violation(s)",
            args.query.display(),
            report.violations.len()
        )))
    }
}

pub fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = ingest::load_graph(&args.graph.graph_nodes, &args.graph.graph_edges).map_err(input)?;
    let stats = compute_stats(&g);
    let text = match args.format {
        StatsFormat::Table => render_stats_table(&stats),
        StatsFormat::Json => {
            let mut s = serde_json::to_string_pretty(&stats).map_err(|e| CliError::Invariant(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(output)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn cmd_gen(args: &GenArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.spec).map_err(|e| CliError::Input(format!("{}: {e}", args.spec.display())))?;
    let spec: GenSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: invalid generator spec: {e}", args.spec.display())))?;
    let (g, truth) = generate_graph(&spec).map_err(|e| CliError::Input(format!("{}: {e}", args.spec.display())))?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Input(format!("{}: {e}", args.out_dir.display())))?;
    save_graph(&g, &args.out_dir.join("nodes.tsv"), &args.out_dir.join("edges.tsv")).map_err(input)?;
    let mut truth_json = serde_json::to_string_pretty(&truth).map_err(|e| CliError::Invariant(e.to_string()))?;
    truth_json.push('\n');
    write_file(&args.out_dir.join("truth.json"), truth_json.as_bytes())?;
    if let GenSpec::Planted(p) = &spec {
        let q = p.query().map_err(input)?;
        write_file(&args.out_dir.join("query.json"), ingest::query_to_json(&q).as_bytes())?;
    }
    let _ = writeln!(
        err,
        "wrote {} nodes, {} edges to {}",
        g.node_count(),
        g.edge_count(),
        args.out_dir.display()
    );
    Ok(())
}

pub fn cmd_convert(args: &ConvertArgs, err: &mut dyn Write) -> Result<(), CliError> {
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Input(format!("{}: {e}", args.out_dir.display())))?;
    let files = BlogCatalogFiles {
        id_userid: args.id_userid.clone(),
        userid_userid: args.userid_userid.clone(),
        userid_weblog: args.userid_weblog.clone(),
        weblog_tag: args.weblog_tag.clone(),
        tags: args.tags.clone(),
    };
    let g = ingest::convert_blogcatalog(&files, &args.out_dir.join("nodes.tsv"), &args.out_dir.join("edges.tsv"))
        .map_err(input)?;
    let _ = writeln!(err, "wrote {} nodes, {} edges", g.node_count(), g.edge_count());
    Ok(())
}

/// Parses `argv` and runs one command. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = !e.use_stderr();
            let text = e.render().to_string();
            if informational {
                let _ = out.write_all(text.as_bytes());
                return 0;
            }
            let _ = err.write_all(text.as_bytes());
            return 1;
        }
    };
    let result = match &cli.command {
        Command::Match(a) => cmd_match(a, out, err),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Stats(a) => cmd_stats(a, out),
        Command::Gen(a) => cmd_gen(a, err),
        Command::ConvertBlogcatalog(a) => cmd_convert(a, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}
