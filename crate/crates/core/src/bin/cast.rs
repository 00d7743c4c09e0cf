// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: index building, selection traces, prompts,
//! coverage benchmarks and exact match.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cast_retrieval::baselines::EmbeddingTable;
use cast_retrieval::corpus::{parse_corpus_jsonl, read_corpus, CorpusEntry};
use cast_retrieval::harness::{
    coverage_curve, curve_to_csv, curve_to_svg, exact_match, PromptTemplate, SelectionTrace, Strategy, StrategyContext,
    DEFAULT_SEED,
};
use cast_retrieval::index::{build_database, ExemplarDatabase};
use cast_retrieval::selector::{
    PromptOrder, SelectionConfig, TieBreak, DEFAULT_K_MAX, DEFAULT_PRERECALL_FACTOR, DEFAULT_TAU,
};
use cast_retrieval::tree::AdapterRegistry;
use cast_retrieval::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cast",
    version,
    about = "Coverage-driven exemplar retrieval for code translation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect an exemplar index.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Select exemplars for one query and write a JSON trace.
    Select(SelectArgs),
    /// Render a prompt from a selection trace.
    Prompt(PromptArgs),
    /// Benchmarks.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Exact match between a prediction and a reference file.
    Em(EmArgs),
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Parse and fingerprint a JSON Lines corpus.
    Build {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write a JSON dump of the index.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Tuning {
    /// Pre-recall factor.
    #[arg(short = 't', long = "prerecall", default_value_t = DEFAULT_PRERECALL_FACTOR)]
    t: f64,
    /// Coverage threshold for cast_a.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, value_enum, default_value = "prerecall-rank")]
    tie_break: TieBreakArg,
    /// Exemplar ids for the fixed strategy, comma separated.
    #[arg(long, value_delimiter = ',')]
    fixed_ids: Option<Vec<String>>,
    /// Embedding file (`dim d` then `id v1 .. vd`) for embed and diversity.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Overrides CAST_SEED.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TieBreakArg {
    PrerecallRank,
    LowestPosition,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum OrderArg {
    Selection,
    Reversed,
}

impl From<OrderArg> for PromptOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Selection => PromptOrder::Selection,
            OrderArg::Reversed => PromptOrder::Reversed,
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    index: PathBuf,
    /// A JSON corpus entry, or raw source text.
    #[arg(long)]
    query: PathBuf,
    /// Language of a raw-text query.
    #[arg(long, default_value = "expr")]
    lang: String,
    /// Target language of a raw-text query.
    #[arg(long, default_value = "py")]
    target_lang: String,
    #[arg(long, default_value = "cast_f")]
    strategy: String,
    /// Shot count; the cap for cast_a.
    #[arg(short, long)]
    k: Option<usize>,
    /// Prompt order recorded in the trace.
    #[arg(long, value_enum, default_value = "selection")]
    order: OrderArg,
    /// Trace destination; stdout when omitted.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Record stage timings in the trace.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct PromptArgs {
    #[arg(long)]
    selection: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// TOML template with header, exemplar and query keys.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Overrides the order stored in the trace.
    #[arg(long, value_enum)]
    order: Option<OrderArg>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Mean coverage per strategy and shot count.
    Coverage(CoverageArgs),
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "cast_f,ld")]
    strategies: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10,15,20")]
    shots: Vec<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Optional SVG line plot.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct EmArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("CAST_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("CAST_SEED={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn build_context<'a>(db: &'a ExemplarDatabase, tuning: &Tuning, cfg: SelectionConfig) -> Result<StrategyContext<'a>> {
    let mut ctx = StrategyContext::new(db, cfg, resolve_seed(tuning.seed)?)?;
    if let Some(ids) = &tuning.fixed_ids {
        ctx = ctx.with_fixed_ids(ids.clone())?;
    }
    if let Some(path) = &tuning.embeddings {
        ctx = ctx.with_embeddings(EmbeddingTable::load(path)?)?;
    }
    Ok(ctx)
}

fn config(tuning: &Tuning, k: usize, order: PromptOrder) -> SelectionConfig {
    SelectionConfig {
        k,
        t: tuning.t,
        tau: tuning.tau,
        k_max: k,
        tie_break: match tuning.tie_break {
            TieBreakArg::PrerecallRank => TieBreak::PrerecallRank,
            TieBreakArg::LowestPosition => TieBreak::LowestPosition,
        },
        prompt_order: order,
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_query(path: &Path, lang: &str, target_lang: &str) -> Result<CorpusEntry> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let mut entries = parse_corpus_jsonl(&text, &path.display().to_string()).or_else(|_| {
            serde_json::from_str::<CorpusEntry>(&text)
                .map(|e| vec![e])
                .map_err(Error::from)
        })?;
        if entries.len() != 1 {
            return Err(Error::invalid(format!(
                "{} holds {} queries, expected one",
                path.display(),
                entries.len()
            )));
        }
        return Ok(entries.remove(0));
    }
    let id = path
        .file_stem()
        .map_or("query".into(), |s| s.to_string_lossy().into_owned());
    Ok(CorpusEntry {
        id,
        source_lang: lang.to_owned(),
        target_lang: target_lang.to_owned(),
        source: text,
        target: String::new(),
        sexpr: None,
    })
}

fn run(cli: Cli) -> Result<()> {
    let adapter = AdapterRegistry::with_defaults();
    match cli.command {
        Command::Index(IndexCmd::Build { corpus, output, json }) => {
            let (db, report) = build_database(read_corpus(&corpus)?, &adapter)?;
            for w in report.warnings() {
                eprintln!("warning: {w}");
            }
            db.save(&output)?;
            if let Some(j) = json {
                fs::write(j, serde_json::to_string_pretty(&db.to_json_dump())? + "\n")?;
            }
            eprintln!(
                "indexed {} exemplars, {} distinct subtrees, {} skipped",
                db.len(),
                db.distinct_fingerprints(),
                report.skipped.len()
            );
        }
        Command::Select(a) => {
            let strategy: Strategy = a.strategy.parse()?;
            let k = a.k.unwrap_or(if strategy == Strategy::CastA {
                DEFAULT_K_MAX
            } else {
                SelectionConfig::default().k
            });
            let db = ExemplarDatabase::load(&a.index)?;
            let ctx = build_context(&db, &a.tuning, config(&a.tuning, k, a.order.into()))?;
            let q = ctx.prepare(read_query(&a.query, &a.lang, &a.target_lang)?, &adapter)?;
            let sel = ctx.select(&q, strategy, k)?;
            let trace = ctx.trace(&q, &sel, k, a.timing)?;
            write_or_print(a.trace.as_deref(), &trace.to_json()?)?;
        }
        Command::Prompt(a) => {
            let db = ExemplarDatabase::load(&a.index)?;
            let trace = SelectionTrace::load(&a.selection)?;
            let template = match &a.template {
                Some(p) => PromptTemplate::load(p)?,
                None => PromptTemplate::default(),
            };
            let prompt = trace.prompt(&db, &template, a.order.map(Into::into))?;
            write_or_print(a.output.as_deref(), &prompt)?;
        }
        Command::Bench(BenchCmd::Coverage(a)) => {
            let strategies = a
                .strategies
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<Strategy>>>()?;
            let k = a.shots.iter().copied().max().unwrap_or(1);
            let db = ExemplarDatabase::load(&a.index)?;
            let ctx = build_context(&db, &a.tuning, config(&a.tuning, k, PromptOrder::Selection))?;
            let queries = ctx.prepare_all(read_corpus(&a.queries)?, &adapter)?;
            let rows = coverage_curve(&ctx, &queries, &strategies, &a.shots)?;
            write_or_print(a.csv.as_deref(), &curve_to_csv(&rows))?;
            if let Some(p) = a.plot {
                fs::write(p, curve_to_svg(&rows))?;
            }
        }
        Command::Em(a) => {
            let pred = fs::read_to_string(&a.pred)?;
            let gold = fs::read_to_string(&a.gold)?;
            println!("{}", exact_match(&pred, &gold));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 3 } else { 2 })
        }
    }
}
