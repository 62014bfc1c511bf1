//! `vsim` command-line interface.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use vsim_core::index::Metadata;
use vsim_core::{
    embed_text, load_snapshot, save_snapshot, DocStatus, DocumentRecord, EmbeddingModel, Index, ModelFormat,
    TokenizerConfig, Upsert,
};

use crate::bench::{self, BenchParams};
use crate::config::{self, MatchSettings, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "vsim", version, about = "Find previously fact-checked texts by word-embedding similarity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP matching service
    Serve(ServeArgs),
    /// Solve A : B :: C : ? with 3CosAdd
    Analogy(AnalogyArgs),
    /// Nearest vocabulary neighbours of a word
    Nn(NnArgs),
    /// Bulk-load JSON lines {"id","text","status","metadata"} into an index snapshot
    Ingest(IngestArgs),
    /// Search an index snapshot for texts similar to TEXT
    Query(QueryArgs),
    /// Measure exact-search latency over random unit vectors
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// word2vec model file
    #[arg(long)]
    pub model: PathBuf,
    /// Model file format; `auto` sniffs the body
    #[arg(long, default_value = "auto")]
    pub format: ModelFormat,
}

impl ModelArgs {
    fn load(&self) -> anyhow::Result<EmbeddingModel> {
        EmbeddingModel::load(&self.model, self.format)
            .with_context(|| format!("cannot load model {}", self.model.display()))
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "VSIM_MODEL_PATH")]
    pub model: PathBuf,
    #[arg(long, default_value = "auto")]
    pub format: ModelFormat,
    /// Index snapshot, created on first shutdown if missing
    #[arg(long, env = "VSIM_INDEX_PATH")]
    pub index: PathBuf,
    /// Defaults to <index>.journal
    #[arg(long, env = "VSIM_JOURNAL_PATH")]
    pub journal: Option<PathBuf>,
    #[arg(long, env = "VSIM_HOST", default_value = "0.0.0.0")]
    pub host: String,
    #[arg(long, env = "VSIM_PORT", default_value_t = config::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, env = "VSIM_THRESHOLD", default_value_t = config::DEFAULT_THRESHOLD, allow_negative_numbers = true)]
    pub threshold: f64,
    #[arg(long = "suggestion-k", env = "VSIM_SUGGESTION_K", default_value_t = config::DEFAULT_SUGGESTION_K)]
    pub suggestion_k: usize,
    #[arg(long, env = "VSIM_CALLBACK_URL")]
    pub callback_url: Option<String>,
    #[arg(long, env = "VSIM_UI_ORIGIN", default_value = "*")]
    pub ui_origin: String,
    /// Seconds between snapshots of a modified index
    #[arg(long, default_value_t = config::DEFAULT_SNAPSHOT_INTERVAL.as_secs())]
    pub snapshot_interval: u64,
}

#[derive(Debug, Args)]
pub struct AnalogyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short = 'k', long = "top", default_value_t = 10)]
    pub k: usize,
    pub a: String,
    pub b: String,
    pub c: String,
}

#[derive(Debug, Args)]
pub struct NnArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short = 'k', long = "top", default_value_t = 10)]
    pub k: usize,
    pub word: String,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub index: PathBuf,
    /// JSON-lines input file
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub index: PathBuf,
    #[arg(short = 'k', long = "top", default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub threshold: f64,
    /// Only return documents with this status (pending or fact_checked)
    #[arg(long)]
    pub status: Option<DocStatus>,
    pub text: String,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Take the dimension from this model's header
    #[arg(long, required_unless_present = "dim")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Also write the generated index to this snapshot path
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub docs: usize,
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    #[arg(short = 'k', long = "top", default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

/// Parses arguments and runs the command. Returns the process exit code:
/// 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().ansi().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Serve(args) => serve(args),
        Command::Analogy(args) => {
            let model = args.model.load()?;
            for hit in model.analogy(&args.a, &args.b, &args.c, args.k)? {
                writeln!(out, "{}\t{:.4}", hit.word, hit.score)?;
            }
            Ok(())
        }
        Command::Nn(args) => {
            let model = args.model.load()?;
            let query = model.lookup(&args.word).with_context(|| format!("unknown word `{}`", args.word))?;
            for hit in model.nearest_words(query, args.k, &[args.word.as_str()])? {
                writeln!(out, "{}\t{:.4}", hit.word, hit.score)?;
            }
            Ok(())
        }
        Command::Ingest(args) => ingest(args, out),
        Command::Query(args) => query(args, out),
        Command::Bench(args) => run_bench(args, out),
    }
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let journal_path = args.journal.clone().unwrap_or_else(|| config::default_journal_path(&args.index));
    let mut matching = MatchSettings::new(&args.index, journal_path);
    matching.suggestion_threshold = args.threshold;
    matching.suggestion_k = args.suggestion_k;
    matching.validate().map_err(anyhow::Error::msg)?;
    let config = ServiceConfig {
        model_path: args.model,
        matching,
        port: args.port,
        callback_url: args.callback_url.filter(|u| !u.is_empty()),
        ui_origin: args.ui_origin,
        snapshot_interval: std::time::Duration::from_secs(args.snapshot_interval.max(1)),
        webhook_backoff: config::DEFAULT_WEBHOOK_BACKOFF.to_vec(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(crate::serve(config, args.format, &args.host))
}

fn open_or_create_index(path: &Path, dim: usize) -> anyhow::Result<Index> {
    if path.exists() {
        let index = load_snapshot(path).with_context(|| format!("cannot load index {}", path.display()))?;
        if index.dim() != dim {
            bail!("index {} has dimension {}, model has {}", path.display(), index.dim(), dim);
        }
        Ok(index)
    } else {
        Ok(Index::new(dim)?)
    }
}

#[derive(Deserialize)]
struct IngestLine {
    id: String,
    text: String,
    #[serde(default = "default_ingest_status")]
    status: DocStatus,
    #[serde(default)]
    metadata: Metadata,
}

fn default_ingest_status() -> DocStatus {
    DocStatus::FactChecked
}

fn ingest(args: IngestArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let model = args.model.load()?;
    let mut index = open_or_create_index(&args.index, model.dim())?;
    let reader =
        BufReader::new(File::open(&args.file).with_context(|| format!("cannot open {}", args.file.display()))?);
    let tokenizer = TokenizerConfig::default();
    let (mut inserted, mut replaced) = (0usize, 0usize);
    let mut skipped: Vec<(usize, Option<String>, String)> = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: IngestLine = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                skipped.push((n + 1, None, format!("InvalidJson ({e})")));
                continue;
            }
        };
        let vector = match embed_text(&model, &parsed.text, &tokenizer) {
            Ok(v) => v.values,
            Err(e) => {
                skipped.push((n + 1, Some(parsed.id), e.reason().to_owned()));
                continue;
            }
        };
        let id = parsed.id.clone();
        let record = DocumentRecord {
            id: parsed.id,
            vector,
            text: parsed.text,
            status: parsed.status,
            metadata: parsed.metadata,
        };
        match index.upsert(record) {
            Ok(Upsert::Inserted) => inserted += 1,
            Ok(Upsert::Replaced) => replaced += 1,
            Err(e) => skipped.push((n + 1, Some(id), format!("InvalidRecord ({e})"))),
        }
    }
    save_snapshot(&index, &args.index).with_context(|| format!("cannot write {}", args.index.display()))?;
    writeln!(
        out,
        "ingested\t{}\ninserted\t{inserted}\nreplaced\t{replaced}\nskipped\t{}",
        inserted + replaced,
        skipped.len()
    )?;
    for (line, id, reason) in skipped {
        match id {
            Some(id) => writeln!(out, "skip\tline {line}\t{id}\t{reason}")?,
            None => writeln!(out, "skip\tline {line}\t-\t{reason}")?,
        }
    }
    writeln!(out, "documents\t{}", index.len())?;
    Ok(())
}

fn query(args: QueryArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let model = args.model.load()?;
    let index = load_snapshot(&args.index).with_context(|| format!("cannot load index {}", args.index.display()))?;
    if index.dim() != model.dim() {
        bail!("index has dimension {}, model has {}", index.dim(), model.dim());
    }
    let vector = embed_text(&model, &args.text, &TokenizerConfig::default())
        .with_context(|| "query text cannot be vectorized")?;
    for hit in index.search(&vector.values, args.k, args.threshold, args.status)? {
        let text = hit.text.replace(['\n', '\t', '\r'], " ");
        writeln!(out, "{}\t{:.4}\t{}\t{}", hit.id, hit.score, hit.status, text)?;
    }
    Ok(())
}

fn run_bench(args: BenchArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let dim = match (args.dim, &args.model) {
        (Some(dim), _) => dim,
        (None, Some(model)) => {
            EmbeddingModel::read_header(model)
                .with_context(|| format!("cannot read model header {}", model.display()))?
                .1
        }
        (None, None) => bail!("either --dim or --model is required"),
    };
    if dim == 0 || args.queries == 0 || args.k == 0 {
        bail!("--dim, --queries and -k must be positive");
    }
    let params =
        BenchParams { docs: args.docs, dim, queries: args.queries, k: args.k, workers: args.workers, seed: args.seed };
    let started = std::time::Instant::now();
    let index = bench::random_index(params.docs, params.dim, params.seed);
    let build = started.elapsed();
    if let Some(path) = &args.index {
        save_snapshot(&index, path).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let report = bench::measure(&index, params, build);
    writeln!(out, "{report}")?;
    Ok(())
}
