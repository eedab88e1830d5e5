//! Command-line interface. Every subcommand is a thin composition of
//! library calls.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use semsketch_core::encode::encode_grid;
use semsketch_core::grid::aggregate;
use semsketch_core::tsne::{self, TsneParams};
use semsketch_core::{BitDepth, EmbeddingTable, EncoderConfig, GridMap, QueryResult, SeededRng, DEFAULT_BASELINE_BITS};

use crate::bench::{fill_synthetic, machine_descriptor, random_grid, scan_benchmark, synthetic_table};
use crate::error::{Error, Result};
use crate::ingest::ingest_dir;
use crate::label_map_file::read_label_map_file;
use crate::report::{build_report, default_configs, parse_config, render_csv, render_text};
use crate::service::{self, sketch_grid, AppState, QueryRequest};
use crate::store::VectorStore;
use crate::table_file::{load_embedding_table, persist_embedding_table};
use crate::vocab_file::{load_vocabulary, load_word_vectors};

#[derive(Debug, Parser)]
#[command(name = "semsketch", version, about = "Semantic sketch retrieval over concept-map feature vectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the concept embedding table from a vocabulary and word vectors.
    Embed(EmbedArgs),
    /// Aggregate, encode and store a directory of SLM1 label maps.
    Ingest(IngestArgs),
    /// Answer a sketch query against a store.
    Query(QueryArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Time linear-scan queries against a store.
    Bench(BenchArgs),
    /// Fill a new store with seeded synthetic vectors.
    Synth(SynthArgs),
    /// Storage requirement per configuration relative to the one-hot baseline.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 200.0)]
    pub learning_rate: f64,
}

#[derive(Debug, Args)]
pub struct StoreArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 32)]
    pub bits: u32,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub maps: PathBuf,
    #[arg(long)]
    pub table: PathBuf,
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub store: PathBuf,
    /// JSON sketch `{n, cells, k}`; `k` is overridden by `--k` when given.
    #[arg(long, conflicts_with = "map")]
    pub sketch: Option<PathBuf>,
    /// SLM1 label map(s) aggregated to the store's grid.
    #[arg(long, num_args = 1.., required_unless_present = "sketch")]
    pub map: Vec<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub table: PathBuf,
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Embedding table for realistic queries; synthetic if omitted.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub queries: usize,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 150)]
    pub concepts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Extra `n,d,bits` rows.
    #[arg(long = "config")]
    pub configs: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_BASELINE_BITS)]
    pub baseline_bits: u64,
    /// Only the given `--config` rows.
    #[arg(long)]
    pub no_defaults: bool,
    #[arg(long)]
    pub csv: bool,
}

fn output(e: std::io::Error) -> Error {
    Error::Io { path: "<stdout>".into(), source: e }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Embed(a) => embed(a, out),
        Command::Ingest(a) => ingest(a, out),
        Command::Query(a) => query(a, out),
        Command::Serve(a) => serve(a),
        Command::Bench(a) => bench(a, out),
        Command::Synth(a) => synth(a, out),
        Command::Report(a) => report(a, out),
    }
}

fn embed(a: EmbedArgs, out: &mut dyn Write) -> Result<()> {
    let vocab = load_vocabulary(&a.vocab)?;
    let vectors = load_word_vectors(&a.vectors, &vocab)?;
    let params = TsneParams {
        perplexity: a.perplexity,
        iterations: a.iterations,
        learning_rate: a.learning_rate,
        early_exaggeration_iters: TsneParams::default().early_exaggeration_iters.min(a.iterations),
        seed: a.seed,
        ..TsneParams::default()
    };
    let result = tsne::embed(vectors.as_matrix(), vectors.width(), a.d, &params)?;
    let table = EmbeddingTable::build(&vocab, &result.coords, a.d)?;
    persist_embedding_table(&table, &a.out)?;
    writeln!(
        out,
        "m={} d={} perplexity={:.4} initial_kl={:.6} final_kl={:.6} duplicates_perturbed={}",
        table.len(),
        table.d(),
        result.perplexity,
        result.initial_kl,
        result.final_kl,
        result.duplicates_perturbed
    )
    .map_err(output)
}

fn encoder_config(store: &StoreArgs, d: usize) -> Result<EncoderConfig> {
    Ok(EncoderConfig::new(store.n, d, BitDepth::from_bits(store.bits)?)?)
}

/// Opens `path` for appending, creating it with `config` if absent.
fn open_or_create(path: &Path, config: EncoderConfig, scale: &[f32]) -> Result<VectorStore> {
    if path.exists() {
        VectorStore::open_expecting(path, &config, true)
    } else {
        VectorStore::create(path, config, scale)
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Result<()> {
    let table = load_embedding_table(&a.table)?;
    let config = encoder_config(&a.store, table.d())?;
    let mut store = open_or_create(&a.store.store, config, table.scale())?;
    let summary = pool(a.threads.max(1))?.install(|| ingest_dir(&a.maps, &table, &mut store))?;
    for d in &summary.diagnostics {
        eprintln!("skipped: {d}");
    }
    writeln!(
        out,
        "ingested {} segment(s), {} diagnostic(s); store count {}",
        summary.ingested.len(),
        summary.diagnostics.len(),
        store.len()
    )
    .map_err(output)
}

fn write_results(results: &[QueryResult], csv: bool, out: &mut dyn Write) -> Result<()> {
    let mut text = String::new();
    text.push_str(if csv { "rank,segment_id,distance\n" } else { "rank\tsegment_id\tdistance\n" });
    for r in results {
        let sep = if csv { ',' } else { '\t' };
        text.push_str(&format!("{}{sep}{}{sep}{}\n", r.rank, r.segment_id, r.distance));
    }
    out.write_all(text.as_bytes()).map_err(output)
}

fn query(a: QueryArgs, out: &mut dyn Write) -> Result<()> {
    let table = load_embedding_table(&a.table)?;
    let store = VectorStore::open(&a.store)?;
    let n = store.config().n;
    let (grid, k): (GridMap, usize) = match &a.sketch {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
            let mut req: QueryRequest =
                serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
            if let Some(k) = a.k {
                req.k = k as i64;
            }
            sketch_grid(&req, n, table.len()).map_err(|e| Error::Invalid(e.to_string()))?
        }
        None => {
            let maps = a.map.iter().map(|p| read_label_map_file(p, table.len())).collect::<Result<Vec<_>>>()?;
            (aggregate(&maps, n)?, a.k.unwrap_or(10))
        }
    };
    let vector = encode_grid(&grid, &table)?;
    let results = store.knn(&vector, k)?;
    write_results(&results, a.csv, out)
}

fn serve(a: ServeArgs) -> Result<()> {
    let vocab = load_vocabulary(&a.vocab)?;
    let table = load_embedding_table(&a.table)?;
    let config = encoder_config(&a.store, table.d())?;
    let store = open_or_create(&a.store.store, config, table.scale())?;
    let state = Arc::new(AppState::new(vocab, table, store)?);
    let mut runtime = tokio::runtime::Builder::new_multi_thread();
    if a.threads > 0 {
        runtime.worker_threads(a.threads);
    }
    let runtime = runtime.enable_all().build().map_err(|source| Error::Io { path: "<runtime>".into(), source })?;
    runtime.block_on(service::serve(state, a.addr))
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let store = VectorStore::open(&a.store)?;
    let c = *store.config();
    let table = match &a.table {
        Some(p) => load_embedding_table(p)?,
        None => synthetic_table(150, c.d, a.seed)?,
    };
    let mut rng = SeededRng::new(a.seed ^ 0x5eed);
    let queries = (0..a.queries)
        .map(|_| encode_grid(&random_grid(&table, c.n, &mut rng), &table))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let report = scan_benchmark(&store, &queries, a.repetitions, a.threads)?;
    let body = if a.csv { report.to_csv() } else { report.to_text() };
    writeln!(out, "{body}{}", machine_descriptor()).map_err(output)
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let config = encoder_config(&a.store, a.d)?;
    let table = synthetic_table(a.concepts, a.d, a.seed)?;
    let mut store = VectorStore::create(&a.store.store, config, table.scale())?;
    let written = fill_synthetic(&mut store, &table, a.count, a.seed)?;
    writeln!(
        out,
        "wrote {written} synthetic vectors ({} dims, {} bits) to {}",
        config.dims(),
        a.store.bits,
        a.store.store.display()
    )
    .map_err(output)
}

fn report(a: ReportArgs, out: &mut dyn Write) -> Result<()> {
    let mut configs = if a.no_defaults { Vec::new() } else { default_configs() };
    for c in &a.configs {
        configs.push(parse_config(c)?);
    }
    let rows = build_report(&configs, a.baseline_bits)?;
    let body = if a.csv { render_csv(&rows) } else { render_text(&rows) };
    out.write_all(body.as_bytes()).map_err(output)
}
