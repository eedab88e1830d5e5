//! Synthetic stores and the linear-scan timing benchmark.

use std::time::Instant;

use semsketch_core::encode::encode_grid;
use semsketch_core::{ConceptVocabulary, EmbeddingTable, GridMap, SeededRng, SemanticFeatureVector};

use crate::error::{Error, Result};
use crate::store::VectorStore;

/// Collection size of the reference timing (vectors scanned per query).
pub const REFERENCE_VECTORS: u64 = 1_046_235;
/// Reference mean scan time in milliseconds for that collection.
pub const REFERENCE_MEAN_MS: f64 = 974.0;
/// Dimensionality of the reference vectors.
pub const REFERENCE_DIMS: u64 = 2048;

/// Reference throughput in vector-dimensions per millisecond (≈ 2.2·10⁶).
pub fn reference_dims_per_ms() -> f64 {
    (REFERENCE_VECTORS * REFERENCE_DIMS) as f64 / REFERENCE_MEAN_MS
}

/// Random `m`-concept embedding table (seeded), normalized like a real one.
pub fn synthetic_table(m: usize, d: usize, seed: u64) -> Result<EmbeddingTable> {
    let labels: Vec<String> =
        (0..m).map(|i| if i == 0 { "background".to_string() } else { format!("concept{i}") }).collect();
    let vocab = ConceptVocabulary::from_labels(&labels, "synthetic")?;
    let mut rng = SeededRng::new(seed);
    let coords: Vec<f64> = (0..m * d).map(|_| rng.uniform() * 2.0 - 1.0).collect();
    Ok(EmbeddingTable::build(&vocab, &coords, d)?)
}

/// Random grid with every cell drawn uniformly from the table's concepts.
pub fn random_grid(table: &EmbeddingTable, n: usize, rng: &mut SeededRng) -> GridMap {
    let m = table.len() as u64;
    let cells = (0..n * n).map(|_| rng.below(m) as u16).collect();
    GridMap::new(n, cells).expect("n >= 1")
}

/// Seeded stream of `count` vectors built from random grids, so every cell
/// slice is a valid embedding coordinate.
pub fn synthetic_vectors(
    table: &EmbeddingTable,
    n: usize,
    count: usize,
    seed: u64,
) -> impl Iterator<Item = SemanticFeatureVector> + '_ {
    let mut rng = SeededRng::new(seed);
    (0..count).map(move |_| encode_grid(&random_grid(table, n, &mut rng), table).expect("ids come from the table"))
}

/// Fills a store with `count` synthetic vectors, ids `0..count`.
pub fn fill_synthetic(store: &mut VectorStore, table: &EmbeddingTable, count: usize, seed: u64) -> Result<usize> {
    let n = store.config().n;
    store.extend((0u64..).zip(synthetic_vectors(table, n, count, seed)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub vectors: u64,
    pub dims: u64,
    pub queries: usize,
    pub repetitions: usize,
    pub threads: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    /// Scanned vector-dimensions per millisecond at the mean.
    pub dims_per_ms: f64,
    /// Mean scaled linearly to [`REFERENCE_VECTORS`].
    pub extrapolated_ms: f64,
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Times full top-10 scans of `store` for every query, `repetitions` times
/// each, with the record range split over `threads` partitions on a pool of
/// that size.
pub fn scan_benchmark(
    store: &VectorStore,
    queries: &[SemanticFeatureVector],
    repetitions: usize,
    threads: usize,
) -> Result<BenchReport> {
    if store.is_empty() {
        return Err(Error::Invalid("cannot benchmark an empty store".into()));
    }
    if queries.is_empty() {
        return Err(Error::Invalid("no benchmark queries".into()));
    }
    if repetitions == 0 {
        return Err(Error::Invalid("repetitions must be at least 1".into()));
    }
    let threads = threads.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let mut samples = Vec::with_capacity(queries.len() * repetitions);
    pool.install(|| -> Result<()> {
        for _ in 0..repetitions {
            for q in queries {
                let start = Instant::now();
                let hits = store.knn_partitioned(q, 10, threads)?;
                std::hint::black_box(hits);
                samples.push(start.elapsed().as_secs_f64() * 1e3);
            }
        }
        Ok(())
    })?;
    let mean_ms = samples.iter().sum::<f64>() / samples.len() as f64;
    samples.sort_by(f64::total_cmp);
    let vectors = store.len() as u64;
    let dims = store.config().dims() as u64;
    Ok(BenchReport {
        vectors,
        dims,
        queries: queries.len(),
        repetitions,
        threads,
        mean_ms,
        p50_ms: percentile(&samples, 0.5),
        p95_ms: percentile(&samples, 0.95),
        dims_per_ms: (vectors * dims) as f64 / mean_ms,
        extrapolated_ms: mean_ms * (REFERENCE_VECTORS as f64 / vectors as f64),
    })
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        format!(
            "vectors          {}\n\
             dims             {}\n\
             queries          {} x {} repetitions\n\
             threads          {}\n\
             mean             {:.3} ms\n\
             p50              {:.3} ms\n\
             p95              {:.3} ms\n\
             throughput       {:.0} vector-dims/ms ({:.2}x reference)\n\
             extrapolated     {:.1} ms for {} vectors (reference {} ms)\n",
            self.vectors,
            self.dims,
            self.queries,
            self.repetitions,
            self.threads,
            self.mean_ms,
            self.p50_ms,
            self.p95_ms,
            self.dims_per_ms,
            self.dims_per_ms / reference_dims_per_ms(),
            self.extrapolated_ms,
            REFERENCE_VECTORS,
            REFERENCE_MEAN_MS,
        )
    }

    pub fn to_csv(&self) -> String {
        format!(
            "vectors,dims,queries,repetitions,threads,mean_ms,p50_ms,p95_ms,dims_per_ms,extrapolated_ms\n\
             {},{},{},{},{},{:.6},{:.6},{:.6},{:.3},{:.6}\n",
            self.vectors,
            self.dims,
            self.queries,
            self.repetitions,
            self.threads,
            self.mean_ms,
            self.p50_ms,
            self.p95_ms,
            self.dims_per_ms,
            self.extrapolated_ms
        )
    }
}

/// One line describing the machine the benchmark ran on.
pub fn machine_descriptor() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("machine: {cpu}; {cores} hardware threads; {}/{}", std::env::consts::OS, std::env::consts::ARCH)
}
