//! Latency benchmark of the exact scan over random unit vectors.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vsim_core::index::Metadata;
use vsim_core::{DocStatus, DocumentRecord, Index};

#[derive(Debug, Clone, Copy)]
pub struct BenchParams {
    pub docs: usize,
    pub dim: usize,
    pub queries: usize,
    pub k: usize,
    pub workers: usize,
    pub seed: u64,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams { docs: 100_000, dim: 300, queries: 1000, k: 10, workers: 1, seed: 42 }
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub params: BenchParams,
    pub build: Duration,
    pub bytes_resident: usize,
    pub p50: Duration,
    pub p95: Duration,
    pub p99: Duration,
    pub qps: f64,
}

impl std::fmt::Display for BenchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        let p = &self.params;
        writeln!(f, "docs\t{}\ndim\t{}\nqueries\t{}\nworkers\t{}\nk\t{}", p.docs, p.dim, p.queries, p.workers, p.k)?;
        writeln!(f, "build_ms\t{:.1}", ms(self.build))?;
        writeln!(f, "resident_mb\t{:.1}", self.bytes_resident as f64 / (1024.0 * 1024.0))?;
        writeln!(f, "p50_ms\t{:.3}", ms(self.p50))?;
        writeln!(f, "p95_ms\t{:.3}", ms(self.p95))?;
        writeln!(f, "p99_ms\t{:.3}", ms(self.p99))?;
        write!(f, "qps\t{:.1}", self.qps)
    }
}

pub fn random_unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let norm = v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|&x| (f64::from(x) / norm) as f32).collect();
        }
    }
}

pub fn random_index(docs: usize, dim: usize, seed: u64) -> Index {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut index = Index::new(dim).expect("dim >= 1");
    for i in 0..docs {
        let record = DocumentRecord {
            id: format!("doc-{i:08}"),
            vector: random_unit_vector(&mut rng, dim),
            text: String::new(),
            status: if i % 2 == 0 { DocStatus::FactChecked } else { DocStatus::Pending },
            metadata: Metadata::new(),
        };
        index.upsert(record).expect("generated record is valid");
    }
    index
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[Duration], p: f64) -> Duration {
    if sorted.is_empty() {
        return Duration::ZERO;
    }
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn run(params: BenchParams) -> BenchReport {
    let started = Instant::now();
    let index = random_index(params.docs, params.dim, params.seed);
    let build = started.elapsed();
    measure(&index, params, build)
}

/// Times `params.queries` single searches spread over `params.workers` threads.
pub fn measure(index: &Index, params: BenchParams, build: Duration) -> BenchReport {
    let mut rng = StdRng::seed_from_u64(params.seed ^ 0x9e37_79b9_7f4a_7c15);
    let queries: Vec<Vec<f32>> = (0..params.queries).map(|_| random_unit_vector(&mut rng, index.dim())).collect();
    let workers = params.workers.max(1);
    let chunk = queries.len().div_ceil(workers).max(1);

    let wall = Instant::now();
    let mut latencies: Vec<Duration> = std::thread::scope(|scope| {
        let handles: Vec<_> = queries
            .chunks(chunk)
            .map(|batch| {
                scope.spawn(move || {
                    batch
                        .iter()
                        .map(|q| {
                            let t = Instant::now();
                            let hits = index.search(q, params.k, -1.0, None).expect("valid query");
                            std::hint::black_box(hits);
                            t.elapsed()
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("bench worker")).collect()
    });
    let elapsed = wall.elapsed();
    latencies.sort_unstable();
    BenchReport {
        params,
        build,
        bytes_resident: index.stats().bytes_resident,
        p50: percentile(&latencies, 50.0),
        p95: percentile(&latencies, 95.0),
        p99: percentile(&latencies, 99.0),
        qps: latencies.len() as f64 / elapsed.as_secs_f64().max(1e-9),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let samples: Vec<Duration> = (1..=100).map(Duration::from_millis).collect();
        assert_eq!(percentile(&samples, 50.0), Duration::from_millis(50));
        assert_eq!(percentile(&samples, 95.0), Duration::from_millis(95));
        assert_eq!(percentile(&samples, 99.0), Duration::from_millis(99));
        assert_eq!(percentile(&samples[..1], 99.0), Duration::from_millis(1));
        assert_eq!(percentile(&[], 50.0), Duration::ZERO);
    }

    #[test]
    fn small_run_reports_every_query() {
        let report = run(BenchParams { docs: 200, dim: 8, queries: 30, k: 5, workers: 3, seed: 1 });
        assert!(report.p50 <= report.p95 && report.p95 <= report.p99);
        assert!(report.qps > 0.0);
        let text = report.to_string();
        assert!(text.contains("p95_ms\t") && text.contains("qps\t"));
    }

    #[test]
    fn random_index_is_deterministic() {
        let a = random_index(10, 4, 9);
        let b = random_index(10, 4, 9);
        assert_eq!(a.get("doc-00000003").unwrap().vector, b.get("doc-00000003").unwrap().vector);
    }
}
