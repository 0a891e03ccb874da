//! Benchmark harness: runs algorithm x size x seed x cost-range grids,
//! records runtimes and solution quality, and summarizes scaling.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{gap_percent, hungarian, solve_exact, solve_with_warm_start, SolveLimits};
use crate::heuristic::{nearest_neighbor, warm_start, TabuParams};
use crate::instance::{generate, CostMatrix, CostRange, GenSpec};
use crate::oracle::{brute_force, greedy_edge, held_karp, two_opt_descent};
use crate::oracle::{BRUTE_FORCE_CAP, HELD_KARP_CAP};
use crate::tour::Tour;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Tabu warm start, then exact branch-and-bound.
    Gta,
    /// Exact branch-and-bound from a nearest-neighbor incumbent.
    ExactCold,
    TabuOnly,
    Nn,
    GreedyEdge,
    TwoOpt,
    HeldKarp,
    BruteForce,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Gta,
        Algorithm::ExactCold,
        Algorithm::TabuOnly,
        Algorithm::Nn,
        Algorithm::GreedyEdge,
        Algorithm::TwoOpt,
        Algorithm::HeldKarp,
        Algorithm::BruteForce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gta => "gta",
            Algorithm::ExactCold => "exact_cold",
            Algorithm::TabuOnly => "tabu_only",
            Algorithm::Nn => "nn",
            Algorithm::GreedyEdge => "greedy_edge",
            Algorithm::TwoOpt => "two_opt",
            Algorithm::HeldKarp => "held_karp",
            Algorithm::BruteForce => "brute_force",
        }
    }

    fn cap(self) -> Option<usize> {
        match self {
            Algorithm::HeldKarp => Some(HELD_KARP_CAP),
            Algorithm::BruteForce => Some(BRUTE_FORCE_CAP),
            _ => None,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Csv(format!("unknown algorithm {s:?}")))
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_n_values() -> Vec<usize> {
    vec![10, 20, 50, 100, 200, 500]
}

fn default_seeds() -> Vec<u64> {
    vec![42, 65, 7, 29, 133]
}

fn default_ranges() -> Vec<CostRange> {
    vec![CostRange::new(1, 10)]
}

fn default_repetitions() -> usize {
    3
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Gta]
}

/// Experiment grid. Every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSpec {
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_ranges")]
    pub ranges: Vec<CostRange>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Per-run limit for the exact algorithms, 0 for none.
    #[serde(default)]
    pub time_limit_ms: u64,
    #[serde(default)]
    pub parallel: bool,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            algorithms: default_algorithms(),
            n_values: default_n_values(),
            seeds: default_seeds(),
            ranges: default_ranges(),
            repetitions: default_repetitions(),
            time_limit_ms: 0,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub n: usize,
    pub seed: u64,
    pub range_low: i64,
    pub range_high: i64,
    pub repetition: usize,
    /// Wall time of the solve call alone, from the monotonic clock.
    pub runtime_ms: f64,
    pub cost: i64,
    /// Certified optimal: the exact solver closed its gap, an oracle ran,
    /// or a heuristic tour met the assignment lower bound.
    pub optimal: bool,
    pub gap_percent: f64,
    pub bnb_nodes: u64,
    pub parallel_timed: bool,
}

impl BenchRecord {
    pub fn range(&self) -> CostRange {
        CostRange::new(self.range_low, self.range_high)
    }

    fn sort_key(&self) -> (Algorithm, usize, u64, i64, i64, usize) {
        (
            self.algorithm,
            self.n,
            self.seed,
            self.range_low,
            self.range_high,
            self.repetition,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub algorithm: Algorithm,
    pub n: usize,
    pub seed: u64,
    pub range: CostRange,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteOutcome {
    pub records: Vec<BenchRecord>,
    pub skipped: Vec<SkippedCell>,
}

struct RunResult {
    runtime_ms: f64,
    cost: i64,
    optimal: bool,
    gap_percent: f64,
    bnb_nodes: u64,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let started = Instant::now();
    let value = f()?;
    let micros = started.elapsed().as_micros() as f64;
    Ok((value, micros / 1000.0))
}

fn heuristic_result(m: &CostMatrix, tour: Tour, runtime_ms: f64) -> Result<RunResult> {
    let bound = hungarian(m, &[], &[])?.bound;
    Ok(RunResult {
        runtime_ms,
        cost: tour.cost,
        optimal: tour.cost == bound,
        gap_percent: gap_percent(tour.cost, bound)?,
        bnb_nodes: 0,
    })
}

fn run_one(algorithm: Algorithm, m: &CostMatrix, time_limit_ms: u64) -> Result<RunResult> {
    let n = m.n();
    let limits = SolveLimits {
        time_limit_ms,
        node_limit: 0,
    };
    let exact = |report: crate::exact::SolveReport, runtime_ms: f64| RunResult {
        runtime_ms,
        cost: report.optimal_cost,
        optimal: report.optimal,
        gap_percent: report.gap_percent,
        bnb_nodes: report.bnb_nodes_explored,
    };
    let oracle = |tour: Tour, runtime_ms: f64| RunResult {
        runtime_ms,
        cost: tour.cost,
        optimal: true,
        gap_percent: 0.0,
        bnb_nodes: 0,
    };
    Ok(match algorithm {
        Algorithm::Gta => {
            let (r, ms) = timed(|| solve_with_warm_start(m, &TabuParams::for_size(n), limits))?;
            exact(r, ms)
        }
        Algorithm::ExactCold => {
            let (r, ms) = timed(|| solve_exact(m, None, limits))?;
            exact(r, ms)
        }
        Algorithm::TabuOnly => {
            let (out, ms) = timed(|| warm_start(m, &TabuParams::for_size(n)))?;
            heuristic_result(m, out.tour, ms)?
        }
        Algorithm::Nn => {
            let (t, ms) = timed(|| nearest_neighbor(m, 0))?;
            heuristic_result(m, t, ms)?
        }
        Algorithm::GreedyEdge => {
            let (t, ms) = timed(|| Ok(greedy_edge(m)))?;
            heuristic_result(m, t, ms)?
        }
        Algorithm::TwoOpt => {
            let (t, ms) = timed(|| Ok(two_opt_descent(m, &nearest_neighbor(m, 0)?)))?;
            heuristic_result(m, t, ms)?
        }
        Algorithm::HeldKarp => {
            let (t, ms) = timed(|| held_karp(m))?;
            oracle(t, ms)
        }
        Algorithm::BruteForce => {
            let (t, ms) = timed(|| brute_force(m))?;
            oracle(t, ms)
        }
    })
}

/// Runs every (algorithm, n, seed, range, repetition) cell. Instances are
/// generated fresh per (n, seed, range) and generation is not timed. Cells
/// over an oracle's size cap are reported in `skipped`.
pub fn run_suite(spec: &SuiteSpec) -> Result<SuiteOutcome> {
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for &algorithm in &spec.algorithms {
        for &n in &spec.n_values {
            for &seed in &spec.seeds {
                for &range in &spec.ranges {
                    if let Some(cap) = algorithm.cap().filter(|&cap| n > cap) {
                        skipped.push(SkippedCell {
                            algorithm,
                            n,
                            seed,
                            range,
                            reason: format!("n = {n} exceeds the {algorithm} cap of {cap}"),
                        });
                        continue;
                    }
                    for repetition in 0..spec.repetitions {
                        cells.push((algorithm, GenSpec::uniform(n, seed, range), repetition));
                    }
                }
            }
        }
    }

    let run_cell = |&(algorithm, gen, repetition): &(Algorithm, GenSpec, usize)| {
        let m = generate(&gen)?.matrix;
        let r = run_one(algorithm, &m, spec.time_limit_ms)?;
        log::info!(
            "{algorithm} n={} seed={} range={} rep={repetition}: cost {} in {:.1} ms",
            gen.n,
            gen.seed,
            gen.cost_range,
            r.cost,
            r.runtime_ms
        );
        Ok(BenchRecord {
            algorithm,
            n: gen.n,
            seed: gen.seed,
            range_low: gen.cost_range.low,
            range_high: gen.cost_range.high,
            repetition,
            runtime_ms: r.runtime_ms,
            cost: r.cost,
            optimal: r.optimal,
            gap_percent: r.gap_percent,
            bnb_nodes: r.bnb_nodes,
            parallel_timed: spec.parallel,
        })
    };

    let mut records = if spec.parallel {
        cells.par_iter().map(run_cell).collect::<Result<Vec<_>>>()?
    } else {
        cells.iter().map(run_cell).collect::<Result<Vec<_>>>()?
    };
    records.sort_by_key(|a| a.sort_key());
    Ok(SuiteOutcome { records, skipped })
}

/// Least-squares line through `(ln n, ln runtime)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    /// Natural-log intercept: runtime ~ exp(intercept) * n^exponent.
    pub intercept: f64,
    pub r_squared: f64,
    /// Some median runtime was zero and was clamped to 1 ms.
    pub clamped: bool,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        (values[k / 2 - 1] + values[k / 2]) / 2.0
    }
}

/// Ordinary least squares on log-log pairs.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    let distinct: BTreeSet<u64> = points.iter().map(|p| p.0.to_bits()).collect();
    if distinct.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 distinct sizes, got {}",
            distinct.len()
        )));
    }
    let mut clamped = false;
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, t)| {
            let t = if t <= 0.0 {
                clamped = true;
                1.0
            } else {
                t
            };
            (n.ln(), t.ln())
        })
        .collect();
    let k = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let exponent = sxy / sxx;
    let intercept = mean_y - exponent * mean_x;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - exponent * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON * k {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(FitResult {
        exponent,
        intercept,
        r_squared,
        clamped,
    })
}

/// Fits `runtime ~ n^k` over one algorithm's records, taking the median
/// runtime per `n` across seeds, ranges and repetitions.
pub fn fit_exponent(records: &[BenchRecord]) -> Result<FitResult> {
    let algorithms: BTreeSet<Algorithm> = records.iter().map(|r| r.algorithm).collect();
    if algorithms.len() > 1 {
        return Err(Error::Fit(format!(
            "records mix {} algorithms",
            algorithms.len()
        )));
    }
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_n.entry(r.n).or_default().push(r.runtime_ms);
    }
    let points: Vec<(f64, f64)> = by_n
        .into_iter()
        .map(|(n, mut ts)| (n as f64, median(&mut ts)))
        .collect();
    fit_power_law(&points)
}

const MIN_RUNTIME_MS: f64 = 1e-3;

/// Max/min ratio, per `n`, of the per-seed median runtimes.
pub fn seed_spread(records: &[BenchRecord]) -> Result<BTreeMap<usize, f64>> {
    let mut cells: BTreeMap<usize, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in records {
        cells
            .entry(r.n)
            .or_default()
            .entry(r.seed)
            .or_default()
            .push(r.runtime_ms);
    }
    if cells.is_empty() {
        return Err(Error::MissingCells("no records".into()));
    }
    cells
        .into_iter()
        .map(|(n, seeds)| {
            if seeds.len() < 2 {
                return Err(Error::MissingCells(format!(
                    "n = {n} has fewer than 2 seeds"
                )));
            }
            let medians: Vec<f64> = seeds
                .into_values()
                .map(|mut ts| median(&mut ts).max(MIN_RUNTIME_MS))
                .collect();
            let max = medians.iter().copied().fold(f64::MIN, f64::max);
            let min = medians.iter().copied().fold(f64::MAX, f64::min);
            Ok((n, max / min))
        })
        .collect()
}

/// Per `n`, median runtime of the lower cost range divided by the median
/// of the higher one. Each `n` needs exactly two ranges.
pub fn range_spread(records: &[BenchRecord]) -> Result<BTreeMap<usize, f64>> {
    let mut cells: BTreeMap<usize, BTreeMap<CostRange, Vec<f64>>> = BTreeMap::new();
    for r in records {
        cells
            .entry(r.n)
            .or_default()
            .entry(r.range())
            .or_default()
            .push(r.runtime_ms);
    }
    if cells.is_empty() {
        return Err(Error::MissingCells("no records".into()));
    }
    cells
        .into_iter()
        .map(|(n, ranges)| {
            if ranges.len() != 2 {
                return Err(Error::MissingCells(format!(
                    "n = {n} has {} cost ranges, need 2",
                    ranges.len()
                )));
            }
            let mut medians = ranges
                .into_values()
                .map(|mut ts| median(&mut ts).max(MIN_RUNTIME_MS));
            let low = medians.next().expect("two ranges");
            let high = medians.next().expect("two ranges");
            Ok((n, low / high))
        })
        .collect()
}

/// CSV with a fixed header and one row per record, in the given order.
pub fn write_csv(records: &[BenchRecord]) -> Result<String> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| Error::Csv(e.to_string()))?;
    for r in records {
        writer.serialize(r).map_err(|e| Error::Csv(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
}

pub const CSV_HEADER: [&str; 12] = [
    "algorithm",
    "n",
    "seed",
    "range_low",
    "range_high",
    "repetition",
    "runtime_ms",
    "cost",
    "optimal",
    "gap_percent",
    "bnb_nodes",
    "parallel_timed",
];

pub fn read_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Csv(format!("unexpected header {headers:?}")));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::Csv(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(algorithm: Algorithm, n: usize, seed: u64, runtime_ms: f64) -> BenchRecord {
        BenchRecord {
            algorithm,
            n,
            seed,
            range_low: 1,
            range_high: 10,
            repetition: 0,
            runtime_ms,
            cost: 100,
            optimal: true,
            gap_percent: 0.0,
            bnb_nodes: 1,
            parallel_timed: false,
        }
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<BenchRecord> {
        [10usize, 20, 50, 100, 200, 500]
            .iter()
            .map(|&n| record(Algorithm::Gta, n, 42, f(n as f64)))
            .collect()
    }

    #[test]
    fn exact_quadratic() {
        let fit = fit_exponent(&synthetic(|n| 3.0 * n * n)).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-6);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn planted_exponent() {
        let fit = fit_exponent(&synthetic(|n| 0.7 * n.powf(2.02))).unwrap();
        assert!((fit.exponent - 2.02).abs() < 0.01);
    }

    #[test]
    fn constant_runtime() {
        let fit = fit_exponent(&synthetic(|_| 12.0)).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn fit_errors_and_clamping() {
        let two = vec![
            record(Algorithm::Gta, 10, 1, 1.0),
            record(Algorithm::Gta, 20, 1, 2.0),
        ];
        assert!(matches!(fit_exponent(&two), Err(Error::Fit(_))));
        let mut mixed = synthetic(|n| n);
        mixed[0].algorithm = Algorithm::Nn;
        assert!(matches!(fit_exponent(&mixed), Err(Error::Fit(_))));
        let fit = fit_exponent(&synthetic(|n| if n < 15.0 { 0.0 } else { n })).unwrap();
        assert!(fit.clamped);
    }

    #[test]
    fn median_takes_middle() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn seed_spread_ratios() {
        let same = vec![
            record(Algorithm::Gta, 50, 1, 80.0),
            record(Algorithm::Gta, 50, 2, 80.0),
        ];
        assert_eq!(seed_spread(&same).unwrap()[&50], 1.0);
        let spread = vec![
            record(Algorithm::Gta, 50, 1, 100.0),
            record(Algorithm::Gta, 50, 2, 250.0),
        ];
        assert_eq!(seed_spread(&spread).unwrap()[&50], 2.5);
        assert!(matches!(
            seed_spread(&spread[..1]),
            Err(Error::MissingCells(_))
        ));
    }

    #[test]
    fn range_spread_ratio() {
        let mut wide = record(Algorithm::Gta, 50, 1, 40.0);
        wide.range_low = 10;
        wide.range_high = 100;
        let records = vec![record(Algorithm::Gta, 50, 1, 60.0), wide];
        assert_eq!(range_spread(&records).unwrap()[&50], 1.5);
        assert!(range_spread(&records[..1]).is_err());
    }

    #[test]
    fn csv_shapes() {
        let empty = write_csv(&[]).unwrap();
        assert_eq!(empty, format!("{}\n", CSV_HEADER.join(",")));
        assert!(read_csv(&empty).unwrap().is_empty());
        let one = write_csv(&[record(Algorithm::TwoOpt, 10, 42, 1.25)]).unwrap();
        assert_eq!(one.lines().count(), 2);
        assert_eq!(
            one.lines().nth(1).unwrap(),
            "two_opt,10,42,1,10,0,1.25,100,true,0.0,1,false"
        );
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let mut records = synthetic(|n| n.powf(1.37) / 3.0);
        records[2].gap_percent = 100.0 / 3.0;
        records[3].optimal = false;
        let text = write_csv(&records).unwrap();
        assert_eq!(read_csv(&text).unwrap(), records);
    }

    #[test]
    fn suite_runs_and_skips_capped_cells() {
        let spec = SuiteSpec {
            algorithms: vec![Algorithm::Gta, Algorithm::BruteForce, Algorithm::Nn],
            n_values: vec![8, 12],
            seeds: vec![42],
            ranges: vec![CostRange::new(1, 10)],
            repetitions: 1,
            time_limit_ms: 0,
            parallel: false,
        };
        let out = run_suite(&spec).unwrap();
        assert_eq!(out.records.len(), 5);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].algorithm, Algorithm::BruteForce);
        assert_eq!(out.skipped[0].n, 12);
        let gta8 = &out.records[0];
        let bf8 = out
            .records
            .iter()
            .find(|r| r.algorithm == Algorithm::BruteForce)
            .unwrap();
        assert_eq!((gta8.algorithm, gta8.n), (Algorithm::Gta, 8));
        assert_eq!(gta8.cost, bf8.cost);
        for r in &out.records {
            assert_eq!(r.optimal, r.gap_percent == 0.0);
        }
    }

    #[test]
    fn suite_spec_defaults_from_json() {
        let spec: SuiteSpec = serde_json::from_str("{}").unwrap();
        assert_eq!(spec, SuiteSpec::default());
        assert_eq!(spec.seeds, vec![42, 65, 7, 29, 133]);
        let spec: SuiteSpec = serde_json::from_str(
            r#"{"algorithms": ["gta", "exact_cold"], "ranges": [{"low": 10, "high": 100}]}"#,
        )
        .unwrap();
        assert_eq!(spec.algorithms, vec![Algorithm::Gta, Algorithm::ExactCold]);
        assert_eq!(spec.ranges, vec![CostRange::new(10, 100)]);
    }
}
