//! Replication engine and statistical verification.
//!
//! [`run_experiment`] drives `reps` independent counting streams, reduces
//! each at every length in the n-grid, normalizes the final counts through a
//! [`NormalizerPlan`] and summarizes the normalized statistic
//! `T = (N_n - center(n)) / scale(n)`: moments, one-sample KS distance to the
//! standard normal, a fixed-bin histogram and QQ percentiles.
//!
//! Determinism contract: replication `i` draws from the stream seeded by
//! `mix(master_seed, i)`; replications are the unit of parallelism, results
//! land in an indexed buffer and are reduced in index order, so reports are
//! byte-identical across runs and thread counts. `DELTAREC_THREADS` caps the
//! worker count (absent or 0 means one worker per available core).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::counter::run_stream;
use crate::distributions::{DiscreteModel, Sampler};
use crate::error::{Error, Result};
use crate::hazard::HazardTable;
use crate::normalizers::{NormalizerPlan, PlanSummary, VariantRequest};
use crate::numeric::{kolmogorov_cdf, normal_cdf, normal_quantile, KahanSum};
use crate::rng::RngState;

pub const HIST_LO: f64 = -5.0;
pub const HIST_HI: f64 = 5.0;
pub const HIST_BINS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: DiscreteModel,
    pub delta: i32,
    pub variant: VariantRequest,
    pub n_grid: Vec<u64>,
    pub reps: u32,
    pub master_seed: u64,
    /// Optional hazard-table depth override.
    #[serde(default)]
    pub depth: Option<i64>,
    /// Keep per-replication raw counts in the report.
    #[serde(default)]
    pub keep_counts: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    /// Bin masses summing to one; out-of-range values clamp to the edge bins.
    pub masses: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: u64,
    pub center: f64,
    pub scale: f64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub ks: f64,
    pub ks_p_value: f64,
    pub hist: Histogram,
    /// (normal quantile, empirical quantile) pairs at the 99 percentiles.
    pub qq: Vec<(f64, f64)>,
    /// Mean of `V_n / scale(n)^2` across replications (the conditional
    /// variance compensator against the squared scale).
    pub compensator_mean: f64,
    /// Raw per-replication counts, present when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub plan: PlanSummary,
    pub per_n: Vec<NSummary>,
}

impl ExperimentReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Worker cap from `DELTAREC_THREADS` (0 or unset: one per core).
pub fn thread_limit() -> usize {
    let auto = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1);
    match std::env::var("DELTAREC_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => auto,
            Ok(k) => k,
        },
        Err(_) => auto,
    }
}

/// Deterministic indexed parallel map: results are produced by any worker but
/// always reduced in index order.
pub(crate) fn parallel_map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = thread_limit().clamp(1, count.max(1));
    if workers <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut pairs: Vec<(usize, T)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= count {
                            break;
                        }
                        local.push((i, f(i)));
                    }
                    local
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    pairs.sort_by_key(|(i, _)| *i);
    pairs.into_iter().map(|(_, v)| v).collect()
}

/// One-sample Kolmogorov-Smirnov distance to the standard normal.
pub fn ks_statistic(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Precondition(
            "KS distance needs at least 2 samples".into(),
        ));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let phi = normal_cdf(x);
        let above = (i as f64 + 1.0) / n - phi;
        let below = phi - i as f64 / n;
        sup = sup.max(above).max(below);
    }
    Ok(sup)
}

/// Asymptotic KS p-value from the Kolmogorov distribution.
pub fn ks_p_value(d: f64, n_samples: usize) -> f64 {
    1.0 - kolmogorov_cdf((n_samples as f64).sqrt() * d)
}

/// Mean, unbiased variance and the standard skewness/excess-kurtosis
/// estimators (population central moments), with compensated summation.
/// Degenerate variance leaves the higher moments undefined.
pub fn moments(samples: &[f64]) -> Result<Moments> {
    if samples.len() < 2 {
        return Err(Error::Precondition(
            "moments need at least 2 samples".into(),
        ));
    }
    let n = samples.len() as f64;
    let mut acc = KahanSum::new();
    for &x in samples {
        acc.add(x);
    }
    let mean = acc.value() / n;
    let (mut m2, mut m3, mut m4) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2.add(d2);
        m3.add(d2 * d);
        m4.add(d2 * d2);
    }
    let variance = m2.value() / (n - 1.0);
    let m2p = m2.value() / n;
    let (skewness, excess_kurtosis) = if m2p <= 0.0 || samples.len() < 4 {
        (None, None)
    } else {
        (
            Some(m3.value() / n / m2p.powf(1.5)),
            Some(m4.value() / n / (m2p * m2p) - 3.0),
        )
    };
    Ok(Moments {
        mean,
        variance,
        skewness,
        excess_kurtosis,
    })
}

fn histogram(samples: &[f64]) -> Histogram {
    let mut masses = vec![0.0; HIST_BINS];
    let w = (HIST_HI - HIST_LO) / HIST_BINS as f64;
    let share = 1.0 / samples.len() as f64;
    for &x in samples {
        let idx = ((x - HIST_LO) / w).floor() as i64;
        let idx = idx.clamp(0, HIST_BINS as i64 - 1) as usize;
        masses[idx] += share;
    }
    Histogram {
        lo: HIST_LO,
        hi: HIST_HI,
        masses,
    }
}

fn qq_pairs(sorted: &[f64]) -> Vec<(f64, f64)> {
    let n = sorted.len();
    (1..=99)
        .map(|i| {
            let p = i as f64 / 100.0;
            let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
            (normal_quantile(p), sorted[idx])
        })
        .collect()
}

/// Run a full experiment; the report is a pure function of the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.reps < 30 {
        return Err(Error::Precondition(format!(
            "need at least 30 replications, got {}",
            config.reps
        )));
    }
    if config.n_grid.is_empty() {
        return Err(Error::Precondition("empty n grid".into()));
    }
    if config.n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "n grid must be strictly increasing".into(),
        ));
    }
    let table = match config.depth {
        Some(depth) => HazardTable::build_with_depth(&config.model, config.delta, depth)?,
        None => HazardTable::build(&config.model, config.delta)?,
    };
    let plan = NormalizerPlan::new(config.variant, Arc::clone(&table))?;
    let sampler = Sampler::new(&config.model);
    let max_n = *config.n_grid.last().expect("non-empty grid");

    let per_rep: Vec<Result<Vec<(u64, f64)>>> =
        parallel_map_indexed(config.reps as usize, |rep| {
            let mut rng = RngState::for_stream(config.master_seed, rep as u64);
            let snaps = run_stream(&table, &sampler, max_n, &mut rng, &config.n_grid)?;
            Ok(snaps
                .into_iter()
                .map(|s| (s.record_count, s.cond_var_sum))
                .collect())
        });
    let mut rows: Vec<Vec<(u64, f64)>> = Vec::with_capacity(per_rep.len());
    for r in per_rep {
        rows.push(r?);
    }

    let mut per_n = Vec::with_capacity(config.n_grid.len());
    for (j, &n) in config.n_grid.iter().enumerate() {
        let center = plan.center(n)?;
        let scale = plan.scale(n)?;
        if !(scale > 0.0) {
            return Err(Error::Precondition(format!(
                "scale({n}) = {scale} must be positive"
            )));
        }
        let t_samples: Vec<f64> = rows
            .iter()
            .map(|row| (row[j].0 as f64 - center) / scale)
            .collect();
        let mo = moments(&t_samples)?;
        let ks = ks_statistic(&t_samples)?;
        let mut sorted = t_samples.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        let mut comp = KahanSum::new();
        for row in &rows {
            comp.add(row[j].1);
        }
        let compensator_mean = comp.value() / rows.len() as f64 / (scale * scale);
        per_n.push(NSummary {
            n,
            center,
            scale,
            mean: mo.mean,
            variance: mo.variance,
            skewness: mo.skewness,
            excess_kurtosis: mo.excess_kurtosis,
            ks,
            ks_p_value: ks_p_value(ks, t_samples.len()),
            hist: histogram(&t_samples),
            qq: qq_pairs(&sorted),
            compensator_mean,
            counts: config
                .keep_counts
                .then(|| rows.iter().map(|row| row[j].0).collect()),
        });
    }
    Ok(ExperimentReport {
        config: config.clone(),
        plan: plan.summary(&config.n_grid)?,
        per_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub n: u64,
    pub ks: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendOutcome {
    pub pass: bool,
    pub ks_pass: bool,
    pub variance_pass: bool,
    pub rows: Vec<TrendRow>,
}

/// Convergence-trend check across an increasing n grid: the KS distance at
/// the largest n must not exceed the smallest-n value by more than 0.01, and
/// `|variance - 1|` must be weakly improving (0.05 slack for sampling noise).
pub fn trend_check(report: &ExperimentReport) -> Result<TrendOutcome> {
    trend_check_rows(
        &report
            .per_n
            .iter()
            .map(|s| TrendRow {
                n: s.n,
                ks: s.ks,
                variance: s.variance,
            })
            .collect::<Vec<_>>(),
    )
}

/// Trend check over summaries gathered from several reports.
pub fn trend_check_many(reports: &[&ExperimentReport]) -> Result<TrendOutcome> {
    let rows: Vec<TrendRow> = reports
        .iter()
        .flat_map(|r| r.per_n.iter())
        .map(|s| TrendRow {
            n: s.n,
            ks: s.ks,
            variance: s.variance,
        })
        .collect();
    trend_check_rows(&rows)
}

fn trend_check_rows(rows: &[TrendRow]) -> Result<TrendOutcome> {
    if rows.len() < 3 {
        return Err(Error::Precondition(
            "trend check needs at least 3 grid points".into(),
        ));
    }
    if rows.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(Error::Precondition(
            "trend check needs strictly increasing n".into(),
        ));
    }
    let span = rows.last().unwrap().n as f64 / rows.first().unwrap().n as f64;
    if span < 1000.0 {
        return Err(Error::Precondition(
            "trend check needs the grid to span at least 3 decades".into(),
        ));
    }
    let ks_pass = rows.last().unwrap().ks <= rows.first().unwrap().ks + 0.01;
    let variance_pass = rows
        .windows(2)
        .all(|w| (w[1].variance - 1.0).abs() <= (w[0].variance - 1.0).abs() + 0.05);
    Ok(TrendOutcome {
        pass: ks_pass && variance_pass,
        ks_pass,
        variance_pass,
        rows: rows.to_vec(),
    })
}
