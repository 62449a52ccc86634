//! Counting processes of delta-records in discrete models.
//!
//! An observation `X_i` is a delta-record when it exceeds the running maximum
//! plus a fixed integer shift: `X_i > M_{i-1} + delta`. This crate provides
//! the discrete hazard machinery behind their counting process (delta failure
//! rates, the martingale compensator, conditional-variance increments), the
//! centering/scaling sequences that make the count asymptotically normal,
//! sums-of-partial-minima diagnostics and a deterministic Monte Carlo engine
//! to verify the limit behaviour empirically.
//!
//! Modules mirror the pipeline:
//!
//! - [`distributions`]: discrete models with exact pmf/survival/failure-rate
//!   evaluation and reproducible sampling;
//! - [`hazard`]: delta-failure-rate tables, compensator, conditional-variance
//!   increments and exact conditional-moment oracles;
//! - [`counter`]: streaming delta-record detection;
//! - [`normalizers`]: centering and scaling sequences per theorem regime;
//! - [`minima`]: sums of partial minima and their law-of-large-numbers
//!   normalization;
//! - [`montecarlo`]: replication engine and normality checks.

pub mod counter;
pub mod distributions;
pub mod error;
pub mod hazard;
pub mod minima;
pub mod montecarlo;
pub mod normalizers;
pub mod numeric;
pub mod presets;
pub mod rng;

pub use counter::{CounterState, DeltaCounter, OrdinaryRecordCounter, StepOutcome};
pub use distributions::{load_tabulated_csv, parse_tabulated_csv, DiscreteModel, ModelSpec, Sampler};
pub use error::{Error, Result};
pub use hazard::{cond_moment_oracle, HazardTable};
pub use minima::{DeheuvelsReport, MinimaSpec, ZSequence};
pub use montecarlo::{
    ks_statistic, moments, run_experiment, trend_check, ExperimentConfig, ExperimentReport,
    Moments, TrendOutcome,
};
pub use normalizers::{NormalizerPlan, Variant};
pub use rng::RngState;
