//! Pinned experiment presets for the classical discrete families.
//!
//! Each preset fixes the model, delta, normalizer variant, n-grid, replication
//! count and master seed, so documentation tables and regression runs are
//! reproducible bit for bit. Scaled-down copies (same model and normalizers,
//! smaller grid) are available for smoke tests and determinism checks.

use crate::distributions::DiscreteModel;
use crate::error::{Error, Result};
use crate::montecarlo::ExperimentConfig;
use crate::normalizers::VariantRequest;

pub const PRESET_NAMES: [&str; 7] = [
    "example-5.1-weak",
    "example-5.1-pos",
    "example-5.2",
    "example-5.3",
    "example-5.4-neg",
    "example-5.4-delta1",
    "example-5.4-delta2",
];

/// Full-size preset configuration.
pub fn build(name: &str) -> Result<ExperimentConfig> {
    let full_grid = vec![1_000, 10_000, 100_000, 1_000_000];
    let cfg = match name {
        // Weak records of the geometric distribution, exact normalizers.
        "example-5.1-weak" => ExperimentConfig {
            model: DiscreteModel::geometric(0.5)?,
            delta: -1,
            variant: VariantRequest::Thm31a,
            n_grid: full_grid,
            reps: 2000,
            master_seed: 1001,
            depth: None,
            keep_counts: false,
        },
        // Positive-delta records of the geometric distribution.
        "example-5.1-pos" => ExperimentConfig {
            model: DiscreteModel::geometric(0.5)?,
            delta: 1,
            variant: VariantRequest::Thm41,
            n_grid: full_grid,
            reps: 2000,
            master_seed: 1002,
            depth: None,
            keep_counts: false,
        },
        // Negative binomial shares the geometric limiting constants.
        "example-5.2" => ExperimentConfig {
            model: DiscreteModel::negative_binomial(2.0, 0.5)?,
            delta: -1,
            variant: VariantRequest::CorSimplified,
            n_grid: vec![1_000_000],
            reps: 1000,
            master_seed: 1003,
            depth: None,
            keep_counts: false,
        },
        // Zeta: centering log n, scaling sqrt(log n), any delta sign.
        "example-5.3" => ExperimentConfig {
            model: DiscreteModel::zeta(2.0)?,
            delta: -1,
            variant: VariantRequest::CorSimplified,
            n_grid: full_grid,
            reps: 1000,
            master_seed: 1004,
            depth: None,
            keep_counts: false,
        },
        // Poisson, negative delta: m(n) closed forms.
        "example-5.4-neg" => ExperimentConfig {
            model: DiscreteModel::poisson(1.0)?,
            delta: -1,
            variant: VariantRequest::PoissonSpecial,
            n_grid: full_grid,
            reps: 1000,
            master_seed: 1005,
            depth: None,
            keep_counts: false,
        },
        // Poisson, delta = 1: log log n scaling.
        "example-5.4-delta1" => ExperimentConfig {
            model: DiscreteModel::poisson(1.0)?,
            delta: 1,
            variant: VariantRequest::PoissonSpecial,
            n_grid: full_grid,
            reps: 1000,
            master_seed: 1006,
            depth: None,
            keep_counts: false,
        },
        // Poisson, delta = 2: the finite-record regime; raw counts kept so
        // the stabilization fraction can be read off the report.
        "example-5.4-delta2" => ExperimentConfig {
            model: DiscreteModel::poisson(1.0)?,
            delta: 2,
            variant: VariantRequest::Thm41,
            n_grid: vec![100_000, 1_000_000],
            reps: 200,
            master_seed: 1007,
            depth: None,
            keep_counts: true,
        },
        other => {
            return Err(Error::Parse(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}

/// Scaled-down copy of a preset (same model, delta and normalizers) for smoke
/// tests and determinism checks.
pub fn build_scaled(name: &str, max_n: u64, reps: u32) -> Result<ExperimentConfig> {
    let mut cfg = build(name)?;
    cfg.n_grid.retain(|&n| n <= max_n);
    if cfg.n_grid.is_empty() || *cfg.n_grid.last().unwrap() < max_n {
        cfg.n_grid.push(max_n);
    }
    cfg.reps = reps;
    Ok(cfg)
}
