//! Sums of partial minima and their normalization.
//!
//! Attach a positive non-increasing value `z_k` to each level `k`; the
//! transformed observations `z_{X_i}` have distribution function
//! `G(z) = y_{j-1}` on `[z_j, z_{j-1})`, inverse `G^-(1/t) = z_{m(t)}`, and
//! the running-minimum sums `S_n = sum_i min(z_{X_1}, ..., z_{X_i})` obey a
//! weak law of large numbers with normalizer `H(log n)`, where `H` has the
//! exact staircase form
//!
//! `H(log t) = sum_{j=0}^{m(t)} z_j r_j / y_j - rho(t)`,
//! `rho(t) = z_{m(t)} (1/y_{m(t)} - t)`.
//!
//! Production code always evaluates `H` by this staircase; numeric
//! quadrature of `G^-(1/u)` exists only as a test oracle.

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteModel, Sampler};
use crate::error::{Error, Result};
use crate::hazard::HazardTable;
use crate::numeric::KahanSum;
use crate::rng::RngState;

/// Choice of the attached non-increasing sequence.
#[derive(Debug, Clone)]
pub enum ZSequence {
    /// `z_k = y_k` (the survival sequence).
    Survival,
    /// `z_k = y_{k+shift}` for a fixed shift (positive-delta variance sums).
    SurvivalShifted { shift: i32 },
    /// `z_k` = conditional-variance increment of a negative-delta hazard
    /// table (decreasing by construction).
    CondVar { table: std::sync::Arc<HazardTable> },
    /// Explicit table, continued with its last value beyond the end.
    Explicit { values: Vec<f64> },
}

/// A model together with an attached z-sequence.
#[derive(Debug, Clone)]
pub struct MinimaSpec {
    model: DiscreteModel,
    z: ZSequence,
    sampler: Sampler,
}

impl MinimaSpec {
    pub fn survival(model: DiscreteModel) -> Self {
        let sampler = Sampler::new(&model);
        Self {
            model,
            z: ZSequence::Survival,
            sampler,
        }
    }

    pub fn survival_shifted(model: DiscreteModel, shift: i32) -> Self {
        let sampler = Sampler::new(&model);
        Self {
            model,
            z: ZSequence::SurvivalShifted { shift },
            sampler,
        }
    }

    pub fn cond_var(table: std::sync::Arc<HazardTable>) -> Result<Self> {
        if table.delta() >= 0 {
            return Err(Error::InvalidParameter {
                name: "table",
                reason: "conditional-variance z-sequences need delta < 0 (decreasing z)".into(),
            });
        }
        let model = table.model().clone();
        let sampler = Sampler::new(&model);
        Ok(Self {
            model,
            z: ZSequence::CondVar { table },
            sampler,
        })
    }

    pub fn explicit(model: DiscreteModel, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "need at least one value".into(),
            });
        }
        for w in values.windows(2) {
            if !(w[1] > 0.0) || w[1] > w[0] {
                return Err(Error::InvalidParameter {
                    name: "values",
                    reason: "z must be positive and non-increasing".into(),
                });
            }
        }
        if !(values[0] > 0.0) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "z must be positive".into(),
            });
        }
        let sampler = Sampler::new(&model);
        Ok(Self {
            model,
            z: ZSequence::Explicit { values },
            sampler,
        })
    }

    pub fn model(&self) -> &DiscreteModel {
        &self.model
    }

    /// `z_k`.
    pub fn z_at(&self, k: i64) -> f64 {
        debug_assert!(k >= 0);
        match &self.z {
            ZSequence::Survival => self.model.survival(k),
            ZSequence::SurvivalShifted { shift } => self.model.survival(k + *shift as i64),
            ZSequence::CondVar { table } => table.cond_var_increment(k),
            ZSequence::Explicit { values } => {
                let idx = (k as usize).min(values.len() - 1);
                values[idx]
            }
        }
    }

    /// `G^-(1/t) = z_{m(t)}` for `t > 1`.
    pub fn g_inverse(&self, t: f64) -> f64 {
        assert!(t > 1.0, "g_inverse needs t > 1");
        self.z_at(self.model.quantile_m(t))
    }

    /// Exact staircase evaluation of `H(log t)` for `t > 1`.
    pub fn h_log(&self, t: f64) -> f64 {
        assert!(t > 1.0, "h_log needs t > 1");
        let m = self.model.quantile_m(t);
        let mut acc = KahanSum::new();
        for j in 0..=m {
            // (z_j / y_j) * r_j keeps the Survival choice exactly equal to
            // sum r_j, term by term.
            let y = self.model.survival(j);
            acc.add(self.z_at(j) / y * self.model.failure_rate(j));
        }
        let rho = self.z_at(m) * (1.0 / self.model.survival(m) - t);
        acc.value() - rho
    }

    /// Total mass `H(infinity) = sum_j z_j r_j / y_j` when it is finite;
    /// `None` when the series diverges.
    pub fn h_limit(&self) -> Option<f64> {
        // Divergence is decided analytically where possible: the terms are
        // z_j r_j / y_j, and z_j / y_j is bounded below by a positive
        // constant for every built-in choice except a strictly shifted
        // survival with positive shift on a light tail.
        let converges = match &self.z {
            ZSequence::Survival | ZSequence::CondVar { .. } => false, // sum r_j diverges
            ZSequence::Explicit { .. } => false, // constant continuation dominates sum r_j
            ZSequence::SurvivalShifted { shift } if *shift <= 0 => false,
            ZSequence::SurvivalShifted { shift } => {
                !crate::normalizers::e_sum_diverges(&self.model, *shift)
            }
        };
        if !converges {
            return None;
        }
        let mut acc = KahanSum::new();
        let mut j = 0i64;
        let mut tail = f64::INFINITY;
        while tail > 1e-12 && j < 10_000_000 {
            let y = self.model.survival(j);
            if y <= 0.0 {
                return Some(acc.value());
            }
            let term = self.z_at(j) / y * self.model.failure_rate(j);
            acc.add(term);
            // Terms are dominated by z_j / y_j <= z_j / y_j; for the
            // converging case (shifted survival) the remainder telescopes
            // below sum_{i>j} r-sup * e-ish, bounded by the survival ratio.
            tail = self.z_at(j) / y;
            j += 1;
        }
        Some(acc.value())
    }

    /// Simulate `S_n = sum_{i<=n} min(z_{X_1}, ..., z_{X_i})` in O(n) time
    /// and O(1) memory. Deterministic given the RNG state.
    pub fn simulate_partial_minima(&self, n: u64, rng: &mut RngState) -> f64 {
        assert!(n >= 1);
        let mut acc = KahanSum::new();
        let mut running_min = f64::INFINITY;
        for _ in 0..n {
            let x = self.sampler.draw(rng);
            let z = self.z_at(x);
            if z < running_min {
                running_min = z;
            }
            acc.add(running_min);
        }
        acc.value()
    }

    /// Deheuvels diagnostics across a decade grid up to `n`: the growth
    /// ratio `H(x_n + log n)/H(log n)` with `x_n = log(log n + 3)`, and the
    /// dispersion ratio `sum_{k<=n} k G^-(1/k)^2 / (sum_{k<=n} G^-(1/k))^2`,
    /// flagged as converging when they move toward 1 and 0 respectively.
    pub fn deheuvels_diagnostics(&self, n: u64) -> Result<DeheuvelsReport> {
        if n < 10 {
            return Err(Error::Precondition("need n >= 10".into()));
        }
        let mut grid = Vec::new();
        let mut v = 10u64;
        while v < n {
            grid.push(v);
            v = v.saturating_mul(10);
        }
        grid.push(n);

        let mut rows = Vec::with_capacity(grid.len());
        // Single incremental sweep for the dispersion sums.
        let mut sum_g = KahanSum::new();
        let mut sum_kg2 = KahanSum::new();
        let mut level = 0i64; // m(k), non-decreasing in k
        let mut z_level = self.z_at(0);
        let mut y_level = self.model.survival(0);
        let mut grid_idx = 0usize;
        for k in 1..=n {
            let inv = 1.0 / k as f64;
            while y_level >= inv {
                level += 1;
                z_level = self.z_at(level);
                y_level = self.model.survival(level);
            }
            // level = m(k) once y_level < 1/k (k = 1 gives m = 0 when y_0 < 1).
            let g = z_level;
            sum_g.add(g);
            sum_kg2.add(k as f64 * g * g);
            if k == grid[grid_idx] {
                let h_log_n = self.h_log(k as f64);
                let x_n = ((k as f64).ln() + 3.0).ln();
                let h_grown = self.h_log(k as f64 * ((k as f64).ln() + 3.0));
                let a1_ratio = h_grown / h_log_n;
                let denom = sum_g.value();
                let a2_ratio = sum_kg2.value() / (denom * denom);
                rows.push(DeheuvelsRow {
                    n: k,
                    h_log_n,
                    x_n,
                    a1_ratio,
                    a2_ratio,
                });
                grid_idx += 1;
            }
        }
        let a1_converging = rows.len() >= 2
            && rows.last().unwrap().a1_ratio <= rows.first().unwrap().a1_ratio + 1e-9;
        let a2_converging = rows.len() >= 2
            && rows.last().unwrap().a2_ratio < rows.first().unwrap().a2_ratio;
        let h_limit = self.h_limit();
        Ok(DeheuvelsReport {
            rows,
            a1_converging,
            a2_converging,
            h_limit_finite: h_limit.is_some(),
            h_limit,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeheuvelsRow {
    pub n: u64,
    pub h_log_n: f64,
    pub x_n: f64,
    /// `H(x_n + log n) / H(log n)`; always >= 1.
    pub a1_ratio: f64,
    /// `sum k G^-(1/k)^2 / (sum G^-(1/k))^2`.
    pub a2_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeheuvelsReport {
    pub rows: Vec<DeheuvelsRow>,
    pub a1_converging: bool,
    pub a2_converging: bool,
    pub h_limit_finite: bool,
    pub h_limit: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::adaptive_simpson;

    fn geo_survival() -> MinimaSpec {
        MinimaSpec::survival(DiscreteModel::geometric(0.5).unwrap())
    }

    #[test]
    fn g_inverse_values() {
        let spec = geo_survival();
        // t = 16: m = 4, z = y_4 = 0.03125.
        assert!((spec.g_inverse(16.0) - 0.03125).abs() < 1e-15);
        // t slightly above 1: the m = 0 region.
        assert!((spec.g_inverse(1.0 + 1e-9) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn g_inverse_sandwich_inequality() {
        // z_{m(t)}/y_{m(t)-1} <= t G^-(1/t) < z_{m(t)}/y_{m(t)} on a grid.
        let spec = geo_survival();
        for i in 1..60 {
            let t = 1.0 + (i as f64) * 0.7 + (i as f64).powi(2);
            let m = spec.model().quantile_m(t);
            let g = spec.g_inverse(t);
            let z = spec.z_at(m);
            assert!(z / spec.model().survival(m - 1) <= t * g + 1e-12);
            assert!(t * g < z / spec.model().survival(m) + 1e-12);
        }
    }

    #[test]
    fn h_log_staircase_value() {
        let spec = geo_survival();
        // t = 16: (m+1) p - rho = 2.5 - 0.5 = 2.0.
        assert!((spec.h_log(16.0) - 2.0).abs() < 1e-12);
        // rho is the integral over [t, 1/y_m): non-negative, and H stays
        // continuous across the lattice points t = 1/y_j where m(t) jumps
        // (the new rho exactly swallows the new staircase term there).
        for j in 1..12i64 {
            let t = 1.0 / spec.model().survival(j);
            let m = spec.model().quantile_m(t);
            assert_eq!(m, j + 1); // strict inequality in the quantile
            let rho = spec.z_at(m) * (1.0 / spec.model().survival(m) - t);
            assert!(rho >= 0.0);
            let below = spec.h_log(t * (1.0 - 1e-12));
            assert!((spec.h_log(t) - below).abs() < 1e-9);
        }
        // Non-decreasing in t.
        let mut prev = 0.0;
        for i in 1..200 {
            let t = 1.0 + i as f64 * 11.3;
            let h = spec.h_log(t);
            assert!(h >= prev - 1e-12);
            prev = h;
        }
    }

    #[test]
    fn h_log_matches_quadrature_oracle() {
        // H(log t) = integral of G^-(1/u) over [1, t], via adaptive Simpson
        // with no staircase knowledge.
        for model in [
            DiscreteModel::geometric(0.5).unwrap(),
            DiscreteModel::poisson(1.0).unwrap(),
        ] {
            let spec = MinimaSpec::survival(model);
            for &t in &[10.0, 1e3, 1e6] {
                let exact = spec.h_log(t);
                let f = |u: f64| spec.g_inverse(u.max(1.0 + 1e-12));
                let quad = adaptive_simpson(&f, 1.0, t, 1e-11 * exact.max(1.0));
                assert!(
                    (exact - quad).abs() <= 1e-9 * exact.abs().max(1.0),
                    "t={t}: {exact} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn survival_choice_reduces_to_rate_sum() {
        // With z = y, sum z_j r_j / y_j equals sum r_j exactly.
        let spec = geo_survival();
        for &t in &[7.0, 100.0, 12345.0] {
            let m = spec.model().quantile_m(t);
            let mut rates = KahanSum::new();
            for j in 0..=m {
                rates.add(spec.model().failure_rate(j));
            }
            let rho = spec.z_at(m) * (1.0 / spec.model().survival(m) - t);
            assert_eq!(spec.h_log(t), rates.value() - rho);
        }
    }

    #[test]
    fn cond_var_z_matches_thm31a_scaling() {
        // With z_k the variance increments (delta < 0), H(log n) tracks
        // b_n^2 = sum z_k r_k / y_k; rho is bounded, so the ratio tends to 1.
        let model = DiscreteModel::geometric(0.5).unwrap();
        let table = HazardTable::build(&model, -1).unwrap();
        let spec = MinimaSpec::cond_var(table.clone()).unwrap();
        for &n in &[1e4, 1e6, 1e9] {
            let h = spec.h_log(n);
            let b2 = crate::normalizers::scaling_thm31a(&table, n as u64).unwrap();
            assert!((h / b2 - 1.0).abs() < 0.25, "n={n}: {h} vs {b2}");
        }
        let h = spec.h_log(1e9);
        let b2 = crate::normalizers::scaling_thm31a(&table, 1_000_000_000).unwrap();
        assert!((h / b2 - 1.0).abs() < 0.05, "{h} vs {b2}");
    }

    #[test]
    fn partial_minima_simulation_basics() {
        let spec = geo_survival();
        let mut rng = RngState::new(11);
        let s1 = spec.simulate_partial_minima(1, &mut rng);
        assert!(s1 > 0.0 && s1 <= 1.0); // z_{X_1} = y_{X_1} <= y_0 ... <= 1
        let mut a = RngState::new(33);
        let mut b = RngState::new(33);
        assert_eq!(
            spec.simulate_partial_minima(1000, &mut a),
            spec.simulate_partial_minima(1000, &mut b)
        );
        // Pathwise: S_n non-decreasing with increments <= z_0.
        let rng = RngState::new(3);
        let mut prev = 0.0;
        for n in [1u64, 2, 4, 8, 16] {
            let mut r = rng.clone();
            let s = spec.simulate_partial_minima(n, &mut r);
            assert!(s >= prev - 1e-12);
            assert!(s - prev <= spec.z_at(0) * (n as f64) + 1e-12);
            prev = s;
        }
    }

    #[test]
    fn deheuvels_diagnostics_geometric() {
        let spec = geo_survival();
        let report = spec.deheuvels_diagnostics(1_000_000).unwrap();
        let last = report.rows.last().unwrap();
        // (A.1) ratio >= 1 always, and <= 1.25 at n = 1e6 for this model.
        for row in &report.rows {
            assert!(row.a1_ratio >= 1.0 - 1e-12);
        }
        assert!(last.a1_ratio <= 1.25, "a1 = {}", last.a1_ratio);
        // Dispersion ratio: the harmonic-sum bound gives ~0.07 at n = 1e6
        // (grouped geometric levels contribute ~1/4 per dyadic block).
        assert!(last.a2_ratio <= 0.1, "a2 = {}", last.a2_ratio);
        assert!(last.a2_ratio >= 0.03, "a2 = {}", last.a2_ratio);
        assert!(report.a2_converging);
        assert!(!report.h_limit_finite);
        // Richer oracle: recompute the dispersion sums directly.
        let n = 10_000u64;
        let mut sum_g = 0.0;
        let mut sum_kg2 = 0.0;
        for k in 1..=n {
            let g = if k == 1 {
                spec.z_at(spec.model().quantile_m(1.0))
            } else {
                spec.g_inverse(k as f64)
            };
            sum_g += g;
            sum_kg2 += k as f64 * g * g;
        }
        let expected = sum_kg2 / (sum_g * sum_g);
        let report2 = spec.deheuvels_diagnostics(n).unwrap();
        let got = report2.rows.last().unwrap().a2_ratio;
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn finite_h_limit_in_the_convergent_regime() {
        // Poisson, z = y_{k+2}: terms behave like e-products with delta = 2,
        // whose sum converges; the report flags the finite limit.
        let model = DiscreteModel::poisson(1.0).unwrap();
        let spec = MinimaSpec::survival_shifted(model, 2);
        let report = spec.deheuvels_diagnostics(1000).unwrap();
        assert!(report.h_limit_finite);
        assert!(report.h_limit.unwrap() > 0.0);
        // Geometric shifted: still divergent.
        let g = MinimaSpec::survival_shifted(DiscreteModel::geometric(0.5).unwrap(), 2);
        assert!(g.h_limit().is_none());
    }

    #[test]
    fn explicit_sequences_validate() {
        let model = DiscreteModel::geometric(0.5).unwrap();
        assert!(MinimaSpec::explicit(model.clone(), vec![3.0, 2.0, 2.0, 0.5]).is_ok());
        assert!(MinimaSpec::explicit(model.clone(), vec![1.0, 2.0]).is_err());
        assert!(MinimaSpec::explicit(model.clone(), vec![1.0, 0.0]).is_err());
        assert!(MinimaSpec::explicit(model, vec![]).is_err());
    }
}
