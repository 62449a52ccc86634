//! Streaming delta-record detection.
//!
//! A [`DeltaCounter`] consumes an observation stream and maintains the count
//! of delta-records, the running maximum, the compensator value at the
//! maximum and the accumulated conditional variance. The residual
//! `N - theta(M)` is the martingale of the counting process; per-step
//! outcomes expose the martingale increment `xi = I - Delta theta(M)`.
//!
//! The conditional-variance accumulator adds the increment evaluated at the
//! maximum *before* the step (it is the compensator of the squared
//! martingale increments, which conditions on the previous state).

use serde::{Deserialize, Serialize};

use crate::distributions::Sampler;
use crate::error::{Error, Result};
use crate::hazard::{theta_increment, HazardTable};
use crate::rng::RngState;

/// Relative tolerance for variance increments computed past the table while
/// streaming (heavy tails); the value only feeds the diagnostics accumulator.
const STREAM_Z_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterState {
    /// Observations consumed.
    pub n: u64,
    /// Running maximum; -1 before the first observation.
    pub max_level: i64,
    /// Number of delta-records seen.
    pub record_count: u64,
    /// Compensator `theta(max_level)`.
    pub theta_at_max: f64,
    /// Accumulated conditional variance `sum_k z_{M_{k-1}}`.
    pub cond_var_sum: f64,
}

impl CounterState {
    /// Martingale residual `N - theta(M)`.
    pub fn martingale_residual(&self) -> f64 {
        self.record_count as f64 - self.theta_at_max
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub is_record: bool,
    /// Martingale increment `xi = I - (theta(M_new) - theta(M_old))`.
    pub xi: f64,
}

/// Streaming counter bound to one hazard table. Single-stream: not shareable
/// while in use; run one counter per replication against a shared table.
pub struct DeltaCounter<'a> {
    table: &'a HazardTable,
    state: CounterState,
    /// Cached `z_{M}` for the current maximum.
    z_at_max: f64,
}

impl<'a> DeltaCounter<'a> {
    pub fn new(table: &'a HazardTable) -> Self {
        Self {
            table,
            state: CounterState {
                n: 0,
                max_level: -1,
                record_count: 0,
                theta_at_max: 0.0,
                cond_var_sum: 0.0,
            },
            z_at_max: table.cond_var_increment(-1),
        }
    }

    pub fn state(&self) -> &CounterState {
        &self.state
    }

    pub fn delta(&self) -> i32 {
        self.table.delta()
    }

    pub fn martingale_residual(&self) -> f64 {
        self.state.martingale_residual()
    }

    /// Consume one observation.
    pub fn step(&mut self, x: i64) -> StepOutcome {
        assert!(x >= 0, "observations are non-negative integers");
        let d = self.table.delta() as i64;
        let is_record = x > self.state.max_level + d;
        self.state.n += 1;
        // Compensator of squared increments: z at the *previous* maximum.
        self.state.cond_var_sum += self.z_at_max;
        let mut xi = if is_record { 1.0 } else { 0.0 };
        if x > self.state.max_level {
            let theta_new = self.theta_of(x);
            xi -= theta_new - self.state.theta_at_max;
            self.state.theta_at_max = theta_new;
            self.state.max_level = x;
            self.z_at_max = self
                .table
                .cond_var_increment_relaxed(x, STREAM_Z_REL_TOL);
        }
        if is_record {
            self.state.record_count += 1;
        }
        StepOutcome { is_record, xi }
    }

    fn theta_of(&self, x: i64) -> f64 {
        let depth = self.table.depth();
        if x <= depth {
            return self.table.theta(x);
        }
        // Extend incrementally from whatever is already accumulated.
        let (base_level, base_theta) = if self.state.max_level > depth {
            (self.state.max_level, self.state.theta_at_max)
        } else {
            (depth, self.table.theta(depth))
        };
        base_theta + theta_increment(self.table.model(), self.table.delta(), base_level, x)
    }
}

/// Ordinary records (`delta = 0`), supported as a counting-only special case;
/// the delta-hazard normalizer theory does not cover it.
#[derive(Debug, Clone, Default)]
pub struct OrdinaryRecordCounter {
    pub n: u64,
    pub max_level: i64,
    pub record_count: u64,
}

impl OrdinaryRecordCounter {
    pub fn new() -> Self {
        Self {
            n: 0,
            max_level: -1,
            record_count: 0,
        }
    }

    pub fn step(&mut self, x: i64) -> bool {
        assert!(x >= 0);
        self.n += 1;
        let is_record = x > self.max_level;
        if is_record {
            self.max_level = x;
            self.record_count += 1;
        }
        is_record
    }
}

/// Simulate `n` i.i.d. draws through a counter, snapshotting the state at
/// each checkpoint. Deterministic given the RNG state.
pub fn run_stream(
    table: &HazardTable,
    sampler: &Sampler,
    n: u64,
    rng: &mut RngState,
    checkpoints: &[u64],
) -> Result<Vec<CounterState>> {
    if sampler.model() != table.model() {
        return Err(Error::Precondition(
            "sampler and hazard table must share one model".into(),
        ));
    }
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != checkpoints.len() || sorted.as_slice() != checkpoints {
        return Err(Error::Precondition(
            "checkpoints must be strictly increasing".into(),
        ));
    }
    if let Some(&last) = checkpoints.last() {
        if last > n || checkpoints[0] < 1 {
            return Err(Error::Precondition(format!(
                "checkpoints must lie in [1, {n}]"
            )));
        }
    }
    let mut counter = DeltaCounter::new(table);
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    let mut next_cp = 0usize;
    for i in 1..=n {
        let x = sampler.draw(rng);
        counter.step(x);
        if next_cp < checkpoints.len() && i == checkpoints[next_cp] {
            snapshots.push(counter.state().clone());
            next_cp += 1;
        }
    }
    Ok(snapshots)
}

/// Convenience wrapper that builds the sampler on the fly.
pub fn run_stream_model(
    table: &HazardTable,
    n: u64,
    rng: &mut RngState,
    checkpoints: &[u64],
) -> Result<Vec<CounterState>> {
    let sampler = Sampler::new(table.model());
    run_stream(table, &sampler, n, rng, checkpoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DiscreteModel;
    use crate::hazard::{cond_moment_oracle, MomentPower};
    use crate::numeric::KahanSum;

    fn table(p: f64, delta: i32) -> std::sync::Arc<HazardTable> {
        HazardTable::build(&DiscreteModel::geometric(p).unwrap(), delta).unwrap()
    }

    #[test]
    fn weak_records_count_ties() {
        // delta = -1: X >= M is a record, so (2, 2) yields two records.
        let t = table(0.5, -1);
        let mut c = DeltaCounter::new(&t);
        assert!(c.step(2).is_record);
        assert!(c.step(2).is_record);
        assert_eq!(c.state().record_count, 2);
        assert_eq!(c.state().max_level, 2);
    }

    #[test]
    fn positive_delta_needs_clear_margin() {
        // delta = 1: stream (0, 1) has no records although the maximum moves.
        let t = table(0.5, 1);
        let mut c = DeltaCounter::new(&t);
        assert!(!c.step(0).is_record);
        assert!(!c.step(1).is_record);
        assert_eq!(c.state().record_count, 0);
        assert_eq!(c.state().max_level, 1);
    }

    #[test]
    fn sentinel_makes_first_observation_a_record_for_negative_delta() {
        let t = table(0.5, -2);
        let mut c = DeltaCounter::new(&t);
        assert!(c.step(0).is_record); // 0 > -1 - 2
        assert_eq!(c.state().record_count, 1);
    }

    #[test]
    fn fresh_counter_invariants() {
        let t = table(0.5, -1);
        let c = DeltaCounter::new(&t);
        assert_eq!(c.martingale_residual(), 0.0);
        assert_eq!(c.state().cond_var_sum, 0.0);
        // Two counters from one table are independent.
        let mut a = DeltaCounter::new(&t);
        let _b = DeltaCounter::new(&t);
        a.step(5);
        assert_eq!(_b.state().n, 0);
    }

    #[test]
    fn residual_after_single_observation() {
        // Geometric p=0.5, delta=-1, stream (3,): residual = 1 - theta(3) = -2.
        let t = table(0.5, -1);
        let mut c = DeltaCounter::new(&t);
        c.step(3);
        assert!((c.martingale_residual() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_zero_mean_of_martingale_step_by_enumeration() {
        // E[xi | state] = 0, checked by enumerating the next observation
        // against the moment oracle rather than by sampling.
        for (model, delta) in [
            (DiscreteModel::geometric(0.5).unwrap(), -1i32),
            (DiscreteModel::geometric(0.3).unwrap(), 2),
            (DiscreteModel::poisson(1.0).unwrap(), -2),
        ] {
            let t = HazardTable::build(&model, delta).unwrap();
            for m in [-1i64, 0, 2, 7] {
                // E[I | m] = y_{m+delta}; E[Delta theta | m] from the oracle.
                let e_i = model.survival(m + delta as i64);
                let e_dtheta = cond_moment_oracle(&t, m, MomentPower::First);
                assert!(
                    (e_i - e_dtheta).abs() < 1e-10,
                    "{:?} delta={delta} m={m}",
                    model.spec()
                );
                // And xi really is I - Delta theta along a replayed step.
                let mut acc = KahanSum::new();
                for x in 0..=t.depth() {
                    let mut c = DeltaCounter::new(&t);
                    if m >= 0 {
                        c.step(m); // set the maximum
                    }
                    let before = c.state().clone();
                    let out = c.step(x);
                    let expect_i = x > m + delta as i64;
                    assert_eq!(out.is_record, expect_i);
                    let dtheta = c.state().theta_at_max - before.theta_at_max;
                    assert!((out.xi - ((expect_i as u64 as f64) - dtheta)).abs() < 1e-12);
                    acc.add(model.pmf(x) * out.xi);
                }
                // Tail of the enumeration: for x > depth the indicator is 1
                // and Delta theta telescopes; bound the neglected mass.
                let tail = model.survival(t.depth());
                assert!(
                    acc.value().abs() < 1e-9 + 3.0 * tail * (t.theta(t.depth()).abs() + 1.0),
                    "mean xi = {} for {:?} delta={delta} m={m}",
                    acc.value(),
                    model.spec()
                );
            }
        }
    }

    #[test]
    fn counts_bracket_ordinary_records() {
        // delta <= -1 counts at least the ordinary records; delta >= 1 at most.
        let model = DiscreteModel::geometric(0.5).unwrap();
        let t_neg = HazardTable::build(&model, -1).unwrap();
        let t_pos = HazardTable::build(&model, 1).unwrap();
        let sampler = Sampler::new(&model);
        let mut rng = RngState::new(2024);
        let mut neg = DeltaCounter::new(&t_neg);
        let mut pos = DeltaCounter::new(&t_pos);
        let mut ord = OrdinaryRecordCounter::new();
        let mut brute_max = -1i64;
        for _ in 0..20_000 {
            let x = sampler.draw(&mut rng);
            neg.step(x);
            pos.step(x);
            ord.step(x);
            brute_max = brute_max.max(x);
        }
        assert!(neg.state().record_count >= ord.record_count);
        assert!(pos.state().record_count <= ord.record_count);
        assert_eq!(neg.state().max_level, brute_max);
        assert_eq!(ord.max_level, brute_max);
    }

    #[test]
    fn run_stream_contract() {
        let t = table(0.5, -1);
        let sampler = Sampler::new(t.model());
        let mut rng = RngState::new(5);
        let snaps = run_stream(&t, &sampler, 1000, &mut rng, &[10, 100, 1000]).unwrap();
        assert_eq!(snaps.len(), 3);
        assert_eq!(snaps[2].n, 1000);
        assert!(snaps[0].record_count <= snaps[1].record_count);
        // Determinism.
        let mut rng2 = RngState::new(5);
        let snaps2 = run_stream(&t, &sampler, 1000, &mut rng2, &[10, 100, 1000]).unwrap();
        assert_eq!(snaps, snaps2);
        // Empty stream.
        let mut rng3 = RngState::new(5);
        assert!(run_stream(&t, &sampler, 0, &mut rng3, &[]).unwrap().is_empty());
        // Bad checkpoints.
        let mut rng4 = RngState::new(5);
        assert!(run_stream(&t, &sampler, 10, &mut rng4, &[5, 3]).is_err());
        assert!(run_stream(&t, &sampler, 10, &mut rng4, &[11]).is_err());
    }

    #[test]
    fn variance_compensator_tracks_residual_variance() {
        // Sample variance of the residual across replications matches the
        // mean accumulated conditional variance within 5 standard errors.
        let t = table(0.5, -1);
        let sampler = Sampler::new(t.model());
        let reps = 2000;
        let n = 2000u64;
        let mut residuals = Vec::with_capacity(reps);
        let mut v_mean = 0.0;
        for r in 0..reps {
            let mut rng = RngState::for_stream(99, r as u64);
            let snaps = run_stream(&t, &sampler, n, &mut rng, &[n]).unwrap();
            residuals.push(snaps[0].martingale_residual());
            v_mean += snaps[0].cond_var_sum / reps as f64;
        }
        let mean = residuals.iter().sum::<f64>() / reps as f64;
        let var = residuals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (reps - 1) as f64;
        // Residual sample variance has std err ~ var * sqrt(2/(reps-1)).
        let se = var * (2.0 / (reps as f64 - 1.0)).sqrt();
        assert!(
            (var - v_mean).abs() < 5.0 * se,
            "var {var} vs compensator {v_mean} (se {se})"
        );
        // Martingale: residual mean within 3 standard errors of zero.
        let se_mean = (var / reps as f64).sqrt();
        assert!(mean.abs() < 3.0 * se_mean, "mean {mean} se {se_mean}");
    }

    #[test]
    fn beyond_table_maxima_extend_theta() {
        // A shallow table on a heavy tail: the counter keeps exact counts and
        // extends the compensator instead of rejecting the observation.
        let model = DiscreteModel::zeta(2.0).unwrap();
        let shallow = HazardTable::build_with_depth(&model, -1, 64).unwrap();
        let deep = HazardTable::build_with_depth(&model, -1, 4096).unwrap();
        let mut a = DeltaCounter::new(&shallow);
        let mut b = DeltaCounter::new(&deep);
        for x in [3i64, 700, 120, 2500, 2500, 4000] {
            let oa = a.step(x);
            let ob = b.step(x);
            assert_eq!(oa.is_record, ob.is_record);
        }
        assert_eq!(a.state().record_count, b.state().record_count);
        let ta = a.state().theta_at_max;
        let tb = b.state().theta_at_max;
        assert!((ta - tb).abs() < 1e-8 * tb.abs(), "{ta} vs {tb}");
    }
}
