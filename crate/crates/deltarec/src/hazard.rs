//! Delta-failure-rate machinery.
//!
//! For a model with pmf `p_k` and survival `y_k`, the delta failure rate is
//! `s_k = p_{k+delta} / y_{k-1}` and its cumulative sum `theta(k)` is the
//! compensator of the delta-record counting process: `N_n - theta(M_n)` is a
//! martingale. [`HazardTable`] tabulates `s_k`, `theta(k)`, the
//! conditional-variance increments `z_m` and (for positive delta) the
//! products `e_k = (1-r_k)...(1-r_{k+delta-1})` up to a truncation depth,
//! with every truncated tail certified by a rigorous bound that is stored,
//! never dropped.
//!
//! Two independent routes compute `s_k` (the pmf/survival ratio and the
//! failure-rate product form); the table records their worst disagreement.
//! [`cond_moment_oracle`] evaluates the conditional moments of one counting
//! step by brute-force summation over the next observation, which is how the
//! martingale and variance identities are verified in tests.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteModel, ModelSpec, SurvivalCursor, TailHint};
use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, hurwitz_zeta, KahanSum};

/// Default target for truncated tail contributions.
const TAIL_TOL: f64 = 1e-13;
/// Hard cap on series terms before giving up with the achieved bound.
const MAX_TAIL_TERMS: u64 = 1 << 28;
/// Spans longer than this switch from term iteration to quadrature when
/// extending the compensator over a huge maximum jump (heavy tails only).
const JUMP_ITER_CAP: i64 = 1 << 22;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HazardTable {
    model: DiscreteModel,
    delta: i32,
    depth: i64,
    /// `s[k]`, k = 0..=depth.
    s: Vec<f64>,
    /// `theta[m+1] = theta(m)`, m = -1..=depth; `theta[0] = 0`.
    theta: Vec<f64>,
    /// `z[m+1] = z_m`, m = -1..=depth.
    z: Vec<f64>,
    /// Survival `y[j+1] = y_j`, j = -1..=depth (kept for normalizer sums).
    y: Vec<f64>,
    /// Failure rates `r[k]`, k = 0..=depth.
    r: Vec<f64>,
    /// `e[k]` for positive delta, k = 0..=depth.
    e: Option<Vec<f64>>,
    /// Upper bound on every neglected tail contribution in the table.
    tail_bound: f64,
    /// Worst absolute disagreement between the two `s_k` routes, relative to
    /// `max(1, s_k)`.
    eq_cross_check: f64,
}

impl HazardTable {
    /// Build with the default depth: the smallest `K` with `y_K < 1e-15`,
    /// capped at 65536 for heavy tails (tabulated accuracy is independent of
    /// the cap; tails are evaluated by certified series past it).
    pub fn build(model: &DiscreteModel, delta: i32) -> Result<Arc<Self>> {
        let floor = 8 + 4 * delta.unsigned_abs() as i64;
        let depth = model.quantile_m(1e15).clamp(floor, 1 << 16);
        Self::build_with_depth(model, delta, depth)
    }

    pub fn build_with_depth(model: &DiscreteModel, delta: i32, depth: i64) -> Result<Arc<Self>> {
        if delta == 0 {
            return Err(Error::DeltaZero);
        }
        if delta.unsigned_abs() > 512 {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("|delta| must be <= 512, got {delta}"),
            });
        }
        let d = delta as i64;
        let floor = 8 + 4 * d.abs();
        if depth < floor {
            return Err(Error::DepthTooSmall {
                depth,
                reason: format!("need at least {floor} for delta = {delta}"),
            });
        }
        if depth > 1 << 26 {
            return Err(Error::InvalidParameter {
                name: "depth",
                reason: format!("depth {depth} would not fit in memory"),
            });
        }

        let ext = depth + 2 * d.abs() + 2;
        // y_arr[j+1] = y_j for j = -1..=ext.
        let mut y_arr = Vec::with_capacity((ext + 2) as usize);
        y_arr.push(1.0);
        for j in 0..=ext {
            y_arr.push(model.survival(j));
        }
        let y_at = |j: i64| -> f64 {
            if j <= -1 {
                1.0
            } else {
                y_arr[(j + 1) as usize]
            }
        };
        let mut p_arr = Vec::with_capacity((ext + 1) as usize);
        for j in 0..=ext {
            p_arr.push(model.pmf(j));
        }
        let p_at = |j: i64| -> f64 {
            if j < 0 {
                0.0
            } else {
                p_arr[j as usize]
            }
        };
        let r_hi = depth + d.abs();
        let mut r_arr = Vec::with_capacity((r_hi + 1) as usize);
        for j in 0..=r_hi {
            r_arr.push(model.failure_rate(j));
        }

        // s_k by the pmf/survival ratio (route one), k = 0..=depth+|d|.
        let s_hi = depth + d.abs();
        let mut s_ext = Vec::with_capacity((s_hi + 1) as usize);
        for k in 0..=s_hi {
            if k + d < 0 {
                s_ext.push(0.0);
            } else {
                s_ext.push(p_at(k + d) / y_at(k - 1));
            }
        }

        // Route two: the failure-rate product form, cross-checked over the
        // tabulated range.
        let mut eq_cross_check = 0.0f64;
        for k in 0..=depth {
            let s_b = if k + d < 0 {
                0.0
            } else if d > 0 {
                let mut prod = 1.0;
                for i in k..k + d {
                    prod *= 1.0 - r_arr[i as usize];
                }
                r_arr[(k + d) as usize] * prod
            } else {
                let mut prod = 1.0;
                for i in (k + d).max(0)..k {
                    prod *= 1.0 - r_arr[i as usize];
                }
                r_arr[(k + d) as usize] / prod
            };
            let s_a = s_ext[k as usize];
            let diff = (s_a - s_b).abs() / s_a.abs().max(1.0);
            eq_cross_check = eq_cross_check.max(diff);
        }
        if eq_cross_check > 1e-10 {
            return Err(Error::Precondition(format!(
                "delta-rate routes disagree by {eq_cross_check}; model evaluation is inconsistent"
            )));
        }

        let mut theta = Vec::with_capacity((depth + 2) as usize);
        theta.push(0.0);
        let mut acc = KahanSum::new();
        for k in 0..=depth {
            acc.add(s_ext[k as usize]);
            theta.push(acc.value());
        }

        // Conditional-variance increments by backward recurrence from a
        // certified deep-tail evaluation at the truncation depth.
        let mut tail_bound = 0.0f64;
        let mut z = vec![0.0; (depth + 2) as usize];
        if d < 0 {
            let tail = corr_tail(model, delta, depth, TAIL_TOL, CorrKind::NegVar);
            tail_bound = tail_bound.max(tail.bound);
            z[(depth + 1) as usize] = y_at(depth + d) + tail.value;
            for m in (-1..depth).rev() {
                let i = m + 1;
                let term = if i + d < 0 {
                    0.0
                } else {
                    s_ext[i as usize] * (y_at(i + d) + y_at(i + d - 1) - y_at(i - 1))
                };
                z[(m + 1) as usize] = z[(m + 2) as usize] + term;
            }
        } else {
            let tail = corr_tail(model, delta, depth, TAIL_TOL, CorrKind::PosVar);
            tail_bound = tail_bound.max(tail.bound);
            // A_m = sum_{i>m} [s_i (y_{i+d} + y_{i+d-1} + y_{i-1}) - 2 p_{i+2d}].
            let mut a_next = 3.0 * y_at(depth + d) - 2.0 * y_at(depth + 2 * d) - tail.value;
            for m in (-1..=depth).rev() {
                let mut b = 0.0;
                for i in m + 1..=m + d {
                    if i >= 0 {
                        b += s_ext[i as usize];
                    }
                }
                z[(m + 1) as usize] = (a_next - 2.0 * y_at(m + d) * b).max(0.0);
                if m >= 0 {
                    let i = m;
                    let term =
                        s_ext[i as usize] * (y_at(i + d) + y_at(i + d - 1) + y_at(i - 1))
                            - 2.0 * p_at(i + 2 * d);
                    a_next += term;
                }
            }
        }
        if tail_bound > 1e-12 {
            return Err(Error::DepthTooSmall {
                depth,
                reason: format!("tail bound {tail_bound} exceeds 1e-12"),
            });
        }

        let e = if d > 0 {
            let mut e = Vec::with_capacity((depth + 1) as usize);
            for k in 0..=depth {
                let mut prod = 1.0;
                for i in k..k + d {
                    prod *= 1.0 - r_arr[i as usize];
                }
                e.push(prod);
            }
            Some(e)
        } else {
            None
        };

        Ok(Arc::new(Self {
            model: model.clone(),
            delta,
            depth,
            s: s_ext[..=(depth as usize)].to_vec(),
            theta,
            z,
            y: y_arr[..=(depth + 1) as usize].to_vec(),
            r: r_arr[..=(depth as usize)].to_vec(),
            e,
            tail_bound,
            eq_cross_check,
        }))
    }

    pub fn model(&self) -> &DiscreteModel {
        &self.model
    }
    pub fn delta(&self) -> i32 {
        self.delta
    }
    pub fn depth(&self) -> i64 {
        self.depth
    }
    /// Upper bound on every neglected tail contribution.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
    /// Worst disagreement between the two delta-rate routes (relative to
    /// `max(1, s_k)`).
    pub fn eq_cross_check(&self) -> f64 {
        self.eq_cross_check
    }

    /// `s_k` for tabulated `k`.
    pub fn delta_rate(&self, k: i64) -> f64 {
        assert!((0..=self.depth).contains(&k), "k = {k} outside table");
        self.s[k as usize]
    }

    /// Cumulative rate `theta(m)` for tabulated `m >= -1`.
    pub fn theta(&self, m: i64) -> f64 {
        assert!(
            (-1..=self.depth).contains(&m),
            "m = {m} outside table (depth {})",
            self.depth
        );
        self.theta[(m + 1) as usize]
    }

    /// `theta(m)` for any `m >= -1`, extending past the table by direct
    /// summation over the model (quadrature-assisted for very large heavy-tail
    /// jumps; the extension error is below 1e-9 and only affects diagnostics).
    pub fn theta_extended(&self, m: i64) -> f64 {
        if m <= self.depth {
            self.theta(m)
        } else {
            self.theta(self.depth) + theta_increment(&self.model, self.delta, self.depth, m)
        }
    }

    /// Inverse of the cumulative rate: largest `k` with `theta(k) <= t`,
    /// for `t` in `[s_0, theta(depth))`.
    pub fn theta_inverse(&self, t: f64) -> Result<i64> {
        let s0 = self.theta[1];
        if !(t >= s0) || t >= self.theta[(self.depth + 1) as usize] {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside [{s0}, {})",
                self.theta[(self.depth + 1) as usize]
            )));
        }
        // First tabulated m with theta(m) > t, over m = -1..=depth.
        let idx = self.theta.partition_point(|&v| v <= t);
        Ok(idx as i64 - 2) // slot idx-1 is the last with theta <= t; m = slot - 1
    }

    /// Conditional-variance increment `z_m` of one counting step given the
    /// current maximum `m >= -1`. Tabulated values are returned directly;
    /// beyond the table the increment is recomputed with the certified-tail
    /// series at full tolerance.
    pub fn cond_var_increment(&self, m: i64) -> f64 {
        assert!(m >= -1, "m must be >= -1");
        if m <= self.depth {
            return self.z[(m + 1) as usize];
        }
        self.cond_var_beyond(m, TAIL_TOL)
    }

    /// Relaxed-tolerance variant used by the streaming counter when the
    /// running maximum escapes the table (heavy tails). The relative error is
    /// bounded by `rel_tol` plus the certified absolute floor.
    pub(crate) fn cond_var_increment_relaxed(&self, m: i64, rel_tol: f64) -> f64 {
        if m <= self.depth {
            return self.z[(m + 1) as usize];
        }
        let scale = self.model.survival(m + self.delta as i64);
        self.cond_var_beyond(m, (rel_tol * scale).max(TAIL_TOL))
    }

    fn cond_var_beyond(&self, m: i64, tol: f64) -> f64 {
        let d = self.delta as i64;
        if d < 0 {
            let tail = corr_tail(&self.model, self.delta, m, tol, CorrKind::NegVar);
            self.model.survival(m + d) + tail.value
        } else {
            let tail = corr_tail(&self.model, self.delta, m, tol, CorrKind::PosVar);
            let y_md = self.model.survival(m + d);
            let mut b = 0.0;
            for i in m + 1..=m + d {
                b += self.s_direct(i);
            }
            (3.0 * y_md - 2.0 * self.model.survival(m + 2 * d) - tail.value
                - 2.0 * y_md * b)
                .max(0.0)
        }
    }

    /// The Prop-style display route for the positive-delta conditional
    /// variance; algebraically equal to the tabulated route and kept as an
    /// independent computation for cross-checks.
    pub fn cond_var_display(&self, m: i64) -> Result<f64> {
        if self.delta < 0 {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "display route applies to positive delta".into(),
            });
        }
        let d = self.delta as i64;
        let y_md = self.model.survival(m + d);
        let mut head = 0.0;
        for i in m + 1..=m + d {
            head += self.s_direct(i);
        }
        let tail = corr_tail(&self.model, self.delta, m, TAIL_TOL, CorrKind::Display);
        // sum_{i>m} s_i (y_{i+d} + p_{i+d}/2) = y_{m+d} + sum p_{i+d}(s_i/2 - eps_i).
        let series = y_md + tail.value;
        Ok(y_md * (1.0 - 2.0 * head) + 2.0 * series - 2.0 * self.model.survival(m + 2 * d))
    }

    /// `e_k = (1 - r_k) ... (1 - r_{k+delta-1})`; positive delta only.
    pub fn e_product(&self, k: i64) -> Result<f64> {
        if self.delta < 0 {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "e_k is defined for positive delta".into(),
            });
        }
        assert!(k >= 0);
        if let (Some(e), true) = (&self.e, k <= self.depth) {
            return Ok(e[k as usize]);
        }
        let mut prod = 1.0;
        for i in k..k + self.delta as i64 {
            prod *= 1.0 - self.model.failure_rate(i);
        }
        Ok(prod)
    }

    /// Tabulated survival `y_j`, `j = -1..=depth`.
    pub(crate) fn survival_at(&self, j: i64) -> f64 {
        if j <= -1 {
            1.0
        } else if j <= self.depth {
            self.y[(j + 1) as usize]
        } else {
            self.model.survival(j)
        }
    }

    /// Tabulated failure rate `r_k`.
    pub(crate) fn rate_at(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else if k <= self.depth {
            self.r[k as usize]
        } else {
            self.model.failure_rate(k)
        }
    }

    fn s_direct(&self, k: i64) -> f64 {
        if k + (self.delta as i64) < 0 {
            0.0
        } else if k <= self.depth {
            self.s[k as usize]
        } else {
            self.model.pmf(k + self.delta as i64) / self.model.survival(k - 1)
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

// ---------------------------------------------------------------------------
// Certified tail series
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum CorrKind {
    /// delta < 0: `sum_{i>start} p_{i+d} (y_{i+d} + y_{i+d-1} - 2 y_{i-1}) / y_{i-1}`,
    /// the correction of `z_start` over its leading term `y_{start+d}`.
    NegVar,
    /// delta > 0: `sum_{i>start} p_{i+d} (2 y_{i-1} - y_{i+d} - y_{i+d-1}) / y_{i-1}`,
    /// subtracted from the folded closed part of the variance series.
    PosVar,
    /// delta > 0: `sum_{i>start} p_{i+d} (s_i/2 - (y_{i-1}-y_{i+d})/y_{i-1})`,
    /// the display-route series correction.
    Display,
}

#[derive(Debug, Clone, Copy)]
struct TailSum {
    value: f64,
    bound: f64,
}

/// Ring of the most recent survival values along a cursor walk.
struct Ring {
    buf: Vec<f64>,
    head: usize,
}

impl Ring {
    fn new(len: usize) -> Self {
        Self {
            buf: vec![1.0; len],
            head: 0,
        }
    }
    #[inline]
    fn push(&mut self, v: f64) {
        self.head = (self.head + 1) % self.buf.len();
        self.buf[self.head] = v;
    }
    /// Value pushed `back` steps ago (0 = newest).
    #[inline]
    fn get(&self, back: usize) -> f64 {
        debug_assert!(back < self.buf.len());
        self.buf[(self.head + self.buf.len() - back) % self.buf.len()]
    }
}

fn survival_or_one(model: &DiscreteModel, j: i64) -> f64 {
    if j <= -1 {
        1.0
    } else {
        model.survival(j)
    }
}

/// Evaluate a correction series `sum_{i>start} t_i` with a rigorous bound on
/// the neglected remainder. Terms are assembled from a survival ring so that
/// the pmf values driving them stay consistent to the last ulp.
fn corr_tail(model: &DiscreteModel, delta: i32, start: i64, tol: f64, kind: CorrKind) -> TailSum {
    let d = delta as i64;
    let w = (d.unsigned_abs() as usize) + 2;
    let i0 = start + 1;
    let l0 = i0 + d.max(0);
    let mut ring = Ring::new(w);
    for lvl in (l0 - w as i64 + 1)..l0 {
        ring.push(survival_or_one(model, lvl));
    }
    let mut cursor = SurvivalCursor::new(model, l0);
    let mut acc = KahanSum::new();
    let mode_floor = model.pmf_nonincreasing_from() + d.abs() + 2;
    let check_floor = (start + d.abs() + 2).max(mode_floor);
    let mut i = i0;
    let mut terms: u64 = 0;
    let mut last_bound = f64::INFINITY;
    loop {
        ring.push(cursor.surv());
        // Geometry of the ring: newest value is y at the cursor level.
        let (y_id, y_idm1, y_im1) = if d < 0 {
            (
                ring.get((-d) as usize),
                ring.get((-d + 1) as usize),
                ring.get(1),
            )
        } else {
            (ring.get(0), ring.get(1), ring.get((d + 1) as usize))
        };
        let p_id = (y_idm1 - y_id).max(0.0);
        if y_im1 <= 0.0 {
            // The tail has underflowed; everything beyond is exactly zero.
            return TailSum {
                value: acc.value(),
                bound: 0.0,
            };
        }
        let term = match kind {
            CorrKind::NegVar => p_id * ((y_id + y_idm1 - 2.0 * y_im1) / y_im1),
            CorrKind::PosVar => p_id * ((2.0 * y_im1 - y_id - y_idm1) / y_im1),
            CorrKind::Display => {
                let s_i = p_id / y_im1;
                p_id * (0.5 * s_i - (y_im1 - y_id) / y_im1)
            }
        };
        acc.add(term);
        terms += 1;
        if terms % 64 == 0 && i >= check_floor {
            let bound = remainder_bound(model, delta, i, p_id, y_id, y_im1, kind);
            last_bound = bound;
            if bound < tol {
                return TailSum {
                    value: acc.value(),
                    bound,
                };
            }
        }
        if terms >= MAX_TAIL_TERMS {
            return TailSum {
                value: acc.value(),
                bound: last_bound,
            };
        }
        cursor.advance();
        i += 1;
    }
}

/// Rigorous upper bound on the remainder `sum_{j>i} |t_j|` for each series
/// shape, given the freshly computed ring quantities at `i`.
fn remainder_bound(
    model: &DiscreteModel,
    delta: i32,
    i: i64,
    p_id: f64,
    y_id: f64,
    y_im1: f64,
    kind: CorrKind,
) -> f64 {
    let d = delta as i64;
    match kind {
        CorrKind::NegVar => {
            // |t_j| <= (-2d - 1) s_j p_{j+d}; the factor count is the number
            // of pmf terms in the two survival differences.
            let c = (-2 * d - 1) as f64;
            match model.tail_hint() {
                TailHint::EventuallyGeometric => {
                    let rho = model.corr_ratio_sup(i, delta);
                    if rho >= 1.0 {
                        return f64::INFINITY;
                    }
                    let u_i = p_id * p_id / y_im1;
                    c * u_i * rho / (1.0 - rho)
                }
                TailHint::PolynomialDecay { a, zeta_a } => {
                    // s_j p_{j+d} <= (a-1) kappa^(a-1) (j+d+1)^-(a+1) / zeta(a),
                    // integral test on the power tail.
                    let kappa = ((i + 2) as f64) / ((i + d + 2) as f64);
                    let base = (i + d + 1) as f64;
                    c * (a - 1.0) * kappa.powf(a - 1.0) * base.powf(-a) / (a * zeta_a)
                }
            }
        }
        CorrKind::PosVar => {
            // t_j <= (2d + 1) r_j p_{j+d} and sum_{j>i} p_{j+d} = y_{i+d}.
            (2 * d + 1) as f64 * model.rate_sup(i) * y_id
        }
        CorrKind::Display => {
            // |t_j| <= (d + 1.5) r-sup p_{j+d}.
            (d as f64 + 1.5) * model.rate_sup(i) * y_id
        }
    }
}

// ---------------------------------------------------------------------------
// Compensator extension over large maximum jumps
// ---------------------------------------------------------------------------

/// `sum_{i=from+1}^{to} s_i` evaluated against the model directly.
///
/// Spans beyond [`JUMP_ITER_CAP`] (heavy tails only) iterate a leading chunk
/// and integrate the smooth continuation of `s` by adaptive quadrature; the
/// midpoint-rule error is far below 1e-9 at the levels where this triggers.
pub(crate) fn theta_increment(model: &DiscreteModel, delta: i32, from: i64, to: i64) -> f64 {
    debug_assert!(from >= 0 && to >= from);
    let d = delta as i64;
    if to == from {
        return 0.0;
    }
    let iter_to = if to - from > JUMP_ITER_CAP {
        from + (1 << 20)
    } else {
        to
    };
    let mut acc = KahanSum::new();
    let w = (d.unsigned_abs() as usize) + 2;
    let i0 = from + 1;
    let l0 = i0 + d.max(0);
    let mut ring = Ring::new(w);
    for lvl in (l0 - w as i64 + 1)..l0 {
        ring.push(survival_or_one(model, lvl));
    }
    let mut cursor = SurvivalCursor::new(model, l0);
    let mut i = i0;
    while i <= iter_to {
        ring.push(cursor.surv());
        let (y_id, y_idm1, y_im1) = if d < 0 {
            (
                ring.get((-d) as usize),
                ring.get((-d + 1) as usize),
                ring.get(1),
            )
        } else {
            (ring.get(0), ring.get(1), ring.get((d + 1) as usize))
        };
        let p_id = (y_idm1 - y_id).max(0.0);
        if y_im1 > 0.0 && i + d >= 0 {
            acc.add(p_id / y_im1);
        }
        cursor.advance();
        i += 1;
    }
    if iter_to < to {
        acc.add(theta_span_quadrature(model, delta, iter_to, to));
    }
    acc.value()
}

/// Integral approximation of `sum_{i=a+1}^{b} s_i` for heavy-tail models,
/// using the midpoint-corrected integral of the smooth extension of `s`.
fn theta_span_quadrature(model: &DiscreteModel, delta: i32, a: i64, b: i64) -> f64 {
    let d = delta as f64;
    match model.spec() {
        ModelSpec::Zeta { a: za } => {
            let za = *za;
            // s(x) = (x + d + 1)^-a / zeta(a, x + 1), integrated in log space.
            let f = move |u: f64| -> f64 {
                let x = u.exp();
                (x + d + 1.0).powf(-za) / hurwitz_zeta(za, x + 1.0) * x
            };
            let lo = (a as f64 + 0.5).ln();
            let hi = (b as f64 + 0.5).ln();
            adaptive_simpson(&f, lo, hi, 1e-11)
        }
        _ => {
            // Light-tailed models cannot produce jumps this large: their
            // survival underflows long before the iteration cap.
            let mut acc = KahanSum::new();
            let dd = delta as i64;
            for i in a + 1..=b {
                if i + dd >= 0 {
                    let y = model.survival(i - 1);
                    if y > 0.0 {
                        acc.add(model.pmf(i + dd) / y);
                    }
                }
            }
            acc.value()
        }
    }
}

// ---------------------------------------------------------------------------
// Conditional-moment oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentPower {
    First,
    Second,
}

/// Brute-force conditional moment of one counting step given maximum `m`,
/// by direct summation over the distribution of the next observation.
///
/// Power one returns `E[Delta theta(M_k) | M_{k-1} = m] = sum_{j>m}
/// (theta(j) - theta(m)) p_j`; power two returns `E[xi_k^2 | M_{k-1} = m]`
/// with `xi_k` the martingale step. The bulk is summed term by term up to the
/// table depth; the remainder past the table is folded exactly by Abel
/// summation (the fold uses only the definitional relation `s_j y_{j-1} =
/// p_{j+delta}`, so the bulk remains an independent check of the tabulated
/// compensator).
pub fn cond_moment_oracle(table: &HazardTable, m: i64, power: MomentPower) -> f64 {
    assert!(m >= -1, "m must be >= -1");
    assert!(
        m <= table.depth(),
        "oracle needs the table to cover m = {m}"
    );
    let model = table.model();
    let d = table.delta() as i64;
    let k_max = table.depth();
    let theta_m = table.theta(m);
    let y_k = model.survival(k_max);
    let y_kd = model.survival(k_max + d);
    match power {
        MomentPower::First => {
            let mut acc = KahanSum::new();
            for j in m + 1..=k_max {
                acc.add((table.theta(j) - theta_m) * model.pmf(j));
            }
            // Remainder: (theta(K) - theta(m)) y_K + sum_{j>K}(theta(j)-theta(K)) p_j,
            // and the last sum telescopes to y_{K+delta}.
            acc.add((table.theta(k_max) - theta_m) * y_k);
            acc.add(y_kd);
            acc.value()
        }
        MomentPower::Second => {
            let mut acc = KahanSum::new();
            // Records below the current maximum (negative delta only).
            if d < 0 {
                for j in (m + d + 1).max(0)..=m {
                    acc.add(model.pmf(j));
                }
            }
            for j in m + 1..=k_max {
                let ind = if j > m + d { 1.0 } else { 0.0 };
                let t = table.theta(j) - theta_m;
                acc.add(model.pmf(j) * (ind - t) * (ind - t));
            }
            // Fold of sum_{j>K} p_j (1 - t_j)^2 around t_K, using
            // D(K) = sum_{j>K} p_j (theta(j)-theta(K))^2, which relates to the
            // tabulated variance increment z_K.
            let t_k = table.theta(k_max) - theta_m;
            let d_k = if d < 0 {
                table.cond_var_increment(k_max) + y_kd
            } else {
                let mut b = 0.0;
                for i in k_max + 1..=k_max + d {
                    b += table.s_direct(i);
                }
                table.cond_var_increment(k_max) - y_kd * (1.0 - 2.0 * b)
                    + 2.0 * model.survival(k_max + 2 * d)
            };
            acc.add((1.0 - t_k) * (1.0 - t_k) * y_k);
            acc.add(-2.0 * (1.0 - t_k) * y_kd);
            acc.add(d_k);
            acc.value()
        }
    }
}
