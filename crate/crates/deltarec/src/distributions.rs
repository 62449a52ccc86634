//! Discrete probability models on the non-negative integers.
//!
//! Every model exposes the pmf `p_k`, the survival function `y_k = P[X > k]`
//! (with `y_k = 1` for `k <= -1`), the failure rate `r_k = p_k / y_{k-1}`,
//! the quantile `m(t) = min{j : y_j < 1/t}` and reproducible inverse-CDF
//! sampling. Models have strictly positive pmf everywhere: tabulated inputs
//! therefore carry a mandatory constant-failure-rate tail extension.
//!
//! Failure rates are never computed by subtracting near-equal CDF values.
//! Each model evaluates the tail-ratio sum `T_k = y_k / p_k` directly
//! (a ratio series for the light-tailed families, a Hurwitz zeta ratio for
//! the zeta family), so `r_k = 1 / (1 + T_k)` stays accurate deep in the
//! tail even where `y_k` underflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{hurwitz_zeta, ln_gamma, riemann_zeta, KahanSum};
use crate::rng::RngState;

/// Serializable parameter set; `DiscreteModel` validates and caches on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Geometric { p: f64 },
    NegativeBinomial { a: f64, p: f64 },
    Zeta { a: f64 },
    Poisson { lambda: f64 },
    TabulatedPmf { probs: Vec<f64>, tail_rate: f64 },
    TabulatedRates { rates: Vec<f64>, tail_rate: f64 },
}

#[derive(Debug, Clone, Default)]
struct ModelCache {
    /// zeta(a) for the zeta family.
    zeta_a: f64,
    /// ln Gamma(a), a ln p, ln q for the negative binomial; ln lambda for Poisson.
    ln_gamma_a: f64,
    ln_p: f64,
    ln_q: f64,
    /// Tabulated families: survival values inside the table and the mass
    /// beyond it (`tail_mass = y_{L-1}`), plus per-level pmf for the rates case.
    surv: Vec<f64>,
    pmf: Vec<f64>,
    tail_mass: f64,
}

/// A validated discrete model. Immutable and freely shareable across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct DiscreteModel {
    spec: ModelSpec,
    #[serde(skip)]
    cache: ModelCache,
}

impl PartialEq for DiscreteModel {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl TryFrom<ModelSpec> for DiscreteModel {
    type Error = Error;
    fn try_from(spec: ModelSpec) -> Result<Self> {
        DiscreteModel::from_spec(spec)
    }
}

impl From<DiscreteModel> for ModelSpec {
    fn from(m: DiscreteModel) -> ModelSpec {
        m.spec
    }
}

/// Integer power by squaring; deterministic and defined for every u64 exponent.
fn powi64(base: f64, mut exp: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= b;
        }
        b *= b;
        exp >>= 1;
    }
    acc
}

fn check_prob(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) || !v.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be in (0,1), got {v}"),
        });
    }
    Ok(())
}

impl DiscreteModel {
    pub fn geometric(p: f64) -> Result<Self> {
        check_prob("p", p)?;
        Self::from_spec(ModelSpec::Geometric { p })
    }

    pub fn negative_binomial(a: f64, p: f64) -> Result<Self> {
        if !(a > 1.0) || !a.is_finite() {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: format!("must be > 1, got {a}"),
            });
        }
        check_prob("p", p)?;
        Self::from_spec(ModelSpec::NegativeBinomial { a, p })
    }

    pub fn zeta(a: f64) -> Result<Self> {
        if !(a > 1.0 && a <= 64.0) || !a.is_finite() {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: format!("must be in (1, 64], got {a}"),
            });
        }
        Self::from_spec(ModelSpec::Zeta { a })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be > 0, got {lambda}"),
            });
        }
        Self::from_spec(ModelSpec::Poisson { lambda })
    }

    pub fn tabulated_pmf(probs: Vec<f64>, tail_rate: f64) -> Result<Self> {
        check_prob("tail_rate", tail_rate)?;
        if probs.is_empty() {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: "table must not be empty".into(),
            });
        }
        for (k, &p) in probs.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) || !p.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "probs",
                    reason: format!("entry {k} must be in (0,1), got {p}"),
                });
            }
        }
        let total: f64 = {
            let mut acc = KahanSum::new();
            for &p in &probs {
                acc.add(p);
            }
            acc.value()
        };
        if total >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: format!("table mass {total} leaves no tail mass"),
            });
        }
        Self::from_spec(ModelSpec::TabulatedPmf { probs, tail_rate })
    }

    pub fn tabulated_rates(rates: Vec<f64>, tail_rate: f64) -> Result<Self> {
        check_prob("tail_rate", tail_rate)?;
        if rates.is_empty() {
            return Err(Error::InvalidParameter {
                name: "rates",
                reason: "table must not be empty".into(),
            });
        }
        for (k, &r) in rates.iter().enumerate() {
            if !(r > 0.0 && r < 1.0) || !r.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "rates",
                    reason: format!("entry {k} must be in (0,1), got {r}"),
                });
            }
        }
        Self::from_spec(ModelSpec::TabulatedRates { rates, tail_rate })
    }

    fn from_spec(spec: ModelSpec) -> Result<Self> {
        let mut cache = ModelCache::default();
        match &spec {
            ModelSpec::Geometric { p } => {
                check_prob("p", *p)?;
            }
            ModelSpec::NegativeBinomial { a, p } => {
                cache.ln_gamma_a = ln_gamma(*a);
                cache.ln_p = p.ln();
                cache.ln_q = (1.0 - p).ln();
            }
            ModelSpec::Zeta { a } => {
                cache.zeta_a = riemann_zeta(*a);
            }
            ModelSpec::Poisson { lambda } => {
                cache.ln_p = lambda.ln();
            }
            ModelSpec::TabulatedPmf { probs, tail_rate } => {
                check_prob("tail_rate", *tail_rate)?;
                let mut total = KahanSum::new();
                for &p in probs {
                    total.add(p);
                }
                let tail_mass = 1.0 - total.value();
                if tail_mass <= 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "probs",
                        reason: "table mass leaves no tail mass".into(),
                    });
                }
                // Suffix survival, accumulated backward so y_k is a sum of
                // positive terms rather than 1 - prefix.
                let mut surv = vec![0.0; probs.len()];
                let mut acc = tail_mass;
                surv[probs.len() - 1] = acc;
                for k in (0..probs.len() - 1).rev() {
                    acc += probs[k + 1];
                    surv[k] = acc;
                }
                cache.surv = surv;
                cache.pmf = probs.clone();
                cache.tail_mass = tail_mass;
            }
            ModelSpec::TabulatedRates { rates, tail_rate } => {
                check_prob("tail_rate", *tail_rate)?;
                let mut surv = vec![0.0; rates.len()];
                let mut pmf = vec![0.0; rates.len()];
                let mut y_prev = 1.0;
                for (k, &r) in rates.iter().enumerate() {
                    pmf[k] = r * y_prev;
                    y_prev *= 1.0 - r;
                    surv[k] = y_prev;
                }
                cache.surv = surv;
                cache.pmf = pmf;
                cache.tail_mass = y_prev;
            }
        }
        Ok(Self { spec, cache })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Probability mass `p_k`; zero for negative `k` by convention.
    pub fn pmf(&self, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        match &self.spec {
            ModelSpec::Geometric { p } => p * powi64(1.0 - p, k as u64),
            ModelSpec::NegativeBinomial { a, .. } => {
                let kf = k as f64;
                (ln_gamma(a + kf) - self.cache.ln_gamma_a - ln_gamma(kf + 1.0)
                    + a * self.cache.ln_p
                    + kf * self.cache.ln_q)
                    .exp()
            }
            ModelSpec::Zeta { a } => ((k + 1) as f64).powf(-a) / self.cache.zeta_a,
            ModelSpec::Poisson { lambda } => {
                let kf = k as f64;
                (-lambda + kf * self.cache.ln_p - ln_gamma(kf + 1.0)).exp()
            }
            ModelSpec::TabulatedPmf { probs, tail_rate } => {
                let len = probs.len() as i64;
                if k < len {
                    probs[k as usize]
                } else {
                    self.cache.tail_mass * tail_rate * powi64(1.0 - tail_rate, (k - len) as u64)
                }
            }
            ModelSpec::TabulatedRates { rates, tail_rate } => {
                let len = rates.len() as i64;
                if k < len {
                    self.cache.pmf[k as usize]
                } else {
                    self.cache.tail_mass * tail_rate * powi64(1.0 - tail_rate, (k - len) as u64)
                }
            }
        }
    }

    /// Survival `y_k = P[X > k]`; equals 1 for `k <= -1`.
    pub fn survival(&self, k: i64) -> f64 {
        if k < 0 {
            return 1.0;
        }
        match &self.spec {
            ModelSpec::Geometric { p } => powi64(1.0 - p, k as u64 + 1),
            ModelSpec::NegativeBinomial { .. } | ModelSpec::Poisson { .. } => {
                let p = self.pmf(k);
                if p == 0.0 {
                    // Deep in a light tail the mass is numerically zero.
                    return 0.0;
                }
                p * self.tail_ratio_sum(k)
            }
            ModelSpec::Zeta { a } => hurwitz_zeta(*a, (k + 2) as f64) / self.cache.zeta_a,
            ModelSpec::TabulatedPmf { probs, tail_rate } => {
                let len = probs.len() as i64;
                if k < len {
                    self.cache.surv[k as usize]
                } else {
                    self.cache.tail_mass * powi64(1.0 - tail_rate, (k - len + 1) as u64)
                }
            }
            ModelSpec::TabulatedRates { rates, tail_rate } => {
                let len = rates.len() as i64;
                if k < len {
                    self.cache.surv[k as usize]
                } else {
                    self.cache.tail_mass * powi64(1.0 - tail_rate, (k - len + 1) as u64)
                }
            }
        }
    }

    /// Tail-ratio sum `T_k = y_k / p_k = sum_{j>=1} p_{k+j} / p_k`.
    ///
    /// Evaluated as a series of ratio products for the light-tailed families
    /// and in closed form elsewhere; this is the stable building block for
    /// failure rates.
    fn tail_ratio_sum(&self, k: i64) -> f64 {
        debug_assert!(k >= 0);
        match &self.spec {
            ModelSpec::Geometric { p } => (1.0 - p) / p,
            ModelSpec::Zeta { a } => ((k + 1) as f64).powf(*a) * hurwitz_zeta(*a, (k + 2) as f64),
            ModelSpec::NegativeBinomial { .. } | ModelSpec::Poisson { .. } => {
                let mut acc = KahanSum::new();
                let mut prod = 1.0;
                let mut j = k;
                // Ratios tend to q < 1 (negative binomial) or 0 (Poisson).
                for _ in 0..10_000_000 {
                    prod *= self.pmf_ratio(j);
                    j += 1;
                    acc.add(prod);
                    if prod < 1e-18 * (1.0 + acc.value()) {
                        break;
                    }
                }
                acc.value()
            }
            ModelSpec::TabulatedPmf { .. } | ModelSpec::TabulatedRates { .. } => {
                self.survival(k) / self.pmf(k)
            }
        }
    }

    /// Discrete failure rate `r_k = p_k / y_{k-1}`; zero for negative `k`.
    pub fn failure_rate(&self, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        match &self.spec {
            ModelSpec::Geometric { p } => *p,
            ModelSpec::TabulatedPmf { probs, tail_rate } => {
                let len = probs.len() as i64;
                if k >= len {
                    *tail_rate
                } else {
                    probs[k as usize] / self.survival(k - 1)
                }
            }
            ModelSpec::TabulatedRates { rates, tail_rate } => {
                let len = rates.len() as i64;
                if k >= len {
                    *tail_rate
                } else {
                    rates[k as usize]
                }
            }
            _ => 1.0 / (1.0 + self.tail_ratio_sum(k)),
        }
    }

    /// Quantile `m(t) = min{j in Z_+ : y_j < 1/t}` for `t >= 1`.
    pub fn quantile_m(&self, t: f64) -> i64 {
        assert!(t >= 1.0 && t.is_finite(), "quantile_m needs t >= 1, got {t}");
        let target = 1.0 / t;
        if self.survival(0) < target {
            return 0;
        }
        // Exponential search for the first level below target, then bisect.
        let mut lo = 0i64; // survival(lo) >= target
        let mut hi = 1i64;
        while self.survival(hi) >= target {
            lo = hi;
            hi *= 2;
            assert!(hi < i64::MAX / 4, "quantile search diverged at t = {t}");
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.survival(mid) < target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// pmf ratio `p_{k+1} / p_k` in closed form.
    pub(crate) fn pmf_ratio(&self, k: i64) -> f64 {
        debug_assert!(k >= 0);
        match &self.spec {
            ModelSpec::Geometric { p } => 1.0 - p,
            ModelSpec::NegativeBinomial { a, p } => {
                (1.0 - p) * (a + k as f64) / (k as f64 + 1.0)
            }
            ModelSpec::Zeta { a } => (((k + 1) as f64) / ((k + 2) as f64)).powf(*a),
            ModelSpec::Poisson { lambda } => lambda / (k as f64 + 1.0),
            ModelSpec::TabulatedPmf { probs, tail_rate } => {
                let len = probs.len() as i64;
                if k + 1 < len {
                    probs[(k + 1) as usize] / probs[k as usize]
                } else if k + 1 == len {
                    self.cache.tail_mass * tail_rate / probs[k as usize]
                } else {
                    1.0 - tail_rate
                }
            }
            ModelSpec::TabulatedRates { rates, tail_rate } => {
                let len = rates.len() as i64;
                if k + 1 < len {
                    self.cache.pmf[(k + 1) as usize] / self.cache.pmf[k as usize]
                } else if k + 1 == len {
                    self.cache.tail_mass * tail_rate / self.cache.pmf[k as usize]
                } else {
                    1.0 - tail_rate
                }
            }
        }
    }

    /// Limit of the failure rate sequence, used for normalizer regime checks.
    pub fn limit_failure_rate(&self) -> f64 {
        match &self.spec {
            ModelSpec::Geometric { p } => *p,
            ModelSpec::NegativeBinomial { p, .. } => *p,
            ModelSpec::Zeta { .. } => 0.0,
            ModelSpec::Poisson { .. } => 1.0,
            ModelSpec::TabulatedPmf { tail_rate, .. }
            | ModelSpec::TabulatedRates { tail_rate, .. } => *tail_rate,
        }
    }

    /// Level beyond which the pmf is non-increasing.
    pub(crate) fn pmf_nonincreasing_from(&self) -> i64 {
        match &self.spec {
            ModelSpec::Geometric { .. } | ModelSpec::Zeta { .. } => 0,
            ModelSpec::Poisson { lambda } => lambda.ceil() as i64,
            ModelSpec::NegativeBinomial { a, p } => {
                // ratio q(a+k)/(k+1) <= 1 once k >= (q a - 1) / p.
                let q = 1.0 - p;
                ((q * a - 1.0) / p).ceil().max(0.0) as i64
            }
            ModelSpec::TabulatedPmf { probs, .. } => probs.len() as i64,
            ModelSpec::TabulatedRates { rates, .. } => rates.len() as i64,
        }
    }

    /// How tail truncation bounds are certified for this model.
    pub(crate) fn tail_hint(&self) -> TailHint {
        match &self.spec {
            ModelSpec::Zeta { a } => TailHint::PolynomialDecay {
                a: *a,
                zeta_a: self.cache.zeta_a,
            },
            _ => TailHint::EventuallyGeometric,
        }
    }

    /// Rigorous upper bound on the term ratio `t_{j+1}/t_j` of correction
    /// series with terms `t_j = s_j * p_{j+delta}`, valid for every `j > i`.
    /// Returns a value >= 1 when `i` is still before the decay regime.
    pub(crate) fn corr_ratio_sup(&self, i: i64, delta: i32) -> f64 {
        let d = delta as i64;
        match &self.spec {
            ModelSpec::Geometric { p } => 1.0 - p,
            ModelSpec::NegativeBinomial { a, p } => {
                let q = 1.0 - p;
                // pmf ratio is decreasing; 1 - r_k >= q for every k.
                let j0 = (i + 1 + d).max(0) as f64;
                let rp = q * (a + j0) / (j0 + 1.0);
                rp * rp / q
            }
            ModelSpec::Poisson { lambda } => {
                let j = (i + 1) as f64;
                if j + 2.0 <= 2.0 * lambda + d.abs() as f64 + 2.0 {
                    return f64::INFINITY; // not yet in the decreasing regime
                }
                // ratio_p(j+d)^2 / (1 - r_j), with the Vervaat lower bound
                // 1 - r_j >= lambda/(j+1) (1 - lambda/(j+1)).
                lambda * (j + 1.0) / ((j + d as f64 + 1.0).powi(2) * (1.0 - lambda / (j + 1.0)))
            }
            ModelSpec::Zeta { .. } => 1.0,
            ModelSpec::TabulatedPmf { .. } | ModelSpec::TabulatedRates { .. } => {
                // Inside the table: scan; beyond it the model is geometric.
                let len = match &self.spec {
                    ModelSpec::TabulatedPmf { probs, .. } => probs.len() as i64,
                    ModelSpec::TabulatedRates { rates, .. } => rates.len() as i64,
                    _ => unreachable!(),
                };
                let tr = self.limit_failure_rate();
                let mut sup: f64 = 1.0 - tr; // beyond-table ratio of s_j p_{j+d} terms
                let lo = (i + 1 + d.min(0)).max(0);
                let mut one_minus_r_min: f64 = 1.0 - tr;
                for k in lo..len {
                    one_minus_r_min = one_minus_r_min.min(1.0 - self.failure_rate(k));
                }
                let mut ratio_sup: f64 = 1.0 - tr;
                for k in lo..len {
                    ratio_sup = ratio_sup.max(self.pmf_ratio(k));
                }
                if one_minus_r_min > 0.0 {
                    sup = sup.max(ratio_sup * ratio_sup / one_minus_r_min);
                }
                sup
            }
        }
    }

    /// Rigorous upper bound on `sup_{j > i} r_j` (zeta family: rates decrease
    /// like (a-1)/j; elsewhere the limit rate or 1 is already sharp).
    pub(crate) fn rate_sup(&self, i: i64) -> f64 {
        match &self.spec {
            ModelSpec::Geometric { p } => *p,
            ModelSpec::NegativeBinomial { p, .. } => *p,
            ModelSpec::Poisson { .. } => 1.0,
            ModelSpec::Zeta { a } => {
                // r_j <= 1/T_j with T_j >= (j+1)^a (j+2)^(1-a) / (a-1).
                let j = (i + 1) as f64;
                let tau = (j + 1.0).powf(*a) * (j + 2.0).powf(1.0 - a) / (a - 1.0);
                (1.0 / tau).min(1.0)
            }
            ModelSpec::TabulatedPmf { .. } | ModelSpec::TabulatedRates { .. } => {
                let len = match &self.spec {
                    ModelSpec::TabulatedPmf { probs, .. } => probs.len() as i64,
                    ModelSpec::TabulatedRates { rates, .. } => rates.len() as i64,
                    _ => unreachable!(),
                };
                let mut sup = self.limit_failure_rate();
                for k in (i + 1).max(0)..len {
                    sup = sup.max(self.failure_rate(k));
                }
                sup
            }
        }
    }
}

/// Tail certification strategy for truncated series over a model.
#[derive(Debug, Clone, Copy)]
pub(crate) enum TailHint {
    /// Correction-term ratios are eventually non-increasing; a closed-form
    /// ratio sup from [`DiscreteModel::corr_ratio_sup`] certifies the tail.
    EventuallyGeometric,
    /// Zeta-style polynomial decay; tails are certified with integral-test
    /// envelopes built from `(a, zeta(a))`.
    PolynomialDecay { a: f64, zeta_a: f64 },
}

// ---------------------------------------------------------------------------
// Survival cursor
// ---------------------------------------------------------------------------

/// Forward iterator over `(k, p_k, y_{k-1}, y_k)` using pmf-ratio recurrences
/// with periodic resynchronization against the exact model evaluations.
///
/// The recurrence `y_k = y_{k-1} - p_k` loses relative precision as the
/// survival mass decays, so the cursor resyncs whenever the survival has
/// dropped three orders of magnitude since the last sync (or every 4096
/// steps), keeping relative drift near 1e-13.
pub(crate) struct SurvivalCursor<'a> {
    model: &'a DiscreteModel,
    level: i64,
    pmf: f64,
    surv_prev: f64,
    surv: f64,
    steps_since_sync: u32,
    surv_at_sync: f64,
}

impl<'a> SurvivalCursor<'a> {
    pub fn new(model: &'a DiscreteModel, start: i64) -> Self {
        assert!(start >= 0);
        let pmf = model.pmf(start);
        let surv_prev = model.survival(start - 1);
        let surv = model.survival(start);
        Self {
            model,
            level: start,
            pmf,
            surv_prev,
            surv,
            steps_since_sync: 0,
            surv_at_sync: surv,
        }
    }

    #[cfg_attr(not(test), allow(dead_code))]
    #[inline]
    pub fn level(&self) -> i64 {
        self.level
    }
    #[cfg_attr(not(test), allow(dead_code))]
    #[inline]
    pub fn pmf(&self) -> f64 {
        self.pmf
    }
    #[cfg_attr(not(test), allow(dead_code))]
    #[inline]
    pub fn surv_prev(&self) -> f64 {
        self.surv_prev
    }
    #[inline]
    pub fn surv(&self) -> f64 {
        self.surv
    }

    pub fn advance(&mut self) {
        let ratio = self.model.pmf_ratio(self.level);
        self.level += 1;
        self.pmf *= ratio;
        self.surv_prev = self.surv;
        self.surv = (self.surv_prev - self.pmf).max(0.0);
        self.steps_since_sync += 1;
        if self.steps_since_sync >= 4096
            || (self.surv < 1e-3 * self.surv_at_sync && self.surv > 0.0)
        {
            self.resync();
        }
    }

    fn resync(&mut self) {
        self.pmf = self.model.pmf(self.level);
        self.surv_prev = self.model.survival(self.level - 1);
        self.surv = (self.surv_prev - self.pmf).max(0.0);
        self.steps_since_sync = 0;
        self.surv_at_sync = self.surv;
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Inverse-CDF sampler backed by a precomputed survival table with exact
/// model fallback beyond it. Immutable and shareable; pair it with one
/// [`RngState`] per stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    model: DiscreteModel,
    /// `surv[k] = y_k`, descending, covering all but ~1e-9 of the mass
    /// (heavy tails cap the table and fall back to search).
    surv: Vec<f64>,
}

const SAMPLER_TABLE_TAIL: f64 = 1e-9;
const SAMPLER_TABLE_CAP: usize = 1 << 16;

impl Sampler {
    pub fn new(model: &DiscreteModel) -> Self {
        let mut surv = Vec::with_capacity(64);
        let mut k = 0i64;
        loop {
            let y = model.survival(k);
            surv.push(y);
            k += 1;
            if y < SAMPLER_TABLE_TAIL || surv.len() >= SAMPLER_TABLE_CAP {
                break;
            }
        }
        Self {
            model: model.clone(),
            surv,
        }
    }

    pub fn model(&self) -> &DiscreteModel {
        &self.model
    }

    /// Draw one value: the smallest `k` with `y_k < v`, `v = 1 - u` uniform
    /// in (0, 1], so `P[X = k] = y_{k-1} - y_k = p_k`.
    #[inline]
    pub fn draw(&self, rng: &mut RngState) -> i64 {
        let v = 1.0 - rng.next_f64(); // in (0, 1]
        // partition_point: first index where survival drops below v.
        let idx = self.surv.partition_point(|&y| y >= v);
        if idx < self.surv.len() {
            return idx as i64;
        }
        self.beyond_table(v)
    }

    #[cold]
    fn beyond_table(&self, v: f64) -> i64 {
        let mut lo = self.surv.len() as i64 - 1; // survival(lo) >= v
        let mut hi = lo.max(1) * 2;
        while self.model.survival(hi) >= v {
            lo = hi;
            hi *= 2;
            assert!(hi < i64::MAX / 4, "sampler fallback diverged");
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.model.survival(mid) < v {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

// ---------------------------------------------------------------------------
// CSV loading for tabulated models
// ---------------------------------------------------------------------------

/// Parse a tabulated model from CSV text: a header line
/// `# kind=pmf|rates tail_rate=<x>` followed by one value per line.
pub fn parse_tabulated_csv(content: &str) -> Result<DiscreteModel> {
    let mut lines = content.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty tabulated model file".into()))?
        .trim();
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("expected '# kind=... tail_rate=...', got {header:?}")))?
        .trim();
    let mut kind: Option<&str> = None;
    let mut tail_rate: Option<f64> = None;
    for token in body.split_whitespace() {
        if let Some(v) = token.strip_prefix("kind=") {
            kind = Some(v);
        } else if let Some(v) = token.strip_prefix("tail_rate=") {
            tail_rate = Some(
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad tail_rate {v:?}: {e}")))?,
            );
        } else {
            return Err(Error::Parse(format!("unknown header token {token:?}")));
        }
    }
    let kind = kind.ok_or_else(|| Error::Parse("header missing kind=".into()))?;
    let tail_rate = tail_rate.ok_or_else(|| Error::Parse("header missing tail_rate=".into()))?;
    let mut values = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad value {line:?}: {e}")))?,
        );
    }
    match kind {
        "pmf" => DiscreteModel::tabulated_pmf(values, tail_rate),
        "rates" => DiscreteModel::tabulated_rates(values, tail_rate),
        other => Err(Error::Parse(format!(
            "kind must be pmf or rates, got {other:?}"
        ))),
    }
}

/// Load a tabulated model from a CSV file on disk.
pub fn load_tabulated_csv(path: &std::path::Path) -> Result<DiscreteModel> {
    parse_tabulated_csv(&std::fs::read_to_string(path)?)
}
