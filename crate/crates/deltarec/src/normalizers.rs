//! Centering and scaling sequences for the delta-record count.
//!
//! Each theorem regime pairs a center with a scale:
//!
//! - negative delta, rates bounded away from 1: center `theta(m(n))`, scale
//!   `b_n^2 = sum_{k<=m(n)} z_k r_k / y_k`;
//! - negative delta, rates tending to 1: scale `sum_{k<=m(n)} (1-r_k)^{2 delta}`;
//! - positive delta, limiting rate below 1: scale `sigma_r^2 log n`;
//! - positive delta, limiting rate 1: scale `sum_{k<=m(n)} e_k`, with the
//!   count almost surely finite when that series converges;
//! - converging rates: the simplified centering `-r(1-r)^delta log n / log(1-r)`
//!   (or `log n` at r = 0) with variance constant `sigma_r^2`;
//! - the Poisson closed forms in terms of `m(n)`.
//!
//! Regimes are never inferred silently: the caller picks a variant and the
//! plan constructor rejects models whose limiting failure rate does not
//! match it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteModel, ModelSpec};
use crate::error::{Error, Result};
use crate::hazard::HazardTable;
use crate::numeric::KahanSum;

/// Caller-facing variant request; `Thm41` resolves to the r < 1 or r = 1 form
/// from the model's limiting rate, `CorSimplified` to the sign-matched
/// corollary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantRequest {
    Thm31a,
    Thm31b,
    Thm41,
    CorSimplified,
    PoissonSpecial,
}

/// Resolved normalizer variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Thm31a,
    Thm31b,
    Thm41a,
    Thm41b,
    Cor31,
    Cor41,
    PoissonSpecial,
}

/// A (center(n), scale(n)) pair tagged with its theorem variant.
#[derive(Debug, Clone)]
pub struct NormalizerPlan {
    variant: Variant,
    table: Arc<HazardTable>,
    /// Asymptotic variance constant for the r < 1 regimes.
    sigma2: Option<f64>,
    /// Whether the scale diverges (always true except in the finite-record
    /// regime of the positive-delta r = 1 case).
    diverges: bool,
    r_limit: f64,
}

impl NormalizerPlan {
    pub fn new(request: VariantRequest, table: Arc<HazardTable>) -> Result<Self> {
        let delta = table.delta();
        let r = table.model().limit_failure_rate();
        let mismatch = |reason: &str| -> Error {
            Error::RegimeMismatch {
                variant: format!("{request:?}"),
                reason: reason.to_string(),
            }
        };
        let (variant, sigma2, diverges) = match request {
            VariantRequest::Thm31a => {
                if delta >= 0 {
                    return Err(mismatch("requires delta < 0"));
                }
                if r >= 1.0 {
                    return Err(mismatch("requires limsup r_k < 1"));
                }
                (Variant::Thm31a, None, true)
            }
            VariantRequest::Thm31b => {
                if delta >= 0 {
                    return Err(mismatch("requires delta < 0"));
                }
                if r < 1.0 {
                    return Err(mismatch("requires r_k -> 1"));
                }
                (Variant::Thm31b, None, true)
            }
            VariantRequest::Thm41 => {
                if delta <= 0 {
                    return Err(mismatch("requires delta > 0"));
                }
                if r < 1.0 {
                    (Variant::Thm41a, Some(sigma_r(r, delta)?), true)
                } else {
                    let diverges = e_sum_diverges(table.model(), delta);
                    (Variant::Thm41b, None, diverges)
                }
            }
            VariantRequest::CorSimplified => {
                if r >= 1.0 {
                    return Err(mismatch(
                        "no simplified centering in the r = 1 regime",
                    ));
                }
                let v = if delta < 0 { Variant::Cor31 } else { Variant::Cor41 };
                (v, Some(sigma_r(r, delta)?), true)
            }
            VariantRequest::PoissonSpecial => {
                let lambda = match table.model().spec() {
                    ModelSpec::Poisson { lambda } => *lambda,
                    _ => return Err(mismatch("requires a Poisson model")),
                };
                if delta > 1 {
                    return Err(mismatch(
                        "delta > 1 is the finite-record regime; no normalizer",
                    ));
                }
                let _ = lambda;
                (Variant::PoissonSpecial, None, true)
            }
        };
        Ok(Self {
            variant,
            table,
            sigma2,
            diverges,
            r_limit: r,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn sigma2(&self) -> Option<f64> {
        self.sigma2
    }
    pub fn diverges(&self) -> bool {
        self.diverges
    }
    pub fn table(&self) -> &Arc<HazardTable> {
        &self.table
    }

    pub fn center(&self, n: u64) -> Result<f64> {
        match self.variant {
            Variant::Thm31a | Variant::Thm31b | Variant::Thm41a | Variant::Thm41b => {
                centering(&self.table, n, false)
            }
            Variant::Cor31 | Variant::Cor41 => centering(&self.table, n, true),
            Variant::PoissonSpecial => {
                let (lambda, delta) = self.poisson_params();
                Ok(poisson_special(lambda, delta, n)?.0)
            }
        }
    }

    pub fn scale2(&self, n: u64) -> Result<f64> {
        match self.variant {
            Variant::Thm31a => scaling_thm31a(&self.table, n),
            Variant::Thm31b => scaling_thm31b(&self.table, n),
            Variant::Thm41a | Variant::Thm41b => Ok(scaling_thm41(&self.table, n)?.0),
            Variant::Cor31 | Variant::Cor41 => {
                let s2 = self.sigma2.expect("sigma2 present for corollary variants");
                Ok(s2 * (n as f64).ln())
            }
            Variant::PoissonSpecial => {
                let (lambda, delta) = self.poisson_params();
                Ok(poisson_special(lambda, delta, n)?.1)
            }
        }
    }

    pub fn scale(&self, n: u64) -> Result<f64> {
        Ok(self.scale2(n)?.sqrt())
    }

    fn poisson_params(&self) -> (f64, i32) {
        match self.table.model().spec() {
            ModelSpec::Poisson { lambda } => (*lambda, self.table.delta()),
            _ => unreachable!("variant construction checked the model"),
        }
    }

    /// Serializable summary: variant, constants, and center/scale sampled on
    /// an n grid.
    pub fn summary(&self, n_grid: &[u64]) -> Result<PlanSummary> {
        let mut rows = Vec::with_capacity(n_grid.len());
        for &n in n_grid {
            rows.push(PlanRow {
                n,
                center: self.center(n)?,
                scale: self.scale(n)?,
            });
        }
        Ok(PlanSummary {
            variant: self.variant,
            sigma2: self.sigma2,
            diverges: self.diverges,
            r_limit: self.r_limit,
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub n: u64,
    pub center: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub variant: Variant,
    pub sigma2: Option<f64>,
    pub diverges: bool,
    pub r_limit: f64,
    pub rows: Vec<PlanRow>,
}

/// Limit constant `L` of `z_k / y_k`: for negative delta
/// `(1-r)^d ((1-r)^{d+1} + (1-r)^d - 1)`, for positive delta
/// `(1-r)^d ((1-r)^{d+1} - (1+2 d r)(1-r)^d + 1)`; equals 1 at r = 0.
pub fn l_constant(r: f64, delta: i32) -> Result<f64> {
    if delta == 0 {
        return Err(Error::DeltaZero);
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: format!("must be in [0,1), got {r}"),
        });
    }
    let q = 1.0 - r;
    let qd = q.powi(delta);
    Ok(if delta < 0 {
        qd * (q.powi(delta + 1) + qd - 1.0)
    } else {
        qd * (q.powi(delta + 1) - (1.0 + 2.0 * delta as f64 * r) * qd + 1.0)
    })
}

/// Asymptotic variance constant `sigma_r^2` for converging failure rates
/// `r in [0, 1)`; equals 1 at r = 0 (the removable limit).
pub fn sigma_r(r: f64, delta: i32) -> Result<f64> {
    if delta == 0 {
        return Err(Error::DeltaZero);
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: format!("must be in [0,1), got {r}"),
        });
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    Ok(-r * l_constant(r, delta)? / (1.0 - r).ln())
}

/// `b_n^2 = sum_{k=0}^{m(n)} z_k r_k / y_k` (negative delta, limsup r < 1).
pub fn scaling_thm31a(table: &HazardTable, n: u64) -> Result<f64> {
    if table.delta() >= 0 {
        return Err(Error::RegimeMismatch {
            variant: "Thm31a".into(),
            reason: "requires delta < 0".into(),
        });
    }
    let m = table.model().quantile_m(n as f64);
    if m > table.depth() {
        return Err(Error::OutOfRange(format!(
            "m(n) = {m} exceeds table depth {}; rebuild with more depth",
            table.depth()
        )));
    }
    let mut acc = KahanSum::new();
    for k in 0..=m {
        let y = table.survival_at(k);
        acc.add(table.cond_var_increment(k) * table.rate_at(k) / y);
    }
    Ok(acc.value())
}

/// `sum_{k=0}^{m(n)} (1 - r_k)^{2 delta}` (negative delta, r_k -> 1).
pub fn scaling_thm31b(table: &HazardTable, n: u64) -> Result<f64> {
    if table.delta() >= 0 {
        return Err(Error::RegimeMismatch {
            variant: "Thm31b".into(),
            reason: "requires delta < 0".into(),
        });
    }
    let m = table.model().quantile_m(n as f64);
    let two_d = 2 * table.delta();
    let mut acc = KahanSum::new();
    for k in 0..=m {
        acc.add((1.0 - table.rate_at(k)).powi(two_d));
    }
    Ok(acc.value())
}

/// Positive-delta scale: `sigma_r^2 log n` when the limiting rate is below 1,
/// otherwise `sum_{k=0}^{m(n)} e_k` together with its divergence verdict.
pub fn scaling_thm41(table: &HazardTable, n: u64) -> Result<(f64, bool)> {
    if table.delta() <= 0 {
        return Err(Error::RegimeMismatch {
            variant: "Thm41".into(),
            reason: "requires delta > 0".into(),
        });
    }
    let r = table.model().limit_failure_rate();
    if r < 1.0 {
        let s2 = sigma_r(r, table.delta())?;
        return Ok((s2 * (n as f64).ln(), true));
    }
    let m = table.model().quantile_m(n as f64);
    let mut acc = KahanSum::new();
    for k in 0..=m {
        acc.add(table.e_product(k)?);
    }
    Ok((acc.value(), e_sum_diverges(table.model(), table.delta())))
}

/// Centering: exact `theta(m(n))`, or the simplified corollary form
/// (`-r (1-r)^delta log n / log(1-r)` for r in (0,1), `log n` at r = 0).
pub fn centering(table: &HazardTable, n: u64, simplified: bool) -> Result<f64> {
    if !simplified {
        let m = table.model().quantile_m(n as f64);
        return Ok(table.theta_extended(m));
    }
    let r = table.model().limit_failure_rate();
    if r >= 1.0 {
        return Err(Error::RegimeMismatch {
            variant: "CorSimplified".into(),
            reason: "no simplified centering in the r = 1 regime".into(),
        });
    }
    let ln_n = (n as f64).ln();
    if r == 0.0 {
        Ok(ln_n)
    } else {
        let q = 1.0 - r;
        Ok(-r * q.powi(table.delta()) * ln_n / q.ln())
    }
}

/// Poisson closed forms: for `delta < 0` center `lambda^d m^{1-d}/(1-d)` and
/// scale^2 `lambda^{2d} m^{1-2d}/(1-2d)`; for `delta = 1` center
/// `lambda log m(n)` and scale^2 `lambda log log n`.
pub fn poisson_special(lambda: f64, delta: i32, n: u64) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: "must be > 0".into(),
        });
    }
    if delta > 1 || delta == 0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "closed forms exist for delta < 0 or delta = 1".into(),
        });
    }
    let model = DiscreteModel::poisson(lambda)?;
    let m = model.quantile_m(n as f64) as f64;
    if delta < 0 {
        let d = delta as f64;
        let center = lambda.powi(delta) * m.powf(1.0 - d) / (1.0 - d);
        let scale2 = lambda.powi(2 * delta) * m.powf(1.0 - 2.0 * d) / (1.0 - 2.0 * d);
        Ok((center, scale2))
    } else {
        if m < 1.0 {
            return Err(Error::Precondition(format!(
                "n = {n} too small: m(n) must be >= 1 for the log m centering"
            )));
        }
        let lnln = (n as f64).ln().ln();
        Ok((lambda * m.ln(), lambda * lnln))
    }
}

/// Does `sum_k e_k` diverge? Built-in models use the analytic answer
/// (a limiting rate below 1 keeps the terms bounded away from zero; the zeta
/// family has e_k -> 1; Poisson diverges exactly for delta = 1). Tabulated
/// models fall back to the numeric partial-sum test.
pub fn e_sum_diverges(model: &DiscreteModel, delta: i32) -> bool {
    debug_assert!(delta > 0);
    match model.spec() {
        ModelSpec::Geometric { .. } | ModelSpec::NegativeBinomial { .. } => true,
        ModelSpec::Zeta { .. } => true,
        ModelSpec::Poisson { .. } => delta == 1,
        ModelSpec::TabulatedPmf { .. } | ModelSpec::TabulatedRates { .. } => {
            e_sum_numeric_diverges(model, delta)
        }
    }
}

/// Numeric divergence test for `sum e_k`: the partial sums up to k = 1e6 must
/// still be moving (Cauchy increment over the last decade above 1e-6) and the
/// terms must dominate c/k for a fitted c. Built-in models bypass this; it
/// exists for user-supplied tables where no closed form is available.
pub fn e_sum_numeric_diverges(model: &DiscreteModel, delta: i32) -> bool {
    let d = delta as i64;
    let e_at = |k: i64| -> f64 {
        let mut prod = 1.0;
        for i in k..k + d {
            prod *= 1.0 - model.failure_rate(i);
        }
        prod
    };
    let cap: i64 = 1_000_000;
    let decade_start = cap / 10;
    let mut acc = KahanSum::new();
    let mut last_decade = 0.0;
    let mut fitted_c = f64::INFINITY;
    for k in 0..=cap {
        let e = e_at(k);
        acc.add(e);
        if k >= decade_start {
            last_decade += e;
            fitted_c = fitted_c.min(e * k as f64);
        }
    }
    let cauchy_moving = last_decade > 1e-6;
    let dominates_harmonic = fitted_c > 0.0 && fitted_c.is_finite();
    cauchy_moving && dominates_harmonic
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo_table(p: f64, delta: i32) -> Arc<HazardTable> {
        HazardTable::build(&DiscreteModel::geometric(p).unwrap(), delta).unwrap()
    }

    #[test]
    fn sigma_r_reference_values() {
        assert_eq!(sigma_r(0.0, -1).unwrap(), 1.0);
        assert_eq!(sigma_r(0.0, 3).unwrap(), 1.0);
        let s = sigma_r(0.5, -1).unwrap();
        assert!((s - 2.885390081777927).abs() < 1e-9, "{s}");
        // Equivalent closed form -(p/q^2)/log q for p = q = 0.5.
        let direct = -(0.5 / 0.25) / 0.5f64.ln();
        assert!((s - direct).abs() < 1e-12);
        // -0.25 * 0.25 / log 0.5 = 0.09016844...
        let s_pos = sigma_r(0.5, 1).unwrap();
        let expected = -0.25 * 0.25 / 0.5f64.ln();
        assert!((s_pos - expected).abs() < 1e-12);
        assert!((s_pos - 0.090168).abs() < 1e-6);
        assert!(sigma_r(1.0, -1).is_err());
        assert!(sigma_r(0.5, 0).is_err());
    }

    #[test]
    fn sigma_r_geometric_form_identity() {
        // -p q^d (q^{d+1} + q^d - 1)/log q equals sigma_r(p, d) exactly.
        for p in [0.1f64, 0.3, 0.5, 0.7, 0.9] {
            let q: f64 = 1.0 - p;
            for delta in [-3i32, -2, -1] {
                let direct = -p * q.powi(delta) * (q.powi(delta + 1) + q.powi(delta) - 1.0)
                    / q.ln();
                let s = sigma_r(p, delta).unwrap();
                assert!((direct - s).abs() < 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sigma_constants_positive_on_grid() {
        for r in [0.05, 0.3, 0.5, 0.8, 0.95] {
            for delta in [-3i32, -2, -1, 1, 2, 3] {
                assert!(sigma_r(r, delta).unwrap() > 0.0, "r={r} delta={delta}");
            }
        }
    }

    #[test]
    fn negative_binomial_shares_geometric_constants() {
        let p = 0.5;
        let nb = DiscreteModel::negative_binomial(2.0, p).unwrap();
        assert_eq!(nb.limit_failure_rate(), p);
        for delta in [-2i32, -1, 1] {
            let s_geo = sigma_r(p, delta).unwrap();
            let s_nb = sigma_r(nb.limit_failure_rate(), delta).unwrap();
            assert_eq!(s_geo, s_nb);
        }
    }

    #[test]
    fn thm31a_spot_value_and_log_limit() {
        let t = geo_table(0.5, -1);
        // n = 16: m = 4, five terms of z_k r_k / y_k = 2 each.
        let b2 = scaling_thm31a(&t, 16).unwrap();
        assert!((b2 - 10.0).abs() < 1e-9, "{b2}");
        // n = 1: single term z_0 r_0 / y_0.
        let b2_1 = scaling_thm31a(&t, 1).unwrap();
        assert!((b2_1 - 2.0).abs() < 1e-12);
        // b_n^2 / log n -> sigma^2 within 2% at n = 1e9.
        let sigma2 = sigma_r(0.5, -1).unwrap();
        let b2_big = scaling_thm31a(&t, 1_000_000_000).unwrap();
        let ratio = b2_big / 1e9f64.ln() / sigma2;
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
        assert!(scaling_thm31a(&geo_table(0.5, 1), 100).is_err());
    }

    #[test]
    fn thm31b_constant_rate_reduction_and_monotonicity() {
        // Constant-rate model reduces to (m(n)+1) q^{2 delta}.
        let rates = DiscreteModel::tabulated_rates(vec![0.5; 30], 0.5).unwrap();
        let t = HazardTable::build(&rates, -1).unwrap();
        let n = 1000u64;
        let m = rates.quantile_m(n as f64);
        let v = scaling_thm31b(&t, n).unwrap();
        assert!((v - (m + 1) as f64 * 0.25f64.powi(-1)).abs() < 1e-9);
        // Monotone in n.
        let poi = DiscreteModel::poisson(1.0).unwrap();
        let tp = HazardTable::build(&poi, -1).unwrap();
        let mut prev = 0.0;
        for n in [10u64, 100, 10_000, 1_000_000] {
            let v = scaling_thm31b(&tp, n).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn thm31b_poisson_asymptotic_in_m() {
        // sum_{k<=M} (1-r_k)^{-2} ~ M^3/3 as M grows (the n -> infinity
        // regime reaches modest m(n) only at astronomically large n, so the
        // asymptotic is checked directly in M).
        let poi = DiscreteModel::poisson(1.0).unwrap();
        let m_cap = 1000i64;
        let mut acc = 0.0;
        for k in 0..=m_cap {
            acc += (1.0 - poi.failure_rate(k)).powi(-2);
        }
        let ratio = acc / (m_cap as f64).powi(3) * 3.0;
        assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn thm41_values_and_divergence() {
        // Geometric delta = 1 at n = e^10: sigma^2 * 10.
        let t = geo_table(0.5, 1);
        let n = (10f64.exp().ceil()) as u64;
        let (s2, div) = scaling_thm41(&t, n).unwrap();
        let sigma2 = sigma_r(0.5, 1).unwrap();
        assert!(div);
        assert!((s2 - sigma2 * (n as f64).ln()).abs() < 1e-12);
        // Poisson delta = 2: finite-record regime.
        let poi = DiscreteModel::poisson(1.0).unwrap();
        let t2 = HazardTable::build(&poi, 2).unwrap();
        let (_e_sum, div2) = scaling_thm41(&t2, 1_000_000).unwrap();
        assert!(!div2);
        // Poisson delta = 1: sum e_k within 10% of lambda log m(n) at n = 1e9.
        let t1 = HazardTable::build(&poi, 1).unwrap();
        let (e_sum, div1) = scaling_thm41(&t1, 1_000_000_000).unwrap();
        assert!(div1);
        let m = poi.quantile_m(1e9) as f64;
        assert!(
            (e_sum / m.ln() - 1.0).abs() < 0.10,
            "sum e = {e_sum}, lambda log m = {}",
            m.ln()
        );
    }

    #[test]
    fn centering_values() {
        let t = geo_table(0.5, -1);
        let exact = centering(&t, 16, false).unwrap();
        assert!((exact - 4.0).abs() < 1e-12);
        let simplified = centering(&t, 16, true).unwrap();
        assert!((simplified - 4.0).abs() < 1e-12);
        // Zeta: simplified centering is log n.
        let z = DiscreteModel::zeta(2.0).unwrap();
        let tz = HazardTable::build(&z, 1).unwrap();
        let c = centering(&tz, 1_000_000, true).unwrap();
        assert!((c - 1e6f64.ln()).abs() < 1e-12);
        // r = 1 regime has no simplified form.
        let poi = DiscreteModel::poisson(1.0).unwrap();
        let tp = HazardTable::build(&poi, -1).unwrap();
        assert!(centering(&tp, 100, true).is_err());
    }

    #[test]
    fn poisson_special_values() {
        // delta = -1, lambda = 1, m(n) = 10 -> center 50, scale^2 = 1000/3.
        let model = DiscreteModel::poisson(1.0).unwrap();
        // find n with m(n) = 10
        let mut n = 2u64;
        while model.quantile_m(n as f64) < 10 {
            n *= 2;
        }
        let (center, scale2) = poisson_special(1.0, -1, n).unwrap();
        let m = model.quantile_m(n as f64) as f64;
        assert_eq!(m as i64, 10);
        assert!((center - m * m / 2.0).abs() < 1e-9);
        assert!((scale2 - m * m * m / 3.0).abs() < 1e-9);
        // delta = 1: variance constant lambda.
        let (_c, s2) = poisson_special(1.0, 1, 1_000_000).unwrap();
        assert!((s2 - 1e6f64.ln().ln()).abs() < 1e-12);
        assert!(poisson_special(1.0, 2, 100).is_err());
        assert!(poisson_special(1.0, 0, 100).is_err());
    }

    #[test]
    fn l_constant_matches_geometric_ratio() {
        // For geometric, z_k / y_k is exactly L for k >= max(0, -delta).
        for (p, delta) in [(0.5, -1i32), (0.5, -2), (0.3, -1), (0.5, 1), (0.4, 2)] {
            let t = geo_table(p, delta);
            let l = l_constant(p, delta).unwrap();
            for k in delta.unsigned_abs() as i64..20 {
                let ratio = t.cond_var_increment(k) / t.model().survival(k);
                assert!(
                    (ratio - l).abs() < 1e-9 * l.max(1.0),
                    "p={p} delta={delta} k={k}: {ratio} vs {l}"
                );
            }
        }
        // And z_k / y_k converges to L for non-constant rates: the gap must
        // shrink along k (O(1/k) rate corrections for the negative binomial).
        let nb = DiscreteModel::negative_binomial(2.0, 0.5).unwrap();
        let t = HazardTable::build(&nb, -1).unwrap();
        let l = l_constant(0.5, -1).unwrap();
        let gap = |k: i64| (t.cond_var_increment(k) / nb.survival(k) - l).abs();
        assert!(gap(40) < 0.05 * l, "gap {} vs {l}", gap(40));
        assert!(gap(40) < gap(20) && gap(20) < gap(10));
    }

    #[test]
    fn plan_construction_and_regime_checks() {
        let t = geo_table(0.5, -1);
        let plan = NormalizerPlan::new(VariantRequest::Thm31a, t.clone()).unwrap();
        assert_eq!(plan.variant(), Variant::Thm31a);
        assert!((plan.center(16).unwrap() - 4.0).abs() < 1e-12);
        assert!((plan.scale2(16).unwrap() - 10.0).abs() < 1e-9);
        assert!(plan.scale(16).unwrap() > 0.0);
        // Wrong-regime requests are rejected.
        assert!(NormalizerPlan::new(VariantRequest::Thm41, t.clone()).is_err());
        assert!(NormalizerPlan::new(VariantRequest::Thm31b, t.clone()).is_err());
        let poi = DiscreteModel::poisson(1.0).unwrap();
        let tp = HazardTable::build(&poi, -1).unwrap();
        assert!(NormalizerPlan::new(VariantRequest::Thm31a, tp.clone()).is_err());
        assert!(NormalizerPlan::new(VariantRequest::Thm31b, tp.clone()).is_ok());
        assert!(NormalizerPlan::new(VariantRequest::PoissonSpecial, tp).is_ok());
        // Plan summary serializes with sampled rows.
        let summary = plan.summary(&[100, 10_000]).unwrap();
        assert_eq!(summary.rows.len(), 2);
        assert!(serde_json::to_string(&summary).is_ok());
    }

    #[test]
    fn numeric_divergence_probe_agrees_with_analytic_tail() {
        // Tabulated model with a geometric tail: e_k tends to a positive
        // constant, so the series diverges.
        let tab = DiscreteModel::tabulated_rates(vec![0.4, 0.3, 0.6], 0.5).unwrap();
        assert!(e_sum_diverges(&tab, 1));
        assert!(e_sum_numeric_diverges(&tab, 2));
    }
}
