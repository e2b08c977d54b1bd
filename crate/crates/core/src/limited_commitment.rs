//! Optimal schedules when the firm cannot commit to its period-2 price.
//!
//! Every quantity below is computed in units where `v_H = 1`: the shape of the
//! solution depends on `mu_bar = v_L / v_H` and the scaled cost `c * v_H` only.

use serde::{Deserialize, Serialize};

use crate::envelope::{self, recover_transfers, DEFAULT_ENVELOPE_GRID};
use crate::error::{Error, Result};
use crate::model::{
    Atom, MeanDistribution, ModelParams, Prior, QualityRule, Schedule, ScheduleRegime, Segment,
    SegmentKind, TransferRule,
};
use crate::pricing::{period2_price, TieBreak};
use crate::roots::{root_in_bracket, Ends};
use crate::surplus::{integrate_r, RFunction};

/// Tolerance for regime boundaries and root brackets.
pub const REGIME_TOL: f64 = 1e-12;

/// Tolerance of the closed-form versus envelope transfer comparison.
pub const TRANSFER_TOL: f64 = 1e-6;

/// Sub-cells per unit length used to discretize separating segments.
pub const DEFAULT_CELL_RESOLUTION: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    MuLeQuarter,
    MuQuarterToHalf,
    MuHalfToL,
    MuAboveL,
}

impl Regime {
    pub fn all() -> [Regime; 4] {
        [
            Regime::MuLeQuarter,
            Regime::MuQuarterToHalf,
            Regime::MuHalfToL,
            Regime::MuAboveL,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::MuLeQuarter => "MuLeQuarter",
            Regime::MuQuarterToHalf => "MuQuarterToHalf",
            Regime::MuHalfToL => "MuHalfToL",
            Regime::MuAboveL => "MuAboveL",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Types `[m_lo, m_hi]` pooled into a single cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PoolingInterval {
    pub m_lo: f64,
    pub m_hi: f64,
}

impl PoolingInterval {
    pub fn mean(&self) -> f64 {
        Prior.conditional_mean(self.m_lo, self.m_hi)
    }

    pub fn width(&self) -> f64 {
        self.m_hi - self.m_lo
    }
}

/// `l(c) = (2 + 3c) / (4 (1 + c))`, the upper edge of the low-pooling regime.
pub fn l_threshold(scaled_cost: f64) -> f64 {
    (2.0 + 3.0 * scaled_cost) / (4.0 * (1.0 + scaled_cost))
}

pub fn classify(params: &ModelParams) -> Regime {
    let mu = params.mu_bar();
    if mu <= 0.25 {
        Regime::MuLeQuarter
    } else if mu < 0.5 {
        Regime::MuQuarterToHalf
    } else if mu < l_threshold(params.scaled_cost()) {
        Regime::MuHalfToL
    } else {
        Regime::MuAboveL
    }
}

/// Coefficients of the quadratic whose root is the top `m*` of the pool when `1/2 <= mu_bar < l(c)`.
pub fn h1_coefficients(params: &ModelParams) -> [f64; 3] {
    let mu = params.mu_bar();
    let c = params.scaled_cost();
    [
        2.0 / c,
        2.0 * mu - 1.0 - 2.0 / c,
        -((4.0 * mu * mu - 4.0 * mu) / c + 1.0 / (2.0 * c) + 2.0 * mu - 1.0),
    ]
}

/// Coefficients of the quadratic whose root is the bottom `m_*` of the pool when `mu_bar >= l(c)`.
pub fn h2_coefficients(params: &ModelParams) -> [f64; 3] {
    let mu = params.mu_bar();
    let c = params.scaled_cost();
    let k = 2.0 * mu - 1.0;
    [
        4.0 / c,
        -(8.0 / c * mu + k),
        1.0 / c + k * k * (1.0 / c + 1.0) + 2.0 * k / c,
    ]
}

/// Coefficients of `4b^2 - (4 + 2ck) b + (1 - 2ck^2)` with `k = 1 - 2 mu_bar`.
///
/// Its larger root is the top of the zero-quality pool at mean `mu_bar`
/// when that pool is fed from above a low-price region `[0, 2 mu_bar - b)`.
pub fn low_pool_coefficients(params: &ModelParams) -> [f64; 3] {
    let c = params.scaled_cost();
    let k = 1.0 - 2.0 * params.mu_bar();
    [4.0, -(4.0 + 2.0 * c * k), 1.0 - 2.0 * c * k * k]
}

fn eval_quadratic(coeffs: [f64; 3], x: f64) -> f64 {
    (coeffs[0] * x + coeffs[1]) * x + coeffs[2]
}

pub fn h1(x: f64, params: &ModelParams) -> f64 {
    eval_quadratic(h1_coefficients(params), x)
}

pub fn h2(x: f64, params: &ModelParams) -> f64 {
    eval_quadratic(h2_coefficients(params), x)
}

/// Whether excluding `[0, 2 mu_bar)` at the high price is optimal for `1/4 < mu_bar < 1/2`.
///
/// Holds iff `(4 mu_bar - 1)^2 <= 2 c (1 - 2 mu_bar)` with `c` scaled; otherwise
/// the bottom types are better served at the low price.
pub fn exclusion_pool_is_optimal(params: &ModelParams) -> bool {
    let mu = params.mu_bar();
    let d = 4.0 * mu - 1.0;
    d * d <= 2.0 * params.scaled_cost() * (1.0 - 2.0 * mu) + REGIME_TOL
}

/// Top of the excluded pool, `m* = 2 mu_bar`, for `1/4 < mu_bar < 1/2`.
pub fn solve_m_star_low(params: &ModelParams) -> Result<f64> {
    match classify(params) {
        Regime::MuQuarterToHalf => Ok(2.0 * params.mu_bar()),
        r => Err(Error::Regime(format!(
            "mu_bar = {} is in {r}, not MuQuarterToHalf",
            params.mu_bar()
        ))),
    }
}

/// Zero-quality pool with mean `mu_bar` priced at `v_H`, for `1/4 < mu_bar < 1/2`.
///
/// Returns `[0, 2 mu_bar]` when [`exclusion_pool_is_optimal`] holds; otherwise
/// `[a, b]` where `b` is the larger root of [`low_pool_coefficients`] and
/// `a = 2 mu_bar - b > 0`, with types below `a` served at `v_L`.
pub fn solve_low_pooling_interval(params: &ModelParams) -> Result<PoolingInterval> {
    let mu = params.mu_bar();
    if !(0.25 - REGIME_TOL..=0.5 + REGIME_TOL).contains(&mu) {
        return Err(Error::Regime(format!(
            "mu_bar = {mu} is outside the low-pooling range (1/4, 1/2)"
        )));
    }
    low_pool_unchecked(params)
}

fn low_pool_unchecked(params: &ModelParams) -> Result<PoolingInterval> {
    let mu = params.mu_bar();
    if exclusion_pool_is_optimal(params) {
        return Ok(PoolingInterval {
            m_lo: 0.0,
            m_hi: 2.0 * mu,
        });
    }
    let b = root_in_bracket(
        "low-pool quadratic",
        low_pool_coefficients(params),
        0.5,
        2.0 * mu,
        Ends::Closed,
        1e-9,
    )?;
    Ok(PoolingInterval {
        m_lo: (2.0 * mu - b).max(0.0),
        m_hi: b,
    })
}

/// Pool `[m_*, m*]` with mean `mu_bar` and the low period-2 price, for `mu_bar >= 1/2`.
pub fn solve_pooling_interval(params: &ModelParams) -> Result<PoolingInterval> {
    match classify(params) {
        Regime::MuHalfToL => pool_from_h1(params),
        Regime::MuAboveL => pool_from_h2(params),
        r => Err(Error::Regime(format!(
            "mu_bar = {} is in {r}; pooling at the low price needs mu_bar >= 1/2",
            params.mu_bar()
        ))),
    }
}

fn degenerate_at_half(params: &ModelParams) -> Option<PoolingInterval> {
    let mu = params.mu_bar();
    ((mu - 0.5).abs() <= REGIME_TOL).then_some(PoolingInterval { m_lo: mu, m_hi: mu })
}

fn pool_from_h1(params: &ModelParams) -> Result<PoolingInterval> {
    if let Some(p) = degenerate_at_half(params) {
        return Ok(p);
    }
    let mu = params.mu_bar();
    let top = root_in_bracket("h1", h1_coefficients(params), mu, 1.0, Ends::OpenLow, REGIME_TOL)?;
    Ok(PoolingInterval {
        m_lo: 2.0 * mu - top,
        m_hi: top,
    })
}

fn pool_from_h2(params: &ModelParams) -> Result<PoolingInterval> {
    if let Some(p) = degenerate_at_half(params) {
        return Ok(p);
    }
    let mu = params.mu_bar();
    let bottom = root_in_bracket("h2", h2_coefficients(params), 0.5, mu, Ends::OpenHigh, 1e-9)?;
    Ok(PoolingInterval {
        m_lo: bottom,
        m_hi: 2.0 * mu - bottom,
    })
}

fn pooled(lo: f64, hi: f64, kind: SegmentKind, q: f64, transfer: f64, price2: f64) -> Segment {
    Segment {
        lo,
        hi,
        kind,
        quality: QualityRule::Const { value: q },
        transfer: TransferRule::Const { value: transfer },
        price2,
        cell_mean: Some(Prior.conditional_mean(lo, hi)),
    }
}

/// Separating segment with quality `(2 theta - 1)/c` and transfer `theta^2 / c + constant`.
fn separating(lo: f64, hi: f64, c: f64, constant: f64, price2: f64) -> Segment {
    Segment {
        lo,
        hi,
        kind: SegmentKind::Separating,
        quality: QualityRule::Affine {
            slope: 2.0 / c,
            intercept: -1.0 / c,
        },
        transfer: TransferRule::Quadratic {
            quad: 1.0 / c,
            lin: 0.0,
            constant,
        },
        price2,
        cell_mean: None,
    }
}

/// Pooling interval used by the schedule of `regime`; `None` when nothing is pooled.
pub fn regime_interval(params: &ModelParams, regime: Regime) -> Result<Option<PoolingInterval>> {
    Ok(match regime {
        Regime::MuLeQuarter => None,
        Regime::MuQuarterToHalf => Some(low_pool_unchecked(params)?),
        Regime::MuHalfToL => Some(pool_from_h1(params)?),
        Regime::MuAboveL => Some(pool_from_h2(params)?),
    })
}

/// Segments with closed-form transfers for a given regime.
fn closed_form_segments(params: &ModelParams, regime: Regime) -> Result<Vec<Segment>> {
    let (vl, vh, c) = (params.v_low(), params.v_high(), params.cost());
    let dv = params.delta_v();
    let mu = params.mu_bar();
    let q_pool = (2.0 * mu - 1.0) / c;
    let interval = regime_interval(params, regime)?;
    let segs = match (regime, interval) {
        (Regime::MuLeQuarter, _) => vec![
            pooled(0.0, 0.5, SegmentKind::Exclusion, 0.0, 0.0, vh),
            separating(0.5, 1.0, c, -0.25 / c, vh),
        ],
        (Regime::MuQuarterToHalf, Some(PoolingInterval { m_lo: a, m_hi: b })) => vec![
            pooled(0.0, a, SegmentKind::Exclusion, 0.0, 0.0, vl),
            pooled(
                a,
                b,
                if a > 0.0 {
                    SegmentKind::Pooling
                } else {
                    SegmentKind::Exclusion
                },
                0.0,
                -dv * a,
                vh,
            ),
            separating(b, 1.0, c, -b * (1.0 - b) / c - dv * a, vh),
        ],
        (Regime::MuHalfToL, Some(PoolingInterval { m_lo: lo, m_hi: hi })) => vec![
            pooled(0.0, lo, SegmentKind::Exclusion, 0.0, 0.0, vl),
            pooled(lo, hi, SegmentKind::Pooling, q_pool, lo * q_pool, vl),
            separating(
                hi,
                1.0,
                c,
                (hi * hi - 2.0 * mu * hi) / c + q_pool * lo - dv * hi,
                vh,
            ),
        ],
        (Regime::MuAboveL, Some(PoolingInterval { m_lo: lo, m_hi: hi })) => {
            let tail = (lo - 0.5) * (lo - 0.5) / c;
            vec![
                pooled(0.0, 0.5, SegmentKind::Exclusion, 0.0, 0.0, vl),
                separating(0.5, lo, c, -0.25 / c, vl),
                pooled(lo, hi, SegmentKind::Pooling, q_pool, q_pool * lo - tail, vl),
                separating(
                    hi,
                    1.0,
                    c,
                    (hi * hi - 2.0 * mu * hi) / c - dv * hi + q_pool * lo - tail,
                    vh,
                ),
            ]
        }
        (r, None) => return Err(Error::Regime(format!("{r} has no pooling interval"))),
    };
    Ok(segs)
}

/// Optimal limited-commitment schedule for the regime `params` falls in.
pub fn limited_schedule(params: &ModelParams) -> Result<Schedule> {
    limited_schedule_in_regime(params, classify(params))
}

/// Schedule built from the formulas of `regime`, whether or not `params` lies in it.
///
/// Used to compare the two candidate schedules at a regime boundary.
pub fn limited_schedule_in_regime(params: &ModelParams, regime: Regime) -> Result<Schedule> {
    let segments = closed_form_segments(params, regime)?;
    let schedule = Schedule::new(
        ScheduleRegime::Limited,
        *params,
        TieBreak::firm_preferred(params),
        segments,
    )?;
    check_envelope_consistency(&schedule)?;
    Ok(schedule)
}

/// Recomputes the closed-form transfers of a limited-commitment schedule and
/// checks them against the envelope integral on a 10 001-point grid.
pub fn limited_transfers(schedule: &Schedule) -> Result<Schedule> {
    let params = schedule.params;
    let fresh = Schedule::new(
        ScheduleRegime::Limited,
        params,
        schedule.tie,
        closed_form_segments(&params, classify(&params))?,
    )?;
    if fresh.layout().len() != schedule.segments.len()
        || fresh
            .segments
            .iter()
            .zip(&schedule.segments)
            .any(|(a, b)| (a.lo - b.lo).abs() > 1e-9 || (a.hi - b.hi).abs() > 1e-9)
    {
        return Err(Error::Schedule(
            "layout differs from the limited-commitment solution".into(),
        ));
    }
    let mut out = schedule.clone();
    for (dst, src) in out.segments.iter_mut().zip(&fresh.segments) {
        dst.transfer = src.transfer;
    }
    check_envelope_consistency(&out)?;
    Ok(out)
}

/// Largest gap between the schedule's transfers and the envelope-implied ones,
/// both exact and by trapezoidal integration.
fn check_envelope_consistency(schedule: &Schedule) -> Result<()> {
    let exact = recover_transfers(schedule.clone());
    for (theta, x_num) in envelope::transfers_trapezoid(schedule, DEFAULT_ENVELOPE_GRID) {
        let x = schedule.transfer(theta);
        let gap = (x - exact.transfer(theta)).abs().max((x - x_num).abs());
        if gap > TRANSFER_TOL {
            return Err(Error::Consistency { theta, gap });
        }
    }
    Ok(())
}

/// `U'(theta) = q(theta) + dv * 1{price = v_L}`.
pub fn u_prime(theta: f64, schedule: &Schedule) -> f64 {
    envelope::marginal_utility(theta, schedule)
}

/// Whether the envelope utility of a schedule has nondecreasing slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MonotonicityReport {
    pub regime: Regime,
    /// Closed-form verdict for the regime.
    pub analytic_ok: bool,
    /// `U'` nondecreasing on the check grid up to 1e-9.
    pub numeric_ok: bool,
    /// Largest decrease of `U'` between neighbouring grid points.
    pub worst_drop: f64,
    /// Grid interval where `worst_drop` occurs.
    pub worst_at: Option<(f64, f64)>,
    /// `mu_bar >= (1 + c)/(2 + c)`; necessary for monotonicity above `l(c)`.
    pub necessary_condition: Option<bool>,
    /// `mu_bar >= (2 + c)/4`; equivalent to `m* >= mu_bar + c dv / 2` above `l(c)`.
    pub exact_condition: Option<bool>,
    /// Schedule solves only the relaxed problem (some global IC constraint fails).
    pub relaxed_only: bool,
}

impl MonotonicityReport {
    pub fn conditions_disagree(&self) -> bool {
        matches!((self.necessary_condition, self.exact_condition), (Some(a), Some(b)) if a != b)
    }
}

/// `mu_bar >= (1 + c)/(2 + c)` with scaled cost.
pub fn necessary_monotonicity_condition(params: &ModelParams) -> bool {
    let c = params.scaled_cost();
    params.mu_bar() >= (1.0 + c) / (2.0 + c) - REGIME_TOL
}

/// `mu_bar >= (2 + c)/4` with scaled cost.
pub fn exact_monotonicity_condition(params: &ModelParams) -> bool {
    params.mu_bar() >= (2.0 + params.scaled_cost()) / 4.0 - REGIME_TOL
}

pub fn monotonicity_check(params: &ModelParams) -> Result<MonotonicityReport> {
    monotonicity_check_on_grid(params, DEFAULT_ENVELOPE_GRID)
}

pub fn monotonicity_check_on_grid(params: &ModelParams, n: usize) -> Result<MonotonicityReport> {
    let regime = classify(params);
    let schedule = limited_schedule(params)?;
    let (numeric_ok, worst_drop, worst_at) = slope_scan(&schedule, n);
    let in_above = regime == Regime::MuAboveL;
    let necessary_condition = in_above.then(|| necessary_monotonicity_condition(params));
    let exact_condition = in_above.then(|| exact_monotonicity_condition(params));
    let analytic_ok = match regime {
        Regime::MuLeQuarter => true,
        Regime::MuQuarterToHalf => exclusion_pool_is_optimal(params),
        Regime::MuHalfToL => false,
        Regime::MuAboveL => exact_monotonicity_condition(params),
    };
    Ok(MonotonicityReport {
        regime,
        analytic_ok,
        numeric_ok,
        worst_drop,
        worst_at,
        necessary_condition,
        exact_condition,
        relaxed_only: !numeric_ok,
    })
}

/// Scans `U'` on a uniform grid; returns `(ok, worst drop, where)`.
pub fn slope_scan(schedule: &Schedule, n: usize) -> (bool, f64, Option<(f64, f64)>) {
    let n = n.max(2);
    let h = 1.0 / (n - 1) as f64;
    let mut worst = 0.0;
    let mut at = None;
    let mut prev = u_prime(0.0, schedule);
    for i in 1..n {
        let t = i as f64 * h;
        let cur = u_prime(t, schedule);
        if prev - cur > worst {
            worst = prev - cur;
            at = Some((t - h, t));
        }
        prev = cur;
    }
    (worst <= 1e-9, worst, at)
}

/// Splits `[lo, hi]` into `ceil((hi - lo) * resolution)` equal sub-cells.
pub fn subcells(lo: f64, hi: f64, resolution: usize) -> Vec<(f64, f64)> {
    let n = (((hi - lo) * resolution as f64).ceil() as usize).max(1);
    let h = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let a = lo + i as f64 * h;
            let b = if i + 1 == n { hi } else { a + h };
            (a, b)
        })
        .collect()
}

/// Distribution of posterior means generated by a schedule.
///
/// Pooled segments contribute one atom at their cell mean. Separating segments
/// are cut into sub-cells of width about `1/resolution`, each pooled to its
/// midpoint, which keeps the result Bayes plausible.
pub fn induced_distribution(schedule: &Schedule, resolution: usize) -> Result<MeanDistribution> {
    let mut atoms = Vec::new();
    for seg in &schedule.segments {
        match seg.cell_mean {
            Some(m) => atoms.push(Atom { m, g: seg.width() }),
            None => atoms.extend(subcells(seg.lo, seg.hi, resolution).into_iter().map(|(a, b)| Atom {
                m: Prior.conditional_mean(a, b),
                g: b - a,
            })),
        }
    }
    MeanDistribution::new(atoms)
}

/// Exact revenue `sum_cells len * R(mean) + int R` of a sequentially rational schedule.
pub fn schedule_revenue(schedule: &Schedule) -> Result<f64> {
    let rf = RFunction::new(schedule.params);
    schedule
        .segments
        .iter()
        .map(|s| match s.cell_mean {
            Some(m) => Ok(s.width() * rf.eval(m, schedule.tie)?),
            None => Ok(integrate_r(s.lo, s.hi, &schedule.params)),
        })
        .sum()
}

/// Two-period revenue of the optimal limited-commitment schedule.
pub fn limited_revenue(params: &ModelParams) -> Result<f64> {
    schedule_revenue(&limited_schedule(params)?)
}

/// Revenue of the schedules from both sides of a regime boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundaryDiagnostic {
    pub below: Regime,
    pub above: Regime,
    pub revenue_below: f64,
    pub revenue_above: f64,
}

/// When `mu_bar` lies within `tol` of a regime boundary, solves both adjacent regimes.
pub fn boundary_diagnostic(params: &ModelParams, tol: f64) -> Result<Option<BoundaryDiagnostic>> {
    let mu = params.mu_bar();
    let edges = [
        (0.25, Regime::MuLeQuarter, Regime::MuQuarterToHalf),
        (0.5, Regime::MuQuarterToHalf, Regime::MuHalfToL),
        (
            l_threshold(params.scaled_cost()),
            Regime::MuHalfToL,
            Regime::MuAboveL,
        ),
    ];
    for (edge, below, above) in edges {
        if (mu - edge).abs() <= tol {
            return Ok(Some(BoundaryDiagnostic {
                below,
                above,
                revenue_below: schedule_revenue(&limited_schedule_in_regime(params, below)?)?,
                revenue_above: schedule_revenue(&limited_schedule_in_regime(params, above)?)?,
            }));
        }
    }
    Ok(None)
}

/// Period-2 price each type faces under sequential rationality, given its cell.
pub fn sequential_price(schedule: &Schedule, theta: f64) -> Result<f64> {
    let seg = schedule.segment_at(theta);
    period2_price(seg.cell_mean.unwrap_or(theta), &schedule.params, schedule.tie)
}

/// Re-prices every cell at its sequentially rational price under `tie` and
/// recomputes transfers from the envelope condition.
///
/// Only cells whose mean is exactly `mu_bar` can change price.
pub fn reprice(schedule: &Schedule, tie: TieBreak) -> Result<Schedule> {
    let mut out = schedule.clone();
    out.tie = tie;
    for seg in out.segments.iter_mut() {
        let probe = seg.cell_mean.unwrap_or(0.5 * (seg.lo + seg.hi));
        seg.price2 = period2_price(probe, &schedule.params, tie)?;
    }
    let out = Schedule::new(out.regime, out.params, out.tie, out.segments)?;
    Ok(recover_transfers(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitment::{commitment_revenue, commitment_schedule};
    use approx::assert_abs_diff_eq;

    fn params(vl: f64, c: f64) -> ModelParams {
        ModelParams::new(vl, 1.0, c).unwrap()
    }

    // Cell revenue written out directly, v_H = 1.
    fn r_oracle(m: f64, mu: f64, c: f64, low: bool) -> f64 {
        let p1 = (2.0 * m - 1.0).max(0.0).powi(2) / (2.0 * c);
        let p2 = if low { 2.0 * m * (1.0 - mu) + 2.0 * mu - 1.0 } else { m };
        p1 + p2
    }

    fn r_sep(m: f64, mu: f64, c: f64) -> f64 {
        r_oracle(m, mu, c, m < mu)
    }

    // Pool [2 mu - h, h] at mean mu is optimal within its family when the pool
    // value equals the average of R at its two ends.
    fn chord_gap(h: f64, mu: f64, c: f64) -> f64 {
        let at_mu = r_oracle(mu, mu, c, true).max(r_oracle(mu, mu, c, false));
        r_sep(2.0 * mu - h, mu, c) + r_sep(h, mu, c) - 2.0 * at_mu
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        assert!(f(lo) * f(hi) <= 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    // First sign change of the chord condition above mu, refined by bisection.
    fn chord_oracle(mu: f64, c: f64, top: f64) -> f64 {
        let n = 10_000;
        let start = mu + 1e-9;
        let step = (top - start) / n as f64;
        let mut prev = start;
        for i in 1..=n {
            let x = start + step * i as f64;
            if chord_gap(prev, mu, c) * chord_gap(x, mu, c) <= 0.0 {
                return bisect(|h| chord_gap(h, mu, c), prev, x);
            }
            prev = x;
        }
        panic!("no chord root for mu {mu}, c {c}");
    }

    #[test]
    fn pooling_interval_at_reference_point() {
        let p = params(0.75, 2.0);
        assert_eq!(classify(&p), Regime::MuAboveL);
        let iv = solve_pooling_interval(&p).unwrap();
        assert_abs_diff_eq!(iv.m_lo, 0.5954915028125263, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.m_hi, 0.9045084971874737, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.mean(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(l_threshold(2.0), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn pool_top_solves_width_quadratic() {
        // 4w^2/c + (2mu - 1)w - (2mu - 1)(1 - mu) = 0 with w = m* - mu.
        for (mu, c) in [(0.75, 2.0), (0.9, 1.0), (0.6, 0.5), (0.8, 0.3)] {
            let p = params(mu, c);
            assert_eq!(classify(&p), Regime::MuAboveL);
            let w = solve_pooling_interval(&p).unwrap().m_hi - mu;
            let k = 2.0 * mu - 1.0;
            assert_abs_diff_eq!(4.0 * w * w / c + k * w - k * (1.0 - mu), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pooling_interval_matches_chord_oracle() {
        for (mu, c) in [(0.75, 2.0), (0.9, 1.0), (0.6, 0.5), (0.55, 1.0), (0.55, 2.0), (0.6, 1.0), (0.52, 0.3)] {
            let p = params(mu, c);
            let iv = solve_pooling_interval(&p).unwrap();
            let oracle = chord_oracle(mu, c, 1.0);
            assert_abs_diff_eq!(iv.m_hi, oracle, epsilon = 1e-9);
            let residual = match classify(&p) {
                Regime::MuHalfToL => h1(iv.m_hi, &p),
                _ => h2(iv.m_lo, &p),
            };
            assert_abs_diff_eq!(residual, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn low_pool_matches_chord_oracle() {
        // Exclusion pool [0, 2 mu_bar) when it is optimal.
        let p = params(0.35, 1.0);
        assert!(exclusion_pool_is_optimal(&p));
        assert_eq!(solve_m_star_low(&p).unwrap(), 0.7);
        assert_eq!(solve_low_pooling_interval(&p).unwrap(), PoolingInterval { m_lo: 0.0, m_hi: 0.7 });

        let p = params(0.45, 2.0);
        assert!(!exclusion_pool_is_optimal(&p));
        let iv = solve_low_pooling_interval(&p).unwrap();
        assert_abs_diff_eq!(iv.m_lo, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.m_hi, 0.8, epsilon = 1e-12);
        for (mu, c) in [(0.45, 2.0), (0.45, 0.5), (0.4, 0.5), (0.3, 0.5)] {
            let p = params(mu, c);
            let iv = solve_low_pooling_interval(&p).unwrap();
            if iv.m_lo > 0.0 {
                assert_abs_diff_eq!(iv.m_hi, chord_oracle(mu, c, 2.0 * mu), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn regime_classification() {
        assert_eq!(classify(&params(0.2, 1.0)), Regime::MuLeQuarter);
        assert_eq!(classify(&params(0.25, 1.0)), Regime::MuLeQuarter);
        assert_eq!(classify(&params(0.3, 1.0)), Regime::MuQuarterToHalf);
        assert_eq!(classify(&params(0.5, 1.0)), Regime::MuHalfToL);
        assert_eq!(classify(&params(0.6, 1.0)), Regime::MuHalfToL);
        assert_eq!(classify(&params(0.625, 1.0)), Regime::MuAboveL);
        assert!(solve_pooling_interval(&params(0.3, 1.0)).is_err());
        assert!(solve_m_star_low(&params(0.6, 1.0)).is_err());
        let half = solve_pooling_interval(&params(0.5, 1.0)).unwrap();
        assert_eq!(half.width(), 0.0);
    }

    #[test]
    fn homogeneous_in_values() {
        let a = ModelParams::new(0.75, 1.0, 2.0).unwrap();
        let b = ModelParams::new(1.5, 2.0, 1.0).unwrap();
        assert_eq!(classify(&a), classify(&b));
        assert_abs_diff_eq!(
            solve_pooling_interval(&a).unwrap().m_hi,
            solve_pooling_interval(&b).unwrap().m_hi,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(2.0 * limited_revenue(&a).unwrap(), limited_revenue(&b).unwrap(), epsilon = 1e-12);
    }

    // Revenue of a pool [2 mu - h, h] with R followed elsewhere, by Gauss quadrature.
    fn revenue_oracle(mu: f64, c: f64, lo: f64, h: f64) -> f64 {
        let gauss = |a: f64, b: f64| {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let x = 0.6_f64.sqrt();
            half * (5.0 * r_sep(mid - half * x, mu, c) + 8.0 * r_sep(mid, mu, c) + 5.0 * r_sep(mid + half * x, mu, c)) / 9.0
        };
        let piecewise = |a: f64, b: f64| {
            let mut cuts = vec![a, b];
            cuts.extend([0.5, mu].iter().filter(|&&k| k > a && k < b));
            cuts.sort_by(f64::total_cmp);
            cuts.windows(2).map(|w| gauss(w[0], w[1])).sum::<f64>()
        };
        let at_mu = r_oracle(mu, mu, c, true).max(r_oracle(mu, mu, c, false));
        piecewise(0.0, lo) + (h - lo) * at_mu + piecewise(h, 1.0)
    }

    #[test]
    fn revenue_matches_quadrature_oracle() {
        assert_abs_diff_eq!(limited_revenue(&params(0.75, 2.0)).unwrap(), 0.786927968457, epsilon = 1e-11);
        for (mu, c) in [(0.75, 2.0), (0.9, 1.0), (0.55, 1.0), (0.6, 0.5), (0.35, 1.0), (0.45, 2.0), (0.45, 0.5)] {
            let p = params(mu, c);
            let iv = regime_interval(&p, classify(&p)).unwrap().unwrap();
            let oracle = revenue_oracle(mu, c, iv.m_lo, iv.m_hi);
            assert_abs_diff_eq!(limited_revenue(&p).unwrap(), oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn low_mu_bar_matches_commitment() {
        for (mu, c) in [(0.2, 1.0), (0.1, 0.5), (0.25, 2.0)] {
            let p = params(mu, c);
            let lim = limited_schedule(&p).unwrap();
            let com = commitment_schedule(&p).unwrap();
            for i in 0..=1000 {
                let t = i as f64 / 1000.0;
                assert_eq!(lim.quality(t), com.quality(t));
                assert_eq!(lim.price2(t), com.price2(t));
            }
            assert_abs_diff_eq!(limited_revenue(&p).unwrap(), commitment_revenue(&p), epsilon = 1e-12);
        }
    }

    #[test]
    fn schedule_layout_at_reference_point() {
        let s = limited_schedule(&params(0.75, 2.0)).unwrap();
        let kinds: Vec<SegmentKind> = s.segments.iter().map(|g| g.kind).collect();
        assert_eq!(
            kinds,
            vec![
                SegmentKind::Exclusion,
                SegmentKind::Separating,
                SegmentKind::Pooling,
                SegmentKind::Separating
            ]
        );
        assert_abs_diff_eq!(s.quality(0.75), 0.25, epsilon = 1e-15);
        assert_eq!(s.price2(0.95), 1.0);
        assert_eq!(s.price2(0.7), 0.75);
        assert_eq!(s.transfer(0.0), 0.0);
    }

    #[test]
    fn transfers_are_envelope_consistent() {
        for (mu, c) in [(0.2, 1.0), (0.35, 1.0), (0.45, 2.0), (0.55, 1.0), (0.75, 2.0), (0.9, 0.5)] {
            let s = limited_schedule(&params(mu, c)).unwrap();
            let exact = recover_transfers(s.clone());
            for i in 0..=200 {
                let t = i as f64 / 200.0;
                assert_abs_diff_eq!(s.transfer(t), exact.transfer(t), epsilon = 1e-12);
            }
            limited_transfers(&s).unwrap();
        }
    }

    #[test]
    fn monotonicity_verdicts() {
        let m = monotonicity_check(&params(0.75, 2.0)).unwrap();
        assert!(!m.analytic_ok && !m.numeric_ok);
        assert_eq!(m.necessary_condition, Some(true));
        assert_eq!(m.exact_condition, Some(false));
        assert!(m.conditions_disagree());
        // The drop sits at m*, where U' falls from q_p + dv to (2m* - 1)/c.
        let (a, b) = m.worst_at.unwrap();
        assert!(a <= 0.9045085 && 0.9045085 <= b + 1e-4);
        // The scan sees the post-jump slope one grid step later, so it can undershoot by 2h/c.
        let jump = 0.25 + 0.25 - (2.0 * 0.9045084971874737 - 1.0) / 2.0;
        assert!(m.worst_drop <= jump + 1e-12 && m.worst_drop >= jump - 1e-4);

        let m = monotonicity_check(&params(0.9, 1.0)).unwrap();
        assert!(m.analytic_ok && m.numeric_ok && !m.conditions_disagree());

        let m = monotonicity_check(&params(0.55, 1.0)).unwrap();
        assert!(!m.analytic_ok && !m.numeric_ok && m.relaxed_only);

        for mu in [0.2, 0.35] {
            let m = monotonicity_check(&params(mu, 1.0)).unwrap();
            assert!(m.analytic_ok && m.numeric_ok);
        }
    }

    #[test]
    fn induced_distribution_is_bayes_plausible() {
        let s = limited_schedule(&params(0.75, 2.0)).unwrap();
        let g = induced_distribution(&s, 256).unwrap();
        assert_abs_diff_eq!(g.mean(), 0.5, epsilon = 1e-12);
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!(g.call_value(t) <= Prior.call_value(t) + 1e-12);
        }
    }

    #[test]
    fn reprice_changes_only_cells_at_mu_bar() {
        let s = limited_schedule(&params(0.75, 2.0)).unwrap();
        let r = reprice(&s, TieBreak::FavorHigh).unwrap();
        assert_eq!(r.price2(0.75), 1.0);
        assert_eq!(r.price2(0.55), 0.75);
        assert!(schedule_revenue(&r).unwrap() < schedule_revenue(&s).unwrap());
    }

    #[test]
    fn boundary_diagnostic_near_l() {
        let c = 1.0;
        let p = params(l_threshold(c), c);
        let d = boundary_diagnostic(&p, 1e-9).unwrap().unwrap();
        assert_eq!((d.below, d.above), (Regime::MuHalfToL, Regime::MuAboveL));
        assert!(boundary_diagnostic(&params(0.7, 1.0), 1e-9).unwrap().is_none());
    }

    #[test]
    fn subcells_cover_interval() {
        let cells = subcells(0.5, 0.6, 4096);
        assert_eq!(cells.len(), 410);
        assert_eq!(cells[0].0, 0.5);
        assert_eq!(cells.last().unwrap().1, 0.6);
    }
}
