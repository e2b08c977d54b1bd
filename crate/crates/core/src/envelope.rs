//! Transfers from the envelope condition `U'(theta) = q(theta) + dv * 1{price = v_L}`, `U(0) = 0`.

use crate::model::{QualityRule, Schedule, Segment, TransferRule};

/// Grid used by the numeric envelope integration.
pub const DEFAULT_ENVELOPE_GRID: usize = 10_001;

fn low_bonus(seg: &Segment, v_low: f64, dv: f64) -> f64 {
    if seg.price2 == v_low {
        dv
    } else {
        0.0
    }
}

/// `U'(theta)`: the slope of equilibrium utility under truthful reporting.
pub fn marginal_utility(theta: f64, schedule: &Schedule) -> f64 {
    let seg = schedule.segment_at(theta);
    seg.quality.eval(theta) + low_bonus(seg, schedule.params.v_low(), schedule.params.delta_v())
}

/// Two-period utility of type `theta` when it reports `report`.
pub fn consumer_utility(theta: f64, report: f64, schedule: &Schedule) -> f64 {
    let seg = schedule.segment_at(report);
    let q = seg.quality.eval(report);
    theta * q - seg.transfer.eval(report)
        + theta * low_bonus(seg, schedule.params.v_low(), schedule.params.delta_v())
}

/// Replaces every transfer by the one implied by the envelope condition.
///
/// Quality is constant or affine on each segment, so `U` is piecewise
/// quadratic and the integration is exact.
pub fn recover_transfers(mut schedule: Schedule) -> Schedule {
    let (vl, dv) = (schedule.params.v_low(), schedule.params.delta_v());
    let mut u_lo = 0.0;
    for seg in schedule.segments.iter_mut() {
        let bonus = low_bonus(seg, vl, dv);
        let lo = seg.lo;
        match seg.quality {
            QualityRule::Const { value } => {
                let k = value + bonus;
                seg.transfer = TransferRule::Const {
                    value: k * lo - u_lo,
                };
                u_lo += k * seg.width();
            }
            QualityRule::Affine { slope, intercept } => {
                let k = intercept + bonus;
                let constant = 0.5 * slope * lo * lo + k * lo - u_lo;
                seg.transfer = TransferRule::Quadratic {
                    quad: 0.5 * slope,
                    lin: 0.0,
                    constant,
                };
                let hi = seg.hi;
                u_lo += 0.5 * slope * (hi * hi - lo * lo) + k * (hi - lo);
            }
        }
    }
    schedule
}

/// `U` on a uniform grid of `n` points by trapezoidal integration of `U'`.
///
/// Segment endpoints are added to the grid and `U'` is taken as a one-sided
/// limit there, so jumps in `U'` do not smear.
pub fn utility_trapezoid(schedule: &Schedule, n: usize) -> Vec<(f64, f64)> {
    let (vl, dv) = (schedule.params.v_low(), schedule.params.delta_v());
    let n = n.max(2);
    let h = 1.0 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n);
    let mut u = 0.0;
    let mut i = 0usize;
    for seg in &schedule.segments {
        let slope = |t: f64| seg.quality.eval(t) + low_bonus(seg, vl, dv);
        let mut prev = seg.lo;
        let mut prev_slope = slope(prev);
        while i < n {
            let t = i as f64 * h;
            let inside = t < seg.hi || std::ptr::eq(seg, schedule.segments.last().unwrap());
            if !inside {
                break;
            }
            let s = slope(t);
            u += 0.5 * (prev_slope + s) * (t - prev);
            out.push((t, u));
            prev = t;
            prev_slope = s;
            i += 1;
        }
        let s = slope(seg.hi);
        u += 0.5 * (prev_slope + s) * (seg.hi - prev);
    }
    out
}

/// Transfers on a uniform grid implied by [`utility_trapezoid`].
pub fn transfers_trapezoid(schedule: &Schedule, n: usize) -> Vec<(f64, f64)> {
    let (vl, dv) = (schedule.params.v_low(), schedule.params.delta_v());
    utility_trapezoid(schedule, n)
        .into_iter()
        .map(|(t, u)| {
            let seg = schedule.segment_at(t);
            (t, t * seg.quality.eval(t) + t * low_bonus(seg, vl, dv) - u)
        })
        .collect()
}
