//! Independent checks of a schedule: incentive compatibility, participation,
//! Bayes plausibility, sequential rationality and revenue accounting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commitment::{commitment_revenue, first_best_surplus};
use crate::envelope::{self, DEFAULT_ENVELOPE_GRID};
use crate::error::Result;
use crate::limited_commitment::{induced_distribution, slope_scan, DEFAULT_CELL_RESOLUTION};
use crate::model::{MeanDistribution, QualityRule, Schedule, ScheduleRegime};
use crate::oracle::{check_convex_order, test_points, ConvexOrderReport};
use crate::pricing::period2_price;
use crate::surplus::{revenue_of_distribution, RFunction};

pub use crate::envelope::consumer_utility;

/// Default type and report grid for the IC check.
pub const DEFAULT_IC_GRID: usize = 2001;

/// Test points for Bayes plausibility.
pub const BP_TEST_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IcReport {
    /// `max_{theta, r} u(theta, r) - u(theta, theta)`, at least 0.
    pub max_violation: f64,
    pub worst_type: f64,
    pub worst_report: f64,
}

/// Largest gain from misreporting over a `n_types x n_reports` grid.
pub fn ic_check(schedule: &Schedule, n_types: usize, n_reports: usize) -> IcReport {
    let (vl, dv) = (schedule.params.v_low(), schedule.params.delta_v());
    let reports: Vec<(f64, f64, f64)> = test_points(n_reports.max(2))
        .into_iter()
        .map(|r| {
            let seg = schedule.segment_at(r);
            let slope = seg.quality.eval(r) + if seg.price2 == vl { dv } else { 0.0 };
            (r, slope, seg.transfer.eval(r))
        })
        .collect();
    let types = test_points(n_types.max(2));
    let (max_violation, worst_type, worst_report) = types
        .par_iter()
        .map(|&theta| {
            let truthful = consumer_utility(theta, theta, schedule);
            let mut best = (0.0, theta, theta);
            for &(r, slope, x) in &reports {
                let gain = theta * slope - x - truthful;
                if gain > best.0 {
                    best = (gain, theta, r);
                }
            }
            best
        })
        .reduce(
            || (0.0, 0.0, 0.0),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    IcReport {
        max_violation,
        worst_type,
        worst_report,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IrReport {
    pub min_utility: f64,
    pub worst_type: f64,
    pub utility_at_zero: f64,
}

impl IrReport {
    /// `max(0, -min U)`.
    pub fn violation(&self) -> f64 {
        (-self.min_utility).max(0.0)
    }
}

/// Minimum truthful utility over a uniform grid of `n` types.
pub fn ir_check(schedule: &Schedule, n: usize) -> IrReport {
    let mut report = IrReport {
        min_utility: f64::INFINITY,
        worst_type: 0.0,
        utility_at_zero: consumer_utility(0.0, 0.0, schedule),
    };
    for theta in test_points(n.max(2)) {
        let u = consumer_utility(theta, theta, schedule);
        if u < report.min_utility {
            report.min_utility = u;
            report.worst_type = theta;
        }
    }
    report
}

/// Part of a segment whose period-2 price differs from the optimal one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OffendingCell {
    pub segment: usize,
    pub lo: f64,
    pub hi: f64,
    pub price: f64,
    pub optimal: f64,
}

/// Checks each cell's period-2 price against the optimal price at its posterior mean.
///
/// Pooled cells use their conditional mean; on separating segments each type
/// is its own cell, and the offending sub-interval is reported.
pub fn sequential_rationality_check(schedule: &Schedule) -> Result<Vec<OffendingCell>> {
    let params = &schedule.params;
    let tie = schedule.tie;
    let mu = params.mu_bar();
    let mut out = Vec::new();
    for (i, seg) in schedule.segments.iter().enumerate() {
        match seg.cell_mean {
            Some(m) => {
                let optimal = period2_price(m, params, tie)?;
                if optimal != seg.price2 {
                    out.push(OffendingCell {
                        segment: i,
                        lo: seg.lo,
                        hi: seg.hi,
                        price: seg.price2,
                        optimal,
                    });
                }
            }
            None => {
                // Optimal price is v_L below mu_bar and v_H above; test each side.
                let pieces = [(seg.lo, seg.hi.min(mu)), (seg.lo.max(mu), seg.hi)];
                for (lo, hi) in pieces {
                    if hi < lo {
                        continue;
                    }
                    let probe = if hi > lo { 0.5 * (lo + hi) } else { lo };
                    let optimal = period2_price(probe.clamp(0.0, 1.0), params, tie)?;
                    if optimal != seg.price2 && (hi > lo || seg.contains(lo)) {
                        out.push(OffendingCell {
                            segment: i,
                            lo,
                            hi,
                            price: seg.price2,
                            optimal,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Bayes plausibility on 1001 test points with tolerance `1e-9`.
pub fn bayes_plausibility_check(g: &MeanDistribution) -> ConvexOrderReport {
    check_convex_order(g, &test_points(BP_TEST_POINTS), 1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RevenueCheck {
    /// `int (x - c q^2/2 + period-2 revenue) dtheta`.
    pub from_transfers: f64,
    /// Model revenue: `E_G[R]` for limited commitment, the closed form otherwise.
    pub reference: f64,
    pub gap: f64,
}

/// Firm revenue computed from the schedule's own transfers and prices.
pub fn revenue_from_transfers(schedule: &Schedule) -> f64 {
    let p = &schedule.params;
    let c = p.cost();
    schedule
        .segments
        .iter()
        .map(|s| {
            let (lo, hi) = (s.lo, s.hi);
            let transfers = s.transfer.integral(lo, hi);
            let cost = match s.quality {
                QualityRule::Const { value } => 0.5 * c * value * value * (hi - lo),
                QualityRule::Affine { slope, intercept } => {
                    let cube = |t: f64| (slope * t + intercept).powi(3);
                    if slope == 0.0 {
                        0.5 * c * intercept * intercept * (hi - lo)
                    } else {
                        0.5 * c * (cube(hi) - cube(lo)) / (3.0 * slope)
                    }
                }
            };
            let period2 = if s.price2 == p.v_low() {
                p.v_low() * (hi - lo)
            } else {
                0.5 * p.v_high() * (hi * hi - lo * lo)
            };
            transfers - cost + period2
        })
        .sum()
}

pub fn revenue_consistency(schedule: &Schedule) -> Result<RevenueCheck> {
    let from_transfers = revenue_from_transfers(schedule);
    let reference = match schedule.regime {
        ScheduleRegime::Limited => {
            let g = induced_distribution(schedule, DEFAULT_CELL_RESOLUTION)?;
            revenue_of_distribution(&g, &RFunction::new(schedule.params), schedule.tie)?
        }
        ScheduleRegime::Commitment => commitment_revenue(&schedule.params),
        ScheduleRegime::FirstBest => first_best_surplus(&schedule.params),
    };
    Ok(RevenueCheck {
        from_transfers,
        reference,
        gap: (from_transfers - reference).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyOptions {
    pub types: usize,
    pub reports: usize,
    pub ic_tol: f64,
    /// Check sequential rationality; on by default for limited commitment only.
    pub check_seq_rat: Option<bool>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            types: DEFAULT_IC_GRID,
            reports: DEFAULT_IC_GRID,
            ic_tol: 1e-6,
            check_seq_rat: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridSizes {
    pub types: usize,
    pub reports: usize,
    pub envelope: usize,
    pub bayes_plausibility: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub regime: ScheduleRegime,
    /// `None` for the full-information benchmark, where IC does not apply.
    pub ic_violation: Option<f64>,
    pub ic_worst: Option<(f64, f64)>,
    pub ir_violation: f64,
    pub utility_at_zero: f64,
    pub bp_ok: bool,
    pub bp: ConvexOrderReport,
    pub seq_rat_ok: Option<bool>,
    pub seq_rat_offending: Vec<OffendingCell>,
    pub monotone: bool,
    pub worst_drop: f64,
    pub revenue: RevenueCheck,
    pub revenue_gap: f64,
    pub grid_sizes: GridSizes,
    pub passed: bool,
}

/// Runs every check on `schedule`.
pub fn verify(schedule: &Schedule, opts: &VerifyOptions) -> Result<VerificationReport> {
    let first_best = schedule.regime == ScheduleRegime::FirstBest;
    let ic = (!first_best).then(|| ic_check(schedule, opts.types, opts.reports));
    let ir = ir_check(schedule, opts.types);
    let g = induced_distribution(schedule, DEFAULT_CELL_RESOLUTION)?;
    let bp = bayes_plausibility_check(&g);
    let check_seq = opts
        .check_seq_rat
        .unwrap_or(schedule.regime == ScheduleRegime::Limited);
    let offending = if check_seq {
        sequential_rationality_check(schedule)?
    } else {
        Vec::new()
    };
    let seq_rat_ok = check_seq.then_some(offending.is_empty());
    let (monotone, worst_drop, _) = slope_scan(schedule, DEFAULT_ENVELOPE_GRID);
    let revenue = revenue_consistency(schedule)?;
    let utility_at_zero = ir.utility_at_zero;
    let passed = ic.is_none_or(|r| r.max_violation <= opts.ic_tol)
        && ir.violation() <= 1e-9
        && utility_at_zero.abs() <= 1e-9
        && bp.ok
        && seq_rat_ok.unwrap_or(true)
        && (first_best || monotone)
        && revenue.gap <= 1e-6;
    Ok(VerificationReport {
        regime: schedule.regime,
        ic_violation: ic.map(|r| r.max_violation),
        ic_worst: ic.map(|r| (r.worst_type, r.worst_report)),
        ir_violation: ir.violation(),
        utility_at_zero,
        bp_ok: bp.ok,
        bp,
        seq_rat_ok,
        seq_rat_offending: offending,
        monotone,
        worst_drop,
        revenue,
        revenue_gap: revenue.gap,
        grid_sizes: GridSizes {
            types: opts.types,
            reports: opts.reports,
            envelope: DEFAULT_ENVELOPE_GRID,
            bayes_plausibility: BP_TEST_POINTS,
        },
        passed,
    })
}

/// Envelope utility `U(theta)` on a uniform grid, for reporting.
pub fn utility_profile(schedule: &Schedule, n: usize) -> Vec<(f64, f64)> {
    envelope::utility_trapezoid(schedule, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitment::{commitment_schedule, first_best_schedule};
    use crate::limited_commitment::limited_schedule;
    use crate::model::{ModelParams, TransferRule};

    fn params(vl: f64, c: f64) -> ModelParams {
        ModelParams::new(vl, 1.0, c).unwrap()
    }

    #[test]
    fn commitment_above_half_is_not_sequentially_rational() {
        let s = commitment_schedule(&params(0.75, 2.0)).unwrap();
        let off = sequential_rationality_check(&s).unwrap();
        assert_eq!(off.len(), 1);
        assert_eq!((off[0].lo, off[0].hi), (0.75, 1.0));
        assert_eq!((off[0].price, off[0].optimal), (0.75, 1.0));
    }

    #[test]
    fn commitment_below_quarter_is_sequentially_rational() {
        for vl in [0.1, 0.2, 0.25] {
            let s = commitment_schedule(&params(vl, 1.0)).unwrap();
            assert!(sequential_rationality_check(&s).unwrap().is_empty());
        }
        // The excluded cell [0, 1/2) has mean 1/4 < mu_bar, where v_L is optimal.
        let s = commitment_schedule(&params(0.4, 1.0)).unwrap();
        let off = sequential_rationality_check(&s).unwrap();
        assert_eq!(off.len(), 1);
        assert_eq!((off[0].lo, off[0].hi, off[0].optimal), (0.0, 0.5, 0.4));
    }

    #[test]
    fn revenue_accounting() {
        for vl in [0.3, 0.75] {
            let s = commitment_schedule(&params(vl, 2.0)).unwrap();
            let r = revenue_consistency(&s).unwrap();
            assert!(r.gap < 1e-12, "{r:?}");
        }
        let s = first_best_schedule(&params(0.6, 0.5)).unwrap();
        assert!(revenue_consistency(&s).unwrap().gap < 1e-12);
        let s = limited_schedule(&params(0.75, 2.0)).unwrap();
        assert!(revenue_consistency(&s).unwrap().gap < 1e-8);
    }

    #[test]
    fn ic_detects_overcharging() {
        let mut s = commitment_schedule(&params(0.3, 1.0)).unwrap();
        assert!(ic_check(&s, 401, 401).max_violation < 1e-12);
        if let TransferRule::Quadratic { constant, .. } = &mut s.segments[1].transfer {
            *constant += 0.05;
        }
        let ic = ic_check(&s, 401, 401);
        assert!(ic.max_violation > 0.04);
        assert!(ic.worst_report < 0.5);
        assert!(ir_check(&s, 401).violation() > 0.0);
    }

    #[test]
    fn ic_fails_in_half_to_l() {
        let s = limited_schedule(&params(0.55, 1.0)).unwrap();
        assert!(ic_check(&s, 2001, 2001).max_violation > 1e-4);
    }

    #[test]
    fn verify_reports() {
        let s = limited_schedule(&params(0.9, 1.0)).unwrap();
        let r = verify(&s, &VerifyOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.seq_rat_ok, Some(true));

        let s = first_best_schedule(&params(0.6, 0.5)).unwrap();
        let r = verify(&s, &VerifyOptions::default()).unwrap();
        assert!(r.ic_violation.is_none() && r.passed);
        assert!((r.revenue.reference - first_best_surplus(&s.params)).abs() < 1e-15);

        let s = commitment_schedule(&params(0.75, 2.0)).unwrap();
        let opts = VerifyOptions {
            check_seq_rat: Some(true),
            ..VerifyOptions::default()
        };
        let r = verify(&s, &opts).unwrap();
        assert_eq!(r.seq_rat_ok, Some(false));
        assert!(!r.passed);
    }
}
