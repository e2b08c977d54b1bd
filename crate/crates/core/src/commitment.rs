//! Full-information and full-commitment benchmarks.

use crate::envelope::recover_transfers;
use crate::error::{Error, Result};
use crate::model::{
    ModelParams, Prior, QualityRule, Schedule, ScheduleRegime, Segment, SegmentKind, TransferRule,
};
use crate::pricing::TieBreak;

fn check_type(theta: f64) -> Result<()> {
    if theta.is_finite() && (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "type",
            value: theta,
        })
    }
}

/// Efficient quality `theta / c`.
pub fn first_best_quality(theta: f64, params: &ModelParams) -> Result<f64> {
    check_type(theta)?;
    Ok(theta / params.cost())
}

/// Screening quality `max(2 theta - 1, 0) / c`, identical to the static problem.
pub fn commitment_quality(theta: f64, params: &ModelParams) -> Result<f64> {
    check_type(theta)?;
    Ok((2.0 * theta - 1.0).max(0.0) / params.cost())
}

/// Committed period-2 price: `v_H` when `mu_bar <= 1/2`, else `v_L`.
pub fn commitment_price2(params: &ModelParams) -> f64 {
    if params.mu_bar() <= 0.5 {
        params.v_high()
    } else {
        params.v_low()
    }
}

/// Two-period revenue under full commitment: `1/(12c) + max(v_H/2, v_L)`.
pub fn commitment_revenue(params: &ModelParams) -> f64 {
    let period2 = if params.mu_bar() <= 0.5 {
        0.5 * params.v_high()
    } else {
        params.v_low()
    };
    1.0 / (12.0 * params.cost()) + period2
}

/// Total surplus with efficient quality and trade in period 2: `1/(6c) + (v_H + v_L)/2`.
pub fn first_best_surplus(params: &ModelParams) -> f64 {
    1.0 / (6.0 * params.cost()) + 0.5 * (params.v_high() + params.v_low())
}

/// Commitment schedule: exclusion on `[0, 1/2)`, separation above, one committed price.
pub fn commitment_schedule(params: &ModelParams) -> Result<Schedule> {
    let price = commitment_price2(params);
    let c = params.cost();
    let zero = TransferRule::Const { value: 0.0 };
    let segments = vec![
        Segment {
            lo: 0.0,
            hi: 0.5,
            kind: SegmentKind::Exclusion,
            quality: QualityRule::Const { value: 0.0 },
            transfer: zero,
            price2: price,
            cell_mean: Some(Prior.conditional_mean(0.0, 0.5)),
        },
        Segment {
            lo: 0.5,
            hi: 1.0,
            kind: SegmentKind::Separating,
            quality: QualityRule::Affine {
                slope: 2.0 / c,
                intercept: -1.0 / c,
            },
            transfer: zero,
            price2: price,
            cell_mean: None,
        },
    ];
    let tie = if price == params.v_low() {
        TieBreak::FavorLow
    } else {
        TieBreak::FavorHigh
    };
    let s = Schedule::new(ScheduleRegime::Commitment, *params, tie, segments)?;
    Ok(recover_transfers(s))
}

/// Full-information schedule: quality `theta / c`, period-2 price `v_L`, and a
/// transfer `theta q + theta dv` that extracts the surplus of both periods.
pub fn first_best_schedule(params: &ModelParams) -> Result<Schedule> {
    let c = params.cost();
    let segments = vec![Segment {
        lo: 0.0,
        hi: 1.0,
        kind: SegmentKind::Separating,
        quality: QualityRule::Affine {
            slope: 1.0 / c,
            intercept: 0.0,
        },
        transfer: TransferRule::Quadratic {
            quad: 1.0 / c,
            lin: params.delta_v(),
            constant: 0.0,
        },
        price2: params.v_low(),
        cell_mean: None,
    }];
    Schedule::new(ScheduleRegime::FirstBest, *params, TieBreak::FavorLow, segments)
}
