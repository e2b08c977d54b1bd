//! Per-cell revenue `R(m)` and its integrals.
//!
//! A cell with posterior mean `m` earns the maximized period-1 virtual surplus
//! `(max(2m - 1, 0))^2 / (2c)` plus the virtual period-2 revenue at the
//! sequentially rational price: `R_L(m) = 2 m dv + 2 v_L - v_H` when `v_L` is
//! posted, `R_H(m) = m v_H` otherwise.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{MeanDistribution, ModelParams};
use crate::pricing::{serves_low, TieBreak};

/// Which side of `1/2` the indifference mean falls on; fixes the shape of `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RBranch {
    MuBelowHalf,
    MuAtLeastHalf,
}

/// Cell revenue as a function of the posterior mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RFunction {
    pub params: ModelParams,
    pub branch: RBranch,
}

impl RFunction {
    pub fn new(params: ModelParams) -> Self {
        let branch = if params.mu_bar() < 0.5 {
            RBranch::MuBelowHalf
        } else {
            RBranch::MuAtLeastHalf
        };
        RFunction { params, branch }
    }

    pub fn eval(&self, mean: f64, tie: TieBreak) -> Result<f64> {
        r_value(mean, self, tie)
    }

    /// `max(R(m) | FavorLow, R(m) | FavorHigh)`; differs from either only at `mu_bar`.
    pub fn eval_best(&self, mean: f64) -> Result<f64> {
        Ok(self
            .eval(mean, TieBreak::FavorLow)?
            .max(self.eval(mean, TieBreak::FavorHigh)?))
    }
}

/// Optimal period-1 quality for a cell with posterior mean `mean`.
pub fn quality_given_mean(mean: f64, params: &ModelParams) -> f64 {
    (2.0 * mean - 1.0).max(0.0) / params.cost()
}

/// Period-1 part of `R`: `(max(2m - 1, 0))^2 / (2c)`.
pub fn period1_component(mean: f64, params: &ModelParams) -> f64 {
    let s = (2.0 * mean - 1.0).max(0.0);
    s * s / (2.0 * params.cost())
}

/// `2 m dv + 2 v_L - v_H`, the virtual period-2 revenue under the low price.
pub fn low_price_component(mean: f64, params: &ModelParams) -> f64 {
    2.0 * mean * params.delta_v() + 2.0 * params.v_low() - params.v_high()
}

/// `m v_H`, the virtual period-2 revenue under the high price.
pub fn high_price_component(mean: f64, params: &ModelParams) -> f64 {
    mean * params.v_high()
}

/// Period-2 part of `R` at the sequentially rational price.
pub fn period2_component(mean: f64, params: &ModelParams, tie: TieBreak) -> Result<f64> {
    Ok(if serves_low(mean, params, tie)? {
        low_price_component(mean, params)
    } else {
        high_price_component(mean, params)
    })
}

pub fn r_value(mean: f64, rf: &RFunction, tie: TieBreak) -> Result<f64> {
    Ok(period1_component(mean, &rf.params) + period2_component(mean, &rf.params, tie)?)
}

/// `sum_i g_i R(m_i)`.
pub fn revenue_of_distribution(g: &MeanDistribution, rf: &RFunction, tie: TieBreak) -> Result<f64> {
    g.atoms()
        .iter()
        .map(|a| Ok(a.g * rf.eval(a.m, tie)?))
        .sum()
}

/// Exact `int_lo^hi R(m) dm`; the tie rule is irrelevant on sets of positive length.
pub fn integrate_r(lo: f64, hi: f64, params: &ModelParams) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mu = params.mu_bar();
    let dv = params.delta_v();
    let (vl, vh, c) = (params.v_low(), params.v_high(), params.cost());
    let anti_low = |m: f64| m * m * dv + (2.0 * vl - vh) * m;
    let anti_high = |m: f64| 0.5 * vh * m * m;
    let anti_p1 = |m: f64| (2.0 * m - 1.0).powi(3) / (12.0 * c);

    let mut total = 0.0;
    let low_hi = hi.min(mu);
    if low_hi > lo {
        total += anti_low(low_hi) - anti_low(lo);
    }
    let high_lo = lo.max(mu);
    if hi > high_lo {
        total += anti_high(hi) - anti_high(high_lo);
    }
    let p1_lo = lo.max(0.5);
    if hi > p1_lo {
        total += anti_p1(hi) - anti_p1(p1_lo);
    }
    total
}
