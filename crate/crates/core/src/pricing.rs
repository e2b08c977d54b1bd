//! Sequentially rational period-2 pricing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Posterior means within this distance of `mu_bar` are treated as ties.
pub const TIE_BAND: f64 = 1e-12;

/// Price chosen when the period-2 monopolist is indifferent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TieBreak {
    FavorLow,
    FavorHigh,
}

impl TieBreak {
    /// The tie rule that maximizes the firm's two-period revenue at `mu_bar`.
    ///
    /// `R_L(mu_bar) - R_H(mu_bar) = (1 - mu_bar)(2 v_L - v_H)`, so the low
    /// price is weakly better exactly when `mu_bar >= 1/2`.
    pub fn firm_preferred(params: &ModelParams) -> TieBreak {
        if params.mu_bar() >= 0.5 {
            TieBreak::FavorLow
        } else {
            TieBreak::FavorHigh
        }
    }

    pub fn both() -> [TieBreak; 2] {
        [TieBreak::FavorLow, TieBreak::FavorHigh]
    }
}

fn check_mean(mean: f64) -> Result<()> {
    if mean.is_finite() && (0.0..=1.0).contains(&mean) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "posterior mean",
            value: mean,
        })
    }
}

/// Whether the period-2 price at posterior mean `mean` is `v_L`.
pub fn serves_low(mean: f64, params: &ModelParams, tie: TieBreak) -> Result<bool> {
    check_mean(mean)?;
    let mu = params.mu_bar();
    Ok(if (mean - mu).abs() <= TIE_BAND {
        tie == TieBreak::FavorLow
    } else {
        mean < mu
    })
}

/// Optimal period-2 price given the posterior mean.
pub fn period2_price(mean: f64, params: &ModelParams, tie: TieBreak) -> Result<f64> {
    Ok(if serves_low(mean, params, tie)? {
        params.v_low()
    } else {
        params.v_high()
    })
}

/// Expected period-2 revenue from a cell with posterior mean `mean`.
pub fn period2_revenue(mean: f64, params: &ModelParams, tie: TieBreak) -> Result<f64> {
    Ok(if serves_low(mean, params, tie)? {
        params.v_low()
    } else {
        mean * params.v_high()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_flips_at_mu_bar() {
        let p = ModelParams::new(0.75, 1.0, 2.0).unwrap();
        assert_eq!(period2_price(0.7, &p, TieBreak::FavorHigh).unwrap(), 0.75);
        assert_eq!(period2_price(0.8, &p, TieBreak::FavorLow).unwrap(), 1.0);
        assert_eq!(period2_price(0.75, &p, TieBreak::FavorLow).unwrap(), 0.75);
        assert_eq!(period2_price(0.75, &p, TieBreak::FavorHigh).unwrap(), 1.0);
        assert_eq!(period2_price(0.75 + 1e-13, &p, TieBreak::FavorLow).unwrap(), 0.75);
        assert_eq!(period2_price(0.75 + 1e-9, &p, TieBreak::FavorLow).unwrap(), 1.0);
    }

    #[test]
    fn revenue_is_price_times_sale_probability() {
        let p = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        assert_eq!(period2_revenue(0.3, &p, TieBreak::FavorHigh).unwrap(), 0.5);
        assert!((period2_revenue(0.8, &p, TieBreak::FavorHigh).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn firm_preferred_tie() {
        let hi = ModelParams::new(0.75, 1.0, 1.0).unwrap();
        let lo = ModelParams::new(0.3, 1.0, 1.0).unwrap();
        assert_eq!(TieBreak::firm_preferred(&hi), TieBreak::FavorLow);
        assert_eq!(TieBreak::firm_preferred(&lo), TieBreak::FavorHigh);
    }

    #[test]
    fn rejects_bad_mean() {
        let p = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        assert!(serves_low(f64::NAN, &p, TieBreak::FavorLow).is_err());
        assert!(serves_low(1.5, &p, TieBreak::FavorLow).is_err());
    }
}
