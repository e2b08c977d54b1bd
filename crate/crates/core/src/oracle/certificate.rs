//! Dual certificates: convex `pi >= R` touching `R` on the support of `G`,
//! with `E_F[pi] = E_G[pi]`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::limited_commitment::{classify, regime_interval, subcells, Regime, DEFAULT_CELL_RESOLUTION};
use crate::model::{DualCertificate, MeanDistribution, ModelParams};
use crate::pricing::TieBreak;
use crate::surplus::RFunction;

/// Points checked for `pi >= R`.
const DOMINANCE_GRID: usize = 100_001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateReport {
    /// Largest decrease between consecutive slopes of `pi`.
    pub convexity_defect: f64,
    /// `max (R - pi)` on a dense grid, positive when `pi` fails to dominate.
    pub dominance_shortfall: f64,
    /// `|E_F[pi] - E_G[pi]|`.
    pub expectation_gap: f64,
    /// `max |pi - R|` over the support of `G`.
    pub touching_gap: f64,
    pub passed: bool,
}

struct Builder {
    rf: RFunction,
    tie: TieBreak,
    points: Vec<(f64, f64)>,
}

impl Builder {
    fn push(&mut self, m: f64, v: f64) {
        if let Some(last) = self.points.last() {
            if m <= last.0 + 1e-15 {
                return;
            }
        }
        self.points.push((m, v));
    }

    fn r(&self, m: f64) -> Result<f64> {
        self.rf.eval(m, self.tie)
    }

    /// Follows `R` on `[lo, hi]` through the sub-cell boundaries used for induced distributions.
    fn follow(&mut self, lo: f64, hi: f64) -> Result<()> {
        for (a, b) in subcells(lo, hi, DEFAULT_CELL_RESOLUTION) {
            let (ra, rb) = (self.r(a)?, self.r(b)?);
            self.push(a, ra);
            self.push(b, rb);
        }
        Ok(())
    }

    fn point(&mut self, m: f64) -> Result<()> {
        let v = self.r(m)?;
        self.push(m, v);
        Ok(())
    }
}

/// Certificate for the closed-form solution at `params`.
///
/// `pi` is linear through each pooled cell and follows `R` elsewhere; curved
/// stretches of `R` are represented by their interpolant on the sub-cell grid.
pub fn build_certificate(params: &ModelParams) -> Result<DualCertificate> {
    let rf = RFunction::new(*params);
    let tie = TieBreak::firm_preferred(params);
    let mut b = Builder {
        rf,
        tie,
        points: Vec::new(),
    };
    let mu = params.mu_bar();
    let vh = params.v_high();
    let regime = classify(params);
    match (regime, regime_interval(params, regime)?) {
        (Regime::MuLeQuarter, _) => {
            b.push(0.0, 0.0);
            b.push(0.5, 0.5 * vh);
            b.follow(0.5, 1.0)?;
        }
        (Regime::MuQuarterToHalf, Some(iv)) if iv.m_lo == 0.0 => {
            // Line through (mu_bar, R(mu_bar)) and (m*, R(m*)), extended to 0.
            let top = iv.m_hi;
            let (r_mu, r_top) = (b.r(mu)?, b.r(top)?);
            let slope = (r_top - r_mu) / (top - mu);
            b.push(0.0, r_mu - slope * mu);
            b.push(top, r_top);
            b.follow(top, 1.0)?;
        }
        (Regime::MuQuarterToHalf, Some(iv)) => {
            b.point(0.0)?;
            b.point(iv.m_lo)?;
            b.point(iv.m_hi)?;
            b.follow(iv.m_hi, 1.0)?;
        }
        (Regime::MuHalfToL, Some(iv)) => {
            b.point(0.0)?;
            b.point(iv.m_lo)?;
            if iv.m_hi < 0.5 {
                b.point(0.5)?;
            }
            b.follow(iv.m_hi.max(0.5), 1.0)?;
        }
        (Regime::MuAboveL, Some(iv)) => {
            b.point(0.0)?;
            b.point(0.5)?;
            b.follow(0.5, iv.m_lo)?;
            b.point(iv.m_hi)?;
            b.follow(iv.m_hi, 1.0)?;
        }
        (_, None) => unreachable!("pooling regimes carry an interval"),
    }
    DualCertificate::new(b.points)
}

/// Checks convexity, dominance of `R`, equal expectations under `F` and `G`,
/// and touching on the support of `G`.
///
/// `tie = None` compares against the larger of the two tie values at `mu_bar`.
pub fn verify_certificate(
    pi: &DualCertificate,
    params: &ModelParams,
    g: &MeanDistribution,
    tie: Option<TieBreak>,
) -> Result<CertificateReport> {
    let rf = RFunction::new(*params);
    let r = |m: f64| -> Result<f64> {
        match tie {
            Some(t) => rf.eval(m, t),
            None => rf.eval_best(m),
        }
    };
    let convexity_defect = pi.convexity_defect();

    let mut dominance_shortfall = f64::NEG_INFINITY;
    let n = DOMINANCE_GRID;
    let extra = pi.breakpoints.iter().map(|p| p.0).chain([params.mu_bar().min(1.0)]);
    for m in (0..n).map(|i| i as f64 / (n - 1) as f64).chain(extra) {
        dominance_shortfall = dominance_shortfall.max(r(m)? - pi.eval(m));
    }

    let e_f = pi.prior_expectation();
    let e_g = g.expectation(|m| pi.eval(m));
    let expectation_gap = (e_f - e_g).abs();

    let mut touching_gap: f64 = 0.0;
    for a in g.atoms().iter().filter(|a| a.g > 0.0) {
        touching_gap = touching_gap.max((pi.eval(a.m) - r(a.m)?).abs());
    }

    let passed =
        convexity_defect <= 1e-8 && dominance_shortfall <= 1e-8 && expectation_gap <= 1e-6 && touching_gap <= 1e-6;
    Ok(CertificateReport {
        convexity_defect,
        dominance_shortfall,
        expectation_gap,
        touching_gap,
        passed,
    })
}
