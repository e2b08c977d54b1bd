//! Parameter sweeps over `(mu_bar, c)` with CSV output.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::commitment::commitment_revenue;
use crate::error::{Error, Result};
use crate::limited_commitment::{
    classify, exact_monotonicity_condition, limited_revenue, monotonicity_check_on_grid,
    necessary_monotonicity_condition, regime_interval, Regime,
};
use crate::model::ModelParams;

/// Environment variable capping the sweep's worker threads.
pub const THREADS_ENV: &str = "MECH_SOLVER_THREADS";

/// `n` points from `lo` to `hi`; when `lo <= 0` the left end is excluded
/// and the points are `hi * i / n`, `i = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl SweepRange {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::Domain {
                what: "sweep range",
                value: hi - lo,
            });
        }
        Ok(SweepRange { lo, hi, n })
    }

    /// Parses `lo:hi:n`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Domain {
            what: "sweep range (expected lo:hi:n)",
            value: f64::NAN,
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(lo, hi, n)
    }

    pub fn points(&self) -> Vec<f64> {
        if self.lo <= 0.0 {
            return (1..=self.n)
                .map(|i| self.hi * i as f64 / self.n as f64)
                .collect();
        }
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

/// One `(mu_bar, c)` point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub mu: f64,
    pub c: f64,
    /// Regime name, or `NoDiscrimination` when `mu_bar >= 1`.
    pub regime: String,
    pub m_lo: Option<f64>,
    pub m_hi: Option<f64>,
    pub revenue_limited: f64,
    pub revenue_commitment: f64,
    pub monotone_analytic: bool,
    pub monotone_numeric: bool,
    pub necessary_condition: Option<bool>,
    pub exact_condition: Option<bool>,
    pub conditions_disagree: bool,
    pub worst_drop: f64,
}

/// Grid used for the numeric monotonicity check in sweeps.
pub const SWEEP_SLOPE_GRID: usize = 10_001;

/// Evaluates one point with `v_H` fixed.
pub fn sweep_point(mu: f64, c: f64, v_high: f64, slope_grid: usize) -> Result<SweepRow> {
    if mu >= 1.0 {
        // v_L = v_H: period-2 price v_H is paid by everyone; nothing to learn.
        let revenue = 1.0 / (12.0 * c) + v_high;
        return Ok(SweepRow {
            mu,
            c,
            regime: "NoDiscrimination".into(),
            m_lo: None,
            m_hi: None,
            revenue_limited: revenue,
            revenue_commitment: revenue,
            monotone_analytic: true,
            monotone_numeric: true,
            necessary_condition: None,
            exact_condition: None,
            conditions_disagree: false,
            worst_drop: 0.0,
        });
    }
    let params = ModelParams::new(mu * v_high, v_high, c)?;
    let regime = classify(&params);
    let iv = regime_interval(&params, regime)?;
    let mono = monotonicity_check_on_grid(&params, slope_grid)?;
    let above = regime == Regime::MuAboveL;
    let necessary = above.then(|| necessary_monotonicity_condition(&params));
    let exact = above.then(|| exact_monotonicity_condition(&params));
    Ok(SweepRow {
        mu,
        c,
        regime: regime.name().into(),
        m_lo: iv.map(|p| p.m_lo),
        m_hi: iv.map(|p| p.m_hi),
        revenue_limited: limited_revenue(&params)?,
        revenue_commitment: commitment_revenue(&params),
        monotone_analytic: mono.analytic_ok,
        monotone_numeric: mono.numeric_ok,
        necessary_condition: necessary,
        exact_condition: exact,
        conditions_disagree: matches!((necessary, exact), (Some(a), Some(b)) if a != b),
        worst_drop: mono.worst_drop,
    })
}

/// Reads [`THREADS_ENV`]; unset or invalid values mean no cap.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Rows in `mu`-major order; the order does not depend on the thread count.
pub fn sweep(
    mu: &SweepRange,
    c: &SweepRange,
    v_high: f64,
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let points: Vec<(f64, f64)> = mu
        .points()
        .into_iter()
        .flat_map(|m| c.points().into_iter().map(move |cc| (m, cc)))
        .collect();
    let run = || {
        points
            .par_iter()
            .map(|&(m, cc)| sweep_point(m, cc, v_high, SWEEP_SLOPE_GRID))
            .collect::<Result<Vec<_>>>()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?
            .install(run),
        None => run(),
    }
}

pub const CSV_HEADER: [&str; 13] = [
    "mu",
    "c",
    "regime",
    "m_lo",
    "m_hi",
    "revenueLimited",
    "revenueCommitment",
    "monotoneAnalytic",
    "monotoneNumeric",
    "necessaryCondition",
    "exactCondition",
    "conditionsDisagree",
    "worstDrop",
];

fn opt_num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes rows as CSV; numbers use the shortest round-trip representation.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.mu.to_string(),
            r.c.to_string(),
            r.regime.clone(),
            opt_num(r.m_lo),
            opt_num(r.m_hi),
            r.revenue_limited.to_string(),
            r.revenue_commitment.to_string(),
            r.monotone_analytic.to_string(),
            r.monotone_numeric.to_string(),
            opt_bool(r.necessary_condition),
            opt_bool(r.exact_condition),
            r.conditions_disagree.to_string(),
            r.worst_drop.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Shape of the set of points where the numeric monotonicity check fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FailureRegion {
    pub failures: usize,
    /// Failing cells form one 4-connected component of the `mu x c` grid.
    pub connected: bool,
    /// Every `MuHalfToL` point fails.
    pub contains_half_to_l: bool,
    /// Failing `c` count per `mu` row never increases with `mu`.
    pub shrinks_with_mu: bool,
    /// Points where the necessary and exact conditions disagree.
    pub disagreements: Vec<(f64, f64)>,
}

/// Analyzes rows laid out `mu`-major with `n_c` columns.
pub fn failure_region(rows: &[SweepRow], n_c: usize) -> FailureRegion {
    let n_mu = rows.len() / n_c;
    let fail = |i: usize, j: usize| !rows[i * n_c + j].monotone_numeric;
    let failures = rows.iter().filter(|r| !r.monotone_numeric).count();

    let mut seen = vec![false; rows.len()];
    let mut components = 0;
    for start in 0..rows.len() {
        if seen[start] || rows[start].monotone_numeric {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            let (i, j) = (k / n_c, k % n_c);
            let mut nbrs = Vec::with_capacity(4);
            if i > 0 {
                nbrs.push((i - 1, j));
            }
            if i + 1 < n_mu {
                nbrs.push((i + 1, j));
            }
            if j > 0 {
                nbrs.push((i, j - 1));
            }
            if j + 1 < n_c {
                nbrs.push((i, j + 1));
            }
            for (a, b) in nbrs {
                let idx = a * n_c + b;
                if !seen[idx] && fail(a, b) {
                    seen[idx] = true;
                    stack.push(idx);
                }
            }
        }
    }
    let per_row: Vec<usize> = (0..n_mu)
        .map(|i| (0..n_c).filter(|&j| fail(i, j)).count())
        .collect();
    FailureRegion {
        failures,
        connected: components <= 1,
        contains_half_to_l: rows
            .iter()
            .filter(|r| r.regime == Regime::MuHalfToL.name())
            .all(|r| !r.monotone_numeric),
        shrinks_with_mu: per_row.windows(2).all(|w| w[1] <= w[0]),
        disagreements: rows
            .iter()
            .filter(|r| r.conditions_disagree)
            .map(|r| (r.mu, r.c))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        let r = SweepRange::parse("0.5:1:3").unwrap();
        assert_eq!(r.points(), vec![0.5, 0.75, 1.0]);
        let r = SweepRange::parse("0:2:4").unwrap();
        assert_eq!(r.points(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(SweepRange::parse("0.3:0.3:1").unwrap().points(), vec![0.3]);
        for bad in ["", "1:2", "a:1:3", "1:0.5:3", "0:1:0", "0:1:2:3"] {
            assert!(SweepRange::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn rows_follow_declared_order() {
        let mu = SweepRange::new(0.2, 0.8, 4).unwrap();
        let c = SweepRange::new(0.5, 2.0, 3).unwrap();
        let one = sweep(&mu, &c, 1.0, Some(1)).unwrap();
        let many = sweep(&mu, &c, 1.0, Some(3)).unwrap();
        assert_eq!(one, many);
        assert_eq!(one.len(), 12);
        assert_eq!((one[0].mu, one[0].c), (0.2, 0.5));
        assert_eq!((one[1].mu, one[1].c), (0.2, 1.25));
        assert_eq!((one[3].mu, one[3].c), (0.4, 0.5));
    }

    #[test]
    fn low_mu_rows_match_commitment() {
        let row = sweep_point(0.2, 1.0, 1.0, 1001).unwrap();
        assert_eq!(row.regime, "MuLeQuarter");
        assert!((row.revenue_limited - row.revenue_commitment).abs() < 1e-12);
        let top = sweep_point(1.0, 1.0, 1.0, 1001).unwrap();
        assert_eq!(top.regime, "NoDiscrimination");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = vec![sweep_point(0.75, 2.0, 1.0, 1001).unwrap()];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 13);
        assert_eq!(fields[2], "MuAboveL");
        assert_eq!(fields[11], "true");
    }

    #[test]
    fn failure_region_shape() {
        let mu = SweepRange::new(0.5, 1.0, 11).unwrap();
        let c = SweepRange::new(0.0, 2.0, 8).unwrap();
        let rows = sweep(&mu, &c, 1.0, None).unwrap();
        let region = failure_region(&rows, 8);
        assert!(region.failures > 0);
        assert!(region.connected && region.contains_half_to_l && region.shrinks_with_mu);
    }
}
