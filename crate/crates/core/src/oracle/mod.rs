//! Numerical oracle: the relaxed problem as a linear program over
//! distributions of posterior means, a partition search over simple
//! structures, and dual certificates for the closed-form solutions.

mod certificate;
pub mod simplex;
pub mod sparse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limited_commitment::{limited_revenue, limited_schedule, DEFAULT_CELL_RESOLUTION};
use crate::model::{Atom, MeanDistribution, ModelParams, Prior};
use crate::pricing::TieBreak;
use crate::surplus::RFunction;

pub use certificate::{build_certificate, verify_certificate, CertificateReport};
use simplex::DenseLp;

/// Smallest grid accepted by [`solve_relaxed_lp`].
pub const MIN_GRID: usize = 101;

/// Values closer than this are treated as equal by the partition search.
const TIE_SLACK: f64 = 1e-12;

/// Grid snapping distance for the special points `0, 1/2, mu_bar, 1`.
const SNAP: f64 = 1e-12;

/// Uniform grid of `n` points on `[0, 1]` with `1/2` and `mu_bar` inserted.
pub fn mean_grid(n: usize, mu_bar: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    for s in [0.0, 0.5, mu_bar.clamp(0.0, 1.0), 1.0] {
        match grid.iter().position(|&t| (t - s).abs() <= SNAP) {
            Some(i) => grid[i] = s,
            None => {
                let at = grid.partition_point(|&t| t < s);
                grid.insert(at, s);
            }
        }
    }
    grid
}

/// The convex-order LP on a fixed grid of candidate posterior means.
#[derive(Debug, Clone)]
pub struct LpInstance {
    pub grid: Vec<f64>,
    /// `R` at each grid point under the primary tie rule.
    pub objective: Vec<f64>,
    /// Second column at `mu_bar` carrying the other tie rule: `(index, value, primary tie)`.
    pub duplicate: Option<(usize, f64, TieBreak)>,
    /// `E_F[(theta - t)^+]` at each grid point.
    pub call_bounds: Vec<f64>,
}

/// Solution of the LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LpSolution {
    pub value: f64,
    pub distribution: MeanDistribution,
    /// Tie rule used for the atom at `mu_bar`, when it carries mass.
    pub mu_bar_tie: Option<TieBreak>,
    pub grid_points: usize,
}

impl LpInstance {
    /// `tie = None` keeps both tie rules at `mu_bar` as separate columns.
    pub fn build(params: &ModelParams, grid_size: usize, tie: Option<TieBreak>) -> Result<Self> {
        if grid_size < MIN_GRID {
            return Err(Error::GridTooSmall {
                got: grid_size,
                min: MIN_GRID,
            });
        }
        let mu = params.mu_bar();
        let grid = mean_grid(grid_size, mu);
        let rf = RFunction::new(*params);
        let primary = tie.unwrap_or(TieBreak::FavorLow);
        let objective = grid
            .iter()
            .map(|&m| rf.eval(m, primary))
            .collect::<Result<Vec<f64>>>()?;
        let duplicate = match tie {
            Some(_) => None,
            None => {
                let i = grid.iter().position(|&t| t == mu.clamp(0.0, 1.0)).expect("mu_bar on grid");
                Some((i, rf.eval(mu, TieBreak::FavorHigh)?, primary))
            }
        };
        Self::assemble(grid, objective, duplicate)
    }

    /// Instance with an arbitrary objective on an arbitrary sorted grid spanning `[0, 1]`.
    pub fn from_parts(grid: Vec<f64>, objective: Vec<f64>) -> Result<Self> {
        Self::assemble(grid, objective, None)
    }

    fn assemble(grid: Vec<f64>, objective: Vec<f64>, duplicate: Option<(usize, f64, TieBreak)>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != objective.len() {
            return Err(Error::Distribution("grid and objective lengths differ".into()));
        }
        if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Distribution("grid must increase from 0 to 1".into()));
        }
        let call_bounds = grid.iter().map(|&t| Prior.call_value(t)).collect();
        Ok(LpInstance {
            grid,
            objective,
            duplicate,
            call_bounds,
        })
    }

    /// Reward per grid point with the better tie column at `mu_bar`.
    pub fn best_rewards(&self) -> (Vec<f64>, Option<TieBreak>) {
        let mut r = self.objective.clone();
        let mut chosen = None;
        if let Some((i, alt, primary)) = self.duplicate {
            if alt > r[i] {
                r[i] = alt;
                chosen = Some(TieBreak::FavorHigh);
            } else {
                chosen = Some(primary);
            }
        }
        (r, chosen)
    }

    fn finish(&self, weights: Vec<f64>, value: f64, tie: Option<TieBreak>) -> Result<LpSolution> {
        let atoms: Vec<Atom> = self
            .grid
            .iter()
            .zip(&weights)
            .filter(|(_, &g)| g > 1e-13)
            .map(|(&m, &g)| Atom { m, g })
            .collect();
        let total: f64 = atoms.iter().map(|a| a.g).sum();
        let atoms = atoms.into_iter().map(|a| Atom { m: a.m, g: a.g / total }).collect();
        let distribution = MeanDistribution::new(atoms)?;
        let mu_bar_tie = self.duplicate.and_then(|(i, _, _)| (weights[i] > 1e-13).then_some(tie).flatten());
        Ok(LpSolution {
            value,
            distribution,
            mu_bar_tie,
            grid_points: self.grid.len(),
        })
    }

    /// Solves the sparse call-function form.
    pub fn solve(&self) -> Result<LpSolution> {
        let (rewards, tie) = self.best_rewards();
        let (weights, value) = sparse::solve_call_form(&self.grid, &rewards, &self.call_bounds, Prior.mean())?;
        self.finish(weights, value, tie)
    }

    /// Solves the literal formulation, one variable per grid point plus the
    /// duplicate `mu_bar` column, with the dense simplex.
    pub fn solve_dense(&self) -> Result<LpSolution> {
        let mut objective = self.objective.clone();
        let mut support = self.grid.clone();
        if let Some((i, alt, _)) = self.duplicate {
            objective.push(alt);
            support.push(self.grid[i]);
        }
        let a_ub = self
            .grid
            .iter()
            .map(|&t| support.iter().map(|&m| (m - t).max(0.0)).collect())
            .collect();
        let lp = DenseLp {
            objective,
            a_ub,
            b_ub: self.call_bounds.clone(),
            a_eq: vec![vec![1.0; support.len()], support.clone()],
            b_eq: vec![1.0, Prior.mean()],
        };
        let (x, value) = lp.maximize()?;
        let k = self.grid.len();
        let mut weights = x[..k].to_vec();
        let mut tie = None;
        if let Some((i, _, primary)) = self.duplicate {
            let alt_mass = x[k];
            tie = Some(if alt_mass > weights[i] { TieBreak::FavorHigh } else { primary });
            weights[i] += alt_mass;
        }
        self.finish(weights, value, tie)
    }
}

/// Maximizes `E_G[R]` over `G` mean-preserving contractions of the prior
/// supported on a `grid_size` grid (plus `1/2` and `mu_bar`).
pub fn solve_relaxed_lp(params: &ModelParams, grid_size: usize, tie: Option<TieBreak>) -> Result<LpSolution> {
    LpInstance::build(params, grid_size, tie)?.solve()
}

/// Node masses of the grid discretization of the uniform prior (trapezoid weights).
pub fn node_masses(grid: &[f64]) -> Vec<f64> {
    let k = grid.len();
    (0..k)
        .map(|i| {
            let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
            let right = if i + 1 < k { grid[i + 1] - grid[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Best structure found by [`partition_search`]; cut points are in type space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PartitionResult {
    pub value: f64,
    /// Types below this cut are pooled into one bottom cell.
    pub bottom_cut: Option<f64>,
    /// Interior pooled interval.
    pub pool: Option<(f64, f64)>,
}

/// Exhaustive search over partitions of the discretized prior into a pooled
/// bottom block, revealed types, one pooled interior block and revealed types.
///
/// A pooled block whose mean falls between grid points is split onto the two
/// neighbours, which leaves every constraint of the LP on the same grid
/// satisfied; the value is therefore a lower bound on the LP value.
pub fn partition_search(params: &ModelParams, grid_size: usize, tie: Option<TieBreak>) -> Result<PartitionResult> {
    let inst = LpInstance::build(params, grid_size, tie)?;
    let (r, _) = inst.best_rewards();
    let t = &inst.grid;
    let w = node_masses(t);
    let k = t.len();

    let mut cw = vec![0.0; k + 1];
    let mut cm = vec![0.0; k + 1];
    let mut cs = vec![0.0; k + 1];
    for i in 0..k {
        cw[i + 1] = cw[i] + w[i];
        cm[i + 1] = cm[i] + w[i] * t[i];
        cs[i + 1] = cs[i] + w[i] * r[i];
    }
    let interp = |m: f64| -> f64 {
        let j = t.partition_point(|&x| x < m);
        if j < k && t[j] == m {
            return r[j];
        }
        let j = j.clamp(1, k - 1);
        let (t0, t1) = (t[j - 1], t[j]);
        r[j - 1] + (r[j] - r[j - 1]) * (m - t0) / (t1 - t0)
    };
    // Nodes i..j (exclusive) pooled into one cell.
    let block = |i: usize, j: usize| -> f64 {
        if j == i + 1 {
            return w[i] * r[i];
        }
        let mass = cw[j] - cw[i];
        mass * interp((cm[j] - cm[i]) / mass)
    };
    let cut = |i: usize| -> f64 {
        if i == 0 {
            0.0
        } else if i >= k {
            1.0
        } else {
            0.5 * (t[i - 1] + t[i])
        }
    };

    // best_low[i] = max over a <= i of block(0, a) - cs[a]; near-ties go to the widest block.
    let mut best_low = vec![(0.0, 0usize); k + 1];
    let mut run = (0.0 - cs[0], 0usize);
    for i in 0..=k {
        let cand = if i == 0 { 0.0 } else { block(0, i) } - cs[i];
        if cand >= run.0 - TIE_SLACK {
            run = (run.0.max(cand), i);
        }
        best_low[i] = run;
    }

    let (lv, la) = best_low[k];
    let mut best = (lv + cs[k], la, None::<(usize, usize)>);
    for ib in 0..k {
        let (lv, la) = best_low[ib];
        let base = lv + cs[ib] + cs[k];
        for id in ib + 2..=k {
            let v = base + block(ib, id) - cs[id];
            if v > best.0 + TIE_SLACK {
                best = (v, la, Some((ib, id)));
            }
        }
    }
    let (value, a, pool) = best;
    Ok(PartitionResult {
        value,
        bottom_cut: (a > 0).then(|| cut(a)),
        pool: pool.map(|(b, d)| (cut(b), cut(d))),
    })
}

/// Bayes-plausibility test of `G` against the uniform prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvexOrderReport {
    pub ok: bool,
    pub mean_gap: f64,
    /// `max_t E_G[(m - t)^+] - E_F[(theta - t)^+]`, positive when violated.
    pub max_violation: f64,
    pub worst_t: f64,
}

/// Uniform test points `0, 1/(n-1), ..., 1`.
pub fn test_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Checks `E_G[m] = 1/2` and `E_G[(m - t)^+] <= (1 - t)^2 / 2` at every test point.
pub fn check_convex_order(g: &MeanDistribution, points: &[f64], tol: f64) -> ConvexOrderReport {
    let mean_gap = (g.mean() - Prior.mean()).abs();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_t = 0.0;
    for &t in points {
        let v = g.call_value(t) - Prior.call_value(t);
        if v > max_violation {
            max_violation = v;
            worst_t = t;
        }
    }
    ConvexOrderReport {
        ok: mean_gap <= tol && max_violation <= tol,
        mean_gap,
        max_violation,
        worst_t,
    }
}

/// Everything the `oracle` command reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleReport {
    pub params: ModelParams,
    pub grid: usize,
    pub value: f64,
    pub closed_form: f64,
    pub partition_value: f64,
    pub support: Vec<Atom>,
    pub certificate: crate::model::DualCertificate,
    pub certificate_check: CertificateReport,
    pub gaps: OracleGaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleGaps {
    pub lp_minus_closed: f64,
    pub lp_minus_partition: f64,
}

/// Runs the LP, the partition search and the certificate check at one point.
pub fn run_oracle(params: &ModelParams, grid: usize) -> Result<OracleReport> {
    let lp = solve_relaxed_lp(params, grid, None)?;
    let closed_form = limited_revenue(params)?;
    let part = partition_search(params, grid, None)?;
    let certificate = build_certificate(params)?;
    let schedule = limited_schedule(params)?;
    let g = crate::limited_commitment::induced_distribution(&schedule, DEFAULT_CELL_RESOLUTION)?;
    let certificate_check = verify_certificate(&certificate, params, &g, Some(schedule.tie))?;
    Ok(OracleReport {
        params: *params,
        grid,
        value: lp.value,
        closed_form,
        partition_value: part.value,
        support: lp.distribution.atoms().to_vec(),
        certificate,
        certificate_check,
        gaps: OracleGaps {
            lp_minus_closed: lp.value - closed_form,
            lp_minus_partition: lp.value - part.value,
        },
    })
}
