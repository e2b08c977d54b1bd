//! Sparse reformulation of the convex-order LP.
//!
//! With support restricted to the grid `t_0 < ... < t_{K-1}`, a distribution
//! `G` is determined by its call function `C_k = E_G[(m - t_k)^+]`. The atom
//! at `t_k` is the slope jump of `C` there, with slope `-1` left of `t_0` and
//! `0` right of `t_{K-1}`. Mean `1/2` fixes `C_0`, and the dominance
//! constraints become the bounds `0 <= C_k <= E_F[(theta - t_k)^+]`.
//! Each row of the resulting LP has at most three nonzeros.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// Atom weights on `grid` maximizing `sum_k r_k g_k`, and the optimal value.
pub fn solve_call_form(grid: &[f64], rewards: &[f64], call_bounds: &[f64], mean: f64) -> Result<(Vec<f64>, f64)> {
    let k = grid.len();
    let d: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();

    // g_i = sum_j coef_ij C_j + const_i
    let row = |i: usize| -> (Vec<(usize, f64)>, f64) {
        let mut entries = Vec::with_capacity(4);
        let mut constant = 0.0;
        if i + 1 < k {
            entries.push((i + 1, 1.0 / d[i]));
            entries.push((i, -1.0 / d[i]));
        }
        if i > 0 {
            entries.push((i, -1.0 / d[i - 1]));
            entries.push((i - 1, 1.0 / d[i - 1]));
        } else {
            constant += 1.0;
        }
        (entries, constant)
    };

    let mut obj = vec![0.0; k];
    let rows: Vec<(Vec<(usize, f64)>, f64)> = (0..k).map(row).collect();
    for (i, (entries, _)) in rows.iter().enumerate() {
        for &(j, v) in entries {
            obj[j] += rewards[i] * v;
        }
    }

    let mut pb = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..k)
        .map(|j| {
            let bounds = if j == 0 { (mean, mean) } else { (0.0, call_bounds[j]) };
            pb.add_var(obj[j], bounds)
        })
        .collect();
    for (entries, constant) in &rows {
        let mut expr = LinearExpr::empty();
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for &(j, v) in entries {
            match merged.iter_mut().find(|e| e.0 == j) {
                Some(e) => e.1 += v,
                None => merged.push((j, v)),
            }
        }
        for (j, v) in merged {
            expr.add(vars[j], v);
        }
        pb.add_constraint(expr, ComparisonOp::Ge, -constant);
    }
    let sol = pb.solve().map_err(|e| match e {
        minilp::Error::Infeasible => Error::Infeasible,
        minilp::Error::Unbounded => Error::Unbounded,
    })?;

    let raw: Vec<f64> = vars.iter().map(|&v| sol[v]).collect();
    let calls = lower_hull(grid, &raw);
    let weights: Vec<f64> = rows
        .iter()
        .map(|(entries, constant)| {
            let g: f64 = entries.iter().map(|&(j, v)| v * calls[j]).sum::<f64>() + constant;
            g.max(0.0)
        })
        .collect();
    let value = weights.iter().zip(rewards).map(|(g, r)| g * r).sum();
    Ok((weights, value))
}

/// Greatest convex minorant of `(grid_k, c_k)`, evaluated on the grid.
///
/// Solver round-off can leave the call function slightly non-convex, which
/// shows up as tiny negative atoms; the minorant keeps the end values, stays
/// below every bound and has nonnegative slope jumps.
fn lower_hull(grid: &[f64], c: &[f64]) -> Vec<f64> {
    let mut hull: Vec<usize> = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (grid[b] - grid[a]) * (c[i] - c[a]) - (c[b] - c[a]) * (grid[i] - grid[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = Vec::with_capacity(grid.len());
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a..b {
            out.push(c[a] + (c[b] - c[a]) * (grid[i] - grid[a]) / (grid[b] - grid[a]));
        }
    }
    out.push(c[grid.len() - 1]);
    out
}
