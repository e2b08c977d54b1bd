//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Deterministic and cycle-free; meant for small instances and as a
//! cross-check of the sparse solver.

use crate::error::{Error, Result};

const EPS: f64 = 1e-10;

/// `max c.x` subject to `a_ub x <= b_ub`, `a_eq x = b_eq`, `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct DenseLp {
    pub objective: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows` constraint rows followed by the objective row; last column is the rhs.
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.data[pr * w + pc];
        for j in 0..w {
            self.data[pr * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                for (j, pv) in pivot_row.iter().enumerate() {
                    self.data[r * w + j] -= f * pv;
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Installs `costs` (to maximize) as the objective row, priced out against the basis.
    fn set_objective(&mut self, costs: &[f64]) {
        let w = self.cols + 1;
        let obj = self.rows * w;
        for j in 0..w {
            self.data[obj + j] = if j < self.cols { -costs[j] } else { 0.0 };
        }
        for r in 0..self.rows {
            let b = self.basis[r];
            let f = self.data[obj + b];
            if f != 0.0 {
                for j in 0..w {
                    self.data[obj + j] -= f * self.data[r * w + j];
                }
            }
        }
    }

    /// Runs Bland's rule over the columns allowed by `allowed`.
    fn optimize(&mut self, allowed: &[bool]) -> Result<()> {
        loop {
            let entering = (0..self.cols).find(|&j| allowed[j] && self.at(self.rows, j) < -EPS);
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    let better = match best {
                        None => true,
                        Some((br, _, bb)) => {
                            ratio < br - EPS || (ratio <= br + EPS && self.basis[r] < bb)
                        }
                    };
                    if better {
                        best = Some((ratio, r, self.basis[r]));
                    }
                }
            }
            match best {
                Some((_, pr, _)) => self.pivot(pr, pc),
                None => return Err(Error::Unbounded),
            }
        }
    }
}

impl DenseLp {
    /// Optimal point and value.
    pub fn maximize(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.objective.len();
        let m_ub = self.a_ub.len();
        let m_eq = self.a_eq.len();
        let rows = m_ub + m_eq;

        // Columns: structural, one slack per inequality row, artificials as needed.
        let mut needs_art = Vec::with_capacity(rows);
        for i in 0..m_ub {
            needs_art.push(self.b_ub[i] < 0.0);
        }
        needs_art.extend(std::iter::repeat_n(true, m_eq));
        let n_art = needs_art.iter().filter(|&&b| b).count();
        let cols = n + m_ub + n_art;
        let w = cols + 1;
        let mut data = vec![0.0; (rows + 1) * w];
        let mut basis = vec![0; rows];
        let mut art_col = n + m_ub;
        for r in 0..rows {
            let (coeffs, b, slack) = if r < m_ub {
                (&self.a_ub[r], self.b_ub[r], Some(n + r))
            } else {
                (&self.a_eq[r - m_ub], self.b_eq[r - m_ub], None)
            };
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for (j, &v) in coeffs.iter().enumerate() {
                data[r * w + j] = sign * v;
            }
            if let Some(s) = slack {
                data[r * w + s] = sign;
            }
            data[r * w + cols] = sign * b;
            if needs_art[r] {
                data[r * w + art_col] = 1.0;
                basis[r] = art_col;
                art_col += 1;
            } else {
                basis[r] = slack.expect("inequality row");
            }
        }
        let mut t = Tableau {
            rows,
            cols,
            data,
            basis,
        };

        let is_art: Vec<bool> = (0..cols).map(|j| j >= n + m_ub).collect();
        if n_art > 0 {
            let phase1: Vec<f64> = (0..cols).map(|j| if is_art[j] { -1.0 } else { 0.0 }).collect();
            t.set_objective(&phase1);
            t.optimize(&vec![true; cols])?;
            let infeasibility: f64 = (0..rows)
                .filter(|&r| is_art[t.basis[r]])
                .map(|r| t.rhs(r))
                .sum();
            if infeasibility > 1e-8 {
                return Err(Error::Infeasible);
            }
            // Drive zero-level artificials out of the basis where possible.
            for r in 0..rows {
                if is_art[t.basis[r]] {
                    if let Some(pc) = (0..n + m_ub).find(|&j| t.at(r, j).abs() > EPS) {
                        t.pivot(r, pc);
                    }
                }
            }
        }

        let mut costs = vec![0.0; cols];
        costs[..n].copy_from_slice(&self.objective);
        t.set_objective(&costs);
        let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
        t.optimize(&allowed)?;

        let mut x = vec![0.0; n];
        for r in 0..rows {
            if t.basis[r] < n {
                x[t.basis[r]] = t.rhs(r);
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok((x, value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let lp = DenseLp {
            objective: vec![3.0, 5.0],
            a_ub: vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            b_ub: vec![4.0, 12.0, 18.0],
            ..Default::default()
        };
        let (x, v) = lp.maximize().unwrap();
        assert!((v - 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_and_infeasibility() {
        let lp = DenseLp {
            objective: vec![1.0, 2.0],
            a_eq: vec![vec![1.0, 1.0]],
            b_eq: vec![1.0],
            ..Default::default()
        };
        let (x, v) = lp.maximize().unwrap();
        assert!((v - 2.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);

        let bad = DenseLp {
            objective: vec![1.0],
            a_ub: vec![vec![1.0]],
            b_ub: vec![1.0],
            a_eq: vec![vec![1.0]],
            b_eq: vec![2.0],
        };
        assert_eq!(bad.maximize().unwrap_err(), Error::Infeasible);
    }

    #[test]
    fn unbounded_is_reported() {
        let lp = DenseLp {
            objective: vec![1.0, 0.0],
            a_ub: vec![vec![-1.0, 1.0]],
            b_ub: vec![1.0],
            ..Default::default()
        };
        assert_eq!(lp.maximize().unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Beale's cycling example; Bland's rule must terminate at value 1/20.
        let lp = DenseLp {
            objective: vec![0.75, -150.0, 0.02, -6.0],
            a_ub: vec![
                vec![0.25, -60.0, -0.04, 9.0],
                vec![0.5, -90.0, -0.02, 3.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            b_ub: vec![0.0, 0.0, 1.0],
            ..Default::default()
        };
        let (_, v) = lp.maximize().unwrap();
        assert!((v - 0.05).abs() < 1e-9);
    }
}
