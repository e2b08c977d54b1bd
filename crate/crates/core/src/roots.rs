//! Real roots of quadratics and bracket selection.

use crate::error::{Error, Result};

/// Real roots of `a x^2 + b x + c`, ascending. A double root is returned once.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    let scale = (b * b).max((4.0 * a * c).abs()).max(f64::MIN_POSITIVE);
    if disc < -1e-14 * scale {
        return vec![];
    }
    if disc <= 1e-14 * scale {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 {
        let s = (disc.sqrt()) / (2.0 * a);
        (-s, s)
    } else {
        (q / a, c / q)
    };
    if r1 <= r2 {
        vec![r1, r2]
    } else {
        vec![r2, r1]
    }
}

/// Which ends of a bracket are admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ends {
    Closed,
    OpenLow,
    OpenHigh,
}

/// The unique root of `a x^2 + b x + c` in the bracket, widened by `tol`.
///
/// Roots within `tol` of a closed end are clamped onto it. Zero or two
/// distinct admissible roots give [`Error::NoRoot`].
pub fn root_in_bracket(
    equation: &'static str,
    coeffs: [f64; 3],
    lo: f64,
    hi: f64,
    ends: Ends,
    tol: f64,
) -> Result<f64> {
    let admissible: Vec<f64> = quadratic_roots(coeffs[0], coeffs[1], coeffs[2])
        .into_iter()
        .filter(|&r| {
            let low_ok = match ends {
                Ends::OpenLow => r > lo + tol,
                _ => r >= lo - tol,
            };
            let high_ok = match ends {
                Ends::OpenHigh => r < hi - tol,
                _ => r <= hi + tol,
            };
            low_ok && high_ok
        })
        .collect();
    match admissible.as_slice() {
        [r] => Ok(r.clamp(lo, hi)),
        _ => Err(Error::NoRoot { equation, lo, hi }),
    }
}
