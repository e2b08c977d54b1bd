//! Primitives: parameters, the type prior, schedules, mean distributions and
//! dual certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::TieBreak;

/// Segment widths at or below this are dropped when a schedule is built.
pub const MIN_SEGMENT_WIDTH: f64 = 1e-15;

/// Validated model parameters.
///
/// `v_low` and `v_high` are the period-2 values of the good, `cost` is the
/// curvature of the quality cost `c q^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    v_low: f64,
    v_high: f64,
    cost: f64,
    quality_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    #[serde(rename = "vL")]
    v_low: f64,
    #[serde(rename = "vH")]
    v_high: f64,
    c: f64,
    #[serde(rename = "qualityCap", default, skip_serializing_if = "Option::is_none")]
    quality_cap: Option<f64>,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        validate(raw.v_low, raw.v_high, raw.c, raw.quality_cap)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            v_low: p.v_low,
            v_high: p.v_high,
            c: p.cost,
            quality_cap: p.quality_cap,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}

/// Checks `0 < v_L < v_H`, `c > 0` and, when a cap is given, `cap >= 1/c`.
pub fn validate(v_low: f64, v_high: f64, cost: f64, quality_cap: Option<f64>) -> Result<ModelParams> {
    positive("v_L", v_low)?;
    positive("v_H", v_high)?;
    positive("c", cost)?;
    if v_low >= v_high {
        return Err(Error::Ordering { v_low, v_high });
    }
    if let Some(cap) = quality_cap {
        positive("quality cap", cap)?;
        if cap < 1.0 / cost {
            return Err(Error::CapTooSmall { cap, min: 1.0 / cost });
        }
    }
    Ok(ModelParams {
        v_low,
        v_high,
        cost,
        quality_cap,
    })
}

impl ModelParams {
    pub fn new(v_low: f64, v_high: f64, cost: f64) -> Result<Self> {
        validate(v_low, v_high, cost, None)
    }

    pub fn with_quality_cap(self, cap: f64) -> Result<Self> {
        validate(self.v_low, self.v_high, self.cost, Some(cap))
    }

    pub fn v_low(&self) -> f64 {
        self.v_low
    }

    pub fn v_high(&self) -> f64 {
        self.v_high
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn quality_cap(&self) -> Option<f64> {
        self.quality_cap
    }

    /// Posterior mean at which the period-2 monopolist is indifferent: `v_L / v_H`.
    pub fn mu_bar(&self) -> f64 {
        self.v_low / self.v_high
    }

    pub fn delta_v(&self) -> f64 {
        self.v_high - self.v_low
    }

    /// Cost after rescaling values so that `v_H = 1`.
    ///
    /// Revenue satisfies `R(m; v_L, v_H, c) = v_H * R(m; mu_bar, 1, c * v_H)`,
    /// so every threshold depends on `(mu_bar, c * v_H)` only.
    pub fn scaled_cost(&self) -> f64 {
        self.cost * self.v_high
    }
}

/// Uniform prior over types on `[0, 1]` with purchase probability `p(theta) = theta`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Prior;

impl Prior {
    pub fn cdf(&self, theta: f64) -> f64 {
        theta.clamp(0.0, 1.0)
    }

    pub fn density(&self, theta: f64) -> f64 {
        if (0.0..=1.0).contains(&theta) {
            1.0
        } else {
            0.0
        }
    }

    pub fn mean(&self) -> f64 {
        0.5
    }

    /// Probability that type `theta` values the good at `v_H` in period 2.
    pub fn p(&self, theta: f64) -> f64 {
        theta
    }

    pub fn p_prime(&self, _theta: f64) -> f64 {
        1.0
    }

    /// `E[theta | lo <= theta <= hi]`.
    pub fn conditional_mean(&self, lo: f64, hi: f64) -> f64 {
        0.5 * (lo + hi)
    }

    /// `E[(theta - t)^+]`, the integrated survival function of the prior.
    pub fn call_value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.5 - t
        } else if t >= 1.0 {
            0.0
        } else {
            0.5 * (1.0 - t) * (1.0 - t)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Exclusion,
    Pooling,
    Separating,
}

/// Period-1 quality on a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum QualityRule {
    Const { value: f64 },
    Affine { slope: f64, intercept: f64 },
}

impl QualityRule {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            QualityRule::Const { value } => value,
            QualityRule::Affine { slope, intercept } => slope * theta + intercept,
        }
    }
}

/// Period-1 transfer on a segment: a constant or `quad theta^2 + lin theta + constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TransferRule {
    Const { value: f64 },
    Quadratic { quad: f64, lin: f64, constant: f64 },
}

impl TransferRule {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            TransferRule::Const { value } => value,
            TransferRule::Quadratic {
                quad,
                lin,
                constant,
            } => (quad * theta + lin) * theta + constant,
        }
    }

    /// Integral over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            TransferRule::Const { value } => value * (hi - lo),
            TransferRule::Quadratic {
                quad,
                lin,
                constant,
            } => {
                let anti = |t: f64| ((quad / 3.0 * t + lin / 2.0) * t + constant) * t;
                anti(hi) - anti(lo)
            }
        }
    }
}

/// One interval of a schedule.
///
/// Intervals are half-open `[lo, hi)` except the last, which is closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub kind: SegmentKind,
    pub quality: QualityRule,
    pub transfer: TransferRule,
    pub price2: f64,
    /// Posterior mean of the cell; `None` on separating segments, where each type is its own cell.
    pub cell_mean: Option<f64>,
}

impl Segment {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.lo <= theta && theta <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleRegime {
    FirstBest,
    Commitment,
    Limited,
}

/// A period-1 menu plus committed or sequentially chosen period-2 prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub regime: ScheduleRegime,
    pub params: ModelParams,
    pub tie: TieBreak,
    pub segments: Vec<Segment>,
}

impl Schedule {
    /// Drops degenerate segments and checks the partition invariants.
    pub fn new(
        regime: ScheduleRegime,
        params: ModelParams,
        tie: TieBreak,
        segments: Vec<Segment>,
    ) -> Result<Self> {
        let segments: Vec<Segment> = segments
            .into_iter()
            .filter(|s| s.width() > MIN_SEGMENT_WIDTH)
            .collect();
        let s = Schedule {
            regime,
            params,
            tie,
            segments,
        };
        s.check(1e-9)?;
        Ok(s)
    }

    /// Index of the segment holding `theta`.
    pub fn segment_index(&self, theta: f64) -> usize {
        let n = self.segments.len();
        self.segments[..n - 1]
            .iter()
            .position(|s| theta < s.hi)
            .unwrap_or(n - 1)
    }

    pub fn segment_at(&self, theta: f64) -> &Segment {
        &self.segments[self.segment_index(theta)]
    }

    pub fn quality(&self, theta: f64) -> f64 {
        self.segment_at(theta).quality.eval(theta)
    }

    pub fn transfer(&self, theta: f64) -> f64 {
        self.segment_at(theta).transfer.eval(theta)
    }

    pub fn price2(&self, theta: f64) -> f64 {
        self.segment_at(theta).price2
    }

    /// Whether type `theta` faces the low period-2 price and buys for sure.
    pub fn serves_low(&self, theta: f64) -> bool {
        self.price2(theta) == self.params.v_low()
    }

    /// Checks the partition, monotone quality, cell means and the price set.
    pub fn check(&self, tol: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::Schedule(msg));
        let segs = &self.segments;
        if segs.is_empty() {
            return bad("no segments".into());
        }
        if segs[0].lo.abs() > tol || (segs[segs.len() - 1].hi - 1.0).abs() > tol {
            return bad("segments do not cover [0, 1]".into());
        }
        let (vl, vh) = (self.params.v_low(), self.params.v_high());
        let mut prev_q = f64::NEG_INFINITY;
        for (i, s) in segs.iter().enumerate() {
            if s.hi <= s.lo {
                return bad(format!("segment {i} is empty"));
            }
            if i > 0 && (segs[i - 1].hi - s.lo).abs() > tol {
                return bad(format!("gap or overlap before segment {i}"));
            }
            if s.price2 != vl && s.price2 != vh {
                return bad(format!("segment {i} has period-2 price {} outside {{v_L, v_H}}", s.price2));
            }
            let (q_lo, q_hi) = (s.quality.eval(s.lo), s.quality.eval(s.hi));
            if q_lo < -tol || q_hi < q_lo - tol || q_lo < prev_q - tol {
                return bad(format!("quality decreases in segment {i}"));
            }
            prev_q = q_hi;
            match (s.kind, s.cell_mean) {
                (SegmentKind::Separating, None) => {}
                (SegmentKind::Separating, Some(_)) => {
                    return bad(format!("separating segment {i} carries a cell mean"))
                }
                (_, Some(m)) => {
                    if (m - Prior.conditional_mean(s.lo, s.hi)).abs() > tol {
                        return bad(format!("segment {i} cell mean {m} is not the conditional mean"));
                    }
                    if !matches!(s.quality, QualityRule::Const { .. }) {
                        return bad(format!("pooled segment {i} has non-constant quality"));
                    }
                }
                (_, None) => return bad(format!("pooled segment {i} has no cell mean")),
            }
        }
        Ok(())
    }

    /// Type-space segments as `(lo, hi, kind)` triples.
    pub fn layout(&self) -> Vec<(f64, f64, SegmentKind)> {
        self.segments.iter().map(|s| (s.lo, s.hi, s.kind)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

/// One support point of a distribution over posterior means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub m: f64,
    pub g: f64,
}

/// Finite-support distribution of posterior means.
///
/// Construction checks the probability axioms only; Bayes plausibility is a
/// separate check in the verifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeanDistribution {
    atoms: Vec<Atom>,
}

impl MeanDistribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Distribution("empty support".into()));
        }
        let mut total = 0.0;
        for a in &atoms {
            if !(a.m.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&a.m)) {
                return Err(Error::Distribution(format!("support point {} outside [0, 1]", a.m)));
            }
            if !(a.g.is_finite() && a.g >= -1e-12) {
                return Err(Error::Distribution(format!("negative weight {}", a.g)));
            }
            total += a.g;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Distribution(format!("weights sum to {total}")));
        }
        Ok(MeanDistribution { atoms })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(m, g)| Atom { m, g }).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.m * a.g).sum()
    }

    /// `E_G[(m - t)^+]`.
    pub fn call_value(&self, t: f64) -> f64 {
        self.atoms.iter().map(|a| a.g * (a.m - t).max(0.0)).sum()
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.g * f(a.m)).sum()
    }
}

/// Piecewise-linear function on `[0, 1]` given by its breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub breakpoints: Vec<(f64, f64)>,
}

impl DualCertificate {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Distribution("certificate needs two breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Distribution("certificate breakpoints are not increasing".into()));
        }
        Ok(DualCertificate { breakpoints })
    }

    /// Linear interpolation, extended linearly beyond the end breakpoints.
    pub fn eval(&self, m: f64) -> f64 {
        let bp = &self.breakpoints;
        let k = bp.partition_point(|p| p.0 <= m).clamp(1, bp.len() - 1);
        let (x0, y0) = bp[k - 1];
        let (x1, y1) = bp[k];
        y0 + (y1 - y0) * (m - x0) / (x1 - x0)
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// Largest decrease between consecutive slopes (0 when convex).
    pub fn convexity_defect(&self) -> f64 {
        self.slopes()
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    /// `E_F[pi]` under the uniform prior; exact for piecewise-linear `pi`.
    pub fn prior_expectation(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| {
                let lo = w[0].0.max(0.0);
                let hi = w[1].0.min(1.0);
                if hi <= lo {
                    0.0
                } else {
                    0.5 * (self.eval(lo) + self.eval(hi)) * (hi - lo)
                }
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(matches!(ModelParams::new(1.0, 1.0, 1.0), Err(Error::Ordering { .. })));
        assert!(matches!(ModelParams::new(0.0, 1.0, 1.0), Err(Error::NonPositive { .. })));
        assert!(matches!(ModelParams::new(0.5, 1.0, -1.0), Err(Error::NonPositive { .. })));
        assert!(ModelParams::new(0.5, 1.0, f64::NAN).is_err());
        let p = ModelParams::new(0.5, 1.0, 2.0).unwrap();
        assert!(matches!(p.with_quality_cap(0.4), Err(Error::CapTooSmall { .. })));
        assert_eq!(p.with_quality_cap(0.5).unwrap().quality_cap(), Some(0.5));
    }

    #[test]
    fn derived_quantities() {
        let p = ModelParams::new(0.75, 2.0, 0.5).unwrap();
        assert_eq!(p.mu_bar(), 0.375);
        assert_eq!(p.delta_v(), 1.25);
        assert_eq!(p.scaled_cost(), 1.0);
    }

    #[test]
    fn params_serde_round_trip_and_validation() {
        let p = ModelParams::new(0.75, 1.0, 2.0).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"vL\""));
        assert_eq!(serde_json::from_str::<ModelParams>(&text).unwrap(), p);
        assert!(serde_json::from_str::<ModelParams>(r#"{"vL":1,"vH":0.5,"c":1}"#).is_err());
    }

    #[test]
    fn prior_call_value() {
        assert_eq!(Prior.call_value(0.0), 0.5);
        assert_eq!(Prior.call_value(0.5), 0.125);
        assert_eq!(Prior.call_value(1.0), 0.0);
        assert_eq!(Prior.call_value(-1.0), 1.5);
        assert_eq!(Prior.conditional_mean(0.2, 0.6), 0.4);
    }

    fn seg(lo: f64, hi: f64, q: f64, kind: SegmentKind) -> Segment {
        Segment {
            lo,
            hi,
            kind,
            quality: QualityRule::Const { value: q },
            transfer: TransferRule::Const { value: 0.0 },
            price2: 1.0,
            cell_mean: (kind != SegmentKind::Separating).then_some(0.5 * (lo + hi)),
        }
    }

    fn schedule(segments: Vec<Segment>) -> Result<Schedule> {
        let p = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        Schedule::new(ScheduleRegime::Limited, p, TieBreak::FavorHigh, segments)
    }

    #[test]
    fn schedule_invariants() {
        let ok = schedule(vec![
            seg(0.0, 0.5, 0.0, SegmentKind::Exclusion),
            seg(0.5, 1.0, 0.3, SegmentKind::Pooling),
        ])
        .unwrap();
        assert_eq!(ok.segment_index(0.5), 1);
        assert_eq!(ok.segment_index(1.0), 1);
        assert_eq!(ok.quality(0.49), 0.0);

        let gap = schedule(vec![
            seg(0.0, 0.4, 0.0, SegmentKind::Exclusion),
            seg(0.5, 1.0, 0.3, SegmentKind::Pooling),
        ]);
        assert!(gap.is_err());

        let decreasing = schedule(vec![
            seg(0.0, 0.5, 0.4, SegmentKind::Pooling),
            seg(0.5, 1.0, 0.3, SegmentKind::Pooling),
        ]);
        assert!(decreasing.is_err());

        let mut bad_mean = seg(0.5, 1.0, 0.3, SegmentKind::Pooling);
        bad_mean.cell_mean = Some(0.7);
        assert!(schedule(vec![seg(0.0, 0.5, 0.0, SegmentKind::Exclusion), bad_mean]).is_err());

        let mut bad_price = seg(0.5, 1.0, 0.3, SegmentKind::Pooling);
        bad_price.price2 = 0.7;
        assert!(schedule(vec![seg(0.0, 0.5, 0.0, SegmentKind::Exclusion), bad_price]).is_err());
    }

    #[test]
    fn degenerate_segments_are_dropped() {
        let s = schedule(vec![
            seg(0.0, 0.5, 0.0, SegmentKind::Exclusion),
            seg(0.5, 0.5, 0.1, SegmentKind::Pooling),
            seg(0.5, 1.0, 0.3, SegmentKind::Pooling),
        ])
        .unwrap();
        assert_eq!(s.segments.len(), 2);
    }

    #[test]
    fn schedule_json_round_trip() {
        let s = schedule(vec![
            seg(0.0, 0.5, 0.0, SegmentKind::Exclusion),
            seg(0.5, 1.0, 0.3, SegmentKind::Pooling),
        ])
        .unwrap();
        let back: Schedule = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn transfer_integral_is_exact() {
        let t = TransferRule::Quadratic {
            quad: 3.0,
            lin: -1.0,
            constant: 0.5,
        };
        // int_0^1 (3x^2 - x + 0.5) dx = 1 - 0.5 + 0.5
        assert!((t.integral(0.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(TransferRule::Const { value: 2.0 }.integral(0.25, 0.75), 1.0);
    }

    #[test]
    fn distribution_axioms() {
        assert!(MeanDistribution::from_pairs(&[]).is_err());
        assert!(MeanDistribution::from_pairs(&[(0.5, 0.6)]).is_err());
        assert!(MeanDistribution::from_pairs(&[(1.5, 1.0)]).is_err());
        assert!(MeanDistribution::from_pairs(&[(0.2, -0.1), (0.6, 1.1)]).is_err());
        let g = MeanDistribution::from_pairs(&[(0.6, 1.0)]).unwrap();
        assert_eq!(g.mean(), 0.6);
        let g = MeanDistribution::from_pairs(&[(0.25, 0.5), (0.75, 0.5)]).unwrap();
        assert_eq!(g.mean(), 0.5);
        assert_eq!(g.call_value(0.5), 0.125);
        assert_eq!(g.expectation(|m| m * m), 0.3125);
    }

    #[test]
    fn certificate_geometry() {
        assert!(DualCertificate::new(vec![(0.0, 0.0)]).is_err());
        assert!(DualCertificate::new(vec![(0.5, 0.0), (0.5, 1.0)]).is_err());
        let pi = DualCertificate::new(vec![(0.0, 0.0), (0.5, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(pi.eval(0.75), 0.5);
        assert_eq!(pi.eval(1.5), 2.0);
        assert_eq!(pi.slopes(), vec![0.0, 2.0]);
        assert_eq!(pi.convexity_defect(), 0.0);
        assert_eq!(pi.prior_expectation(), 0.25);
        let concave = DualCertificate::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(concave.convexity_defect(), 2.0);
    }
}
