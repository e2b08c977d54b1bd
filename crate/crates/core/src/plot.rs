//! Quality schedules as an SVG figure plus a JSON sidecar with the exact segments.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::commitment::{commitment_schedule, first_best_schedule};
use crate::error::Result;
use crate::limited_commitment::limited_schedule;
use crate::model::{ModelParams, QualityRule, Schedule, ScheduleRegime, SegmentKind};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const SAMPLES_PER_UNIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlotSegment {
    pub lo: f64,
    pub hi: f64,
    pub kind: SegmentKind,
    pub quality: QualityRule,
    pub price2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotCurve {
    pub regime: ScheduleRegime,
    pub segments: Vec<PlotSegment>,
}

/// Everything drawn in the figure, in numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub params: ModelParams,
    pub curves: Vec<PlotCurve>,
}

fn schedule_for(params: &ModelParams, regime: ScheduleRegime) -> Result<Schedule> {
    match regime {
        ScheduleRegime::FirstBest => first_best_schedule(params),
        ScheduleRegime::Commitment => commitment_schedule(params),
        ScheduleRegime::Limited => limited_schedule(params),
    }
}

pub fn plot_data(params: &ModelParams, regimes: &[ScheduleRegime]) -> Result<PlotData> {
    let curves = regimes
        .iter()
        .map(|&regime| {
            let s = schedule_for(params, regime)?;
            Ok(PlotCurve {
                regime,
                segments: s
                    .segments
                    .iter()
                    .map(|g| PlotSegment {
                        lo: g.lo,
                        hi: g.hi,
                        kind: g.kind,
                        quality: g.quality,
                        price2: g.price2,
                    })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PlotData {
        params: *params,
        curves,
    })
}

fn style(regime: ScheduleRegime) -> (&'static str, &'static str, &'static str) {
    match regime {
        ScheduleRegime::FirstBest => ("#1b9e77", "6 4", "first best"),
        ScheduleRegime::Commitment => ("#7570b3", "2 3", "full commitment"),
        ScheduleRegime::Limited => ("#d95f02", "", "limited commitment"),
    }
}

/// Renders quality against type, one path per segment so jumps stay visible.
pub fn render_svg(data: &PlotData) -> String {
    let q_max = data
        .curves
        .iter()
        .flat_map(|c| c.segments.iter())
        .map(|s| s.quality.eval(s.hi).max(s.quality.eval(s.lo)))
        .fold(0.0_f64, f64::max)
        .max(1e-9)
        * 1.05;
    let px = |t: f64| MARGIN + t * (WIDTH - 2.0 * MARGIN);
    let py = |q: f64| HEIGHT - MARGIN - q / q_max * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (px(0.0), px(1.0), py(0.0), py(q_max));
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            px(t),
            y0 + 16.0
        );
        let q = q_max * t;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{q:.3}</text>"#,
            x0 - 6.0,
            py(q) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">type θ</text>"#,
        px(0.5),
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">quality q(θ)</text>"#,
        py(q_max / 2.0),
        py(q_max / 2.0)
    );

    for (k, curve) in data.curves.iter().enumerate() {
        let (color, dash, label) = style(curve.regime);
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        for seg in &curve.segments {
            let n = ((seg.hi - seg.lo) * SAMPLES_PER_UNIT as f64).ceil().max(1.0) as usize;
            let mut d = String::new();
            for i in 0..=n {
                let t = seg.lo + (seg.hi - seg.lo) * i as f64 / n as f64;
                let cmd = if i == 0 { 'M' } else { 'L' };
                let _ = write!(d, "{cmd}{:.2},{:.2} ", px(t), py(seg.quality.eval(t)));
            }
            let _ = writeln!(
                svg,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"{dash_attr}/>"#,
                d.trim_end()
            );
        }
        let ly = MARGIN + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<path d="M{:.2},{ly:.2} L{:.2},{ly:.2}" stroke="{color}" stroke-width="2"{dash_attr}/>"#,
            MARGIN + 12.0,
            MARGIN + 40.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{label}</text>"#,
            MARGIN + 46.0,
            ly + 4.0
        );
    }
    if let Some(curve) = data
        .curves
        .iter()
        .find(|c| c.regime == ScheduleRegime::Limited)
        .or_else(|| data.curves.last())
    {
        // Product line: which type intervals share a product.
        let (top, h) = (28.0, 10.0);
        for seg in &curve.segments {
            let fill = match seg.kind {
                SegmentKind::Exclusion => "#d9d9d9",
                SegmentKind::Pooling => "#fdae61",
                SegmentKind::Separating => "#abd9e9",
            };
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{h:.2}" fill="{fill}" stroke="black" stroke-width="0.5"/>"#,
                px(seg.lo),
                px(seg.hi) - px(seg.lo)
            );
        }
    }
    let p = &data.params;
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="18" text-anchor="middle">v_L = {}, v_H = {}, c = {}</text>"#,
        WIDTH / 2.0,
        p.v_low(),
        p.v_high(),
        p.cost()
    );
    svg.push_str("</svg>\n");
    svg
}
