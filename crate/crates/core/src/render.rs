//! Drawing instructions for the plane and an SVG backend.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::{Assessment, Decision, DynamicFunction, HarmLevel, Overall, PrivacyLevel};
use crate::geometry::{decision_matrix, eval_s};
use crate::store::SCHEMA_VERSION;

pub const CURVE_SAMPLES: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRender {
    pub schema_version: u32,
    pub scenario_id: String,
    pub context: String,
    pub hw_ratio: f64,
    pub h_max: f64,
    pub p_max: f64,
    pub overall: Overall,
    pub blocks: Vec<RenderBlock>,
    /// `(h, s(h))` pairs; empty when the scenario is out of plane.
    pub curve: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderBlock {
    pub privacy: PrivacyLevel,
    pub harm: HarmLevel,
    pub h_lo: f64,
    pub h_hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    /// Whether the scenario touches this block.
    pub applicable: bool,
    /// `b_r / area`.
    pub fill_fraction: f64,
    pub decision: Decision,
    pub label: String,
}

impl RenderBlock {
    pub fn shaded_deploy(&self) -> bool {
        self.applicable && self.decision == Decision::Deploy
    }
}

/// Uniform samples of the curve over `[0, h_max]`.
pub fn curve_samples(f: &DynamicFunction, h_max: f64, n: usize) -> Vec<[f64; 2]> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let h = h_max * i as f64 / (n - 1) as f64;
            [h, eval_s(f, h).expect("samples are non-negative")]
        })
        .collect()
}

pub fn render_plane(a: &Assessment) -> PlaneRender {
    let in_plane = a.overall != Overall::OutOfPlane;
    let blocks = decision_matrix(&a.grid, &a.function)
        .into_iter()
        .map(|s| {
            let b = s.block;
            let applicable = in_plane
                && a.privacy_levels.contains(&b.privacy())
                && a.harm_levels.contains(&b.harm());
            let verdict = match s.decision {
                Decision::Deploy => "deploy",
                Decision::NotDeploy => "not deploy",
            };
            RenderBlock {
                privacy: b.privacy(),
                harm: b.harm(),
                h_lo: b.h_lo(),
                h_hi: b.h_hi(),
                p_lo: b.p_lo(),
                p_hi: b.p_hi(),
                applicable,
                fill_fraction: s.fill_fraction(),
                decision: s.decision,
                label: format!("({}, {}) {verdict}", b.privacy(), b.harm()),
            }
        })
        .collect();
    let h_max = a.grid.h_max();
    PlaneRender {
        schema_version: SCHEMA_VERSION,
        scenario_id: a.scenario_id.clone(),
        context: a.grid.context_label().to_string(),
        hw_ratio: a.grid.hw_ratio(),
        h_max,
        p_max: a.grid.p_max(),
        overall: a.overall,
        blocks,
        curve: if in_plane {
            curve_samples(&a.function, h_max, CURVE_SAMPLES)
        } else {
            Vec::new()
        },
    }
}

const PX_PER_UNIT: f64 = 280.0;
const MARGIN: f64 = 60.0;

/// Plane drawn to scale, so the block aspect ratio is visible.
pub fn to_svg(r: &PlaneRender) -> String {
    let plot_w = r.h_max * PX_PER_UNIT;
    let plot_h = r.p_max * PX_PER_UNIT;
    let width = plot_w + 2.0 * MARGIN;
    let height = plot_h + 2.0 * MARGIN;
    let x = |h: f64| MARGIN + h * PX_PER_UNIT;
    let y = |p: f64| MARGIN + plot_h - p * PX_PER_UNIT;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(
        svg,
        r#"  <title>{} ({} context, H/W={:.6})</title>"#,
        escape(&r.scenario_id),
        escape(&r.context),
        r.hw_ratio
    );
    let _ = writeln!(
        svg,
        r#"  <defs><clipPath id="plot"><rect x="{:.3}" y="{:.3}" width="{plot_w:.3}" height="{plot_h:.3}"/></clipPath></defs>"#,
        MARGIN, MARGIN
    );
    for b in &r.blocks {
        let (class, fill, opacity) = match (b.applicable, b.decision) {
            (false, _) => ("inactive", "none", 0.0),
            (true, Decision::Deploy) => ("deploy", "#2e7d32", b.fill_fraction),
            (true, Decision::NotDeploy) => ("not-deploy", "#9e9e9e", b.fill_fraction),
        };
        let _ = writeln!(
            svg,
            r##"  <rect class="block {class}" data-privacy="{}" data-harm="{}" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}" fill-opacity="{opacity:.6}" stroke="#424242" stroke-width="1"/>"##,
            b.privacy,
            b.harm,
            x(b.h_lo),
            y(b.p_hi),
            (b.h_hi - b.h_lo) * PX_PER_UNIT,
            (b.p_hi - b.p_lo) * PX_PER_UNIT,
        );
        let _ = writeln!(
            svg,
            r#"  <text class="label" x="{:.3}" y="{:.3}" font-size="11" text-anchor="middle">{}</text>"#,
            x(0.5 * (b.h_lo + b.h_hi)),
            y(0.5 * (b.p_lo + b.p_hi)),
            escape(&b.label)
        );
    }
    if !r.curve.is_empty() {
        let points: Vec<String> = r
            .curve
            .iter()
            .map(|[h, s]| format!("{:.3},{:.3}", x(*h), y(*s)))
            .collect();
        let _ = writeln!(
            svg,
            r##"  <polyline class="curve" clip-path="url(#plot)" fill="none" stroke="#c62828" stroke-width="2" points="{}"/>"##,
            points.join(" ")
        );
    }
    let _ = writeln!(
        svg,
        r#"  <text class="axis" x="{:.3}" y="{:.3}" font-size="13" text-anchor="middle">Security Harm</text>"#,
        MARGIN + plot_w / 2.0,
        height - MARGIN / 3.0
    );
    let _ = writeln!(
        svg,
        r#"  <text class="axis" x="{:.3}" y="{:.3}" font-size="13" text-anchor="middle" transform="rotate(-90 {:.3} {:.3})">Privacy Loss</text>"#,
        MARGIN / 3.0,
        MARGIN + plot_h / 2.0,
        MARGIN / 3.0,
        MARGIN + plot_h / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
