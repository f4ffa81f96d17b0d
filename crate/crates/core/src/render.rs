//! SVG 1.1 output: trajectories as gray polylines, flow vectors and
//! component arrows colored by heading around a color wheel.

use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::components::ComponentModel;
use crate::flowfield::FlowField;
use crate::ingest::Dataset;
use crate::patterns::{PatternSet, Signature};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid render setting: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    /// Fraction of trajectories drawn in the background, in `(0, 1]`.
    pub sample_fraction: f64,
    /// Emit one document per pattern besides the overview.
    pub per_pattern: bool,
    pub legend: bool,
    pub seed: u64,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            width: 800,
            height: 800,
            sample_fraction: 0.25,
            per_pattern: true,
            legend: true,
            seed: 0,
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(RenderError::InvalidSpec(format!(
                "sample fraction {} must be in (0, 1]",
                self.sample_fraction
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidSpec("canvas size must be positive".into()));
        }
        Ok(())
    }
}

/// Hue in `[0, 360)` for a heading in degrees.
pub fn hue_for_heading(heading_deg: f64) -> f64 {
    let h = heading_deg.rem_euclid(360.0);
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// RGB for hue in degrees, saturation and lightness in `[0, 1]`.
pub fn hsl_to_rgb(h: f64, s: f64, l: f64) -> [u8; 3] {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = hue_for_heading(h) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    [r, g, b].map(|v| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// `#rrggbb` color of a heading.
pub fn heading_color(heading_deg: f64) -> String {
    let [r, g, b] = hsl_to_rgb(heading_deg, 0.9, 0.45);
    format!("#{r:02x}{g:02x}{b:02x}")
}

const MARGIN: f64 = 20.0;
const TRAJECTORY_GRAY: &str = "#c8c8c8";
const INACTIVE_GRAY: &str = "#d0d0d0";
const ARROW_PX: f64 = 12.0;

/// World-to-canvas mapping with y pointing up in world space.
#[derive(Debug, Clone, Copy)]
struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
    off_x: f64,
    off_y: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>, spec: &RenderSpec) -> Self {
        let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        if !min_x.is_finite() {
            (min_x, max_x, min_y, max_y) = (0.0, 1.0, 0.0, 1.0);
        }
        let w = (spec.width as f64 - 2.0 * MARGIN).max(1.0);
        let h = (spec.height as f64 - 2.0 * MARGIN).max(1.0);
        let span_x = (max_x - min_x).max(1e-12);
        let span_y = (max_y - min_y).max(1e-12);
        let scale = (w / span_x).min(h / span_y);
        Self {
            min_x,
            max_y,
            scale,
            off_x: MARGIN + (w - span_x * scale) / 2.0,
            off_y: MARGIN + (h - span_y * scale) / 2.0,
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (self.off_x + (x - self.min_x) * self.scale, self.off_y + (self.max_y - y) * self.scale)
    }
}

fn dataset_frame<T: Scalar>(dataset: &Dataset<T>, extra: impl Iterator<Item = (f64, f64)>, spec: &RenderSpec) -> Frame {
    Frame::fit(dataset.points().map(|p| (p.x.as_f64(), p.y.as_f64())).chain(extra), spec)
}

fn open(out: &mut String, spec: &RenderSpec, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = spec.width,
        h = spec.height
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, spec.width, spec.height);
}

fn close(out: &mut String) {
    out.push_str("</svg>\n");
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn background<T: Scalar>(out: &mut String, dataset: &Dataset<T>, frame: &Frame, spec: &RenderSpec) {
    let n = dataset.len();
    if n == 0 {
        return;
    }
    let amount = ((n as f64 * spec.sample_fraction).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chosen = index::sample(&mut rng, n, amount).into_vec();
    chosen.sort_unstable();
    let _ = writeln!(out, r#"<g class="trajectories" fill="none" stroke="{TRAJECTORY_GRAY}" stroke-width="0.5">"#);
    for i in chosen {
        let pts: Vec<String> = dataset.trajectories[i]
            .points
            .iter()
            .map(|p| {
                let (x, y) = frame.px(p.x.as_f64(), p.y.as_f64());
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}"/>"#, pts.join(" "));
    }
    out.push_str("</g>\n");
}

fn legend(out: &mut String, spec: &RenderSpec) {
    let r = 30.0;
    let cx = spec.width as f64 - MARGIN - r;
    let cy = MARGIN + r;
    let _ = writeln!(out, r#"<g class="legend">"#);
    for i in 0..36 {
        let a0 = (i as f64 * 10.0).to_radians();
        let a1 = ((i + 1) as f64 * 10.0).to_radians();
        let (x0, y0) = (cx + r * a0.cos(), cy - r * a0.sin());
        let (x1, y1) = (cx + r * a1.cos(), cy - r * a1.sin());
        let _ = writeln!(
            out,
            r#"<path d="M {cx:.2} {cy:.2} L {x0:.2} {y0:.2} A {r} {r} 0 0 0 {x1:.2} {y1:.2} Z" fill="{}" stroke="none"/>"#,
            heading_color(i as f64 * 10.0 + 5.0)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif">0°</text>"#,
        cx + r + 2.0,
        cy + 3.0
    );
    out.push_str("</g>\n");
}

fn flow_segments<T: Scalar>(out: &mut String, field: &FlowField<T>, labels: &[usize], pattern: usize, frame: &Frame) {
    let _ = writeln!(out, r#"<g class="pattern" id="pattern-{pattern}" stroke-width="1">"#);
    for (f, _) in field.flows.iter().zip(labels).filter(|(_, &l)| l == pattern) {
        let Some(h) = f.heading() else { continue };
        let (x1, y1) = frame.px(f.x.as_f64(), f.y.as_f64());
        let (x2, y2) = frame.px((f.x + f.u).as_f64(), (f.y + f.v).as_f64());
        let _ = writeln!(
            out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{}"/>"#,
            heading_color(h.as_f64())
        );
    }
    out.push_str("</g>\n");
}

/// Overview plus, when enabled, one document per non-noise pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPatterns {
    pub overview: String,
    pub per_pattern: Vec<(usize, String)>,
}

pub fn render_patterns<T: Scalar>(
    patterns: &PatternSet<T>,
    field: &FlowField<T>,
    dataset: &Dataset<T>,
    spec: &RenderSpec,
) -> Result<RenderedPatterns, RenderError> {
    spec.validate()?;
    let frame = dataset_frame(dataset, std::iter::empty(), spec);
    let document = |ids: &[usize], title: &str| {
        let mut out = String::new();
        open(&mut out, spec, title);
        background(&mut out, dataset, &frame, spec);
        for &id in ids {
            flow_segments(&mut out, field, &patterns.flow_labels, id, &frame);
        }
        if spec.legend {
            legend(&mut out, spec);
        }
        close(&mut out);
        out
    };
    let ids: Vec<usize> = patterns.non_noise().map(|p| p.id).collect();
    let overview = document(&ids, "motion patterns");
    let per_pattern = if spec.per_pattern {
        ids.iter()
            .map(|&id| (id, document(&[id], &format!("motion pattern {id}"))))
            .collect()
    } else {
        Vec::new()
    };
    Ok(RenderedPatterns { overview, per_pattern })
}

fn arrow<T: Scalar>(out: &mut String, frame: &Frame, x: T, y: T, heading: T, color: &str, id: usize) {
    let (px, py) = frame.px(x.as_f64(), y.as_f64());
    let a = heading.as_f64().to_radians();
    let (dx, dy) = (a.cos(), -a.sin());
    let (tx, ty) = (px + ARROW_PX * dx, py + ARROW_PX * dy);
    let (bx, by) = (tx - 4.0 * dx, ty - 4.0 * dy);
    let (nx, ny) = (-dy * 2.5, dx * 2.5);
    let _ = writeln!(
        out,
        concat!(
            r#"<g class="component" id="component-{id}">"#,
            r#"<line x1="{px:.2}" y1="{py:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="{c}" stroke-width="1.5"/>"#,
            r#"<polygon points="{tx:.2},{ty:.2} {l1:.2},{l2:.2} {r1:.2},{r2:.2}" fill="{c}"/></g>"#
        ),
        id = id,
        px = px,
        py = py,
        bx = bx,
        by = by,
        tx = tx,
        ty = ty,
        l1 = bx + nx,
        l2 = by + ny,
        r1 = bx - nx,
        r2 = by - ny,
        c = color
    );
}

fn marker<T: Scalar>(out: &mut String, frame: &Frame, x: T, y: T, color: &str, id: usize) {
    let (px, py) = frame.px(x.as_f64(), y.as_f64());
    let _ = writeln!(
        out,
        r#"<circle class="stationary" id="component-{id}" cx="{px:.2}" cy="{py:.2}" r="2" fill="{color}"/>"#
    );
}

fn component_frame<T: Scalar>(model: &ComponentModel<T>, dataset: Option<&Dataset<T>>, spec: &RenderSpec) -> Frame {
    let centers = model.components.iter().map(|c| (c.mu_x.as_f64(), c.mu_y.as_f64()));
    match dataset {
        Some(d) => dataset_frame(d, centers, spec),
        None => Frame::fit(centers, spec),
    }
}

/// One heading-colored arrow per component with a defined heading.
pub fn render_components<T: Scalar>(
    model: &ComponentModel<T>,
    dataset: Option<&Dataset<T>>,
    spec: &RenderSpec,
) -> Result<String, RenderError> {
    spec.validate()?;
    let frame = component_frame(model, dataset, spec);
    let mut out = String::new();
    open(&mut out, spec, "motion components");
    if let Some(d) = dataset {
        background(&mut out, d, &frame, spec);
    }
    out.push_str("<g class=\"components\">\n");
    for c in &model.components {
        if let Some(h) = c.heading {
            arrow(&mut out, &frame, c.mu_x, c.mu_y, h, &heading_color(h.as_f64()), c.id);
        }
    }
    out.push_str("</g>\n");
    if spec.legend {
        legend(&mut out, spec);
    }
    close(&mut out);
    Ok(out)
}

/// Signature members colored by heading, the owner in black, the rest gray.
pub fn render_signature<T: Scalar>(
    model: &ComponentModel<T>,
    signature: &Signature,
    dataset: Option<&Dataset<T>>,
    spec: &RenderSpec,
) -> Result<String, RenderError> {
    spec.validate()?;
    let frame = component_frame(model, dataset, spec);
    let mut out = String::new();
    open(&mut out, spec, &format!("signature of component {}", signature.owner));
    if let Some(d) = dataset {
        background(&mut out, d, &frame, spec);
    }
    let mut groups = [String::new(), String::new(), String::new()];
    for c in &model.components {
        let (slot, color) = if c.id == signature.owner {
            (2, "#000000".to_string())
        } else if signature.contains(c.id) {
            (1, c.heading.map(|h| heading_color(h.as_f64())).unwrap_or_else(|| "#000000".into()))
        } else {
            (0, INACTIVE_GRAY.to_string())
        };
        match c.heading {
            Some(h) => arrow(&mut groups[slot], &frame, c.mu_x, c.mu_y, h, &color, c.id),
            None => marker(&mut groups[slot], &frame, c.mu_x, c.mu_y, &color, c.id),
        }
    }
    for (class, body) in ["grayed", "members", "owner"].iter().zip(&groups) {
        let _ = writeln!(out, r#"<g class="{class}">"#);
        out.push_str(body);
        out.push_str("</g>\n");
    }
    if spec.legend {
        legend(&mut out, spec);
    }
    close(&mut out);
    Ok(out)
}
