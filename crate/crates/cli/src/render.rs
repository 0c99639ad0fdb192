//! Deterministic SVG drawings of partitions, overlaps and nest layouts.

use std::fmt::Write;

use plypart_core::cost::NestLayout;
use plypart_core::geometry::{chord_segments, project_polygon};
use plypart_core::model::seam_to_line;
use plypart_core::search::{max_stacking_depth, overlap_bands};
use plypart_core::{Design, ManufacturingConfig, Ply, Point2, StayOutZone};

const PANEL: f64 = 320.0;
const MARGIN: f64 = 24.0;
const COLUMNS: usize = 4;

const STYLE: &str = "<style>\
.outline{fill:#f4f1e8;stroke:#333;stroke-width:1}\
.stayout{fill:#222;stroke:none}\
.seam{stroke:#b22;stroke-width:1}\
.overlap{fill:#e07a1f;fill-opacity:0.45;stroke:none}\
.stack{fill:#1f4fe0;fill-opacity:0.18;stroke:none}\
.spool{fill:none;stroke:#333;stroke-width:1}\
.trim{fill:#999;stroke:none}\
.piece{fill:#f4f1e8;stroke:#333;stroke-width:0.5}\
text{font-family:monospace;font-size:11px}\
</style>\n";

/// Maps world coordinates into a panel, y up.
#[derive(Debug, Clone, Copy)]
struct Frame {
    min: Point2,
    max_y: f64,
    scale: f64,
    dx: f64,
    dy: f64,
}

impl Frame {
    fn fit<'a>(pts: impl IntoIterator<Item = &'a Point2>, width: f64, height: f64, dx: f64, dy: f64) -> Self {
        let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in pts {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.x.is_finite() {
            lo = Point2::new(0.0, 0.0);
            hi = Point2::new(1.0, 1.0);
        }
        let span = ((hi.x - lo.x) / width).max((hi.y - lo.y) / height).max(1e-12);
        Self {
            min: lo,
            max_y: hi.y,
            scale: 1.0 / span,
            dx,
            dy,
        }
    }

    fn map(&self, p: Point2) -> (f64, f64) {
        (self.dx + (p.x - self.min.x) * self.scale, self.dy + (self.max_y - p.y) * self.scale)
    }

    fn points(&self, poly: &[Point2]) -> String {
        let mut s = String::new();
        for (i, &p) in poly.iter().enumerate() {
            let (x, y) = self.map(p);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.3},{y:.3}");
        }
        s
    }
}

fn polygon(out: &mut String, frame: &Frame, class: &str, poly: &[Point2]) {
    let _ = writeln!(out, r#"<polygon class="{class}" points="{}"/>"#, frame.points(poly));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n\
{STYLE}{body}</svg>\n"
    )
}

/// Drawn pieces of the seam at `offset`: its chords inside the ply, or the
/// whole line across the ply's fiber extent when it only touches the
/// outline (boundary seams).
fn seam_segments(ply: &Ply, offset: f64) -> Vec<[Point2; 2]> {
    let line = seam_to_line(ply, offset);
    let chords = chord_segments(&line, ply.polygon());
    if !chords.is_empty() {
        return chords;
    }
    let d = ply.direction();
    let foot = ply.origin() + ply.transverse() * offset;
    let along = project_polygon(ply.polygon(), d).expect("validated polygon");
    let t0 = foot.dot(d);
    vec![[foot + d * (along.lo - t0), foot + d * (along.hi - t0)]]
}

/// One panel per ply: outline, stay-outs, overlap bands and seam lines.
pub fn render_seams(design: &Design, plies: &[Ply], zones: &[StayOutZone], config: &ManufacturingConfig) -> String {
    let mut ordered: Vec<&Ply> = plies.iter().collect();
    ordered.sort_by(|a, b| (a.stack_index, &a.id).cmp(&(b.stack_index, &b.id)));
    let bands = overlap_bands(design, plies, config);
    let all: Vec<Point2> = plies.iter().flat_map(|p| p.polygon().iter().copied()).collect();
    let cols = ordered.len().clamp(1, COLUMNS);
    let rows = ordered.len().div_ceil(cols).max(1);
    let cell = PANEL + MARGIN;
    let mut body = String::new();
    for (k, ply) in ordered.iter().enumerate() {
        let (dx, dy) = (MARGIN + (k % cols) as f64 * cell, MARGIN + (k / cols) as f64 * cell);
        let frame = Frame::fit(&all, PANEL, PANEL - MARGIN, dx, dy + MARGIN);
        let _ = writeln!(body, r#"<g class="ply" id="{}">"#, escape(&ply.id));
        let _ = writeln!(
            body,
            r#"<text x="{dx:.3}" y="{:.3}">{} ({:.1} deg)</text>"#,
            dy + 12.0,
            escape(&ply.id),
            ply.fiber_angle().to_degrees()
        );
        polygon(&mut body, &frame, "outline", ply.polygon());
        for z in zones {
            polygon(&mut body, &frame, "stayout", z.polygon());
        }
        if let Some((_, seams)) = bands.iter().find(|(id, _)| *id == ply.id) {
            for poly in seams.iter().flatten() {
                polygon(&mut body, &frame, "overlap", poly);
            }
        }
        for &x in design.offsets(&ply.id).unwrap_or(&[]) {
            for [a, b] in seam_segments(ply, x) {
                let ((x1, y1), (x2, y2)) = (frame.map(a), frame.map(b));
                let _ = writeln!(body, r#"<line class="seam" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#);
            }
        }
        body.push_str("</g>\n");
    }
    document(MARGIN + cols as f64 * cell, MARGIN + rows as f64 * cell, &body)
}

/// All overlap bands of the layup in one frame; stacked bands darken.
pub fn render_overlaps(design: &Design, plies: &[Ply], zones: &[StayOutZone], config: &ManufacturingConfig) -> String {
    let all: Vec<Point2> = plies.iter().flat_map(|p| p.polygon().iter().copied()).collect();
    let frame = Frame::fit(&all, 2.0 * PANEL, 2.0 * PANEL, MARGIN, 2.0 * MARGIN);
    let depth = max_stacking_depth(design, plies, config);
    let mut body = String::new();
    let _ = writeln!(body, r#"<text class="depth" x="{MARGIN:.3}" y="{:.3}">max stacking depth: {depth}</text>"#, MARGIN);
    let mut ordered: Vec<&Ply> = plies.iter().collect();
    ordered.sort_by(|a, b| (a.stack_index, &a.id).cmp(&(b.stack_index, &b.id)));
    for ply in &ordered {
        polygon(&mut body, &frame, "outline", ply.polygon());
    }
    for z in zones {
        polygon(&mut body, &frame, "stayout", z.polygon());
    }
    let bands = overlap_bands(design, plies, config);
    for ply in &ordered {
        if let Some((_, seams)) = bands.iter().find(|(id, _)| *id == ply.id) {
            for poly in seams.iter().flatten() {
                polygon(&mut body, &frame, "stack", poly);
            }
        }
    }
    document(2.0 * PANEL + 2.0 * MARGIN, 2.0 * PANEL + 3.0 * MARGIN, &body)
}

/// The spool band with every placed piece; uncovered band area is trim.
pub fn render_nest(layout: &NestLayout) -> String {
    let length = layout.used_length.max(1e-9);
    let band = [
        Point2::new(0.0, 0.0),
        Point2::new(length, 0.0),
        Point2::new(length, layout.spool_width),
        Point2::new(0.0, layout.spool_width),
    ];
    let width = 4.0 * PANEL;
    let height = (width * layout.spool_width / length).clamp(40.0, 2.0 * PANEL);
    let frame = Frame::fit(&band, width, height, MARGIN, 2.0 * MARGIN);
    let mut body = String::new();
    let _ = writeln!(
        body,
        r#"<text x="{MARGIN:.3}" y="{MARGIN:.3}">spool width {} length {:.6} trim area {:.6}</text>"#,
        layout.spool_width, layout.used_length, layout.trim_area
    );
    let _ = writeln!(body, r#"<g data-trim-area="{:.9}">"#, layout.trim_area);
    polygon(&mut body, &frame, "trim", &band);
    for p in &layout.placements {
        let _ = writeln!(
            body,
            r#"<polygon class="piece" data-piece="{}" points="{}"/>"#,
            escape(&p.piece),
            frame.points(&p.polygon)
        );
    }
    polygon(&mut body, &frame, "spool", &band);
    body.push_str("</g>\n");
    let (_, bottom) = frame.map(Point2::new(0.0, 0.0));
    document(width + 2.0 * MARGIN, bottom + MARGIN, &body)
}
