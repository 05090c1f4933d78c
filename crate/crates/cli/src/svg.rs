//! SVG mesh renders.

use std::fmt::Write as _;

use anisomesh::geometry::Point2;
use anisomesh::mesh::PolyMesh;

/// Eight stops sampled from viridis.
const RAMP: [(u8, u8, u8); 8] = [
    (68, 1, 84),
    (70, 50, 126),
    (54, 92, 141),
    (39, 127, 142),
    (31, 161, 135),
    (74, 193, 109),
    (160, 218, 57),
    (253, 231, 37),
];

pub fn ramp(t: f64) -> (u8, u8, u8) {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

#[derive(Debug, Clone, Default)]
pub struct RenderOptions {
    /// Crop to this box instead of the mesh bounds.
    pub viewport: Option<(Point2, Point2)>,
    /// Colour by log10 of the scalar.
    pub log_scale: bool,
    /// Text placed in a leading comment, e.g. a generation timestamp.
    pub header: Option<String>,
    pub width: f64,
}

impl RenderOptions {
    pub fn new() -> Self {
        RenderOptions { width: 800.0, ..Default::default() }
    }
}

fn mesh_bounds(mesh: &PolyMesh) -> (Point2, Point2) {
    let coords = mesh.coords();
    let mut lo = coords[0];
    let mut hi = coords[0];
    for p in &coords {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// One closed path per element, filled from `values` if given.
pub fn render_svg(mesh: &PolyMesh, values: Option<&[f64]>, options: &RenderOptions) -> String {
    let (lo, hi) = options.viewport.unwrap_or_else(|| mesh_bounds(mesh));
    let width = if options.width > 0.0 { options.width } else { 800.0 };
    let span = (hi - lo).map(|d| if d > 0.0 { d } else { 1.0 });
    let scale = width / span.x;
    let height = span.y * scale;
    let to_px = |p: &Point2| ((p.x - lo.x) * scale, (hi.y - p.y) * scale);

    let transform = |v: f64| if options.log_scale { v.max(f64::MIN_POSITIVE).log10() } else { v };
    let range = values.map(|vals| {
        let t: Vec<f64> = vals.iter().map(|&v| transform(v)).filter(|v| v.is_finite()).collect();
        let a = t.iter().copied().fold(f64::INFINITY, f64::min);
        let b = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (a, b)
    });

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    if let Some(h) = &options.header {
        let _ = writeln!(out, "<!-- {} -->", h.replace("--", "- -"));
    }
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    let stroke = (0.6 * width / 800.0).max(0.05);
    let _ = writeln!(out, r#"<g stroke="black" stroke-width="{stroke:.3}" stroke-linejoin="round">"#);
    for elem in mesh.elements() {
        let (blo, bhi) = elem.polygon.bounding_box();
        if bhi.x < lo.x || blo.x > hi.x || bhi.y < lo.y || blo.y > hi.y {
            continue;
        }
        let mut d = String::new();
        for (i, v) in elem.polygon.vertices().iter().enumerate() {
            let (x, y) = to_px(v);
            let _ = write!(d, "{}{x:.3} {y:.3} ", if i == 0 { "M" } else { "L" });
        }
        d.push('Z');
        let fill = match (values, range) {
            (Some(vals), Some((a, b))) => {
                let t = if b > a { (transform(vals[elem.id]) - a) / (b - a) } else { 0.5 };
                let (r, g, bl) = ramp(t);
                format!("#{r:02x}{g:02x}{bl:02x}")
            }
            _ => "none".to_string(),
        };
        let _ = writeln!(out, r#"<path d="{d}" fill="{fill}"/>"#);
    }
    out.push_str("</g>\n</svg>\n");
    out
}
