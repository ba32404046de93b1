use std::fmt::Write;

use serde::Serialize;

use crate::geometry::{Domain, GeneratorSet, Point2, PowerDiagram};

/// Fixed-precision number with trailing zeros removed, so output is byte-stable.
fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn side_colour(sides: usize) -> &'static str {
    match sides {
        0..=3 => "#fee5d9",
        4 => "#fcbba1",
        5 => "#fc9272",
        6 => "#9ecae1",
        7 => "#6baed6",
        _ => "#3182bd",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SvgCell {
    pub generator: usize,
    pub vertices: Vec<Point2>,
    pub sides: usize,
}

/// A power diagram ready to draw: cells shaded by side count, generator
/// dots, and a circle of radius `√(−w)` for each negative weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SvgScene {
    /// Lower-left corner and size of the domain's bounding box.
    pub origin: Point2,
    pub size: (f64, f64),
    pub outline: Vec<Point2>,
    pub cells: Vec<SvgCell>,
    pub generators: Vec<Point2>,
    /// `(centre, radius)`.
    pub weight_circles: Vec<(Point2, f64)>,
}

/// Scene for `diagram`; weight circles are drawn when `show_weights` is set.
pub fn diagram_scene(
    domain: &Domain,
    diagram: &PowerDiagram,
    gens: &GeneratorSet,
    show_weights: bool,
) -> SvgScene {
    let (lo, hi) = domain.bounding_box();
    let cells = diagram
        .cells
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| SvgCell {
            generator: c.generator_index,
            vertices: c.polygon.vertices().to_vec(),
            sides: c.side_count(),
        })
        .collect();
    let weight_circles = if show_weights {
        (0..gens.len())
            .filter(|&i| gens.weight(i) < 0.0)
            .map(|i| (gens.position(i), (-gens.weight(i)).sqrt()))
            .collect()
    } else {
        Vec::new()
    };
    SvgScene {
        origin: lo,
        size: (hi.x - lo.x, hi.y - lo.y),
        outline: domain.boundary().vertices().to_vec(),
        cells,
        generators: gens.positions().to_vec(),
        weight_circles,
    }
}

fn points_attr(vs: &[Point2]) -> String {
    vs.iter()
        .map(|p| format!("{},{}", num(p.x), num(p.y)))
        .collect::<Vec<_>>()
        .join(" ")
}

impl SvgScene {
    /// The `viewBox` is the domain's bounding box; y is flipped inside it so
    /// north is up.
    pub fn render(&self) -> String {
        let (w, h) = self.size;
        let scale = w.max(h);
        let stroke = num(0.002 * scale);
        let dot = num(0.006 * scale);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}" height="{}">"##,
            num(self.origin.x),
            num(self.origin.y),
            num(w),
            num(h),
            num(600.0 * w / scale),
            num(600.0 * h / scale)
        );
        let _ = writeln!(
            s,
            r##"<g transform="matrix(1 0 0 -1 0 {})">"##,
            num(2.0 * self.origin.y + h)
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                r##"<polygon data-generator="{}" data-sides="{}" points="{}" fill="{}" stroke="#333" stroke-width="{stroke}"/>"##,
                c.generator,
                c.sides,
                points_attr(&c.vertices),
                side_colour(c.sides)
            );
        }
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="none" stroke="#000" stroke-width="{}"/>"##,
            points_attr(&self.outline),
            num(0.004 * scale)
        );
        for &(p, r) in &self.weight_circles {
            let _ = writeln!(
                s,
                r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#555" stroke-dasharray="{stroke}" stroke-width="{stroke}"/>"##,
                num(p.x),
                num(p.y),
                num(r)
            );
        }
        for p in &self.generators {
            let _ = writeln!(
                s,
                r##"<circle cx="{}" cy="{}" r="{dot}" fill="#000"/>"##,
                num(p.x),
                num(p.y)
            );
        }
        s.push_str("</g>\n</svg>\n");
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A line chart with linear axes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl LinePlot {
    pub fn render(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 420.0;
        const L: f64 = 80.0;
        const R: f64 = 150.0;
        const T: f64 = 40.0;
        const B: f64 = 60.0;
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let sx = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
        let sy = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"##
        );
        let _ = writeln!(s, r##"<rect width="{W}" height="{H}" fill="#fff"/>"##);
        let _ = writeln!(
            s,
            r##"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"##,
            num((W - R + L) / 2.0),
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="#000"/>"##,
            W - L - R,
            H - T - B
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let (px, py) = (num(sx(xv)), num(sy(yv)));
            let _ = writeln!(
                s,
                r##"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="#000"/><text x="{px}" y="{}" text-anchor="middle">{}</text>"##,
                H - B,
                H - B + 5.0,
                H - B + 20.0,
                tick_label(xv)
            );
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{py}" x2="{L}" y2="{py}" stroke="#000"/><text x="{}" y="{py}" text-anchor="end" dominant-baseline="middle">{}</text>"##,
                L - 5.0,
                L - 8.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##,
            num((W - R + L) / 2.0),
            H - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r##"<text transform="translate(20 {}) rotate(-90)" text-anchor="middle">{}</text>"##,
            num((H - B + T) / 2.0),
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{},{}", num(sx(x)), num(sy(y))))
                .collect();
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"##,
                path.join(" ")
            );
            let ly = T + 15.0 + 18.0 * k as f64;
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{ly}" dominant-baseline="middle">{}</text>"##,
                W - R + 10.0,
                W - R + 30.0,
                W - R + 35.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
