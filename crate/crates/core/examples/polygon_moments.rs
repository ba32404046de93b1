//! Clips a polygon with a half-plane and integrates mass, centroid and
//! second moment: in closed form for a constant density and by triangle
//! quadrature for a smooth one.
//!
//! cargo run --example polygon_moments

use powerlloyd::geometry::{ConvexPolygon, HalfPlane, Point2};
use powerlloyd::measures::{edge_moments, polygon_moments, Density, TriangleRule};

fn main() {
    let hexagon = ConvexPolygon::new(
        (0..6)
            .map(|k| {
                let t = std::f64::consts::FRAC_PI_3 * k as f64;
                Point2::new(0.5 + 0.4 * t.cos(), 0.5 + 0.4 * t.sin())
            })
            .collect(),
    );
    // keep the part with (p − anchor)·normal ≤ 0
    let cut = HalfPlane::new(Point2::new(1.0, 1.0), Point2::new(0.6, 0.6));
    let piece = hexagon.clip_halfplane(&cut);
    println!(
        "hexagon area {:.6}, clipped piece: {} vertices, area {:.6}",
        hexagon.area(),
        piece.len(),
        piece.area()
    );

    let uniform = Density::uniform();
    let m = polygon_moments(&piece, &uniform);
    println!(
        "constant density: mass {:.6}, centroid ({:.6}, {:.6}), second moment trace {:.6}",
        m.mass,
        m.centroid.x,
        m.centroid.y,
        m.second_moment.trace()
    );

    // the same constant routed through quadrature agrees to rounding
    let as_function = Density::analytic("one", |_| 1.0);
    let q = polygon_moments(&piece, &as_function);
    println!(
        "quadrature vs closed form: mass difference {:.1e}",
        (q.mass - m.mass).abs()
    );

    let ramp = Density::analytic("ramp", |p| 1.0 + 2.0 * p.x);
    let r = polygon_moments(&piece, &ramp);
    println!(
        "ramp density 1 + 2x: mass {:.6}, centroid ({:.6}, {:.6})",
        r.mass, r.centroid.x, r.centroid.y
    );

    let (a, b) = (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
    let e = edge_moments(a, b, &ramp);
    println!(
        "ramp mass along the diagonal: {:.6} (exact {:.6})",
        e.mass,
        2f64.sqrt() * 2.0
    );

    let rule = TriangleRule::degree10();
    println!(
        "triangle rule: {} nodes, degree {}",
        rule.len(),
        rule.degree()
    );
}
