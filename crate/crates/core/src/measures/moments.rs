use std::sync::OnceLock;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::density::RasterDensity;
use super::quadrature::{GaussLegendre, TriangleRule};
use super::Density;
use crate::geometry::{ConvexPolygon, Domain, Point2};

fn triangle_rule() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(TriangleRule::degree10)
}

fn segment_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Zeroth, first and second moments of `ρ` over a region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMoments {
    pub mass: f64,
    /// `∫ x ρ`.
    pub first_moment: Point2,
    /// `first_moment / mass`; the geometric centroid when the mass vanishes.
    pub centroid: Point2,
    /// `∫ x ⊗ x ρ`.
    pub second_moment: Matrix2<f64>,
}

impl CellMoments {
    pub fn zero() -> Self {
        Self {
            mass: 0.0,
            first_moment: Point2::ORIGIN,
            centroid: Point2::ORIGIN,
            second_moment: Matrix2::zeros(),
        }
    }

    fn from_sums(mass: f64, first: Point2, second: Matrix2<f64>, fallback: Point2) -> Self {
        let centroid = if mass > 0.0 { first / mass } else { fallback };
        Self {
            mass,
            first_moment: first,
            centroid,
            second_moment: second,
        }
    }

    /// Moments of the variable `x + offset`.
    pub fn translated(&self, offset: Point2) -> Self {
        let m1 = self.first_moment;
        let second = self.second_moment
            + m1.outer(offset)
            + offset.outer(m1)
            + offset.outer(offset) * self.mass;
        Self {
            mass: self.mass,
            first_moment: m1 + offset * self.mass,
            centroid: self.centroid + offset,
            second_moment: second,
        }
    }

    /// `∫ |x − a|² ρ = tr(S) − 2 a·M₁ + m |a|²`.
    pub fn transport_about(&self, a: Point2) -> f64 {
        self.second_moment.trace() - 2.0 * a.dot(self.first_moment) + self.mass * a.norm_squared()
    }
}

#[derive(Default)]
struct Sums {
    mass: f64,
    first: Point2,
    second: Matrix2<f64>,
}

impl Sums {
    /// Exact moments of `value` over the polygon `v`, in coordinates relative to `o`.
    fn add_constant_polygon(&mut self, v: &[Point2], o: Point2, value: f64) {
        let n = v.len();
        if n < 3 || value == 0.0 {
            return;
        }
        let (mut a, mut f, mut s) = (0.0, Point2::ORIGIN, Matrix2::zeros());
        for k in 0..n {
            let p = v[k] - o;
            let q = v[(k + 1) % n] - o;
            let c = p.cross(q);
            a += c;
            f += (p + q) * c;
            s += (p.outer(p) * 2.0 + q.outer(q) * 2.0 + p.outer(q) + q.outer(p)) * c;
        }
        self.mass += value * a / 2.0;
        self.first += f * (value / 6.0);
        self.second += s * (value / 24.0);
    }

    fn add_weighted_point(&mut self, y: Point2, w: f64) {
        self.mass += w;
        self.first += y * w;
        self.second += y.outer(y) * w;
    }
}

/// Mass, first and second moments of `density` over `poly`.
pub fn polygon_moments(poly: &ConvexPolygon, density: &Density) -> CellMoments {
    match poly.vertices().first() {
        None => CellMoments::zero(),
        Some(&o) => local_moments(poly, density, o).translated(o),
    }
}

/// Moments of `density` over `poly` in coordinates centred at `origin`,
/// i.e. of the variable `x − origin`.
pub fn polygon_moments_about(
    poly: &ConvexPolygon,
    density: &Density,
    origin: Point2,
) -> CellMoments {
    match poly.vertices().first() {
        None => CellMoments::zero(),
        Some(&o) => local_moments(poly, density, o).translated(o - origin),
    }
}

fn local_moments(poly: &ConvexPolygon, density: &Density, o: Point2) -> CellMoments {
    let v = poly.vertices();
    let mut sums = Sums::default();
    match density {
        Density::Constant(rho) => sums.add_constant_polygon(v, o, *rho),
        Density::Analytic(_) => {
            let rule = triangle_rule();
            for k in 1..v.len().saturating_sub(1) {
                let (a, b, c) = (v[0], v[k], v[k + 1]);
                let area = 0.5 * (b - a).cross(c - a).abs();
                for &(l, w) in rule.points() {
                    let p = a * l[0] + b * l[1] + c * l[2];
                    sums.add_weighted_point(p - o, area * w * density.eval(p));
                }
            }
        }
        Density::Raster(r) => add_raster_polygon(&mut sums, v, o, r),
    }
    let fallback = poly.centroid().map_or(Point2::ORIGIN, |c| c - o);
    CellMoments::from_sums(sums.mass, sums.first, sums.second, fallback)
}

/// Keeps the part of `v` with `coord(axis) ≥ t` (or `≤ t` when `upper`).
fn clip_axis(v: &[Point2], axis: usize, t: f64, upper: bool) -> Vec<Point2> {
    let side = |p: Point2| {
        let s = p.component(axis) - t;
        if upper {
            -s
        } else {
            s
        }
    };
    let n = v.len();
    let mut out = Vec::with_capacity(n + 2);
    for k in 0..n {
        let (a, b) = (v[k], v[(k + 1) % n]);
        let (sa, sb) = (side(a), side(b));
        if sa >= 0.0 {
            out.push(a);
        }
        if (sa >= 0.0) != (sb >= 0.0) && sa != sb {
            let mut p = a + (b - a) * (sa / (sa - sb));
            // pin the crossing exactly onto the grid line
            p = p.with_component(axis, t);
            out.push(p);
        }
    }
    out
}

/// Exact integral of a piecewise-constant raster over a polygon, by clipping
/// the polygon to each pixel it overlaps.
fn add_raster_polygon(sums: &mut Sums, v: &[Point2], o: Point2, r: &RasterDensity) {
    if v.len() < 3 {
        return;
    }
    let (lo, hi) = v.iter().fold((v[0], v[0]), |(lo, hi), p| {
        (
            Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
            Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    });
    let row0 = r.row_of(lo.y).max(0);
    let row1 = r.row_of(hi.y).min(r.ny() as i64 - 1);
    for iy in row0..=row1 {
        let strip = clip_axis(v, 1, r.grid_y(iy), false);
        let strip = clip_axis(&strip, 1, r.grid_y(iy + 1), true);
        if strip.len() < 3 {
            continue;
        }
        let (sx0, sx1) = strip
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.x), b.max(p.x))
            });
        let col0 = r.column_of(sx0).max(0);
        let col1 = r.column_of(sx1).min(r.nx() as i64 - 1);
        for ix in col0..=col1 {
            let value = r.pixel(ix, iy);
            if value == 0.0 {
                continue;
            }
            let piece = clip_axis(&strip, 0, r.grid_x(ix), false);
            let piece = clip_axis(&piece, 0, r.grid_x(ix + 1), true);
            sums.add_constant_polygon(&piece, o, value);
        }
    }
}

/// Moments of `ρ dS` along a segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeMoments {
    /// `∫_F ρ dS`.
    pub mass: f64,
    /// Mass-weighted midpoint; the plain midpoint when the mass vanishes.
    pub centroid: Point2,
    /// `(1/mass) ∫_F x ⊗ x ρ dS`; zero when the mass vanishes.
    pub second_moment: Matrix2<f64>,
}

impl EdgeMoments {
    pub fn zero(midpoint: Point2) -> Self {
        Self {
            mass: 0.0,
            centroid: midpoint,
            second_moment: Matrix2::zeros(),
        }
    }
}

/// Mass, centroid and normalized second moment of `density` along `a → b`.
pub fn edge_moments(a: Point2, b: Point2, density: &Density) -> EdgeMoments {
    let len = a.distance(b);
    let mid = a.midpoint(b);
    if len == 0.0 {
        return EdgeMoments::zero(mid);
    }
    // coordinates relative to the midpoint keep the second moment well conditioned
    let (p, q) = (a - mid, b - mid);
    let mut s = Sums::default();
    let mut add_piece = |p: Point2, q: Point2, value: f64| {
        let l = p.distance(q) * value;
        s.mass += l;
        s.first += (p + q) * (0.5 * l);
        s.second += ((p.outer(p) + q.outer(q)) / 3.0 + (p.outer(q) + q.outer(p)) / 6.0) * l;
    };
    match density {
        Density::Constant(rho) => add_piece(p, q, *rho),
        Density::Analytic(_) => {
            for (t, w) in segment_rule().unit_interval() {
                let y = p + (q - p) * t;
                let wt = len * w * density.eval(y + mid);
                s.mass += wt;
                s.first += y * wt;
                s.second += y.outer(y) * wt;
            }
        }
        Density::Raster(r) => {
            let mut ts = vec![0.0, 1.0];
            for (axis, lo, hi) in [
                (0, a.x.min(b.x), a.x.max(b.x)),
                (1, a.y.min(b.y), a.y.max(b.y)),
            ] {
                let (da, db) = (a.component(axis), b.component(axis));
                if da == db {
                    continue;
                }
                let (k0, k1) = if axis == 0 {
                    (r.column_of(lo), r.column_of(hi))
                } else {
                    (r.row_of(lo), r.row_of(hi))
                };
                for k in k0..=k1 + 1 {
                    let g = if axis == 0 { r.grid_x(k) } else { r.grid_y(k) };
                    let t = (g - da) / (db - da);
                    if t > 0.0 && t < 1.0 {
                        ts.push(t);
                    }
                }
            }
            ts.sort_by(f64::total_cmp);
            for w in ts.windows(2) {
                if w[1] <= w[0] {
                    continue;
                }
                let (u, v) = (p + (q - p) * w[0], p + (q - p) * w[1]);
                let value = r.value_at(mid + u.midpoint(v));
                if value != 0.0 {
                    add_piece(u, v, value);
                }
            }
        }
    }
    if s.mass <= 0.0 {
        return EdgeMoments::zero(mid);
    }
    let c = s.first / s.mass;
    // shift the normalized second moment back to absolute coordinates
    let second = s.second / s.mass + c.outer(mid) + mid.outer(c) + mid.outer(mid);
    EdgeMoments {
        mass: s.mass,
        centroid: c + mid,
        second_moment: second,
    }
}

/// `∫_Ω ρ`.
pub fn total_mass(domain: &Domain, density: &Density) -> f64 {
    polygon_moments(domain.boundary(), density).mass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::parse_raster;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_square_constant() {
        let m = polygon_moments(&ConvexPolygon::unit_square(), &Density::uniform());
        assert!(close(m.mass, 1.0, 1e-15));
        assert!(close(m.centroid.x, 0.5, 1e-15) && close(m.centroid.y, 0.5, 1e-15));
        assert!(close(m.second_moment[(0, 0)], 1.0 / 3.0, 1e-15));
        assert!(close(m.second_moment[(0, 1)], 0.25, 1e-15));
        assert!(close(m.second_moment[(1, 0)], 0.25, 1e-15));
        assert!(close(m.second_moment[(1, 1)], 1.0 / 3.0, 1e-15));
        assert!(close(
            m.transport_about(Point2::new(0.5, 0.5)),
            1.0 / 6.0,
            1e-15
        ));
    }

    #[test]
    fn right_triangle_constant() {
        let t = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]);
        let m = polygon_moments(&t, &Density::uniform());
        assert!(close(m.mass, 0.5, 1e-15));
        assert!(close(m.first_moment.x, 1.0 / 6.0, 1e-15));
        assert!(close(m.centroid.y, 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn linear_density_on_square() {
        let d = Density::analytic("x", |p| p.x);
        let m = polygon_moments(&ConvexPolygon::unit_square(), &d);
        assert!(close(m.mass, 0.5, 1e-14));
        assert!(close(m.centroid.x, 2.0 / 3.0, 1e-14));
        assert!(close(m.centroid.y, 0.5, 1e-14));
    }

    #[test]
    fn moments_about_a_point() {
        let sq = ConvexPolygon::unit_square();
        let c = Point2::new(0.2, 0.3);
        let local = polygon_moments_about(&sq, &Density::uniform(), c);
        assert!(close(local.second_moment.trace(), 1.0 / 6.0 + 0.13, 1e-15));
        assert!(close(local.centroid.x, 0.3, 1e-15));
    }

    #[test]
    fn edge_examples() {
        let (a, b) = (Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        let e = edge_moments(a, b, &Density::uniform());
        assert!(close(e.mass, 1.0, 1e-15));
        assert_eq!(e.centroid, Point2::new(0.5, 0.0));
        assert!(close(e.second_moment[(0, 0)], 1.0 / 3.0, 1e-15));
        assert!(e.second_moment[(1, 1)].abs() < 1e-15);
        assert!(e.second_moment[(0, 1)].abs() < 1e-15);

        let e = edge_moments(
            Point2::new(0.6, 0.0),
            Point2::new(0.6, 1.0),
            &Density::uniform(),
        );
        assert!(close(e.centroid.x, 0.6, 1e-15) && close(e.centroid.y, 0.5, 1e-15));

        let e = edge_moments(a, b, &Density::analytic("x", |p| p.x));
        assert!(close(e.mass, 0.5, 1e-15));
        assert!(close(e.centroid.x, 2.0 / 3.0, 1e-15));
        assert!(close(e.second_moment[(0, 0)], 0.5, 1e-14));

        assert_eq!(edge_moments(a, a, &Density::uniform()).mass, 0.0);
    }

    #[test]
    fn raster_integrals_are_exact() {
        let r = parse_raster("2 2 0 0 0.5 0.5\n1 2\n3 4\n").unwrap();
        let sq = ConvexPolygon::unit_square();
        let m = polygon_moments(&sq, &r);
        assert!(close(m.mass, 2.5, 1e-14));
        // ∫ x ρ: columns at x̄ = 0.25 carry 1+3, at 0.75 carry 2+4, each pixel has area 1/4
        assert!(close(
            m.first_moment.x,
            0.25 * (0.25 * 4.0 + 0.75 * 6.0),
            1e-14
        ));

        let tri = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]);
        // lower-left pixel fully (3·1/4), lower-right and upper-left halves (4·1/8 + 1·1/8)
        assert!(close(
            polygon_moments(&tri, &r).mass,
            0.75 + 0.5 + 0.125,
            1e-14
        ));

        let e = edge_moments(Point2::new(0.0, 0.1), Point2::new(1.0, 0.1), &r);
        assert!(close(e.mass, 0.5 * 3.0 + 0.5 * 4.0, 1e-14));
        // beyond the grid the density is zero
        let e = edge_moments(Point2::new(0.5, 0.1), Point2::new(1.5, 0.1), &r);
        assert!(close(e.mass, 2.0, 1e-14));
    }

    #[test]
    fn total_mass_scales() {
        let d = Domain::unit_square();
        assert!(close(total_mass(&d, &Density::Constant(3.0)), 3.0, 1e-15));
        let r = parse_raster("2 2 0 0 0.5 0.5\n2 2\n2 2\n").unwrap();
        assert!(close(total_mass(&d, &r), 2.0, 1e-6));
    }
}
