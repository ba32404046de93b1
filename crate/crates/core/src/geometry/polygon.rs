use std::fmt;

use serde::{Deserialize, Serialize};

use super::{HalfPlane, Point2};

/// Vertices closer than this (length units) to a clipping line count as on it.
pub const CLIP_TOLERANCE: f64 = 1e-12;

/// Polygons whose area falls below this are normalized to the empty polygon.
pub const MIN_POLYGON_AREA: f64 = 1e-14;

/// Consecutive vertices closer than this are merged after a clip.
const MERGE_DISTANCE: f64 = 1e-13;

/// A convex polygon with counter-clockwise vertices. Zero vertices means empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Wraps a vertex list as-is. Use [`validate_domain`] to check it.
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point2> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Iterator over directed edges `(v_k, v_{k+1})`.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Area centroid; `None` for empty or degenerate polygons.
    pub fn centroid(&self) -> Option<Point2> {
        if self.vertices.len() < 3 {
            return None;
        }
        let o = self.vertices[0];
        let mut a = 0.0;
        let mut c = Point2::ORIGIN;
        for (p, q) in self.edges() {
            let (p, q) = (p - o, q - o);
            let cr = p.cross(q);
            a += cr;
            c += (p + q) * cr;
        }
        if a == 0.0 {
            return None;
        }
        Some(o + c / (3.0 * a))
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounding_box(&self) -> Option<(Point2, Point2)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (
                Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(v[i].distance(v[j]));
            }
        }
        d
    }

    /// Inclusion test for a counter-clockwise polygon. A positive `tol`
    /// enlarges the polygon, a negative one shrinks it.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        self.edges().all(|(a, b)| {
            let e = b - a;
            let len = e.norm();
            if len == 0.0 {
                return true;
            }
            // distance of p to the left of edge a->b
            e.cross(p - a) / len >= -tol
        })
    }

    /// Intersection with a half-plane; the result may be empty.
    pub fn clip_halfplane(&self, h: &HalfPlane) -> ConvexPolygon {
        let labels = vec![(); self.vertices.len()];
        let (v, _) = clip_labeled(&self.vertices, &labels, h, ());
        ConvexPolygon::new(v)
    }

    /// Same polygon with vertices in reverse order.
    pub fn reversed(&self) -> ConvexPolygon {
        let mut v = self.vertices.clone();
        v.reverse();
        ConvexPolygon::new(v)
    }

    pub fn translated(&self, offset: Point2) -> ConvexPolygon {
        ConvexPolygon::new(self.vertices.iter().map(|&p| p + offset).collect())
    }
}

pub(crate) fn signed_area(v: &[Point2]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let o = v[0];
    let mut a = 0.0;
    for k in 1..v.len() - 1 {
        a += (v[k] - o).cross(v[k + 1] - o);
    }
    0.5 * a
}

/// Clips a convex polygon whose edge `k` (from `v[k]` to `v[k+1]`) carries
/// `labels[k]`. Edges created along the clipping line receive `new_label`.
pub(crate) fn clip_labeled<L: Copy>(
    vertices: &[Point2],
    labels: &[L],
    h: &HalfPlane,
    new_label: L,
) -> (Vec<Point2>, Vec<L>) {
    let n = vertices.len();
    debug_assert_eq!(n, labels.len());
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let dist: Vec<f64> = vertices.iter().map(|&p| h.signed_distance(p)).collect();
    if dist.iter().all(|&s| s <= CLIP_TOLERANCE) {
        return (vertices.to_vec(), labels.to_vec());
    }
    if dist.iter().all(|&s| s >= -CLIP_TOLERANCE) {
        return (Vec::new(), Vec::new());
    }

    let mut out_v = Vec::with_capacity(n + 1);
    let mut out_l = Vec::with_capacity(n + 1);
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        let (sa, sb) = (dist[k], dist[(k + 1) % n]);
        let a_in = sa <= CLIP_TOLERANCE;
        let b_in = sb <= CLIP_TOLERANCE;
        if a_in {
            out_v.push(a);
            out_l.push(labels[k]);
            if !b_in {
                if sa < -CLIP_TOLERANCE {
                    let t = sa / (sa - sb);
                    out_v.push(a + (b - a) * t);
                    out_l.push(new_label);
                } else {
                    // a lies on the clip line, so its outgoing edge runs along it
                    *out_l.last_mut().unwrap() = new_label;
                }
            }
        } else if b_in && sb < -CLIP_TOLERANCE {
            let t = sa / (sa - sb);
            out_v.push(a + (b - a) * t);
            out_l.push(labels[k]);
        }
    }
    merge_close_vertices(&mut out_v, &mut out_l);
    if out_v.len() < 3 || signed_area(&out_v) < MIN_POLYGON_AREA {
        return (Vec::new(), Vec::new());
    }
    (out_v, out_l)
}

/// Removes vertex `k` when it coincides with `k+1`, dropping the zero-length
/// edge between them.
fn merge_close_vertices<L: Copy>(v: &mut Vec<Point2>, l: &mut Vec<L>) {
    let mut k = 0;
    while v.len() > 1 && k < v.len() {
        let next = (k + 1) % v.len();
        if v[k].distance(v[next]) <= MERGE_DISTANCE {
            v.remove(k);
            l.remove(k);
        } else {
            k += 1;
        }
    }
}

/// One problem found by [`validate_domain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainIssue {
    TooFewVertices { count: usize },
    NonFiniteVertex { index: usize },
    DuplicateVertex { index: usize, duplicate_of: usize },
    ZeroArea,
    WrongOrientation { auto_fixable: bool },
    NotConvex { vertex: usize, point: Point2 },
}

impl fmt::Display for DomainIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainIssue::TooFewVertices { count } => {
                write!(f, "domain needs at least 3 vertices, got {count}")
            }
            DomainIssue::NonFiniteVertex { index } => write!(f, "vertex {index} is not finite"),
            DomainIssue::DuplicateVertex {
                index,
                duplicate_of,
            } => write!(f, "vertex {index} duplicates vertex {duplicate_of}"),
            DomainIssue::ZeroArea => write!(f, "domain has zero area"),
            DomainIssue::WrongOrientation { .. } => {
                write!(f, "vertices are clockwise; expected counter-clockwise")
            }
            DomainIssue::NotConvex { vertex, point } => write!(
                f,
                "domain is not convex: reflex vertex {vertex} at ({}, {})",
                point.x, point.y
            ),
        }
    }
}

/// Result of checking a candidate domain polygon.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub issues: Vec<DomainIssue>,
}

impl DomainReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    /// True when the only problem is clockwise orientation.
    pub fn only_orientation(&self) -> bool {
        !self.issues.is_empty()
            && self
                .issues
                .iter()
                .all(|i| matches!(i, DomainIssue::WrongOrientation { .. }))
    }
}

impl fmt::Display for DomainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks that `poly` can serve as a domain: finite, at least three distinct
/// vertices, counter-clockwise, convex and of positive area.
pub fn validate_domain(poly: &ConvexPolygon) -> DomainReport {
    let v = poly.vertices();
    let mut issues = Vec::new();
    if v.len() < 3 {
        issues.push(DomainIssue::TooFewVertices { count: v.len() });
        return DomainReport { issues };
    }
    for (index, p) in v.iter().enumerate() {
        if !p.is_finite() {
            issues.push(DomainIssue::NonFiniteVertex { index });
        }
    }
    if !issues.is_empty() {
        return DomainReport { issues };
    }
    for i in 0..v.len() {
        for j in 0..i {
            if v[i] == v[j] {
                issues.push(DomainIssue::DuplicateVertex {
                    index: i,
                    duplicate_of: j,
                });
            }
        }
    }
    let area = signed_area(v);
    let scale = poly.diameter().max(f64::MIN_POSITIVE);
    if area.abs() <= 1e-14 * scale * scale {
        issues.push(DomainIssue::ZeroArea);
        return DomainReport { issues };
    }
    let orientation = area.signum();
    if orientation < 0.0 {
        issues.push(DomainIssue::WrongOrientation { auto_fixable: true });
    }
    let n = v.len();
    let tol = 1e-12 * scale * scale;
    for k in 0..n {
        let prev = v[(k + n - 1) % n];
        let cur = v[k];
        let next = v[(k + 1) % n];
        let turn = (cur - prev).cross(next - cur) * orientation;
        if turn < -tol {
            issues.push(DomainIssue::NotConvex {
                vertex: k,
                point: cur,
            });
        }
    }
    // a star-shaped self-intersecting outline has consistent turns but winds twice
    let winding: f64 = (0..n)
        .map(|k| {
            let a = v[(k + n - 1) % n];
            let b = v[k];
            let c = v[(k + 1) % n];
            let (e1, e2) = (b - a, c - b);
            e1.cross(e2).atan2(e1.dot(e2))
        })
        .sum();
    if (winding.abs() - 2.0 * std::f64::consts::PI).abs() > 1e-6
        && !issues
            .iter()
            .any(|i| matches!(i, DomainIssue::NotConvex { .. }))
    {
        issues.push(DomainIssue::NotConvex {
            vertex: 0,
            point: v[0],
        });
    }
    DomainReport { issues }
}
