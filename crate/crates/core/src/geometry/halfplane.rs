use super::{GeometryError, Point2};

/// Closed half-plane `{p : (p − anchor)·normal ≤ 0}` with a unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub normal: Point2,
    pub anchor: Point2,
}

impl HalfPlane {
    /// Builds a half-plane from an arbitrary non-zero normal, normalizing it.
    pub fn new(normal: Point2, anchor: Point2) -> Self {
        let len = normal.norm();
        debug_assert!(len > 0.0, "half-plane normal must be non-zero");
        Self {
            normal: normal / len,
            anchor,
        }
    }

    /// Signed distance of `p` to the boundary line; positive outside.
    #[inline]
    pub fn signed_distance(&self, p: Point2) -> f64 {
        (p - self.anchor).dot(self.normal)
    }

    #[inline]
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.signed_distance(p) <= tol
    }
}

/// The half-plane of points whose power w.r.t. generator `i` does not exceed
/// their power w.r.t. generator `j`.
///
/// The boundary passes through
/// `(x_i + x_j)/2 − (w_j − w_i) / (2 d²) · (x_j − x_i)` with normal
/// `(x_j − x_i)/d`, where `d = |x_j − x_i|`.
pub fn separating_halfplane(
    gi: (Point2, f64),
    gj: (Point2, f64),
) -> Result<HalfPlane, GeometryError> {
    let (xi, wi) = gi;
    let (xj, wj) = gj;
    let delta = xj - xi;
    let d2 = delta.norm_squared();
    if d2 == 0.0 {
        return Err(GeometryError::CoincidentGenerators { position: xi });
    }
    let d = d2.sqrt();
    let anchor = xi.midpoint(xj) - delta * ((wj - wi) / (2.0 * d2));
    Ok(HalfPlane {
        normal: delta / d,
        anchor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Point2, b: Point2) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn equal_weights_give_bisector() {
        let h = separating_halfplane((Point2::new(0.25, 0.5), 0.0), (Point2::new(0.75, 0.5), 0.0))
            .unwrap();
        assert!(close(h.anchor, Point2::new(0.5, 0.5)));
        assert!(close(h.normal, Point2::new(1.0, 0.0)));
    }

    #[test]
    fn heavier_weight_pushes_boundary_away() {
        let h = separating_halfplane((Point2::new(0.25, 0.5), 0.1), (Point2::new(0.75, 0.5), 0.0))
            .unwrap();
        assert!(close(h.anchor, Point2::new(0.6, 0.5)));
        assert!(close(h.normal, Point2::new(1.0, 0.0)));

        let h = separating_halfplane((Point2::new(0.0, 0.0), 0.5), (Point2::new(1.0, 0.0), 0.0))
            .unwrap();
        assert!(close(h.anchor, Point2::new(0.75, 0.0)));
    }

    #[test]
    fn boundary_points_have_equal_power() {
        let (xi, wi) = (Point2::new(0.1, 0.7), 0.03);
        let (xj, wj) = (Point2::new(0.8, 0.2), -0.02);
        let h = separating_halfplane((xi, wi), (xj, wj)).unwrap();
        for t in [-1.0, 0.0, 0.3, 2.0] {
            let p = h.anchor + h.normal.perp() * t;
            let pi = (p - xi).norm_squared() - wi;
            let pj = (p - xj).norm_squared() - wj;
            assert!((pi - pj).abs() < 1e-14);
        }
        assert!(h.contains(xi, 0.0));
    }

    #[test]
    fn coincident_positions_rejected() {
        let p = Point2::new(0.3, 0.3);
        assert!(matches!(
            separating_halfplane((p, 0.0), (p, 1.0)),
            Err(GeometryError::CoincidentGenerators { .. })
        ));
    }
}
