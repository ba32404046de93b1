use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::polygon::clip_labeled;
use super::{separating_halfplane, validate_domain, ConvexPolygon, GeometryError, Point2};

/// The convex region Ω that every cell is clipped from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Domain {
    boundary: ConvexPolygon,
    area: f64,
    centroid: Point2,
    diameter: f64,
}

impl Domain {
    /// Accepts only polygons that pass [`validate_domain`] unchanged.
    pub fn new(boundary: ConvexPolygon) -> Result<Self, GeometryError> {
        let report = validate_domain(&boundary);
        if !report.is_valid() {
            return Err(GeometryError::InvalidDomain(report));
        }
        let area = boundary.area();
        let centroid = boundary.centroid().expect("validated domain has area");
        let diameter = boundary.diameter();
        Ok(Self {
            boundary,
            area,
            centroid,
            diameter,
        })
    }

    /// Like [`Domain::new`] but reverses clockwise input first.
    pub fn new_auto_orient(boundary: ConvexPolygon) -> Result<Self, GeometryError> {
        let report = validate_domain(&boundary);
        if report.only_orientation() {
            Self::new(boundary.reversed())
        } else {
            Self::new(boundary)
        }
    }

    pub fn unit_square() -> Self {
        Self::new(ConvexPolygon::unit_square()).expect("unit square is a valid domain")
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::new(ConvexPolygon::rectangle(x0, y0, x1, y1))
    }

    pub fn boundary(&self) -> &ConvexPolygon {
        &self.boundary
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Point2 {
        self.centroid
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        self.boundary.bounding_box().expect("domain is non-empty")
    }

    /// Membership in the closure of Ω, with slack `1e-9·diam`.
    pub fn contains(&self, p: Point2) -> bool {
        self.boundary.contains(p, 1e-9 * self.diameter)
    }
}

impl TryFrom<Vec<Point2>> for Domain {
    type Error = GeometryError;
    fn try_from(v: Vec<Point2>) -> Result<Self, Self::Error> {
        Domain::new(ConvexPolygon::new(v))
    }
}

impl From<Domain> for Vec<Point2> {
    fn from(d: Domain) -> Self {
        d.boundary.into_vertices()
    }
}

/// Positions and weights of the weighted generators.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "RawGenerators")]
pub struct GeneratorSet {
    positions: Vec<Point2>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGenerators {
    positions: Vec<Point2>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

impl TryFrom<RawGenerators> for GeneratorSet {
    type Error = GeometryError;
    fn try_from(r: RawGenerators) -> Result<Self, Self::Error> {
        let n = r.positions.len();
        GeneratorSet::new(r.positions, r.weights.unwrap_or_else(|| vec![0.0; n]))
    }
}

impl GeneratorSet {
    /// Checks count, finiteness and that no two (position, weight) pairs are identical.
    pub fn new(positions: Vec<Point2>, weights: Vec<f64>) -> Result<Self, GeometryError> {
        if positions.len() != weights.len() {
            return Err(GeometryError::LengthMismatch {
                positions: positions.len(),
                weights: weights.len(),
            });
        }
        if positions.is_empty() {
            return Err(GeometryError::NoGenerators);
        }
        for (index, (p, w)) in positions.iter().zip(&weights).enumerate() {
            if !p.is_finite() || !w.is_finite() {
                return Err(GeometryError::NonFiniteGenerator { index });
            }
        }
        let set = Self { positions, weights };
        if let Some((first, second)) = set.first_identical_pair() {
            return Err(GeometryError::IdenticalGenerators { first, second });
        }
        Ok(set)
    }

    /// Generators with all weights zero.
    pub fn unweighted(positions: Vec<Point2>) -> Result<Self, GeometryError> {
        let n = positions.len();
        Self::new(positions, vec![0.0; n])
    }

    fn first_identical_pair(&self) -> Option<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (self.positions[a], self.positions[b]);
            pa.x.total_cmp(&pb.x)
                .then(pa.y.total_cmp(&pb.y))
                .then(self.weights[a].total_cmp(&self.weights[b]))
        });
        order.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            (self.positions[a] == self.positions[b] && self.weights[a] == self.weights[b])
                .then(|| (a.min(b), a.max(b)))
        })
    }

    /// Checks that every position lies in the closure of `domain`.
    pub fn check_inside(&self, domain: &Domain) -> Result<(), GeometryError> {
        for (index, &position) in self.positions.iter().enumerate() {
            if !domain.contains(position) {
                return Err(GeometryError::GeneratorOutsideDomain { index, position });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point2] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn position(&self, i: usize) -> Point2 {
        self.positions[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Power of `p` with respect to generator `i`: `|p − x_i|² − w_i`.
    #[inline]
    pub fn power(&self, i: usize, p: Point2) -> f64 {
        (p - self.positions[i]).norm_squared() - self.weights[i]
    }

    /// Same positions, every weight shifted by `c`.
    pub fn shifted_weights(&self, c: f64) -> GeneratorSet {
        GeneratorSet {
            positions: self.positions.clone(),
            weights: self.weights.iter().map(|w| w + c).collect(),
        }
    }

    /// Keeps the generators whose index satisfies `keep`, preserving order.
    pub fn retain_indices(&self, keep: impl Fn(usize) -> bool) -> GeneratorSet {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        GeneratorSet {
            positions: idx.iter().map(|&i| self.positions[i]).collect(),
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    pub fn into_parts(self) -> (Vec<Point2>, Vec<f64>) {
        (self.positions, self.weights)
    }

    /// Flattened `[x₁, y₁, x₂, y₂, …, w₁, …, w_N]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.positions.iter().flat_map(|p| [p.x, p.y]).collect();
        v.extend_from_slice(&self.weights);
        v
    }

    /// Inverse of [`GeneratorSet::to_flat`].
    pub fn from_flat(z: &[f64]) -> Result<Self, GeometryError> {
        let n = z.len() / 3;
        let positions = (0..n)
            .map(|i| Point2::new(z[2 * i], z[2 * i + 1]))
            .collect();
        Self::new(positions, z[2 * n..3 * n].to_vec())
    }
}

impl Serialize for GeneratorSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("GeneratorSet", 2)?;
        st.serialize_field("positions", &self.positions)?;
        st.serialize_field("weights", &self.weights)?;
        st.end()
    }
}

/// One boundary segment of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEdge {
    /// Generator on the other side, `None` for the domain boundary.
    pub neighbor: Option<usize>,
    pub start: Point2,
    pub end: Point2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub generator_index: usize,
    pub polygon: ConvexPolygon,
    pub neighbor_edges: Vec<CellEdge>,
}

impl PowerCell {
    pub fn is_empty(&self) -> bool {
        self.polygon.is_empty()
    }

    pub fn side_count(&self) -> usize {
        self.polygon.len()
    }
}

/// A shared edge between cells `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyEdge {
    pub i: usize,
    pub j: usize,
    /// `|x_j − x_i|`.
    pub distance: f64,
    /// `(x_j − x_i) / distance`; the `(j, i)` normal is its negation.
    pub normal: Point2,
    pub segment: (Point2, Point2),
}

impl AdjacencyEdge {
    pub fn length(&self) -> f64 {
        self.segment.0.distance(self.segment.1)
    }
}

/// Cell adjacency through edges of positive length.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyGraph {
    pub edges: Vec<AdjacencyEdge>,
    /// `neighbors[i]` is sorted and lists every `j` sharing an edge with `i`.
    pub neighbors: Vec<Vec<usize>>,
}

impl AdjacencyGraph {
    pub fn edge_between(&self, i: usize, j: usize) -> Option<&AdjacencyEdge> {
        let (a, b) = (i.min(j), i.max(j));
        self.edges.iter().find(|e| e.i == a && e.j == b)
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbors
            .get(i)
            .is_some_and(|ns| ns.binary_search(&j).is_ok())
    }

    /// Unordered pairs, sorted.
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self.edges.iter().map(|e| (e.i, e.j)).collect();
        v.sort_unstable();
        v
    }

    /// Connectivity of the subgraph induced by `nodes`.
    pub fn is_connected_on(&self, nodes: &[usize]) -> bool {
        let Some(&start) = nodes.first() else {
            return true;
        };
        let mut member = vec![false; self.neighbors.len()];
        for &i in nodes {
            member[i] = true;
        }
        let mut seen = vec![false; self.neighbors.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &self.neighbors[i] {
                if member[j] && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == nodes.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerDiagram {
    pub domain: Domain,
    pub generators: GeneratorSet,
    pub cells: Vec<PowerCell>,
    pub adjacency: AdjacencyGraph,
}

impl PowerDiagram {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, i: usize) -> &PowerCell {
        &self.cells[i]
    }

    pub fn non_empty_indices(&self) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&i| !self.cells[i].is_empty())
            .collect()
    }

    pub fn empty_indices(&self) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i].is_empty())
            .collect()
    }

    /// `|Σ area(P_i) − area(Ω)| / area(Ω)`.
    pub fn partition_residual(&self) -> f64 {
        let total: f64 = self.cells.iter().map(|c| c.polygon.area()).sum();
        (total - self.domain.area()).abs() / self.domain.area()
    }

    /// Index of the first cell whose polygon contains `p` with slack `tol`.
    pub fn containing_cell(&self, p: Point2, tol: f64) -> Option<usize> {
        self.cells.iter().position(|c| c.polygon.contains(p, tol))
    }

    /// Pairs of non-empty cells that touch in a single point but share no edge.
    ///
    /// A pair `(i, k)` is reported when a vertex of cell `i` lies on cell `k`
    /// with equal power up to `1e-12·diam²`.
    pub fn point_contacts(&self) -> Vec<(usize, usize)> {
        let tol = 1e-12 * self.domain.diameter().powi(2);
        let len_tol = 1e-10 * self.domain.diameter();
        let gens = &self.generators;
        let mut out = Vec::new();
        for (i, cell) in self.cells.iter().enumerate() {
            for &v in cell.polygon.vertices() {
                let pi = gens.power(i, v);
                for k in i + 1..self.cells.len() {
                    if self.cells[k].is_empty() || self.adjacency.are_adjacent(i, k) {
                        continue;
                    }
                    if (gens.power(k, v) - pi).abs() <= tol
                        && self.cells[k].polygon.contains(v, len_tol)
                    {
                        out.push((i, k));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Number of sides of each non-empty cell.
    pub fn side_counts(&self) -> Vec<usize> {
        self.cells
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| c.side_count())
            .collect()
    }
}

/// Builds every cell as `Ω ∩ ⋂_{j≠i} H_ij` and reads the adjacency off the clip labels.
pub fn build_power_diagram(
    domain: &Domain,
    gens: &GeneratorSet,
) -> Result<PowerDiagram, GeometryError> {
    gens.check_inside(domain)?;
    let n = gens.len();
    let mut cells = Vec::with_capacity(n);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        cells.push(build_cell(domain, gens, i, &mut order)?);
    }

    let mut neighbors = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for cell in &cells {
        let i = cell.generator_index;
        for e in &cell.neighbor_edges {
            let Some(j) = e.neighbor else { continue };
            neighbors[i].push(j);
            neighbors[j].push(i);
            if i < j {
                let delta = gens.position(j) - gens.position(i);
                let distance = delta.norm();
                edges.push(AdjacencyEdge {
                    i,
                    j,
                    distance,
                    normal: delta / distance,
                    segment: (e.start, e.end),
                });
            }
        }
    }
    for ns in &mut neighbors {
        ns.sort_unstable();
        ns.dedup();
    }
    edges.sort_by_key(|e| (e.i, e.j));
    // a pair can appear twice if one cell saw a collinear split of the same edge
    edges.dedup_by(|b, a| {
        if a.i == b.i && a.j == b.j {
            if b.length() > a.length() {
                a.segment = b.segment;
            }
            true
        } else {
            false
        }
    });
    Ok(PowerDiagram {
        domain: domain.clone(),
        generators: gens.clone(),
        cells,
        adjacency: AdjacencyGraph { edges, neighbors },
    })
}

fn build_cell(
    domain: &Domain,
    gens: &GeneratorSet,
    i: usize,
    order: &mut Vec<usize>,
) -> Result<PowerCell, GeometryError> {
    let empty = || PowerCell {
        generator_index: i,
        polygon: ConvexPolygon::empty(),
        neighbor_edges: Vec::new(),
    };
    let xi = gens.position(i);
    let wi = gens.weight(i);
    // nearest generators first so the polygon shrinks early
    order.clear();
    order.extend((0..gens.len()).filter(|&j| j != i));
    order.sort_by(|&a, &b| {
        gens.power(a, xi)
            .total_cmp(&gens.power(b, xi))
            .then(a.cmp(&b))
    });

    let mut verts = domain.boundary().vertices().to_vec();
    let mut labels: Vec<Option<usize>> = vec![None; verts.len()];
    for &j in order.iter() {
        let xj = gens.position(j);
        let wj = gens.weight(j);
        if xj == xi {
            if wj > wi {
                return Ok(empty());
            }
            continue;
        }
        let h = separating_halfplane((xi, wi), (xj, wj))?;
        let (v, l) = clip_labeled(&verts, &labels, &h, Some(j));
        if v.is_empty() {
            return Ok(empty());
        }
        verts = v;
        labels = l;
    }
    let m = verts.len();
    let neighbor_edges = (0..m)
        .map(|k| CellEdge {
            neighbor: labels[k],
            start: verts[k],
            end: verts[(k + 1) % m],
        })
        .collect();
    Ok(PowerCell {
        generator_index: i,
        polygon: ConvexPolygon::new(verts),
        neighbor_edges,
    })
}

/// Voronoi diagram: the power diagram with all weights zero.
pub fn voronoi(domain: &Domain, points: &[Point2]) -> Result<PowerDiagram, GeometryError> {
    let gens = GeneratorSet::unweighted(points.to_vec())?;
    build_power_diagram(domain, &gens)
}

/// `argmin_i |p − x_i|² − w_i`, lowest index on ties.
pub fn locate(gens: &GeneratorSet, p: Point2) -> usize {
    let mut best = 0;
    let mut best_power = gens.power(0, p);
    for i in 1..gens.len() {
        let pw = gens.power(i, p);
        if pw < best_power {
            best = i;
            best_power = pw;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gens(pts: &[(f64, f64)], w: &[f64]) -> GeneratorSet {
        GeneratorSet::new(
            pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            w.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn single_generator_owns_domain() {
        let d = Domain::unit_square();
        let pd = build_power_diagram(&d, &gens(&[(0.3, 0.8)], &[5.0])).unwrap();
        assert!((pd.cells[0].polygon.area() - 1.0).abs() < 1e-15);
        assert!(pd.cells[0]
            .neighbor_edges
            .iter()
            .all(|e| e.neighbor.is_none()));
        assert!(pd.adjacency.edges.is_empty());
    }

    #[test]
    fn symmetric_split() {
        let d = Domain::unit_square();
        let pd = build_power_diagram(&d, &gens(&[(0.25, 0.5), (0.75, 0.5)], &[0.0, 0.0])).unwrap();
        for c in &pd.cells {
            assert!((c.polygon.area() - 0.5).abs() < 1e-15);
        }
        assert_eq!(pd.adjacency.edges.len(), 1);
        let e = pd.adjacency.edges[0];
        assert_eq!((e.i, e.j), (0, 1));
        assert!((e.distance - 0.5).abs() < 1e-15);
        assert!((e.length() - 1.0).abs() < 1e-15);
        assert!((e.segment.0.x - 0.5).abs() < 1e-15 && (e.segment.1.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn heavy_weight_empties_neighbor() {
        let d = Domain::unit_square();
        let pd = build_power_diagram(&d, &gens(&[(0.5, 0.5), (0.6, 0.5)], &[10.0, 0.0])).unwrap();
        assert!((pd.cells[0].polygon.area() - 1.0).abs() < 1e-15);
        assert!(pd.cells[1].is_empty());
        assert_eq!(pd.empty_indices(), vec![1]);
    }

    #[test]
    fn coincident_positions_heavier_wins() {
        let d = Domain::unit_square();
        let pd = build_power_diagram(&d, &gens(&[(0.5, 0.5), (0.5, 0.5)], &[0.0, 0.1])).unwrap();
        assert!(pd.cells[0].is_empty());
        assert!((pd.cells[1].polygon.area() - 1.0).abs() < 1e-15);
        assert!(matches!(
            GeneratorSet::new(vec![Point2::new(0.5, 0.5); 2], vec![0.2, 0.2]),
            Err(GeometryError::IdenticalGenerators {
                first: 0,
                second: 1
            })
        ));
    }

    #[test]
    fn grid_voronoi_is_four_squares() {
        let d = Domain::unit_square();
        let pts: Vec<Point2> = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]
            .iter()
            .map(|&(x, y)| Point2::new(x, y))
            .collect();
        let pd = voronoi(&d, &pts).unwrap();
        for c in &pd.cells {
            assert!((c.polygon.area() - 0.25).abs() < 1e-15);
            assert_eq!(c.side_count(), 4);
        }
        // diagonal neighbors meet only at the centre
        assert_eq!(
            pd.adjacency.edge_set(),
            vec![(0, 1), (0, 2), (1, 3), (2, 3)]
        );
        assert_eq!(pd.point_contacts(), vec![(0, 3), (1, 2)]);
    }

    #[test]
    fn locate_examples() {
        let g = gens(&[(0.25, 0.5), (0.75, 0.5)], &[0.0, 0.0]);
        assert_eq!(locate(&g, Point2::new(0.1, 0.5)), 0);
        assert_eq!(locate(&g, Point2::new(0.5, 0.5)), 0);
        let g = gens(&[(0.25, 0.5), (0.75, 0.5)], &[0.1, 0.0]);
        assert_eq!(locate(&g, Point2::new(0.55, 0.5)), 0);
        assert_eq!(locate(&g, Point2::new(0.65, 0.5)), 1);
    }

    #[test]
    fn outside_generator_rejected() {
        let d = Domain::unit_square();
        let r = build_power_diagram(&d, &gens(&[(1.5, 0.5)], &[0.0]));
        assert!(matches!(
            r,
            Err(GeometryError::GeneratorOutsideDomain { index: 0, .. })
        ));
    }

    #[test]
    fn json_shapes() {
        let g = gens(&[(0.25, 0.5)], &[0.5]);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"positions":[[0.25,0.5]],"weights":[0.5]}"#);
        let back: GeneratorSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let d: Domain = serde_json::from_str("[[0,0],[1,0],[1,1],[0,1]]").unwrap();
        assert_eq!(d, Domain::unit_square());
        assert!(serde_json::from_str::<Domain>("[[0,0],[0,1],[1,1],[1,0]]").is_err());
    }
}
