use crate::geometry::Point2;

/// Symmetric rule on the reference triangle in barycentric coordinates.
/// Weights sum to 1, so a physical integral is `area · Σ w_k f(p_k)`.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    degree: usize,
    points: Vec<([f64; 3], f64)>,
}

// (a, weight): orbit of (a, a, 1 − 2a)
const S21: [(f64, f64); 2] = [
    (0.485_577_633_383_657_4, 0.036_725_957_756_466_705),
    (0.109_481_575_485_037_05, 0.045_321_059_435_527_94),
];

// (a, b, weight): orbit of all permutations of (a, b, 1 − a − b)
const S111: [(f64, f64, f64); 3] = [
    (
        0.141_707_219_414_879_95,
        0.307_939_838_764_120_95,
        0.072_757_916_845_420_11,
    ),
    (
        0.025_003_534_762_686_386,
        0.246_672_560_639_902_7,
        0.028_327_242_531_057_485,
    ),
    (
        0.009_540_815_400_299_458,
        0.066_803_251_012_200_27,
        0.009_421_666_963_732_823,
    ),
];

const CENTROID_WEIGHT: f64 = 0.090_817_990_382_753_58;

impl TriangleRule {
    /// 25-point rule exact for polynomials of total degree ≤ 10.
    pub fn degree10() -> Self {
        let mut points = vec![([1.0 / 3.0; 3], CENTROID_WEIGHT)];
        for &(a, w) in &S21 {
            let b = 1.0 - 2.0 * a;
            points.push(([a, a, b], w));
            points.push(([a, b, a], w));
            points.push(([b, a, a], w));
        }
        for &(a, b, w) in &S111 {
            let c = 1.0 - a - b;
            for l in [
                [a, b, c],
                [a, c, b],
                [b, a, c],
                [b, c, a],
                [c, a, b],
                [c, b, a],
            ] {
                points.push((l, w));
            }
        }
        let total: f64 = points.iter().map(|p| p.1).sum();
        for p in &mut points {
            p.1 /= total;
        }
        Self { degree: 10, points }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates and normalized weights.
    pub fn points(&self) -> &[([f64; 3], f64)] {
        &self.points
    }

    /// `∫_T g` over the triangle `(a, b, c)`.
    pub fn integrate(
        &self,
        a: Point2,
        b: Point2,
        c: Point2,
        mut g: impl FnMut(Point2) -> f64,
    ) -> f64 {
        let area = 0.5 * (b - a).cross(c - a).abs();
        area * self
            .points
            .iter()
            .map(|&(l, w)| w * g(a * l[0] + b * l[1] + c * l[2]))
            .sum::<f64>()
    }
}

/// Gauss–Legendre rule on `[-1, 1]`; weights sum to 2.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, nodes found by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(t, weight)` pairs on `[0, 1]`; weights sum to 1.
    pub fn unit_interval(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
