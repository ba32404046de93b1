use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use super::CalculusError;
use crate::energy::Problem;
use crate::geometry::{GeneratorSet, Point2};
use crate::lloyd::LloydState;
use crate::measures::edge_moments;

/// Geometry and moments of one shared edge `F_ij`, `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeData {
    pub i: usize,
    pub j: usize,
    /// `|x_j − x_i|`.
    pub distance: f64,
    /// `∫_F ρ dS`.
    pub mass: f64,
    pub centroid: Point2,
    /// `(1/mass) ∫_F x ⊗ x ρ dS`.
    pub second_moment: Matrix2<f64>,
}

/// First-order data of a state: cell masses and centroids plus edge moments.
#[derive(Clone, Debug)]
pub struct Linearization {
    pub generators: GeneratorSet,
    pub masses: Vec<f64>,
    pub centroids: Vec<Point2>,
    pub edges: Vec<EdgeData>,
    /// Non-empty cells meeting in a single point.
    pub point_contacts: Vec<(usize, usize)>,
    /// `−f′(m_i)`.
    pub omega: Vec<f64>,
    /// `f″(m_i)`.
    pub curvature: Vec<f64>,
}

impl Linearization {
    /// Requires every cell to carry positive mass.
    pub fn new(problem: &Problem, gens: &GeneratorSet) -> Result<Self, CalculusError> {
        let state = LloydState::new(problem, gens.clone())?;
        Self::from_state(problem, &state)
    }

    pub fn from_state(problem: &Problem, state: &LloydState) -> Result<Self, CalculusError> {
        let diagram = state.diagram();
        let masses = state.masses();
        for (i, &m) in masses.iter().enumerate() {
            if diagram.cells[i].is_empty() || !(m > 0.0) {
                return Err(CalculusError::EmptyCell { index: i });
            }
        }
        let gens = state.generators().clone();
        let centroids = (0..gens.len())
            .map(|i| gens.position(i) + state.centroid_offset(i))
            .collect();
        let edges = diagram
            .adjacency
            .edges
            .iter()
            .map(|e| {
                let em = edge_moments(e.segment.0, e.segment.1, problem.density());
                EdgeData {
                    i: e.i,
                    j: e.j,
                    distance: e.distance,
                    mass: em.mass,
                    centroid: em.centroid,
                    second_moment: em.second_moment,
                }
            })
            .collect();
        let f = problem.cost();
        Ok(Self {
            omega: masses.iter().map(|&m| -f.derivative(m)).collect(),
            curvature: masses.iter().map(|&m| f.second_derivative(m)).collect(),
            point_contacts: diagram.point_contacts(),
            generators: gens,
            masses,
            centroids,
            edges,
        })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// `∂m_j/∂x_i` and `∂m_j/∂w_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassJacobian {
    /// `2N × N`; row `2i + c`, column `j` holds `∂m_j/∂x_i^c`.
    pub d_m_d_x: DMatrix<f64>,
    /// `N × N`; entry `(i, j)` holds `∂m_j/∂w_i`. A weighted graph Laplacian.
    pub d_m_d_w: DMatrix<f64>,
    /// Cell pairs touching in a single point, where the formulas are one-sided.
    pub point_contacts: Vec<(usize, usize)>,
}

impl MassJacobian {
    /// Fails when cells meet in isolated points.
    pub fn require_generic(&self) -> Result<(), CalculusError> {
        match self.point_contacts.first() {
            Some(&(i, j)) => Err(CalculusError::PointContactAdjacency { i, j }),
            None => Ok(()),
        }
    }

    /// `(3N) × N` stack of both blocks.
    pub fn stacked(&self) -> DMatrix<f64> {
        let n = self.d_m_d_w.ncols();
        let mut out = DMatrix::zeros(3 * n, n);
        out.rows_mut(0, 2 * n).copy_from(&self.d_m_d_x);
        out.rows_mut(2 * n, n).copy_from(&self.d_m_d_w);
        out
    }
}

pub fn grad_masses(problem: &Problem, gens: &GeneratorSet) -> Result<MassJacobian, CalculusError> {
    Ok(mass_jacobian(&Linearization::new(problem, gens)?))
}

pub fn mass_jacobian(lin: &Linearization) -> MassJacobian {
    let n = lin.len();
    let x = lin.generators.positions();
    let mut d_m_d_x = DMatrix::zeros(2 * n, n);
    let mut d_m_d_w = DMatrix::zeros(n, n);
    for e in &lin.edges {
        let (i, j) = (e.i, e.j);
        let u = e.mass / (2.0 * e.distance);
        d_m_d_w[(i, i)] += u;
        d_m_d_w[(j, j)] += u;
        d_m_d_w[(i, j)] -= u;
        d_m_d_w[(j, i)] -= u;
        let k = e.mass / e.distance;
        let gi = (e.centroid - x[i]) * k;
        let gj = (e.centroid - x[j]) * k;
        for c in 0..2 {
            d_m_d_x[(2 * i + c, i)] += gi.component(c);
            d_m_d_x[(2 * i + c, j)] -= gi.component(c);
            d_m_d_x[(2 * j + c, j)] += gj.component(c);
            d_m_d_x[(2 * j + c, i)] -= gj.component(c);
        }
    }
    MassJacobian {
        d_m_d_x,
        d_m_d_w,
        point_contacts: lin.point_contacts.clone(),
    }
}

/// `∇_X E = 2M̂(X − ξ) + ∇_X m (w − ω)`, `∇_w E = ∇_w m (w − ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyGradient {
    /// Length `2N`, generator-major.
    pub d_e_d_x: DVector<f64>,
    pub d_e_d_w: DVector<f64>,
    /// `m_i`, the diagonal of `M̂` before duplication per coordinate.
    pub masses: DVector<f64>,
    /// `X − ξ`, length `2N`.
    pub position_residual: DVector<f64>,
    /// `w − ω`.
    pub weight_residual: DVector<f64>,
}

impl EnergyGradient {
    /// `(∇_X E; ∇_w E)`, length `3N`.
    pub fn flat(&self) -> DVector<f64> {
        let n = self.d_e_d_w.len();
        let mut v = DVector::zeros(3 * n);
        v.rows_mut(0, 2 * n).copy_from(&self.d_e_d_x);
        v.rows_mut(2 * n, n).copy_from(&self.d_e_d_w);
        v
    }

    pub fn max_norm(&self) -> f64 {
        self.d_e_d_x.amax().max(self.d_e_d_w.amax())
    }
}

pub fn grad_energy(
    problem: &Problem,
    gens: &GeneratorSet,
) -> Result<EnergyGradient, CalculusError> {
    let lin = Linearization::new(problem, gens)?;
    let jac = mass_jacobian(&lin);
    Ok(energy_gradient(&lin, &jac))
}

pub fn energy_gradient(lin: &Linearization, jac: &MassJacobian) -> EnergyGradient {
    let n = lin.len();
    let x = lin.generators.positions();
    let position_residual = DVector::from_iterator(
        2 * n,
        (0..n).flat_map(|i| {
            let r = x[i] - lin.centroids[i];
            [r.x, r.y]
        }),
    );
    let weight_residual =
        DVector::from_iterator(n, (0..n).map(|i| lin.generators.weight(i) - lin.omega[i]));
    let mut d_e_d_x = &jac.d_m_d_x * &weight_residual;
    for i in 0..n {
        for c in 0..2 {
            d_e_d_x[2 * i + c] += 2.0 * lin.masses[i] * position_residual[2 * i + c];
        }
    }
    EnergyGradient {
        d_e_d_w: &jac.d_m_d_w * &weight_residual,
        d_e_d_x,
        masses: DVector::from_vec(lin.masses.clone()),
        position_residual,
        weight_residual,
    }
}

/// Derivatives of the Lloyd maps `ξ` (centroids) and `ω = −f′(m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LloydJacobian {
    /// `2N × 2N`; entry `(2i + a, 2j + c)` is `∂ξ_i^a/∂x_j^c`.
    pub d_xi_d_x: DMatrix<f64>,
    /// `2N × N`.
    pub d_xi_d_w: DMatrix<f64>,
    /// `N × 2N`.
    pub d_omega_d_x: DMatrix<f64>,
    /// `N × N`.
    pub d_omega_d_w: DMatrix<f64>,
}

impl LloydJacobian {
    /// The `3N × 3N` Jacobian of `(X, w) ↦ (ξ, ω)`.
    pub fn full(&self) -> DMatrix<f64> {
        let n = self.d_omega_d_w.nrows();
        let mut j = DMatrix::zeros(3 * n, 3 * n);
        j.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&self.d_xi_d_x);
        j.view_mut((0, 2 * n), (2 * n, n)).copy_from(&self.d_xi_d_w);
        j.view_mut((2 * n, 0), (n, 2 * n))
            .copy_from(&self.d_omega_d_x);
        j.view_mut((2 * n, 2 * n), (n, n))
            .copy_from(&self.d_omega_d_w);
        j
    }
}

pub fn lloyd_jacobian(
    problem: &Problem,
    gens: &GeneratorSet,
) -> Result<LloydJacobian, CalculusError> {
    let lin = Linearization::new(problem, gens)?;
    let jac = mass_jacobian(&lin);
    Ok(lloyd_jacobian_from(&lin, &jac))
}

pub fn lloyd_jacobian_from(lin: &Linearization, jac: &MassJacobian) -> LloydJacobian {
    let n = lin.len();
    let x = lin.generators.positions();
    let xbar = &lin.centroids;
    let mut d_xi_d_x = DMatrix::zeros(2 * n, 2 * n);
    let mut d_xi_d_w = DMatrix::zeros(2 * n, n);
    let put = |m: &mut DMatrix<f64>, row: usize, col: usize, b: &Matrix2<f64>| {
        for a in 0..2 {
            for c in 0..2 {
                m[(2 * row + a, 2 * col + c)] += b[(a, c)];
            }
        }
    };
    for e in &lin.edges {
        let k = e.mass / e.distance;
        // (a, b) then (b, a): every edge enters both incident cells
        for (a, b) in [(e.i, e.j), (e.j, e.i)] {
            let inv_m = 1.0 / lin.masses[a];
            let own = (e.second_moment - e.centroid.outer(x[a]) + xbar[a].outer(x[a] - e.centroid))
                * (k * inv_m);
            put(&mut d_xi_d_x, a, a, &own);
            let cross = (e.second_moment - e.centroid.outer(x[b])
                + xbar[a].outer(x[b] - e.centroid))
                * (-k * inv_m);
            put(&mut d_xi_d_x, a, b, &cross);
            let g = (e.centroid - xbar[a]) * (0.5 * k * inv_m);
            for c in 0..2 {
                d_xi_d_w[(2 * a + c, a)] += g.component(c);
                d_xi_d_w[(2 * a + c, b)] -= g.component(c);
            }
        }
    }
    let mut d_omega_d_x = jac.d_m_d_x.transpose();
    let mut d_omega_d_w = jac.d_m_d_w.transpose();
    for i in 0..n {
        let s = -lin.curvature[i];
        d_omega_d_x.row_mut(i).scale_mut(s);
        d_omega_d_w.row_mut(i).scale_mut(s);
    }
    LloydJacobian {
        d_xi_d_x,
        d_xi_d_w,
        d_omega_d_x,
        d_omega_d_w,
    }
}
