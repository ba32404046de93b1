use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::derivatives::{energy_gradient, lloyd_jacobian_from, mass_jacobian, Linearization};
use super::hessian::hessian_product;
use super::CalculusError;
use crate::energy::Problem;
use crate::geometry::GeneratorSet;
use crate::lloyd::LloydState;

/// Finite-difference step sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdSteps {
    pub position: f64,
    pub weight: f64,
}

impl FdSteps {
    /// `h·diam` for positions and `h·diam²` for weights.
    pub fn scaled(h: f64, diameter: f64) -> Self {
        Self {
            position: h * diameter,
            weight: h * diameter * diameter,
        }
    }

    /// `1e-6·diam` and `1e-6·diam²`.
    pub fn for_problem(problem: &Problem) -> Self {
        Self::scaled(1e-6, problem.domain().diameter())
    }
}

/// Worst disagreement between a closed form and its central differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockError {
    pub max_abs_error: f64,
    /// Largest closed-form entry in the compared columns.
    pub reference_scale: f64,
    /// `max_abs_error / max(reference_scale, 1e-300)`.
    pub relative_error: f64,
}

impl BlockError {
    fn new(max_abs_error: f64, reference_scale: f64) -> Self {
        Self {
            max_abs_error,
            reference_scale,
            relative_error: max_abs_error / reference_scale.max(1e-300),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub steps: FdSteps,
    /// Coordinates (in `(x₁, y₁, …, w₁, …)` order) skipped because the
    /// adjacency changed within `±h`.
    pub topology_changes: Vec<usize>,
    pub mass_gradient: BlockError,
    pub energy_gradient: BlockError,
    pub lloyd_jacobian: BlockError,
}

/// Values of the smooth maps at one state.
struct Sample {
    energy: f64,
    masses: DVector<f64>,
    maps: DVector<f64>,
    edges: Vec<(usize, usize)>,
    light: bool,
}

fn sample(problem: &Problem, gens: &GeneratorSet) -> Result<Sample, CalculusError> {
    let state = LloydState::new(problem, gens.clone())?;
    let n = state.len();
    let masses = DVector::from_vec(state.masses());
    let f = problem.cost();
    let mut maps = DVector::zeros(3 * n);
    for i in 0..n {
        let c = gens.position(i) + state.centroid_offset(i);
        maps[2 * i] = c.x;
        maps[2 * i + 1] = c.y;
        maps[2 * n + i] = -f.derivative(masses[i]);
    }
    Ok(Sample {
        energy: state.energy(problem),
        light: state.diagram().cells.iter().any(|c| c.is_empty())
            || masses.iter().any(|&m| m <= 0.0),
        edges: state.diagram().adjacency.edge_set(),
        masses,
        maps,
    })
}

fn perturbed(gens: &GeneratorSet, k: usize, delta: f64) -> Result<GeneratorSet, CalculusError> {
    let mut z = gens.to_flat();
    z[k] += delta;
    Ok(GeneratorSet::from_flat(&z)?)
}

fn step_for(k: usize, n: usize, steps: &FdSteps) -> f64 {
    if k < 2 * n {
        steps.position
    } else {
        steps.weight
    }
}

/// Coordinates whose `±h` perturbation keeps the adjacency graph.
pub fn stable_coordinates(
    problem: &Problem,
    gens: &GeneratorSet,
    steps: &FdSteps,
) -> Result<(Vec<usize>, Vec<usize>), CalculusError> {
    let n = gens.len();
    let base = sample(problem, gens)?.edges;
    let mut stable = Vec::new();
    let mut changed = Vec::new();
    for k in 0..3 * n {
        let h = step_for(k, n, steps);
        let ok = [h, -h].iter().all(|&d| {
            perturbed(gens, k, d)
                .and_then(|g| sample(problem, &g))
                .is_ok_and(|s| !s.light && s.edges == base)
        });
        if ok {
            stable.push(k);
        } else {
            changed.push(k);
        }
    }
    Ok((stable, changed))
}

fn compare(closed: &DMatrix<f64>, fd: &DMatrix<f64>, cols: &[usize]) -> BlockError {
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for &k in cols {
        for r in 0..closed.nrows() {
            err = err.max((closed[(r, k)] - fd[(r, k)]).abs());
            scale = scale.max(closed[(r, k)].abs());
        }
    }
    BlockError::new(err, scale)
}

/// Central differences of masses, energy and Lloyd maps against the closed
/// forms. Matrices are compared column by column, one column per coordinate.
pub fn fd_check(
    problem: &Problem,
    gens: &GeneratorSet,
    steps: FdSteps,
) -> Result<FdReport, CalculusError> {
    let n = gens.len();
    let lin = Linearization::new(problem, gens)?;
    let jac = mass_jacobian(&lin);
    let grad = energy_gradient(&lin, &jac);
    let lj = lloyd_jacobian_from(&lin, &jac);

    // column k of each closed form is the derivative along coordinate k
    let dm = jac.stacked().transpose();
    let de = DMatrix::from_row_slice(1, 3 * n, grad.flat().as_slice());
    let dmap = lj.full();

    let (stable, topology_changes) = stable_coordinates(problem, gens, &steps)?;
    let mut fd_m = DMatrix::zeros(n, 3 * n);
    let mut fd_e = DMatrix::zeros(1, 3 * n);
    let mut fd_map = DMatrix::zeros(3 * n, 3 * n);
    for &k in &stable {
        let h = step_for(k, n, &steps);
        let plus = sample(problem, &perturbed(gens, k, h)?)?;
        let minus = sample(problem, &perturbed(gens, k, -h)?)?;
        fd_m.set_column(k, &((&plus.masses - &minus.masses) / (2.0 * h)));
        fd_e[(0, k)] = (plus.energy - minus.energy) / (2.0 * h);
        fd_map.set_column(k, &((&plus.maps - &minus.maps) / (2.0 * h)));
    }
    Ok(FdReport {
        steps,
        mass_gradient: compare(&dm, &fd_m, &stable),
        energy_gradient: compare(&de, &fd_e, &stable),
        lloyd_jacobian: compare(&dmap, &fd_map, &stable),
        topology_changes,
    })
}

/// Fixed-point Hessian against central differences of the closed-form gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianCheck {
    pub topology_changes: Vec<usize>,
    pub error: BlockError,
}

pub fn fd_check_hessian(
    problem: &Problem,
    gens: &GeneratorSet,
    steps: FdSteps,
) -> Result<HessianCheck, CalculusError> {
    let n = gens.len();
    let lin = Linearization::new(problem, gens)?;
    let closed = hessian_product(&lin).matrix;
    let (stable, topology_changes) = stable_coordinates(problem, gens, &steps)?;
    let mut fd = DMatrix::zeros(3 * n, 3 * n);
    let gradient_at = |g: &GeneratorSet| -> Result<DVector<f64>, CalculusError> {
        let lin = Linearization::new(problem, g)?;
        Ok(energy_gradient(&lin, &mass_jacobian(&lin)).flat())
    };
    for &k in &stable {
        let h = step_for(k, n, &steps);
        let gp = gradient_at(&perturbed(gens, k, h)?)?;
        let gm = gradient_at(&perturbed(gens, k, -h)?)?;
        fd.set_column(k, &((gp - gm) / (2.0 * h)));
    }
    Ok(HessianCheck {
        error: compare(&closed, &fd, &stable),
        topology_changes,
    })
}
