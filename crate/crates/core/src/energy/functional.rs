use serde::{Deserialize, Serialize};

use super::{CostFunction, EnergyError};
use crate::geometry::{build_power_diagram, voronoi, Domain, GeneratorSet, Point2, PowerDiagram};
use crate::measures::{polygon_moments_about, total_mass, Density};

/// Domain, density and mass cost: everything but the generators.
#[derive(Clone, Debug)]
pub struct Problem {
    domain: Domain,
    density: Density,
    cost: CostFunction,
    total_mass: f64,
}

impl Problem {
    /// Integrates the density over the domain and checks the cost on `(0, total mass]`.
    pub fn new(domain: Domain, density: Density, cost: CostFunction) -> Result<Self, EnergyError> {
        let total = total_mass(&domain, &density);
        if !(total > 0.0) || !total.is_finite() {
            return Err(EnergyError::ZeroTotalMass);
        }
        cost.check_admissible(total)?;
        Ok(Self {
            domain,
            density,
            cost,
            total_mass: total,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Same domain and density with another cost.
    pub fn with_cost(&self, cost: CostFunction) -> Result<Self, EnergyError> {
        cost.check_admissible(self.total_mass)?;
        Ok(Self {
            cost,
            ..self.clone()
        })
    }

    pub fn diagram(&self, gens: &GeneratorSet) -> Result<PowerDiagram, EnergyError> {
        Ok(build_power_diagram(&self.domain, gens)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEnergy {
    pub mass: f64,
    pub cost: f64,
    /// `∫_{P_i} |x − x_i|² ρ`.
    pub transport: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// `Σ f(m_i)`.
    pub cost_term: f64,
    /// `Σ ∫_{P_i} |x − x_i|² ρ`.
    pub transport_term: f64,
    pub per_cell: Vec<CellEnergy>,
}

impl EnergyBreakdown {
    pub fn masses(&self) -> Vec<f64> {
        self.per_cell.iter().map(|c| c.mass).collect()
    }
}

/// `E = Σ f(m_i) + Σ ∫_{P_i} |x − x_i|² ρ` over the power diagram of `gens`.
pub fn energy(problem: &Problem, gens: &GeneratorSet) -> Result<EnergyBreakdown, EnergyError> {
    let diagram = problem.diagram(gens)?;
    Ok(energy_of_diagram(problem, &diagram))
}

/// Energy of an already-built diagram; empty cells contribute `f(0)`.
pub fn energy_of_diagram(problem: &Problem, diagram: &PowerDiagram) -> EnergyBreakdown {
    let gens = &diagram.generators;
    let per_cell: Vec<CellEnergy> = diagram
        .cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let m = polygon_moments_about(&cell.polygon, problem.density(), gens.position(i));
            CellEnergy {
                mass: m.mass,
                cost: problem.cost().value(m.mass),
                transport: m.second_moment.trace(),
            }
        })
        .collect();
    let cost_term = per_cell.iter().map(|c| c.cost).sum();
    let transport_term = per_cell.iter().map(|c| c.transport).sum();
    EnergyBreakdown {
        total: cost_term + transport_term,
        cost_term,
        transport_term,
        per_cell,
    }
}

/// Quantization distortion `Σ ∫_{V_i} |x − x_i|² ρ` over the Voronoi diagram of `points`.
pub fn distortion(
    domain: &Domain,
    density: &Density,
    points: &[Point2],
) -> Result<f64, EnergyError> {
    let d = voronoi(domain, points)?;
    Ok(d.cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            polygon_moments_about(&c.polygon, density, points[i])
                .second_moment
                .trace()
        })
        .sum())
}

fn check_masses(masses: &[f64], n: usize) -> Result<(), EnergyError> {
    if masses.len() != n {
        return Err(EnergyError::InvalidMassVector(format!(
            "expected {n} masses, got {}",
            masses.len()
        )));
    }
    if let Some(m) = masses.iter().find(|m| !m.is_finite() || **m < 0.0) {
        return Err(EnergyError::InvalidMassVector(format!(
            "masses must be finite and non-negative, got {m}"
        )));
    }
    Ok(())
}

/// `H((X¹,w¹),(X²,w²),M) = Σ_i [M_i w¹_i + f(M_i) + ∫_{P_i(X²,w²)} (|x − x¹_i|² − w¹_i) ρ]`
/// for any `M ∈ ℝ₊^N`.
pub fn helper_h(
    problem: &Problem,
    first: &GeneratorSet,
    second: &GeneratorSet,
    masses: &[f64],
) -> Result<f64, EnergyError> {
    if first.len() != second.len() {
        return Err(EnergyError::InvalidMassVector(format!(
            "states have {} and {} generators",
            first.len(),
            second.len()
        )));
    }
    check_masses(masses, first.len())?;
    let diagram = problem.diagram(second)?;
    let f = problem.cost();
    Ok(diagram
        .cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let (x1, w1) = (first.position(i), first.weight(i));
            let m = polygon_moments_about(&cell.polygon, problem.density(), x1);
            masses[i] * w1 + f.value(masses[i]) + m.second_moment.trace() - w1 * m.mass
        })
        .sum())
}

/// [`helper_h`] restricted to mass vectors with `Σ M_i = ∫_Ω ρ` (relative tolerance 1e-8).
pub fn helper_h_constrained(
    problem: &Problem,
    first: &GeneratorSet,
    second: &GeneratorSet,
    masses: &[f64],
) -> Result<f64, EnergyError> {
    let sum: f64 = masses.iter().sum();
    if (sum - problem.total_mass()).abs() > 1e-8 * problem.total_mass() {
        return Err(EnergyError::InvalidMassVector(format!(
            "masses sum to {sum}, total mass is {}",
            problem.total_mass()
        )));
    }
    helper_h(problem, first, second, masses)
}
