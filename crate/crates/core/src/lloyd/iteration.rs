use std::io::Write;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LloydConfig, LloydError, LloydMode};
use crate::energy::Problem;
use crate::geometry::{GeneratorSet, Point2, PowerDiagram};
use crate::measures::{polygon_moments_about, CellMoments};

/// Generators together with their diagram and cell moments.
#[derive(Clone, Debug)]
pub struct LloydState {
    generators: GeneratorSet,
    iteration: usize,
    diagram: PowerDiagram,
    /// Moments of each cell in coordinates centred at its generator.
    local_moments: Vec<CellMoments>,
}

impl LloydState {
    pub fn new(problem: &Problem, generators: GeneratorSet) -> Result<Self, LloydError> {
        Self::at_iteration(problem, generators, 0)
    }

    fn at_iteration(
        problem: &Problem,
        generators: GeneratorSet,
        iteration: usize,
    ) -> Result<Self, LloydError> {
        let diagram = problem.diagram(&generators)?;
        let local_moments = diagram
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                polygon_moments_about(&c.polygon, problem.density(), generators.position(i))
            })
            .collect();
        Ok(Self {
            generators,
            iteration,
            diagram,
            local_moments,
        })
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn diagram(&self) -> &PowerDiagram {
        &self.diagram
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.local_moments.iter().map(|m| m.mass).collect()
    }

    /// Cell moments in absolute coordinates.
    pub fn moments(&self) -> Vec<CellMoments> {
        self.local_moments
            .iter()
            .enumerate()
            .map(|(i, m)| m.translated(self.generators.position(i)))
            .collect()
    }

    /// Centroid of cell `i` minus its generator.
    pub fn centroid_offset(&self, i: usize) -> Point2 {
        self.local_moments[i].centroid
    }

    pub fn energy(&self, problem: &Problem) -> f64 {
        let f = problem.cost();
        self.local_moments
            .iter()
            .map(|m| f.value(m.mass) + m.second_moment.trace())
            .sum()
    }

    /// Indices whose cell is empty or lighter than the mass floor.
    pub fn light_cells(&self, problem: &Problem, config: &LloydConfig) -> Vec<usize> {
        let floor = config.mass_floor * problem.total_mass();
        (0..self.len())
            .filter(|&i| self.diagram.cells[i].is_empty() || self.local_moments[i].mass < floor)
            .collect()
    }
}

/// The Lloyd maps: cell centroids and `−f′(m_i)`.
pub fn lloyd_maps(
    problem: &Problem,
    state: &LloydState,
    config: &LloydConfig,
) -> Result<(Vec<Point2>, Vec<f64>), LloydError> {
    let floor = config.mass_floor * problem.total_mass();
    let mut xi = Vec::with_capacity(state.len());
    let mut omega = Vec::with_capacity(state.len());
    for i in 0..state.len() {
        if state.diagram.cells[i].is_empty() {
            return Err(LloydError::EmptyCell { index: i });
        }
        let m = &state.local_moments[i];
        if m.mass < floor {
            return Err(LloydError::BelowMassFloor {
                index: i,
                mass: m.mass,
            });
        }
        xi.push(state.generators.position(i) + m.centroid);
        omega.push(-problem.cost().derivative(m.mass));
    }
    Ok((xi, omega))
}

/// `max_i |ξ_i − x_i|` and `max_i |(ω_i − ω̄) − (w_i − w̄)|` at a state.
pub fn fixed_point_residual(
    problem: &Problem,
    state: &LloydState,
    config: &LloydConfig,
) -> Result<(f64, f64), LloydError> {
    let (xi, omega) = lloyd_maps(problem, state, config)?;
    let dx = (0..state.len())
        .map(|i| xi[i].distance(state.generators.position(i)))
        .fold(0.0, f64::max);
    let dw = match config.mode {
        LloydMode::Generalized => centred_max_diff(&omega, state.generators.weights()),
        LloydMode::ClassicalCvt => 0.0,
    };
    Ok((dx, dw))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn centred_max_diff(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - ma) - (y - mb)).abs())
        .fold(0.0, f64::max)
}

/// One line of a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub energy: f64,
    /// Largest generator displacement of this step; absent for the initial record.
    pub dx_max: Option<f64>,
    /// Largest mean-shifted weight change of this step.
    pub dw_max: Option<f64>,
    /// Indices (numbered as at the start of the step) removed for empty or massless cells.
    pub eliminated: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Position and weight steps fell below tolerance.
    Converged,
    /// The energy change fell below `tol_energy·|E₀|` first.
    Stalled,
    MaxIterations,
    /// Every cell vanished.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LloydTrace {
    pub records: Vec<IterationRecord>,
    pub stop_reason: Option<StopReason>,
    pub initial: GeneratorSet,
    pub final_generators: GeneratorSet,
    /// Generators after every record; filled only when `record_states` is set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<GeneratorSet>,
}

impl LloydTrace {
    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.energy)
    }

    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn converged(&self) -> bool {
        self.stop_reason == Some(StopReason::Converged)
    }

    /// Writes one JSON object per record.
    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Drops `remove` (sorted) from the state and rebuilds it.
fn without(
    problem: &Problem,
    state: &LloydState,
    remove: &[usize],
) -> Result<LloydState, LloydError> {
    if remove.len() == state.len() {
        return Err(LloydError::Degenerate);
    }
    let gens = state
        .generators
        .retain_indices(|i| remove.binary_search(&i).is_err());
    LloydState::at_iteration(problem, gens, state.iteration)
}

/// Removes light cells until none remain. Returns the surviving state and the
/// removed indices in the numbering of `state`.
pub fn eliminate_light_cells(
    problem: &Problem,
    state: LloydState,
    config: &LloydConfig,
) -> Result<(LloydState, Vec<usize>), LloydError> {
    let mut current = state;
    let mut index_map: Vec<usize> = (0..current.len()).collect();
    let mut removed = Vec::new();
    loop {
        let light = current.light_cells(problem, config);
        if light.is_empty() {
            removed.sort_unstable();
            return Ok((current, removed));
        }
        removed.extend(light.iter().map(|&i| index_map[i]));
        index_map = (0..current.len())
            .filter(|i| light.binary_search(i).is_err())
            .map(|i| index_map[i])
            .collect();
        current = without(problem, &current, &light)?;
    }
}

/// Moves exactly coincident positions apart by `1e-9·diam` in a seeded direction.
fn separate_coincident(positions: &mut [Point2], diam: f64, seed: u64, problem: &Problem) {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|&a, &b| {
        positions[a]
            .x
            .total_cmp(&positions[b].x)
            .then(positions[a].y.total_cmp(&positions[b].y))
    });
    let mut rng: Option<ChaCha8Rng> = None;
    for k in 1..order.len() {
        let (a, b) = (order[k - 1], order[k]);
        if positions[a] == positions[b] {
            let rng = rng.get_or_insert_with(|| ChaCha8Rng::seed_from_u64(seed));
            warn!("generators {a} and {b} collided; separating them");
            loop {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let moved = positions[b] + Point2::new(t.cos(), t.sin()) * (1e-9 * diam);
                if problem.domain().contains(moved) {
                    positions[b] = moved;
                    break;
                }
            }
        }
    }
}

/// One step: remove light cells, apply the Lloyd maps, rebuild, remove light cells again.
pub fn step(
    problem: &Problem,
    state: &LloydState,
    config: &LloydConfig,
) -> Result<(LloydState, IterationRecord), LloydError> {
    let (pruned, mut eliminated) = eliminate_light_cells(problem, state.clone(), config)?;
    let survivors: Vec<usize> = (0..state.len())
        .filter(|i| eliminated.binary_search(i).is_err())
        .collect();

    let (mut xi, omega) = lloyd_maps(problem, &pruned, config)?;
    let weights = match config.mode {
        LloydMode::Generalized => omega,
        LloydMode::ClassicalCvt => vec![0.0; xi.len()],
    };
    separate_coincident(
        &mut xi,
        problem.domain().diameter(),
        config.seed ^ (state.iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        problem,
    );
    let dx_max = xi
        .iter()
        .zip(pruned.generators.positions())
        .map(|(a, b)| a.distance(*b))
        .fold(0.0, f64::max);
    let dw_max = centred_max_diff(&weights, pruned.generators.weights());

    let next = GeneratorSet::new(xi, weights)?;
    let next = LloydState::at_iteration(problem, next, state.iteration + 1)?;
    let (next, late) = eliminate_light_cells(problem, next, config)?;
    eliminated.extend(late.iter().map(|&k| survivors[k]));
    eliminated.sort_unstable();

    let record = IterationRecord {
        iter: next.iteration,
        n: next.len(),
        energy: next.energy(problem),
        dx_max: Some(dx_max),
        dw_max: Some(dw_max),
        eliminated,
    };
    Ok((next, record))
}

/// A run that can be advanced a few iterations at a time.
#[derive(Clone, Debug)]
pub struct LloydRun {
    state: LloydState,
    trace: LloydTrace,
    config: LloydConfig,
    energy_scale: f64,
}

impl LloydRun {
    /// Builds the initial state and removes cells that start out light.
    pub fn new(
        problem: &Problem,
        init: GeneratorSet,
        config: LloydConfig,
    ) -> Result<Self, LloydError> {
        let mut init = init;
        if config.mode == LloydMode::ClassicalCvt {
            let (p, _) = init.clone().into_parts();
            init = GeneratorSet::unweighted(p)?;
        }
        let state = LloydState::new(problem, init.clone())?;
        let (state, eliminated) = eliminate_light_cells(problem, state, &config)?;
        let energy = state.energy(problem);
        let record = IterationRecord {
            iter: 0,
            n: state.len(),
            energy,
            dx_max: None,
            dw_max: None,
            eliminated,
        };
        let states = if config.record_states {
            vec![state.generators.clone()]
        } else {
            Vec::new()
        };
        Ok(Self {
            trace: LloydTrace {
                records: vec![record],
                stop_reason: None,
                initial: init,
                final_generators: state.generators.clone(),
                states,
            },
            state,
            config,
            energy_scale: energy.abs(),
        })
    }

    pub fn state(&self) -> &LloydState {
        &self.state
    }

    pub fn trace(&self) -> &LloydTrace {
        &self.trace
    }

    pub fn into_trace(self) -> LloydTrace {
        self.trace
    }

    pub fn is_finished(&self) -> bool {
        self.trace.stop_reason.is_some()
    }

    pub fn energy(&self) -> f64 {
        self.trace.final_energy()
    }

    /// Advances at most `budget` iterations; returns true once finished.
    pub fn advance(&mut self, problem: &Problem, budget: usize) -> Result<bool, LloydError> {
        for _ in 0..budget {
            if self.is_finished() {
                break;
            }
            if self.state.iteration >= self.config.max_iterations {
                self.trace.stop_reason = Some(StopReason::MaxIterations);
                break;
            }
            let previous = self.trace.final_energy();
            let (next, record) = match step(problem, &self.state, &self.config) {
                Ok(v) => v,
                Err(LloydError::Degenerate) => {
                    self.trace.stop_reason = Some(StopReason::Degenerate);
                    break;
                }
                Err(e) => return Err(e),
            };
            let converged = record.eliminated.is_empty()
                && record.dx_max.unwrap_or(f64::INFINITY) < self.config.tol_position
                && record.dw_max.unwrap_or(f64::INFINITY) < self.config.tol_weight;
            let stalled = self.config.tol_energy > 0.0
                && record.eliminated.is_empty()
                && (previous - record.energy).abs() <= self.config.tol_energy * self.energy_scale;
            self.state = next;
            if self.config.record_states {
                self.trace.states.push(self.state.generators.clone());
            }
            self.trace.records.push(record);
            self.trace.final_generators = self.state.generators.clone();
            if converged {
                self.trace.stop_reason = Some(StopReason::Converged);
            } else if stalled {
                self.trace.stop_reason = Some(StopReason::Stalled);
            }
        }
        Ok(self.is_finished())
    }
}

/// Iterates the Lloyd maps from `init` until a stopping rule fires.
pub fn run(
    problem: &Problem,
    init: GeneratorSet,
    config: &LloydConfig,
) -> Result<LloydTrace, LloydError> {
    let mut r = LloydRun::new(problem, init, config.clone())?;
    r.advance(problem, usize::MAX)?;
    Ok(r.into_trace())
}
