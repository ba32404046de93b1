use log::{debug, warn};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LloydConfig, LloydError, LloydRun, LloydTrace};
use crate::energy::Problem;
use crate::geometry::{Domain, GeneratorSet, GeometryError, Point2};

/// `n` positions uniform on the domain (rejection sampling in its bounding
/// box) and weights uniform on `[−weight_scale, weight_scale]`.
pub fn random_init(
    domain: &Domain,
    n: usize,
    seed: u64,
    weight_scale: f64,
) -> Result<GeneratorSet, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bounding_box();
    let mut positions = Vec::with_capacity(n);
    while positions.len() < n {
        let p = Point2::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        if domain.boundary().contains(p, 0.0) {
            positions.push(p);
        }
    }
    let weights = (0..n)
        .map(|_| {
            if weight_scale > 0.0 {
                rng.random_range(-weight_scale..=weight_scale)
            } else {
                0.0
            }
        })
        .collect();
    GeneratorSet::new(positions, weights)
}

/// Seed of the `k`-th start: stream `k` of the generator seeded with `seed`.
pub fn start_seed(seed: u64, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng.next_u64()
}

/// Culling schedule for [`multistart`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultistartSchedule {
    /// Iterations every live run advances between culls.
    pub round_length: usize,
    /// Fraction of the population kept at each cull (rounded up).
    pub survival_fraction: f64,
    /// Culling stops once this many runs remain; they continue to completion.
    pub min_survivors: usize,
    /// Initial weights are uniform on `[−weight_scale, weight_scale]`.
    pub weight_scale: f64,
}

impl Default for MultistartSchedule {
    fn default() -> Self {
        Self {
            round_length: 50,
            survival_fraction: 0.5,
            min_survivors: 1,
            weight_scale: 0.0,
        }
    }
}

/// Summary of one start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: usize,
    pub seed: u64,
    /// Energy when the run was culled or finished.
    pub energy: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub iterations: usize,
    /// Round at which the run was culled; `None` for survivors.
    pub culled_in_round: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultistartResult {
    pub best: LloydTrace,
    pub best_start: usize,
    pub starts: Vec<StartSummary>,
}

struct Entry {
    start: usize,
    seed: u64,
    run: LloydRun,
}

/// Runs `restarts` random starts of `n0` generators, advancing the whole
/// population in synchronous rounds and keeping the lowest-energy fraction
/// after each round; survivors run to completion and the best is returned.
///
/// Results do not depend on the number of worker threads.
pub fn multistart(
    problem: &Problem,
    n0: usize,
    restarts: usize,
    config: &LloydConfig,
    schedule: &MultistartSchedule,
) -> Result<MultistartResult, LloydError> {
    if restarts == 0 || n0 == 0 {
        return Err(LloydError::NoStarts);
    }
    let mut starts: Vec<StartSummary> = Vec::with_capacity(restarts);
    let built: Vec<Result<Entry, LloydError>> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let seed = start_seed(config.seed, k);
            let init = random_init(problem.domain(), n0, seed, schedule.weight_scale)?;
            let cfg = LloydConfig {
                seed,
                ..config.clone()
            };
            Ok(Entry {
                start: k,
                seed,
                run: LloydRun::new(problem, init, cfg)?,
            })
        })
        .collect();
    let mut alive: Vec<Entry> = Vec::with_capacity(restarts);
    for b in built {
        alive.push(b?);
    }

    let min_survivors = schedule.min_survivors.max(1);
    let round = schedule.round_length.max(1);
    let mut round_index = 0;
    while alive.len() > min_survivors && alive.iter().any(|e| !e.run.is_finished()) {
        round_index += 1;
        advance_all(problem, &mut alive, round, &mut starts, round_index)?;
        alive.sort_by(|a, b| {
            a.run
                .energy()
                .total_cmp(&b.run.energy())
                .then(a.start.cmp(&b.start))
        });
        let keep = ((alive.len() as f64 * schedule.survival_fraction).ceil() as usize)
            .max(min_survivors)
            .min(alive.len());
        for e in alive.drain(keep..) {
            starts.push(summary(&e, Some(round_index)));
        }
        debug!(
            "multistart round {round_index}: {} runs remain",
            alive.len()
        );
    }
    while alive.iter().any(|e| !e.run.is_finished()) {
        advance_all(problem, &mut alive, usize::MAX, &mut starts, round_index)?;
    }
    if alive.is_empty() {
        return Err(LloydError::NoStarts);
    }
    alive.sort_by(|a, b| {
        a.run
            .energy()
            .total_cmp(&b.run.energy())
            .then(a.start.cmp(&b.start))
    });
    for e in &alive {
        starts.push(summary(e, None));
    }
    starts.sort_by_key(|s| s.start);
    let best = alive.swap_remove(0);
    Ok(MultistartResult {
        best_start: best.start,
        best: best.run.into_trace(),
        starts,
    })
}

fn summary(e: &Entry, culled_in_round: Option<usize>) -> StartSummary {
    StartSummary {
        start: e.start,
        seed: e.seed,
        energy: e.run.energy(),
        n: e.run.state().len(),
        iterations: e.run.trace().iterations(),
        culled_in_round,
    }
}

/// Advances every live run; runs that fail are dropped with a warning.
fn advance_all(
    problem: &Problem,
    alive: &mut Vec<Entry>,
    budget: usize,
    starts: &mut Vec<StartSummary>,
    round_index: usize,
) -> Result<(), LloydError> {
    let outcomes: Vec<Result<bool, LloydError>> = alive
        .par_iter_mut()
        .map(|e| e.run.advance(problem, budget))
        .collect();
    let mut kept = Vec::with_capacity(alive.len());
    for (e, outcome) in alive.drain(..).zip(outcomes) {
        match outcome {
            Ok(_) => kept.push(e),
            Err(err) => {
                warn!("start {} failed: {err}", e.start);
                starts.push(StartSummary {
                    energy: f64::NAN,
                    ..summary(&e, Some(round_index))
                });
            }
        }
    }
    *alive = kept;
    Ok(())
}
