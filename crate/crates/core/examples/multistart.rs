//! Multistart: many random starts advanced in synchronous rounds, the
//! higher-energy half culled after each round, survivors run to completion.
//!
//! cargo run --release --example multistart

use std::error::Error;

use powerlloyd::energy::{CostFunction, Problem};
use powerlloyd::geometry::Domain;
use powerlloyd::lloyd::{multistart, LloydConfig, MultistartSchedule};
use powerlloyd::measures::Density;

fn main() -> Result<(), Box<dyn Error>> {
    let problem = Problem::new(
        Domain::unit_square(),
        Density::uniform(),
        CostFunction::sqrt(0.01)?,
    )?;
    let config = LloydConfig {
        seed: 11,
        ..LloydConfig::for_domain(problem.domain()).without_energy_stop()
    };
    let schedule = MultistartSchedule {
        round_length: 30,
        survival_fraction: 0.5,
        min_survivors: 2,
        weight_scale: 0.0,
    };
    let result = multistart(&problem, 30, 40, &config, &schedule)?;

    let mut starts = result.starts.clone();
    starts.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    for s in starts.iter().take(5) {
        println!(
            "start {:>2}: E = {:.10}, N = {}, {} iterations, culled in round {:?}",
            s.start, s.energy, s.n, s.iterations, s.culled_in_round
        );
    }
    let culled = result
        .starts
        .iter()
        .filter(|s| s.culled_in_round.is_some())
        .count();
    println!(
        "best start {} of {} ({culled} culled): E = {:.10} with {} generators",
        result.best_start,
        result.starts.len(),
        result.best.final_energy(),
        result.best.final_generators.len()
    );
    Ok(())
}
