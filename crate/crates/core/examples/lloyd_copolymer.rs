//! One run of the generalized Lloyd iteration for the block-copolymer cost
//! `λ√m` on the unit square: prints the energy trace, the eliminated
//! generators and the final side counts, then writes the final diagram.
//!
//! cargo run --release --example lloyd_copolymer [-- OUT_DIR]

use std::error::Error;
use std::path::Path;

use powerlloyd::app::{diagram_scene, write_json};
use powerlloyd::energy::{CostFunction, Problem};
use powerlloyd::geometry::Domain;
use powerlloyd::lloyd::{convergence_rate, random_init, run, LloydConfig};
use powerlloyd::measures::Density;

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/lloyd_copolymer".into());
    let problem = Problem::new(
        Domain::unit_square(),
        Density::uniform(),
        CostFunction::sqrt(0.01)?,
    )?;
    // stop on the position and weight steps only
    let config = LloydConfig::for_domain(problem.domain()).without_energy_stop();
    let init = random_init(problem.domain(), 30, 7, 0.0)?;
    let trace = run(&problem, init, &config)?;

    for r in trace
        .records
        .iter()
        .filter(|r| r.iter % 50 == 0 || !r.eliminated.is_empty())
    {
        println!(
            "iter {:>4}  N = {:>2}  E = {:.12}  eliminated {:?}",
            r.iter, r.n, r.energy, r.eliminated
        );
    }
    println!(
        "stopped ({:?}) after {} iterations with {} generators, E = {:.12}",
        trace.stop_reason,
        trace.iterations(),
        trace.final_generators.len(),
        trace.final_energy()
    );
    if trace.converged() {
        let fit = convergence_rate(&trace)?;
        println!(
            "energy error contracts by r = {:.4} per step (R² {:.5})",
            fit.rate, fit.r_squared
        );
    }

    let d = problem.diagram(&trace.final_generators)?;
    let mut sides = d.side_counts();
    sides.sort_unstable();
    println!("side counts {sides:?}");

    std::fs::create_dir_all(&out)?;
    write_json(
        &Path::new(&out).join("final_state.json"),
        &trace.final_generators,
    )?;
    let svg = diagram_scene(problem.domain(), &d, &trace.final_generators, true).render();
    std::fs::write(Path::new(&out).join("final.svg"), svg)?;
    println!("wrote {out}/final_state.json and {out}/final.svg");
    Ok(())
}
