//! Optimal location on a population raster: the bundled two-region country
//! fixture, cost `−λ m ln m`. Generators that start over empty sea lose all
//! mass and are removed; larger λ leaves fewer sites.
//!
//! cargo run --release --example optimal_location [-- OUT_DIR]

use std::error::Error;
use std::path::Path;

use powerlloyd::app::{diagram_scene, Preset, ProblemConfig};
use powerlloyd::lloyd::{random_init, run};

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/optimal_location".into());
    std::fs::create_dir_all(&out)?;
    let cfg = ProblemConfig::from_preset(Preset::Location);
    let config = cfg.lloyd_config();
    for lambda in [0.01, 0.005, 0.002] {
        let problem = cfg.problem_with_cost(&cfg.cost_with_lambda(lambda)?)?;
        let init = random_init(problem.domain(), 80, 3, 0.0)?;
        let trace = run(&problem, init, &config)?;
        let removed: usize = trace.records.iter().map(|r| r.eliminated.len()).sum();
        println!(
            "λ = {lambda}: {:?} after {} iterations, {} sites ({removed} removed), E = {:.6}",
            trace.stop_reason,
            trace.iterations(),
            trace.final_generators.len(),
            trace.final_energy()
        );
        let d = problem.diagram(&trace.final_generators)?;
        let svg = diagram_scene(problem.domain(), &d, &trace.final_generators, true).render();
        std::fs::write(Path::new(&out).join(format!("sites_{lambda}.svg")), svg)?;
    }
    println!("wrote {out}/sites_*.svg");
    Ok(())
}
