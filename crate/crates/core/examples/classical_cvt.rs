//! Classical Lloyd for a centroidal Voronoi tessellation: zero cost, all
//! weights held at zero, and a non-uniform density. The quantization
//! distortion falls monotonically.
//!
//! cargo run --release --example classical_cvt

use std::error::Error;

use powerlloyd::energy::{distortion, CostFunction, Problem};
use powerlloyd::geometry::Domain;
use powerlloyd::lloyd::{fixed_point_residual, random_init, run, LloydConfig, LloydState};
use powerlloyd::measures::Density;

fn main() -> Result<(), Box<dyn Error>> {
    let density = Density::analytic("corner peak", |p| {
        1.0 + 8.0 * (-((p.x - 0.25).powi(2) + (p.y - 0.25).powi(2)) / 0.05).exp()
    });
    let problem = Problem::new(Domain::unit_square(), density, CostFunction::zero())?;
    let config = LloydConfig::for_domain(problem.domain())
        .classical()
        .without_energy_stop();
    let init = random_init(problem.domain(), 16, 3, 0.0)?;
    let before = distortion(problem.domain(), problem.density(), init.positions())?;
    let trace = run(&problem, init, &config)?;
    let after = distortion(
        problem.domain(),
        problem.density(),
        trace.final_generators.positions(),
    )?;

    let energies = trace.energies();
    assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    println!(
        "distortion {before:.6} -> {after:.6} in {} iterations ({:?})",
        trace.iterations(),
        trace.stop_reason
    );

    let state = LloydState::new(&problem, trace.final_generators.clone())?;
    let (dx, _) = fixed_point_residual(&problem, &state, &config)?;
    println!("largest generator-to-centroid distance {dx:.1e}");
    for (i, p) in trace.final_generators.positions().iter().enumerate() {
        println!(
            "generator {i:>2}: ({:.4}, {:.4})  mass {:.4}",
            p.x,
            p.y,
            state.masses()[i]
        );
    }
    Ok(())
}
