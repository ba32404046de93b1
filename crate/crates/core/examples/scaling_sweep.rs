//! Final generator count against λ for the `λ√m` cost, each point the best
//! of a multistart population, and the slope of log N against log λ.
//!
//! cargo run --release --example scaling_sweep

use std::error::Error;

use powerlloyd::app::{sweep_experiment, Preset, ProblemConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let cfg = ProblemConfig::from_preset(Preset::Copolymer);
    let report = sweep_experiment(&cfg)?;
    for row in &report.rows {
        println!(
            "λ = {:<6} N = {:>2}  E = {:.8}",
            row.lambda, row.n_final, row.energy
        );
    }
    println!(
        "log N = {:.3} log λ + {:.3}  (R² {:.3}; hexagonal packing predicts −2/3)",
        report.fit.slope, report.fit.intercept, report.fit.r_squared
    );
    Ok(())
}
