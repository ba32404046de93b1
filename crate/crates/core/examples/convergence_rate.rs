//! Linear convergence: fits `E_n − E_final ≈ C rⁿ` on runs with 6, 10 and
//! 25 generators and reports the median rate per size.
//!
//! cargo run --release --example convergence_rate

use std::error::Error;

use powerlloyd::app::{rate_experiment, Preset, ProblemConfig};
use powerlloyd::lloyd::fit_rate;

fn main() -> Result<(), Box<dyn Error>> {
    // a clean geometric sequence recovers its ratio
    let errors: Vec<f64> = (0..80).map(|k| 0.9f64.powi(k)).collect();
    println!(
        "synthetic 0.9ⁿ: fitted r = {:.9}",
        fit_rate(&errors, 0.0)?.rate
    );

    let cfg = ProblemConfig::from_preset(Preset::Copolymer);
    let report = rate_experiment(&cfg)?;
    for row in &report.rows {
        println!(
            "N = {:>2} start {:>3}: r = {:.4}  R² = {:.5}  window {:?}..{:?} of {} iterations",
            row.n,
            row.start,
            row.rate.unwrap_or(f64::NAN),
            row.r_squared.unwrap_or(f64::NAN),
            row.window_start,
            row.window_end,
            row.iterations
        );
    }
    for s in &report.summary {
        println!(
            "N = {:>2}: median r = {:.4} over {} traces ({} starts tried)",
            s.n,
            s.median_rate.unwrap_or(f64::NAN),
            s.traces,
            s.attempts
        );
    }
    Ok(())
}
