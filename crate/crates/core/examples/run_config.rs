//! Drives the same pipeline as the command-line tool from a JSON config:
//! a preset plus overrides, a Lloyd run, and the analysis of its final state.
//!
//! cargo run --release --example run_config [-- OUT_DIR]

use std::error::Error;
use std::path::Path;

use powerlloyd::app::{analyze_state, cmd_lloyd, ProblemConfig};

const CONFIG: &str = r#"{
    "preset": "copolymer",
    "cost": {"lambda": 0.01},
    "init": {"n": 30, "restarts": 16},
    "schedule": {"round_length": 40},
    "seed": 5
}"#;

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/run_config".into());
    let cfg = ProblemConfig::parse(CONFIG, Path::new("."))?;
    let outcome = cmd_lloyd(&cfg, Path::new(&out))?;
    println!(
        "best of {} starts: {} generators, E = {:.10}; outputs in {out}",
        outcome.starts.len(),
        outcome.trace.final_generators.len(),
        outcome.trace.final_energy()
    );

    let analysis = analyze_state(
        &cfg.problem()?,
        &outcome.trace.final_generators,
        &cfg.lloyd_config(),
    )?;
    println!("{}", serde_json::to_string_pretty(&analysis.fixed_point)?);
    if let Some(h) = &analysis.hessian {
        println!(
            "smallest non-trivial Hessian eigenvalue {:.4e}",
            h.min_nontrivial
        );
    }
    Ok(())
}
