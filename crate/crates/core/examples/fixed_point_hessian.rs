//! Runs to a fixed point, then inspects second-order information: the
//! Hessian there (with its finite-difference check and spectrum) and the
//! Lloyd step written as a preconditioned gradient step.
//!
//! cargo run --release --example fixed_point_hessian

use std::error::Error;

use powerlloyd::calculus::{descent_form, fd_check_hessian, hessian_at_fixed_point, FdSteps};
use powerlloyd::energy::{CostFunction, Problem};
use powerlloyd::geometry::Domain;
use powerlloyd::lloyd::{random_init, run, step, LloydConfig, LloydState};
use powerlloyd::measures::Density;

fn main() -> Result<(), Box<dyn Error>> {
    let problem = Problem::new(
        Domain::unit_square(),
        Density::uniform(),
        CostFunction::sqrt(0.02)?,
    )?;
    let config = LloydConfig::for_domain(problem.domain()).without_energy_stop();
    let start = random_init(problem.domain(), 8, 11, 0.0)?;

    // one step from the random start as a preconditioned gradient step
    let state = LloydState::new(&problem, start.clone())?;
    let (next, _) = step(&problem, &state, &config)?;
    let df = descent_form(&problem, &start, next.generators())?;
    println!(
        "first step: weight shift c = {:.3e}, reconstruction residual {:.1e}, min eigenvalue of sym(B) {:.3e}",
        df.shift, df.residual, df.preconditioner_min_eigenvalue
    );

    let trace = run(&problem, start, &config)?;
    println!(
        "{:?} after {} iterations",
        trace.stop_reason,
        trace.iterations()
    );
    let fixed = &trace.final_generators;
    let h = hessian_at_fixed_point(&problem, fixed, &config)?;
    println!(
        "Hessian: asymmetry {:.1e}, |H (0;1)| = {:.1e}",
        h.asymmetry, h.shift_residual
    );
    println!(
        "non-trivial eigenvalues in [{:.4e}, {:.4e}]; a local minimum has them all ≥ 0",
        h.summary.min_nontrivial, h.summary.max
    );
    let chk = fd_check_hessian(&problem, fixed, FdSteps::for_problem(&problem))?;
    println!("FD Hessian relative error {:.1e}", chk.error.relative_error);
    Ok(())
}
