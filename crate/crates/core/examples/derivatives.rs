//! Closed-form derivatives at a random state: the mass Jacobian (a weighted
//! graph Laplacian in the weights), the energy gradient and the Lloyd-map
//! Jacobian, each checked against central differences.
//!
//! cargo run --release --example derivatives

use std::error::Error;

use powerlloyd::calculus::{fd_check, grad_energy, grad_masses, lloyd_jacobian, FdSteps};
use powerlloyd::energy::{CostFunction, Problem};
use powerlloyd::geometry::Domain;
use powerlloyd::lloyd::random_init;
use powerlloyd::measures::Density;

fn main() -> Result<(), Box<dyn Error>> {
    let problem = Problem::new(
        Domain::unit_square(),
        Density::uniform(),
        CostFunction::sqrt(0.005)?,
    )?;
    let gens = random_init(problem.domain(), 6, 21, 0.001)?;

    let jac = grad_masses(&problem, &gens)?;
    println!("∂m/∂w (row i, column j = ∂m_j/∂w_i):\n{:.4}", jac.d_m_d_w);
    let worst_row = (0..gens.len())
        .map(|i| jac.d_m_d_w.row(i).sum().abs())
        .fold(0.0, f64::max);
    println!("largest |row sum| {worst_row:.1e}");
    println!("point contacts {:?}", jac.point_contacts);

    let g = grad_energy(&problem, &gens)?;
    println!("∂E/∂x {:.3e}", g.d_e_d_x.transpose());
    println!("∂E/∂w {:.3e}", g.d_e_d_w.transpose());
    println!(
        "Σ ∂E/∂w = {:.1e} (weight shifts leave E unchanged)",
        g.d_e_d_w.sum()
    );

    let lj = lloyd_jacobian(&problem, &gens)?;
    println!(
        "Lloyd Jacobian is {}×{}",
        lj.full().nrows(),
        lj.full().ncols()
    );

    let report = fd_check(&problem, &gens, FdSteps::for_problem(&problem))?;
    println!(
        "relative FD errors: masses {:.1e}, energy {:.1e}, Lloyd maps {:.1e} ({} coordinates skipped)",
        report.mass_gradient.relative_error,
        report.energy_gradient.relative_error,
        report.lloyd_jacobian.relative_error,
        report.topology_changes.len()
    );
    Ok(())
}
