use nalgebra::DMatrix;
use powerlloyd::calculus::{
    descent_form, fd_check, fd_check_hessian, grad_energy, grad_masses, hessian_at_fixed_point,
    lloyd_jacobian, CalculusError, FdSteps,
};
use powerlloyd::energy::{CostFunction, Problem};
use powerlloyd::geometry::{Domain, GeneratorSet, Point2};
use powerlloyd::lloyd::{random_init, run, step, LloydConfig, LloydState};
use powerlloyd::measures::{edge_moments, Density};

fn sqrt_problem(lambda: f64) -> Problem {
    Problem::new(
        Domain::unit_square(),
        Density::uniform(),
        CostFunction::sqrt(lambda).unwrap(),
    )
    .unwrap()
}

fn split_state() -> GeneratorSet {
    GeneratorSet::new(
        vec![Point2::new(0.25, 0.5), Point2::new(0.75, 0.5)],
        vec![0.1, 0.0],
    )
    .unwrap()
}

fn grid(k: usize) -> GeneratorSet {
    let h = 1.0 / k as f64;
    let pts = (0..k * k)
        .map(|i| Point2::new(h * (0.5 + (i % k) as f64), h * (0.5 + (i / k) as f64)))
        .collect();
    GeneratorSet::unweighted(pts).unwrap()
}

/// Laplacian assembled straight from the diagram's edge list.
fn independent_laplacian(p: &Problem, g: &GeneratorSet) -> DMatrix<f64> {
    let d = p.diagram(g).unwrap();
    let n = g.len();
    let mut l = DMatrix::zeros(n, n);
    for e in &d.adjacency.edges {
        let m = edge_moments(e.segment.0, e.segment.1, p.density()).mass;
        let u = m / (2.0 * e.distance);
        l[(e.i, e.j)] = -u;
        l[(e.j, e.i)] = -u;
    }
    for i in 0..n {
        l[(i, i)] = -l.row(i).sum();
    }
    l
}

#[test]
fn split_example_values() {
    let p = sqrt_problem(1.0);
    let g = split_state();
    let j = grad_masses(&p, &g).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
    assert!((&j.d_m_d_w - expected).amax() < 1e-14);
    assert!((j.d_m_d_x[(0, 0)] - 0.7).abs() < 1e-14);
    assert!(j.d_m_d_x[(1, 0)].abs() < 1e-14);

    let lj = lloyd_jacobian(&p, &g).unwrap();
    let expected = 1.0 / (4.0 * 0.6f64.powf(1.5));
    assert!((lj.d_omega_d_w[(0, 0)] - expected).abs() < 1e-12);
    assert!((lj.d_omega_d_w[(0, 0)] - 0.5379).abs() < 1e-4);

    let after = {
        let s = LloydState::new(&p, g.clone()).unwrap();
        step(&p, &s, &LloydConfig::default()).unwrap().0
    };
    let df = descent_form(&p, &g, after.generators()).unwrap();
    assert_eq!(df.reduced.shape(), (1, 1));
    assert!((df.reduced[(0, 0)] - 2.0).abs() < 1e-13);
    assert!(df.residual < 1e-12, "{}", df.residual);
}

#[test]
fn laplacian_structure_on_random_states() {
    let p = sqrt_problem(0.005);
    for seed in 0..10 {
        let g = random_init(p.domain(), 12, seed, 0.002).unwrap();
        let j = match grad_masses(&p, &g) {
            Ok(j) => j,
            Err(CalculusError::EmptyCell { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let l = independent_laplacian(&p, &g);
        assert!((&j.d_m_d_w - &l).amax() < 1e-12);
        assert!((&j.d_m_d_w - j.d_m_d_w.transpose()).amax() < 1e-15);
        for i in 0..12 {
            assert!(j.d_m_d_w.row(i).sum().abs() < 1e-12);
        }
        // total mass is fixed, so every row of ∇_X m sums to zero over j
        for r in 0..24 {
            assert!(j.d_m_d_x.row(r).sum().abs() < 1e-12);
        }
    }
}

#[test]
fn fd_agreement_on_random_states() {
    let p = sqrt_problem(0.005);
    let steps = FdSteps::for_problem(&p);
    for seed in 0..5 {
        let g = random_init(p.domain(), 10, 100 + seed, 0.001).unwrap();
        let r = fd_check(&p, &g, steps).unwrap();
        assert!(r.mass_gradient.relative_error < 1e-5, "{r:?}");
        assert!(r.energy_gradient.relative_error < 1e-5, "{r:?}");
        assert!(r.lloyd_jacobian.relative_error < 1e-5, "{r:?}");
        let ge = grad_energy(&p, &g).unwrap();
        assert!(ge.d_e_d_w.sum().abs() < 1e-14);
    }
}

#[test]
fn h_sweep_improves_then_plateaus() {
    let p = sqrt_problem(0.005);
    let g = random_init(p.domain(), 10, 3, 0.001).unwrap();
    let errs: Vec<f64> = [1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&h| {
            fd_check(&p, &g, FdSteps::scaled(h, p.domain().diameter()))
                .unwrap()
                .energy_gradient
                .relative_error
        })
        .collect();
    assert!(errs[1] < errs[0], "{errs:?}");
    assert!(errs[2] < 1e-5, "{errs:?}");
}

#[test]
fn grid_fixed_point_derivatives() {
    let p = sqrt_problem(0.01);
    let g = grid(3);
    let ge = grad_energy(&p, &g).unwrap();
    assert!(ge.max_norm() < 1e-10);
    let cfg = LloydConfig::for_domain(p.domain());
    let h = hessian_at_fixed_point(&p, &g, &cfg).unwrap();
    assert!(h.shift_residual < 1e-8, "{}", h.shift_residual);
    let j = grad_masses(&p, &g).unwrap();
    assert!(j.require_generic().is_err());
    let bad = random_init(p.domain(), 9, 1, 0.0).unwrap();
    assert!(matches!(
        hessian_at_fixed_point(&p, &bad, &cfg),
        Err(CalculusError::NotAFixedPoint { .. })
    ));
}

#[test]
fn converged_state_hessian() {
    let p = sqrt_problem(0.02);
    let cfg = LloydConfig::for_domain(p.domain()).without_energy_stop();
    let t = run(&p, random_init(p.domain(), 8, 11, 0.0).unwrap(), &cfg).unwrap();
    assert!(t.converged());
    let g = t.final_generators;
    let h = hessian_at_fixed_point(&p, &g, &cfg).unwrap();
    assert!(h.asymmetry < 1e-6, "asymmetry {}", h.asymmetry);
    assert!(h.shift_residual < 1e-8);
    let chk = fd_check_hessian(&p, &g, FdSteps::for_problem(&p)).unwrap();
    assert!(chk.error.relative_error < 1e-4, "{chk:?}");
    println!("min eig {}", h.summary.min_nontrivial);
}
