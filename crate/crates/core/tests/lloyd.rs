use powerlloyd::calculus::lloyd_jacobian;
use powerlloyd::energy::{CostFunction, Problem};
use powerlloyd::geometry::{Domain, GeneratorSet, Point2};
use powerlloyd::lloyd::{
    convergence_rate, fixed_point_residual, lloyd_maps, multistart, random_init, run, step,
    LloydConfig, LloydState, MultistartSchedule, StopReason,
};
use powerlloyd::measures::Density;

fn sqrt_problem(lambda: f64) -> Problem {
    Problem::new(
        Domain::unit_square(),
        Density::uniform(),
        CostFunction::sqrt(lambda).unwrap(),
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

fn config() -> LloydConfig {
    LloydConfig::for_domain(&Domain::unit_square()).without_energy_stop()
}

#[test]
fn maps_on_simple_states() {
    let p = sqrt_problem(0.005);
    let one = GeneratorSet::unweighted(vec![Point2::new(0.2, 0.3)]).unwrap();
    let s = LloydState::new(&p, one).unwrap();
    let (xi, _) = lloyd_maps(&p, &s, &config()).unwrap();
    assert!(xi[0].distance(Point2::new(0.5, 0.5)) < 1e-15);

    let s = LloydState::new(&p, grid(2)).unwrap();
    let (xi, omega) = lloyd_maps(&p, &s, &config()).unwrap();
    for (a, b) in xi.iter().zip(grid(2).positions()) {
        assert!(a.distance(*b) < 1e-15);
    }
    // m = 1/4 gives −λ/(2√m) = −λ
    for w in omega {
        assert!((w + 0.005).abs() < 1e-17);
    }
}

#[test]
fn grid_is_a_fixed_point() {
    let p = sqrt_problem(0.01);
    let s = LloydState::new(&p, grid(3)).unwrap();
    let (dx, dw) = fixed_point_residual(&p, &s, &config()).unwrap();
    assert!(dx < 1e-12 && dw < 1e-12);
    let (next, rec) = step(&p, &s, &config()).unwrap();
    assert!(rec.dx_max.unwrap() < 1e-12);
    assert!(rec.eliminated.is_empty());
    assert_eq!(next.len(), 9);
    let t = run(&p, grid(3), &config()).unwrap();
    assert_eq!(t.stop_reason, Some(StopReason::Converged));
    assert_eq!(t.iterations(), 1);
}

#[test]
fn empty_cell_is_eliminated() {
    let p = sqrt_problem(1.0);
    let g = GeneratorSet::new(
        vec![Point2::new(0.5, 0.5), Point2::new(0.6, 0.5)],
        vec![10.0, 0.0],
    )
    .unwrap();
    let s = LloydState::new(&p, g.clone()).unwrap();
    let (next, rec) = step(&p, &s, &config()).unwrap();
    assert_eq!(next.len(), 1);
    assert_eq!(rec.eliminated, vec![1]);
    let t = run(&p, g, &config()).unwrap();
    assert_eq!(t.records[0].eliminated, vec![1]);
    assert!(t.converged());
}

#[test]
fn two_random_generators_converge_to_centroids() {
    let p = sqrt_problem(1.0);
    let init = random_init(p.domain(), 2, 7, 0.0).unwrap();
    let t = run(&p, init, &config()).unwrap();
    assert!(t.converged(), "{:?}", t.stop_reason);
    let s = LloydState::new(&p, t.final_generators.clone()).unwrap();
    let (dx, _) = fixed_point_residual(&p, &s, &config()).unwrap();
    assert!(dx < 1e-9);
    for w in t.energies().windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}

#[test]
fn classical_mode_keeps_zero_weights() {
    let p = Problem::new(
        Domain::unit_square(),
        Density::uniform(),
        CostFunction::zero(),
    )
    .unwrap();
    let mut init = random_init(p.domain(), 4, 3, 0.1).unwrap();
    assert!(init.weights().iter().any(|&w| w != 0.0));
    init = init.clone();
    let t = run(&p, init, &config().classical()).unwrap();
    assert!(t.converged());
    assert!(t.final_generators.weights().iter().all(|&w| w == 0.0));
    let s = LloydState::new(&p, t.final_generators.clone()).unwrap();
    let (dx, _) = fixed_point_residual(&p, &s, &config()).unwrap();
    assert!(dx < 1e-9);
}

#[test]
fn random_runs_descend_and_rate_is_contractive() {
    let p = sqrt_problem(0.005);
    for seed in 0..3 {
        let init = random_init(p.domain(), 20, seed, 0.0).unwrap();
        let t = run(&p, init, &config()).unwrap();
        let e = t.energies();
        for w in e.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "energy rose: {} -> {}", w[0], w[1]);
        }
        for w in t.records.windows(2) {
            assert!(w[1].n <= w[0].n);
        }
        if t.converged() {
            let fit = convergence_rate(&t).unwrap();
            assert!(fit.rate > 0.0 && fit.rate < 1.0);
        }
    }
}

#[test]
fn multistart_is_deterministic_and_selects_best() {
    let p = sqrt_problem(0.02);
    let sched = MultistartSchedule {
        round_length: 10,
        ..MultistartSchedule::default()
    };
    let a = multistart(&p, 10, 8, &config(), &sched).unwrap();
    let b = multistart(&p, 10, 8, &config(), &sched).unwrap();
    assert_eq!(a.best.final_generators, b.best.final_generators);
    assert_eq!(a.starts.len(), 8);
    let best = a.best.final_energy();
    for s in &a.starts {
        assert!(best <= s.energy + 1e-15);
    }
    let single = multistart(&p, 10, 1, &config(), &sched).unwrap();
    let direct = run(
        &p,
        random_init(p.domain(), 10, powerlloyd::lloyd::start_seed(0, 0), 0.0).unwrap(),
        &config(),
    )
    .unwrap();
    assert_eq!(single.best.final_generators, direct.final_generators);
}

/// Near a fixed point the energy error contracts by `ρ(J)²` per step, with
/// `ρ(J)` the spectral radius of the Lloyd Jacobian there.
#[test]
fn fitted_rate_matches_jacobian_spectrum() {
    let p = sqrt_problem(0.005);
    let mut checked = 0;
    for seed in 0..20u64 {
        let t = run(
            &p,
            random_init(p.domain(), 6, seed, 0.0).unwrap(),
            &config(),
        )
        .unwrap();
        if !t.converged() || t.records.iter().any(|r| !r.eliminated.is_empty()) {
            continue;
        }
        let j = lloyd_jacobian(&p, &t.final_generators).unwrap().full();
        let rho = j
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .filter(|m| (m - 1.0).abs() > 1e-6)
            .fold(0.0, f64::max);
        let fit = convergence_rate(&t).unwrap();
        assert!(
            (fit.rate - rho * rho).abs() < 0.02,
            "seed {seed}: fitted {} vs ρ² {}",
            fit.rate,
            rho * rho
        );
        checked += 1;
        if checked == 3 {
            break;
        }
    }
    assert_eq!(checked, 3);
}
