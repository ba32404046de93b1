//! Randomized invariants of the geometry, measures, energy, lloyd and
//! calculus modules.

use nalgebra::Matrix2;
use proptest::prelude::*;

use powerlloyd::calculus::{grad_energy, grad_masses, lloyd_jacobian, CalculusError};
use powerlloyd::energy::{distortion, energy, helper_h, CostFunction, EnergyError, Problem};
use powerlloyd::geometry::{
    build_power_diagram, locate, voronoi, ConvexPolygon, Domain, GeneratorSet, HalfPlane, Point2,
    PowerDiagram,
};
use powerlloyd::lloyd::{
    eliminate_light_cells, fixed_point_residual, random_init, run, LloydConfig, LloydState,
};
use powerlloyd::measures::{polygon_moments, CellMoments, Density, TriangleRule};

fn domain() -> Domain {
    Domain::rectangle(-0.5, 0.0, 1.5, 1.0).unwrap()
}

fn sqrt_problem(lambda: f64) -> Problem {
    Problem::new(
        Domain::unit_square(),
        Density::uniform(),
        CostFunction::sqrt(lambda).unwrap(),
    )
    .unwrap()
}

fn bump_density() -> Density {
    Density::analytic("bump", |p| {
        0.5 + (-(p.x - 0.3).powi(2) - (p.y - 0.6).powi(2)).exp()
    })
}

fn random_polygon(angles: &[f64], centre: (f64, f64), radii: (f64, f64)) -> ConvexPolygon {
    let mut a = angles.to_vec();
    a.sort_by(f64::total_cmp);
    a.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
    ConvexPolygon::new(
        a.iter()
            .map(|t| Point2::new(centre.0 + radii.0 * t.cos(), centre.1 + radii.1 * t.sin()))
            .collect(),
    )
}

fn polygon_strategy() -> impl Strategy<Value = ConvexPolygon> {
    (
        prop::collection::vec(0.0..std::f64::consts::TAU, 3..12),
        (-1.0..1.0, -1.0..1.0),
        (0.2..1.5, 0.2..1.5),
    )
        .prop_map(|(a, c, r)| random_polygon(&a, c, r))
        .prop_filter("needs area", |p| p.len() >= 3 && p.area() > 1e-3)
}

fn moments_close(a: &CellMoments, b: &CellMoments, tol: f64) -> bool {
    let scale = a.second_moment.amax().max(a.mass).max(1e-300);
    (a.mass - b.mass).abs() <= tol * scale
        && (a.first_moment - b.first_moment).norm() <= tol * scale
        && (a.second_moment - b.second_moment).amax() <= tol * scale
}

fn is_psd(m: &Matrix2<f64>) -> bool {
    let tr = m.trace();
    let det = m.determinant();
    (m[(0, 1)] - m[(1, 0)]).abs() <= 1e-12 * tr.abs().max(1.0)
        && tr >= 0.0
        && det >= -1e-12 * tr * tr
}

/// Equal-weight cells built by clipping the domain with every bisector.
fn bisector_cells(domain: &Domain, pts: &[Point2]) -> Vec<ConvexPolygon> {
    (0..pts.len())
        .map(|i| {
            (0..pts.len())
                .filter(|&j| j != i)
                .fold(domain.boundary().clone(), |poly, j| {
                    let d = pts[j] - pts[i];
                    poly.clip_halfplane(&HalfPlane::new(d / d.norm(), pts[i].midpoint(pts[j])))
                })
        })
        .collect()
}

fn power_ok(d: &PowerDiagram, g: &GeneratorSet) -> bool {
    d.cells.iter().enumerate().all(|(i, c)| {
        c.polygon.vertices().iter().all(|&v| {
            let pi = g.power(i, v);
            (0..g.len()).all(|k| pi <= g.power(k, v) + 1e-9)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diagram_partitions_domain(n in 1usize..60, seed in any::<u64>(), ws in 0.0..0.05f64) {
        let g = random_init(&domain(), n, seed, ws).unwrap();
        let d = build_power_diagram(&domain(), &g).unwrap();
        prop_assert!(d.partition_residual() < 1e-9);
        prop_assert!(d.empty_indices().len() < n);
        prop_assert!(power_ok(&d, &g));
    }

    #[test]
    fn located_cell_contains_point(
        n in 1usize..40,
        seed in any::<u64>(),
        px in -0.5..1.5f64,
        py in 0.0..1.0f64,
    ) {
        let g = random_init(&domain(), n, seed, 0.02).unwrap();
        let d = build_power_diagram(&domain(), &g).unwrap();
        let p = Point2::new(px, py);
        let i = locate(&g, p);
        prop_assert!(d.cells[i].polygon.contains(p, 1e-12));
        let min_power = (0..n).map(|k| g.power(k, p)).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(g.power(i, p), min_power);
    }

    #[test]
    fn weight_shift_leaves_cells(n in 2usize..40, seed in any::<u64>(), c in -5.0..5.0f64) {
        let g = random_init(&domain(), n, seed, 0.02).unwrap();
        let a = build_power_diagram(&domain(), &g).unwrap();
        let b = build_power_diagram(&domain(), &g.shifted_weights(c)).unwrap();
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            prop_assert_eq!(ca.polygon.len(), cb.polygon.len());
            for (u, v) in ca.polygon.vertices().iter().zip(cb.polygon.vertices()) {
                prop_assert!(u.distance(*v) < 1e-9);
            }
        }
    }

    #[test]
    fn equal_weights_match_bisector_cells(n in 2usize..25, seed in any::<u64>()) {
        let g = random_init(&domain(), n, seed, 0.0).unwrap();
        let d = voronoi(&domain(), g.positions()).unwrap();
        let shifted = build_power_diagram(&domain(), &g.shifted_weights(0.3)).unwrap();
        for ((cell, other), poly) in d.cells.iter().zip(&shifted.cells).zip(bisector_cells(&domain(), g.positions())) {
            prop_assert!((cell.polygon.area() - poly.area()).abs() < 1e-12);
            prop_assert!((other.polygon.area() - poly.area()).abs() < 1e-12);
            for v in poly.vertices() {
                prop_assert!(cell.polygon.vertices().iter().any(|u| u.distance(*v) < 1e-9));
            }
        }
    }

    #[test]
    fn adjacency_is_symmetric_and_connected(n in 2usize..40, seed in any::<u64>()) {
        let g = random_init(&domain(), n, seed, 0.01).unwrap();
        let d = build_power_diagram(&domain(), &g).unwrap();
        let adj = &d.adjacency;
        for e in &adj.edges {
            prop_assert!(adj.are_adjacent(e.i, e.j) && adj.are_adjacent(e.j, e.i));
            prop_assert!(adj.neighbors[e.i].contains(&e.j) && adj.neighbors[e.j].contains(&e.i));
            let mid = e.segment.0.midpoint(e.segment.1);
            prop_assert!((g.power(e.i, mid) - g.power(e.j, mid)).abs() < 1e-9);
        }
        prop_assert!(adj.is_connected_on(&d.non_empty_indices()));
    }

    #[test]
    fn moments_are_additive_over_fan_triangles(poly in polygon_strategy(), rho in 0.1..4.0f64) {
        let dens = Density::constant(rho).unwrap();
        let whole = polygon_moments(&poly, &dens);
        let v = poly.vertices();
        let mut sum = CellMoments::zero();
        for k in 1..v.len() - 1 {
            let t = polygon_moments(&ConvexPolygon::new(vec![v[0], v[k], v[k + 1]]), &dens);
            sum.mass += t.mass;
            sum.first_moment += t.first_moment;
            sum.second_moment += t.second_moment;
        }
        prop_assert!(moments_close(&whole, &sum, 1e-10));
    }

    #[test]
    fn moments_are_well_formed(poly in polygon_strategy()) {
        for dens in [Density::uniform(), bump_density()] {
            let m = polygon_moments(&poly, &dens);
            prop_assert!(m.mass > 0.0);
            prop_assert!(poly.contains(m.centroid, 1e-12));
            prop_assert!(((m.first_moment / m.mass) - m.centroid).norm() < 1e-12);
            prop_assert!(is_psd(&m.second_moment));
        }
    }

    #[test]
    fn translated_moments_follow_the_polygon(
        poly in polygon_strategy(),
        dx in -2.0..2.0f64,
        dy in -2.0..2.0f64,
    ) {
        let shift = Point2::new(dx, dy);
        let dens = Density::uniform();
        let moved = polygon_moments(&poly.translated(shift), &dens);
        let predicted = polygon_moments(&poly, &dens).translated(shift);
        prop_assert!(moments_close(&moved, &predicted, 1e-10));
    }

    #[test]
    fn energy_parts_and_masses_add_up(n in 1usize..30, seed in any::<u64>(), lambda in 0.001..0.1f64) {
        let p = sqrt_problem(lambda);
        let g = random_init(p.domain(), n, seed, 0.01).unwrap();
        let e = energy(&p, &g).unwrap();
        prop_assert!((e.total - (e.cost_term + e.transport_term)).abs() <= 1e-12 * e.total.abs());
        let mass: f64 = e.masses().iter().sum();
        prop_assert!((mass - p.total_mass()).abs() <= 1e-8 * p.total_mass());
        let shifted = energy(&p, &g.shifted_weights(0.7)).unwrap().total;
        prop_assert!((shifted - e.total).abs() <= 1e-12 * e.total.abs());
    }

    #[test]
    fn distortion_ignores_weights(n in 1usize..30, seed in any::<u64>()) {
        let zero = Problem::new(Domain::unit_square(), Density::uniform(), CostFunction::zero()).unwrap();
        let g = random_init(zero.domain(), n, seed, 0.0).unwrap();
        let d = distortion(zero.domain(), zero.density(), g.positions()).unwrap();
        let e = energy(&zero, &g.shifted_weights(-0.4)).unwrap().total;
        prop_assert!((d - e).abs() <= 1e-12 * d);
    }

    #[test]
    fn helper_ignores_weight_shift_on_fixed_total(
        n in 2usize..15,
        seed in any::<u64>(),
        c in -1.0..1.0f64,
        split in prop::collection::vec(0.01..1.0f64, 15),
    ) {
        let p = sqrt_problem(0.01);
        let first = random_init(p.domain(), n, seed, 0.01).unwrap();
        let second = random_init(p.domain(), n, seed ^ 0x5555, 0.01).unwrap();
        let total: f64 = split[..n].iter().sum();
        let masses: Vec<f64> = split[..n].iter().map(|s| s / total * p.total_mass()).collect();
        let a = helper_h(&p, &first, &second, &masses).unwrap();
        let b = helper_h(&p, &first.shifted_weights(c), &second, &masses).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn convex_costs_are_rejected(a in 0.01..5.0f64) {
        let f = CostFunction::custom("convex", move |m| a * m * m, move |m| 2.0 * a * m, move |_| 2.0 * a);
        let r = Problem::new(Domain::unit_square(), Density::uniform(), f);
        prop_assert!(matches!(r, Err(EnergyError::InvalidCost(_))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lloyd_runs_descend_and_never_add_generators(n in 2usize..20, seed in any::<u64>(), lambda in 0.003..0.05f64) {
        let p = sqrt_problem(lambda);
        let cfg = LloydConfig::for_domain(p.domain()).without_energy_stop();
        let t = run(&p, random_init(p.domain(), n, seed, 0.002).unwrap(), &cfg).unwrap();
        for w in t.records.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy + 1e-12);
            prop_assert!(w[1].n <= w[0].n);
        }
        if t.converged() {
            let state = LloydState::new(&p, t.final_generators.clone()).unwrap();
            let (dx, dw) = fixed_point_residual(&p, &state, &cfg).unwrap();
            prop_assert!(dx < 10.0 * cfg.tol_position && dw < 10.0 * cfg.tol_weight);
        }
    }

    #[test]
    fn elimination_lowers_energy(n in 4usize..30, seed in any::<u64>()) {
        let p = sqrt_problem(0.01);
        let cfg = LloydConfig::for_domain(p.domain());
        // large weights empty out some cells
        let g = random_init(p.domain(), n, seed, 0.2).unwrap();
        let before = LloydState::new(&p, g).unwrap();
        let e0 = before.energy(&p);
        let (after, removed) = eliminate_light_cells(&p, before, &cfg).unwrap();
        prop_assert!(after.energy(&p) <= e0 + 1e-12);
        prop_assert_eq!(after.len() + removed.len(), n);
        prop_assert!(after.diagram().empty_indices().is_empty());
    }

    #[test]
    fn classical_mode_yields_a_cvt(n in 2usize..15, seed in any::<u64>()) {
        let zero = Problem::new(Domain::unit_square(), Density::uniform(), CostFunction::zero()).unwrap();
        let cfg = LloydConfig::for_domain(zero.domain()).classical().without_energy_stop();
        let t = run(&zero, random_init(zero.domain(), n, seed, 0.05).unwrap(), &cfg).unwrap();
        prop_assert!(t.final_generators.weights().iter().all(|&w| w == 0.0));
        if t.converged() {
            let state = LloydState::new(&zero, t.final_generators.clone()).unwrap();
            let (dx, _) = fixed_point_residual(&zero, &state, &cfg).unwrap();
            prop_assert!(dx < 10.0 * cfg.tol_position);
        }
    }

    #[test]
    fn first_order_structure(n in 2usize..20, seed in any::<u64>(), lambda in 0.003..0.05f64) {
        let p = sqrt_problem(lambda);
        let g = random_init(p.domain(), n, seed, 0.002).unwrap();
        let j = match grad_masses(&p, &g) {
            Ok(j) => j,
            Err(CalculusError::EmptyCell { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let l = &j.d_m_d_w;
        let scale = l.amax();
        prop_assert!((l - l.transpose()).amax() <= 1e-12 * scale);
        for i in 0..n {
            prop_assert!(l.row(i).sum().abs() <= 1e-10 * scale);
            prop_assert!(l.column(i).sum().abs() <= 1e-10 * scale);
        }
        // Σ_j ∂m_j/∂x_i = 0 since the total mass is fixed
        for r in 0..2 * n {
            prop_assert!(j.d_m_d_x.row(r).sum().abs() <= 1e-10 * j.d_m_d_x.amax().max(1e-300));
        }
        let ge = grad_energy(&p, &g).unwrap();
        prop_assert!(ge.d_e_d_w.sum().abs() <= 1e-12 * ge.max_norm().max(1.0));

        // ∂ω_i/∂w_k = −f″(m_i) ∂m_i/∂w_k
        let lj = lloyd_jacobian(&p, &g).unwrap();
        let f = p.cost();
        for i in 0..n {
            let s = -f.second_derivative(ge.masses[i]);
            for k in 0..n {
                let expected = s * l[(k, i)];
                prop_assert!((lj.d_omega_d_w[(i, k)] - expected).abs() <= 1e-10 * expected.abs().max(1e-12));
            }
        }
    }
}

#[test]
fn triangle_rule_integrates_monomials_exactly() {
    let rule = TriangleRule::degree10();
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let (a, b, c) = (
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(0.0, 1.0),
    );
    for deg in 0..=rule.degree() as u32 {
        for i in 0..=deg {
            let j = deg - i;
            let exact = fact(i) * fact(j) / fact(i + j + 2);
            let q = rule.integrate(a, b, c, |p| p.x.powi(i as i32) * p.y.powi(j as i32));
            assert!((q - exact).abs() < 1e-12, "x^{i} y^{j}: {q} vs {exact}");
        }
    }
}

#[test]
fn analytic_mass_agrees_with_monte_carlo() {
    use rand::{Rng, SeedableRng};
    let poly = random_polygon(&[0.1, 1.3, 2.2, 3.5, 4.4, 5.6], (0.4, 0.5), (0.5, 0.4));
    let dens = bump_density();
    let exact = polygon_moments(&poly, &dens).mass;
    let (lo, hi) = poly.bounding_box().unwrap();
    let box_area = (hi.x - lo.x) * (hi.y - lo.y);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let samples = 1_000_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let p = Point2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        let v = if poly.contains(p, 0.0) {
            dens.eval(p) * box_area
        } else {
            0.0
        };
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let stderr = ((sum_sq / samples as f64 - mean * mean) / samples as f64).sqrt();
    assert!(
        (mean - exact).abs() < 3.0 * stderr,
        "{mean} vs {exact} (se {stderr})"
    );
}
