use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::io::{write_text, write_with};
use super::{diagram_scene, write_csv, write_json, AppError, LinePlot, ProblemConfig, Series};
use crate::calculus::{
    energy_gradient, fd_check, fd_check_hessian, hessian_product, mass_jacobian, FdReport, FdSteps,
    Linearization,
};
use crate::energy::{energy_of_diagram, Problem};
use crate::geometry::{GeneratorSet, Point2, PowerDiagram};
use crate::lloyd::{
    convergence_rate, fixed_point_residual, multistart, random_init, run, start_seed, LloydConfig,
    LloydMode, LloydState, LloydTrace, StartSummary,
};
use crate::measures::polygon_moments;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub index: usize,
    pub vertices: Vec<Point2>,
    pub sides: usize,
    pub mass: f64,
    pub centroid: Option<Point2>,
    pub neighbors: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramReport {
    pub generator_count: usize,
    /// Non-empty cells.
    pub cell_count: usize,
    pub empty_cells: Vec<usize>,
    pub partition_residual: f64,
    pub energy: f64,
    /// Side count → number of cells.
    pub side_histogram: BTreeMap<usize, usize>,
    pub cells: Vec<CellReport>,
}

fn side_histogram(d: &PowerDiagram) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for s in d.side_counts() {
        *h.entry(s).or_insert(0) += 1;
    }
    h
}

pub fn diagram_report(
    problem: &Problem,
    gens: &GeneratorSet,
) -> Result<(DiagramReport, PowerDiagram), AppError> {
    let d = problem.diagram(gens)?;
    let cells = d
        .cells
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_empty())
        .map(|(i, c)| {
            let m = polygon_moments(&c.polygon, problem.density());
            CellReport {
                index: i,
                vertices: c.polygon.vertices().to_vec(),
                sides: c.side_count(),
                mass: m.mass,
                centroid: (m.mass > 0.0).then_some(m.centroid),
                neighbors: d.adjacency.neighbors[i].clone(),
            }
        })
        .collect::<Vec<_>>();
    let report = DiagramReport {
        generator_count: gens.len(),
        cell_count: cells.len(),
        empty_cells: d.empty_indices(),
        partition_residual: d.partition_residual(),
        energy: energy_of_diagram(problem, &d).total,
        side_histogram: side_histogram(&d),
        cells,
    };
    Ok((report, d))
}

fn required_generators(cfg: &ProblemConfig, command: &str) -> Result<GeneratorSet, AppError> {
    cfg.explicit_generators()?.ok_or_else(|| {
        AppError::Config(format!(
            "{command} needs explicit generators: set \"generators\" or \"state\" in the config, or pass --state"
        ))
    })
}

/// Writes `diagram.json` and `diagram.svg`.
pub fn cmd_diagram(cfg: &ProblemConfig, out: &Path) -> Result<DiagramReport, AppError> {
    let problem = cfg.problem()?;
    let gens = required_generators(cfg, "diagram")?;
    let (report, d) = diagram_report(&problem, &gens)?;
    write_json(&out.join("diagram.json"), &report)?;
    let scene = diagram_scene(problem.domain(), &d, &gens, true);
    write_text(&out.join("diagram.svg"), &scene.render())?;
    info!(
        "{} generators, {} non-empty cells",
        report.generator_count, report.cell_count
    );
    Ok(report)
}

/// Result of `lloyd`: the best trace plus a summary of every start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LloydOutcome {
    pub trace: LloydTrace,
    pub best_start: usize,
    pub starts: Vec<StartSummary>,
}

/// Runs from explicit generators, or from `init.n` random generators with
/// `init.restarts` multistart starts.
pub fn lloyd_experiment(cfg: &ProblemConfig) -> Result<LloydOutcome, AppError> {
    let problem = cfg.problem()?;
    let lc = cfg.lloyd_config();
    if let Some(gens) = cfg.explicit_generators()? {
        let trace = run(&problem, gens, &lc)?;
        return Ok(LloydOutcome {
            starts: Vec::new(),
            best_start: 0,
            trace,
        });
    }
    if cfg.init.n == 0 || cfg.init.restarts == 0 {
        return Err(AppError::Config(
            "init.n and init.restarts must be at least 1".into(),
        ));
    }
    if cfg.init.restarts == 1 {
        let init = random_init(
            problem.domain(),
            cfg.init.n,
            cfg.seed,
            cfg.schedule.weight_scale,
        )?;
        let trace = run(&problem, init, &lc)?;
        return Ok(LloydOutcome {
            starts: Vec::new(),
            best_start: 0,
            trace,
        });
    }
    let r = multistart(&problem, cfg.init.n, cfg.init.restarts, &lc, &cfg.schedule)?;
    Ok(LloydOutcome {
        trace: r.best,
        best_start: r.best_start,
        starts: r.starts,
    })
}

#[derive(Serialize)]
struct LloydSummary<'a> {
    stop_reason: Option<crate::lloyd::StopReason>,
    iterations: usize,
    n_initial: usize,
    n_final: usize,
    energy: f64,
    best_start: usize,
    side_histogram: BTreeMap<usize, usize>,
    starts: &'a [StartSummary],
}

/// Writes `trace.jsonl`, `final_state.json`, `final.svg`, `energy.svg` and `summary.json`.
pub fn cmd_lloyd(cfg: &ProblemConfig, out: &Path) -> Result<LloydOutcome, AppError> {
    let outcome = lloyd_experiment(cfg)?;
    let problem = cfg.problem()?;
    let t = &outcome.trace;
    write_with(&out.join("trace.jsonl"), |w| t.write_jsonl(w))?;
    write_json(&out.join("final_state.json"), &t.final_generators)?;
    let d = problem.diagram(&t.final_generators)?;
    let show_weights = cfg.lloyd_config().mode == LloydMode::Generalized;
    write_text(
        &out.join("final.svg"),
        &diagram_scene(problem.domain(), &d, &t.final_generators, show_weights).render(),
    )?;
    let plot = LinePlot {
        title: "Energy".into(),
        x_label: "iteration".into(),
        y_label: "energy".into(),
        series: vec![Series {
            label: "E".into(),
            points: t
                .records
                .iter()
                .map(|r| (r.iter as f64, r.energy))
                .collect(),
        }],
    };
    write_text(&out.join("energy.svg"), &plot.render())?;
    write_json(
        &out.join("summary.json"),
        &LloydSummary {
            stop_reason: t.stop_reason,
            iterations: t.iterations(),
            n_initial: t.initial.len(),
            n_final: t.final_generators.len(),
            energy: t.final_energy(),
            best_start: outcome.best_start,
            side_histogram: side_histogram(&d),
            starts: &outcome.starts,
        },
    )?;
    info!(
        "stopped ({:?}) after {} iterations: N = {}, E = {}",
        t.stop_reason,
        t.iterations(),
        t.final_generators.len(),
        t.final_energy()
    );
    Ok(outcome)
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `ln y` against `ln x`.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> LineFit {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared: if syy > 0.0 {
            sxy * sxy / (sxx * syy)
        } else {
            1.0
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    #[serde(rename = "N_final")]
    pub n_final: usize,
    pub energy: f64,
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `ln N` against `ln λ`.
    pub fit: LineFit,
}

/// Multistart at every `λ` of `sweep.lambdas` and a log-log fit of the final cell counts.
pub fn sweep_experiment(cfg: &ProblemConfig) -> Result<SweepReport, AppError> {
    let lambdas = &cfg.sweep.lambdas;
    if lambdas.len() < 3 {
        return Err(AppError::Config(format!(
            "a sweep needs at least 3 λ values, got {}",
            lambdas.len()
        )));
    }
    if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(AppError::Config(format!(
            "λ values must be positive, got {l}"
        )));
    }
    if cfg.sweep.n0 == 0 || cfg.sweep.restarts == 0 {
        return Err(AppError::Config(
            "sweep.n0 and sweep.restarts must be at least 1".into(),
        ));
    }
    let lc = cfg.lloyd_config();
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let problem = cfg.problem_with_cost(&cfg.cost_with_lambda(lambda)?)?;
        let r = multistart(
            &problem,
            cfg.sweep.n0,
            cfg.sweep.restarts,
            &lc,
            &cfg.schedule,
        )?;
        info!("λ = {lambda}: N = {}", r.best.final_generators.len());
        rows.push(SweepRow {
            lambda,
            n_final: r.best.final_generators.len(),
            energy: r.best.final_energy(),
            restarts: cfg.sweep.restarts,
            seed: cfg.seed,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.n_final as f64).collect();
    Ok(SweepReport {
        fit: fit_log_log(&xs, &ys),
        rows,
    })
}

/// Writes `sweep.csv` and `sweep_fit.json`.
pub fn cmd_sweep(cfg: &ProblemConfig, out: &Path) -> Result<SweepReport, AppError> {
    let report = sweep_experiment(cfg)?;
    write_csv(&out.join("sweep.csv"), &report.rows)?;
    write_json(&out.join("sweep_fit.json"), &report.fit)?;
    info!(
        "slope of ln N against ln λ: {:.4} (R² = {:.4})",
        report.fit.slope, report.fit.r_squared
    );
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    #[serde(rename = "N")]
    pub n: usize,
    /// Index of the random start.
    pub start: usize,
    pub seed: u64,
    pub rate: Option<f64>,
    pub r_squared: Option<f64>,
    pub window_start: Option<usize>,
    pub window_end: Option<usize>,
    pub iterations: usize,
    pub eliminated: usize,
    pub final_energy: f64,
}

/// Median fitted rate over the traces kept for one `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub traces: usize,
    /// Starts run to find them.
    pub attempts: usize,
    pub median_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub summary: Vec<RateSummary>,
    #[serde(skip)]
    pub traces: Vec<LloydTrace>,
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    })
}

/// For every `N` in `rate.n_values`, runs random starts until
/// `rate.traces_per_n` of them converge without eliminating a generator (at
/// most `rate.attempts` starts) and fits a linear rate to each. If no start
/// keeps every generator, the first converged trace is used instead.
///
/// Fits that fail are logged and leave the rate columns empty.
pub fn rate_experiment(cfg: &ProblemConfig) -> Result<RateReport, AppError> {
    if cfg.rate.n_values.is_empty() || cfg.rate.traces_per_n == 0 {
        return Err(AppError::Config(
            "rate.n_values and rate.traces_per_n must be non-empty".into(),
        ));
    }
    let problem = cfg.problem()?;
    let lc = LloydConfig {
        tol_energy: 0.0,
        ..cfg.lloyd_config()
    };
    let mut report = RateReport {
        rows: Vec::new(),
        summary: Vec::new(),
        traces: Vec::new(),
    };
    for &n in &cfg.rate.n_values {
        let mut kept: Vec<(usize, u64, LloydTrace)> = Vec::new();
        let mut fallback = None;
        let mut attempts = 0;
        for a in 0..cfg.rate.attempts.max(1) {
            attempts = a + 1;
            let seed = start_seed(cfg.seed, a);
            let init = random_init(problem.domain(), n, seed, cfg.schedule.weight_scale)?;
            let trace = run(&problem, init, &lc)?;
            if !trace.converged() {
                continue;
            }
            if trace.records.iter().all(|r| r.eliminated.is_empty()) {
                kept.push((a, seed, trace));
                if kept.len() == cfg.rate.traces_per_n {
                    break;
                }
            } else if fallback.is_none() {
                fallback = Some((a, seed, trace));
            }
        }
        if kept.is_empty() {
            warn!("N = {n}: no start kept every generator; using one with eliminations");
            kept.extend(fallback);
        }
        let mut rates = Vec::new();
        for (start, seed, trace) in kept {
            let fit = match convergence_rate(&trace) {
                Ok(f) => Some(f),
                Err(e) => {
                    warn!("N = {n}, start {start}: {e}");
                    None
                }
            };
            rates.extend(fit.as_ref().map(|f| f.rate));
            report.rows.push(RateRow {
                n,
                start,
                seed,
                rate: fit.as_ref().map(|f| f.rate),
                r_squared: fit.as_ref().map(|f| f.r_squared),
                window_start: fit.as_ref().map(|f| f.window.0),
                window_end: fit.as_ref().map(|f| f.window.1),
                iterations: trace.iterations(),
                eliminated: trace.records.iter().map(|r| r.eliminated.len()).sum(),
                final_energy: trace.final_energy(),
            });
            report.traces.push(trace);
        }
        report.summary.push(RateSummary {
            n,
            traces: rates.len(),
            attempts,
            median_rate: median(&mut rates),
        });
    }
    Ok(report)
}

/// Writes `rate.csv` (one row per trace), `rate_summary.csv` and `rate.svg`
/// (`log₁₀(E_n − E_final)` per trace).
pub fn cmd_rate(cfg: &ProblemConfig, out: &Path) -> Result<RateReport, AppError> {
    let report = rate_experiment(cfg)?;
    let series = report
        .rows
        .iter()
        .zip(&report.traces)
        .map(|(row, t)| {
            let e_final = t.final_energy();
            Series {
                label: format!("N = {}, start {}", row.n, row.start),
                points: t
                    .records
                    .iter()
                    .filter(|r| r.energy - e_final > 0.0)
                    .map(|r| (r.iter as f64, (r.energy - e_final).log10()))
                    .collect(),
            }
        })
        .collect();
    let plot = LinePlot {
        title: "Energy error".into(),
        x_label: "iteration n".into(),
        y_label: "log10(E_n − E_final)".into(),
        series,
    };
    write_text(&out.join("rate.svg"), &plot.render())?;
    write_csv(&out.join("rate.csv"), &report.rows)?;
    write_csv(&out.join("rate_summary.csv"), &report.summary)?;
    for s in &report.summary {
        info!(
            "N = {}: median r = {:?} over {} traces",
            s.n, s.median_rate, s.traces
        );
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub max_norm: f64,
    pub position_max: f64,
    pub weight_max: f64,
    /// `∇E · (0; 𝟙)`, zero by the weight-shift gauge.
    pub shift_derivative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointTest {
    /// Both residuals below ten times their tolerance.
    pub is_fixed_point: bool,
    pub position_residual: f64,
    pub weight_residual: f64,
    pub tol_position: f64,
    pub tol_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub asymmetry: f64,
    pub shift_residual: f64,
    pub min_nontrivial: f64,
    pub max: f64,
    pub eigenvalues: Vec<f64>,
    /// Against central differences of the gradient.
    pub fd_relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacianReport {
    pub asymmetry: f64,
    pub max_abs_row_sum: f64,
    /// Bounded away from zero exactly when the diagram is connected.
    pub second_smallest_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    #[serde(rename = "N")]
    pub n: usize,
    pub energy: f64,
    pub masses: Vec<f64>,
    /// Pairs of cells meeting in a single point, where derivatives are one-sided.
    pub point_contacts: Vec<(usize, usize)>,
    pub gradient: GradientReport,
    pub fd: FdReport,
    pub fixed_point: FixedPointTest,
    /// Present only at fixed points.
    pub hessian: Option<HessianReport>,
    pub laplacian: LaplacianReport,
}

/// Gradient, finite-difference checks, fixed-point test and, at fixed
/// points, the Hessian's spectrum.
pub fn analyze_state(
    problem: &Problem,
    gens: &GeneratorSet,
    config: &LloydConfig,
) -> Result<Analysis, AppError> {
    let state = LloydState::new(problem, gens.clone())?;
    let lin = Linearization::from_state(problem, &state)?;
    let jac = mass_jacobian(&lin);
    let grad = energy_gradient(&lin, &jac);
    let steps = FdSteps::for_problem(problem);
    let fd = fd_check(problem, gens, steps)?;

    let generalized = LloydConfig {
        mode: LloydMode::Generalized,
        ..config.clone()
    };
    let (dx, dw) = fixed_point_residual(problem, &state, &generalized)?;
    let fixed_point = FixedPointTest {
        is_fixed_point: dx < 10.0 * config.tol_position && dw < 10.0 * config.tol_weight,
        position_residual: dx,
        weight_residual: dw,
        tol_position: config.tol_position,
        tol_weight: config.tol_weight,
    };
    let hessian = if fixed_point.is_fixed_point {
        let h = hessian_product(&lin);
        let check = fd_check_hessian(problem, gens, steps)?;
        Some(HessianReport {
            asymmetry: h.asymmetry,
            shift_residual: h.shift_residual,
            min_nontrivial: h.summary.min_nontrivial,
            max: h.summary.max,
            eigenvalues: h.summary.eigenvalues,
            fd_relative_error: check.error.relative_error,
        })
    } else {
        None
    };

    let l = &jac.d_m_d_w;
    let mut eig: Vec<f64> = SymmetricEigen::new((l + l.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(f64::total_cmp);
    let laplacian = LaplacianReport {
        asymmetry: (l - l.transpose()).amax(),
        max_abs_row_sum: l.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max),
        second_smallest_eigenvalue: eig.get(1).copied().unwrap_or(f64::NAN),
    };

    let n = gens.len();
    Ok(Analysis {
        n,
        energy: state.energy(problem),
        masses: lin.masses.clone(),
        point_contacts: lin.point_contacts.clone(),
        gradient: GradientReport {
            max_norm: grad.max_norm(),
            position_max: grad.d_e_d_x.amax(),
            weight_max: grad.d_e_d_w.amax(),
            shift_derivative: grad.d_e_d_w.sum(),
        },
        fd,
        fixed_point,
        hessian,
        laplacian,
    })
}

/// Writes `analysis.json` for the config's explicit generators.
pub fn cmd_analyze(cfg: &ProblemConfig, out: &Path) -> Result<Analysis, AppError> {
    let problem = cfg.problem()?;
    let gens = required_generators(cfg, "analyze")?;
    let a = analyze_state(&problem, &gens, &cfg.lloyd_config())?;
    write_json(&out.join("analysis.json"), &a)?;
    info!(
        "‖∇E‖∞ = {:e}, fixed point: {}",
        a.gradient.max_norm, a.fixed_point.is_fixed_point
    );
    Ok(a)
}
