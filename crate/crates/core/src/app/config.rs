use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::AppError;
use crate::energy::{CostFunction, CostSpec, Problem};
use crate::geometry::{Domain, GeneratorSet, Point2};
use crate::lloyd::{LloydConfig, MultistartSchedule};
use crate::measures::{load_raster, parse_raster, Density};

/// The synthetic two-city country raster shipped with the crate.
pub const COUNTRY_FIXTURE: &str = include_str!("../../fixtures/country.txt");

/// Convex outline of the land in [`COUNTRY_FIXTURE`].
fn country_outline() -> Value {
    json!([
        [0.05, 0.1],
        [0.5, 0.05],
        [0.95, 0.5],
        [0.95, 0.9],
        [0.5, 0.95],
        [0.05, 0.55]
    ])
}

/// Built-in starting points for a config file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Unit square, `ρ = 1`, `f = λ√m` with `λ = 0.005`.
    Copolymer,
    /// The country fixture with `f = −λ m ln m`.
    Location,
    /// Unit square, `ρ = 1`, `f = 0`, weights pinned to zero.
    Cvt,
}

impl Preset {
    fn document(self) -> Value {
        let square = json!([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        match self {
            Preset::Copolymer => json!({
                "domain": square,
                "density": {"constant": 1.0},
                "cost": {"f": "sqrt", "lambda": 0.005},
                "lloyd": {"tol_energy": 0.0},
                "init": {"n": 40, "restarts": 200},
                "sweep": {"lambdas": [0.05, 0.02, 0.01, 0.005], "n0": 30, "restarts": 100},
                "rate": {"n_values": [6, 10, 25]},
            }),
            Preset::Location => json!({
                "domain": country_outline(),
                "density": {"fixture": "two_gaussian_country"},
                "cost": {"f": "neg_m_log_m", "lambda": 0.005},
                "lloyd": {"tol_energy": 0.0},
                "init": {"n": 80, "restarts": 1},
                "sweep": {"lambdas": [0.01, 0.005, 0.002], "n0": 80, "restarts": 4},
                "rate": {"n_values": [6, 10, 25]},
            }),
            Preset::Cvt => json!({
                "domain": square,
                "density": {"constant": 1.0},
                "cost": {"f": "zero"},
                "lloyd": {"mode": "classical_cvt", "tol_energy": 0.0},
                "init": {"n": 16, "restarts": 1},
                "rate": {"n_values": [6, 10, 25]},
            }),
        }
    }
}

/// Where `ρ` comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Constant(f64),
    /// One of `ramp_x` (`ρ = x`), `ramp_y` (`ρ = y`) or `two_gaussians`.
    Analytic(String),
    /// Path to a plain-text raster, relative to the config file.
    Raster(PathBuf),
    /// A raster compiled into the crate; only `two_gaussian_country`.
    Fixture(String),
}

impl DensitySpec {
    pub fn build(&self, base: &Path) -> Result<Density, AppError> {
        match self {
            DensitySpec::Constant(rho) => Ok(Density::constant(*rho)?),
            DensitySpec::Analytic(name) => analytic_density(name),
            DensitySpec::Raster(path) => Ok(load_raster(base.join(path))?),
            DensitySpec::Fixture(name) if name == "two_gaussian_country" => {
                Ok(parse_raster(COUNTRY_FIXTURE)?)
            }
            DensitySpec::Fixture(name) => Err(AppError::Config(format!(
                "unknown density fixture {name:?}; the only fixture is \"two_gaussian_country\""
            ))),
        }
    }
}

fn analytic_density(name: &str) -> Result<Density, AppError> {
    let gauss = |p: Point2, cx: f64, cy: f64, s: f64| {
        (-((p.x - cx).powi(2) + (p.y - cy).powi(2)) / (2.0 * s * s)).exp()
    };
    match name {
        "ramp_x" => Ok(Density::analytic(name, |p| p.x.max(0.0))),
        "ramp_y" => Ok(Density::analytic(name, |p| p.y.max(0.0))),
        "two_gaussians" => Ok(Density::analytic(name, move |p| {
            0.25 + gauss(p, 0.30, 0.38, 0.06) + 0.6 * gauss(p, 0.70, 0.66, 0.08)
        })),
        _ => Err(AppError::Config(format!(
            "unknown analytic density {name:?}; expected ramp_x, ramp_y or two_gaussians"
        ))),
    }
}

/// Initial generators for `lloyd` when none are given explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSpec {
    pub n: usize,
    /// More than one start runs the multistart heuristic.
    pub restarts: usize,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self { n: 40, restarts: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub lambdas: Vec<f64>,
    pub n0: usize,
    pub restarts: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            lambdas: Vec::new(),
            n0: 30,
            restarts: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSpec {
    pub n_values: Vec<usize>,
    /// Converged traces without eliminations wanted per `N`.
    pub traces_per_n: usize,
    /// Random starts allowed per `N` while looking for them.
    pub attempts: usize,
}

impl Default for RateSpec {
    fn default() -> Self {
        Self {
            n_values: vec![6, 10, 25],
            traces_per_n: 3,
            attempts: 200,
        }
    }
}

/// One JSON document describing a problem and how to run it.
///
/// A `preset` supplies a full document; the remaining fields are merged over
/// it key by key. Relative paths resolve against the config file's directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    pub domain: Domain,
    pub density: DensitySpec,
    pub cost: CostSpec,
    /// Fields of [`LloydConfig`], each defaulting to [`LloydConfig::for_domain`].
    #[serde(default, rename = "lloyd")]
    lloyd_overrides: Value,
    #[serde(default)]
    pub schedule: MultistartSchedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Explicit generators; takes precedence over `state`.
    #[serde(default)]
    pub generators: Option<GeneratorSet>,
    /// Path to a state file holding generators.
    #[serde(default)]
    pub state: Option<PathBuf>,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub rate: RateSpec,
    #[serde(skip)]
    base_dir: PathBuf,
    #[serde(skip, default)]
    lloyd: LloydConfig,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Self::parse(&text, &base).map_err(|e| match e {
            AppError::Config(m) => AppError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses a config document; `base_dir` anchors relative paths.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, AppError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        Self::from_value(doc, base_dir)
    }

    pub fn from_preset(preset: Preset) -> Self {
        Self::from_value(json!({ "preset": preset }), Path::new(""))
            .expect("built-in presets are valid")
    }

    fn from_value(doc: Value, base_dir: &Path) -> Result<Self, AppError> {
        let preset = match doc.get("preset") {
            Some(p) => Some(
                serde_json::from_value::<Preset>(p.clone())
                    .map_err(|e| AppError::Config(format!("preset: {e}")))?,
            ),
            None => None,
        };
        let mut full = preset.map_or_else(|| json!({}), Preset::document);
        merge(&mut full, doc);
        let mut cfg: ProblemConfig =
            serde_json::from_value(full).map_err(|e| AppError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        let mut lloyd = serde_json::to_value(LloydConfig::for_domain(&cfg.domain))
            .expect("LloydConfig serializes");
        if !cfg.lloyd_overrides.is_null() {
            merge(&mut lloyd, cfg.lloyd_overrides.clone());
        }
        cfg.lloyd =
            serde_json::from_value(lloyd).map_err(|e| AppError::Config(format!("lloyd: {e}")))?;
        Ok(cfg)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Iteration settings with the config's seed.
    pub fn lloyd_config(&self) -> LloydConfig {
        LloydConfig {
            seed: self.seed,
            ..self.lloyd.clone()
        }
    }

    pub fn set_lloyd_config(&mut self, config: LloydConfig) {
        self.lloyd_overrides = serde_json::to_value(&config).expect("LloydConfig serializes");
        self.lloyd = config;
    }

    pub fn problem(&self) -> Result<Problem, AppError> {
        self.problem_with_cost(&self.cost)
    }

    /// Builds the problem with a different cost; density and domain are shared.
    pub fn problem_with_cost(&self, cost: &CostSpec) -> Result<Problem, AppError> {
        let density = self.density.build(&self.base_dir)?;
        let cost = CostFunction::from_spec(cost).map_err(|e| AppError::Config(e.to_string()))?;
        Problem::new(self.domain.clone(), density, cost)
            .map_err(|e| AppError::Config(e.to_string()))
    }

    /// The explicit generators, from `generators` or the `state` file.
    pub fn explicit_generators(&self) -> Result<Option<GeneratorSet>, AppError> {
        let gens = match (&self.generators, &self.state) {
            (Some(g), _) => g.clone(),
            (None, Some(path)) => super::read_generators(&self.base_dir.join(path))?,
            (None, None) => return Ok(None),
        };
        gens.check_inside(&self.domain)
            .map_err(|e| AppError::Config(e.to_string()))?;
        Ok(Some(gens))
    }

    /// The cost spec with its `λ` replaced.
    pub fn cost_with_lambda(&self, lambda: f64) -> Result<CostSpec, AppError> {
        match self.cost {
            CostSpec::Sqrt { .. } => Ok(CostSpec::Sqrt { lambda }),
            CostSpec::NegMLogM { .. } => Ok(CostSpec::NegMLogM { lambda }),
            CostSpec::Rate { .. } => Ok(CostSpec::Rate { lambda }),
            CostSpec::Affine { .. } | CostSpec::Zero => Err(AppError::Config(
                "a λ sweep needs a cost with a λ parameter".into(),
            )),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_expand_and_build() {
        for p in [Preset::Copolymer, Preset::Location, Preset::Cvt] {
            let cfg = ProblemConfig::from_preset(p);
            let problem = cfg.problem().unwrap();
            assert!(problem.total_mass() > 0.0);
        }
        let loc = ProblemConfig::from_preset(Preset::Location)
            .problem()
            .unwrap();
        assert!((loc.total_mass() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn user_fields_override_preset() {
        let cfg = ProblemConfig::parse(
            r#"{"preset": "copolymer", "cost": {"lambda": 0.02}, "seed": 9}"#,
            Path::new(""),
        )
        .unwrap();
        assert_eq!(cfg.cost, CostSpec::Sqrt { lambda: 0.02 });
        assert_eq!(cfg.lloyd_config().seed, 9);
        assert_eq!(cfg.init.restarts, 200);
        let lc = cfg.lloyd_config();
        assert_eq!(lc.tol_energy, 0.0);
        assert_eq!(lc.tol_position, 1e-10 * 2f64.sqrt());
    }

    #[test]
    fn nonconvex_domain_names_the_reflex_vertex() {
        let err = ProblemConfig::parse(
            r#"{"domain": [[0,0],[1,0],[0.5,0.2],[1,1],[0,1]],
                "density": {"constant": 1}, "cost": {"f": "zero"}}"#,
            Path::new(""),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), super::super::EXIT_CONFIG);
        assert!(err.to_string().contains("reflex vertex 2"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err =
            ProblemConfig::parse(r#"{"preset": "cvt", "lamda": 1}"#, Path::new("")).unwrap_err();
        assert!(err.to_string().contains("lamda"));
    }
}
