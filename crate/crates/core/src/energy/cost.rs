use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::EnergyError;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Config-file form of a built-in cost, e.g. `{"f": "sqrt", "lambda": 0.005}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "f", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    /// `λ √m`.
    Sqrt { lambda: f64 },
    /// `−λ m ln m`, masses in `(0, 1]`.
    NegMLogM { lambda: f64 },
    /// `a m + b` with `b > 0`.
    Affine { a: f64, b: f64 },
    /// `λ m log₂(1/m)`: the rate term of entropy-constrained quantization.
    Rate { lambda: f64 },
    /// `f ≡ 0`: pure transport (distortion, centroidal Voronoi).
    Zero,
}

#[derive(Clone)]
enum Kind {
    Sqrt(f64),
    NegMLogM(f64),
    Affine(f64, f64),
    Rate(f64),
    Zero,
    Custom {
        name: String,
        f: ScalarFn,
        df: ScalarFn,
        d2f: ScalarFn,
    },
}

/// A concave mass cost `f` with `f(0) ≥ 0` and closed-form `f′`, `f″`.
#[derive(Clone)]
pub struct CostFunction {
    kind: Kind,
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CostFunction({})", self.describe())
    }
}

fn positive(name: &str, v: f64) -> Result<f64, EnergyError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(EnergyError::InvalidCost(format!(
            "{name} must be finite and positive, got {v}"
        )))
    }
}

impl CostFunction {
    pub fn sqrt(lambda: f64) -> Result<Self, EnergyError> {
        Ok(Self {
            kind: Kind::Sqrt(positive("lambda", lambda)?),
        })
    }

    pub fn neg_m_log_m(lambda: f64) -> Result<Self, EnergyError> {
        Ok(Self {
            kind: Kind::NegMLogM(positive("lambda", lambda)?),
        })
    }

    /// Rejects `b = 0`: a purely linear cost adds a constant to the energy.
    pub fn affine(a: f64, b: f64) -> Result<Self, EnergyError> {
        if !a.is_finite() {
            return Err(EnergyError::InvalidCost(format!(
                "a must be finite, got {a}"
            )));
        }
        Ok(Self {
            kind: Kind::Affine(a, positive("b", b)?),
        })
    }

    pub fn rate(lambda: f64) -> Result<Self, EnergyError> {
        Ok(Self {
            kind: Kind::Rate(positive("lambda", lambda)?),
        })
    }

    pub fn zero() -> Self {
        Self { kind: Kind::Zero }
    }

    /// User-supplied cost. Admissibility is checked by [`CostFunction::check_admissible`].
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: Kind::Custom {
                name: name.into(),
                f: Arc::new(f),
                df: Arc::new(df),
                d2f: Arc::new(d2f),
            },
        }
    }

    pub fn from_spec(spec: &CostSpec) -> Result<Self, EnergyError> {
        match *spec {
            CostSpec::Sqrt { lambda } => Self::sqrt(lambda),
            CostSpec::NegMLogM { lambda } => Self::neg_m_log_m(lambda),
            CostSpec::Affine { a, b } => Self::affine(a, b),
            CostSpec::Rate { lambda } => Self::rate(lambda),
            CostSpec::Zero => Ok(Self::zero()),
        }
    }

    /// `None` for custom costs.
    pub fn spec(&self) -> Option<CostSpec> {
        Some(match self.kind {
            Kind::Sqrt(lambda) => CostSpec::Sqrt { lambda },
            Kind::NegMLogM(lambda) => CostSpec::NegMLogM { lambda },
            Kind::Affine(a, b) => CostSpec::Affine { a, b },
            Kind::Rate(lambda) => CostSpec::Rate { lambda },
            Kind::Zero => CostSpec::Zero,
            Kind::Custom { .. } => return None,
        })
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Sqrt(l) => format!("{l}*sqrt(m)"),
            Kind::NegMLogM(l) => format!("-{l}*m*ln(m)"),
            Kind::Affine(a, b) => format!("{a}*m+{b}"),
            Kind::Rate(l) => format!("{l}*m*log2(1/m)"),
            Kind::Zero => "0".to_string(),
            Kind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    /// Largest total mass the cost accepts, if bounded.
    pub fn mass_limit(&self) -> Option<f64> {
        match self.kind {
            Kind::NegMLogM(_) => Some(1.0),
            _ => None,
        }
    }

    /// `f(m)`, continuously extended to `m = 0`.
    pub fn value(&self, m: f64) -> f64 {
        match &self.kind {
            Kind::Sqrt(l) => l * m.max(0.0).sqrt(),
            Kind::NegMLogM(l) => {
                if m <= 0.0 {
                    0.0
                } else {
                    -l * m * m.ln()
                }
            }
            Kind::Affine(a, b) => a * m + b,
            Kind::Rate(l) => {
                if m <= 0.0 {
                    0.0
                } else {
                    -l * m * m.log2()
                }
            }
            Kind::Zero => 0.0,
            Kind::Custom { f, .. } => f(m),
        }
    }

    /// `f′(m)`; may be infinite at `m = 0`.
    pub fn derivative(&self, m: f64) -> f64 {
        match &self.kind {
            Kind::Sqrt(l) => l / (2.0 * m.sqrt()),
            Kind::NegMLogM(l) => -l * (m.ln() + 1.0),
            Kind::Affine(a, _) => *a,
            Kind::Rate(l) => -l * (m.ln() + 1.0) / std::f64::consts::LN_2,
            Kind::Zero => 0.0,
            Kind::Custom { df, .. } => df(m),
        }
    }

    /// `f″(m)`.
    pub fn second_derivative(&self, m: f64) -> f64 {
        match &self.kind {
            Kind::Sqrt(l) => -l / (4.0 * m * m.sqrt()),
            Kind::NegMLogM(l) => -l / m,
            Kind::Affine(..) => 0.0,
            Kind::Rate(l) => -l / (m * std::f64::consts::LN_2),
            Kind::Zero => 0.0,
            Kind::Custom { d2f, .. } => d2f(m),
        }
    }

    /// Checks `f(0) ≥ 0`, `f″ ≤ 1e-12` on a grid over `(0, max_mass]`, and the
    /// cost's own mass limit.
    pub fn check_admissible(&self, max_mass: f64) -> Result<(), EnergyError> {
        if let Some(limit) = self.mass_limit() {
            if max_mass > limit * (1.0 + 1e-12) {
                return Err(EnergyError::MassLimitExceeded {
                    total: max_mass,
                    limit,
                });
            }
        }
        let f0 = self.value(0.0);
        if !(f0 >= 0.0) {
            return Err(EnergyError::InvalidCost(format!(
                "{} has f(0) = {f0} < 0",
                self.describe()
            )));
        }
        let linear = (1..=1000).map(|k| max_mass * k as f64 / 1000.0);
        let small = (1..=12).map(|j| max_mass * 10f64.powi(-j));
        for m in linear.chain(small) {
            let d2 = self.second_derivative(m);
            if d2.is_nan() || d2 > 1e-12 {
                return Err(EnergyError::InvalidCost(format!(
                    "{} is not concave: f''({m}) = {d2}",
                    self.describe()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_derivatives() {
        let f = CostFunction::sqrt(0.005).unwrap();
        assert!((f.derivative(0.25) - 0.005).abs() < 1e-18);
        let f = CostFunction::sqrt(1.0).unwrap();
        let expected = -1.0 / (4.0 * 0.6f64.powf(1.5));
        assert!((f.second_derivative(0.6) - expected).abs() < 1e-15);
    }

    #[test]
    fn finite_difference_consistency() {
        let costs = [
            CostFunction::sqrt(0.3).unwrap(),
            CostFunction::neg_m_log_m(0.7).unwrap(),
            CostFunction::affine(2.0, 0.5).unwrap(),
            CostFunction::rate(0.2).unwrap(),
        ];
        let h = 1e-6;
        for f in &costs {
            for m in [0.05, 0.3, 0.9] {
                let d1 = (f.value(m + h) - f.value(m - h)) / (2.0 * h);
                let d2 = (f.derivative(m + h) - f.derivative(m - h)) / (2.0 * h);
                assert!((d1 - f.derivative(m)).abs() < 1e-7, "{f:?} f' at {m}");
                assert!(
                    (d2 - f.second_derivative(m)).abs() < 1e-5,
                    "{f:?} f'' at {m}"
                );
            }
        }
    }

    #[test]
    fn admissibility_gate() {
        assert!(CostFunction::affine(1.0, 0.0).is_err());
        assert!(CostFunction::sqrt(-1.0).is_err());
        assert!(CostFunction::neg_m_log_m(1.0)
            .unwrap()
            .check_admissible(1.0)
            .is_ok());
        assert!(matches!(
            CostFunction::neg_m_log_m(1.0)
                .unwrap()
                .check_admissible(2.0),
            Err(EnergyError::MassLimitExceeded { .. })
        ));
        let convex = CostFunction::custom("m^2", |m| m * m, |m| 2.0 * m, |_| 2.0);
        assert!(convex.check_admissible(1.0).is_err());
        let negative = CostFunction::custom(
            "sqrt-1",
            |m: f64| m.sqrt() - 1.0,
            |m| 0.5 / m.sqrt(),
            |m| -0.25 / (m * m.sqrt()),
        );
        assert!(negative.check_admissible(1.0).is_err());
        assert!(CostFunction::zero().check_admissible(5.0).is_ok());
    }

    #[test]
    fn spec_round_trip() {
        let spec: CostSpec = serde_json::from_str(r#"{"f": "sqrt", "lambda": 0.005}"#).unwrap();
        assert_eq!(spec, CostSpec::Sqrt { lambda: 0.005 });
        let f = CostFunction::from_spec(&spec).unwrap();
        assert_eq!(f.spec(), Some(spec));
        let z: CostSpec = serde_json::from_str(r#"{"f": "zero"}"#).unwrap();
        assert_eq!(z, CostSpec::Zero);
        assert!(serde_json::from_str::<CostSpec>(r#"{"f": "cubic"}"#).is_err());
    }
}
