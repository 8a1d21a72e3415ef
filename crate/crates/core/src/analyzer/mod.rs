//! Predictions of qualitative properties from the algebraic criteria, and
//! their confrontation with simulated trajectories.

mod data;
mod predict;
mod presets;
mod verify;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{Coefficient, Scenario};
use crate::lattice::{LatticeVector, OrderInterval, Subspace};
use crate::semigroup::{PropertyKind, PropertyObservation, Trajectory};

pub use data::{initial_data, DataSet};
pub use predict::{default_targets, predict, predict_one};
pub use presets::{preset, Preset};
pub use verify::{verify, SimConfig, DECAY_THRESHOLD, REACH_TOL, SYMMETRY_DEFECT_TOL};

/// Version tag written into every JSON document.
pub const SCHEMA_VERSION: &str = "1.0.0";

pub(crate) fn matrix_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidScenario(format!("{what}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// A coefficient as written in files: one matrix, or one per element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Constant(Vec<Vec<f64>>),
    PerElement(Vec<Vec<Vec<f64>>>),
}

impl CoefficientSpec {
    fn from_coefficient(c: &Coefficient) -> Self {
        match c {
            Coefficient::Constant(d) => CoefficientSpec::Constant(matrix_rows(d)),
            Coefficient::PerElement(ds) => CoefficientSpec::PerElement(ds.iter().map(matrix_rows).collect()),
        }
    }

    fn to_coefficient(&self, what: &str) -> Result<Coefficient> {
        Ok(match self {
            CoefficientSpec::Constant(rows) => Coefficient::Constant(matrix_from_rows(rows, what)?),
            CoefficientSpec::PerElement(blocks) => Coefficient::PerElement(
                blocks
                    .iter()
                    .map(|b| matrix_from_rows(b, what))
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

/// Serializable form of a [`Scenario`]. Subspaces are given by generators;
/// an empty list is `{0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub m: usize,
    pub diffusion: CoefficientSpec,
    pub s_left: Vec<Vec<f64>>,
    pub s_right: Vec<Vec<f64>>,
    pub y_left: Vec<Vec<f64>>,
    pub y_right: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<CoefficientSpec>,
    pub gamma: f64,
}

fn subspace_from_generators(m: usize, gens: &[Vec<f64>]) -> Result<Subspace> {
    let vs: Vec<LatticeVector> = gens.iter().map(|g| LatticeVector::from(g.clone())).collect();
    Subspace::span(m, &vs)
}

impl ScenarioSpec {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            name: s.name.clone(),
            m: s.m,
            diffusion: CoefficientSpec::from_coefficient(&s.diffusion),
            s_left: matrix_rows(&s.s_left),
            s_right: matrix_rows(&s.s_right),
            y_left: s.y_left.basis_rows(),
            y_right: s.y_right.basis_rows(),
            potential: s.potential.as_ref().map(CoefficientSpec::from_coefficient),
            gamma: s.gamma,
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let m = self.m;
        Ok(Scenario {
            name: self.name.clone(),
            m,
            diffusion: self.diffusion.to_coefficient("diffusion")?,
            s_left: matrix_from_rows(&self.s_left, "s_left")?,
            s_right: matrix_from_rows(&self.s_right, "s_right")?,
            y_left: subspace_from_generators(m, &self.y_left)?,
            y_right: subspace_from_generators(m, &self.y_right)?,
            potential: self
                .potential
                .as_ref()
                .map(|c| c.to_coefficient("potential"))
                .transpose()?,
            gamma: self.gamma,
        })
    }
}

/// What a prediction is about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// Invariance of `[0,∞)^m`.
    Positivity,
    /// Invariance of `[−1,1]^m`.
    LinfContraction,
    /// Invariance of an order interval; `null` bounds are infinite.
    Interval {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
    },
    /// Invariance of `C_H` for the subspace spanned by `generators`.
    SubspaceInvariance {
        generators: Vec<Vec<f64>>,
    },
    Irreducibility,
    Symmetry,
    Stability,
    /// Domination of the analyzed semigroup by the one of `dominating`.
    Domination {
        dominating: Box<ScenarioSpec>,
    },
    /// Domination of `‖u‖_W` by the scalar companion problem.
    ScalarDomination,
}

impl Target {
    pub fn property(&self) -> PropertyKind {
        match self {
            Target::Positivity => PropertyKind::Positivity,
            Target::LinfContraction => PropertyKind::LinfContraction,
            Target::Interval { .. } => PropertyKind::IntervalInvariance,
            Target::SubspaceInvariance { .. } => PropertyKind::SubspaceInvariance,
            Target::Irreducibility => PropertyKind::Irreducibility,
            Target::Symmetry => PropertyKind::Symmetry,
            Target::Stability => PropertyKind::Stability,
            Target::Domination { .. } => PropertyKind::Domination,
            Target::ScalarDomination => PropertyKind::ScalarDomination,
        }
    }

    pub fn interval(lower: &[f64], upper: &[f64]) -> Self {
        let wrap = |v: &[f64]| v.iter().map(|&x| x.is_finite().then_some(x)).collect();
        Target::Interval {
            lower: wrap(lower),
            upper: wrap(upper),
        }
    }

    pub fn dominated_by(s: &Scenario) -> Self {
        Target::Domination {
            dominating: Box::new(ScenarioSpec::from_scenario(s)),
        }
    }

    /// The order interval for interval-type targets.
    pub fn order_interval(&self, m: usize) -> Option<Result<OrderInterval>> {
        match self {
            Target::Positivity => Some(Ok(OrderInterval::positive_cone(m))),
            Target::LinfContraction => Some(Ok(OrderInterval::unit_box(m))),
            Target::Interval { lower, upper } => {
                let lo = lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
                let hi = upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
                Some(OrderInterval::new(lo, hi))
            }
            _ => None,
        }
    }
}

/// How far a criterion decides the property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Applicability {
    /// The criterion is a characterization.
    Biconditional,
    /// Only a necessary condition is available; a `true` outcome decides nothing.
    NecessaryOnly,
    /// Only a sufficient condition is available; a `false` outcome decides nothing.
    SufficientOnly,
    /// The hypotheses of the criterion are not met.
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionStep {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub property: PropertyKind,
    pub target: Target,
    /// `None` when the criterion does not decide the property.
    pub predicted: Option<bool>,
    pub applicability: Applicability,
    pub criterion_trace: Vec<CriterionStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Predicted true and no violation seen, or predicted false and a witness found.
    Confirmed,
    /// Predicted true but a violation was observed.
    RefutedPrediction,
    /// Predicted false but the witness search came back empty.
    NoCounterexampleFound,
    /// No prediction to test.
    Inapplicable,
    /// The simulation for this row failed.
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub prediction: Prediction,
    pub observation: Option<PropertyObservation>,
    pub verdict: Verdict,
    /// Number of initial data simulated.
    pub data_tested: usize,
    /// Index of the first violating datum, if any.
    pub witness_datum: Option<usize>,
    pub error: Option<String>,
    /// A representative trajectory (the witness, or the first datum).
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub scenario: ScenarioSpec,
    pub diagnostics: crate::forms::FormDiagnostics,
    pub ellipticity_margin: f64,
    pub simulation: SimConfig,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn any_refuted(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::RefutedPrediction)
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Failed)
    }
}

/// The document written by `analyze` and read back by `verify --predictions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub schema_version: String,
    pub scenario: ScenarioSpec,
    pub predictions: Vec<Prediction>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_spec_round_trip() {
        let sc = preset(&Preset::Kirchhoff, 3).unwrap();
        let spec = ScenarioSpec::from_scenario(&sc);
        let back = spec.to_scenario().unwrap();
        assert_eq!(back.m, 3);
        assert!((back.y_left.projection() - sc.y_left.projection()).amax() < 1e-15);
        let json = serde_json::to_string(&spec).unwrap();
        let again: ScenarioSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn interval_target_uses_null_for_infinite_bounds() {
        let t = Target::interval(&[0.0, f64::NEG_INFINITY], &[f64::INFINITY, 2.0]);
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["lower"][1], serde_json::Value::Null);
        let j = t.order_interval(2).unwrap().unwrap();
        assert_eq!(j.upper()[0], f64::INFINITY);
    }
}
