//! Problem files.
//!
//! A problem file is TOML (or JSON, chosen by a `.json` extension or a
//! leading `{`) with a strict schema: unknown keys are errors. Top-level
//! keys (`c`, `support`) must precede the tables in TOML.
//!
//! ```toml
//! c = "e2"
//!
//! [model]
//! type = "polynomial"
//! k = 6
//!
//! [optimizer]
//! starts = 40
//! seed = 1
//! ```

use std::path::Path;

use elfving_core::model::{transformed_problem, DesignSpace};
use elfving_core::{CurveModel, GlmTransform, ProblemSpec, SolveSettings, Tolerances, Vector};
use serde::{Deserialize, Serialize};

use crate::{CliError, Format};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Target vector, or `"e<j>"` for the j-th basis vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Target>,
    /// Prescribed support for `weights`: design-variable values for curve
    /// models, raw vectors for point sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportList>,
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "OptimizerSection::is_empty")]
    pub optimizer: OptimizerSection,
    #[serde(default, skip_serializing_if = "TolerancesSection::is_empty")]
    pub tolerances: TolerancesSection,
    #[serde(default, skip_serializing_if = "OutputSection::is_empty")]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSection {
    /// `x(u) = (1, u, ..., u^{k-1})'`; give either `k` or `degree = k - 1`.
    Polynomial {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        degree: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
    },
    /// A finite candidate set of regression vectors.
    Points { points: Vec<Vec<f64>> },
    /// Logistic regression on a polynomial predictor, locally at `theta_hat`.
    Logistic {
        theta_hat: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Basis(String),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupportList {
    Values(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explore_f_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explore_x_tol: Option<f64>,
}

impl OptimizerSection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge_tol: Option<f64>,
}

impl TolerancesSection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            rank_tol: self.rank_tol.unwrap_or(d.rank_tol),
            span_tol: self.span_tol.unwrap_or(d.span_tol),
            merge_tol: self.merge_tol.unwrap_or(d.merge_tol),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Significant digits of printed numbers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<usize>,
}

impl OutputSection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// A problem file resolved into core types.
#[derive(Debug, Clone)]
pub struct Problem {
    /// The problem in the user's coordinates.
    pub base: ProblemSpec,
    /// Set for logistic models.
    pub glm: Option<GlmTransform>,
    /// The problem handed to the solver: `base`, or its transformed version.
    pub solved: ProblemSpec,
}

impl Problem {
    pub fn is_curve(&self) -> bool {
        self.base.curve_model().is_some()
    }

    /// Regression vector of `u` in the solved space.
    pub fn solved_features(&self, u: f64) -> Result<Vector, CliError> {
        let model = self
            .solved
            .curve_model()
            .ok_or_else(|| CliError::input("design variable given for a point-set model"))?;
        Ok(model.features(u)?)
    }
}

pub fn read_problem_file(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    parse_problem(&text, json).map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
}

pub fn parse_problem(text: &str, json: bool) -> Result<ProblemFile, CliError> {
    if json {
        serde_json::from_str(text).map_err(|e| CliError::input(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| CliError::input(e.to_string()))
    }
}

fn domain_of(domain: Option<[f64; 2]>) -> (f64, f64) {
    domain.map_or((-1.0, 1.0), |[lo, hi]| (lo, hi))
}

impl Target {
    /// `"e3"` with `k = 5` gives `(0, 0, 1, 0, 0)'`.
    pub fn resolve(&self, k: usize) -> Result<Vector, CliError> {
        match self {
            Target::Vector(v) => Ok(Vector::from_column_slice(v)),
            Target::Basis(s) => {
                let j: usize = s
                    .strip_prefix('e')
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| CliError::input(format!("c = {s:?}: expected a vector or \"e<j>\"")))?;
                if j == 0 || j > k {
                    return Err(CliError::input(format!("c = {s:?}: index must be in 1..={k}")));
                }
                let mut c = Vector::zeros(k);
                c[j - 1] = 1.0;
                Ok(c)
            }
        }
    }

    /// Parses a command-line target: `e<j>` or comma-separated numbers.
    pub fn parse_arg(s: &str) -> Result<Self, String> {
        if s.starts_with('e') {
            return Ok(Target::Basis(s.to_string()));
        }
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Target::Vector)
    }
}

impl ProblemFile {
    pub fn dimension(&self) -> Result<usize, CliError> {
        match &self.model {
            ModelSection::Polynomial { k, degree, .. } => match (k, degree) {
                (Some(k), None) => Ok(*k),
                (None, Some(d)) => Ok(d + 1),
                (Some(k), Some(d)) if *k == d + 1 => Ok(*k),
                (Some(_), Some(_)) => Err(CliError::input("model: k and degree disagree")),
                (None, None) => Err(CliError::input("model: polynomial needs k or degree")),
            },
            ModelSection::Points { points } => points
                .first()
                .map(Vec::len)
                .ok_or_else(|| CliError::input("model: points is empty")),
            ModelSection::Logistic { theta_hat, .. } => Ok(theta_hat.len()),
        }
    }

    /// Builds the core problem; `c` overrides the file's target.
    pub fn build(&self, c: Option<&Target>) -> Result<Problem, CliError> {
        let target = c
            .or(self.c.as_ref())
            .ok_or_else(|| CliError::input("no target vector: set c in the file or pass --c"))?;
        let k = self.dimension()?;
        let c = target.resolve(k)?;
        let tol = self.tolerances.resolve();
        match &self.model {
            ModelSection::Polynomial { domain, .. } => {
                let model = CurveModel::new(elfving_core::FeatureMap::Polynomial { k }, domain_of(*domain))?;
                let base = ProblemSpec::new(DesignSpace::Curve(model), c, tol)?;
                Ok(Problem { solved: base.clone(), base, glm: None })
            }
            ModelSection::Points { points } => {
                let pts = points.iter().map(|p| Vector::from_column_slice(p)).collect();
                let base = ProblemSpec::new(DesignSpace::Points(pts), c, tol)?;
                Ok(Problem { solved: base.clone(), base, glm: None })
            }
            ModelSection::Logistic { theta_hat, domain } => {
                let model = CurveModel::new(elfving_core::FeatureMap::Polynomial { k }, domain_of(*domain))?;
                let base = ProblemSpec::new(DesignSpace::Curve(model), c, tol)?;
                let g = GlmTransform::new(&Vector::from_column_slice(theta_hat))?;
                let solved = transformed_problem(&g, &base)?;
                Ok(Problem { base, glm: Some(g), solved })
            }
        }
    }

    /// Solver settings from the file, with command-line overrides.
    pub fn settings(&self, seed: Option<u64>, starts: Option<usize>) -> Result<SolveSettings, CliError> {
        let d = SolveSettings::default();
        let o = &self.optimizer;
        let s = SolveSettings {
            starts: starts.or(o.starts).unwrap_or(d.starts),
            seed: seed.or(o.seed).unwrap_or(d.seed),
            max_iters: o.max_iters.unwrap_or(d.max_iters),
            f_tol: o.f_tol.unwrap_or(d.f_tol),
            x_tol: o.x_tol.unwrap_or(d.x_tol),
            explore_f_tol: o.explore_f_tol.unwrap_or(d.explore_f_tol),
            explore_x_tol: o.explore_x_tol.unwrap_or(d.explore_x_tol),
            ..d
        };
        s.validate()?;
        Ok(s)
    }
}
