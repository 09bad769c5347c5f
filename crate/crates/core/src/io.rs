//! Problem files, result documents, and sweep CSV.
//!
//! A problem file is JSON:
//!
//! ```json
//! {
//!   "version": "1",
//!   "space": { "points": [[0.0], [1.0]], "metric": "euclidean" },
//!   "cost": { "p": 1.0 },
//!   "f": [0.0, 1.0],
//!   "mu": [0.0, 1.0],
//!   "r": 0.4,
//!   "sense": "min"
//! }
//! ```
//!
//! `space` holds either `points` (with optional `metric`, default
//! `euclidean`) or a full `dist` matrix. `cost` holds either an exponent `p`
//! (cost `d^p`) or an explicit `matrix`. An optional `nu` vector is used by
//! the OT distance command.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::primal::PrimalProblem;
use crate::space::{build_space, cost_from_metric, CostMatrix, FiniteSpace, Metric};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[default]
    Min,
    Max,
}

impl Sense {
    /// `+1` for minimisation, `-1` for maximisation.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Euclidean,
    Manhattan,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

/// A problem as written in the file. Numeric fields are kept exactly as read;
/// renormalisation of `mu` happens when the [`Instance`] is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub version: String,
    pub space: SpaceSpec,
    pub cost: CostSpec,
    pub f: Vec<f64>,
    pub mu: Vec<f64>,
    pub r: f64,
    #[serde(default)]
    pub sense: Sense,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<f64>>,
}

/// A validated problem ready for the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub space: FiniteSpace,
    pub problem: PrimalProblem,
    pub sense: Sense,
    pub nu: Option<Measure>,
}

impl Instance {
    /// The problem in minimisation form: `f` for `min`, `-f` for `max`.
    pub fn min_form(&self) -> PrimalProblem {
        match self.sense {
            Sense::Min => self.problem.clone(),
            Sense::Max => self.problem.negated(),
        }
    }
}

fn invalid(field: &str, e: impl std::fmt::Display) -> Error {
    Error::ValidationError(format!("{field}: {e}"))
}

impl ProblemSpec {
    pub fn instance(&self) -> Result<Instance> {
        if self.version != FORMAT_VERSION {
            return Err(invalid("version", format!("unsupported version {:?}, expected {FORMAT_VERSION:?}", self.version)));
        }
        let space = match (&self.space.points, &self.space.dist) {
            (Some(_), Some(_)) => return Err(invalid("space", "give either points or dist, not both")),
            (None, None) => return Err(Error::SchemaError("space: missing field `points` or `dist`".into())),
            (Some(points), None) => {
                let metric = match self.space.metric.unwrap_or(MetricName::Euclidean) {
                    MetricName::Euclidean => Metric::Euclidean,
                    MetricName::Manhattan => Metric::Manhattan,
                };
                build_space(points.clone(), metric).map_err(|e| invalid("space.points", e))?
            }
            (None, Some(dist)) => {
                if self.space.metric.is_some() {
                    return Err(invalid("space.metric", "metric only applies to points"));
                }
                build_space(vec![], Metric::Explicit(dist.clone())).map_err(|e| invalid("space.dist", e))?
            }
        };
        let space = match &self.space.labels {
            Some(labels) => space.with_labels(labels.clone()).map_err(|e| invalid("space.labels", e))?,
            None => space,
        };
        let n = space.len();
        let cost = match (&self.cost.p, &self.cost.matrix) {
            (Some(_), Some(_)) => return Err(invalid("cost", "give either p or matrix, not both")),
            (None, None) => return Err(Error::SchemaError("cost: missing field `p` or `matrix`".into())),
            (Some(p), None) => cost_from_metric(&space, *p).map_err(|e| invalid("cost.p", e))?,
            (None, Some(m)) => CostMatrix::new(m.clone()).map_err(|e| invalid("cost.matrix", e))?,
        };
        if cost.len() != n {
            return Err(invalid("cost.matrix", format!("{}x{} matrix for {n} points", cost.len(), cost.len())));
        }
        if self.f.len() != n {
            return Err(invalid("f", format!("{} values for {n} points", self.f.len())));
        }
        if self.mu.len() != n {
            return Err(invalid("mu", format!("{} weights for {n} points", self.mu.len())));
        }
        let mu = Measure::new(self.mu.clone()).map_err(|e| invalid("mu", e))?;
        let nu = match &self.nu {
            Some(w) if w.len() != n => return Err(invalid("nu", format!("{} weights for {n} points", w.len()))),
            Some(w) => Some(Measure::new(w.clone()).map_err(|e| invalid("nu", e))?),
            None => None,
        };
        let problem = PrimalProblem::new(self.f.clone(), mu, cost, self.r).map_err(|e| match e {
            Error::InvalidProblem(m) if m.starts_with("radius") => invalid("r", m),
            other => invalid("f", other),
        })?;
        Ok(Instance {
            space,
            problem,
            sense: self.sense,
            nu,
        })
    }

    /// Hex SHA-256 of the compact canonical serialisation.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("problem spec serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

fn map_json_error(e: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => Error::SchemaError(e.to_string()),
        Category::Syntax | Category::Eof | Category::Io => Error::ParseError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    }
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let spec: ProblemSpec = serde_json::from_str(text).map_err(map_json_error)?;
    spec.instance()?;
    Ok(spec)
}

/// Parses a document and builds the solver instance in one step.
pub fn load_instance(text: &str) -> Result<(ProblemSpec, Instance)> {
    let spec: ProblemSpec = serde_json::from_str(text).map_err(map_json_error)?;
    let instance = spec.instance()?;
    Ok((spec, instance))
}

pub fn emit_problem(spec: &ProblemSpec) -> String {
    serde_json::to_string_pretty(spec).expect("problem spec serialises")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalSection {
    pub status: String,
    pub value: f64,
    pub cost_used: f64,
    pub plan: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSection {
    pub value: f64,
    pub attained: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    pub supergradient: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseRecord {
    pub clause: String,
    pub description: String,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSection {
    pub value: f64,
    pub nu: Vec<f64>,
    pub blend_t: f64,
    pub slack: f64,
    pub certificate: Vec<ClauseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub primal_ms: Option<f64>,
    pub dual_ms: Option<f64>,
    pub recovery_ms: Option<f64>,
}

/// Output of `solve`. Keys are emitted in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub version: String,
    pub problem_sha256: String,
    pub sense: Sense,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primal: Option<PrimalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_case: Option<WorstCaseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Pretty JSON with shortest round-trip number formatting.
pub fn emit_result(res: &ResultDocument) -> String {
    serde_json::to_string_pretty(res).expect("result document serialises")
}

pub fn parse_result(text: &str) -> Result<ResultDocument> {
    serde_json::from_str(text).map_err(map_json_error)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub value: f64,
    pub lambda_star: Option<f64>,
}

pub const SWEEP_HEADER: &str = "r,value,lambda_star,attained";

/// CSV with header `r,value,lambda_star,attained`, rows sorted by `r`.
/// `lambda_star` is empty when the supremum is not attained.
pub fn emit_sweep(rows: &[SweepRow]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.r.total_cmp(&b.r));
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in sorted {
        let lambda = row.lambda_star.map(|l| l.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", row.r, row.value, lambda, row.lambda_star.is_some()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: &str = r#"{
        "version": "1",
        "space": { "points": [[0], [1]], "metric": "euclidean" },
        "cost": { "p": 1 },
        "f": [0, 1],
        "mu": [0, 1],
        "r": 0.4,
        "sense": "min"
    }"#;

    #[test]
    fn parses_the_two_point_problem() {
        let spec = parse_problem(E1).unwrap();
        let inst = spec.instance().unwrap();
        assert_eq!(inst.problem.len(), 2);
        assert_eq!(inst.problem.r(), 0.4);
        assert_eq!(inst.sense, Sense::Min);
    }

    #[test]
    fn mu_must_sum_to_one() {
        let doc = E1.replace(r#""mu": [0, 1]"#, r#""mu": [0.5, 0.6]"#);
        match parse_problem(&doc) {
            Err(Error::ValidationError(m)) => assert!(m.starts_with("mu"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_distances_match_points() {
        let doc = E1.replace(
            r#""points": [[0], [1]], "metric": "euclidean""#,
            r#""dist": [[0, 1], [1, 0]]"#,
        );
        let a = parse_problem(E1).unwrap().instance().unwrap();
        let b = parse_problem(&doc).unwrap().instance().unwrap();
        assert_eq!(a.problem, b.problem);
        assert_eq!(a.space.dist(), b.space.dist());
    }

    #[test]
    fn error_categories() {
        match parse_problem("{ \"version\": ") {
            Err(Error::ParseError { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        match parse_problem(&E1.replace(r#""f": [0, 1],"#, "")) {
            Err(Error::SchemaError(m)) => assert!(m.contains("`f`"), "{m}"),
            other => panic!("{other:?}"),
        }
        match parse_problem(&E1.replace(r#""r": 0.4"#, r#""r": -1"#)) {
            Err(Error::ValidationError(m)) => assert!(m.starts_with("r:"), "{m}"),
            other => panic!("{other:?}"),
        }
        match parse_problem(&E1.replace(r#""f": [0, 1]"#, r#""f": [0, 1, 2]"#)) {
            Err(Error::ValidationError(m)) => assert!(m.starts_with("f:"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_problem(&E1.replace(r#""p": 1"#, r#""p": 0.5"#)),
            Err(Error::ValidationError(_))
        ));
        assert!(matches!(
            parse_problem(&E1.replace(r#""version": "1""#, r#""version": "2""#)),
            Err(Error::ValidationError(_))
        ));
        assert!(matches!(parse_problem(&E1.replace("\"sense\"", "\"sens\"")), Err(Error::SchemaError(_))));
    }

    #[test]
    fn round_trip_is_idempotent() {
        let spec = parse_problem(E1).unwrap();
        let again = parse_problem(&emit_problem(&spec)).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.digest(), again.digest());
    }

    #[test]
    fn sweep_csv() {
        let rows = [
            SweepRow { r: 1.0, value: 0.0, lambda_star: Some(0.0) },
            SweepRow { r: 0.0, value: 1.0, lambda_star: None },
            SweepRow { r: 0.5, value: 0.5, lambda_star: Some(1.0) },
        ];
        assert_eq!(
            emit_sweep(&rows),
            "r,value,lambda_star,attained\n0,1,,false\n0.5,0.5,1,true\n1,0,0,true\n"
        );
    }

    #[test]
    fn unattained_dual_omits_lambda() {
        let doc = ResultDocument {
            version: FORMAT_VERSION.into(),
            problem_sha256: String::new(),
            sense: Sense::Min,
            method: "dual".into(),
            primal: None,
            dual: Some(DualSection {
                value: 1.0,
                attained: false,
                lambda_star: None,
                supergradient: [0.0, 0.0],
            }),
            gap: None,
            worst_case: None,
            timings: None,
        };
        let text = emit_result(&doc);
        assert!(text.contains("\"attained\": false"));
        assert!(!text.contains("lambda_star"));
        assert_eq!(parse_result(&text).unwrap(), doc);
    }
}
