//! On-disk formats: JSON problem files, the trace CSV and the JSON
//! certificate document.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::certificate::{ConvergenceCertificate, Verdict};
use crate::cone_order::{AugmentedPoint, TolerancePolicy, Vector};
use crate::contraction::{validate_contraction, ContractionMap, ContractionSpec};
use crate::engine::{IterationTrace, StopKind, StopReason, StoppingRule, DEFAULT_MAX_ITERATIONS};
use crate::error::{Error, Result};
use crate::problems::ProblemInstance;

pub const TOOL_NAME: &str = "cone-fixpoint";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleName {
    Apriori,
    Aposteriori,
    Count,
}

/// A problem as read from JSON. Unknown keys are rejected.
///
/// ```json
/// {
///   "dimension": 1,
///   "lambda": 0.5,
///   "map": { "kind": "affine", "a": [[0.5]], "b": [1.0] },
///   "x0": [0.0],
///   "rule": "apriori",
///   "eps": 1e-8
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: usize,
    pub lambda: f64,
    pub map: ContractionMap,
    pub x0: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_instance(p: &ProblemInstance) -> Self {
        ProblemFile {
            dimension: p.spec.dimension(),
            lambda: p.spec.lambda(),
            map: p.spec.map().clone(),
            x0: p.x0.clone(),
            rule: None,
            eps: None,
            count: None,
            max_iterations: None,
            seed: None,
        }
    }

    /// Builds the spec and checks it is a contraction with the declared
    /// factor.
    pub fn to_problem(&self) -> Result<(ContractionSpec, Vector)> {
        let spec = ContractionSpec::new(self.lambda, self.map.clone())?;
        if spec.dimension() != self.dimension {
            return Err(Error::spec(
                "dimension",
                format!("declared {} but the map acts on R^{}", self.dimension, spec.dimension()),
            ));
        }
        if self.x0.dim() != self.dimension {
            return Err(Error::spec(
                "x0",
                format!("has {} entries, expected {}", self.x0.dim(), self.dimension),
            ));
        }
        validate_contraction(&spec)?;
        Ok((spec, self.x0.clone()))
    }

    /// The stopping rule given by the optional run keys, defaulting to
    /// `apriori` with `default_eps`.
    pub fn stopping_rule(&self, default_eps: f64) -> Result<StoppingRule> {
        let eps = self.eps.unwrap_or(default_eps);
        let kind = match self.rule.unwrap_or(RuleName::Apriori) {
            RuleName::Apriori => StopKind::APriori { eps },
            RuleName::Aposteriori => StopKind::APosteriori { eps },
            RuleName::Count => StopKind::FixedCount {
                count: self.count.ok_or_else(|| Error::spec("count", "required when rule is \"count\""))?,
            },
        };
        let rule = StoppingRule {
            kind,
            max_iterations: self.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS),
        };
        rule.validate()?;
        Ok(rule)
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn trace_header(m: usize) -> Vec<String> {
    let mut header = vec!["n".to_string()];
    header.extend((0..m).map(|i| format!("x_{i}")));
    header.extend(["t", "step_norm", "t_increment", "mono_residual"].map(String::from));
    header
}

/// Writes `n,x_0,...,x_{m-1},t,step_norm,t_increment,mono_residual`, one row
/// per iterate, reals with 17 significant digits. The last three columns are
/// empty on row 0.
pub fn write_trace<W: Write>(trace: &IterationTrace, out: W) -> Result<()> {
    let m = trace.spec.dimension();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(m))?;
    let mut prev: Option<&AugmentedPoint> = None;
    for (n, p) in trace.points.iter().enumerate() {
        let mut row = vec![n.to_string()];
        row.extend(p.x.as_slice().iter().map(|&c| fmt_f64(c)));
        row.push(fmt_f64(p.t));
        match prev {
            Some(q) => {
                let step = p.x.distance(&q.x)?;
                let inc = p.t - q.t;
                row.extend([fmt_f64(step), fmt_f64(inc), fmt_f64(inc - step)]);
            }
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        w.write_record(&row)?;
        prev = Some(p);
    }
    w.flush()?;
    Ok(())
}

fn parse_field(record: &csv::StringRecord, idx: usize, line: usize) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("");
    raw.trim().parse::<f64>().map_err(|_| Error::Format {
        what: "trace csv",
        reason: format!("row {line}: cannot parse `{raw}` in column {idx}"),
    })
}

/// Reads a trace written by [`write_trace`] for the problem `(spec, x0)`.
///
/// Only the `x` and `t` columns are used; the derived columns are ignored.
/// The loaded trace carries [`StopReason::CountReached`] and
/// `d = ‖f(x0) − x0‖`. Whether row 0 actually starts at `x0` is left to the
/// verifier.
pub fn read_trace<R: Read>(spec: &ContractionSpec, x0: &Vector, input: R) -> Result<IterationTrace> {
    let m = spec.dimension();
    x0.check_dim(m)?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != trace_header(m) {
        return Err(Error::Format {
            what: "trace csv",
            reason: format!("header {:?} does not match a trace in R^{m}", header.join(",")),
        });
    }
    let mut points = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let n: usize = record[0].trim().parse().map_err(|_| Error::Format {
            what: "trace csv",
            reason: format!("row {line}: bad index `{}`", &record[0]),
        })?;
        if n != line {
            return Err(Error::Format {
                what: "trace csv",
                reason: format!("row {line}: expected n = {line}, found {n}"),
            });
        }
        let x = (1..=m)
            .map(|i| parse_field(&record, i, line))
            .collect::<Result<Vec<_>>>()?;
        let t = parse_field(&record, m + 1, line)?;
        points.push(AugmentedPoint::new(Vector::new(x)?, t)?);
    }
    if points.is_empty() {
        return Err(Error::Format {
            what: "trace csv",
            reason: "no rows".into(),
        });
    }
    let d = spec.evaluate(x0)?.distance(x0)?;
    Ok(IterationTrace {
        spec: spec.clone(),
        x0: x0.clone(),
        d,
        points,
        stop_reason: StopReason::CountReached,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub count: usize,
    pub min_residual: Option<f64>,
    pub argmin: Option<usize>,
}

impl ResidualSummary {
    fn of(values: &[f64]) -> Self {
        let best = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1));
        ResidualSummary {
            count: values.len(),
            min_residual: best.map(|(_, v)| *v),
            argmin: best.map(|(i, _)| i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedSummary {
    pub count: usize,
    pub min_residual: Option<f64>,
    /// `[witness, n]`.
    pub argmin: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSummary {
    pub residual: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummaries {
    pub monotone: ResidualSummary,
    pub recurrence: ResidualSummary,
    pub bounded: BoundedSummary,
    pub lower_bound: ResidualSummary,
    pub fixed_point: FixedPointSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullResiduals {
    pub monotone: Vec<f64>,
    pub recurrence: Vec<f64>,
    /// One row per witness.
    pub bounded: Vec<Vec<f64>>,
    pub lower_bound: Vec<f64>,
}

/// The JSON certificate document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub tool: String,
    pub version: String,
    pub source: String,
    pub problem: ProblemFile,
    pub lambda: f64,
    pub d: f64,
    pub iterations: usize,
    pub t_star: f64,
    pub final_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<StopReason>,
    pub seed: u64,
    pub tolerance: TolerancePolicy,
    pub checks: CheckSummaries,
    pub final_point: AugmentedPoint,
    pub limit_point: AugmentedPoint,
    pub witnesses: Vec<AugmentedPoint>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<FullResiduals>,
}

impl CertificateDocument {
    pub fn new(
        cert: &ConvergenceCertificate,
        problem: ProblemFile,
        source: impl Into<String>,
        stop_reason: Option<StopReason>,
        seed: u64,
        full: bool,
    ) -> Self {
        let bounded_min = cert
            .omega_witnesses
            .iter()
            .enumerate()
            .flat_map(|(w, c)| c.bound_residuals.iter().enumerate().map(move |(n, r)| ([w, n], *r)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let bounded_count = cert.omega_witnesses.iter().map(|w| w.bound_residuals.len()).sum();
        CertificateDocument {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            source: source.into(),
            problem,
            lambda: cert.lambda,
            d: cert.d,
            iterations: cert.iterations,
            t_star: cert.t_star(),
            final_bound: cert.final_bound,
            stop_reason,
            seed,
            tolerance: cert.tolerance,
            checks: CheckSummaries {
                monotone: ResidualSummary::of(&cert.monotone_residuals),
                recurrence: ResidualSummary::of(&cert.recurrence_residuals),
                bounded: BoundedSummary {
                    count: bounded_count,
                    min_residual: bounded_min.map(|(_, r)| r),
                    argmin: bounded_min.map(|(i, _)| i),
                },
                lower_bound: ResidualSummary::of(&cert.lower_bound_residuals),
                fixed_point: FixedPointSummary {
                    residual: cert.fixed_point_residual,
                    limit: cert.fixed_point_limit,
                },
            },
            final_point: cert.final_point.clone(),
            limit_point: cert.limit_point.clone(),
            witnesses: cert.omega_witnesses.iter().map(|w| w.point.clone()).collect(),
            verdict: cert.verdict,
            full: full.then(|| FullResiduals {
                monotone: cert.monotone_residuals.clone(),
                recurrence: cert.recurrence_residuals.clone(),
                bounded: cert
                    .omega_witnesses
                    .iter()
                    .map(|w| w.bound_residuals.clone())
                    .collect(),
                lower_bound: cert.lower_bound_residuals.clone(),
            }),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
