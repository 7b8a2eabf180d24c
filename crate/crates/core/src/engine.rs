//! The augmented Picard iteration
//!
//! ```text
//! x^{n+1} = f(x^n),      t^{n+1} = λ t^n + d,      t^0 = 0,  d = ‖x^1 − x^0‖
//! ```
//!
//! `t` is the scalar majorant: `t^{n+1} − t^n = λ^n d ≥ ‖x^{n+1} − x^n‖`, and
//! `t* − t^n = λ^n d / (1 − λ)` bounds the distance from `x^n` to the fixed
//! point.

use serde::{Deserialize, Serialize};

use crate::cone_order::{AugmentedPoint, Vector};
use crate::contraction::{evaluate, ContractionSpec};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Below this value of `1 − λ` a run carries [`RunWarning::IllConditioned`].
pub const CONDITIONING_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopKind {
    /// Stop at the first `n` with `λ^n d / (1 − λ) ≤ eps`.
    APriori { eps: f64 },
    /// Stop once `λ / (1 − λ) · ‖x^{n+1} − x^n‖ ≤ eps`.
    APosteriori { eps: f64 },
    /// Run exactly `count` steps.
    FixedCount { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub kind: StopKind,
    pub max_iterations: usize,
}

impl StoppingRule {
    pub fn a_priori(eps: f64) -> Self {
        Self::with_kind(StopKind::APriori { eps })
    }

    pub fn a_posteriori(eps: f64) -> Self {
        Self::with_kind(StopKind::APosteriori { eps })
    }

    pub fn fixed_count(count: usize) -> Self {
        Self::with_kind(StopKind::FixedCount { count })
    }

    fn with_kind(kind: StopKind) -> Self {
        StoppingRule {
            kind,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
        }
        match self.kind {
            StopKind::APriori { eps } | StopKind::APosteriori { eps } if !(eps > 0.0) => Err(
                Error::InvalidInput(format!("eps must be positive, got {eps}")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    APrioriReached,
    APosterioriReached,
    CountReached,
    MaxIterations,
    ExactFixedPoint,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::APrioriReached => "a_priori_reached",
            StopReason::APosterioriReached => "a_posteriori_reached",
            StopReason::CountReached => "count_reached",
            StopReason::MaxIterations => "max_iterations",
            StopReason::ExactFixedPoint => "exact_fixed_point",
        }
    }

    /// Whether the run ended where its rule asked it to.
    pub fn is_success(self) -> bool {
        !matches!(self, StopReason::MaxIterations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunWarning {
    /// `1 − λ` is small enough that `d / (1 − λ)` amplifies rounding.
    IllConditioned { one_minus_lambda: f64 },
}

/// A finished (possibly truncated) run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub spec: ContractionSpec,
    pub x0: Vector,
    /// `‖x^1 − x^0‖`, fixed after the first step.
    pub d: f64,
    /// `(x^n, t^n)` for `n = 0..=N`.
    pub points: Vec<AugmentedPoint>,
    pub stop_reason: StopReason,
    pub warnings: Vec<RunWarning>,
}

impl IterationTrace {
    /// Number of steps `N`.
    pub fn iterations(&self) -> usize {
        self.points.len() - 1
    }

    pub fn final_point(&self) -> &AugmentedPoint {
        self.points.last().expect("trace holds at least the starting point")
    }

    pub fn lambda(&self) -> f64 {
        self.spec.lambda()
    }

    /// `t* = d / (1 − λ)`, the exact limit of the `t` recurrence.
    pub fn t_star(&self) -> f64 {
        self.d / (1.0 - self.lambda())
    }

    /// `λ^n d / (1 − λ)`, the certified distance from `x^n` to the fixed point.
    pub fn error_bound(&self, n: usize) -> f64 {
        a_priori_bound(self.d, self.lambda(), n)
    }

    pub fn final_bound(&self) -> f64 {
        self.error_bound(self.iterations())
    }
}

/// `λ^n d / (1 − λ)`.
pub fn a_priori_bound(d: f64, lambda: f64, n: usize) -> f64 {
    lambda.powf(n as f64) * d / (1.0 - lambda)
}

/// One step of the pair recurrence: `(f(x), λ t + d)`.
pub fn augmented_step(spec: &ContractionSpec, current: &AugmentedPoint, d: f64) -> Result<AugmentedPoint> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("d must be finite and nonnegative, got {d}")));
    }
    let x = evaluate(spec, &current.x)?;
    AugmentedPoint::new(x, spec.lambda() * current.t + d)
}

/// `t^n = d (1 − λ^n) / (1 − λ)`.
pub fn t_closed_form(d: f64, lambda: f64, n: usize) -> f64 {
    if d == 0.0 || n == 0 {
        return 0.0;
    }
    // 1 − λ^n without cancellation for λ near 1
    let one_minus_pow = -(n as f64 * lambda.ln()).exp_m1();
    d * one_minus_pow / (1.0 - lambda)
}

/// Smallest `n ≥ 0` with `λ^n d / (1 − λ) ≤ eps`.
pub fn a_priori_iterations(d: f64, lambda: f64, eps: f64) -> usize {
    if a_priori_bound(d, lambda, 0) <= eps {
        return 0;
    }
    // log estimate, then settle onto the exact boundary of the predicate
    let estimate = ((eps * (1.0 - lambda) / d).ln() / lambda.ln()).ceil();
    let mut n = if estimate.is_finite() && estimate > 0.0 {
        estimate as usize
    } else {
        1
    };
    while n > 0 && a_priori_bound(d, lambda, n - 1) <= eps {
        n -= 1;
    }
    while a_priori_bound(d, lambda, n) > eps {
        n += 1;
    }
    n
}

/// Runs the augmented iteration from `x0`. The spec is assumed to have passed
/// [`validate_contraction`](crate::contraction::validate_contraction).
///
/// Hitting `rule.max_iterations` is not an error: the partial trace is
/// returned with [`StopReason::MaxIterations`].
pub fn run(spec: &ContractionSpec, x0: &Vector, rule: &StoppingRule) -> Result<IterationTrace> {
    rule.validate()?;
    x0.check_dim(spec.dimension())?;
    let lambda = spec.lambda();

    let mut warnings = Vec::new();
    if 1.0 - lambda < CONDITIONING_THRESHOLD {
        warnings.push(RunWarning::IllConditioned {
            one_minus_lambda: 1.0 - lambda,
        });
    }

    let start = AugmentedPoint::new(x0.clone(), 0.0)?;
    let x1 = evaluate(spec, x0)?;
    let d = x1.distance(x0)?;
    let mut points = vec![start];

    if d == 0.0 {
        return Ok(IterationTrace {
            spec: spec.clone(),
            x0: x0.clone(),
            d,
            points,
            stop_reason: StopReason::ExactFixedPoint,
            warnings,
        });
    }

    let (target, success) = match rule.kind {
        StopKind::APriori { eps } => (Some(a_priori_iterations(d, lambda, eps)), StopReason::APrioriReached),
        StopKind::FixedCount { count } => (Some(count), StopReason::CountReached),
        StopKind::APosteriori { .. } => (None, StopReason::APosterioriReached),
    };

    let stop_reason = loop {
        let n = points.len() - 1;
        if target == Some(n) {
            break success;
        }
        if n >= rule.max_iterations {
            break StopReason::MaxIterations;
        }
        let current = &points[n];
        let next = augmented_step(spec, current, d)?;
        let step = next.x.distance(&current.x)?;
        points.push(next);
        if let StopKind::APosteriori { eps } = rule.kind {
            if lambda / (1.0 - lambda) * step <= eps {
                break success;
            }
        }
    };

    Ok(IterationTrace {
        spec: spec.clone(),
        x0: x0.clone(),
        d,
        points,
        stop_reason,
        warnings,
    })
}
