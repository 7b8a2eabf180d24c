//! The set `Ω` of upper `L`-bounds and the certificate verifier.
//!
//! For a run from `x^0` with `d = ‖f(x^0) − x^0‖`,
//!
//! ```text
//! Ω = { (x, t) : t ≥ ‖x − x^0‖,  t ≥ (d + ‖f(x) − x‖) / (1 − λ) }.
//! ```
//!
//! Every element of `Ω` bounds the whole trace from above in `≤_L`, and the
//! limit `(x*, d / (1 − λ))` lies below every element of `Ω`. The verifier
//! checks these claims on a finished trace using only the raw points and the
//! map, never the engine's bookkeeping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cone_order::{euclidean_norm, order_residual, AugmentedPoint, TolerancePolicy, Vector};
use crate::contraction::{evaluate, ContractionSpec};
use crate::engine::{a_priori_bound, IterationTrace};
use crate::error::{Error, Result};

/// Number of sampled witnesses added to the canonical one by default.
pub const DEFAULT_OMEGA_SAMPLES: usize = 32;

/// Upper end of the uniform `t` offset added to sampled witnesses.
pub const SAMPLE_T_SLACK: f64 = 5.0;

/// The data defining `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSpec {
    pub spec: ContractionSpec,
    pub x0: Vector,
    pub d: f64,
}

impl OmegaSpec {
    /// Computes `d = ‖f(x0) − x0‖` the same way the engine does.
    pub fn new(spec: &ContractionSpec, x0: &Vector) -> Result<Self> {
        let d = evaluate(spec, x0)?.distance(x0)?;
        Ok(OmegaSpec {
            spec: spec.clone(),
            x0: x0.clone(),
            d,
        })
    }

    /// `Ω` for the problem `trace` was run on.
    pub fn for_trace(trace: &IterationTrace) -> Result<Self> {
        Self::new(&trace.spec, &trace.x0)
    }

    fn one_minus_lambda(&self) -> f64 {
        1.0 - self.spec.lambda()
    }

    /// `d / (1 − λ)`.
    pub fn t_star(&self) -> f64 {
        self.d / self.one_minus_lambda()
    }

    /// The two lower bounds on `t`: `‖x − x0‖` and `(d + ‖f(x) − x‖)/(1 − λ)`.
    pub fn bounds(&self, x: &Vector) -> Result<(f64, f64)> {
        let first = x.distance(&self.x0)?;
        let fx = evaluate(&self.spec, x)?;
        let second = (self.d + fx.distance(x)?) / self.one_minus_lambda();
        Ok((first, second))
    }

    /// `(x, max(bounds) + slack)`, an element of `Ω` for any `slack ≥ 0`.
    pub fn point_above(&self, x: Vector, slack: f64) -> Result<AugmentedPoint> {
        let (first, second) = self.bounds(&x)?;
        AugmentedPoint::new(x, first.max(second) + slack)
    }
}

pub fn omega_contains(om: &OmegaSpec, candidate: &AugmentedPoint, tol: &TolerancePolicy) -> Result<bool> {
    let (first, second) = om.bounds(&candidate.x)?;
    let t = candidate.t;
    Ok(tol.admits(t - first, t) && tol.admits(t - second, t))
}

/// `(x0, 2d / (1 − λ))`: zero for the first bound, equality in the second.
pub fn canonical_omega_witness(om: &OmegaSpec) -> AugmentedPoint {
    AugmentedPoint {
        x: om.x0.clone(),
        t: 2.0 * om.d / om.one_minus_lambda(),
    }
}

/// Seeded constructive samples of `Ω`.
///
/// `x = x0 + r u` with `u` a uniform direction and `r` uniform in
/// `[0, 10 max(1, d/(1 − λ))]`; `t` is the larger `Ω` bound at `x` plus a
/// uniform offset in `[0, 5]`.
pub fn sample_omega(om: &OmegaSpec, count: usize, seed: u64) -> Result<Vec<AugmentedPoint>> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let dim = om.x0.dim();
    let radius = 10.0 * om.t_star().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let len = euclidean_norm(&dir);
        if len == 0.0 {
            continue;
        }
        let r = rng.random_range(0.0..=radius);
        let s = rng.random_range(0.0..=SAMPLE_T_SLACK);
        let x: Vec<f64> = om
            .x0
            .as_slice()
            .iter()
            .zip(&dir)
            .map(|(c, u)| c + r * u / len)
            .collect();
        out.push(om.point_above(Vector::new(x)?, s)?);
    }
    Ok(out)
}

/// The canonical witness followed by [`DEFAULT_OMEGA_SAMPLES`] seeded samples.
pub fn default_witnesses(trace: &IterationTrace, seed: u64) -> Result<Vec<AugmentedPoint>> {
    witness_set(&OmegaSpec::for_trace(trace)?, DEFAULT_OMEGA_SAMPLES, seed)
}

pub fn witness_set(om: &OmegaSpec, samples: usize, seed: u64) -> Result<Vec<AugmentedPoint>> {
    let mut out = vec![canonical_omega_witness(om)];
    if samples > 0 {
        out.extend(sample_omega(om, samples, seed)?);
    }
    Ok(out)
}

/// Which check a failing certificate tripped first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    /// `(x^n, t^n) ≤_L (x^{n+1}, t^{n+1})`.
    Monotone,
    /// `(x^0, t^0) = (x0, 0)`, `t^{n+1} = λ t^n + d` and `x^{n+1} = f(x^n)`.
    Recurrence,
    /// `(x^n, t^n) ≤_L w` for the given witness.
    Bounded { witness: usize },
    /// `(x*, t*) ≤_L w`, with slack for the distance from `x^N` to `x*`.
    LowerBound,
    /// `‖f(x^N) − x^N‖ ≤ λ^N d`.
    FixedPointResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail {
        #[serde(flatten)]
        check: Check,
        /// Step `n` for per-step checks, witness index for
        /// [`Check::LowerBound`], 0 otherwise.
        index: usize,
        residual: f64,
    },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessCheck {
    pub point: AugmentedPoint,
    /// `t − t^n − ‖x − x^n‖` for each `n`.
    pub bound_residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCertificate {
    pub iterations: usize,
    pub lambda: f64,
    /// Recomputed from the first point, not copied from the trace.
    pub d: f64,
    pub final_point: AugmentedPoint,
    /// `λ^N d / (1 − λ)`.
    pub final_bound: f64,
    pub tolerance: TolerancePolicy,
    /// `t^{n+1} − t^n − ‖x^{n+1} − x^n‖`, one per step.
    pub monotone_residuals: Vec<f64>,
    /// Minus the recurrence defect at each point; entry 0 is
    /// `−(‖x^0 − x0‖ + |t^0|)`.
    pub recurrence_residuals: Vec<f64>,
    pub omega_witnesses: Vec<WitnessCheck>,
    /// `(x^N, d / (1 − λ))`.
    pub limit_point: AugmentedPoint,
    /// `t − t* − ‖x − x^N‖ + λ^N d / (1 − λ)` per witness.
    pub lower_bound_residuals: Vec<f64>,
    /// `‖f(x^N) − x^N‖`.
    pub fixed_point_residual: f64,
    /// `λ^N d`, the bound on the last step.
    pub fixed_point_limit: f64,
    pub verdict: Verdict,
}

impl ConvergenceCertificate {
    pub fn t_star(&self) -> f64 {
        self.limit_point.t
    }
}

struct FirstFailure(Option<Verdict>);

impl FirstFailure {
    fn record(&mut self, ok: bool, check: Check, index: usize, residual: f64) {
        if !ok && self.0.is_none() {
            self.0 = Some(Verdict::Fail {
                check,
                index,
                residual,
            });
        }
    }
}

/// Verifies the monotone-convergence certificate for `trace` against the
/// given `Ω` witnesses.
///
/// Only `trace.spec`, `trace.x0` (the problem's starting point) and the raw
/// points are used; `d` is recomputed as `‖f(x0) − x0‖`.
///
/// Checks run in a fixed order (monotone, recurrence, bounded, lower bound,
/// fixed-point residual) and the verdict reports the first failure in that
/// order, lowest index first.
pub fn verify_certificate(
    trace: &IterationTrace,
    witnesses: &[AugmentedPoint],
    tol: &TolerancePolicy,
) -> Result<ConvergenceCertificate> {
    let points = &trace.points;
    if points.is_empty() {
        return Err(Error::InvalidInput("trace is empty".into()));
    }
    let spec = &trace.spec;
    let m = spec.dimension();
    for p in points {
        p.x.check_dim(m)?;
    }
    let lambda = spec.lambda();
    let om = OmegaSpec::for_trace(trace)?;
    let d = om.d;
    for (index, w) in witnesses.iter().enumerate() {
        if w.dim() != m || !omega_contains(&om, w, tol)? {
            return Err(Error::InvalidWitness { index });
        }
    }

    let n_steps = points.len() - 1;
    let mut failures = [
        FirstFailure(None),
        FirstFailure(None),
        FirstFailure(None),
        FirstFailure(None),
        FirstFailure(None),
    ];

    let mut monotone_residuals = Vec::with_capacity(n_steps);
    for (n, pair) in points.windows(2).enumerate() {
        let r = order_residual(&pair[0], &pair[1])?;
        let scale = pair[0].t.abs().max(pair[1].t.abs());
        failures[0].record(tol.admits(r, scale), Check::Monotone, n, r);
        monotone_residuals.push(r);
    }

    let mut recurrence_residuals = Vec::with_capacity(points.len());
    trace.x0.check_dim(m)?;
    let r0 = -(points[0].x.distance(&trace.x0)? + points[0].t.abs());
    let scale0 = points[0].t.abs().max(trace.x0.norm());
    failures[1].record(tol.admits(r0, scale0), Check::Recurrence, 0, r0);
    recurrence_residuals.push(r0);
    for (n, pair) in points.windows(2).enumerate() {
        let fx = evaluate(spec, &pair[0].x)?;
        let x_defect = pair[1].x.distance(&fx)?;
        let t_defect = (pair[1].t - (lambda * pair[0].t + d)).abs();
        let r = -(x_defect + t_defect);
        let scale = pair[1].t.abs().max(pair[1].x.norm());
        failures[1].record(tol.admits(r, scale), Check::Recurrence, n + 1, r);
        recurrence_residuals.push(r);
    }

    let mut omega_witnesses = Vec::with_capacity(witnesses.len());
    for (wi, w) in witnesses.iter().enumerate() {
        let mut bound_residuals = Vec::with_capacity(points.len());
        for (n, p) in points.iter().enumerate() {
            let r = order_residual(p, w)?;
            let scale = w.t.abs().max(p.t.abs());
            failures[2].record(tol.admits(r, scale), Check::Bounded { witness: wi }, n, r);
            bound_residuals.push(r);
        }
        omega_witnesses.push(WitnessCheck {
            point: w.clone(),
            bound_residuals,
        });
    }

    let final_point = points[n_steps].clone();
    let final_bound = a_priori_bound(d, lambda, n_steps);
    let limit_point = AugmentedPoint::new(final_point.x.clone(), om.t_star())?;
    let mut lower_bound_residuals = Vec::with_capacity(witnesses.len());
    for (wi, w) in witnesses.iter().enumerate() {
        let r = order_residual(&limit_point, w)? + final_bound;
        let scale = w.t.abs().max(limit_point.t.abs());
        failures[3].record(tol.admits(r, scale), Check::LowerBound, wi, r);
        lower_bound_residuals.push(r);
    }

    let fixed_point_residual = evaluate(spec, &final_point.x)?.distance(&final_point.x)?;
    let fixed_point_limit = lambda.powf(n_steps as f64) * d;
    let excess = fixed_point_limit - fixed_point_residual;
    failures[4].record(
        tol.admits(excess, final_point.x.norm()),
        Check::FixedPointResidual,
        0,
        excess,
    );

    let verdict = failures
        .iter()
        .find_map(|f| f.0)
        .unwrap_or(Verdict::Pass);

    Ok(ConvergenceCertificate {
        iterations: n_steps,
        lambda,
        d,
        final_point,
        final_bound,
        tolerance: *tol,
        monotone_residuals,
        recurrence_residuals,
        omega_witnesses,
        limit_point,
        lower_bound_residuals,
        fixed_point_residual,
        fixed_point_limit,
        verdict,
    })
}
