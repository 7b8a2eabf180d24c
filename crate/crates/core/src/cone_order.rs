//! Lorentz-cone geometry on `R^m × R` and the partial order it induces.
//!
//! `(x, t) ∈ L` iff `t ≥ ‖x‖`, and `a ≤_L b` iff `b − a ∈ L`. Floating-point
//! membership is decided with a [`TolerancePolicy`]; the strict policy gives
//! the exact comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute and relative slack used by verification.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// A point of `R^m`, `m ≥ 1`, with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("vector must have at least one coordinate".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Vector(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        euclidean_norm(&self.0)
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// `self − other`.
    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        other.check_dim(self.dim())?;
        Vector::new(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + other`.
    pub fn add(&self, other: &Vector) -> Result<Vector> {
        other.check_dim(self.dim())?;
        Vector::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> Result<Vector> {
        Vector::new(self.0.iter().map(|a| factor * a).collect())
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &Vector) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(distance_unchecked(&self.0, &other.0))
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An element `(x, t)` of the ordered space `R^m × R` (dimension `m + 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedPoint {
    pub x: Vector,
    pub t: f64,
}

impl AugmentedPoint {
    pub fn new(x: Vector, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("t is not finite ({t})")));
        }
        Ok(AugmentedPoint { x, t })
    }

    /// Dimension of the underlying `x` space.
    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Dimension `p = m + 1` of the ordered space.
    pub fn ambient_dim(&self) -> usize {
        self.x.dim() + 1
    }

    /// `self − other`, componentwise in `R^m × R`.
    pub fn sub(&self, other: &AugmentedPoint) -> Result<AugmentedPoint> {
        AugmentedPoint::new(self.x.sub(&other.x)?, self.t - other.t)
    }

    pub fn add(&self, other: &AugmentedPoint) -> Result<AugmentedPoint> {
        AugmentedPoint::new(self.x.add(&other.x)?, self.t + other.t)
    }

    pub fn scale(&self, factor: f64) -> Result<AugmentedPoint> {
        AugmentedPoint::new(self.x.scale(factor)?, factor * self.t)
    }
}

/// Slack allowed when deciding cone membership in floating point.
///
/// A residual `r` is accepted when `r ≥ −(atol + rtol·max(1, scale))`. With
/// `strict` set the slack is zero regardless of `atol` and `rtol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub atol: f64,
    pub rtol: f64,
    pub strict: bool,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            atol: DEFAULT_TOLERANCE,
            rtol: DEFAULT_TOLERANCE,
            strict: false,
        }
    }
}

impl TolerancePolicy {
    pub fn new(atol: f64, rtol: f64) -> Result<Self> {
        for (name, v) in [("atol", atol), ("rtol", rtol)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(TolerancePolicy {
            atol,
            rtol,
            strict: false,
        })
    }

    /// `atol = rtol = value`.
    pub fn uniform(value: f64) -> Result<Self> {
        Self::new(value, value)
    }

    pub fn strict() -> Self {
        TolerancePolicy {
            atol: 0.0,
            rtol: 0.0,
            strict: true,
        }
    }

    /// The admissible negative excursion for a quantity of magnitude `scale`.
    pub fn slack(&self, scale: f64) -> f64 {
        if self.strict {
            0.0
        } else {
            self.atol + self.rtol * scale.abs().max(1.0)
        }
    }

    /// Whether `residual ≥ −slack(scale)`.
    pub fn admits(&self, residual: f64, scale: f64) -> bool {
        residual >= -self.slack(scale)
    }
}

/// `t − ‖x‖`; nonnegative exactly on the cone.
pub fn lorentz_residual(point: &AugmentedPoint) -> f64 {
    point.t - point.x.norm()
}

/// Membership of `point` in the Lorentz cone.
pub fn lorentz_contains(point: &AugmentedPoint, tol: &TolerancePolicy) -> Result<bool> {
    // AugmentedPoint is finite by construction; public fields can still be
    // overwritten, so re-check here.
    ensure_finite(point)?;
    if tol.strict {
        return Ok(point.t >= point.x.norm());
    }
    Ok(tol.admits(lorentz_residual(point), point.t))
}

/// `a ≤_L b`, i.e. `b − a ∈ L`.
pub fn leq_lorentz(a: &AugmentedPoint, b: &AugmentedPoint, tol: &TolerancePolicy) -> Result<bool> {
    lorentz_contains(&b.sub(a)?, tol)
}

/// `(b.t − a.t) − ‖b.x − a.x‖`, the margin by which `a ≤_L b` holds.
pub fn order_residual(a: &AugmentedPoint, b: &AugmentedPoint) -> Result<f64> {
    Ok((b.t - a.t) - b.x.distance(&a.x)?)
}

fn ensure_finite(point: &AugmentedPoint) -> Result<()> {
    if !point.t.is_finite() || point.x.as_slice().iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("augmented point has non-finite entries".into()));
    }
    Ok(())
}

// Plain sum of squares is exact on small integers, which keeps boundary
// cases like ‖(3, 4)‖ = 5 exact; rescaling kicks in only where squares could
// overflow or underflow.
const SAFE_MAX: f64 = 1e150;
const SAFE_MIN: f64 = 1e-150;

/// Euclidean norm of a coordinate slice.
pub fn euclidean_norm(coords: &[f64]) -> f64 {
    let amax = coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if amax == 0.0 || !amax.is_finite() {
        return amax;
    }
    if amax < SAFE_MAX && amax > SAFE_MIN {
        return coords.iter().map(|c| c * c).sum::<f64>().sqrt();
    }
    let ssq: f64 = coords
        .iter()
        .map(|c| {
            let r = c / amax;
            r * r
        })
        .sum();
    amax * ssq.sqrt()
}

pub(crate) fn distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    euclidean_norm(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: &[f64], t: f64) -> AugmentedPoint {
        AugmentedPoint::new(Vector::from_slice(x).unwrap(), t).unwrap()
    }

    #[test]
    fn contains_examples() {
        let tol = TolerancePolicy::default();
        assert!(lorentz_contains(&pt(&[3.0, 4.0], 5.0), &tol).unwrap());
        assert!(lorentz_contains(&pt(&[3.0, 4.0], 5.0), &TolerancePolicy::strict()).unwrap());
        assert!(!lorentz_contains(&pt(&[3.0, 4.0], 4.9), &TolerancePolicy::strict()).unwrap());
        assert!(lorentz_contains(&pt(&[0.0, 0.0], 0.0), &tol).unwrap());
    }

    #[test]
    fn leq_examples() {
        let tol = TolerancePolicy::default();
        assert!(leq_lorentz(&pt(&[0.0], 0.0), &pt(&[1.0], 1.0), &tol).unwrap());
        assert!(!leq_lorentz(&pt(&[0.0], 0.0), &pt(&[1.0], 0.5), &tol).unwrap());
        let a = pt(&[2.0, 3.0], 7.0);
        assert!(leq_lorentz(&a, &a, &TolerancePolicy::strict()).unwrap());
    }

    #[test]
    fn tolerance_accepts_last_bit_rounding() {
        let p = pt(&[3.0, 4.0], 5.0 - 1e-15);
        assert!(!lorentz_contains(&p, &TolerancePolicy::strict()).unwrap());
        assert!(lorentz_contains(&p, &TolerancePolicy::default()).unwrap());
        assert!(!lorentz_contains(&pt(&[3.0, 4.0], 4.9), &TolerancePolicy::default()).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(AugmentedPoint::new(Vector::from_slice(&[1.0]).unwrap(), f64::INFINITY).is_err());
        let mut p = pt(&[1.0], 1.0);
        p.t = f64::NAN;
        assert!(matches!(
            lorentz_contains(&p, &TolerancePolicy::default()),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            leq_lorentz(&pt(&[0.0], 0.0), &pt(&[0.0, 0.0], 1.0), &TolerancePolicy::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(TolerancePolicy::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn strict_ignores_atol_rtol() {
        let strict = TolerancePolicy {
            atol: 1.0,
            rtol: 1.0,
            strict: true,
        };
        assert_eq!(strict.slack(100.0), 0.0);
        assert!(!lorentz_contains(&pt(&[1.0], 0.5), &strict).unwrap());
    }

    #[test]
    fn norm_handles_extreme_magnitudes() {
        assert_eq!(euclidean_norm(&[3.0, 4.0]), 5.0);
        assert_eq!(euclidean_norm(&[0.0, 0.0]), 0.0);
        let big = euclidean_norm(&[3e200, 4e200]);
        assert!((big / 5e200 - 1.0).abs() < 1e-15);
        let small = euclidean_norm(&[3e-200, 4e-200]);
        assert!((small / 5e-200 - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn strict_implies_tolerant(
            x in prop::collection::vec(-1e3..1e3f64, 1..6),
            t in -1e3..1e3f64,
            atol in 0.0..1e-3f64,
            rtol in 0.0..1e-3f64,
        ) {
            let p = pt(&x, t);
            let tol = TolerancePolicy::new(atol, rtol).unwrap();
            if lorentz_contains(&p, &TolerancePolicy::strict()).unwrap() {
                prop_assert!(lorentz_contains(&p, &tol).unwrap());
            }
        }

        #[test]
        fn order_matches_difference_membership(
            a in prop::collection::vec(-50i32..50, 3),
            b in prop::collection::vec(-50i32..50, 3),
            ta in -100i32..100,
            tb in -100i32..100,
        ) {
            let a = pt(&a.iter().map(|&v| v as f64).collect::<Vec<_>>(), ta as f64);
            let b = pt(&b.iter().map(|&v| v as f64).collect::<Vec<_>>(), tb as f64);
            let strict = TolerancePolicy::strict();
            let by_order = leq_lorentz(&a, &b, &strict).unwrap();
            prop_assert_eq!(by_order, order_residual(&a, &b).unwrap() >= 0.0);
        }
    }
}
