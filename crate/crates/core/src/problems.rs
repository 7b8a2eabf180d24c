//! Built-in problem instances with reference fixed points computed without
//! the Picard iteration (direct elimination, bisection).

use std::f64::consts::FRAC_PI_2;

use crate::cone_order::Vector;
use crate::contraction::{evaluate, ContractionMap, ContractionSpec, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub name: &'static str,
    pub spec: ContractionSpec,
    pub x0: Vector,
    /// Known fixed point, with a note on how it was obtained.
    pub reference: Option<(Vector, &'static str)>,
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "AFFINE_1D",
    "CONSTANT",
    "ROTATION_2D",
    "KEPLER",
    "FIXED_START",
    "NEAR_ONE",
];

fn vector(c: &[f64]) -> Vector {
    Vector::from_slice(c).expect("builtin coordinates are finite")
}

fn affine(lambda: f64, a: Vec<Vec<f64>>, b: &[f64]) -> ContractionSpec {
    let map = ContractionMap::Affine {
        a: Matrix::from_rows(a).expect("builtin matrix is square"),
        b: vector(b),
    };
    ContractionSpec::new(lambda, map).expect("builtin spec is well formed")
}

fn build(name: &'static str) -> Option<ProblemInstance> {
    let (spec, x0) = match name {
        // f(x) = 0.5 x + 1, x* = 2
        "AFFINE_1D" => (affine(0.5, vec![vec![0.5]], &[1.0]), vector(&[0.0])),
        "CONSTANT" => (
            ContractionSpec::new(0.5, ContractionMap::Constant { c: vector(&[3.0, 7.0]) })
                .expect("builtin spec is well formed"),
            vector(&[0.0, 0.0]),
        ),
        // f(x) = 0.5 R(90°) x + (1, 0), x* = (0.8, 0.4)
        "ROTATION_2D" => (
            ContractionSpec::new(
                0.5,
                ContractionMap::ScaledRotation {
                    theta: FRAC_PI_2,
                    scale: 0.5,
                    b: vector(&[1.0, 0.0]),
                },
            )
            .expect("builtin spec is well formed"),
            vector(&[0.0, 0.0]),
        ),
        // x = 1 + 0.5 sin x, x* ≈ 1.4987
        "KEPLER" => (
            ContractionSpec::new(
                0.5,
                ContractionMap::Kepler {
                    e: 0.5,
                    mean_anomaly: 1.0,
                },
            )
            .expect("builtin spec is well formed"),
            vector(&[0.0]),
        ),
        "FIXED_START" => (affine(0.5, vec![vec![0.5]], &[1.0]), vector(&[2.0])),
        // f(x) = 0.999 x + 1, x* = 1000
        "NEAR_ONE" => (affine(0.999, vec![vec![0.999]], &[1.0]), vector(&[0.0])),
        _ => return None,
    };
    let mut instance = ProblemInstance {
        name,
        spec,
        x0,
        reference: None,
    };
    let note = match instance.spec.map() {
        ContractionMap::Constant { .. } => "the constant itself",
        ContractionMap::Affine { .. } | ContractionMap::ScaledRotation { .. } => {
            "direct elimination of (I - A) x = b"
        }
        ContractionMap::Kepler { .. } => "bisection of x - M - e sin x",
    };
    let x_star = reference_fixed_point(&instance).expect("builtin has a computable fixed point");
    instance.reference = Some((x_star, note));
    Some(instance)
}

pub fn builtin_catalog() -> Vec<ProblemInstance> {
    BUILTIN_NAMES
        .iter()
        .map(|name| build(name).expect("every listed name builds"))
        .collect()
}

/// Looks up a built-in instance by name (case-insensitive).
pub fn builtin(name: &str) -> Option<ProblemInstance> {
    let upper = name.to_ascii_uppercase();
    BUILTIN_NAMES
        .iter()
        .find(|n| **n == upper)
        .and_then(|n| build(n))
}

/// The fixed point of `p`, computed independently of the iteration.
pub fn reference_fixed_point(p: &ProblemInstance) -> Result<Vector> {
    if let Some((x, _)) = &p.reference {
        return Ok(x.clone());
    }
    match p.spec.map() {
        ContractionMap::Constant { c } => Ok(c.clone()),
        ContractionMap::Affine { a, b } => {
            let n = a.dim();
            let rows = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } - a.get(i, j)).collect())
                .collect();
            solve_linear(rows, b.as_slice().to_vec())
        }
        ContractionMap::ScaledRotation { theta, scale, b } => {
            let (s, c) = theta.sin_cos();
            let rows = vec![
                vec![1.0 - scale * c, scale * s],
                vec![-scale * s, 1.0 - scale * c],
            ];
            solve_linear(rows, b.as_slice().to_vec())
        }
        ContractionMap::Kepler { e, mean_anomaly } => {
            let g = |x: f64| x - mean_anomaly - e * x.sin();
            bisect(g, mean_anomaly - e.abs(), mean_anomaly + e.abs(), 1e-12)
                .map(|x| Vector::new(vec![x]))
                .ok_or_else(|| Error::UnsupportedInstance(format!("{}: bisection failed", p.name)))?
        }
    }
}

/// Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vector> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col] == 0.0 {
            return Err(Error::UnsupportedInstance("I - A is singular".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Vector::new(x)
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let (mut glo, ghi) = (g(lo), g(hi));
    if glo == 0.0 {
        return Some(lo);
    }
    if ghi == 0.0 {
        return Some(hi);
    }
    if glo.signum() == ghi.signum() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Some(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `‖f(x) − x‖`.
pub fn fixed_point_residual(spec: &ContractionSpec, x: &Vector) -> Result<f64> {
    evaluate(spec, x)?.distance(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::validate_contraction;
    use crate::engine::{run, StoppingRule};

    fn named(name: &str) -> ProblemInstance {
        builtin(name).unwrap()
    }

    #[test]
    fn catalog_has_every_builtin() {
        let catalog = builtin_catalog();
        let names: Vec<_> = catalog.iter().map(|p| p.name).collect();
        assert_eq!(names, BUILTIN_NAMES);
        for p in &catalog {
            validate_contraction(&p.spec).unwrap();
            assert!(p.reference.is_some());
        }
        assert_eq!(named("near_one").spec.lambda(), 0.999);
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn references_are_fixed_points() {
        for p in builtin_catalog() {
            let x = reference_fixed_point(&p).unwrap();
            let r = fixed_point_residual(&p.spec, &x).unwrap();
            assert!(r <= 1e-12 * (1.0 + x.norm()), "{}: residual {r}", p.name);
        }
    }

    #[test]
    fn reference_examples() {
        assert_eq!(reference_fixed_point(&named("CONSTANT")).unwrap().as_slice(), &[3.0, 7.0]);
        assert_eq!(reference_fixed_point(&named("AFFINE_1D")).unwrap().as_slice(), &[2.0]);
        let fixed = named("FIXED_START");
        assert_eq!(reference_fixed_point(&fixed).unwrap(), fixed.x0);
        let rot = reference_fixed_point(&named("ROTATION_2D")).unwrap();
        assert!(rot.distance(&Vector::from_slice(&[0.8, 0.4]).unwrap()).unwrap() < 1e-15);
        let kepler = reference_fixed_point(&named("KEPLER")).unwrap().as_slice()[0];
        assert!((kepler - 1.4987).abs() < 1e-4, "{kepler}");
        assert!((kepler - 1.0 - 0.5 * kepler.sin()).abs() < 1e-12);
    }

    #[test]
    fn reference_without_stored_value_is_recomputed() {
        let mut p = named("KEPLER");
        let stored = p.reference.take().unwrap().0;
        assert_eq!(reference_fixed_point(&p).unwrap(), stored);
    }

    #[test]
    fn singular_system_is_unsupported() {
        assert!(matches!(
            solve_linear(vec![vec![0.0]], vec![1.0]),
            Err(Error::UnsupportedInstance(_))
        ));
    }

    #[test]
    fn a_priori_runs_land_within_eps() {
        for eps in [1e-4, 1e-8] {
            for p in builtin_catalog() {
                let x_star = reference_fixed_point(&p).unwrap();
                let trace = run(&p.spec, &p.x0, &StoppingRule::a_priori(eps)).unwrap();
                assert!(trace.stop_reason.is_success());
                let err = trace.final_point().x.distance(&x_star).unwrap();
                assert!(err <= eps, "{} eps={eps}: {err}", p.name);
            }
        }
    }
}
