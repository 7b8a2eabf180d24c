//! Fixed-point iteration for declared λ-contractions on `R^m`, augmented with a
//! scalar majorant so that the pair sequence `(x^n, t^n)` is monotone with
//! respect to the Lorentz cone
//!
//! ```text
//! L = { (x, t) ∈ R^m × R : t ≥ ‖x‖ }.
//! ```
//!
//! The Picard iterate `x^{n+1} = f(x^n)` is run together with
//! `t^{n+1} = λ t^n + ‖x^1 − x^0‖`, `t^0 = 0`. The resulting sequence is
//! `L`-increasing, bounded above by every element of
//!
//! ```text
//! Ω = { (x, t) : t ≥ ‖x − x^0‖, t ≥ (‖x^1 − x^0‖ + ‖f(x) − x‖) / (1 − λ) },
//! ```
//!
//! and its limit `(x*, d / (1 − λ))` is a lower `L`-bound of `Ω`. The
//! [`certificate`] module checks all of this on a finished run, recomputing
//! every quantity from the raw iterates.
//!
//! # Layout
//!
//! * [`cone_order`]: vectors, augmented points, the Lorentz cone and its order.
//! * [`contraction`]: closed families of contractions with certifiable factors.
//! * [`engine`]: the augmented iteration and its stopping rules.
//! * [`certificate`]: the set `Ω`, witness sampling and the verifier.
//! * [`problems`]: built-in instances with independently computed fixed points.
//! * [`format`]: problem files, trace CSV and certificate documents.
//!
//! # Example
//!
//! ```
//! use cone_fixpoint::{problems, engine, certificate, StoppingRule, TolerancePolicy};
//!
//! let problem = problems::builtin("AFFINE_1D").unwrap();
//! let trace = engine::run(&problem.spec, &problem.x0, &StoppingRule::a_priori(1e-8)).unwrap();
//! let witnesses = certificate::default_witnesses(&trace, 0).unwrap();
//! let cert = certificate::verify_certificate(&trace, &witnesses, &TolerancePolicy::default()).unwrap();
//! assert!(cert.verdict.is_pass());
//! ```

pub mod certificate;
pub mod cone_order;
pub mod contraction;
pub mod engine;
mod error;
pub mod format;
pub mod problems;

pub use certificate::{ConvergenceCertificate, OmegaSpec, Verdict};
pub use cone_order::{AugmentedPoint, TolerancePolicy, Vector};
pub use contraction::{ContractionMap, ContractionSpec, Matrix, ValidationReport};
pub use engine::{IterationTrace, StopReason, StoppingRule};
pub use error::{Error, Result};
pub use problems::ProblemInstance;
