//! Operator classes of the inclusion and their resolvent calculus.

mod certificate;
mod monotone;
mod problem;
mod projections;
mod single;

pub use certificate::{verify_certificate, CertificateKind, CertificateReport, CERTIFICATE_TOL};
pub use monotone::{AffineMap, Block, MaxMonotone, ResolventOracle, MIN_LAMBDA};
pub use problem::ProblemInstance;
pub use projections::{project_box, project_pair_ball};
pub use single::{LipschitzOp, PenaltyOp, ScalarMap, VectorMap, ZeroSet};

use crate::error::Result;

/// `Res_{λ·op}(x)`.
pub fn resolvent_eval(op: &MaxMonotone, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    op.resolvent(lambda, x)
}

/// Yosida approximation `(x − Res_{λ·op}(x)) / λ`.
pub fn yosida_eval(op: &MaxMonotone, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    op.yosida(lambda, x)
}
