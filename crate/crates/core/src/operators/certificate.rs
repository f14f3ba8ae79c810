//! Sampled checks of the defining inequalities (monotone, Lipschitz,
//! cocoercive, firmly nonexpansive) on seeded random pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::monotone::MaxMonotone;
use super::single::{LipschitzOp, PenaltyOp};
use crate::linalg::{dot, norm};

/// Pass threshold on the normalized worst-case violation.
pub const CERTIFICATE_TOL: f64 = 1e-9;

const RADII: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CertificateKind {
    Monotone,
    /// `‖Fx − Fy‖ ≤ L ‖x − y‖` with the given `L`.
    Lipschitz(f64),
    /// `⟨Fx − Fy, x − y⟩ ≥ μ ‖Fx − Fy‖²` with the given `μ`.
    Cocoercive(f64),
    /// `‖Fx − Fy‖² ≤ ⟨Fx − Fy, x − y⟩`, for `F` a resolvent.
    FirmlyNonexpansive,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub kind: CertificateKind,
    pub samples: usize,
    pub seed: u64,
    /// Worst violation, normalized by `1 + ‖x‖ + ‖y‖`; zero when none.
    pub worst_violation: f64,
    pub worst_sample: Option<usize>,
    pub passed: bool,
}

/// Draws `samples` pairs (Gaussian directions scaled to radii 0.1, 1, 10 in
/// turn) and records the worst violation of `kind` for the map `f`.
pub fn verify_certificate<F>(
    f: F,
    dim: usize,
    kind: CertificateKind,
    samples: usize,
    seed: u64,
) -> CertificateReport
where
    F: Fn(&[f64], &mut [f64]) -> bool,
{
    let samples = samples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    let mut fx = vec![0.0; dim];
    let mut fy = vec![0.0; dim];
    let mut worst = 0.0_f64;
    let mut worst_sample = None;
    let mut ok = true;

    for k in 0..samples {
        let r = RADII[k % RADII.len()];
        for i in 0..dim {
            let gx: f64 = StandardNormal.sample(&mut rng);
            let gy: f64 = StandardNormal.sample(&mut rng);
            x[i] = r * gx;
            y[i] = r * gy;
        }
        if !f(&x, &mut fx) || !f(&y, &mut fy) {
            ok = false;
            worst_sample = Some(k);
            worst = f64::INFINITY;
            break;
        }
        let df: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let raw = match kind {
            CertificateKind::Monotone => -dot(&df, &dx),
            CertificateKind::Lipschitz(l) => norm(&df) - l * norm(&dx),
            CertificateKind::Cocoercive(mu) => {
                let dd = dot(&df, &df);
                // an infinite modulus only admits the zero map
                let scaled = if dd == 0.0 { 0.0 } else { mu * dd };
                scaled - dot(&df, &dx)
            }
            CertificateKind::FirmlyNonexpansive => dot(&df, &df) - dot(&df, &dx),
        };
        let v = raw / (1.0 + norm(&x) + norm(&y));
        if v > worst || v.is_nan() {
            worst = if v.is_nan() { f64::INFINITY } else { v };
            worst_sample = Some(k);
        }
    }

    CertificateReport {
        kind,
        samples,
        seed,
        worst_violation: worst,
        worst_sample,
        passed: ok && worst <= CERTIFICATE_TOL,
    }
}

impl LipschitzOp {
    pub fn certify(&self, kind: CertificateKind, samples: usize, seed: u64) -> CertificateReport {
        verify_certificate(
            |x, out| {
                self.apply(x, out);
                true
            },
            self.dim(),
            kind,
            samples,
            seed,
        )
    }
}

impl PenaltyOp {
    pub fn certify(&self, kind: CertificateKind, samples: usize, seed: u64) -> CertificateReport {
        verify_certificate(
            |x, out| {
                self.apply(x, out);
                true
            },
            self.dim(),
            kind,
            samples,
            seed,
        )
    }
}

impl MaxMonotone {
    /// Firm nonexpansiveness of `Res_{λM}` on sampled pairs.
    pub fn certify_resolvent(&self, lambda: f64, dim: usize, samples: usize, seed: u64) -> CertificateReport {
        verify_certificate(
            |x, out| self.resolvent_into(lambda, x, out).is_ok(),
            dim,
            CertificateKind::FirmlyNonexpansive,
            samples,
            seed,
        )
    }
}
