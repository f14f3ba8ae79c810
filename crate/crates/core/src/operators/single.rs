//! Single-valued operators: the Lipschitz part `D` and the penalty operator `B`.

use std::fmt;
use std::sync::Arc;

use super::monotone::AffineMap;
use super::projections::{check_box, clamp_into};
use crate::error::{Error, Result};
use crate::linalg;

/// Shared, thread-safe evaluation `x ↦ F(x)` writing into an output buffer.
pub type VectorMap = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Shared, thread-safe scalar potential.
pub type ScalarMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Monotone operator that is `1/η`-Lipschitz, optionally `η`-cocoercive.
#[derive(Clone)]
pub struct LipschitzOp {
    dim: usize,
    map: VectorMap,
    eta: f64,
    cocoercive: bool,
    affine: Option<AffineMap>,
}

impl fmt::Debug for LipschitzOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzOp")
            .field("dim", &self.dim)
            .field("eta", &self.eta)
            .field("cocoercive", &self.cocoercive)
            .field("affine", &self.affine.is_some())
            .finish()
    }
}

impl LipschitzOp {
    pub fn new(dim: usize, eta: f64, cocoercive: bool, map: VectorMap) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("operator dimension must be at least 1"));
        }
        if !(eta > 0.0) {
            return Err(Error::param(format!("eta must be positive, got {eta}")));
        }
        Ok(Self {
            dim,
            map,
            eta,
            cocoercive,
            affine: None,
        })
    }

    /// `x ↦ Mx + q`. The Lipschitz constant is `‖M‖`; the operator is flagged
    /// cocoercive (with the same modulus) only when `M` is symmetric PSD.
    pub fn affine(map: AffineMap) -> Result<Self> {
        let dim = map.dim();
        if map.min_symmetric_eigenvalue() < -1e-12 * (1.0 + map.matrix.amax()) {
            return Err(Error::param("affine operator is not monotone"));
        }
        let lip = map.operator_norm();
        let eta = if lip > 0.0 { 1.0 / lip } else { f64::INFINITY };
        let cocoercive = map.is_symmetric();
        let m = map.clone();
        let mut op = Self::new(dim, eta, cocoercive, Arc::new(move |x, out| m.apply(x, out)))?;
        op.affine = Some(map);
        Ok(op)
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::affine(AffineMap::new(
            nalgebra::DMatrix::zeros(dim, dim),
            nalgebra::DVector::zeros(dim),
        )?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The modulus `η` (so `1/η` is the Lipschitz constant).
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn lipschitz(&self) -> f64 {
        1.0 / self.eta
    }

    pub fn is_cocoercive(&self) -> bool {
        self.cocoercive
    }

    pub fn as_affine(&self) -> Option<&AffineMap> {
        self.affine.as_ref()
    }

    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        (self.map)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply(x, &mut out);
        out
    }
}

/// Closed-form description of `C = zer(B)`.
#[derive(Clone, Debug, PartialEq)]
pub enum ZeroSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{ x : ⟨normal, x⟩ ≤ offset }`
    HalfSpace { normal: Vec<f64>, offset: f64 },
}

impl ZeroSet {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_box(&lo, &hi)?;
        Ok(ZeroSet::Box { lo, hi })
    }

    pub fn half_space(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if linalg::norm(&normal) == 0.0 {
            return Err(Error::param("half-space normal must be nonzero"));
        }
        Ok(ZeroSet::HalfSpace { normal, offset })
    }

    pub fn dim(&self) -> usize {
        match self {
            ZeroSet::Box { lo, .. } => lo.len(),
            ZeroSet::HalfSpace { normal, .. } => normal.len(),
        }
    }

    pub fn project_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ZeroSet::Box { lo, hi } => clamp_into(lo, hi, x, out),
            ZeroSet::HalfSpace { normal, offset } => {
                out.copy_from_slice(x);
                let excess = linalg::dot(normal, x) - offset;
                if excess > 0.0 {
                    let nn = linalg::dot(normal, normal);
                    linalg::axpy(-excess / nn, normal, out);
                }
            }
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.project_into(x, &mut out);
        out
    }

    /// Intersection of two sets when it stays in the same family.
    pub fn intersect(&self, other: &ZeroSet) -> Option<ZeroSet> {
        match (self, other) {
            (ZeroSet::Box { lo: l1, hi: h1 }, ZeroSet::Box { lo: l2, hi: h2 }) => {
                let lo: Vec<f64> = l1.iter().zip(l2).map(|(a, b)| a.max(*b)).collect();
                let hi: Vec<f64> = h1.iter().zip(h2).map(|(a, b)| a.min(*b)).collect();
                ZeroSet::boxed(lo, hi).ok()
            }
            _ if self == other => Some(self.clone()),
            _ => None,
        }
    }
}

/// `μ`-cocoercive penalty operator `B` with `C = zer(B)`.
#[derive(Clone)]
pub struct PenaltyOp {
    dim: usize,
    map: VectorMap,
    mu: f64,
    zero_set: Option<ZeroSet>,
}

impl fmt::Debug for PenaltyOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PenaltyOp")
            .field("dim", &self.dim)
            .field("mu", &self.mu)
            .field("zero_set", &self.zero_set)
            .finish()
    }
}

impl PenaltyOp {
    pub fn new(dim: usize, mu: f64, map: VectorMap, zero_set: Option<ZeroSet>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("operator dimension must be at least 1"));
        }
        if !(mu > 0.0) {
            return Err(Error::param(format!("mu must be positive, got {mu}")));
        }
        if let Some(z) = &zero_set {
            if z.dim() != dim {
                return Err(Error::param("zero-set dimension does not match the operator"));
            }
        }
        Ok(Self {
            dim,
            map,
            mu,
            zero_set,
        })
    }

    /// `B = Id − Π_C`, the gradient of `½ dist(·, C)²`; 1-cocoercive.
    pub fn distance_gradient(set: ZeroSet) -> Result<Self> {
        let dim = set.dim();
        let s = set.clone();
        Self::new(
            dim,
            1.0,
            Arc::new(move |x, out| {
                s.project_into(x, out);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = xi - *o;
                }
            }),
            Some(set),
        )
    }

    pub fn zero(dim: usize) -> Result<Self> {
        let inf = vec![f64::INFINITY; dim];
        let ninf = vec![f64::NEG_INFINITY; dim];
        Self::new(
            dim,
            1.0,
            Arc::new(|_, out| out.fill(0.0)),
            Some(ZeroSet::boxed(ninf, inf)?),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn zero_set(&self) -> Option<&ZeroSet> {
        self.zero_set.as_ref()
    }

    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        (self.map)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply(x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_moduli() {
        let skew = LipschitzOp::affine(
            AffineMap::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]], &[0.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert!(!skew.is_cocoercive());
        assert!((skew.lipschitz() - 1.0).abs() < 1e-12);
        let grad = LipschitzOp::affine(AffineMap::from_rows(&[&[1.0]], &[-2.0]).unwrap()).unwrap();
        assert!(grad.is_cocoercive());
        assert_eq!(grad.eval(&[5.0]), vec![3.0]);
    }

    #[test]
    fn projector_points_are_zeros_of_penalty() {
        let sets = vec![
            ZeroSet::boxed(vec![-1.0, f64::NEG_INFINITY], vec![1.0, 0.0]).unwrap(),
            ZeroSet::half_space(vec![1.0, 2.0], 0.5).unwrap(),
        ];
        for set in sets {
            let b = PenaltyOp::distance_gradient(set.clone()).unwrap();
            for x in [[3.0, 4.0], [-7.0, 0.1], [0.2, -0.3]] {
                let p = set.project(&x);
                assert!(linalg::norm(&b.eval(&p)) <= 1e-12);
            }
        }
    }

    #[test]
    fn half_space_projection() {
        let h = ZeroSet::half_space(vec![0.0, 2.0], 2.0).unwrap();
        assert_eq!(h.project(&[5.0, 3.0]), vec![5.0, 1.0]);
        assert_eq!(h.project(&[5.0, -3.0]), vec![5.0, -3.0]);
    }
}
