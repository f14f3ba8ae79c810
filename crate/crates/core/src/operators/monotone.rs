//! Maximally monotone operators represented through their resolvents.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::projections::{check_box, clamp_into, pair_ball_in_place};
use crate::error::{Error, Result};

/// Smallest positive resolvent parameter accepted; `λ = 0` is the identity limit.
pub const MIN_LAMBDA: f64 = 1e-300;

/// User-supplied resolvent, for operators without a closed form.
pub trait ResolventOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> Option<usize> {
        None
    }

    /// Writes `(Id + λ M)^{-1}(x)` into `out`. Iterative oracles report
    /// non-convergence through [`Error::Convergence`].
    fn resolvent(&self, lambda: f64, x: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Affine map `x ↦ M x + q`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != shift.len() {
            return Err(Error::param(format!(
                "affine map needs a square matrix matching the shift: {}x{} vs {}",
                matrix.nrows(),
                matrix.ncols(),
                shift.len()
            )));
        }
        Ok(Self { matrix, shift })
    }

    pub fn from_rows(rows: &[&[f64]], shift: &[f64]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if flat.len() != n * n {
            return Err(Error::param("affine map rows must form a square matrix"));
        }
        Self::new(
            DMatrix::from_row_slice(n, n, &flat),
            DVector::from_column_slice(shift),
        )
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.shift[i];
            for j in 0..n {
                acc += self.matrix[(i, j)] * x[j];
            }
            out[i] = acc;
        }
    }

    /// Smallest eigenvalue of the symmetric part `(M + Mᵀ)/2`.
    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        sym.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Spectral norm of `M`.
    pub fn operator_norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.matrix.clone().svd(false, false).singular_values.max()
    }

    pub fn is_symmetric(&self) -> bool {
        (&self.matrix - self.matrix.transpose()).amax() <= 1e-14 * (1.0 + self.matrix.amax())
    }
}

/// One factor of a product operator acting on a contiguous block of coordinates.
#[derive(Clone, Debug)]
pub struct Block {
    pub dim: usize,
    pub op: MaxMonotone,
}

/// A maximally monotone operator, described by a closed-form resolvent.
#[derive(Clone, Debug)]
pub enum MaxMonotone {
    /// The zero operator; its resolvent is the identity.
    Zero,
    /// Normal cone of the box `[lo, hi]` (bounds may be infinite).
    BoxNormalCone { lo: Vec<f64>, hi: Vec<f64> },
    /// Subdifferential of `weight · ‖x‖₁`.
    L1 { weight: f64 },
    /// `alpha · inner` with `alpha > 0`.
    Scaled { alpha: f64, inner: Box<MaxMonotone> },
    /// Block-diagonal product `op₁ × op₂ × …`.
    Product(Vec<Block>),
    /// Set-valued inverse, evaluated with the Moreau identity.
    Inverse(Box<MaxMonotone>),
    /// Monotone affine operator (`M + Mᵀ ⪰ 0`).
    Affine(AffineMap),
    /// Normal cone of the pixelwise unit ball of a pair field `(u, v)`,
    /// laid out as `[u₁..uₙ, v₁..vₙ]`.
    PairBallNormalCone,
    Custom(Arc<dyn ResolventOracle>),
}

impl MaxMonotone {
    pub fn normal_cone_of_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_box(&lo, &hi)?;
        Ok(MaxMonotone::BoxNormalCone { lo, hi })
    }

    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::param(format!("l1 weight must be >= 0, got {weight}")));
        }
        Ok(MaxMonotone::L1 { weight })
    }

    pub fn scaled(alpha: f64, inner: MaxMonotone) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::param(format!("scale must be positive, got {alpha}")));
        }
        Ok(MaxMonotone::Scaled {
            alpha,
            inner: Box::new(inner),
        })
    }

    pub fn product(blocks: Vec<(usize, MaxMonotone)>) -> Result<Self> {
        let blocks: Vec<Block> = blocks
            .into_iter()
            .map(|(dim, op)| Block { dim, op })
            .collect();
        for (k, b) in blocks.iter().enumerate() {
            if let Some(d) = b.op.dim() {
                if d != b.dim {
                    return Err(Error::param(format!(
                        "product block {k} declares dimension {} but its operator has {d}",
                        b.dim
                    )));
                }
            }
            if matches!(b.op, MaxMonotone::PairBallNormalCone) && b.dim % 2 != 0 {
                return Err(Error::param("pair-ball block needs an even dimension"));
            }
        }
        Ok(MaxMonotone::Product(blocks))
    }

    pub fn inverse(inner: MaxMonotone) -> Self {
        MaxMonotone::Inverse(Box::new(inner))
    }

    /// Affine operator `x ↦ Mx + q`; rejects non-monotone `M`.
    pub fn affine(map: AffineMap) -> Result<Self> {
        let lmin = map.min_symmetric_eigenvalue();
        if lmin < -1e-12 * (1.0 + map.matrix.amax()) {
            return Err(Error::param(format!(
                "affine operator is not monotone: symmetric part has eigenvalue {lmin:.3e}"
            )));
        }
        Ok(MaxMonotone::Affine(map))
    }

    pub fn custom(oracle: Arc<dyn ResolventOracle>) -> Self {
        MaxMonotone::Custom(oracle)
    }

    /// Dimension the operator is tied to, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            MaxMonotone::Zero | MaxMonotone::L1 { .. } | MaxMonotone::PairBallNormalCone => None,
            MaxMonotone::BoxNormalCone { lo, .. } => Some(lo.len()),
            MaxMonotone::Scaled { inner, .. } | MaxMonotone::Inverse(inner) => inner.dim(),
            MaxMonotone::Product(blocks) => Some(blocks.iter().map(|b| b.dim).sum()),
            MaxMonotone::Affine(m) => Some(m.dim()),
            MaxMonotone::Custom(o) => o.dim(),
        }
    }

    /// True when the resolvent is evaluated in closed form (no inner iteration).
    pub fn has_exact_resolvent(&self) -> bool {
        match self {
            MaxMonotone::Custom(_) => false,
            MaxMonotone::Scaled { inner, .. } | MaxMonotone::Inverse(inner) => {
                inner.has_exact_resolvent()
            }
            MaxMonotone::Product(blocks) => blocks.iter().all(|b| b.op.has_exact_resolvent()),
            _ => true,
        }
    }

    /// `Res_{λM}(x) = (Id + λM)^{-1}(x)`.
    pub fn resolvent(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.resolvent_into(lambda, x, &mut out)?;
        Ok(out)
    }

    pub fn resolvent_into(&self, lambda: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_lambda(lambda)?;
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(Error::param(format!(
                    "operator has dimension {d}, point has {}",
                    x.len()
                )));
            }
        }
        if out.len() != x.len() {
            return Err(Error::param("output buffer has the wrong length"));
        }
        if lambda == 0.0 {
            out.copy_from_slice(x);
            return Ok(());
        }
        self.apply_resolvent(lambda, x, out)
    }

    /// Yosida approximation `(x − Res_{λM}(x)) / λ`.
    pub fn yosida(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(lambda > 0.0) {
            return Err(Error::param(format!(
                "Yosida parameter must be positive, got {lambda}"
            )));
        }
        let j = self.resolvent(lambda, x)?;
        Ok(x.iter().zip(&j).map(|(a, b)| (a - b) / lambda).collect())
    }

    fn apply_resolvent(&self, lambda: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            MaxMonotone::Zero => out.copy_from_slice(x),
            MaxMonotone::BoxNormalCone { lo, hi } => clamp_into(lo, hi, x, out),
            MaxMonotone::L1 { weight } => {
                let tau = lambda * weight;
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = xi.signum() * (xi.abs() - tau).max(0.0);
                }
            }
            MaxMonotone::Scaled { alpha, inner } => inner.apply_resolvent(lambda * alpha, x, out)?,
            MaxMonotone::Product(blocks) => {
                let total: usize = blocks.iter().map(|b| b.dim).sum();
                if total != x.len() {
                    return Err(Error::param(format!(
                        "product operator has dimension {total}, point has {}",
                        x.len()
                    )));
                }
                let mut start = 0;
                for b in blocks {
                    let end = start + b.dim;
                    b.op
                        .apply_resolvent(lambda, &x[start..end], &mut out[start..end])?;
                    start = end;
                }
            }
            MaxMonotone::Inverse(inner) => {
                // Moreau: Res_{λM⁻¹}(x) = x − λ Res_{λ⁻¹M}(x/λ)
                let scaled: Vec<f64> = x.iter().map(|v| v / lambda).collect();
                inner.apply_resolvent(1.0 / lambda, &scaled, out)?;
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = xi - lambda * *o;
                }
            }
            MaxMonotone::Affine(map) => {
                let n = map.dim();
                let lhs = DMatrix::identity(n, n) + &map.matrix * lambda;
                let rhs = DVector::from_iterator(
                    n,
                    x.iter().zip(map.shift.iter()).map(|(xi, qi)| xi - lambda * qi),
                );
                let y = lhs.lu().solve(&rhs).ok_or_else(|| {
                    Error::param("singular system in affine resolvent (operator not monotone?)")
                })?;
                out.copy_from_slice(y.as_slice());
            }
            MaxMonotone::PairBallNormalCone => {
                if !x.len().is_multiple_of(2) {
                    return Err(Error::param("pair field must have even length"));
                }
                out.copy_from_slice(x);
                let (u, v) = out.split_at_mut(x.len() / 2);
                pair_ball_in_place(u, v);
            }
            MaxMonotone::Custom(oracle) => oracle.resolvent(lambda, x, out)?,
        }
        Ok(())
    }

    /// Descriptor for `self + beta · other`, when the sum has a closed-form resolvent.
    ///
    /// Supported: either side zero, or two box normal cones (their sum is the
    /// normal cone of the intersection, independent of `beta`).
    pub fn plus_scaled(&self, beta: f64, other: &MaxMonotone) -> Result<MaxMonotone> {
        if !(beta > 0.0) {
            return Err(Error::param(format!("penalty weight must be positive, got {beta}")));
        }
        match (self, other) {
            (a, MaxMonotone::Zero) => Ok(a.clone()),
            (MaxMonotone::Zero, MaxMonotone::BoxNormalCone { .. }) => Ok(other.clone()),
            (MaxMonotone::Zero, b) => MaxMonotone::scaled(beta, b.clone()),
            (
                MaxMonotone::BoxNormalCone { lo: l1, hi: h1 },
                MaxMonotone::BoxNormalCone { lo: l2, hi: h2 },
            ) => {
                if l1.len() != l2.len() {
                    return Err(Error::param("box normal cones of different dimensions"));
                }
                let lo: Vec<f64> = l1.iter().zip(l2).map(|(a, b)| a.max(*b)).collect();
                let hi: Vec<f64> = h1.iter().zip(h2).map(|(a, b)| a.min(*b)).collect();
                MaxMonotone::normal_cone_of_box(lo, hi)
            }
            _ => Err(Error::Unsupported(
                "no closed-form resolvent for this operator sum".into(),
            )),
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda < 0.0 || lambda.is_infinite() {
        return Err(Error::param(format!(
            "resolvent parameter must be finite and nonnegative, got {lambda}"
        )));
    }
    if lambda > 0.0 && lambda < MIN_LAMBDA {
        return Err(Error::param(format!(
            "resolvent parameter {lambda:e} is below the supported floor {MIN_LAMBDA:e}"
        )));
    }
    Ok(())
}
