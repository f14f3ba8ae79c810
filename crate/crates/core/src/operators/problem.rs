use std::fmt;

use super::monotone::MaxMonotone;
use super::single::{LipschitzOp, PenaltyOp, ScalarMap, ZeroSet};
use crate::error::{Error, Result};

/// Data of the constrained inclusion `0 ∈ A(x) + D(x) + N_C(x)` with
/// `C = zer(B₁)` (intersected with `zer(B₂)` when a second penalty is present).
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub a: MaxMonotone,
    pub d: LipschitzOp,
    pub b1: PenaltyOp,
    /// Second penalty `∂Ψ₂`, handled through the resolvent of `A + βB₂`.
    pub b2: Option<MaxMonotone>,
    pub psi1: Option<ScalarMap>,
    pub psi2: Option<ScalarMap>,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("a", &self.a)
            .field("d", &self.d)
            .field("b1", &self.b1)
            .field("b2", &self.b2)
            .finish()
    }
}

impl ProblemInstance {
    pub fn new(name: impl Into<String>, a: MaxMonotone, d: LipschitzOp, b1: PenaltyOp) -> Result<Self> {
        let inst = Self {
            name: name.into(),
            a,
            d,
            b1,
            b2: None,
            psi1: None,
            psi2: None,
        };
        inst.check()?;
        Ok(inst)
    }

    /// Attaches the second penalty `B₂ = ∂Ψ₂` together with both potentials.
    pub fn with_second_penalty(
        mut self,
        b2: MaxMonotone,
        psi1: ScalarMap,
        psi2: ScalarMap,
    ) -> Result<Self> {
        self.b2 = Some(b2);
        self.psi1 = Some(psi1);
        self.psi2 = Some(psi2);
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        let n = self.d.dim();
        if self.b1.dim() != n {
            return Err(Error::param(format!(
                "D acts on dimension {n} but B acts on {}",
                self.b1.dim()
            )));
        }
        if let Some(da) = self.a.dim() {
            if da != n {
                return Err(Error::param(format!("A acts on dimension {da}, expected {n}")));
            }
        }
        if let Some(b2) = &self.b2 {
            if let Some(db) = b2.dim() {
                if db != n {
                    return Err(Error::param(format!("B2 acts on dimension {db}, expected {n}")));
                }
            }
            if self.psi1.is_none() || self.psi2.is_none() {
                return Err(Error::param(
                    "a second penalty requires both potential values",
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d.dim()
    }

    /// Lipschitz modulus of `V_{ε,β} = D + εId + βB`: `1/η + ε + β/μ`.
    pub fn lipschitz_v(&self, eps: f64, beta: f64) -> f64 {
        self.d.lipschitz() + eps + beta / self.b1.mu()
    }

    /// `V_{ε,β}(x) = D(x) + εx + βB₁(x)`; `scratch` must have the state length.
    #[inline]
    pub fn v_into(&self, eps: f64, beta: f64, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.d.apply(x, out);
        if beta != 0.0 {
            self.b1.apply(x, scratch);
            for i in 0..x.len() {
                out[i] += eps * x[i] + beta * scratch[i];
            }
        } else {
            for i in 0..x.len() {
                out[i] += eps * x[i];
            }
        }
    }

    pub fn v(&self, eps: f64, beta: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        let mut scratch = vec![0.0; x.len()];
        self.v_into(eps, beta, x, &mut out, &mut scratch);
        out
    }

    /// `(Ψ₁ + Ψ₂)(x)` when both potentials are known.
    pub fn penalty_value(&self, x: &[f64]) -> Option<f64> {
        match (&self.psi1, &self.psi2) {
            (Some(p1), Some(p2)) => Some(p1(x) + p2(x)),
            (Some(p1), None) => Some(p1(x)),
            _ => None,
        }
    }

    /// Closed-form description of the constraint set, when one is known.
    pub fn constraint_set(&self) -> Option<ZeroSet> {
        let c1 = self.b1.zero_set()?.clone();
        match &self.b2 {
            None | Some(MaxMonotone::Zero) => Some(c1),
            Some(MaxMonotone::BoxNormalCone { lo, hi }) => c1.intersect(&ZeroSet::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            }),
            Some(_) => None,
        }
    }
}
