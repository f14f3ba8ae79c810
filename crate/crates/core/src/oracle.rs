//! Ground-truth solvers for small instances.
//!
//! [`active_set_solve`] enumerates every active set of the polyhedral
//! constraint set and solves the affine stationarity system on it;
//! [`high_precision_reference`] runs the extragradient method with the exact
//! projector. Neither shares code with the dynamics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::operators::{MaxMonotone, ProblemInstance, ZeroSet};

/// Largest dimension accepted by the enumeration.
pub const MAX_ORACLE_DIM: usize = 4;
/// Certified points have a natural residual at most this large.
pub const KKT_TOL: f64 = 1e-10;
pub const REFERENCE_MAX_ITER: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionSet {
    Singleton { point: Vec<f64> },
    Segment { a: Vec<f64>, b: Vec<f64> },
    EnumeratedFaces { faces: Vec<FacePiece> },
}

/// Solutions living on one active set of constraints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacePiece {
    /// Indices of the constraints held with equality.
    pub active: Vec<usize>,
    /// Least-norm solution on this active set.
    pub point: Vec<f64>,
    /// Dimension of the affine hull of the piece.
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionCertificate {
    pub instance: String,
    pub solution_set: SolutionSet,
    pub least_norm_point: Vec<f64>,
    pub kkt_residual: f64,
}

impl SolutionCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    /// Distance from `x` to the certified set. Only singletons and segments
    /// have a closed form; face lists answer `None`.
    pub fn distance_to_set(&self, x: &[f64]) -> Option<f64> {
        match &self.solution_set {
            SolutionSet::Singleton { point } => Some(dist(x, point)),
            SolutionSet::Segment { a, b } => {
                let d: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
                let dd: f64 = d.iter().map(|v| v * v).sum();
                let t = if dd == 0.0 {
                    0.0
                } else {
                    let num: f64 = x.iter().zip(a).zip(&d).map(|((xi, ai), di)| (xi - ai) * di).sum();
                    (num / dd).clamp(0.0, 1.0)
                };
                let proj: Vec<f64> = a.iter().zip(&d).map(|(ai, di)| ai + t * di).collect();
                Some(dist(x, &proj))
            }
            SolutionSet::EnumeratedFaces { .. } => None,
        }
    }
}

/// Constraint `⟨g, x⟩ ≤ h`.
#[derive(Clone, Debug)]
struct Halfspace {
    g: Vec<f64>,
    h: f64,
}

/// The feasible set of `A + N_C` when `A` is zero or a box normal cone.
pub fn feasible_set(prob: &ProblemInstance) -> Result<ZeroSet> {
    let c = prob.constraint_set().ok_or_else(|| {
        Error::Unsupported(format!(
            "instance '{}' has no closed-form constraint set",
            prob.name
        ))
    })?;
    match &prob.a {
        MaxMonotone::Zero => Ok(c),
        MaxMonotone::BoxNormalCone { lo, hi } => c
            .intersect(&ZeroSet::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            })
            .ok_or_else(|| {
                Error::Unsupported("box intersected with a half-space has no exact projector".into())
            }),
        other => Err(Error::Unsupported(format!(
            "A must be zero or a box normal cone, got {other:?}"
        ))),
    }
}

fn halfspaces(k: &ZeroSet) -> Vec<Halfspace> {
    match k {
        ZeroSet::Box { lo, hi } => {
            let n = lo.len();
            let mut out = Vec::new();
            for i in 0..n {
                let mut e = vec![0.0; n];
                if hi[i].is_finite() {
                    e[i] = 1.0;
                    out.push(Halfspace { g: e.clone(), h: hi[i] });
                }
                if lo[i].is_finite() {
                    e[i] = -1.0;
                    out.push(Halfspace { g: e, h: -lo[i] });
                }
            }
            out
        }
        ZeroSet::HalfSpace { normal, offset } => vec![Halfspace {
            g: normal.clone(),
            h: *offset,
        }],
    }
}

/// `‖x − Π_K(x − (Mx + q))‖` plus the distance of `x` to `K`.
fn natural_residual(k: &ZeroSet, m: &DMatrix<f64>, q: &DVector<f64>, x: &[f64]) -> f64 {
    let xv = DVector::from_column_slice(x);
    let f = m * &xv + q;
    let trial: Vec<f64> = x.iter().zip(f.iter()).map(|(a, b)| a - b).collect();
    dist(x, &k.project(&trial)) + dist(x, &k.project(x))
}

struct Candidate {
    active: Vec<usize>,
    point: Vec<f64>,
    dim: usize,
    /// Unit directions of the piece's affine hull.
    directions: Vec<Vec<f64>>,
}

/// Puts coordinates held at a box face exactly on the bound.
fn snap_to_faces(cons: &[Halfspace], eq: &[usize], x: &mut [f64]) {
    for &c in eq {
        let g = &cons[c].g;
        let nz: Vec<usize> = (0..g.len()).filter(|&i| g[i] != 0.0).collect();
        if let [i] = nz[..] {
            x[i] = cons[c].h / g[i];
        }
    }
}

/// Least-norm `x` of the affine set
/// `{ x : Mx + q + Σ_{i∈P} tᵢ gᵢ = 0, ⟨gᵢ, x⟩ = hᵢ for i ∈ E }`, with its
/// dimension, or `None` if the system is inconsistent.
fn least_norm_on(
    m: &DMatrix<f64>,
    q: &DVector<f64>,
    cons: &[Halfspace],
    eq: &[usize],
    mult: &[usize],
) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.nrows();
    let cols = n + mult.len();
    let rows = n + eq.len();
    let mut k = DMatrix::zeros(rows, cols);
    let mut rhs = DVector::zeros(rows);
    k.view_mut((0, 0), (n, n)).copy_from(m);
    for (j, &c) in mult.iter().enumerate() {
        for i in 0..n {
            k[(i, n + j)] = cons[c].g[i];
        }
    }
    for i in 0..n {
        rhs[i] = -q[i];
    }
    for (r, &c) in eq.iter().enumerate() {
        for i in 0..n {
            k[(n + r, i)] = cons[c].g[i];
        }
        rhs[n + r] = cons[c].h;
    }

    let scale = 1.0 + k.amax() + rhs.amax();
    let tol = 1e-12 * scale;
    let svd = k.clone().svd(true, true);
    let zp = svd.solve(&rhs, tol).ok()?;
    if (&k * &zp - &rhs).amax() > 1e-10 * scale {
        return None;
    }
    let v_t = svd.v_t.as_ref()?;
    let null: Vec<DVector<f64>> = (0..cols)
        .filter(|&j| j >= svd.singular_values.len() || svd.singular_values[j] <= tol)
        .map(|j| v_t.row(j).transpose())
        .collect();
    let xp = zp.rows(0, n).into_owned();
    if null.is_empty() {
        return Some((xp.as_slice().to_vec(), Vec::new()));
    }
    let mut nx = DMatrix::zeros(n, null.len());
    for (j, v) in null.iter().enumerate() {
        nx.set_column(j, &v.rows(0, n));
    }
    let nsvd = nx.clone().svd(true, true);
    let w = nsvd.solve(&(-&xp), tol).ok()?;
    let x = xp + nx * w;
    let u = nsvd.u.as_ref()?;
    let directions = (0..nsvd.singular_values.len())
        .filter(|&j| nsvd.singular_values[j] > tol)
        .map(|j| u.column(j).iter().copied().collect())
        .collect();
    Some((x.as_slice().to_vec(), directions))
}

/// Solves `0 ∈ A(x) + D(x) + N_C(x)` exactly for affine `D`, `A` zero or a
/// box normal cone, and `C` a box or half-space, in dimension at most 4.
pub fn active_set_solve(prob: &ProblemInstance) -> Result<SolutionCertificate> {
    let n = prob.dim();
    if n > MAX_ORACLE_DIM {
        return Err(Error::Unsupported(format!(
            "enumeration supports dimension at most {MAX_ORACLE_DIM}, got {n}"
        )));
    }
    let affine = prob.d.as_affine().ok_or_else(|| {
        Error::Unsupported(format!("instance '{}' has a non-affine D", prob.name))
    })?;
    let k = feasible_set(prob)?;
    let cons = halfspaces(&k);
    let (m, q) = (&affine.matrix, &affine.shift);
    let res_tol = KKT_TOL * (1.0 + q.amax());

    let mut found: Vec<Candidate> = Vec::new();
    let nc = cons.len();
    for eq_mask in 0u32..(1 << nc) {
        let eq: Vec<usize> = (0..nc).filter(|i| eq_mask >> i & 1 == 1).collect();
        // multiplier supports are subsets of the active set
        let mut sub = eq_mask;
        loop {
            let mult: Vec<usize> = (0..nc).filter(|i| sub >> i & 1 == 1).collect();
            if let Some((mut x, directions)) = least_norm_on(m, q, &cons, &eq, &mult) {
                snap_to_faces(&cons, &eq, &mut x);
                let x = k.project(&x);
                if natural_residual(&k, m, q, &x) <= res_tol {
                    found.push(Candidate {
                        active: eq.clone(),
                        point: x,
                        dim: directions.len(),
                        directions,
                    });
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & eq_mask;
        }
    }
    if found.is_empty() {
        return Err(Error::Unsupported(format!(
            "instance '{}' has no solution on any face",
            prob.name
        )));
    }

    let best = found
        .iter()
        .min_by(|a, b| norm(&a.point).total_cmp(&norm(&b.point)))
        .expect("nonempty");
    let least = best.point.clone();
    let kkt_residual = natural_residual(&k, m, q, &least);

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for c in found.iter().filter(|c| c.dim == 0) {
        if !vertices.iter().any(|v| dist(v, &c.point) <= 1e-9) {
            vertices.push(c.point.clone());
        }
    }
    vertices.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    // directions along which the solution set leaves a candidate point
    let mut moves: Vec<Vec<f64>> = Vec::new();
    for c in &found {
        let step = 1e-7 * (1.0 + norm(&c.point));
        for d in &c.directions {
            for sign in [1.0, -1.0] {
                let y: Vec<f64> = c.point.iter().zip(d).map(|(p, di)| p + sign * step * di).collect();
                if natural_residual(&k, m, q, &y) <= res_tol {
                    moves.push(d.clone());
                }
            }
        }
    }
    let parallel = |d: &[f64], e: &[f64]| {
        let c = crate::linalg::dot(d, e).abs();
        (c - norm(d) * norm(e)).abs() <= 1e-9 * norm(d) * norm(e)
    };
    let solution_set = match vertices.len() {
        1 if moves.is_empty() => SolutionSet::Singleton {
            point: vertices[0].clone(),
        },
        2 if {
            let ab: Vec<f64> = vertices[1].iter().zip(&vertices[0]).map(|(p, q)| p - q).collect();
            moves.iter().all(|d| parallel(d, &ab))
        } =>
        {
            SolutionSet::Segment {
                a: vertices[0].clone(),
                b: vertices[1].clone(),
            }
        }
        _ => {
            let mut faces: Vec<FacePiece> = Vec::new();
            for c in found {
                if !faces.iter().any(|f| f.active == c.active && dist(&f.point, &c.point) <= 1e-9) {
                    faces.push(FacePiece {
                        active: c.active,
                        point: c.point,
                        dim: c.dim,
                    });
                }
            }
            SolutionSet::EnumeratedFaces { faces }
        }
    };
    Ok(SolutionCertificate {
        instance: prob.name.clone(),
        solution_set,
        least_norm_point: least,
        kkt_residual,
    })
}

/// Extragradient iteration `y = Π(x − τD x)`, `x⁺ = Π(x − τD y)` on the
/// feasible set until the fixed-point residual `‖x − Π(x − τD x)‖ ≤ tol`.
pub fn high_precision_reference(prob: &ProblemInstance, x0: &[f64], tol: f64) -> Result<Vec<f64>> {
    if x0.len() != prob.dim() {
        return Err(Error::param(format!(
            "starting point has length {}, expected {}",
            x0.len(),
            prob.dim()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::param(format!("tolerance must be positive, got {tol}")));
    }
    let k = feasible_set(prob)?;
    let n = prob.dim();
    let eta = prob.d.eta();
    let tau = if eta.is_finite() { 0.5 * eta } else { 1.0 };
    let mut x = k.project(x0);
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..REFERENCE_MAX_ITER {
        prob.d.apply(&x, &mut dx);
        for i in 0..n {
            w[i] = x[i] - tau * dx[i];
        }
        k.project_into(&w, &mut y);
        residual = dist(&x, &y);
        if residual <= tol {
            return Ok(x);
        }
        prob.d.apply(&y, &mut dy);
        for i in 0..n {
            w[i] = x[i] - tau * dy[i];
        }
        k.project_into(&w, &mut x);
    }
    Err(Error::convergence(REFERENCE_MAX_ITER, residual)
        .with_context(format!("extragradient reference for '{}'", prob.name)))
}
