//! Central path `t ↦ x̄(ε(t), β(t))`: zeros of the strongly monotone auxiliary
//! inclusions `0 ∈ A(x) + D(x) + εx + βB(x)`.

use std::borrow::Cow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::operators::{MaxMonotone, ProblemInstance};
use crate::schedules::Schedule;

pub const DEFAULT_MAX_ITER: usize = 10_000_000;

/// Largest diagonal index visited by [`least_norm_solution`] is `2^MAX_DOUBLINGS`.
pub const MAX_DOUBLINGS: u32 = 40;

#[derive(Clone, Debug, Serialize)]
pub struct CentralPathPoint {
    pub t: Option<f64>,
    pub eps: f64,
    pub beta: f64,
    pub xbar: Vec<f64>,
    /// `‖x − J_{λA}(x − λV_{ε,β}(x))‖` at the internal step `λ*`.
    pub residual: f64,
    pub iterations: usize,
    pub b_norm: f64,
}

/// Resolvent of the backward part at penalty level `beta` (`A + βB₂` when a
/// second penalty is present).
pub(crate) fn backward_operator(prob: &ProblemInstance, beta: f64) -> Result<Cow<'_, MaxMonotone>> {
    match &prob.b2 {
        None => Ok(Cow::Borrowed(&prob.a)),
        Some(b2) => Ok(Cow::Owned(prob.a.plus_scaled(beta, b2)?)),
    }
}

/// Solves the auxiliary inclusion from the zero vector.
pub fn solve_auxiliary(
    prob: &ProblemInstance,
    eps: f64,
    beta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CentralPathPoint> {
    solve(prob, eps, beta, None, tol, max_iter, None)
}

/// Solves the auxiliary inclusion from a warm start.
pub fn solve_auxiliary_from(
    prob: &ProblemInstance,
    eps: f64,
    beta: f64,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CentralPathPoint> {
    solve(prob, eps, beta, Some(x0), tol, max_iter, None)
}

/// Like [`solve_auxiliary`] but records the residual of every iterate.
pub fn solve_auxiliary_traced(
    prob: &ProblemInstance,
    eps: f64,
    beta: f64,
    tol: f64,
    max_iter: usize,
    trace: &mut Vec<f64>,
) -> Result<CentralPathPoint> {
    solve(prob, eps, beta, None, tol, max_iter, Some(trace))
}

/// Fixed-point iteration with step `λ* = 0.9/L_{ε,β}`: plain forward-backward
/// when `D` is cocoercive (then the step map contracts with factor `1 − λ*ε`),
/// Tseng's forward-backward-forward correction otherwise.
fn solve(
    prob: &ProblemInstance,
    eps: f64,
    beta: f64,
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<CentralPathPoint> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!("eps must be positive, got {eps}")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::param(format!("beta must be nonnegative, got {beta}")));
    }
    if !(tol > 0.0) {
        return Err(Error::param(format!("tol must be positive, got {tol}")));
    }
    let n = prob.dim();
    let a = backward_operator(prob, beta)?;
    let lambda = 0.9 / prob.lipschitz_v(eps, beta);
    let forward_backward = prob.d.is_cocoercive();

    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(Error::param(format!(
                "warm start has length {}, expected {n}",
                x0.len()
            )))
        }
        None => vec![0.0; n],
    };
    let mut vx = vec![0.0; n];
    let mut vp = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for k in 0..=max_iter {
        prob.v_into(eps, beta, &x, &mut vx, &mut scratch);
        for i in 0..n {
            w[i] = x[i] - lambda * vx[i];
        }
        a.resolvent_into(lambda, &w, &mut p)?;
        residual = dist(&x, &p);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(residual);
        }
        if !residual.is_finite() {
            break;
        }
        if residual <= tol {
            let b_norm = norm(&prob.b1.eval(&x));
            return Ok(CentralPathPoint {
                t: None,
                eps,
                beta,
                xbar: x,
                residual,
                iterations: k,
                b_norm,
            });
        }
        if k == max_iter {
            break;
        }
        if forward_backward {
            std::mem::swap(&mut x, &mut p);
        } else {
            prob.v_into(eps, beta, &p, &mut vp, &mut scratch);
            for i in 0..n {
                x[i] = p[i] + lambda * (vx[i] - vp[i]);
            }
        }
    }
    Err(Error::convergence(max_iter, residual)
        .with_context(format!("eps = {eps:.6e}, beta = {beta:.6e}")))
}

/// `x̄(ε(tₖ), β(tₖ))` along `times`, each solve warm-started from the last.
pub fn central_path(
    prob: &ProblemInstance,
    sch: &Schedule,
    times: &[f64],
    tol: f64,
) -> Result<Vec<CentralPathPoint>> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("central path times must be strictly increasing"));
    }
    let mut out: Vec<CentralPathPoint> = Vec::with_capacity(times.len());
    for &t in times {
        let (eps, beta) = (sch.eps(t), sch.beta(t));
        let pt = match out.last() {
            Some(prev) => solve_auxiliary_from(prob, eps, beta, &prev.xbar, tol, DEFAULT_MAX_ITER),
            None => solve_auxiliary(prob, eps, beta, tol, DEFAULT_MAX_ITER),
        };
        let mut pt = pt.map_err(|e| e.with_context(format!("t = {t}")))?;
        pt.t = Some(t);
        out.push(pt);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LeastNormReport {
    pub point: Vec<f64>,
    /// Diagonal index `n` of the returned point.
    pub n: f64,
    pub eps: f64,
    pub beta: f64,
    pub b_norm: f64,
    /// `‖x̄ₙ − x̄_{n/2}‖` at termination.
    pub cauchy_gap: f64,
    pub solves: usize,
    pub iterations: usize,
}

/// Estimate of `Π_{zer Φ}(0)` by following `εₙ = n^{-1/4}`, `βₙ = n^{1/2}`.
pub fn least_norm_solution(prob: &ProblemInstance, tol: f64) -> Result<Vec<f64>> {
    least_norm_report(prob, tol).map(|r| r.point)
}

/// The diagonal is visited along `n = 2, 4, 8, …`; iteration stops once two
/// consecutive points are within `tol`. This Cauchy rule is a heuristic: no
/// rate is known for `x̄ₙ → Π_{zer Φ}(0)`.
pub fn least_norm_report(prob: &ProblemInstance, tol: f64) -> Result<LeastNormReport> {
    if !(tol > 0.0) {
        return Err(Error::param(format!("tol must be positive, got {tol}")));
    }
    let mut prev: Option<CentralPathPoint> = None;
    let mut iterations = 0;
    let mut last_gap = f64::INFINITY;
    for k in 1..=MAX_DOUBLINGS {
        let n = 2f64.powi(k as i32);
        let (eps, beta) = (n.powf(-0.25), n.sqrt());
        let lip = prob.lipschitz_v(eps, beta);
        // ‖x − x̄‖ ≤ residual / (λ*ε); keep the solve error a tenth of tol
        let scale = prev.as_ref().map_or(1.0, |p| 1.0 + norm(&p.xbar));
        let inner_tol = (0.1 * tol * 0.9 * eps / lip).max(1e-15 * scale);
        let pt = match &prev {
            Some(p) => solve_auxiliary_from(prob, eps, beta, &p.xbar, inner_tol, DEFAULT_MAX_ITER),
            None => solve_auxiliary(prob, eps, beta, inner_tol, DEFAULT_MAX_ITER),
        }
        .map_err(|e| e.with_context(format!("diagonal index n = 2^{k}")))?;
        iterations += pt.iterations;
        if let Some(p) = &prev {
            last_gap = dist(&pt.xbar, &p.xbar);
            if last_gap <= tol {
                return Ok(LeastNormReport {
                    point: pt.xbar.clone(),
                    n,
                    eps,
                    beta,
                    b_norm: pt.b_norm,
                    cauchy_gap: last_gap,
                    solves: k as usize,
                    iterations,
                });
            }
        }
        prev = Some(pt);
    }
    Err(Error::Convergence {
        iterations,
        residual: last_gap,
        context: format!("; diagonal not Cauchy up to n = 2^{MAX_DOUBLINGS}"),
    })
}

/// Bounds of the central funnel estimated from visited points.
#[derive(Clone, Debug, Serialize)]
pub struct FunnelDiagnostics {
    /// `‖Π_{zer Φ}(0)‖`.
    pub r_estimate: f64,
    /// `max{r, ‖x̄‖, ‖B(x̄)‖}` over visited points.
    pub ell_estimate: f64,
    pub max_xbar_norm: f64,
    pub max_b_norm: f64,
}

impl FunnelDiagnostics {
    pub fn new(r_estimate: f64, points: &[CentralPathPoint]) -> Self {
        let max_xbar_norm = points.iter().map(|p| norm(&p.xbar)).fold(0.0, f64::max);
        let max_b_norm = points.iter().map(|p| p.b_norm).fold(0.0, f64::max);
        Self {
            r_estimate,
            ell_estimate: r_estimate.max(max_xbar_norm).max(max_b_norm),
            max_xbar_norm,
            max_b_norm,
        }
    }

    /// Visited points whose norm exceeds `r + tol`.
    pub fn norm_excess<'a>(&self, points: &'a [CentralPathPoint], tol: f64) -> Vec<&'a CentralPathPoint> {
        points
            .iter()
            .filter(|p| norm(&p.xbar) > self.r_estimate + tol)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub left: f64,
    /// `(ℓ/ε₁)(|β₂ − β₁| + |ε₂ − ε₁|)`.
    pub right: f64,
    /// `(|β₂ − β₁|/ε₁)‖B(x̄(σ₁))‖ + (|ε₂ − ε₁|/ε₁)‖x̄(σ₂)‖`.
    pub right_sharp: f64,
    pub ell: f64,
    pub passed: bool,
}

/// Lipschitz bound of the solution map between two parameter pairs.
pub fn path_regularity_check(
    prob: &ProblemInstance,
    sigma1: (f64, f64),
    sigma2: (f64, f64),
    funnel: &FunnelDiagnostics,
    tol: f64,
) -> Result<RegularityReport> {
    let (e1, b1) = sigma1;
    let (e2, b2) = sigma2;
    if !(e1 > 0.0 && b1 > 0.0 && e2 > 0.0 && b2 > 0.0) {
        return Err(Error::param("parameter pairs must be strictly positive"));
    }
    let solve_tol = 1e-13;
    let p1 = solve_auxiliary(prob, e1, b1, solve_tol, DEFAULT_MAX_ITER)?;
    let p2 = solve_auxiliary_from(prob, e2, b2, &p1.xbar, solve_tol, DEFAULT_MAX_ITER)?;
    // solve error ‖x − x̄‖ ≤ residual/(λ*ε) on either side
    let err = |p: &CentralPathPoint| p.residual * prob.lipschitz_v(p.eps, p.beta) / (0.9 * p.eps);
    let slack = tol + err(&p1) + err(&p2);
    let ell = FunnelDiagnostics::new(funnel.r_estimate, &[p1.clone(), p2.clone()])
        .ell_estimate
        .max(funnel.ell_estimate);
    let left = dist(&p1.xbar, &p2.xbar);
    let de = (e2 - e1).abs();
    let db = (b2 - b1).abs();
    let right = ell / e1 * (db + de);
    let right_sharp = db / e1 * p1.b_norm + de / e1 * norm(&p2.xbar);
    Ok(RegularityReport {
        left,
        right,
        right_sharp,
        ell,
        passed: left <= right * (1.0 + 1e-6) + slack,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport {
    pub t: f64,
    /// Central difference `‖x̄(t+h) − x̄(t−h)‖/(2h)`, `h = 1e-4·t`.
    pub derivative: f64,
    /// `(β̇/ε)‖B(x̄)‖ + (|ε̇|/ε)‖x̄‖`.
    pub bound: f64,
    pub passed: bool,
}

/// Central-difference derivative of the path against its a-priori bound,
/// accepted within relative `slack`.
pub fn path_derivative_check(
    prob: &ProblemInstance,
    sch: &Schedule,
    t: f64,
    slack: f64,
) -> Result<DerivativeReport> {
    if !(t > 0.0) {
        return Err(Error::param("derivative check needs t > 0"));
    }
    let h = 1e-4 * t;
    let pts = central_path(prob, sch, &[t - h, t, t + h], 1e-14)?;
    let derivative = dist(&pts[2].xbar, &pts[0].xbar) / (2.0 * h);
    let (eps, mid) = (sch.eps(t), &pts[1]);
    let bound = sch.dbeta(t) / eps * mid.b_norm + sch.deps(t).abs() / eps * norm(&mid.xbar);
    Ok(DerivativeReport {
        t,
        derivative,
        bound,
        passed: derivative <= bound * (1.0 + slack) + 1e-12,
    })
}
