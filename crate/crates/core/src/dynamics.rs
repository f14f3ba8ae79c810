//! Explicit Euler integration of the forward-backward (FB),
//! forward-backward-forward (FBF) and two-penalty full-splitting (SFBP)
//! dynamics, plus trajectory diagnostics against the central path.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::central_path::{backward_operator, CentralPathPoint};
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm};
use crate::operators::{CertificateKind, MaxMonotone, ProblemInstance};
use crate::schedules::{Mode, Schedule};

/// States with a larger norm abort the integration.
pub const BLOWUP_NORM: f64 = 1e12;
pub const DEFAULT_SAFETY_FACTOR: f64 = 0.5;
const COCOERCIVITY_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grid {
    Uniform {
        h: f64,
        #[serde(rename = "T")]
        t_end: f64,
    },
    /// `h_k = h0 · ratio^k`.
    Geometric {
        h0: f64,
        ratio: f64,
        #[serde(rename = "T")]
        t_end: f64,
    },
}

impl Grid {
    pub fn t_end(&self) -> f64 {
        match *self {
            Grid::Uniform { t_end, .. } | Grid::Geometric { t_end, .. } => t_end,
        }
    }
}

fn default_safety() -> f64 {
    DEFAULT_SAFETY_FACTOR
}

fn default_every() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub mode: Mode,
    pub grid: Grid,
    #[serde(default = "default_safety")]
    pub safety_factor: f64,
    #[serde(default)]
    pub t_start: f64,
    /// Keep every `record_every`-th step; the final state is always kept.
    #[serde(default = "default_every")]
    pub record_every: usize,
    /// Stop after this many steps even if `T` is not reached.
    #[serde(default)]
    pub max_steps: Option<usize>,
}

impl IntegratorSpec {
    pub fn uniform(mode: Mode, h: f64, t_end: f64) -> Self {
        Self {
            mode,
            grid: Grid::Uniform { h, t_end },
            safety_factor: DEFAULT_SAFETY_FACTOR,
            t_start: 0.0,
            record_every: 1,
            max_steps: None,
        }
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = Some(n);
        self
    }

    pub fn with_safety_factor(mut self, c: f64) -> Self {
        self.safety_factor = c;
        self
    }

    pub fn with_t_start(mut self, t0: f64) -> Self {
        self.t_start = t0;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.safety_factor > 0.0 && self.safety_factor <= 1.0) {
            return Err(Error::param(format!(
                "safety factor must lie in (0, 1], got {}",
                self.safety_factor
            )));
        }
        let t_end = self.grid.t_end();
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::param(format!("T must be positive and finite, got {t_end}")));
        }
        if !(self.t_start >= 0.0) || self.t_start >= t_end {
            return Err(Error::param(format!(
                "start time {} must lie in [0, T)",
                self.t_start
            )));
        }
        match self.grid {
            Grid::Uniform { h, .. } if !(h > 0.0) => {
                Err(Error::param(format!("step h must be positive, got {h}")))
            }
            Grid::Geometric { h0, ratio, .. } if !(h0 > 0.0) || !(ratio >= 1.0) => Err(
                Error::param(format!("geometric grid needs h0 > 0 and ratio >= 1, got {h0}, {ratio}")),
            ),
            _ if self.record_every == 0 => Err(Error::param("record_every must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Parameters and per-state diagnostics at a recorded time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub eps: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// `L(t) = 1/η + ε + β/μ`.
    pub lipschitz: f64,
    /// `‖ẋ‖`, equal to the forward difference of the Euler step taken here.
    pub xdot_norm: f64,
    pub b1_norm: f64,
    /// `(Ψ₁ + Ψ₂)(x + ẋ)` when both potentials are known.
    pub psi_sum: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub mode: Mode,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `p(tₖ)` (FBF only).
    pub aux_points: Option<Vec<Vec<f64>>>,
    /// `ẋ(tₖ)`.
    pub velocities: Vec<Vec<f64>>,
    /// Step taken from each recorded state (0 for the final one).
    pub step_sizes: Vec<f64>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Total number of Euler steps.
    pub steps: usize,
    pub record_every: usize,
    /// `∫λx / ∫λ` by the trapezoid rule over every step, not just recorded ones.
    pub ergodic_full: Vec<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Euler step index of the `k`-th recorded state.
    pub fn recorded_step(&self, k: usize) -> usize {
        if k + 1 == self.times.len() {
            self.steps
        } else {
            k * self.record_every
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            t: self.final_time(),
            x: self.final_state().to_vec(),
        }
    }
}

/// Restart point of an integration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
struct Params {
    eps: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
    lip: f64,
}

fn params(prob: &ProblemInstance, sch: &Schedule, t: f64) -> Result<Params> {
    let (eps, beta, lambda, gamma) = sch.at(t);
    if !(eps > 0.0 && beta >= 0.0 && lambda > 0.0 && gamma > 0.0)
        || !(eps.is_finite() && beta.is_finite() && lambda.is_finite() && gamma.is_finite())
    {
        return Err(Error::param(format!(
            "schedule undefined or nonpositive at t = {t}: eps = {eps}, beta = {beta}, lambda = {lambda}, gamma = {gamma}"
        )));
    }
    Ok(Params {
        eps,
        beta,
        lambda,
        gamma,
        lip: prob.lipschitz_v(eps, beta),
    })
}

/// Largest step allowed by the Lipschitz bound of the vector field.
fn step_cap(mode: Mode, p: &Params, c: f64) -> f64 {
    let ll = p.lambda * p.lip;
    match mode {
        Mode::FB => c / (p.gamma * (2.0 + ll)),
        Mode::FBF => c / (2.0 + 2.0 * ll),
        Mode::SFBP => c / (2.0 + ll),
    }
}

struct Workspace {
    vx: Vec<f64>,
    vp: Vec<f64>,
    w: Vec<f64>,
    p: Vec<f64>,
    xdot: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            vx: vec![0.0; n],
            vp: vec![0.0; n],
            w: vec![0.0; n],
            p: vec![0.0; n],
            xdot: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }
}

/// Evaluates the vector field at `x`; leaves `p = J(x − λV x)` and `ẋ` in `ws`.
fn field(
    mode: Mode,
    prob: &ProblemInstance,
    a: &MaxMonotone,
    pr: &Params,
    x: &[f64],
    ws: &mut Workspace,
) -> Result<()> {
    let n = x.len();
    prob.v_into(pr.eps, pr.beta, x, &mut ws.vx, &mut ws.scratch);
    for i in 0..n {
        ws.w[i] = x[i] - pr.lambda * ws.vx[i];
    }
    a.resolvent_into(pr.lambda, &ws.w, &mut ws.p)?;
    match mode {
        Mode::FB => {
            for i in 0..n {
                ws.xdot[i] = pr.gamma * (ws.p[i] - x[i]);
            }
        }
        Mode::FBF => {
            prob.v_into(pr.eps, pr.beta, &ws.p, &mut ws.vp, &mut ws.scratch);
            for i in 0..n {
                ws.xdot[i] = ws.p[i] - x[i] + pr.lambda * (ws.vx[i] - ws.vp[i]);
            }
        }
        Mode::SFBP => {
            for i in 0..n {
                ws.xdot[i] = ws.p[i] - x[i];
            }
        }
    }
    Ok(())
}

/// Backward operator of the mode; for SFBP, `A + βB₂`.
enum Backward<'a> {
    Fixed(Cow<'a, MaxMonotone>),
    PerStep,
}

/// True when `A + βB₂` does not depend on `β` (normal cones and zero).
fn sum_is_beta_invariant(a: &MaxMonotone, b2: &MaxMonotone) -> bool {
    matches!(b2, MaxMonotone::Zero)
        || (matches!(b2, MaxMonotone::BoxNormalCone { .. })
            && matches!(a, MaxMonotone::Zero | MaxMonotone::BoxNormalCone { .. }))
}

fn check_preconditions<'a>(
    mode: Mode,
    prob: &'a ProblemInstance,
    x0: &[f64],
) -> Result<Backward<'a>> {
    if x0.len() != prob.dim() {
        return Err(Error::param(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            prob.dim()
        )));
    }
    if !crate::linalg::all_finite(x0) {
        return Err(Error::param("initial state is not finite"));
    }
    match mode {
        Mode::FB | Mode::FBF => {
            if prob.b2.is_some() {
                return Err(Error::precondition(format!(
                    "{mode} dynamics take a single penalty; use SFBP for instances with B2"
                )));
            }
            if mode == Mode::FB {
                if !prob.d.is_cocoercive() {
                    return Err(Error::precondition(
                        "FB dynamics need a cocoercive D; this instance's D is not flagged cocoercive",
                    ));
                }
                let cert = prob.d.certify(
                    CertificateKind::Cocoercive(prob.d.eta()),
                    COCOERCIVITY_SAMPLES,
                    0,
                );
                if !cert.passed {
                    return Err(Error::precondition(format!(
                        "FB dynamics need a cocoercive D; sampled certificate failed (violation {:.3e})",
                        cert.worst_violation
                    )));
                }
            }
            Ok(Backward::Fixed(Cow::Borrowed(&prob.a)))
        }
        Mode::SFBP => {
            let b2 = prob.b2.as_ref().ok_or_else(|| {
                Error::precondition("SFBP dynamics need a second penalty B2")
            })?;
            let probe = prob.a.plus_scaled(1.0, b2).map_err(|e| {
                Error::precondition(format!("no combined resolvent for A + beta*B2: {e}"))
            })?;
            if sum_is_beta_invariant(&prob.a, b2) {
                Ok(Backward::Fixed(Cow::Owned(probe)))
            } else {
                Ok(Backward::PerStep)
            }
        }
    }
}

/// Runs the precondition checks of `mode` without integrating.
pub fn check_mode_compatibility(mode: Mode, prob: &ProblemInstance, x0: &[f64]) -> Result<()> {
    check_preconditions(mode, prob, x0).map(|_| ())
}

pub fn integrate_fb(prob: &ProblemInstance, sch: &Schedule, x0: &[f64], spec: &IntegratorSpec) -> Result<Trajectory> {
    integrate(Mode::FB, prob, sch, x0, spec)
}

pub fn integrate_fbf(prob: &ProblemInstance, sch: &Schedule, x0: &[f64], spec: &IntegratorSpec) -> Result<Trajectory> {
    integrate(Mode::FBF, prob, sch, x0, spec)
}

pub fn integrate_sfbp(prob: &ProblemInstance, sch: &Schedule, x0: &[f64], spec: &IntegratorSpec) -> Result<Trajectory> {
    integrate(Mode::SFBP, prob, sch, x0, spec)
}

/// Dispatches on `spec.mode`.
pub fn integrate_mode(prob: &ProblemInstance, sch: &Schedule, x0: &[f64], spec: &IntegratorSpec) -> Result<Trajectory> {
    integrate(spec.mode, prob, sch, x0, spec)
}

fn integrate(
    mode: Mode,
    prob: &ProblemInstance,
    sch: &Schedule,
    x0: &[f64],
    spec: &IntegratorSpec,
) -> Result<Trajectory> {
    spec.check()?;
    let backward = check_preconditions(mode, prob, x0)?;
    let n = prob.dim();
    let t_end = spec.grid.t_end();
    let every = spec.record_every;
    let max_steps = spec.max_steps.unwrap_or(usize::MAX);

    let mut traj = Trajectory {
        mode,
        times: Vec::new(),
        states: Vec::new(),
        aux_points: (mode == Mode::FBF).then(Vec::new),
        velocities: Vec::new(),
        step_sizes: Vec::new(),
        diagnostics: Vec::new(),
        steps: 0,
        record_every: every,
        ergodic_full: Vec::new(),
    };
    let mut ws = Workspace::new(n);
    let mut x = x0.to_vec();
    let mut t = spec.t_start;
    let mut h_prev = 0.0;
    let mut h_grid = match spec.grid {
        Grid::Uniform { h, .. } => h,
        Grid::Geometric { h0, .. } => h0,
    };
    let mut erg_num = vec![0.0; n];
    let mut erg_den = 0.0;
    let mut scratch = vec![0.0; n];

    for k in 0.. {
        let pr = params(prob, sch, t)?;
        let a: Cow<'_, MaxMonotone> = match &backward {
            Backward::Fixed(a) => Cow::Borrowed(a.as_ref()),
            Backward::PerStep => backward_operator(prob, pr.beta)?,
        };
        field(mode, prob, &a, &pr, &x, &mut ws)?;

        let done = t >= t_end || k >= max_steps;
        let h = if done {
            0.0
        } else {
            let h = h_grid.min(step_cap(mode, &pr, spec.safety_factor));
            // land exactly on T instead of leaving a rounding-sized last step
            if t + h >= t_end - 1e-12 * t_end.max(1.0) {
                t_end - t
            } else {
                h
            }
        };

        let wgt = 0.5 * (h_prev + h) * pr.lambda;
        crate::linalg::axpy(wgt, &x, &mut erg_num);
        erg_den += wgt;

        if done || k % every == 0 {
            prob.b1.apply(&x, &mut scratch);
            let psi_sum = prob.penalty_value(&ws.p).filter(|_| mode == Mode::SFBP);
            traj.times.push(t);
            traj.states.push(x.clone());
            traj.velocities.push(ws.xdot.clone());
            if let Some(aux) = traj.aux_points.as_mut() {
                aux.push(ws.p.clone());
            }
            traj.step_sizes.push(h);
            traj.diagnostics.push(StepDiagnostics {
                eps: pr.eps,
                beta: pr.beta,
                lambda: pr.lambda,
                gamma: pr.gamma,
                lipschitz: pr.lip,
                xdot_norm: norm(&ws.xdot),
                b1_norm: norm(&scratch),
                psi_sum,
            });
        }
        if done {
            break;
        }

        crate::linalg::axpy(h, &ws.xdot, &mut x);
        t = if h == t_end - t { t_end } else { t + h };
        traj.steps += 1;
        h_prev = h;
        if let Grid::Geometric { ratio, .. } = spec.grid {
            h_grid *= ratio;
        }
        let nx = norm(&x);
        if !(nx <= BLOWUP_NORM) {
            return Err(Error::Divergence {
                step: traj.steps,
                time: t,
                norm: nx,
            });
        }
    }
    traj.ergodic_full = erg_num.iter().map(|v| v / erg_den).collect();
    if traj.ergodic_full.iter().any(|v| !v.is_finite()) {
        traj.ergodic_full = traj.final_state().to_vec();
    }
    Ok(traj)
}

/// One explicit Euler step of `mode` at time `t` with step `h` (no cap applied).
pub fn step_map(
    mode: Mode,
    prob: &ProblemInstance,
    sch: &Schedule,
    t: f64,
    h: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let pr = params(prob, sch, t)?;
    let a = backward_operator(prob, pr.beta)?;
    let mut ws = Workspace::new(x.len());
    field(mode, prob, &a, &pr, x, &mut ws)?;
    Ok(x.iter().zip(&ws.xdot).map(|(xi, di)| xi + h * di).collect())
}

/// The Lipschitz factor `γ(2 + λL)` (FB), `2 + 2λL` (FBF) or `2 + λL` (SFBP)
/// of the vector field at `t`.
pub fn field_lipschitz(mode: Mode, prob: &ProblemInstance, sch: &Schedule, t: f64) -> Result<f64> {
    let pr = params(prob, sch, t)?;
    Ok(step_cap(mode, &pr, 1.0).recip())
}

/// `∫λ(s)x(s)ds / ∫λ(s)ds` by the trapezoid rule over the recorded grid.
pub fn ergodic_average(traj: &Trajectory, sch: &Schedule) -> Result<Vec<f64>> {
    let first = traj
        .states
        .first()
        .ok_or_else(|| Error::param("empty trajectory"))?;
    if traj.states.len() == 1 {
        return Ok(first.clone());
    }
    let n = first.len();
    let mut num = vec![0.0; n];
    let mut den = 0.0;
    for k in 0..traj.times.len() - 1 {
        let dt = traj.times[k + 1] - traj.times[k];
        let (l0, l1) = (sch.lambda(traj.times[k]), sch.lambda(traj.times[k + 1]));
        for i in 0..n {
            num[i] += 0.5 * dt * (l0 * traj.states[k][i] + l1 * traj.states[k + 1][i]);
        }
        den += 0.5 * dt * (l0 + l1);
    }
    if !(den > 0.0) {
        return Ok(traj.final_state().to_vec());
    }
    Ok(num.into_iter().map(|v| v / den).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackingSample {
    pub t: f64,
    /// `θ = ½‖x − x̄‖²`.
    pub theta: f64,
    pub gap: f64,
    /// `⟨x − x̄, ẋ⟩ − (λL − 1)‖x − p‖² + λε‖p − x̄‖²` (FBF only); nonpositive
    /// when the Lyapunov inequality holds.
    pub lyapunov_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackingReport {
    pub samples: Vec<TrackingSample>,
    pub final_gap: f64,
    /// First sample index after which `θ` never increases by more than `1e-8`.
    pub burn_in: usize,
    /// Fraction of FBF samples whose Lyapunov residual is `≤ 1e-6`.
    pub lyapunov_fraction: Option<f64>,
}

pub const THETA_SLACK: f64 = 1e-8;
pub const LYAPUNOV_SLACK: f64 = 1e-6;

/// Compares a trajectory with central-path points sampled at (a subset of)
/// its recorded times.
pub fn tracking_report(traj: &Trajectory, path: &[CentralPathPoint]) -> Result<TrackingReport> {
    if path.is_empty() {
        return Err(Error::param("central path is empty"));
    }
    let mut samples = Vec::with_capacity(path.len());
    let mut k = 0;
    for pt in path {
        let t = pt
            .t
            .ok_or_else(|| Error::param("central-path point carries no time"))?;
        while k < traj.times.len() && !same_time(traj.times[k], t) && traj.times[k] < t {
            k += 1;
        }
        if k == traj.times.len() || !same_time(traj.times[k], t) {
            return Err(Error::param(format!(
                "central-path time {t} is not on the trajectory grid"
            )));
        }
        let x = &traj.states[k];
        if x.len() != pt.xbar.len() {
            return Err(Error::param("path and trajectory dimensions differ"));
        }
        let gap = dist(x, &pt.xbar);
        let lyapunov_residual = traj.aux_points.as_ref().map(|aux| {
            let p = &aux[k];
            let d = &traj.diagnostics[k];
            let xdot = &traj.velocities[k];
            let diff: Vec<f64> = x.iter().zip(&pt.xbar).map(|(a, b)| a - b).collect();
            let lhs = dot(&diff, xdot);
            let rhs = (d.lambda * d.lipschitz - 1.0) * dist(x, p).powi(2)
                - d.lambda * d.eps * dist(p, &pt.xbar).powi(2);
            lhs - rhs
        });
        samples.push(TrackingSample {
            t,
            theta: 0.5 * gap * gap,
            gap,
            lyapunov_residual,
        });
    }
    let mut burn_in = samples.len().saturating_sub(1);
    while burn_in > 0 && samples[burn_in].theta <= samples[burn_in - 1].theta + THETA_SLACK {
        burn_in -= 1;
    }
    let lyapunov_fraction = traj.aux_points.as_ref().map(|_| {
        let ok = samples
            .iter()
            .filter(|s| s.lyapunov_residual.is_some_and(|r| r <= LYAPUNOV_SLACK))
            .count();
        ok as f64 / samples.len() as f64
    });
    Ok(TrackingReport {
        final_gap: samples.last().map_or(0.0, |s| s.gap),
        samples,
        burn_in,
        lyapunov_fraction,
    })
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}
