//! Experiment configuration, the run pipeline, and artifact files (CSV, PGM,
//! JSON).
//!
//! Trajectory CSV columns are `t,h,x_norm,gap_to_path,B1_norm,psi_sum,p_norm`;
//! cells that do not apply to the run are left empty. Path CSV columns are
//! `t,eps,beta,xbar_norm,B_norm,residual,iterations`. Every file is written to
//! a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::applications::{self, DeblurInstance, Image, Shape};
use crate::central_path::{central_path, CentralPathPoint};
use crate::dynamics::{
    check_mode_compatibility, ergodic_average, integrate_mode, tracking_report, IntegratorSpec, Trajectory,
};
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::operators::{AffineMap, LipschitzOp, MaxMonotone, PenaltyOp, ProblemInstance, ZeroSet};
use crate::schedules::{validate_schedule, Mode, Moduli, Polynomial, Schedule, ValidationReport};

pub const TRAJECTORY_COLUMNS: [&str; 7] = ["t", "h", "x_norm", "gap_to_path", "B1_norm", "psi_sum", "p_norm"];
pub const PATH_COLUMNS: [&str; 7] = ["t", "eps", "beta", "xbar_norm", "B_norm", "residual", "iterations"];
pub const ISNR_COLUMNS: [&str; 3] = ["step", "t", "isnr"];

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// States up to this length are copied into the JSON report.
const REPORT_STATE_MAX: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub schedule: ScheduleSpec,
    /// Shorthand for a uniform grid with `h = 1` when `integrator` is absent.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default, rename = "T")]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub integrator: Option<IntegratorSpec>,
    /// Defaults to all ones for small instances and `(b, 0, 0)` for deblurring.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Sample the central path at the recorded times (small instances only).
    #[serde(default)]
    pub central_path: Option<bool>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSpec {
    Canonical(String),
    Deblur { deblur: DeblurSpec },
    Custom { custom: CustomInstance },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeblurSpec {
    #[serde(default)]
    pub image: ImageSource,
    #[serde(default = "default_side")]
    pub rows: usize,
    #[serde(default = "default_side")]
    pub cols: usize,
    #[serde(default = "default_square")]
    pub square: usize,
    #[serde(default = "default_kernel_size")]
    pub kernel_size: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

fn default_side() -> usize {
    64
}
fn default_square() -> usize {
    8
}
fn default_kernel_size() -> usize {
    9
}
fn default_sigma() -> f64 {
    4.0
}
fn default_noise() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageSource {
    #[default]
    Checkerboard,
    Disk,
    Ramp,
    /// Binary PGM file; overrides `rows` and `cols`.
    Pgm(PathBuf),
}

/// Small instance assembled from operator descriptors. Infinite box bounds are
/// written as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomInstance {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub a: OperatorSpec,
    pub d: AffineSpec,
    pub c: SetSpec,
}

fn default_name() -> String {
    "custom".into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    #[default]
    Zero,
    BoxNormalCone {
        lo: Vec<Option<f64>>,
        hi: Vec<Option<f64>>,
    },
    L1 {
        weight: f64,
    },
    CustomAffine {
        matrix: Vec<Vec<f64>>,
        shift: Vec<f64>,
    },
}

/// `x ↦ Mx + q` given by rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    pub matrix: Vec<Vec<f64>>,
    pub shift: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Box { lo: Vec<Option<f64>>, hi: Vec<Option<f64>> },
    HalfSpace { normal: Vec<f64>, offset: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Polynomial(Polynomial),
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<Schedule> {
        match self {
            ScheduleSpec::Polynomial(p) => p.build(),
        }
    }
}

/// File names relative to the output directory; `None` skips the artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "some_trajectory")]
    pub trajectory_csv: Option<String>,
    #[serde(default = "some_path")]
    pub path_csv: Option<String>,
    #[serde(default = "some_report")]
    pub report_json: Option<String>,
    /// Deblurring only: `original.pgm`, `degraded.pgm`, `restored.pgm`,
    /// `degradation.json` and `isnr.csv`.
    #[serde(default = "yes")]
    pub images: bool,
    #[serde(default)]
    pub checkpoint_json: Option<String>,
}

fn some_trajectory() -> Option<String> {
    Some("trajectory.csv".into())
}
fn some_path() -> Option<String> {
    Some("path.csv".into())
}
fn some_report() -> Option<String> {
    Some("report.json".into())
}
fn yes() -> bool {
    true
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            trajectory_csv: some_trajectory(),
            path_csv: some_path(),
            report_json: some_report(),
            images: true,
            checkpoint_json: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("experiment config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// The integrator, from `integrator` or the `mode`/`T` shorthand.
    pub fn integrator_spec(&self) -> Result<IntegratorSpec> {
        match (&self.integrator, self.mode, self.t_end) {
            (Some(spec), mode, t) => {
                if mode.is_some_and(|m| m != spec.mode) {
                    return Err(Error::Parse(format!(
                        "field `mode` ({}) disagrees with `integrator.mode` ({})",
                        mode.unwrap(),
                        spec.mode
                    )));
                }
                if t.is_some_and(|t| t != spec.grid.t_end()) {
                    return Err(Error::Parse("field `T` disagrees with `integrator.grid.T`".into()));
                }
                Ok(spec.clone())
            }
            (None, Some(mode), Some(t)) => Ok(IntegratorSpec::uniform(mode, 1.0, t)),
            (None, None, _) => Err(Error::Parse("missing field `mode` (or `integrator`)".into())),
            (None, Some(_), None) => Err(Error::Parse("missing field `T` (or `integrator`)".into())),
        }
    }
}

/// An instance materialized from its spec.
pub enum BuiltInstance {
    Small(Box<ProblemInstance>),
    Deblur(Box<DeblurInstance>),
}

impl BuiltInstance {
    pub fn problem(&self) -> &ProblemInstance {
        match self {
            BuiltInstance::Small(p) => p,
            BuiltInstance::Deblur(d) => &d.problem,
        }
    }

    pub fn default_start(&self) -> Vec<f64> {
        match self {
            BuiltInstance::Small(p) => vec![1.0; p.dim()],
            BuiltInstance::Deblur(d) => d.initial_state(),
        }
    }
}

fn bounds(v: &[Option<f64>], missing: f64) -> Vec<f64> {
    v.iter().map(|b| b.unwrap_or(missing)).collect()
}

fn matrix(rows: &[Vec<f64>], shift: &[f64]) -> Result<AffineMap> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::param("affine matrix must be square"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    AffineMap::new(DMatrix::from_row_slice(n, n, &flat), DVector::from_column_slice(shift))
}

impl OperatorSpec {
    pub fn build(&self) -> Result<MaxMonotone> {
        match self {
            OperatorSpec::Zero => Ok(MaxMonotone::Zero),
            OperatorSpec::BoxNormalCone { lo, hi } => MaxMonotone::normal_cone_of_box(
                bounds(lo, f64::NEG_INFINITY),
                bounds(hi, f64::INFINITY),
            ),
            OperatorSpec::L1 { weight } => MaxMonotone::l1(*weight),
            OperatorSpec::CustomAffine { matrix: m, shift } => MaxMonotone::affine(matrix(m, shift)?),
        }
    }
}

impl SetSpec {
    pub fn build(&self) -> Result<ZeroSet> {
        match self {
            SetSpec::Box { lo, hi } => ZeroSet::boxed(bounds(lo, f64::NEG_INFINITY), bounds(hi, f64::INFINITY)),
            SetSpec::HalfSpace { normal, offset } => ZeroSet::half_space(normal.clone(), *offset),
        }
    }
}

impl CustomInstance {
    pub fn build(&self) -> Result<ProblemInstance> {
        ProblemInstance::new(
            self.name.clone(),
            self.a.build()?,
            LipschitzOp::affine(matrix(&self.d.matrix, &self.d.shift)?)?,
            PenaltyOp::distance_gradient(self.c.build()?)?,
        )
    }
}

impl DeblurSpec {
    pub fn build(&self, seed: u64) -> Result<DeblurInstance> {
        let img = match &self.image {
            ImageSource::Checkerboard => applications::checkerboard(self.rows, self.cols, self.square)?,
            ImageSource::Disk => applications::disk(self.rows, self.cols)?,
            ImageSource::Ramp => applications::ramp(self.rows, self.cols)?,
            ImageSource::Pgm(path) => read_pgm(path)?,
        };
        applications::build_tv_deblur(&img, self.kernel_size, self.sigma, self.noise_std, seed)
    }
}

impl InstanceSpec {
    pub fn build(&self, seed: u64) -> Result<BuiltInstance> {
        match self {
            InstanceSpec::Canonical(name) => Ok(BuiltInstance::Small(Box::new(applications::build_canonical(name)?))),
            InstanceSpec::Deblur { deblur } => Ok(BuiltInstance::Deblur(Box::new(deblur.build(seed)?))),
            InstanceSpec::Custom { custom } => Ok(BuiltInstance::Small(Box::new(custom.build()?))),
        }
    }
}

/// Summary written to `report.json` and returned to the caller.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub mode: Mode,
    pub exit_code: i32,
    pub validation: ValidationReport,
    pub error: Option<String>,
    pub steps: Option<usize>,
    pub final_time: Option<f64>,
    pub final_x_norm: Option<f64>,
    pub final_state: Option<Vec<f64>>,
    pub final_b1_norm: Option<f64>,
    pub final_psi_sum: Option<f64>,
    pub final_gap: Option<f64>,
    pub burn_in: Option<usize>,
    pub lyapunov_fraction: Option<f64>,
    pub ergodic_average: Option<Vec<f64>>,
    pub final_isnr: Option<f64>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    fn new(instance: String, mode: Mode, validation: ValidationReport) -> Self {
        Self {
            instance,
            mode,
            exit_code: EXIT_OK,
            validation,
            error: None,
            steps: None,
            final_time: None,
            final_x_norm: None,
            final_state: None,
            final_b1_norm: None,
            final_psi_sum: None,
            final_gap: None,
            burn_in: None,
            lyapunov_fraction: None,
            ergodic_average: None,
            final_isnr: None,
            artifacts: Vec::new(),
        }
    }
}

/// Shared front half of `run` and `validate`: parse-level checks, instance
/// construction, precondition checks and schedule validation.
pub struct Prepared {
    pub instance: BuiltInstance,
    pub schedule: Schedule,
    pub spec: IntegratorSpec,
    pub x0: Vec<f64>,
    pub validation: ValidationReport,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let spec = config.integrator_spec()?;
    let schedule = config.schedule.build()?;
    let instance = config.instance.build(config.seed)?;
    let prob = instance.problem();
    let x0 = config.x0.clone().unwrap_or_else(|| instance.default_start());
    check_mode_compatibility(spec.mode, prob, &x0)?;
    let moduli = Moduli {
        eta: prob.d.eta(),
        mu: prob.b1.mu(),
    };
    let validation = validate_schedule(&schedule, spec.mode, moduli);
    Ok(Prepared {
        instance,
        schedule,
        spec,
        x0,
        validation,
    })
}

/// Runs the full pipeline and writes the declared artifacts into `out_dir`.
/// Configuration, precondition and I/O problems are returned as errors;
/// schedule rejection and divergence are reported through `exit_code`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let prep = prepare(config)?;
    fs::create_dir_all(out_dir)?;
    let prob = prep.instance.problem();
    let mut report = RunReport::new(prob.name.clone(), prep.spec.mode, prep.validation.clone());

    if !prep.validation.overall {
        let failed: Vec<&str> = prep.validation.failed().map(|c| c.name.as_str()).collect();
        report.exit_code = EXIT_VALIDATION;
        report.error = Some(format!("schedule validation failed: {}", failed.join(", ")));
        write_report(config, out_dir, &mut report)?;
        return Ok(report);
    }

    let traj = match integrate_mode(prob, &prep.schedule, &prep.x0, &prep.spec) {
        Ok(t) => t,
        Err(e @ Error::Divergence { .. }) => {
            report.exit_code = EXIT_DIVERGENCE;
            report.error = Some(e.to_string());
            write_report(config, out_dir, &mut report)?;
            return Ok(report);
        }
        Err(e) => return Err(e),
    };

    let want_path = config
        .central_path
        .unwrap_or(matches!(prep.instance, BuiltInstance::Small(_)));
    let path = if want_path {
        Some(central_path(prob, &prep.schedule, &traj.times, 1e-12)?)
    } else {
        None
    };
    let tracking = path.as_deref().map(|p| tracking_report(&traj, p)).transpose()?;

    let last = traj.diagnostics.last().expect("final state is always recorded");
    report.steps = Some(traj.steps);
    report.final_time = Some(traj.final_time());
    report.final_x_norm = Some(norm(traj.final_state()));
    report.final_b1_norm = Some(last.b1_norm);
    report.final_psi_sum = last.psi_sum;
    if prob.dim() <= REPORT_STATE_MAX {
        report.final_state = Some(traj.final_state().to_vec());
        report.ergodic_average = Some(ergodic_average(&traj, &prep.schedule)?);
    }
    if let Some(t) = &tracking {
        report.final_gap = Some(t.final_gap);
        report.burn_in = Some(t.burn_in);
        report.lyapunov_fraction = t.lyapunov_fraction;
    }

    let gaps: Option<Vec<f64>> = tracking.as_ref().map(|t| t.samples.iter().map(|s| s.gap).collect());
    if let Some(name) = &config.outputs.trajectory_csv {
        let p = out_dir.join(name);
        emit_csv(&p, &TRAJECTORY_COLUMNS, &trajectory_rows(&traj, gaps.as_deref()))?;
        report.artifacts.push(name.clone());
    }
    if let (Some(name), Some(path)) = (&config.outputs.path_csv, &path) {
        let p = out_dir.join(name);
        emit_csv(&p, &PATH_COLUMNS, &path_rows(path))?;
        report.artifacts.push(name.clone());
    }
    if let Some(name) = &config.outputs.checkpoint_json {
        let text = serde_json::to_string_pretty(&traj.checkpoint()).expect("checkpoint serializes");
        write_atomic(&out_dir.join(name), text.as_bytes())?;
        report.artifacts.push(name.clone());
    }
    if let BuiltInstance::Deblur(inst) = &prep.instance {
        report.final_isnr = deblur_artifacts(inst, &traj, config.outputs.images, out_dir, &mut report.artifacts)?;
    }
    write_report(config, out_dir, &mut report)?;
    Ok(report)
}

fn deblur_artifacts(
    inst: &DeblurInstance,
    traj: &Trajectory,
    images: bool,
    out_dir: &Path,
    artifacts: &mut Vec<String>,
) -> Result<Option<f64>> {
    let Some(original) = &inst.original else {
        return Ok(None);
    };
    let mut rows = Vec::with_capacity(traj.states.len());
    for (k, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        let v = applications::isnr(original, &inst.observed, &inst.restored(x)?)?;
        rows.push(vec![Some(traj.recorded_step(k) as f64), Some(*t), Some(v)]);
    }
    let last = rows.last().and_then(|r| r[2]);
    if images {
        let restored = inst.restored(traj.final_state())?;
        let files: [(&str, &Image); 3] = [
            ("original.pgm", original),
            ("degraded.pgm", &inst.observed),
            ("restored.pgm", &restored),
        ];
        for (name, img) in files {
            write_pgm(&out_dir.join(name), img)?;
            artifacts.push(name.into());
        }
        let meta = serde_json::to_string_pretty(&inst.meta).expect("metadata serializes");
        write_atomic(&out_dir.join("degradation.json"), meta.as_bytes())?;
        artifacts.push("degradation.json".into());
        emit_csv(&out_dir.join("isnr.csv"), &ISNR_COLUMNS, &rows)?;
        artifacts.push("isnr.csv".into());
    }
    Ok(last)
}

fn write_report(config: &ExperimentConfig, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    if let Some(name) = &config.outputs.report_json {
        report.artifacts.push(name.clone());
        let text = serde_json::to_string_pretty(&*report).expect("report serializes");
        write_atomic(&out_dir.join(name), text.as_bytes())?;
    }
    Ok(())
}

fn trajectory_rows(traj: &Trajectory, gaps: Option<&[f64]>) -> Vec<Vec<Option<f64>>> {
    (0..traj.times.len())
        .map(|k| {
            let d = &traj.diagnostics[k];
            vec![
                Some(traj.times[k]),
                Some(traj.step_sizes[k]),
                Some(norm(&traj.states[k])),
                gaps.map(|g| g[k]),
                Some(d.b1_norm),
                d.psi_sum,
                traj.aux_points.as_ref().map(|p| norm(&p[k])),
            ]
        })
        .collect()
}

fn path_rows(path: &[CentralPathPoint]) -> Vec<Vec<Option<f64>>> {
    path.iter()
        .map(|p| {
            vec![
                p.t,
                Some(p.eps),
                Some(p.beta),
                Some(norm(&p.xbar)),
                Some(p.b_norm),
                Some(p.residual),
                Some(p.iterations as f64),
            ]
        })
        .collect()
}

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Writes a CSV with the given header; `None` cells are left empty. Numbers
/// use the shortest representation that parses back to the same `f64`, in
/// exponent form outside `[1e-4, 1e15)`.
pub fn emit_csv(path: &Path, header: &[&str], rows: &[Vec<Option<f64>>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::param(format!(
                "CSV row {i} has {} cells, header has {}",
                row.len(),
                header.len()
            )));
        }
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            if let Some(v) = cell {
                let a = v.abs();
                if a == 0.0 || (1e-4..1e15).contains(&a) {
                    write!(out, "{v}")
                } else {
                    write!(out, "{v:e}")
                }
                .expect("writing to a string");
            }
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Encodes an image as binary PGM (P5, maxval 255), values rounded to the
/// nearest level.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend(img.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    write_atomic(path, &encode_pgm(img))
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}

/// Parses binary PGM with maxval 255; header comments (`#`) are skipped.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    match magic.as_str() {
        "P5" => {}
        "P2" => return Err(Error::Unsupported("ASCII PGM (P2) is not supported; use binary P5".into())),
        other => return Err(Error::Parse(format!("not a PGM file (magic {other:?})"))),
    }
    let mut field = |name: &str| -> Result<usize> {
        let tok = header_token(bytes, &mut pos)?;
        tok.parse()
            .map_err(|_| Error::Parse(format!("PGM {name} is not a number: {tok:?}")))
    };
    let cols = field("width")?;
    let rows = field("height")?;
    let maxval = field("maxval")?;
    if maxval != 255 {
        return Err(Error::Unsupported(format!("PGM maxval {maxval}; only 255 is supported")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let shape = Shape::new(rows, cols)?;
    let data = bytes
        .get(pos..pos + shape.len())
        .ok_or_else(|| Error::Parse(format!("PGM raster truncated: expected {} bytes", shape.len())))?;
    Image::new(shape, data.iter().map(|&b| b as f64 / 255.0).collect())
}

fn header_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        match bytes.get(*pos) {
            None => return Err(Error::Parse("PGM header ended early".into())),
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    if *pos >= bytes.len() {
        return Err(Error::Parse("PGM header ended early".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}
