//! Instance builders: small analytic instances with known solution sets, the
//! primal-dual product-space construction, and total-variation deblurring.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    AffineMap, LipschitzOp, MaxMonotone, PenaltyOp, ProblemInstance, ScalarMap, VectorMap, ZeroSet,
};

pub const CANONICAL_NAMES: [&str; 5] = [
    "scalar",
    "segment",
    "shifted-segment",
    "skew-box",
    "sfbp-two-penalty",
];

/// Builds one of the analytic test instances:
///
/// | name | A | D | B | zer Φ |
/// |---|---|---|---|---|
/// | `scalar` | 0 | `x − 2` | `max(x, 0)` | `{0}` |
/// | `segment` | `N_{[0,2]²}` | 0 | `(0, y)` | `[0,2]×{0}` |
/// | `shifted-segment` | `N_{[1,2]×[0,2]}` | 0 | `(0, y)` | `[1,2]×{0}` |
/// | `skew-box` | 0 | `(y, −x)` | `Id − Π_{[−1,1]²}` | `{(0,0)}` |
/// | `sfbp-two-penalty` | 0 | `x − 3` | `max(x, 0)`, `B₂ = N_{x≤1}` | `{0}` |
pub fn build_canonical(name: &str) -> Result<ProblemInstance> {
    let inf = f64::INFINITY;
    let halfline = || ZeroSet::boxed(vec![-inf], vec![0.0]);
    let axis = || ZeroSet::boxed(vec![-inf, 0.0], vec![inf, 0.0]);
    match name {
        "scalar" => ProblemInstance::new(
            name,
            MaxMonotone::Zero,
            LipschitzOp::affine(AffineMap::from_rows(&[&[1.0]], &[-2.0])?)?,
            PenaltyOp::distance_gradient(halfline()?)?,
        ),
        "segment" | "shifted-segment" => {
            let lo0 = if name == "segment" { 0.0 } else { 1.0 };
            ProblemInstance::new(
                name,
                MaxMonotone::normal_cone_of_box(vec![lo0, 0.0], vec![2.0, 2.0])?,
                LipschitzOp::zero(2)?,
                PenaltyOp::distance_gradient(axis()?)?,
            )
        }
        "skew-box" => ProblemInstance::new(
            name,
            MaxMonotone::Zero,
            LipschitzOp::affine(AffineMap::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]], &[0.0, 0.0])?)?,
            PenaltyOp::distance_gradient(ZeroSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0])?)?,
        ),
        "sfbp-two-penalty" => {
            let psi1: ScalarMap = Arc::new(|x: &[f64]| 0.5 * x[0].max(0.0).powi(2));
            let psi2: ScalarMap = Arc::new(|x: &[f64]| if x[0] <= 1.0 { 0.0 } else { f64::INFINITY });
            ProblemInstance::new(
                name,
                MaxMonotone::Zero,
                LipschitzOp::affine(AffineMap::from_rows(&[&[1.0]], &[-3.0])?)?,
                PenaltyOp::distance_gradient(halfline()?)?,
            )?
            .with_second_penalty(MaxMonotone::normal_cone_of_box(vec![-inf], vec![1.0])?, psi1, psi2)
        }
        _ => Err(Error::param(format!(
            "unknown instance {name:?}; expected one of {}",
            CANONICAL_NAMES.join(", ")
        ))),
    }
}

/// Grid shape: `rows` is the first index `i`, `cols` the second index `j`;
/// storage is row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param("image dimensions must be positive"));
        }
        Ok(Self { rows, cols })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::param(format!(
                "{what} has {} entries, expected {}x{} = {}",
                v.len(),
                self.rows,
                self.cols,
                self.len()
            )));
        }
        Ok(())
    }
}

/// Gray-level image with intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub shape: Shape,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(shape: Shape, pixels: Vec<f64>) -> Result<Self> {
        shape.check(&pixels, "image")?;
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::param(format!("pixel value {p} outside [0, 1]")));
        }
        Ok(Self { shape, pixels })
    }

    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    /// Clamps into `[0, 1]` and wraps.
    pub fn from_clamped(shape: Shape, pixels: &[f64]) -> Result<Self> {
        Self::new(shape, pixels.iter().map(|p| p.clamp(0.0, 1.0)).collect())
    }
}

/// Alternating squares of side `square` pixels, values 0 and 1.
pub fn checkerboard(rows: usize, cols: usize, square: usize) -> Result<Image> {
    let shape = Shape::new(rows, cols)?;
    let sq = square.max(1);
    let px = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| ((i / sq + j / sq) % 2) as f64))
        .collect();
    Image::new(shape, px)
}

/// Bright disk of radius `0.3·min(rows, cols)` on a dark background.
pub fn disk(rows: usize, cols: usize) -> Result<Image> {
    let shape = Shape::new(rows, cols)?;
    let (ci, cj) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let rad = 0.3 * rows.min(cols) as f64;
    let px = (0..rows)
        .flat_map(|i| {
            (0..cols).map(move |j| {
                let d = ((i as f64 - ci).powi(2) + (j as f64 - cj).powi(2)).sqrt();
                if d <= rad {
                    0.9
                } else {
                    0.1
                }
            })
        })
        .collect();
    Image::new(shape, px)
}

/// Linear ramp from 0 (left column) to 1 (right column).
pub fn ramp(rows: usize, cols: usize) -> Result<Image> {
    let shape = Shape::new(rows, cols)?;
    let den = (cols.max(2) - 1) as f64;
    let px = (0..rows)
        .flat_map(|_| (0..cols).map(move |j| (j as f64 / den).min(1.0)))
        .collect();
    Image::new(shape, px)
}

/// Forward differences with Neumann boundary: `(L₁θ)ᵢⱼ = θᵢ₊₁,ⱼ − θᵢⱼ`
/// (zero on the last row) and `(L₂θ)ᵢⱼ = θᵢ,ⱼ₊₁ − θᵢⱼ` (zero on the last column).
pub fn discrete_gradient(theta: &[f64], shape: Shape) -> Result<(Vec<f64>, Vec<f64>)> {
    shape.check(theta, "theta")?;
    let mut u = vec![0.0; shape.len()];
    let mut v = vec![0.0; shape.len()];
    gradient_into(theta, shape, &mut u, &mut v);
    Ok((u, v))
}

/// `L*(u, v)`, the negative discrete divergence matching [`discrete_gradient`].
pub fn discrete_gradient_adjoint(u: &[f64], v: &[f64], shape: Shape) -> Result<Vec<f64>> {
    shape.check(u, "u")?;
    shape.check(v, "v")?;
    let mut out = vec![0.0; shape.len()];
    gradient_adjoint_into(u, v, shape, &mut out);
    Ok(out)
}

fn gradient_into(theta: &[f64], s: Shape, u: &mut [f64], v: &mut [f64]) {
    let (m, n) = (s.rows, s.cols);
    for i in 0..m {
        let row = i * n;
        for j in 0..n {
            let k = row + j;
            u[k] = if i + 1 < m { theta[k + n] - theta[k] } else { 0.0 };
            v[k] = if j + 1 < n { theta[k + 1] - theta[k] } else { 0.0 };
        }
    }
}

fn gradient_adjoint_into(u: &[f64], v: &[f64], s: Shape, out: &mut [f64]) {
    let (m, n) = (s.rows, s.cols);
    for i in 0..m {
        let row = i * n;
        for j in 0..n {
            let k = row + j;
            let mut acc = 0.0;
            if i > 0 {
                acc += u[k - n];
            }
            if i + 1 < m {
                acc -= u[k];
            }
            if j > 0 {
                acc += v[k - 1];
            }
            if j + 1 < n {
                acc -= v[k];
            }
            out[k] = acc;
        }
    }
}

/// Power iteration for `‖L‖² = λ_max(L*L)`.
pub fn gradient_norm_sq_estimate(shape: Shape, iterations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..shape.len()).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut u = vec![0.0; shape.len()];
    let mut v = vec![0.0; shape.len()];
    let mut y = vec![0.0; shape.len()];
    let mut est = 0.0;
    for _ in 0..iterations {
        let nx = crate::linalg::norm(&x);
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|e| *e /= nx);
        gradient_into(&x, shape, &mut u, &mut v);
        gradient_adjoint_into(&u, &v, shape, &mut y);
        est = crate::linalg::dot(&x, &y);
        std::mem::swap(&mut x, &mut y);
    }
    est
}

/// Square convolution kernel of odd side, weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub size: usize,
    /// Row-major `size × size` weights, centre at `(size/2, size/2)`.
    pub weights: Vec<f64>,
    /// 1-D factor `g` with `weights = g gᵀ`, when the kernel is separable.
    pub factor: Option<Vec<f64>>,
}

impl Kernel {
    pub fn identity() -> Self {
        Self {
            size: 1,
            weights: vec![1.0],
            factor: Some(vec![1.0]),
        }
    }

    /// Arbitrary nonnegative weights, normalized to sum one.
    pub fn from_weights(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::param(format!("kernel size must be odd, got {size}")));
        }
        if weights.len() != size * size || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::param("kernel needs size² nonnegative weights"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::param("kernel weights sum to zero"));
        }
        Ok(Self {
            size,
            weights: weights.into_iter().map(|w| w / total).collect(),
            factor: None,
        })
    }
}

/// Gaussian kernel `∝ exp(−(i² + j²)/(2σ²))` on `{−c..c}²`, `c = size/2`.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Kernel> {
    if size.is_multiple_of(2) {
        return Err(Error::param(format!("kernel size must be odd, got {size}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    let c = (size / 2) as i64;
    let g: Vec<f64> = (-c..=c)
        .map(|a| (-((a * a) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    let g: Vec<f64> = g.into_iter().map(|x| x / s).collect();
    let weights = g.iter().flat_map(|a| g.iter().map(move |b| a * b)).collect();
    Ok(Kernel {
        size,
        weights,
        factor: Some(g),
    })
}

/// Circular convolution `(Kx)ᵢⱼ = Σ w_{ab} x_{i−a, j−b}` (indices mod the
/// grid); the adjoint correlates with the same weights.
pub fn gaussian_blur(x: &[f64], shape: Shape, kernel: &Kernel, adjoint: bool) -> Result<Vec<f64>> {
    shape.check(x, "image")?;
    let mut out = vec![0.0; shape.len()];
    let mut tmp = vec![0.0; shape.len()];
    convolve_into(x, shape, kernel, adjoint, &mut out, &mut tmp);
    Ok(out)
}

/// Index offsets `(i − a) mod m` for `a ∈ {−c..c}` (or `i + a` for the adjoint),
/// precomputed per row so the inner loops avoid division.
fn wrap_table(m: usize, c: usize, adjoint: bool) -> Vec<usize> {
    let size = 2 * c + 1;
    let mut t = Vec::with_capacity(m * size);
    for i in 0..m {
        for k in 0..size {
            let a = k as i64 - c as i64;
            let idx = if adjoint { i as i64 + a } else { i as i64 - a };
            t.push(idx.rem_euclid(m as i64) as usize);
        }
    }
    t
}

fn convolve_into(x: &[f64], s: Shape, k: &Kernel, adjoint: bool, out: &mut [f64], tmp: &mut [f64]) {
    let (m, n) = (s.rows, s.cols);
    let c = k.size / 2;
    let size = k.size;
    let ti = wrap_table(m, c, adjoint);
    let tj = wrap_table(n, c, adjoint);
    match &k.factor {
        Some(g) => {
            // along j, then along i
            for i in 0..m {
                let row = i * n;
                for j in 0..n {
                    let idx = &tj[j * size..(j + 1) * size];
                    let mut acc = 0.0;
                    for b in 0..size {
                        acc += g[b] * x[row + idx[b]];
                    }
                    tmp[row + j] = acc;
                }
            }
            for i in 0..m {
                let idx = &ti[i * size..(i + 1) * size];
                let row = i * n;
                out[row..row + n].fill(0.0);
                for a in 0..size {
                    let src = idx[a] * n;
                    let w = g[a];
                    for j in 0..n {
                        out[row + j] += w * tmp[src + j];
                    }
                }
            }
        }
        None => {
            for i in 0..m {
                let ii = &ti[i * size..(i + 1) * size];
                for j in 0..n {
                    let jj = &tj[j * size..(j + 1) * size];
                    let mut acc = 0.0;
                    for a in 0..size {
                        let src = ii[a] * n;
                        for b in 0..size {
                            acc += k.weights[a * size + b] * x[src + jj[b]];
                        }
                    }
                    out[i * n + j] = acc;
                }
            }
        }
    }
}

/// Bounded linear map `ℝⁿ → ℝᵐ` with its adjoint.
#[derive(Clone)]
pub struct LinearOp {
    pub input_dim: usize,
    pub output_dim: usize,
    pub apply: VectorMap,
    pub adjoint: VectorMap,
    /// Upper bound on `‖L‖`.
    pub norm_bound: f64,
}

/// Product-space form of `min_θ max_y f(θ) + ⟨Lθ, y⟩ − g*(y)` subject to
/// `θ ∈ zer(B)`: state `(θ, y)`, `Ã = ∂f × ∂g*`, `D̃(θ, y) = (L*y, −Lθ)`,
/// `B̃(θ, y) = (Bθ, 0)`.
pub fn saddle_product(
    name: &str,
    f: MaxMonotone,
    gstar: MaxMonotone,
    coupling: LinearOp,
    penalty: PenaltyOp,
) -> Result<ProblemInstance> {
    let n = coupling.input_dim;
    let m = coupling.output_dim;
    if penalty.dim() != n {
        return Err(Error::param("penalty must act on the primal block"));
    }
    let a = MaxMonotone::product(vec![(n, f), (m, gstar)])?;
    let lop = coupling.clone();
    let d_map: VectorMap = Arc::new(move |x: &[f64], out: &mut [f64]| {
        let (theta, y) = x.split_at(n);
        let (o1, o2) = out.split_at_mut(n);
        (lop.adjoint)(y, o1);
        (lop.apply)(theta, o2);
        o2.iter_mut().for_each(|e| *e = -*e);
    });
    let eta = if coupling.norm_bound > 0.0 {
        1.0 / coupling.norm_bound
    } else {
        f64::INFINITY
    };
    let d = LipschitzOp::new(n + m, eta, false, d_map)?;
    let zero_set = penalty.zero_set().map(|z| match z {
        ZeroSet::Box { lo, hi } => {
            let mut lo = lo.clone();
            let mut hi = hi.clone();
            lo.extend(std::iter::repeat_n(f64::NEG_INFINITY, m));
            hi.extend(std::iter::repeat_n(f64::INFINITY, m));
            ZeroSet::Box { lo, hi }
        }
        ZeroSet::HalfSpace { normal, offset } => {
            let mut normal = normal.clone();
            normal.extend(std::iter::repeat_n(0.0, m));
            ZeroSet::HalfSpace {
                normal,
                offset: *offset,
            }
        }
    });
    let pen = penalty.clone();
    let b_map: VectorMap = Arc::new(move |x: &[f64], out: &mut [f64]| {
        let (o1, o2) = out.split_at_mut(n);
        pen.apply(&x[..n], o1);
        o2.fill(0.0);
    });
    let b = PenaltyOp::new(n + m, penalty.mu(), b_map, zero_set)?;
    ProblemInstance::new(name, a, d, b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationMeta {
    pub kernel_size: usize,
    pub sigma: f64,
    pub noise_std: f64,
    pub seed: u64,
    pub clipped_count: usize,
}

#[derive(Clone, Debug)]
pub struct DeblurInstance {
    /// State `(θ, u, v)` of length `3·rows·cols`.
    pub problem: ProblemInstance,
    pub kernel: Kernel,
    pub observed: Image,
    pub original: Option<Image>,
    pub meta: DegradationMeta,
}

impl DeblurInstance {
    pub fn shape(&self) -> Shape {
        self.observed.shape
    }

    /// Starting point `(b, 0, 0)`.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut x = vec![0.0; 3 * self.shape().len()];
        x[..self.shape().len()].copy_from_slice(&self.observed.pixels);
        x
    }

    /// `θ` block of a state, clamped into `[0, 1]` as an image.
    pub fn restored(&self, state: &[f64]) -> Result<Image> {
        Image::from_clamped(self.shape(), &state[..self.shape().len()])
    }
}

/// Zero-mean Gaussian noise from a seeded ChaCha stream.
pub fn gaussian_noise(len: usize, std: f64, seed: u64) -> Result<Vec<f64>> {
    if !(std >= 0.0) {
        return Err(Error::param(format!("noise std must be >= 0, got {std}")));
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::param(format!("noise std {std}: {e}")))?;
    Ok(normal.sample_iter(ChaCha8Rng::seed_from_u64(seed)).take(len).collect())
}

/// Blurs `original` with a `kernel_size`, `sigma` Gaussian, adds seeded noise
/// (clipped to `[0, 1]`) and assembles the TV deblurring system.
pub fn build_tv_deblur(
    original: &Image,
    kernel_size: usize,
    sigma: f64,
    noise_std: f64,
    seed: u64,
) -> Result<DeblurInstance> {
    let kernel = gaussian_kernel(kernel_size, sigma)?;
    build_tv_deblur_with_kernel(original, kernel, sigma, noise_std, seed)
}

pub fn build_tv_deblur_with_kernel(
    original: &Image,
    kernel: Kernel,
    sigma: f64,
    noise_std: f64,
    seed: u64,
) -> Result<DeblurInstance> {
    let original = Image::new(original.shape, original.pixels.clone())?;
    if !(noise_std >= 0.0) {
        return Err(Error::param(format!("noise_std must be >= 0, got {noise_std}")));
    }
    let shape = original.shape;
    let blurred = gaussian_blur(&original.pixels, shape, &kernel, false)?;
    let mut clipped_count = 0;
    let noisy: Vec<f64> = if noise_std > 0.0 {
        let noise = gaussian_noise(shape.len(), noise_std, seed)?;
        blurred
            .iter()
            .zip(&noise)
            .map(|(b, e)| {
                let y = b + e;
                if !(0.0..=1.0).contains(&y) {
                    clipped_count += 1;
                }
                y.clamp(0.0, 1.0)
            })
            .collect()
    } else {
        blurred.iter().map(|b| b.clamp(0.0, 1.0)).collect()
    };
    let observed = Image::new(shape, noisy)?;
    let problem = tv_problem(shape, &kernel, &observed.pixels)?;
    Ok(DeblurInstance {
        problem,
        meta: DegradationMeta {
            kernel_size: kernel.size,
            sigma,
            noise_std,
            seed,
            clipped_count,
        },
        kernel,
        observed,
        original: Some(original),
    })
}

fn tv_problem(shape: Shape, kernel: &Kernel, b: &[f64]) -> Result<ProblemInstance> {
    let n = shape.len();
    let grad: VectorMap = Arc::new(move |theta: &[f64], out: &mut [f64]| {
        let (u, v) = out.split_at_mut(n);
        gradient_into(theta, shape, u, v);
    });
    let grad_adj: VectorMap = Arc::new(move |y: &[f64], out: &mut [f64]| {
        let (u, v) = y.split_at(n);
        gradient_adjoint_into(u, v, shape, out);
    });
    let coupling = LinearOp {
        input_dim: n,
        output_dim: 2 * n,
        apply: grad,
        adjoint: grad_adj,
        norm_bound: 8f64.sqrt(),
    };
    let k = kernel.clone();
    let b = b.to_vec();
    // K*(Kθ − b); ‖K‖ ≤ 1 for a normalized nonnegative kernel, so μ = 1
    let fidelity: VectorMap = Arc::new(move |theta: &[f64], out: &mut [f64]| {
        let mut r = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        convolve_into(theta, shape, &k, false, &mut r, &mut tmp);
        for (ri, bi) in r.iter_mut().zip(&b) {
            *ri -= bi;
        }
        convolve_into(&r, shape, &k, true, out, &mut tmp);
    });
    let penalty = PenaltyOp::new(n, 1.0, fidelity, None)?;
    saddle_product(
        "tv-deblur",
        MaxMonotone::normal_cone_of_box(vec![0.0; n], vec![1.0; n])?,
        MaxMonotone::PairBallNormalCone,
        coupling,
        penalty,
    )
}

/// Cap returned when the restoration is exact.
pub const ISNR_CAP_DB: f64 = 300.0;

/// `10·log₁₀(‖x − y‖² / ‖x − x̂‖²)` for original `x`, degraded `y`, restored `x̂`.
pub fn isnr(original: &Image, degraded: &Image, restored: &Image) -> Result<f64> {
    if original.shape != degraded.shape || original.shape != restored.shape {
        return Err(Error::param("isnr needs images of matching shape"));
    }
    let num = sq_dist(&original.pixels, &degraded.pixels);
    let den = sq_dist(&original.pixels, &restored.pixels);
    if num == 0.0 {
        return Err(Error::UndefinedMetric(
            "degraded image equals the original".into(),
        ));
    }
    if den == 0.0 {
        return Ok(ISNR_CAP_DB);
    }
    Ok((10.0 * (num / den).log10()).min(ISNR_CAP_DB))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
