//! Total-variation imaging problems: denoising (dual and saddle-point forms)
//! and deconvolution (explicit and split-dual forms).
//!
//! Images are row-major. Gradients are stored as interleaved
//! `(horizontal, vertical)` pairs per pixel.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_dim, invalid, Result};
use crate::linops::{op_norm, vector, CsrMatrix, LinearMap};
use crate::operators::{
    DeconvGradient, DualBallProjection, DualRofGradient, L2DataProx, ProductResolvent, SplitDualQProx,
    ZeroResolvent,
};
use crate::primal_dual::SaddleProblem;
use crate::splitting::MonotonePair;

/// Bound on `‖∇‖²` over all grid sizes.
pub const GRAD_NORM_SQ_BOUND: f64 = 8.0;

/// Feasibility tolerance for dual variables.
const BALL_TOL: f64 = 1e-12;

/// Grayscale image.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("image dimensions must be positive"));
        }
        check_dim(width * height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, pixels: vec![value; width * height] }
    }

    /// Piecewise-constant test scene (rectangle, disc, bar) on a smooth ramp.
    pub fn synthetic_shapes(width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        let mut pixels = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                let (x, y) = ((j as f64 + 0.5) / w, (i as f64 + 0.5) / h);
                let mut v = 0.15 + 0.2 * x;
                if (0.15..0.55).contains(&x) && (0.2..0.45).contains(&y) {
                    v = 0.85;
                }
                if (x - 0.65).powi(2) + (y - 0.65).powi(2) < 0.2f64.powi(2) {
                    v = 0.5;
                }
                if (0.25..0.32).contains(&x) && (0.55..0.9).contains(&y) {
                    v = 0.95;
                }
                pixels.push(v);
            }
        }
        Self { width, height, pixels }
    }

    /// Copy with additive Gaussian noise of standard deviation `sigma`.
    pub fn with_noise(&self, sigma: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, sigma).map_err(|e| invalid(format!("noise level: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels = self.pixels.iter().map(|p| p + normal.sample(&mut rng)).collect();
        Ok(Self { pixels, ..*self })
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(invalid(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let pixels = (y0..y0 + height)
            .flat_map(|i| self.pixels[i * self.width + x0..i * self.width + x0 + width].iter().copied())
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Convolution kernel with odd dimensions, anchored at its center.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub width: usize,
    pub height: usize,
    /// Row-major taps.
    pub taps: Vec<f64>,
}

impl Kernel {
    pub fn new(width: usize, height: usize, taps: Vec<f64>) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(invalid(format!("kernel dimensions must be odd, got {width}x{height}")));
        }
        check_dim(width * height, taps.len())?;
        if !vector::all_finite(&taps) {
            return Err(invalid("kernel taps must be finite"));
        }
        Ok(Self { width, height, taps })
    }

    pub fn delta() -> Self {
        Self { width: 1, height: 1, taps: vec![1.0] }
    }

    /// Normalized box filter.
    pub fn boxcar(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![1.0 / (width * height) as f64; width * height])
    }

    /// Normalized line of `size` samples through the center at `angle_deg`
    /// degrees from the horizontal, on a `size × size` grid.
    pub fn motion(size: usize, angle_deg: f64) -> Result<Self> {
        if size % 2 == 0 {
            return Err(invalid(format!("kernel size must be odd, got {size}")));
        }
        let c = (size / 2) as f64;
        let (s, co) = angle_deg.to_radians().sin_cos();
        let mut taps = vec![0.0; size * size];
        for k in 0..size {
            let t = k as f64 - c;
            let row = (c - t * s).round().clamp(0.0, 2.0 * c) as usize;
            let col = (c + t * co).round().clamp(0.0, 2.0 * c) as usize;
            taps[row * size + col] += 1.0;
        }
        taps.iter_mut().for_each(|v| *v /= size as f64);
        Self::new(size, size, taps)
    }

    pub fn tap(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.width + col]
    }
}

/// Boundary rule of [`conv_op`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    #[default]
    Replicate,
    Zero,
}

/// Forward differences with Neumann boundary, `ℝ^{wh} → ℝ^{2wh}`.
pub fn grad_op(width: usize, height: usize) -> LinearMap {
    let n = width * height;
    let mut trips = Vec::with_capacity(4 * n);
    for i in 0..height {
        for j in 0..width {
            let p = i * width + j;
            if j + 1 < width {
                trips.push((2 * p, p, -1.0));
                trips.push((2 * p, p + 1, 1.0));
            }
            if i + 1 < height {
                trips.push((2 * p + 1, p, -1.0));
                trips.push((2 * p + 1, p + width, 1.0));
            }
        }
    }
    LinearMap::sparse(CsrMatrix::from_triplets(2 * n, n, &trips))
}

/// Exact `‖∇‖` of [`grad_op`]: `√(4 sin²(π(w−1)/2w) + 4 sin²(π(h−1)/2h))`.
pub fn grad_norm(width: usize, height: usize) -> f64 {
    let path = |n: usize| {
        let t = std::f64::consts::PI * (n as f64 - 1.0) / (2.0 * n as f64);
        4.0 * t.sin().powi(2)
    };
    (path(width) + path(height)).sqrt()
}

/// 2-D convolution `h * u` as a sparse map.
pub fn conv_op(width: usize, height: usize, h: &Kernel, boundary: Boundary) -> Result<LinearMap> {
    if h.width > width || h.height > height {
        return Err(invalid(format!(
            "kernel {}x{} larger than image {width}x{height}",
            h.width, h.height
        )));
    }
    let (cr, cc) = ((h.height / 2) as isize, (h.width / 2) as isize);
    let mut trips = Vec::with_capacity(width * height * h.taps.len());
    for i in 0..height as isize {
        for j in 0..width as isize {
            let row = (i * width as isize + j) as usize;
            for a in 0..h.height as isize {
                for b in 0..h.width as isize {
                    let v = h.tap(a as usize, b as usize);
                    if v == 0.0 {
                        continue;
                    }
                    let (mut si, mut sj) = (i - (a - cr), j - (b - cc));
                    let inside = (0..height as isize).contains(&si) && (0..width as isize).contains(&sj);
                    match boundary {
                        Boundary::Zero if !inside => continue,
                        _ => {
                            si = si.clamp(0, height as isize - 1);
                            sj = sj.clamp(0, width as isize - 1);
                        }
                    }
                    trips.push((row, (si * width as isize + sj) as usize, v));
                }
            }
        }
    }
    let n = width * height;
    Ok(LinearMap::sparse(CsrMatrix::from_triplets(n, n, &trips)))
}

/// Isotropic total variation `Σ_pixels |(∇u)_pixel|₂`.
pub fn total_variation(grad: &LinearMap, u: &[f64]) -> f64 {
    grad.apply(u).chunks_exact(2).map(|g| g[0].hypot(g[1])).sum()
}

fn dual_feasible(p: &[f64]) -> bool {
    p.chunks_exact(2).all(|q| q[0].hypot(q[1]) <= 1.0 + BALL_TOL)
}

/// Dual denoising problem `min_p ½‖λf − ∇ᵀp‖² + I_P(p)`.
#[derive(Clone)]
pub struct RofDual {
    pub pair: MonotonePair,
    pub grad: LinearMap,
    pub f: Vec<f64>,
    pub lambda: f64,
}

impl RofDual {
    /// `u(p) = f − ∇ᵀp/λ`
    pub fn recover_u(&self, p: &[f64]) -> Vec<f64> {
        let div = self.grad.adjoint_apply(p);
        self.f.iter().zip(div).map(|(f, d)| f - d / self.lambda).collect()
    }

    /// `Q(p) = ½‖λf − ∇ᵀp‖²`
    pub fn objective(&self, p: &[f64]) -> f64 {
        let div = self.grad.adjoint_apply(p);
        0.5 * self.f.iter().zip(div).map(|(f, d)| (self.lambda * f - d).powi(2)).sum::<f64>()
    }

    pub fn lipschitz(&self) -> f64 {
        GRAD_NORM_SQ_BOUND
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("lambda must be positive, got {lambda}")))
    }
}

pub fn build_rof_dual(f: &ImageGrid, lambda: f64) -> Result<RofDual> {
    check_lambda(lambda)?;
    let grad = grad_op(f.width, f.height);
    let a = Arc::new(DualBallProjection { pairs: f.len() });
    let b = Arc::new(DualRofGradient::new(grad.clone(), f.pixels.clone(), lambda, GRAD_NORM_SQ_BOUND)?);
    Ok(RofDual { pair: MonotonePair::new(a, b)?, grad, f: f.pixels.clone(), lambda })
}

/// `min_u max_p ⟨∇u, p⟩ + λ/2‖u − f‖² − I_P(p)`.
pub fn build_rof_saddle(f: &ImageGrid, lambda: f64) -> Result<SaddleProblem> {
    check_lambda(lambda)?;
    let grad = grad_op(f.width, f.height);
    Ok(SaddleProblem::new(
        grad,
        Arc::new(L2DataProx { f: f.pixels.clone(), lambda }),
        Arc::new(DualBallProjection { pairs: f.len() }),
    )?
    .with_k_norm(grad_norm(f.width, f.height)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeconvVariant {
    /// `K = ∇`, `G = 0`, `Q(u) = λ/2‖Hu − f‖²`.
    Explicit,
    /// `K = (∇; −H)`, `G = Q = 0`, `F*(p, q) = I_P(p) + ‖q‖²/(2λ) − ⟨f, q⟩`.
    SplitDual,
}

/// Deconvolution problem with the blur operator kept for energies.
#[derive(Clone, Debug)]
pub struct Deconv {
    pub saddle: SaddleProblem,
    pub h: LinearMap,
    /// Estimate of `‖H‖`.
    pub h_norm: f64,
}

pub fn build_deconv(
    f: &ImageGrid,
    h: &Kernel,
    lambda: f64,
    variant: DeconvVariant,
    boundary: Boundary,
) -> Result<Deconv> {
    check_lambda(lambda)?;
    let n = f.len();
    let grad = grad_op(f.width, f.height);
    let g_norm = grad_norm(f.width, f.height);
    let h_op = conv_op(f.width, f.height, h, boundary)?;
    let h_norm = op_norm(&h_op);
    let saddle = match variant {
        DeconvVariant::Explicit => {
            let l_q = lambda * h_norm * h_norm;
            let grad_q = DeconvGradient::new(h_op.clone(), f.pixels.clone(), lambda, l_q)?;
            SaddleProblem::new(grad, Arc::new(ZeroResolvent { dim: n }), Arc::new(DualBallProjection { pairs: n }))?
                .with_q(Arc::new(grad_q), l_q)?
                .with_k_norm(g_norm)
        }
        DeconvVariant::SplitDual => {
            let k = LinearMap::vstack(vec![grad, h_op.scaled(-1.0)])?;
            let fstar = ProductResolvent::new(vec![
                Arc::new(DualBallProjection { pairs: n }),
                Arc::new(SplitDualQProx { f: f.pixels.clone(), lambda }),
            ]);
            SaddleProblem::new(k, Arc::new(ZeroResolvent { dim: n }), Arc::new(fstar))?
                .with_k_norm((g_norm * g_norm + h_norm * h_norm).sqrt())
        }
    };
    Ok(Deconv { saddle, h: h_op, h_norm })
}

/// Primal, dual and gap values of an iterate. `dual` is `-∞` for an
/// infeasible dual variable and absent when no dual value is available.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Energies {
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
}

/// Energy evaluation for the imaging problems.
#[derive(Clone, Debug)]
pub enum EnergyModel {
    /// `E(u) = TV(u) + λ/2‖u − f‖²`, `D(p) = λ/2‖f‖² − ‖∇ᵀp − λf‖²/(2λ)`.
    Denoise { grad: LinearMap, f: Vec<f64>, lambda: f64 },
    /// `E(u) = TV(u) + λ/2‖Hu − f‖²`; the gap is taken against `reference`.
    Deconv { grad: LinearMap, h: LinearMap, f: Vec<f64>, lambda: f64, reference: Option<f64> },
}

impl EnergyModel {
    pub fn denoise(f: &ImageGrid, lambda: f64) -> Self {
        EnergyModel::Denoise { grad: grad_op(f.width, f.height), f: f.pixels.clone(), lambda }
    }

    pub fn deconv(f: &ImageGrid, h: LinearMap, lambda: f64, reference: Option<f64>) -> Self {
        EnergyModel::Deconv { grad: grad_op(f.width, f.height), h, f: f.pixels.clone(), lambda, reference }
    }

    pub fn primal(&self, u: &[f64]) -> f64 {
        match self {
            EnergyModel::Denoise { grad, f, lambda } => {
                total_variation(grad, u) + 0.5 * lambda * vector::norm_sq(&vector::sub(u, f))
            }
            EnergyModel::Deconv { grad, h, f, lambda, .. } => {
                total_variation(grad, u) + 0.5 * lambda * vector::norm_sq(&vector::sub(&h.apply(u), f))
            }
        }
    }

    /// Dual value at the ball component `p` (the first `2·pixels` entries of
    /// the dual variable).
    pub fn dual(&self, p: &[f64]) -> Option<f64> {
        match self {
            EnergyModel::Denoise { grad, f, lambda } => {
                let p = &p[..grad.dim_out()];
                if !dual_feasible(p) {
                    return Some(f64::NEG_INFINITY);
                }
                let div = grad.adjoint_apply(p);
                let r: f64 = div.iter().zip(f).map(|(d, f)| (d - lambda * f).powi(2)).sum();
                Some(0.5 * lambda * vector::norm_sq(f) - r / (2.0 * lambda))
            }
            EnergyModel::Deconv { reference, .. } => *reference,
        }
    }

    pub fn evaluate(&self, u: &[f64], p: &[f64]) -> Energies {
        let primal = self.primal(u);
        let dual = self.dual(p);
        Energies { primal, dual, gap: dual.map(|d| primal - d) }
    }
}

/// Free-function form of [`EnergyModel::evaluate`].
pub fn energies(model: &EnergyModel, u: &[f64], p: &[f64]) -> Energies {
    model.evaluate(u, p)
}
