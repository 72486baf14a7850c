//! Resolvents (backward steps) and co-coercive forward operators.
//!
//! Every prox here accepts either a scalar step or a diagonal (entrywise)
//! step, so the same code serves scalar and diagonally preconditioned
//! primal-dual iterations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linops::{LinearMap, Metric};

/// Step size of a backward step: one scalar, or one positive value per entry.
#[derive(Clone, Copy, Debug)]
pub enum Step<'a> {
    Scalar(f64),
    Diagonal(&'a [f64]),
}

impl Step<'_> {
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Step::Scalar(s) => *s,
            Step::Diagonal(d) => d[i],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Step::Scalar(s) if *s > 0.0 && s.is_finite() => Ok(()),
            Step::Scalar(s) => Err(invalid(format!("step must be positive and finite, got {s}"))),
            Step::Diagonal(d) => {
                check_dim(dim, d.len())?;
                match d.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    Some(v) => Err(invalid(format!("diagonal step entries must be positive, got {v}"))),
                    None => Ok(()),
                }
            }
        }
    }

    fn slice(&self, range: std::ops::Range<usize>) -> Step<'_> {
        match self {
            Step::Scalar(s) => Step::Scalar(*s),
            Step::Diagonal(d) => Step::Diagonal(&d[range]),
        }
    }
}

/// Backward step `(Id + step·A)⁻¹` of a maximal monotone operator `A`.
pub trait Resolvent: Send + Sync {
    fn dim(&self) -> usize;

    /// `(Id + step·A)⁻¹ v`
    fn resolve(&self, v: &[f64], step: Step<'_>) -> Result<Vec<f64>>;

    /// The point `x` with `rhs ∈ (M + λA)(x)`.
    ///
    /// The default handles diagonal metrics through
    /// `(Id + λM⁻¹A)⁻¹(M⁻¹ rhs)`; operators that can do better override it.
    fn resolve_in_metric(&self, rhs: &[f64], metric: &Metric, lambda: f64) -> Result<Vec<f64>> {
        check_dim(self.dim(), rhs.len())?;
        let d = metric.as_diagonal().ok_or_else(|| {
            Error::Unsupported("this resolvent needs a diagonal metric".into())
        })?;
        let steps: Vec<f64> = d.iter().map(|m| lambda / m).collect();
        self.resolve(&metric.solve(rhs), Step::Diagonal(&steps))
    }
}

/// Single-valued operator `B`, co-coercive w.r.t. `L⁻¹`:
/// `⟨B(x) − B(y), x − y⟩ ≥ ‖B(x) − B(y)‖²_{L⁻¹}`.
pub trait ForwardOp: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    /// The self-adjoint map `L`.
    fn cocoercivity(&self) -> &LinearMap;
}

/// Projection onto `{p : |p_pair|₂ ≤ 1 for every consecutive pair}`.
pub fn project_dual_ball(p: &[f64]) -> Result<Vec<f64>> {
    if p.len() % 2 != 0 {
        return Err(invalid(format!("dual variable must hold pairs, got length {}", p.len())));
    }
    let mut out = p.to_vec();
    project_pairs_in_place(&mut out);
    Ok(out)
}

pub(crate) fn project_pairs_in_place(p: &mut [f64]) {
    for pair in p.chunks_exact_mut(2) {
        let n = pair[0].hypot(pair[1]);
        if n > 1.0 {
            pair[0] /= n;
            pair[1] /= n;
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("lambda must be positive, got {lambda}")))
    }
}

/// Prox of `G(u) = λ/2‖u − f‖²`: `(u + τλf)/(1 + τλ)`, entrywise in `τ`.
pub fn prox_l2_data(u: &[f64], f: &[f64], lambda: f64, tau: Step<'_>) -> Result<Vec<f64>> {
    check_dim(f.len(), u.len())?;
    check_lambda(lambda)?;
    tau.validate(u.len())?;
    Ok(u.iter()
        .zip(f)
        .enumerate()
        .map(|(i, (&ui, &fi))| {
            let tl = tau.at(i) * lambda;
            (ui + tl * fi) / (1.0 + tl)
        })
        .collect())
}

/// Prox of `F*(q) = 1/(2λ)‖q‖² − ⟨f, q⟩`: `λ(q̃ + σf)/(λ + σ)`, entrywise in `σ`.
pub fn prox_splitdual_q(qt: &[f64], f: &[f64], lambda: f64, sigma: Step<'_>) -> Result<Vec<f64>> {
    check_dim(f.len(), qt.len())?;
    check_lambda(lambda)?;
    sigma.validate(qt.len())?;
    Ok(qt
        .iter()
        .zip(f)
        .enumerate()
        .map(|(i, (&q, &fi))| {
            let s = sigma.at(i);
            lambda * (q + s * fi) / (lambda + s)
        })
        .collect())
}

/// Gradient of `Q(p) = ½‖λf − ∇ᵀp‖²`, i.e. `∇(∇ᵀp − λf)`.
pub fn grad_q_dual_rof(p: &[f64], f: &[f64], lambda: f64, grad_op: &LinearMap) -> Result<Vec<f64>> {
    check_dim(grad_op.dim_out(), p.len())?;
    check_dim(grad_op.dim_in(), f.len())?;
    let mut r = grad_op.adjoint_apply(p);
    r.iter_mut().zip(f).for_each(|(a, fi)| *a -= lambda * fi);
    Ok(grad_op.apply(&r))
}

/// Gradient of `Q(u) = λ/2‖Hu − f‖²`, i.e. `λHᵀ(Hu − f)`.
pub fn grad_q_deconv(u: &[f64], f: &[f64], lambda: f64, h_op: &LinearMap) -> Result<Vec<f64>> {
    check_dim(h_op.dim_in(), u.len())?;
    check_dim(h_op.dim_out(), f.len())?;
    let mut r = h_op.apply(u);
    r.iter_mut().zip(f).for_each(|(a, fi)| *a = lambda * (*a - fi));
    Ok(h_op.adjoint_apply(&r))
}

/// Resolvent of the zero operator.
#[derive(Clone, Debug)]
pub struct ZeroResolvent {
    pub dim: usize,
}

impl Resolvent for ZeroResolvent {
    fn dim(&self) -> usize {
        self.dim
    }

    fn resolve(&self, v: &[f64], step: Step<'_>) -> Result<Vec<f64>> {
        check_dim(self.dim, v.len())?;
        step.validate(self.dim)?;
        Ok(v.to_vec())
    }

    fn resolve_in_metric(&self, rhs: &[f64], metric: &Metric, _lambda: f64) -> Result<Vec<f64>> {
        check_dim(self.dim, rhs.len())?;
        check_dim(self.dim, metric.dim())?;
        Ok(metric.solve(rhs))
    }
}

/// Resolvent of the normal cone of `{0}`: always returns the origin.
#[derive(Clone, Debug)]
pub struct OriginProjection {
    pub dim: usize,
}

impl Resolvent for OriginProjection {
    fn dim(&self) -> usize {
        self.dim
    }

    fn resolve(&self, v: &[f64], _step: Step<'_>) -> Result<Vec<f64>> {
        check_dim(self.dim, v.len())?;
        Ok(vec![0.0; self.dim])
    }

    fn resolve_in_metric(&self, rhs: &[f64], _metric: &Metric, _lambda: f64) -> Result<Vec<f64>> {
        self.resolve(rhs, Step::Scalar(1.0))
    }
}

/// Resolvent of `∂I_P`: pointwise projection onto unit discs, in the
/// weighted norm `Σ (q_i − v_i)²/s_i` when a diagonal step differs within a
/// pair.
#[derive(Clone, Debug)]
pub struct DualBallProjection {
    pub pairs: usize,
}

impl Resolvent for DualBallProjection {
    fn dim(&self) -> usize {
        2 * self.pairs
    }

    fn resolve(&self, v: &[f64], step: Step<'_>) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        step.validate(v.len())?;
        let Step::Diagonal(s) = step else {
            return project_dual_ball(v);
        };
        let mut out = v.to_vec();
        for (k, pair) in out.chunks_exact_mut(2).enumerate() {
            let (s0, s1) = (s[2 * k], s[2 * k + 1]);
            if s0 == s1 {
                project_pairs_in_place(pair);
            } else {
                let q = weighted_disc_projection([pair[0], pair[1]], [1.0 / s0, 1.0 / s1]);
                pair.copy_from_slice(&q);
            }
        }
        Ok(out)
    }
}

/// `argmin Σ w_i(q_i − v_i)²` over `|q| ≤ 1`: `q_i = w_i v_i/(w_i + μ)` with
/// `μ ≥ 0` the root of `|q(μ)|² = 1`, found by Newton's method from the left
/// (the function is convex and decreasing, so the iterates increase
/// monotonically).
fn weighted_disc_projection(v: [f64; 2], w: [f64; 2]) -> [f64; 2] {
    if v[0].hypot(v[1]) <= 1.0 {
        return v;
    }
    let mut mu = 0.0f64;
    for _ in 0..200 {
        let q = [w[0] * v[0] / (w[0] + mu), w[1] * v[1] / (w[1] + mu)];
        let phi = q[0] * q[0] + q[1] * q[1] - 1.0;
        let dphi = -2.0 * (q[0] * q[0] / (w[0] + mu) + q[1] * q[1] / (w[1] + mu));
        let next = mu - phi / dphi;
        if !(next > mu) || (next - mu) <= 1e-16 * next {
            break;
        }
        mu = next;
    }
    let q = [w[0] * v[0] / (w[0] + mu), w[1] * v[1] / (w[1] + mu)];
    let n = q[0].hypot(q[1]);
    if n > 1.0 {
        [q[0] / n, q[1] / n]
    } else {
        q
    }
}

/// Resolvent of `∂G` for `G(u) = λ/2‖u − f‖²`.
#[derive(Clone, Debug)]
pub struct L2DataProx {
    pub f: Vec<f64>,
    pub lambda: f64,
}

impl Resolvent for L2DataProx {
    fn dim(&self) -> usize {
        self.f.len()
    }

    fn resolve(&self, v: &[f64], step: Step<'_>) -> Result<Vec<f64>> {
        prox_l2_data(v, &self.f, self.lambda, step)
    }
}

/// Resolvent of `∂F*` for `F*(q) = 1/(2λ)‖q‖² − ⟨f, q⟩`.
#[derive(Clone, Debug)]
pub struct SplitDualQProx {
    pub f: Vec<f64>,
    pub lambda: f64,
}

impl Resolvent for SplitDualQProx {
    fn dim(&self) -> usize {
        self.f.len()
    }

    fn resolve(&self, v: &[f64], step: Step<'_>) -> Result<Vec<f64>> {
        prox_splitdual_q(v, &self.f, self.lambda, step)
    }
}

/// Resolvent of the affine monotone map `A(x) = diag(a)·x − c` with `a ≥ 0`,
/// i.e. the subdifferential of a separable convex quadratic. Supports
/// arbitrary (dense) metrics.
#[derive(Clone, Debug)]
pub struct QuadraticResolvent {
    curvature: Vec<f64>,
    shift: Vec<f64>,
}

impl QuadraticResolvent {
    pub fn new(curvature: Vec<f64>, shift: Vec<f64>) -> Result<Self> {
        check_dim(curvature.len(), shift.len())?;
        if curvature.iter().any(|a| !(*a >= 0.0)) {
            return Err(invalid("quadratic curvature must be nonnegative"));
        }
        Ok(Self { curvature, shift })
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.curvature).zip(&self.shift).map(|((x, a), c)| a * x - c).collect()
    }
}

impl Resolvent for QuadraticResolvent {
    fn dim(&self) -> usize {
        self.curvature.len()
    }

    fn resolve(&self, v: &[f64], step: Step<'_>) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        step.validate(self.dim())?;
        Ok((0..v.len())
            .map(|i| {
                let s = step.at(i);
                (v[i] + s * self.shift[i]) / (1.0 + s * self.curvature[i])
            })
            .collect())
    }

    fn resolve_in_metric(&self, rhs: &[f64], metric: &Metric, lambda: f64) -> Result<Vec<f64>> {
        check_dim(self.dim(), rhs.len())?;
        check_dim(self.dim(), metric.dim())?;
        if let Some(d) = metric.as_diagonal() {
            return Ok((0..rhs.len())
                .map(|i| (rhs[i] + lambda * self.shift[i]) / (d[i] + lambda * self.curvature[i]))
                .collect());
        }
        let mut sys: DMatrix<f64> = metric.map().to_dense();
        for (i, a) in self.curvature.iter().enumerate() {
            sys[(i, i)] += lambda * a;
        }
        let b = DVector::from_iterator(rhs.len(), rhs.iter().zip(&self.shift).map(|(r, c)| r + lambda * c));
        let chol = sys.cholesky().ok_or_else(|| Error::NotPositiveDefinite {
            what: "M + λA".into(),
            margin: f64::NAN,
        })?;
        Ok(chol.solve(&b).as_slice().to_vec())
    }
}

/// Resolvent of a block-diagonal operator acting on consecutive slices.
#[derive(Clone)]
pub struct ProductResolvent {
    parts: Vec<Arc<dyn Resolvent>>,
}

impl ProductResolvent {
    pub fn new(parts: Vec<Arc<dyn Resolvent>>) -> Self {
        Self { parts }
    }
}

impl Resolvent for ProductResolvent {
    fn dim(&self) -> usize {
        self.parts.iter().map(|p| p.dim()).sum()
    }

    fn resolve(&self, v: &[f64], step: Step<'_>) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        let mut out = Vec::with_capacity(v.len());
        let mut offset = 0;
        for p in &self.parts {
            let range = offset..offset + p.dim();
            out.extend(p.resolve(&v[range.clone()], step.slice(range))?);
            offset += p.dim();
        }
        Ok(out)
    }
}

/// The zero forward operator.
#[derive(Clone, Debug)]
pub struct ZeroForward {
    dim: usize,
    l: LinearMap,
}

impl ZeroForward {
    pub fn new(dim: usize) -> Self {
        Self { dim, l: LinearMap::zero(dim) }
    }
}

impl ForwardOp for ZeroForward {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn cocoercivity(&self) -> &LinearMap {
        &self.l
    }
}

/// Affine forward operator `B(x) = Qx − c` with `Q` self-adjoint PSD.
#[derive(Clone, Debug)]
pub struct AffineForward {
    q: LinearMap,
    shift: Vec<f64>,
    l: LinearMap,
}

impl AffineForward {
    /// `l` must satisfy the co-coercivity inequality for `Q`, e.g. `Q` itself
    /// when positive definite or `‖Q‖·Id`.
    pub fn new(q: LinearMap, shift: Vec<f64>, l: LinearMap) -> Result<Self> {
        check_dim(q.dim_in(), q.dim_out())?;
        check_dim(q.dim_in(), shift.len())?;
        check_dim(q.dim_in(), l.dim_in())?;
        Ok(Self { q, shift, l })
    }

    pub fn linear_part(&self) -> &LinearMap {
        &self.q
    }
}

impl ForwardOp for AffineForward {
    fn dim(&self) -> usize {
        self.shift.len()
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.q.apply(x);
        out.iter_mut().zip(&self.shift).for_each(|(o, c)| *o -= c);
        out
    }

    fn cocoercivity(&self) -> &LinearMap {
        &self.l
    }
}

/// `∇Q` for the dual ROF objective `Q(p) = ½‖λf − ∇ᵀp‖²`.
#[derive(Clone, Debug)]
pub struct DualRofGradient {
    grad: LinearMap,
    f: Vec<f64>,
    lambda: f64,
    l: LinearMap,
}

impl DualRofGradient {
    /// `lipschitz` bounds `‖∇‖²`.
    pub fn new(grad: LinearMap, f: Vec<f64>, lambda: f64, lipschitz: f64) -> Result<Self> {
        check_dim(grad.dim_in(), f.len())?;
        check_lambda(lambda)?;
        let l = LinearMap::scaled_identity(grad.dim_out(), lipschitz);
        Ok(Self { grad, f, lambda, l })
    }
}

impl ForwardOp for DualRofGradient {
    fn dim(&self) -> usize {
        self.grad.dim_out()
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        grad_q_dual_rof(p, &self.f, self.lambda, &self.grad).expect("dimensions fixed at construction")
    }

    fn cocoercivity(&self) -> &LinearMap {
        &self.l
    }
}

/// `∇Q` for the deconvolution data term `Q(u) = λ/2‖Hu − f‖²`.
#[derive(Clone, Debug)]
pub struct DeconvGradient {
    h: LinearMap,
    f: Vec<f64>,
    lambda: f64,
    l: LinearMap,
}

impl DeconvGradient {
    /// `lipschitz` bounds `λ‖H‖²`.
    pub fn new(h: LinearMap, f: Vec<f64>, lambda: f64, lipschitz: f64) -> Result<Self> {
        check_dim(h.dim_out(), f.len())?;
        check_lambda(lambda)?;
        let l = LinearMap::scaled_identity(h.dim_in(), lipschitz);
        Ok(Self { h, f, lambda, l })
    }
}

impl ForwardOp for DeconvGradient {
    fn dim(&self) -> usize {
        self.h.dim_in()
    }

    fn eval(&self, u: &[f64]) -> Vec<f64> {
        grad_q_deconv(u, &self.f, self.lambda, &self.h).expect("dimensions fixed at construction")
    }

    fn cocoercivity(&self) -> &LinearMap {
        &self.l
    }
}
