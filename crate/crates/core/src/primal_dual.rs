//! Inertial primal-dual forward-backward iteration for
//!
//! ```text
//! min_x max_y  G(x) + Q(x) + ⟨Kx, y⟩ − F*(y) − P*(y)
//! ```
//!
//! with scalar steps `τ`, `σ` or diagonal preconditioners `T`, `Σ`. It is the
//! inertial forward-backward method in the metric
//! `M = [[T⁻¹, −K*], [−K, Σ⁻¹]]` with `λ = 1`.

use std::ops::ControlFlow;
use std::sync::{Arc, OnceLock};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linops::{block_pd_check, op_norm, vector, weighted_norm, LinearMap, Metric};
use crate::operators::{ForwardOp, Resolvent, Step};
use crate::splitting::{alpha_bound, next_alpha, AlphaSchedule, IterInfo};

/// Slack granted to the boundary cases of the closed-form step conditions.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Saddle-point problem data.
#[derive(Clone)]
pub struct SaddleProblem {
    k: LinearMap,
    prox_g: Arc<dyn Resolvent>,
    prox_fstar: Arc<dyn Resolvent>,
    grad_q: Option<Arc<dyn ForwardOp>>,
    grad_pstar: Option<Arc<dyn ForwardOp>>,
    l_q: f64,
    l_p: f64,
    d: Option<Vec<f64>>,
    e: Option<Vec<f64>>,
    k_norm: OnceLock<f64>,
}

impl std::fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("dim_x", &self.dim_x())
            .field("dim_y", &self.dim_y())
            .field("l_q", &self.l_q)
            .field("l_p", &self.l_p)
            .finish_non_exhaustive()
    }
}

impl SaddleProblem {
    pub fn new(k: LinearMap, prox_g: Arc<dyn Resolvent>, prox_fstar: Arc<dyn Resolvent>) -> Result<Self> {
        check_dim(k.dim_in(), prox_g.dim())?;
        check_dim(k.dim_out(), prox_fstar.dim())?;
        Ok(Self {
            k,
            prox_g,
            prox_fstar,
            grad_q: None,
            grad_pstar: None,
            l_q: 0.0,
            l_p: 0.0,
            d: None,
            e: None,
            k_norm: OnceLock::new(),
        })
    }

    /// Smooth primal part with Lipschitz constant `l_q > 0`.
    pub fn with_q(mut self, grad: Arc<dyn ForwardOp>, l_q: f64) -> Result<Self> {
        check_dim(self.dim_x(), grad.dim())?;
        if !(l_q > 0.0 && l_q.is_finite()) {
            return Err(invalid(format!("L_Q must be positive, got {l_q}")));
        }
        self.grad_q = Some(grad);
        self.l_q = l_q;
        Ok(self)
    }

    /// Smooth dual part with Lipschitz constant `l_p > 0`.
    pub fn with_pstar(mut self, grad: Arc<dyn ForwardOp>, l_p: f64) -> Result<Self> {
        check_dim(self.dim_y(), grad.dim())?;
        if !(l_p > 0.0 && l_p.is_finite()) {
            return Err(invalid(format!("L_P must be positive, got {l_p}")));
        }
        self.grad_pstar = Some(grad);
        self.l_p = l_p;
        Ok(self)
    }

    /// Diagonal co-coercivity maps `D` (primal) and `E` (dual).
    pub fn with_cocoercivity_diagonals(mut self, d: Option<Vec<f64>>, e: Option<Vec<f64>>) -> Result<Self> {
        if let Some(d) = &d {
            check_dim(self.dim_x(), d.len())?;
        }
        if let Some(e) = &e {
            check_dim(self.dim_y(), e.len())?;
        }
        if d.iter().chain(e.iter()).flatten().any(|v| !(*v >= 0.0)) {
            return Err(invalid("co-coercivity diagonals must be nonnegative"));
        }
        self.d = d;
        self.e = e;
        Ok(self)
    }

    /// Use `norm` for `‖K‖` instead of estimating it. It should be an upper
    /// bound.
    pub fn with_k_norm(self, norm: f64) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(norm);
        Self { k_norm: cell, ..self }
    }

    pub fn dim_x(&self) -> usize {
        self.k.dim_in()
    }

    pub fn dim_y(&self) -> usize {
        self.k.dim_out()
    }

    pub fn k(&self) -> &LinearMap {
        &self.k
    }

    pub fn k_norm(&self) -> f64 {
        *self.k_norm.get_or_init(|| op_norm(&self.k))
    }

    pub fn l_q(&self) -> f64 {
        self.l_q
    }

    pub fn l_p(&self) -> f64 {
        self.l_p
    }

    pub fn prox_g(&self) -> &dyn Resolvent {
        self.prox_g.as_ref()
    }

    pub fn prox_fstar(&self) -> &dyn Resolvent {
        self.prox_fstar.as_ref()
    }

    pub fn grad_q(&self) -> Option<&dyn ForwardOp> {
        self.grad_q.as_deref()
    }

    pub fn grad_pstar(&self) -> Option<&dyn ForwardOp> {
        self.grad_pstar.as_deref()
    }

    /// `D`, or the zero vector when absent.
    pub fn d(&self) -> Vec<f64> {
        self.d.clone().unwrap_or_else(|| vec![0.0; self.dim_x()])
    }

    /// `E`, or the zero vector when absent.
    pub fn e(&self) -> Vec<f64> {
        self.e.clone().unwrap_or_else(|| vec![0.0; self.dim_y()])
    }
}

/// Primal and dual step sizes.
#[derive(Clone, Debug, PartialEq)]
pub enum Steps {
    Scalar { tau: f64, sigma: f64 },
    Diagonal { t: Vec<f64>, sigma: Vec<f64> },
}

impl Steps {
    pub fn primal(&self) -> Step<'_> {
        match self {
            Steps::Scalar { tau, .. } => Step::Scalar(*tau),
            Steps::Diagonal { t, .. } => Step::Diagonal(t),
        }
    }

    pub fn dual(&self) -> Step<'_> {
        match self {
            Steps::Scalar { sigma, .. } => Step::Scalar(*sigma),
            Steps::Diagonal { sigma, .. } => Step::Diagonal(sigma),
        }
    }

    fn inverse_map(step: Step<'_>, dim: usize) -> LinearMap {
        match step {
            Step::Scalar(s) => LinearMap::scaled_identity(dim, 1.0 / s),
            Step::Diagonal(d) => LinearMap::diagonal(d.iter().map(|v| 1.0 / v).collect()),
        }
    }

    fn check(&self, dim_x: usize, dim_y: usize) -> Result<()> {
        self.primal().validate(dim_x)?;
        self.dual().validate(dim_y)
    }
}

/// Algorithm parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PdConfig {
    pub steps: Steps,
    pub schedule: AlphaSchedule,
    /// Relaxation `ρ ∈ (0, 2]`; `1` disables it. Requires a zero schedule.
    pub rho: f64,
    pub eps: f64,
}

impl PdConfig {
    pub fn new(steps: Steps, schedule: AlphaSchedule) -> Self {
        Self { steps, schedule, rho: 1.0, eps: crate::splitting::DEFAULT_EPS }
    }

    /// Check step sizes against the convergence condition of the problem:
    /// scalar `‖K‖² < (1/τ − L_Q/2)(1/σ − L_P/2)`, or for diagonal steps
    /// `‖(Σ⁻¹ − E/2)^{-1/2} K (T⁻¹ − D/2)^{-1/2}‖ < 1`.
    pub fn validate(&self, prob: &SaddleProblem) -> Result<()> {
        self.schedule.validate()?;
        self.steps.check(prob.dim_x(), prob.dim_y())?;
        if !(self.rho > 0.0 && self.rho <= 2.0) {
            return Err(invalid(format!("rho must lie in (0, 2], got {}", self.rho)));
        }
        if self.rho != 1.0 && !self.schedule.is_zero() {
            return Err(invalid("relaxation is only available with alpha = 0"));
        }
        if !(self.eps > 0.0) {
            return Err(invalid(format!("eps must be positive, got {}", self.eps)));
        }
        match &self.steps {
            Steps::Scalar { tau, sigma } => {
                let a = 1.0 / tau - prob.l_q / 2.0;
                let b = 1.0 / sigma - prob.l_p / 2.0;
                if !(a > 0.0) {
                    return Err(Error::StepCondition(format!("τ = {tau} must be below 2/L_Q")));
                }
                if !(b > 0.0) {
                    return Err(Error::StepCondition(format!("σ = {sigma} must be below 2/L_P")));
                }
                let ratio = prob.k_norm().powi(2) / (a * b);
                if !(ratio < 1.0) {
                    return Err(Error::StepCondition(format!(
                        "‖K‖²/((1/τ − L_Q/2)(1/σ − L_P/2)) = {ratio:.6} must be < 1"
                    )));
                }
            }
            Steps::Diagonal { t, sigma } => {
                let a1 = shifted_inverse(t, &prob.d(), 1.0, 0.5);
                let a2 = shifted_inverse(sigma, &prob.e(), 1.0, 0.5);
                if let Some(i) = a1.iter().position(|v| !(*v > 0.0)) {
                    return Err(Error::StepCondition(format!("T⁻¹ − D/2 not positive at entry {i}")));
                }
                if let Some(i) = a2.iter().position(|v| !(*v > 0.0)) {
                    return Err(Error::StepCondition(format!("Σ⁻¹ − E/2 not positive at entry {i}")));
                }
                let norm = weighted_norm(&LinearMap::diagonal(a1), &LinearMap::diagonal(a2), &prob.k)?;
                if !(norm < 1.0) {
                    return Err(Error::StepCondition(format!(
                        "‖(Σ⁻¹ − E/2)^(-1/2) K (T⁻¹ − D/2)^(-1/2)‖ = {norm:.6} must be < 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `c/s_j − w·d_j` entrywise.
fn shifted_inverse(steps: &[f64], d: &[f64], c: f64, w: f64) -> Vec<f64> {
    steps.iter().zip(d).map(|(s, d)| c / s - w * d).collect()
}

/// The metric `[[T⁻¹, −K*], [−K, Σ⁻¹]]`. Its smallest eigenvalue is bounded
/// below by `(1 − ν)·min(T⁻¹, Σ⁻¹)` with `ν = ‖Σ^{1/2} K T^{1/2}‖`.
pub fn pd_metric(steps: &Steps, k: &LinearMap) -> Result<Metric> {
    let (n, m) = (k.dim_in(), k.dim_out());
    steps.check(n, m)?;
    let a1 = Steps::inverse_map(steps.primal(), n);
    let a2 = Steps::inverse_map(steps.dual(), m);
    let report = block_pd_check(&a1, &a2, k)?;
    let min_diag = a1
        .as_diagonal()
        .into_iter()
        .chain(a2.as_diagonal())
        .flatten()
        .fold(f64::INFINITY, f64::min);
    let margin = (1.0 - report.norm) * min_diag;
    if !report.pd {
        return Err(Error::NotPositiveDefinite { what: "primal-dual metric".into(), margin });
    }
    let neg_k = k.scaled(-1.0);
    let map = LinearMap::block2x2(a1, neg_k.adjoint(), neg_k, a2)?;
    Metric::with_certified_margin(map, margin)
}

/// `‖(Δx, Δy)‖²_M = ⟨T⁻¹Δx, Δx⟩ + ⟨Σ⁻¹Δy, Δy⟩ − 2⟨KΔx, Δy⟩`.
pub fn pd_norm_sq(steps: &Steps, k: &LinearMap, dx: &[f64], dy: &[f64]) -> f64 {
    let weighted = |v: &[f64], s: Step<'_>| v.iter().enumerate().map(|(i, a)| a * a / s.at(i)).sum::<f64>();
    weighted(dx, steps.primal()) + weighted(dy, steps.dual()) - 2.0 * vector::dot(&k.apply(dx), dy)
}

/// Primal and dual iterates with their predecessors.
#[derive(Clone, Debug, PartialEq)]
pub struct PdState {
    pub x_prev: Vec<f64>,
    pub x: Vec<f64>,
    pub y_prev: Vec<f64>,
    pub y: Vec<f64>,
    pub k: usize,
    pub err_sum: f64,
}

impl PdState {
    pub fn new(x0: Vec<f64>, y0: Vec<f64>) -> Self {
        Self { x_prev: x0.clone(), x: x0, y_prev: y0.clone(), y: y0, k: 0, err_sum: 0.0 }
    }

    /// `‖(x_k, y_k) − (x_{k−1}, y_{k−1})‖²_M`
    pub fn increment_norm_sq(&self, steps: &Steps, k: &LinearMap) -> f64 {
        pd_norm_sq(steps, k, &vector::sub(&self.x, &self.x_prev), &vector::sub(&self.y, &self.y_prev))
    }
}

/// One step of the inertial primal-dual iteration:
///
/// ```text
/// ξ = x + α(x − x₋),  ζ = y + α(y − y₋)
/// x⁺ = (Id + T∂G)⁻¹(ξ − T(∇Q(ξ) + K*ζ))
/// ξ̄ = 2x⁺ − ξ
/// y⁺ = (Id + Σ∂F*)⁻¹(ζ − Σ(∇P*(ζ) − Kξ̄))
/// ```
///
/// With `cfg.rho ≠ 1` the step is taken with `α = 0` and `(x⁺, y⁺)` is
/// replaced by `(1 − ρ)(x, y) + ρ(x⁺, y⁺)`.
pub fn ipdfb_step(state: &PdState, prob: &SaddleProblem, cfg: &PdConfig, alpha: f64) -> Result<PdState> {
    let dz_sq = if alpha > 0.0 { state.increment_norm_sq(&cfg.steps, &prob.k) } else { 0.0 };
    step_with_increment(state, prob, cfg, alpha, dz_sq)
}

fn step_with_increment(
    state: &PdState,
    prob: &SaddleProblem,
    cfg: &PdConfig,
    alpha: f64,
    dz_sq: f64,
) -> Result<PdState> {
    check_dim(prob.dim_x(), state.x.len())?;
    check_dim(prob.dim_y(), state.y.len())?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if cfg.rho != 1.0 && alpha != 0.0 {
        return Err(invalid("relaxation is only available with alpha = 0"));
    }
    let (tau, sigma) = (cfg.steps.primal(), cfg.steps.dual());

    let xi = vector::extrapolate(&state.x, &state.x_prev, alpha);
    let zeta = vector::extrapolate(&state.y, &state.y_prev, alpha);

    let mut dir = prob.k.adjoint_apply(&zeta);
    if let Some(q) = &prob.grad_q {
        dir.iter_mut().zip(q.eval(&xi)).for_each(|(d, g)| *d += g);
    }
    let arg: Vec<f64> = xi.iter().zip(&dir).enumerate().map(|(j, (v, d))| v - tau.at(j) * d).collect();
    let x_new = prob.prox_g.resolve(&arg, tau)?;

    let xi_bar: Vec<f64> = x_new.iter().zip(&xi).map(|(a, b)| 2.0 * a - b).collect();
    let mut dir = prob.k.apply(&xi_bar);
    dir.iter_mut().for_each(|d| *d = -*d);
    if let Some(p) = &prob.grad_pstar {
        dir.iter_mut().zip(p.eval(&zeta)).for_each(|(d, g)| *d += g);
    }
    let arg: Vec<f64> = zeta.iter().zip(&dir).enumerate().map(|(i, (v, d))| v - sigma.at(i) * d).collect();
    let y_new = prob.prox_fstar.resolve(&arg, sigma)?;

    let (x_new, y_new) = if cfg.rho != 1.0 {
        let relax = |old: &[f64], new: Vec<f64>| -> Vec<f64> {
            old.iter().zip(new).map(|(o, n)| (1.0 - cfg.rho) * o + cfg.rho * n).collect()
        };
        (relax(&state.x, x_new), relax(&state.y, y_new))
    } else {
        (x_new, y_new)
    };

    Ok(PdState {
        x_prev: state.x.clone(),
        x: x_new,
        y_prev: state.y.clone(),
        y: y_new,
        k: state.k + 1,
        err_sum: state.err_sum + alpha * dz_sq,
    })
}

/// Scalar steps `τ = 1/(‖K‖r + L_Q/γ)`, `σ = 1/(‖K‖/r + L_P/δ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarSteps {
    pub tau: f64,
    pub sigma: f64,
}

pub fn scalar_steps_from_lemma(
    k_norm: f64,
    l_q: f64,
    l_p: f64,
    gamma: f64,
    delta: f64,
    r: f64,
) -> Result<ScalarSteps> {
    check_normalized(gamma, delta)?;
    if !(r > 0.0) {
        return Err(invalid(format!("r must be positive, got {r}")));
    }
    if !(k_norm >= 0.0 && l_q >= 0.0 && l_p >= 0.0) {
        return Err(invalid("norms and Lipschitz constants must be nonnegative"));
    }
    let den_tau = k_norm * r + l_q / gamma;
    let den_sigma = k_norm / r + l_p / delta;
    if !(den_tau > 0.0 && den_sigma > 0.0) {
        return Err(invalid("step-size denominator vanishes"));
    }
    Ok(ScalarSteps { tau: 1.0 / den_tau, sigma: 1.0 / den_sigma })
}

fn check_normalized(gamma: f64, delta: f64) -> Result<()> {
    for (name, v) in [("gamma", gamma), ("delta", delta)] {
        if !(v > 0.0 && v < 2.0) {
            return Err(invalid(format!("{name} must lie in (0, 2), got {v}")));
        }
    }
    Ok(())
}

/// `α(γ, δ)`: the scalar extrapolation bound at `max(γ, δ)`.
pub fn alpha_bound_pd(gamma: f64, delta: f64, eps: f64) -> Result<f64> {
    check_normalized(gamma, delta)?;
    alpha_bound(gamma, delta, eps)
}

/// Scalar-step extrapolation condition for `α` and `cfg.eps`, with
/// `c = 1 − 3α − ε`, `w = (1−α)²/2`:
///
/// ```text
/// c/τ ≥ w·L_Q,   c/σ ≥ w·L_P,   (c/τ − w·L_Q)(c/σ − w·L_P) ≥ c²‖K‖²
/// ```
pub fn check_theorem3(prob: &SaddleProblem, cfg: &PdConfig, alpha: f64) -> Result<bool> {
    let Steps::Scalar { tau, sigma } = cfg.steps else {
        return Err(Error::Unsupported("scalar steps required; use check_theorem4".into()));
    };
    let c = 1.0 - 3.0 * alpha - cfg.eps;
    if !(c > 0.0) || !(0.0..1.0).contains(&alpha) {
        return Ok(false);
    }
    let w = (1.0 - alpha).powi(2) / 2.0;
    let a = c / tau - w * prob.l_q;
    let b = c / sigma - w * prob.l_p;
    let rhs = c * c * prob.k_norm().powi(2);
    Ok(a >= 0.0 && b >= 0.0 && a * b >= rhs * (1.0 - BOUNDARY_SLACK))
}

/// Policy for rows or columns of `K` whose step denominator vanishes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ZeroLines {
    /// Fail: the corresponding variable does not take part in the problem.
    #[default]
    Reject,
    /// Assign the step `1`. The variable is decoupled, so any finite step
    /// keeps the metric positive definite.
    Unit,
}

/// Diagonal preconditioner
///
/// ```text
/// τ_j = 1/(d_j/γ + r·Σ_i |K_ij|^(2−s)),   σ_i = 1/(e_i/δ + (1/r)·Σ_j |K_ij|^s)
/// ```
///
/// with `0⁰ = 0`.
#[allow(clippy::too_many_arguments)]
pub fn diag_precond(
    k: &LinearMap,
    d: Option<&[f64]>,
    e: Option<&[f64]>,
    gamma: f64,
    delta: f64,
    r: f64,
    s: f64,
    zero_lines: ZeroLines,
) -> Result<Steps> {
    check_normalized(gamma, delta)?;
    if !(r > 0.0) {
        return Err(invalid(format!("r must be positive, got {r}")));
    }
    if !(0.0..=2.0).contains(&s) {
        return Err(invalid(format!("s must lie in [0, 2], got {s}")));
    }
    let csr = k
        .to_csr()
        .ok_or_else(|| Error::Unsupported("diagonal preconditioning needs explicit entries of K".into()))?;
    let (rows, cols) = (csr.rows(), csr.cols());
    if let Some(d) = d {
        check_dim(cols, d.len())?;
    }
    if let Some(e) = e {
        check_dim(rows, e.len())?;
    }

    let mut col_sum = vec![0.0; cols];
    let mut row_sum = vec![0.0; rows];
    for (i, j, v) in csr.triplets() {
        let a = v.abs();
        if a == 0.0 {
            continue;
        }
        col_sum[j] += a.powf(2.0 - s);
        row_sum[i] += a.powf(s);
    }

    let finish = |den: f64, what: &str, idx: usize| -> Result<f64> {
        if den > 0.0 {
            Ok(1.0 / den)
        } else {
            match zero_lines {
                ZeroLines::Unit => Ok(1.0),
                ZeroLines::Reject => Err(Error::StepCondition(format!("{what} {idx} of K is empty; its step is infinite"))),
            }
        }
    };
    let t = (0..cols)
        .map(|j| finish(d.map_or(0.0, |d| d[j]) / gamma + r * col_sum[j], "column", j))
        .collect::<Result<Vec<_>>>()?;
    let sigma = (0..rows)
        .map(|i| finish(e.map_or(0.0, |e| e[i]) / delta + row_sum[i] / r, "row", i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Steps::Diagonal { t, sigma })
}

/// Preconditioned extrapolation condition, with `c = 1 − 3α − ε`,
/// `w = (1−α)²/2`:
///
/// ```text
/// cΣ⁻¹ ≥ wE,   cT⁻¹ ≥ wD,   ‖(cΣ⁻¹ − wE)^{-1/2} K (cT⁻¹ − wD)^{-1/2}‖ ≤ 1/c
/// ```
pub fn check_theorem4(prob: &SaddleProblem, t: &[f64], sigma: &[f64], alpha: f64, eps: f64) -> Result<bool> {
    check_dim(prob.dim_x(), t.len())?;
    check_dim(prob.dim_y(), sigma.len())?;
    let c = 1.0 - 3.0 * alpha - eps;
    if !(c > 0.0) || !(0.0..1.0).contains(&alpha) {
        return Ok(false);
    }
    let w = (1.0 - alpha).powi(2) / 2.0;
    let a1 = shifted_inverse(t, &prob.d(), c, w);
    let a2 = shifted_inverse(sigma, &prob.e(), c, w);
    if a1.iter().chain(&a2).any(|v| !(*v > 0.0)) {
        return Ok(false);
    }
    let norm = weighted_norm(&LinearMap::diagonal(a1), &LinearMap::diagonal(a2), &prob.k)?;
    Ok(norm <= (1.0 + 1e-9) / c)
}

/// Stopping parameters of [`solve_pd`].
#[derive(Clone, Copy, Debug)]
pub struct PdOptions {
    /// Stop when `‖z_{k+1} − z_k‖_M / max(1, ‖z_k‖_M) < tol`.
    pub tol: f64,
    pub k_max: usize,
}

#[derive(Clone, Debug)]
pub struct PdRun {
    pub state: PdState,
    pub converged: bool,
}

/// Run the iteration from `(x0, y0)` until the relative residual falls
/// below `tol`, `k_max` is reached or the observer breaks. The configuration
/// is validated first.
pub fn solve_pd<F>(
    prob: &SaddleProblem,
    cfg: &PdConfig,
    x0: Vec<f64>,
    y0: Vec<f64>,
    opts: &PdOptions,
    mut observer: F,
) -> Result<PdRun>
where
    F: FnMut(&PdState, &IterInfo) -> ControlFlow<()>,
{
    cfg.validate(prob)?;
    let mut state = PdState::new(x0, y0);
    let mut dz_sq = 0.0;
    while state.k < opts.k_max {
        let alpha = if cfg.rho != 1.0 { 0.0 } else { next_alpha(&cfg.schedule, state.k + 1, dz_sq) };
        let next = step_with_increment(&state, prob, cfg, alpha, dz_sq)?;
        if !vector::all_finite(&next.x) || !vector::all_finite(&next.y) {
            return Err(Error::NonFinite(format!("iterate {}", next.k)));
        }
        let e_k = alpha * dz_sq;
        let z_norm = pd_norm_sq(&cfg.steps, &prob.k, &state.x, &state.y).max(0.0).sqrt();
        dz_sq = next.increment_norm_sq(&cfg.steps, &prob.k).max(0.0);
        state = next;
        let info = IterInfo { k: state.k, alpha, residual_m: dz_sq.sqrt(), e_k, err_sum: state.err_sum };
        let stop = observer(&state, &info).is_break();
        if info.residual_m / z_norm.max(1.0) < opts.tol {
            return Ok(PdRun { state, converged: true });
        }
        if stop {
            break;
        }
    }
    Ok(PdRun { state, converged: false })
}
