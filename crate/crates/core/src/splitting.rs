//! Inertial forward-backward splitting in a metric `M`:
//!
//! ```text
//! y      = x_k + α_k (x_k − x_{k−1})
//! x_{k+1} = (M + λA)⁻¹ (M − λB)(y)
//! ```
//!
//! together with the step-size and extrapolation conditions that guarantee
//! convergence.

use std::ops::ControlFlow;
use std::sync::Arc;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linops::{pd_margin, vector, LinearMap, Metric, DEFAULT_POWER_TOL};
use crate::operators::{ForwardOp, Resolvent};

/// Default margin `ε` in the extrapolation bounds.
pub const DEFAULT_EPS: f64 = 1e-6;
/// Default safeguard constant `c`.
pub const DEFAULT_SAFEGUARD: f64 = 1e4;

/// The inclusion `0 ∈ A(x) + B(x)`.
#[derive(Clone)]
pub struct MonotonePair {
    pub a: Arc<dyn Resolvent>,
    pub b: Arc<dyn ForwardOp>,
}

impl MonotonePair {
    pub fn new(a: Arc<dyn Resolvent>, b: Arc<dyn ForwardOp>) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// Rule producing the extrapolation factor `α_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSchedule {
    Constant(f64),
    /// Linear increase from 0 to `cap` over `steps` iterations.
    Ramp { cap: f64, steps: usize },
    /// `(k−1)/(k+2)`
    Fista,
    /// `min((k−1)/(k+2), c/(k²‖x_k − x_{k−1}‖²_M))`
    FistaSafeguarded { c: f64 },
    /// Largest constant admitted by the extrapolation bound for normalized
    /// steps `γ`, `δ`.
    TheoremMax { gamma: f64, delta: f64, eps: f64 },
}

impl AlphaSchedule {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |a: f64| (0.0..1.0).contains(&a);
        match *self {
            AlphaSchedule::Constant(a) if !in_unit(a) => Err(invalid(format!("alpha must lie in [0, 1), got {a}"))),
            AlphaSchedule::Ramp { cap, .. } if !in_unit(cap) => {
                Err(invalid(format!("alpha cap must lie in [0, 1), got {cap}")))
            }
            AlphaSchedule::FistaSafeguarded { c } if !(c > 0.0) => {
                Err(invalid(format!("safeguard constant must be positive, got {c}")))
            }
            AlphaSchedule::TheoremMax { gamma, delta, eps } => alpha_bound(gamma, delta, eps).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Upper bound of the emitted sequence, if it stays below one.
    pub fn cap(&self) -> Option<f64> {
        match *self {
            AlphaSchedule::Constant(a) => Some(a),
            AlphaSchedule::Ramp { cap, .. } => Some(cap),
            AlphaSchedule::TheoremMax { gamma, delta, eps } => alpha_bound(gamma, delta, eps).ok(),
            AlphaSchedule::Fista | AlphaSchedule::FistaSafeguarded { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, AlphaSchedule::Constant(a) if *a == 0.0)
    }
}

/// `α_k` for iteration `k ≥ 1`; `dx_norm_m_sq` is `‖x_k − x_{k−1}‖²_M`.
pub fn next_alpha(sched: &AlphaSchedule, k: usize, dx_norm_m_sq: f64) -> f64 {
    let k = k.max(1) as f64;
    let fista = (k - 1.0) / (k + 2.0);
    match *sched {
        AlphaSchedule::Constant(a) => a,
        AlphaSchedule::Ramp { cap, steps } => cap * (k / steps.max(1) as f64).min(1.0),
        AlphaSchedule::Fista => fista,
        AlphaSchedule::FistaSafeguarded { c } => {
            if dx_norm_m_sq > 0.0 {
                fista.min(c / (k * k * dx_norm_m_sq))
            } else {
                fista
            }
        }
        AlphaSchedule::TheoremMax { gamma, delta, eps } => alpha_bound(gamma, delta, eps).unwrap_or(0.0),
    }
}

/// `α(γ) = 1 + (√(9 − 4γ − 2εγ) − 3)/γ`, the largest `α` with
/// `1 − 3α − ε − (1−α)²γ/2 ≥ 0`.
pub fn alpha_max_scalar(gamma: f64, eps: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(invalid(format!("gamma must lie in (0, 2), got {gamma}")));
    }
    let disc = 9.0 - 4.0 * gamma - 2.0 * eps * gamma;
    if !(eps >= 0.0) || !(disc > 0.0) {
        return Err(invalid(format!("eps = {eps} outside the admissible range for gamma = {gamma}")));
    }
    // Rationalized form; stable as gamma → 0.
    let alpha = 1.0 - (4.0 + 2.0 * eps) / (disc.sqrt() + 3.0);
    if alpha < 0.0 {
        return Err(invalid(format!("no nonnegative alpha admissible for gamma = {gamma}, eps = {eps}")));
    }
    Ok(alpha)
}

pub(crate) fn alpha_bound(gamma: f64, delta: f64, eps: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(invalid(format!("delta must lie in (0, 2), got {delta}")));
    }
    alpha_max_scalar(gamma.max(delta), eps)
}

/// Outcome of a positive-definiteness condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckReport {
    pub ok: bool,
    /// Smallest-eigenvalue estimate of the tested map.
    pub margin: f64,
}

/// `S = M − (λ/2)L` positive definite.
pub fn check_theorem1(m: &Metric, l: &LinearMap, lambda: f64) -> Result<CheckReport> {
    check_dim(m.dim(), l.dim_in())?;
    let s = LinearMap::combination(vec![(1.0, m.map().clone()), (-0.5 * lambda, l.clone())])?;
    let margin = pd_margin(&s, DEFAULT_POWER_TOL)?;
    Ok(CheckReport { ok: margin > 0.0, margin })
}

/// `(1 − 3α − ε)M − (1−α)²(λ/2)L ≥ 0`.
pub fn check_theorem2(m: &Metric, l: &LinearMap, lambda: f64, alpha: f64, eps: f64) -> Result<CheckReport> {
    check_dim(m.dim(), l.dim_in())?;
    let r = LinearMap::combination(vec![
        (1.0 - 3.0 * alpha - eps, m.map().clone()),
        (-(1.0 - alpha).powi(2) * 0.5 * lambda, l.clone()),
    ])?;
    let margin = pd_margin(&r, DEFAULT_POWER_TOL)?;
    Ok(CheckReport { ok: margin >= 0.0 && alpha < 1.0, margin })
}

/// `M̄ = M − λB` for a linear self-adjoint `B`; inertial forward-backward in
/// `M` coincides with the inertial proximal point method on `A + B` in `M̄`.
pub fn implicit_variant_metric(m: &Metric, b_linear: &LinearMap, lambda: f64) -> Result<Metric> {
    check_dim(m.dim(), b_linear.dim_in())?;
    let map = LinearMap::combination(vec![(1.0, m.map().clone()), (-lambda, b_linear.clone())])?;
    Metric::new(map).map_err(|e| match e {
        Error::NotPositiveDefinite { margin, .. } => Error::NotPositiveDefinite { what: "M − λB".into(), margin },
        other => other,
    })
}

/// Iterates `x_{k−1}`, `x_k` and the running sum `Σ α_j‖x_j − x_{j−1}‖²_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct FbState {
    pub x_prev: Vec<f64>,
    pub x_curr: Vec<f64>,
    pub k: usize,
    pub err_sum: f64,
}

impl FbState {
    /// `x_{−1} = x_0`.
    pub fn new(x0: Vec<f64>) -> Self {
        Self { x_prev: x0.clone(), x_curr: x0, k: 0, err_sum: 0.0 }
    }
}

/// One inertial forward-backward step with extrapolation `alpha`.
pub fn inertial_fb_step(
    state: &FbState,
    a: &dyn Resolvent,
    b: &dyn ForwardOp,
    m: &Metric,
    lambda: f64,
    alpha: f64,
) -> Result<FbState> {
    let dx_sq = m.norm_sq(&vector::sub(&state.x_curr, &state.x_prev));
    step_with_increment(state, a, b, m, lambda, alpha, dx_sq)
}

fn step_with_increment(
    state: &FbState,
    a: &dyn Resolvent,
    b: &dyn ForwardOp,
    m: &Metric,
    lambda: f64,
    alpha: f64,
    dx_sq: f64,
) -> Result<FbState> {
    check_dim(m.dim(), state.x_curr.len())?;
    check_dim(a.dim(), state.x_curr.len())?;
    check_dim(b.dim(), state.x_curr.len())?;
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let y = vector::extrapolate(&state.x_curr, &state.x_prev, alpha);
    let mut rhs = m.apply(&y);
    vector::axpy(-lambda, &b.eval(&y), &mut rhs);
    let x_next = a.resolve_in_metric(&rhs, m, lambda)?;
    Ok(FbState {
        x_prev: state.x_curr.clone(),
        x_curr: x_next,
        k: state.k + 1,
        err_sum: state.err_sum + alpha * dx_sq,
    })
}

/// Stopping and step parameters of [`solve_inertial_fb`].
#[derive(Clone, Copy, Debug)]
pub struct FbOptions {
    pub lambda: f64,
    pub schedule: AlphaSchedule,
    /// Stop when `‖x_{k+1} − x_k‖_M / max(1, ‖x_k‖_M) < tol`.
    pub tol: f64,
    pub k_max: usize,
}

/// Quantities of the step just taken, handed to the observer.
#[derive(Clone, Copy, Debug)]
pub struct IterInfo {
    pub k: usize,
    pub alpha: f64,
    /// `‖x_{k+1} − x_k‖_M`
    pub residual_m: f64,
    /// `α_k‖x_k − x_{k−1}‖²_M`
    pub e_k: f64,
    pub err_sum: f64,
}

#[derive(Clone, Debug)]
pub struct FbRun {
    pub state: FbState,
    pub converged: bool,
}

/// Run the inertial forward-backward iteration from `x0` until the
/// relative residual drops below `tol`, `k_max` is reached or the observer
/// breaks.
pub fn solve_inertial_fb<F>(
    pair: &MonotonePair,
    m: &Metric,
    x0: Vec<f64>,
    opts: &FbOptions,
    mut observer: F,
) -> Result<FbRun>
where
    F: FnMut(&FbState, &IterInfo) -> ControlFlow<()>,
{
    opts.schedule.validate()?;
    let mut state = FbState::new(x0);
    let mut dx_sq = 0.0;
    while state.k < opts.k_max {
        let alpha = next_alpha(&opts.schedule, state.k + 1, dx_sq);
        let next = step_with_increment(&state, pair.a.as_ref(), pair.b.as_ref(), m, opts.lambda, alpha, dx_sq)?;
        if !vector::all_finite(&next.x_curr) {
            return Err(Error::NonFinite(format!("iterate {}", next.k)));
        }
        let e_k = alpha * dx_sq;
        let x_norm = m.norm_sq(&state.x_curr).sqrt();
        dx_sq = m.norm_sq(&vector::sub(&next.x_curr, &next.x_prev));
        state = next;
        let info = IterInfo { k: state.k, alpha, residual_m: dx_sq.sqrt(), e_k, err_sum: state.err_sum };
        let stop = observer(&state, &info).is_break();
        if info.residual_m / x_norm.max(1.0) < opts.tol {
            return Ok(FbRun { state, converged: true });
        }
        if stop {
            break;
        }
    }
    Ok(FbRun { state, converged: false })
}
