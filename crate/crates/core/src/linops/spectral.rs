//! Spectral estimates: operator norms, smallest eigenvalues and the block
//! positive-definiteness test used to certify primal-dual metrics.
//!
//! Maps with at most [`DENSE_LIMIT`] rows and columns are materialized and
//! handed to a dense symmetric eigensolver. Larger maps fall back to power
//! iteration, which is one-sided: norms are underestimated and smallest
//! eigenvalues overestimated.

use nalgebra::{DMatrix, SymmetricEigen};

use super::map::LinearMap;
use super::metric::Metric;
use super::vector::{dot, normalize, seeded_probe};
use crate::error::{check_dim, invalid, Error, Result};

/// Largest dimension for which dense eigensolves are used.
pub const DENSE_LIMIT: usize = 512;
pub const DEFAULT_POWER_ITERS: usize = 1000;
pub const DEFAULT_POWER_TOL: f64 = 1e-9;
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Relative tolerance of the randomized self-adjointness probe.
pub const SELF_ADJOINT_TOL: f64 = 1e-10;

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration, returned as a Rayleigh quotient (never above the true value).
pub(crate) fn power_max_eigenvalue(
    dim: usize,
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    iters: usize,
    tol: f64,
    seed: u64,
) -> f64 {
    let mut v = seeded_probe(dim, seed);
    if normalize(&mut v) == 0.0 {
        return 0.0;
    }
    let mut prev = f64::NAN;
    let mut best: f64 = 0.0;
    for _ in 0..iters {
        let mut w = apply(&v);
        let lam = dot(&w, &v);
        best = best.max(lam);
        if normalize(&mut w) == 0.0 {
            break;
        }
        v = w;
        if (lam - prev).abs() <= tol * lam.abs() {
            break;
        }
        prev = lam;
    }
    best
}

/// Power-method estimate of `‖K‖`.
///
/// Deterministic for a given `seed`; the estimate never exceeds the true norm.
pub fn op_norm_estimate(k: &LinearMap, iters: usize, tol: f64, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(invalid("power iteration needs at least one iteration"));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let lam = power_max_eigenvalue(k.dim_in(), |v| k.adjoint_apply(&k.apply(v)), iters, tol, seed);
    Ok(lam.max(0.0).sqrt())
}

/// [`op_norm_estimate`] with default iteration count, tolerance and seed.
pub fn op_norm(k: &LinearMap) -> f64 {
    op_norm_estimate(k, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL, DEFAULT_SEED)
        .expect("default power-iteration parameters are valid")
}

fn ensure_self_adjoint(m: &LinearMap) -> Result<()> {
    check_dim(m.dim_in(), m.dim_out())?;
    let defect = m.self_adjoint_defect(4, DEFAULT_SEED);
    if defect > SELF_ADJOINT_TOL {
        return Err(Error::NotSelfAdjoint { defect });
    }
    Ok(())
}

fn dense_symmetric_eigenvalues(m: &LinearMap) -> nalgebra::DVector<f64> {
    let d = m.to_dense();
    let sym = (&d + d.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues
}

/// Smallest-eigenvalue estimate of a self-adjoint map.
///
/// Exact for diagonal maps, a dense eigensolve up to [`DENSE_LIMIT`], and a
/// shifted power iteration beyond that (stopping at relative change `tol`).
pub fn pd_margin(m: &LinearMap, tol: f64) -> Result<f64> {
    ensure_self_adjoint(m)?;
    if let Some(d) = m.as_diagonal() {
        return Ok(d.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let n = m.dim_in();
    if n <= DENSE_LIMIT {
        return Ok(dense_symmetric_eigenvalues(m).min());
    }
    // Dominant |λ| first, then the top of (ρ·I − M) gives ρ − λ_min.
    let dominant = power_max_eigenvalue(n, |v| m.apply(&m.apply(v)), DEFAULT_POWER_ITERS, tol, DEFAULT_SEED)
        .sqrt();
    let shift = 1.01 * dominant;
    let top = power_max_eigenvalue(
        n,
        |v| {
            let mv = m.apply(v);
            v.iter().zip(&mv).map(|(a, b)| shift * a - b).collect()
        },
        DEFAULT_POWER_ITERS,
        tol,
        DEFAULT_SEED + 1,
    );
    Ok(shift - top)
}

/// Outcome of [`block_pd_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockPdReport {
    /// `‖A₂^{-1/2} B A₁^{-1/2}‖ < 1`
    pub pd: bool,
    pub norm: f64,
}

/// Positive definiteness of `[[A₁, B*], [B, A₂]]` through the weighted norm
/// `‖A₂^{-1/2} B A₁^{-1/2}‖`, which must stay below one.
pub fn block_pd_check(a1: &LinearMap, a2: &LinearMap, b: &LinearMap) -> Result<BlockPdReport> {
    check_dim(a1.dim_in(), b.dim_in())?;
    check_dim(a2.dim_in(), b.dim_out())?;
    let norm = weighted_norm(a1, a2, b)?;
    Ok(BlockPdReport { pd: norm < 1.0, norm })
}

pub(crate) fn weighted_norm(a1: &LinearMap, a2: &LinearMap, b: &LinearMap) -> Result<f64> {
    let (n, m) = (b.dim_in(), b.dim_out());
    let small = n + m <= DENSE_LIMIT;

    if let (Some(d1), Some(d2)) = (a1.as_diagonal(), a2.as_diagonal()) {
        for (what, d) in [("A1", &d1), ("A2", &d2)] {
            let margin = d.iter().copied().fold(f64::INFINITY, f64::min);
            if !(margin > 0.0) {
                return Err(Error::NotPositiveDefinite { what: what.into(), margin });
            }
        }
        let s1 = LinearMap::diagonal(d1.iter().map(|v| 1.0 / v.sqrt()).collect());
        let s2 = LinearMap::diagonal(d2.iter().map(|v| 1.0 / v.sqrt()).collect());
        let scaled = LinearMap::compose(s2, LinearMap::compose(b.clone(), s1)?)?;
        if small {
            let dense = scaled.to_dense();
            return Ok(dense.singular_values().max());
        }
        return op_norm_estimate(&scaled, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL, DEFAULT_SEED);
    }

    let m1 = Metric::new(a1.clone()).map_err(|e| rename_pd(e, "A1"))?;
    let m2 = Metric::new(a2.clone()).map_err(|e| rename_pd(e, "A2"))?;

    if small {
        // A₁ = L Lᵀ; the spectrum of L⁻¹ B* A₂⁻¹ B L⁻ᵀ is that of the target.
        let l = a1
            .to_dense()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite { what: "A1".into(), margin: m1.margin() })?
            .l();
        let bd = b.to_dense();
        let a2d = a2.to_dense();
        let chol2 = a2d
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite { what: "A2".into(), margin: m2.margin() })?;
        let inner = bd.transpose() * chol2.solve(&bd);
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("Cholesky factor is invertible");
        let c = &linv * inner * linv.transpose();
        let sym = (&c + c.transpose()) * 0.5;
        return Ok(SymmetricEigen::new(sym).eigenvalues.max().max(0.0).sqrt());
    }

    // Generalized power iteration on A₁⁻¹ B* A₂⁻¹ B, normalized in the A₁ norm.
    let mut v = seeded_probe(n, DEFAULT_SEED);
    let mut best: f64 = 0.0;
    let mut prev = f64::NAN;
    for _ in 0..DEFAULT_POWER_ITERS {
        let nv = m1.norm_sq(&v).sqrt();
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let w = b.adjoint_apply(&m2.solve(&b.apply(&v)));
        let mu = dot(&w, &v);
        best = best.max(mu);
        v = m1.solve(&w);
        if (mu - prev).abs() <= DEFAULT_POWER_TOL * mu.abs() {
            break;
        }
        prev = mu;
    }
    Ok(best.max(0.0).sqrt())
}

fn rename_pd(e: Error, what: &str) -> Error {
    match e {
        Error::NotPositiveDefinite { margin, .. } => Error::NotPositiveDefinite { what: what.into(), margin },
        other => other,
    }
}
