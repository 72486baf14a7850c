use nalgebra::{Cholesky, DVector, Dyn};

use super::map::LinearMap;
use super::spectral::{pd_margin, DEFAULT_POWER_TOL, DENSE_LIMIT};
use super::vector::{dot, norm};
use crate::error::{check_dim, Error, Result};

enum Solver {
    /// Reciprocal diagonal.
    Diagonal(Vec<f64>),
    Cholesky(Cholesky<f64, Dyn>),
    ConjugateGradient,
}

/// Self-adjoint positive definite map used as an inner product
/// `⟨x, y⟩_M = ⟨Mx, y⟩`, with its inverse available through [`Metric::solve`].
pub struct Metric {
    map: LinearMap,
    margin: f64,
    solver: Solver,
}

impl std::fmt::Debug for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Metric").field("map", &self.map).field("margin", &self.margin).finish()
    }
}

impl Metric {
    /// Validate self-adjointness and positive definiteness of `map`.
    pub fn new(map: LinearMap) -> Result<Self> {
        let margin = pd_margin(&map, DEFAULT_POWER_TOL)?;
        if !(margin > 0.0) {
            return Err(Error::NotPositiveDefinite { what: "metric".into(), margin });
        }
        Self::build(map, margin)
    }

    /// Accept a metric whose positivity has been certified elsewhere with
    /// the lower bound `margin`.
    pub(crate) fn with_certified_margin(map: LinearMap, margin: f64) -> Result<Self> {
        if !(margin > 0.0) {
            return Err(Error::NotPositiveDefinite { what: "metric".into(), margin });
        }
        Self::build(map, margin)
    }

    fn build(map: LinearMap, margin: f64) -> Result<Self> {
        let solver = if let Some(d) = map.as_diagonal() {
            Solver::Diagonal(d.iter().map(|v| 1.0 / v).collect())
        } else if map.dim_in() <= DENSE_LIMIT {
            let dense = map.to_dense();
            let sym = (&dense + dense.transpose()) * 0.5;
            match sym.cholesky() {
                Some(c) => Solver::Cholesky(c),
                None => return Err(Error::NotPositiveDefinite { what: "metric".into(), margin }),
            }
        } else {
            Solver::ConjugateGradient
        };
        Ok(Self { map, margin, solver })
    }

    pub fn identity(dim: usize) -> Self {
        Self { map: LinearMap::identity(dim), margin: 1.0, solver: Solver::Diagonal(vec![1.0; dim]) }
    }

    pub fn diagonal(entries: Vec<f64>) -> Result<Self> {
        Self::new(LinearMap::diagonal(entries))
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.map.dim_in()
    }

    /// Cached smallest-eigenvalue estimate (or certified lower bound).
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        self.map.as_diagonal()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.map.apply(x)
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.map.apply(x), y)
    }

    /// `‖x‖²_M`; panics on a dimension mismatch (see [`m_norm_sq`]).
    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.inner(x, x)
    }

    /// `M⁻¹ v`
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        match &self.solver {
            Solver::Diagonal(inv) => v.iter().zip(inv).map(|(a, b)| a * b).collect(),
            Solver::Cholesky(c) => c.solve(&DVector::from_column_slice(v)).as_slice().to_vec(),
            Solver::ConjugateGradient => self.conjugate_gradient(v),
        }
    }

    fn conjugate_gradient(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let stop = (1e-14 * norm(b)).powi(2);
        for _ in 0..10 * n.max(10) {
            if rr <= stop {
                break;
            }
            let ap = self.map.apply(&p);
            let step = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            let rr_next = dot(&r, &r);
            let beta = rr_next / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_next;
        }
        x
    }
}

/// `‖x‖²_M = ⟨Mx, x⟩`
pub fn m_norm_sq(m: &Metric, x: &[f64]) -> Result<f64> {
    check_dim(m.dim(), x.len())?;
    Ok(m.norm_sq(x))
}
