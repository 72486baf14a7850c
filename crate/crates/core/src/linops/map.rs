use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::sparse::CsrMatrix;
use super::vector::{dot, norm, seeded_probe};
use crate::error::{check_dim, invalid, Result};

/// A linear map given only through its action and the action of its adjoint.
pub trait MatrixFreeOp: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]);
}

/// Structural tag of a [`LinearMap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    ScaledIdentity,
    Diagonal,
    Dense,
    Sparse,
    Block2x2,
    /// Stacks, adjoints, sums and products of other maps.
    Composite,
    MatrixFree,
}

/// Bounded linear map between flat real vector spaces.
///
/// Cloning is cheap; the payload is shared and never mutated.
#[derive(Clone)]
pub struct LinearMap(Arc<Repr>);

enum Repr {
    ScaledIdentity { dim: usize, scale: f64 },
    Diagonal(Vec<f64>),
    Dense { rows: usize, cols: usize, data: Vec<f64> },
    Sparse { matrix: CsrMatrix, transpose: CsrMatrix },
    /// `[[a11, a12], [a21, a22]]` acting on `(x1, x2)`.
    Block { blocks: [LinearMap; 4] },
    Stack(Vec<LinearMap>),
    Adjoint(LinearMap),
    Combination(Vec<(f64, LinearMap)>),
    /// `outer ∘ inner`
    Compose { outer: LinearMap, inner: LinearMap },
    MatrixFree(Arc<dyn MatrixFreeOp>),
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearMap")
            .field("kind", &self.kind())
            .field("dim_in", &self.dim_in())
            .field("dim_out", &self.dim_out())
            .finish()
    }
}

impl LinearMap {
    fn wrap(repr: Repr) -> Self {
        Self(Arc::new(repr))
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        Self::wrap(Repr::ScaledIdentity { dim, scale })
    }

    pub fn zero(dim: usize) -> Self {
        Self::scaled_identity(dim, 0.0)
    }

    pub fn diagonal(entries: Vec<f64>) -> Self {
        Self::wrap(Repr::Diagonal(entries))
    }

    /// Dense map from row-major data.
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self::wrap(Repr::Dense { rows, cols, data }))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Self::dense(rows.len(), cols, data)
    }

    pub fn sparse(matrix: CsrMatrix) -> Self {
        let transpose = matrix.transpose();
        Self::wrap(Repr::Sparse { matrix, transpose })
    }

    pub fn matrix_free(op: Arc<dyn MatrixFreeOp>) -> Self {
        Self::wrap(Repr::MatrixFree(op))
    }

    /// Block map `[[a11, a12], [a21, a22]]`.
    pub fn block2x2(a11: Self, a12: Self, a21: Self, a22: Self) -> Result<Self> {
        check_dim(a11.dim_out(), a12.dim_out())?;
        check_dim(a21.dim_out(), a22.dim_out())?;
        check_dim(a11.dim_in(), a21.dim_in())?;
        check_dim(a12.dim_in(), a22.dim_in())?;
        Ok(Self::wrap(Repr::Block { blocks: [a11, a12, a21, a22] }))
    }

    /// Vertical stack `(m₁; m₂; …)` of maps sharing the input space.
    pub fn vstack(maps: Vec<Self>) -> Result<Self> {
        let first = maps.first().ok_or_else(|| invalid("empty stack"))?;
        for m in &maps {
            check_dim(first.dim_in(), m.dim_in())?;
        }
        Ok(Self::wrap(Repr::Stack(maps)))
    }

    /// `Σ cᵢ·mᵢ` over maps of identical shape.
    pub fn combination(terms: Vec<(f64, Self)>) -> Result<Self> {
        let (_, first) = terms.first().ok_or_else(|| invalid("empty combination"))?;
        for (_, m) in &terms {
            check_dim(first.dim_in(), m.dim_in())?;
            check_dim(first.dim_out(), m.dim_out())?;
        }
        Ok(Self::wrap(Repr::Combination(terms)))
    }

    /// `outer ∘ inner`
    pub fn compose(outer: Self, inner: Self) -> Result<Self> {
        check_dim(outer.dim_in(), inner.dim_out())?;
        Ok(Self::wrap(Repr::Compose { outer, inner }))
    }

    pub fn adjoint(&self) -> Self {
        match &*self.0 {
            Repr::Adjoint(inner) => inner.clone(),
            Repr::ScaledIdentity { .. } | Repr::Diagonal(_) => self.clone(),
            _ => Self::wrap(Repr::Adjoint(self.clone())),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match &*self.0 {
            Repr::ScaledIdentity { dim, scale } => Self::scaled_identity(*dim, s * scale),
            Repr::Diagonal(d) => Self::diagonal(d.iter().map(|v| s * v).collect()),
            _ => Self::wrap(Repr::Combination(vec![(s, self.clone())])),
        }
    }

    pub fn kind(&self) -> MapKind {
        match &*self.0 {
            Repr::ScaledIdentity { .. } => MapKind::ScaledIdentity,
            Repr::Diagonal(_) => MapKind::Diagonal,
            Repr::Dense { .. } => MapKind::Dense,
            Repr::Sparse { .. } => MapKind::Sparse,
            Repr::Block { .. } => MapKind::Block2x2,
            Repr::MatrixFree(_) => MapKind::MatrixFree,
            Repr::Stack(_) | Repr::Adjoint(_) | Repr::Combination(_) | Repr::Compose { .. } => {
                MapKind::Composite
            }
        }
    }

    pub fn dim_in(&self) -> usize {
        match &*self.0 {
            Repr::ScaledIdentity { dim, .. } => *dim,
            Repr::Diagonal(d) => d.len(),
            Repr::Dense { cols, .. } => *cols,
            Repr::Sparse { matrix, .. } => matrix.cols(),
            Repr::Block { blocks } => blocks[0].dim_in() + blocks[1].dim_in(),
            Repr::Stack(maps) => maps[0].dim_in(),
            Repr::Adjoint(m) => m.dim_out(),
            Repr::Combination(terms) => terms[0].1.dim_in(),
            Repr::Compose { inner, .. } => inner.dim_in(),
            Repr::MatrixFree(op) => op.dim_in(),
        }
    }

    pub fn dim_out(&self) -> usize {
        match &*self.0 {
            Repr::ScaledIdentity { dim, .. } => *dim,
            Repr::Diagonal(d) => d.len(),
            Repr::Dense { rows, .. } => *rows,
            Repr::Sparse { matrix, .. } => matrix.rows(),
            Repr::Block { blocks } => blocks[0].dim_out() + blocks[2].dim_out(),
            Repr::Stack(maps) => maps.iter().map(LinearMap::dim_out).sum(),
            Repr::Adjoint(m) => m.dim_in(),
            Repr::Combination(terms) => terms[0].1.dim_out(),
            Repr::Compose { outer, .. } => outer.dim_out(),
            Repr::MatrixFree(op) => op.dim_out(),
        }
    }

    /// `K x`. Panics on a dimension mismatch.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_out()];
        self.apply_into(x, &mut out);
        out
    }

    /// `K* y`. Panics on a dimension mismatch.
    pub fn adjoint_apply(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_in()];
        self.adjoint_into(y, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.dim_in(), "apply: input dimension mismatch");
        assert_eq!(out.len(), self.dim_out(), "apply: output dimension mismatch");
        self.forward(x, out, false);
    }

    pub fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.dim_out(), "adjoint: input dimension mismatch");
        assert_eq!(out.len(), self.dim_in(), "adjoint: output dimension mismatch");
        self.forward(y, out, true);
    }

    fn forward(&self, x: &[f64], out: &mut [f64], adj: bool) {
        match &*self.0 {
            Repr::ScaledIdentity { scale, .. } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = scale * v;
                }
            }
            Repr::Diagonal(d) => {
                for ((o, v), di) in out.iter_mut().zip(x).zip(d) {
                    *o = di * v;
                }
            }
            Repr::Dense { rows, cols, data } => {
                if adj {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    for r in 0..*rows {
                        let xr = x[r];
                        for (o, a) in out.iter_mut().zip(&data[r * cols..(r + 1) * cols]) {
                            *o += a * xr;
                        }
                    }
                } else {
                    for (r, o) in out.iter_mut().enumerate() {
                        *o = dot(&data[r * cols..(r + 1) * cols], x);
                    }
                }
            }
            Repr::Sparse { matrix, transpose } => {
                if adj {
                    transpose.mul_vec_into(x, out)
                } else {
                    matrix.mul_vec_into(x, out)
                }
            }
            Repr::Block { blocks } => {
                let [a11, a12, a21, a22] = blocks;
                if adj {
                    // [[a11*, a21*], [a12*, a22*]]
                    let (y1, y2) = x.split_at(a11.dim_out());
                    let (o1, o2) = out.split_at_mut(a11.dim_in());
                    a11.forward(y1, o1, true);
                    add_forward(a21, y2, o1, true);
                    a12.forward(y1, o2, true);
                    add_forward(a22, y2, o2, true);
                } else {
                    let (x1, x2) = x.split_at(a11.dim_in());
                    let (o1, o2) = out.split_at_mut(a11.dim_out());
                    a11.forward(x1, o1, false);
                    add_forward(a12, x2, o1, false);
                    a21.forward(x1, o2, false);
                    add_forward(a22, x2, o2, false);
                }
            }
            Repr::Stack(maps) => {
                if adj {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    let mut offset = 0;
                    for m in maps {
                        let part = &x[offset..offset + m.dim_out()];
                        add_forward(m, part, out, true);
                        offset += m.dim_out();
                    }
                } else {
                    let mut offset = 0;
                    for m in maps {
                        let n = m.dim_out();
                        m.forward(x, &mut out[offset..offset + n], false);
                        offset += n;
                    }
                }
            }
            Repr::Adjoint(m) => m.forward(x, out, !adj),
            Repr::Combination(terms) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut tmp = vec![0.0; out.len()];
                for (c, m) in terms {
                    m.forward(x, &mut tmp, adj);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += c * t;
                    }
                }
            }
            Repr::Compose { outer, inner } => {
                if adj {
                    let mut mid = vec![0.0; outer.dim_in()];
                    outer.forward(x, &mut mid, true);
                    inner.forward(&mid, out, true);
                } else {
                    let mut mid = vec![0.0; inner.dim_out()];
                    inner.forward(x, &mut mid, false);
                    outer.forward(&mid, out, false);
                }
            }
            Repr::MatrixFree(op) => {
                if adj {
                    op.adjoint_into(x, out)
                } else {
                    op.apply_into(x, out)
                }
            }
        }
    }

    /// Diagonal entries, when the map is structurally diagonal.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        match &*self.0 {
            Repr::ScaledIdentity { dim, scale } => Some(vec![*scale; *dim]),
            Repr::Diagonal(d) => Some(d.clone()),
            Repr::Adjoint(m) => m.as_diagonal(),
            Repr::Combination(terms) => {
                let mut acc = vec![0.0; self.dim_in()];
                for (c, m) in terms {
                    let d = m.as_diagonal()?;
                    acc.iter_mut().zip(&d).for_each(|(a, v)| *a += c * v);
                }
                Some(acc)
            }
            Repr::Compose { outer, inner } => {
                let (a, b) = (outer.as_diagonal()?, inner.as_diagonal()?);
                Some(a.iter().zip(&b).map(|(x, y)| x * y).collect())
            }
            _ => None,
        }
    }

    /// Explicit entries, for every kind except matrix-free payloads.
    pub fn to_csr(&self) -> Option<CsrMatrix> {
        let (rows, cols) = (self.dim_out(), self.dim_in());
        let trips: Vec<(usize, usize, f64)> = match &*self.0 {
            Repr::ScaledIdentity { dim, scale } => (0..*dim).map(|i| (i, i, *scale)).collect(),
            Repr::Diagonal(d) => d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
            Repr::Dense { data, .. } => data
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, &v)| (k / cols, k % cols, v))
                .collect(),
            Repr::Sparse { matrix, .. } => return Some(matrix.clone()),
            Repr::Block { blocks } => {
                let [a11, a12, a21, a22] = blocks;
                let (r1, c1) = (a11.dim_out(), a11.dim_in());
                let mut t = Vec::new();
                for (m, ro, co) in [(a11, 0, 0), (a12, 0, c1), (a21, r1, 0), (a22, r1, c1)] {
                    t.extend(m.to_csr()?.triplets().map(|(r, c, v)| (r + ro, c + co, v)));
                }
                t
            }
            Repr::Stack(maps) => {
                let mut t = Vec::new();
                let mut offset = 0;
                for m in maps {
                    t.extend(m.to_csr()?.triplets().map(|(r, c, v)| (r + offset, c, v)));
                    offset += m.dim_out();
                }
                t
            }
            Repr::Adjoint(m) => return Some(m.to_csr()?.transpose()),
            Repr::Combination(terms) => {
                let mut t = Vec::new();
                for (c, m) in terms {
                    t.extend(m.to_csr()?.triplets().map(|(r, col, v)| (r, col, c * v)));
                }
                t
            }
            Repr::Compose { outer, inner } => {
                let (o, i) = (outer.to_csr()?, inner.to_csr()?);
                let mut t = Vec::new();
                for r in 0..o.rows() {
                    for (mid, a) in o.row(r) {
                        t.extend(i.row(mid).map(|(c, b)| (r, c, a * b)));
                    }
                }
                t
            }
            Repr::MatrixFree(_) => return None,
        };
        Some(CsrMatrix::from_triplets(rows, cols, &trips))
    }

    /// Materialize as a dense matrix by probing with unit vectors.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let (rows, cols) = (self.dim_out(), self.dim_in());
        if let Repr::Dense { data, .. } = &*self.0 {
            return DMatrix::from_row_slice(rows, cols, data);
        }
        let mut m = DMatrix::zeros(rows, cols);
        let mut e = vec![0.0; cols];
        let mut col = vec![0.0; rows];
        for j in 0..cols {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            m.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        m
    }

    /// Largest relative violation of `⟨Kx, y⟩ = ⟨x, K*y⟩` over random probes.
    pub fn adjoint_defect(&self, probes: usize, seed: u64) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..probes as u64 {
            let x = seeded_probe(self.dim_in(), seed.wrapping_add(2 * p));
            let y = seeded_probe(self.dim_out(), seed.wrapping_add(2 * p + 1));
            let kx = self.apply(&x);
            let kty = self.adjoint_apply(&y);
            let scale = norm(&kx) * norm(&y) + norm(&x) * norm(&kty);
            if scale > 0.0 {
                worst = worst.max((dot(&kx, &y) - dot(&x, &kty)).abs() / scale);
            }
        }
        worst
    }

    /// Largest relative violation of `⟨Mx, y⟩ = ⟨x, My⟩` over random probes.
    pub fn self_adjoint_defect(&self, probes: usize, seed: u64) -> f64 {
        if self.dim_in() != self.dim_out() {
            return f64::INFINITY;
        }
        if self.as_diagonal().is_some() {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for p in 0..probes as u64 {
            let x = seeded_probe(self.dim_in(), seed.wrapping_add(2 * p));
            let y = seeded_probe(self.dim_in(), seed.wrapping_add(2 * p + 1));
            let mx = self.apply(&x);
            let my = self.apply(&y);
            let scale = norm(&mx) * norm(&y) + norm(&x) * norm(&my);
            if scale > 0.0 {
                worst = worst.max((dot(&mx, &y) - dot(&x, &my)).abs() / scale);
            }
        }
        worst
    }
}

fn add_forward(m: &LinearMap, x: &[f64], out: &mut [f64], adj: bool) {
    let n = out.len();
    let mut tmp = vec![0.0; n];
    m.forward(x, &mut tmp, adj);
    for (o, t) in out.iter_mut().zip(&tmp) {
        *o += t;
    }
}
