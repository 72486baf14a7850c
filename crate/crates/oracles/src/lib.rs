//! Brute-force reference implementations for tests.
//!
//! Nothing in here shares code with the `inertial-fb` solver paths: dense
//! matrices are plain row-major `Vec<Vec<f64>>`, eigenvalues come from a
//! cyclic Jacobi sweep and linear systems from Gaussian elimination with
//! partial pivoting. The point is to be obviously correct, not fast.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_mat(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    (0..rows).map(|_| random_vec(rng, cols)).collect()
}

/// Random symmetric matrix with entries in [-1, 1].
pub fn random_sym(rng: &mut impl Rng, n: usize) -> Mat {
    let a = random_mat(rng, n, n);
    let mut s = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[i][j] = 0.5 * (a[i][j] + a[j][i]);
        }
    }
    s
}

/// Random SPD matrix `AᵀA / n + shift·I`.
pub fn random_spd(rng: &mut impl Rng, n: usize, shift: f64) -> Mat {
    let a = random_mat(rng, n, n);
    let mut s = matmul(&transpose(&a), &a);
    for (i, row) in s.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= n as f64;
        }
        row[i] += shift;
    }
    s
}

pub fn zeros(rows: usize, cols: usize) -> Mat {
    vec![vec![0.0; cols]; rows]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn diag(d: &[f64]) -> Mat {
    let mut m = zeros(d.len(), d.len());
    for (i, &v) in d.iter().enumerate() {
        m[i][i] = v;
    }
    m
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    let (r, c) = (a.len(), a[0].len());
    let mut t = zeros(c, r);
    for i in 0..r {
        for j in 0..c {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (r, inner, c) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = zeros(r, c);
    for i in 0..r {
        for k in 0..inner {
            let aik = a[i][k];
            for j in 0..c {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

pub fn add_scaled(a: &Mat, s: f64, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + s * y).collect())
        .collect()
}

pub fn scale(a: &Mat, s: f64) -> Mat {
    a.iter().map(|r| r.iter().map(|x| s * x).collect()).collect()
}

/// Assemble `[[a11, a12], [a21, a22]]`.
pub fn block(a11: &Mat, a12: &Mat, a21: &Mat, a22: &Mat) -> Mat {
    let mut out = Vec::new();
    for (l, r) in a11.iter().zip(a12) {
        out.push(l.iter().chain(r).copied().collect());
    }
    for (l, r) in a21.iter().zip(a22) {
        out.push(l.iter().chain(r).copied().collect());
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[i][j] * m[i][j];
                }
            }
        }
        let total: f64 = m.iter().flatten().map(|v| v * v).sum();
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn min_eigenvalue(a: &Mat) -> f64 {
    jacobi_eigenvalues(a)[0]
}

pub fn max_eigenvalue(a: &Mat) -> f64 {
    *jacobi_eigenvalues(a).last().unwrap()
}

/// Largest singular value via the eigenvalues of `AᵀA`.
pub fn max_singular_value(a: &Mat) -> f64 {
    max_eigenvalue(&matmul(&transpose(a), a)).max(0.0).sqrt()
}

/// Symmetric matrix function `f(A)` through Jacobi eigenvectors.
pub fn sym_fn(a: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let n = a.len();
    let mut m = a.clone();
    let mut v = identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut out = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[i][j] = (0..n).map(|k| v[i][k] * f(m[k][k]) * v[j][k]).sum();
        }
    }
    out
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| row.iter().copied().chain([bi]).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        assert!(p.abs() > 1e-300, "singular system");
        for r in (col + 1)..n {
            let f = m[r][col] / p;
            if f != 0.0 {
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Central finite-difference gradient of a scalar function.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = probe[i];
            probe[i] = xi + h;
            let fp = f(&probe);
            probe[i] = xi - h;
            let fm = f(&probe);
            probe[i] = xi;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Plain forward-backward `x ← prox(x − step·grad(x), step)`, every iterate.
pub fn plain_forward_backward(
    prox: impl Fn(&[f64], f64) -> Vec<f64>,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    step: f64,
    iters: usize,
) -> Vec<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        let g = grad(&x);
        let z: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        x = prox(&z, step);
        out.push(x.clone());
    }
    out
}

/// The classical primal-dual hybrid gradient loop with extrapolation on the
/// primal variable, written directly from its textbook form:
///
/// ```text
/// x⁺ = prox_G(x − τ Kᵀ y)
/// x̄  = 2x⁺ − x
/// y⁺ = prox_F*(y + σ K x̄)
/// ```
pub fn chambolle_pock(
    prox_g: impl Fn(&[f64], f64) -> Vec<f64>,
    prox_fstar: impl Fn(&[f64], f64) -> Vec<f64>,
    k: &Mat,
    tau: f64,
    sigma: f64,
    x0: &[f64],
    y0: &[f64],
    iters: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let kt = transpose(k);
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        let kty = matvec(&kt, &y);
        let z: Vec<f64> = x.iter().zip(&kty).map(|(a, b)| a - tau * b).collect();
        let xn = prox_g(&z, tau);
        let xbar: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| 2.0 * a - b).collect();
        let kx = matvec(k, &xbar);
        let w: Vec<f64> = y.iter().zip(&kx).map(|(a, b)| a + sigma * b).collect();
        y = prox_fstar(&w, sigma);
        x = xn;
        out.push((x.clone(), y.clone()));
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
