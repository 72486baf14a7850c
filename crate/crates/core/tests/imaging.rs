use std::ops::ControlFlow;

use inertial_fb::imaging::*;
use inertial_fb::linops::{op_norm, op_norm_estimate, Metric};
use inertial_fb::operators::project_dual_ball;
use inertial_fb::primal_dual::{scalar_steps_from_lemma, solve_pd, PdConfig, PdOptions, PdState, Steps, ZeroLines, diag_precond};
use inertial_fb::splitting::{solve_inertial_fb, AlphaSchedule, FbOptions};
use inertial_fb_oracles as oracle;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Denoised image from the dual problem with FISTA extrapolation.
fn rof_via_dual(f: &ImageGrid, lambda: f64, iters: usize) -> Vec<f64> {
    let rof = build_rof_dual(f, lambda).unwrap();
    let opts = FbOptions { lambda: 1.0 / rof.lipschitz(), schedule: AlphaSchedule::Fista, tol: 0.0, k_max: iters };
    let run = solve_inertial_fb(&rof.pair, &Metric::identity(2 * f.len()), vec![0.0; 2 * f.len()], &opts, |_, _| {
        ControlFlow::Continue(())
    })
    .unwrap();
    rof.recover_u(&run.state.x_curr)
}

fn rof_via_saddle(f: &ImageGrid, lambda: f64, iters: usize) -> (Vec<f64>, Vec<f64>) {
    let prob = build_rof_saddle(f, lambda).unwrap();
    let st = scalar_steps_from_lemma(8f64.sqrt(), 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
    let cfg = PdConfig::new(Steps::Scalar { tau: st.tau, sigma: st.sigma }, AlphaSchedule::Constant(0.3));
    let run = solve_pd(&prob, &cfg, f.pixels.clone(), vec![0.0; 2 * f.len()], &PdOptions { tol: 0.0, k_max: iters }, |_, _| {
        ControlFlow::Continue(())
    })
    .unwrap();
    (run.state.x, run.state.y)
}

fn brute_force_three_pixels(f: [f64; 3], lambda: f64) -> [f64; 3] {
    let energy = |u: [f64; 3]| {
        (u[1] - u[0]).abs()
            + (u[2] - u[1]).abs()
            + 0.5 * lambda * u.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    };
    let search = |center: [f64; 3], half: i32, h: f64| {
        let mut best = (f64::INFINITY, center);
        for a in -half..=half {
            for b in -half..=half {
                for c in -half..=half {
                    let u = [center[0] + a as f64 * h, center[1] + b as f64 * h, center[2] + c as f64 * h];
                    let e = energy(u);
                    if e < best.0 {
                        best = (e, u);
                    }
                }
            }
        }
        best.1
    };
    let coarse = search([0.5; 3], 50, 0.01);
    search(coarse, 20, 1e-3)
}

#[test]
fn three_pixel_denoising_matches_brute_force() {
    let f = ImageGrid::new(3, 1, vec![0.0, 1.0, 0.0]).unwrap();
    let want = brute_force_three_pixels([0.0, 1.0, 0.0], 2.0);
    let dual = rof_via_dual(&f, 2.0, 3000);
    let (saddle, _) = rof_via_saddle(&f, 2.0, 3000);
    assert!(max_diff(&dual, &want) <= 1e-3, "{dual:?} vs {want:?}");
    assert!(max_diff(&saddle, &want) <= 1e-3, "{saddle:?} vs {want:?}");
}

#[test]
fn denoising_formulations_agree() {
    let f = ImageGrid::synthetic_shapes(16, 16).with_noise(0.1, 3).unwrap();
    let lambda = 10.0;
    let dual = rof_via_dual(&f, lambda, 20_000);
    let (saddle, _) = rof_via_saddle(&f, lambda, 20_000);
    let d = max_diff(&dual, &saddle);
    assert!(d <= 1e-6, "max difference {d}");
}

/// Forward differences, `(horizontal, vertical)` per pixel, zero at the far edges.
fn naive_gradient(w: usize, h: usize, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * w * h];
    for i in 0..h {
        for j in 0..w {
            let p = i * w + j;
            if j + 1 < w {
                out[2 * p] = u[p + 1] - u[p];
            }
            if i + 1 < h {
                out[2 * p + 1] = u[p + w] - u[p];
            }
        }
    }
    out
}

/// `(k * u)(i, j) = Σ k(a, b) u(i − a + c_r, j − b + c_c)` with clamped indices.
fn naive_convolution(w: usize, h: usize, k: &Kernel, u: &[f64]) -> Vec<f64> {
    let (cr, cc) = ((k.height / 2) as isize, (k.width / 2) as isize);
    let mut out = vec![0.0; w * h];
    for i in 0..h as isize {
        for j in 0..w as isize {
            let mut acc = 0.0;
            for a in 0..k.height as isize {
                for b in 0..k.width as isize {
                    let si = (i - a + cr).clamp(0, h as isize - 1) as usize;
                    let sj = (j - b + cc).clamp(0, w as isize - 1) as usize;
                    acc += k.taps[(a as usize) * k.width + b as usize] * u[si * w + sj];
                }
            }
            out[i as usize * w + j as usize] = acc;
        }
    }
    out
}

#[test]
fn gradient_and_convolution_match_naive_loops_and_adjoints() {
    let mut r = oracle::rng(41);
    let (w, h) = (9, 7);
    let g = grad_op(w, h);
    let k = Kernel::new(5, 3, oracle::random_vec(&mut r, 15)).unwrap();
    let c = conv_op(w, h, &k, Boundary::Replicate).unwrap();
    for _ in 0..100 {
        let u = oracle::random_vec(&mut r, w * h);
        let p = oracle::random_vec(&mut r, 2 * w * h);
        let v = oracle::random_vec(&mut r, w * h);
        assert!(max_diff(&g.apply(&u), &naive_gradient(w, h, &u)) < 1e-14);
        assert!(max_diff(&c.apply(&u), &naive_convolution(w, h, &k, &u)) < 1e-13);
        let lhs = oracle::dot(&g.apply(&u), &p);
        let rhs = oracle::dot(&u, &g.adjoint_apply(&p));
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let lhs = oracle::dot(&c.apply(&u), &v);
        let rhs = oracle::dot(&u, &c.adjoint_apply(&v));
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}

#[test]
fn gradient_norm_respects_the_bound() {
    for n in [2usize, 3, 8, 64, 128] {
        let exact = grad_norm(n, n);
        assert!(exact <= 8f64.sqrt());
        let est = op_norm_estimate(&grad_op(n, n), 2000, 1e-12, 5).unwrap();
        assert!(est <= exact * (1.0 + 1e-9), "n = {n}: {est} > {exact}");
        if n <= 8 {
            let dense: oracle::Mat = {
                let m = grad_op(n, n).to_dense();
                (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
            };
            let svd = oracle::max_singular_value(&dense);
            assert!((svd - exact).abs() < 1e-10, "n = {n}: {svd} vs {exact}");
        } else {
            assert!(est >= 0.99 * exact);
        }
    }
    for (w, h) in [(3, 5), (1, 4), (7, 2)] {
        let est = op_norm(&grad_op(w, h));
        assert!((est - grad_norm(w, h)).abs() < 1e-6);
    }
}

fn solve_deconv(d: &Deconv, steps: Steps, alpha: f64, iters: usize, n: usize) -> Vec<f64> {
    let cfg = PdConfig::new(steps, AlphaSchedule::Constant(alpha));
    let y0 = vec![0.0; d.saddle.dim_y()];
    solve_pd(&d.saddle, &cfg, vec![0.0; n], y0, &PdOptions { tol: 0.0, k_max: iters }, |_, _| ControlFlow::Continue(()))
        .unwrap()
        .state
        .x
}

#[test]
fn identity_blur_reduces_to_denoising() {
    let f = ImageGrid::synthetic_shapes(10, 10).with_noise(0.1, 4).unwrap();
    let lambda = 10.0;
    let d = build_deconv(&f, &Kernel::delta(), lambda, DeconvVariant::Explicit, Boundary::Replicate).unwrap();
    assert!((d.h_norm - 1.0).abs() < 1e-9);
    let st = scalar_steps_from_lemma(8f64.sqrt(), d.saddle.l_q(), 0.0, 1.0, 1.0, 1.0).unwrap();
    let u = solve_deconv(&d, Steps::Scalar { tau: st.tau, sigma: st.sigma }, 0.2, 20_000, f.len());
    let want = rof_via_dual(&f, lambda, 20_000);
    let diff = max_diff(&u, &want);
    assert!(diff < 1e-5, "{diff}");
}

#[test]
fn deconvolution_variants_agree() {
    let sharp = ImageGrid::synthetic_shapes(12, 12);
    let blur = Kernel::motion(5, 30.0).unwrap();
    let h = conv_op(12, 12, &blur, Boundary::Replicate).unwrap();
    let f = ImageGrid::new(12, 12, h.apply(&sharp.pixels)).unwrap().with_noise(0.01, 5).unwrap();
    let lambda = 100.0;
    let explicit = build_deconv(&f, &blur, lambda, DeconvVariant::Explicit, Boundary::Replicate).unwrap();
    let split = build_deconv(&f, &blur, lambda, DeconvVariant::SplitDual, Boundary::Replicate).unwrap();
    let st = scalar_steps_from_lemma(8f64.sqrt(), explicit.saddle.l_q(), 0.0, 1.0, 1.0, 10.0).unwrap();
    let u1 = solve_deconv(&explicit, Steps::Scalar { tau: st.tau, sigma: st.sigma }, 0.2, 30_000, f.len());
    let steps = diag_precond(split.saddle.k(), None, None, 1.0, 1.0, 10.0, 1.0, ZeroLines::Unit).unwrap();
    let u2 = solve_deconv(&split, steps, 0.3, 30_000, f.len());
    let model = EnergyModel::deconv(&f, explicit.h.clone(), lambda, None);
    let (e1, e2) = (model.primal(&u1), model.primal(&u2));
    assert!((e1 - e2).abs() <= 1e-7 * e1, "{e1} vs {e2}");
    assert!(max_diff(&u1, &u2) < 1e-3);
}

#[test]
fn weak_duality_along_the_iterates() {
    let f = ImageGrid::synthetic_shapes(16, 16).with_noise(0.1, 6).unwrap();
    let lambda = 10.0;
    let model = EnergyModel::denoise(&f, lambda);
    let prob = build_rof_saddle(&f, lambda).unwrap();
    let st = scalar_steps_from_lemma(8f64.sqrt(), 0.0, 0.0, 1.0, 1.0, 0.3).unwrap();
    let mut checked = 0;
    for (schedule, rho) in [(AlphaSchedule::Constant(1.0 / 3.0), 1.0), (AlphaSchedule::Constant(0.0), 1.9)] {
        let mut cfg = PdConfig::new(Steps::Scalar { tau: st.tau, sigma: st.sigma }, schedule);
        cfg.rho = rho;
        solve_pd(&prob, &cfg, f.pixels.clone(), vec![0.0; 2 * f.len()], &PdOptions { tol: 0.0, k_max: 500 }, |s: &PdState, _| {
            let p = project_dual_ball(&s.y).unwrap();
            let e = model.evaluate(&s.x, &p);
            assert!(e.gap.unwrap() >= -1e-9 * e.primal.abs());
            checked += 1;
            ControlFlow::Continue(())
        })
        .unwrap();
    }
    assert_eq!(checked, 1000);

    let rof = build_rof_dual(&f, lambda).unwrap();
    let opts = FbOptions { lambda: 1.0 / rof.lipschitz(), schedule: AlphaSchedule::Fista, tol: 0.0, k_max: 500 };
    solve_inertial_fb(&rof.pair, &Metric::identity(2 * f.len()), vec![0.0; 2 * f.len()], &opts, |s, _| {
        let e = model.evaluate(&rof.recover_u(&s.x_curr), &s.x_curr);
        assert!(e.gap.unwrap() >= -1e-9 * e.primal.abs());
        ControlFlow::Continue(())
    })
    .unwrap();
}

#[test]
fn initial_gap_is_total_variation() {
    let f = ImageGrid::synthetic_shapes(32, 32).with_noise(0.1, 7).unwrap();
    let model = EnergyModel::denoise(&f, 10.0);
    let e = model.evaluate(&f.pixels, &vec![0.0; 2 * f.len()]);
    let tv = total_variation(&grad_op(32, 32), &f.pixels);
    assert!((e.gap.unwrap() - tv).abs() < 1e-9 * tv);
}
