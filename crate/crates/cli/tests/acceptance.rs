//! Acceptance suite: one PASS/FAIL line per criterion on stderr.

use std::io::Write;
use std::ops::ControlFlow;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use ifb_cli::alpha_curve::alpha_curve;
use ifb_cli::config::ExperimentConfig;
use ifb_cli::experiment::{reference_energy, run_on_instance, Instance, RunOutput};
use ifb_cli::run_experiment;
use inertial_fb::imaging::{build_rof_dual, grad_op, ImageGrid};
use inertial_fb::linops::{block_pd_check, op_norm_estimate, CsrMatrix, LinearMap, Metric};
use inertial_fb::operators::{AffineForward, DualBallProjection, L2DataProx, QuadraticResolvent};
use inertial_fb::primal_dual::{diag_precond, ipdfb_step, PdConfig, PdState, SaddleProblem, Steps, ZeroLines};
use inertial_fb::splitting::{
    alpha_max_scalar, check_theorem1, check_theorem2, inertial_fb_step, next_alpha, solve_inertial_fb,
    AlphaSchedule, FbOptions, FbState, DEFAULT_EPS,
};
use inertial_fb_oracles as oracle;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dense(m: &oracle::Mat) -> LinearMap {
    LinearMap::from_rows(m).unwrap()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / (1.0 + y.abs())).fold(0.0, f64::max)
}

fn criterion(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = std::time::Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panic: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    let mut err = std::io::stderr();
    match &res {
        Ok(detail) => writeln!(err, "PASS criterion {n} ({name}, {secs:.1}s): {detail}"),
        Err(why) => writeln!(err, "FAIL criterion {n} ({name}, {secs:.1}s): {why}"),
    }
    .unwrap();
    res.is_ok()
}

fn c1_alpha_bound() -> Outcome {
    let a1 = alpha_max_scalar(1.0, 1e-6).map_err(|e| e.to_string())?;
    ensure((a1 - 0.2360).abs() <= 5e-4, || format!("alpha(1) = {a1}"))?;
    let a0 = alpha_max_scalar(1e-8, 1e-6).map_err(|e| e.to_string())?;
    ensure((a0 - 1.0 / 3.0).abs() <= 1e-3, || format!("alpha(1e-8) = {a0}"))?;
    let rows = alpha_curve(1e-6, 200).map_err(|e| e.to_string())?;
    ensure(rows.windows(2).all(|w| w[1].1 < w[0].1), || "curve not decreasing".into())?;
    ensure(rows.last().unwrap().1 > 0.0, || "curve leaves the positive range".into())?;
    Ok(format!("alpha(1) = {a1:.5}, alpha(1e-8) = {a0:.5}, {} decreasing rows", rows.len()))
}

fn c2_gradient_norm() -> Outcome {
    let est = op_norm_estimate(&grad_op(64, 64), 1000, 1e-10, 1).map_err(|e| e.to_string())?;
    ensure((2.7..=8f64.sqrt()).contains(&est), || format!("64x64 estimate {est}"))?;
    for n in [2, 3, 8, 64, 128] {
        let e = op_norm_estimate(&grad_op(n, n), 1000, 1e-10, 2).map_err(|e| e.to_string())?;
        ensure(e * e <= 8.0 + 1e-9, || format!("{n}x{n}: squared estimate {}", e * e))?;
    }
    Ok(format!("64x64 estimate {est:.6}"))
}

fn c3_checkers() -> Outcome {
    let mut r = oracle::rng(301);
    let (mut worst1, mut worst2, mut worst_b) = (0f64, 0f64, 0f64);
    for case in 0..1000 {
        let n = r.random_range(1..=16);
        let m_mat = oracle::random_spd(&mut r, n, 0.2);
        let l_mat = oracle::random_spd(&mut r, n, 0.1);
        let lambda = r.random_range(0.0..4.0);
        let alpha = r.random_range(0.0..0.4);
        let m = Metric::new(dense(&m_mat)).map_err(|e| e.to_string())?;

        let want1 = oracle::min_eigenvalue(&oracle::add_scaled(&m_mat, -lambda / 2.0, &l_mat));
        let got1 = check_theorem1(&m, &dense(&l_mat), lambda).map_err(|e| e.to_string())?;
        ensure(got1.ok == (want1 > 0.0), || format!("case {case}: first check disagrees ({want1})"))?;
        worst1 = worst1.max((got1.margin - want1).abs());

        let r_mat = oracle::add_scaled(
            &oracle::scale(&m_mat, 1.0 - 3.0 * alpha - DEFAULT_EPS),
            -(1.0 - alpha).powi(2) * lambda / 2.0,
            &l_mat,
        );
        let want2 = oracle::min_eigenvalue(&r_mat);
        let got2 = check_theorem2(&m, &dense(&l_mat), lambda, alpha, DEFAULT_EPS).map_err(|e| e.to_string())?;
        ensure(got2.ok == (want2 >= 0.0), || format!("case {case}: second check disagrees ({want2})"))?;
        worst2 = worst2.max((got2.margin - want2).abs());

        let k = r.random_range(1..=16);
        let a2 = oracle::random_spd(&mut r, k, 0.1);
        let b = oracle::scale(&oracle::random_mat(&mut r, k, n), [0.1, 0.5, 1.0, 3.0][case % 4]);
        let full = oracle::block(&m_mat, &oracle::transpose(&b), &b, &a2);
        let report = block_pd_check(&dense(&m_mat), &dense(&a2), &dense(&b)).map_err(|e| e.to_string())?;
        ensure(report.pd == (oracle::min_eigenvalue(&full) > 0.0), || format!("case {case}: block check disagrees"))?;
        let w1 = oracle::sym_fn(&m_mat, |v| 1.0 / v.sqrt());
        let w2 = oracle::sym_fn(&a2, |v| 1.0 / v.sqrt());
        let want_b = oracle::max_singular_value(&oracle::matmul(&oracle::matmul(&w2, &b), &w1));
        worst_b = worst_b.max((report.norm - want_b).abs() / want_b.max(1.0));
    }
    ensure(worst1 < 1e-8 && worst2 < 1e-8 && worst_b < 1e-8, || {
        format!("margin errors {worst1:e}, {worst2:e}, {worst_b:e}")
    })?;
    Ok(format!("3 x 1000 instances agree; worst margin errors {worst1:.1e}, {worst2:.1e}, {worst_b:.1e}"))
}

fn c4_reductions() -> Outcome {
    let mut r = oracle::rng(401);

    // (a) α = 0, no smooth terms: Chambolle–Pock.
    let mut worst_a = 0f64;
    for _ in 0..10 {
        let k_mat = oracle::random_mat(&mut r, 6, 4);
        let f = oracle::random_vec(&mut r, 4);
        let lam = 1.5;
        let prob = SaddleProblem::new(
            dense(&k_mat),
            Arc::new(L2DataProx { f: f.clone(), lambda: lam }),
            Arc::new(DualBallProjection { pairs: 3 }),
        )
        .map_err(|e| e.to_string())?;
        let norm = oracle::max_singular_value(&k_mat);
        let (tau, sigma) = (0.9 / norm, 0.8 / norm);
        let (x0, y0) = (oracle::random_vec(&mut r, 4), oracle::random_vec(&mut r, 6));
        let want = oracle::chambolle_pock(
            |z, t| z.iter().zip(&f).map(|(z, f)| (z + t * lam * f) / (1.0 + t * lam)).collect(),
            |w, _| {
                w.chunks(2)
                    .flat_map(|p| {
                        let n = (p[0] * p[0] + p[1] * p[1]).sqrt().max(1.0);
                        [p[0] / n, p[1] / n]
                    })
                    .collect()
            },
            &k_mat,
            tau,
            sigma,
            &x0,
            &y0,
            100,
        );
        let cfg = PdConfig::new(Steps::Scalar { tau, sigma }, AlphaSchedule::Constant(0.0));
        let mut s = PdState::new(x0, y0);
        for (wx, wy) in &want {
            s = ipdfb_step(&s, &prob, &cfg, 0.0).map_err(|e| e.to_string())?;
            worst_a = worst_a.max(max_rel_diff(&s.x, wx)).max(max_rel_diff(&s.y, wy));
        }
    }
    ensure(worst_a <= 1e-13, || format!("(a) deviation {worst_a:e}"))?;

    // (b) α = 0: plain forward–backward.
    let mut worst_b = 0f64;
    for _ in 0..10 {
        let n = 6;
        let q = oracle::random_spd(&mut r, n, 0.0);
        let b = oracle::random_vec(&mut r, n);
        let lq = oracle::max_eigenvalue(&q);
        let f = oracle::random_vec(&mut r, n);
        let op = AffineForward::new(dense(&q), b.clone(), LinearMap::scaled_identity(n, lq)).unwrap();
        let prox = L2DataProx { f: f.clone(), lambda: 0.7 };
        let step = 1.5 / lq;
        let x0 = oracle::random_vec(&mut r, n);
        let want = oracle::plain_forward_backward(
            |z, t| z.iter().zip(&f).map(|(z, f)| (z + t * 0.7 * f) / (1.0 + t * 0.7)).collect(),
            |x| diff(&oracle::matvec(&q, x), &b),
            &x0,
            step,
            100,
        );
        let m = Metric::identity(n);
        let mut s = FbState::new(x0);
        for w in &want {
            s = inertial_fb_step(&s, &prox, &op, &m, step, 0.0).map_err(|e| e.to_string())?;
            worst_b = worst_b.max(max_rel_diff(&s.x_curr, w));
        }
    }
    ensure(worst_b <= 1e-14, || format!("(b) deviation {worst_b:e}"))?;

    // (c) linear B: inertial proximal point in M − λB.
    let mut worst_c = 0f64;
    for _ in 0..10 {
        let n = 8;
        let m_mat = oracle::random_spd(&mut r, n, 1.0);
        let q = oracle::random_spd(&mut r, n, 0.0);
        let lambda = 0.5 * oracle::min_eigenvalue(&m_mat) / oracle::max_eigenvalue(&q);
        let curv: Vec<f64> = (0..n).map(|_| r.random_range(0.0..2.0)).collect();
        let shift = oracle::random_vec(&mut r, n);
        let a = QuadraticResolvent::new(curv.clone(), shift.clone()).unwrap();
        let bop = AffineForward::new(dense(&q), vec![0.0; n], LinearMap::scaled_identity(n, oracle::max_eigenvalue(&q)))
            .unwrap();
        let m = Metric::new(dense(&m_mat)).unwrap();
        let m_bar = oracle::add_scaled(&m_mat, -lambda, &q);
        let system = oracle::add_scaled(&oracle::add_scaled(&m_bar, lambda, &q), lambda, &oracle::diag(&curv));
        let x0 = oracle::random_vec(&mut r, n);
        let mut s = FbState::new(x0.clone());
        let (mut xp, mut x) = (x0.clone(), x0);
        for k in 1..=100 {
            let alpha = next_alpha(&AlphaSchedule::Fista, k, 0.0);
            s = inertial_fb_step(&s, &a, &bop, &m, lambda, alpha).map_err(|e| e.to_string())?;
            let y: Vec<f64> = x.iter().zip(&xp).map(|(a, b)| a + alpha * (a - b)).collect();
            let rhs: Vec<f64> = oracle::matvec(&m_bar, &y).iter().zip(&shift).map(|(v, c)| v + lambda * c).collect();
            xp = std::mem::replace(&mut x, oracle::solve(&system, &rhs));
            worst_c = worst_c.max(max_rel_diff(&s.x_curr, &x));
        }
    }
    ensure(worst_c <= 1e-10, || format!("(c) deviation {worst_c:e}"))?;
    Ok(format!("max deviations (a) {worst_a:.1e}, (b) {worst_b:.1e}, (c) {worst_c:.1e}"))
}

fn c5_preconditioner() -> Outcome {
    let mut r = oracle::rng(501);
    let exps = [0.0, 0.5, 1.0, 1.5, 2.0];
    let mut worst = 0f64;
    for case in 0..500 {
        let (rows, cols) = (r.random_range(1..16), r.random_range(1..16));
        let mut trips = Vec::new();
        let mut full = oracle::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if r.random::<f64>() < 0.3 {
                    let v = r.random_range(-3.0..3.0);
                    trips.push((i, j, v));
                    full[i][j] = v;
                }
            }
        }
        let s = exps[case % 5];
        let ratio = 10f64.powf(r.random_range(-2.0..2.0));
        let steps = diag_precond(
            &LinearMap::sparse(CsrMatrix::from_triplets(rows, cols, &trips)),
            None,
            None,
            1.0,
            1.0,
            ratio,
            s,
            ZeroLines::Unit,
        )
        .map_err(|e| e.to_string())?;
        let Steps::Diagonal { t, sigma } = steps else { return Err("scalar steps returned".into()) };
        let scaled: oracle::Mat =
            (0..rows).map(|i| (0..cols).map(|j| sigma[i].sqrt() * full[i][j] * t[j].sqrt()).collect()).collect();
        let norm = oracle::max_singular_value(&scaled);
        ensure(norm <= 1.0 + 1e-9, || format!("case {case} (s = {s}): norm {norm}"))?;
        worst = worst.max(norm);
    }
    let k = LinearMap::from_rows(&[vec![1.0, -1.0]]).unwrap();
    let Steps::Diagonal { t, sigma } = diag_precond(&k, None, None, 1.0, 1.0, 1.0, 1.0, ZeroLines::Reject).unwrap()
    else {
        return Err("scalar steps returned".into());
    };
    let eq = oracle::max_singular_value(&vec![vec![sigma[0].sqrt() * t[0].sqrt(), -sigma[0].sqrt() * t[1].sqrt()]]);
    ensure((eq - 1.0).abs() <= 1e-9, || format!("equality case norm {eq}"))?;
    Ok(format!("500 sparse operators, largest norm {worst:.9}; equality case {eq:.12}"))
}

fn denoise_cfg(ratio: f64, alpha: f64, rho: f64) -> ExperimentConfig {
    let text = format!(
        "[problem]\nkind = \"rof-saddle-pd\"\nlambda = 10.0\n\
         [image]\nwidth = 64\nheight = 64\nnoise_sigma = 0.1\nseed = 7\n\
         [solver]\nsteps = \"lemma\"\ntau_sigma_ratio = {ratio}\nalpha_mode = \"constant\"\nalpha = {alpha}\nrho = {rho}\n\
         [stop]\nk_max = 5000\ngap_rel = 1e-4\nstop_at_threshold = true\n"
    );
    ExperimentConfig::parse(&text, &[]).unwrap()
}

fn c6_denoising() -> Outcome {
    let mut notes = Vec::new();
    for ratio in [0.1, 0.01] {
        let base = denoise_cfg(ratio, 0.0, 1.0);
        let inst = Instance::build(&base).map_err(|e| e.to_string())?;
        let mut hits = Vec::new();
        for (name, cfg) in [
            ("alpha=0", base.clone()),
            ("alpha=1/3", denoise_cfg(ratio, 1.0 / 3.0, 1.0)),
            ("rho=1.9", denoise_cfg(ratio, 0.0, 1.9)),
        ] {
            let out = run_on_instance(&cfg, &inst, None).map_err(|e| e.to_string())?;
            let min_gap = out.trace.iter().filter_map(|r| r.gap).fold(f64::INFINITY, f64::min);
            ensure(min_gap >= -1e-10, || format!("tau/sigma {ratio}, {name}: gap {min_gap:e}"))?;
            ensure(out.trace.len() == out.summary.iterations + 1, || "trace misses iterates".into())?;
            let hit = out
                .summary
                .iterations_to_threshold
                .ok_or_else(|| format!("tau/sigma {ratio}, {name}: threshold not reached"))?;
            hits.push(hit);
        }
        ensure(hits[1] < hits[0], || format!("tau/sigma {ratio}: alpha = 1/3 needs {} vs {}", hits[1], hits[0]))?;
        ensure(hits[2] < hits[0], || format!("tau/sigma {ratio}: rho = 1.9 needs {} vs {}", hits[2], hits[0]))?;
        notes.push(format!("tau/sigma {ratio}: {} / {} / {}", hits[0], hits[1], hits[2]));
    }
    Ok(format!("iterations to 1e-4 gap0 (alpha=0 / alpha=1/3 / rho=1.9): {}", notes.join("; ")))
}

fn c7_fista() -> Outcome {
    let f = ImageGrid::synthetic_shapes(16, 16).with_noise(0.1, 7).map_err(|e| e.to_string())?;
    let lambda = 10.0;
    let rof = build_rof_dual(&f, lambda).map_err(|e| e.to_string())?;
    let dim = 2 * f.len();
    let m = Metric::identity(dim);
    let l = rof.lipschitz();

    let mut q_star = f64::INFINITY;
    let reference = solve_inertial_fb(
        &rof.pair,
        &m,
        vec![0.0; dim],
        &FbOptions { lambda: 1.0 / l, schedule: AlphaSchedule::Fista, tol: 1e-12, k_max: 1_000_000 },
        |s, _| {
            q_star = q_star.min(rof.objective(&s.x_curr));
            ControlFlow::Continue(())
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(reference.converged, || "reference run did not reach residual 1e-12".into())?;
    let dist0 = oracle::dot(&reference.state.x_curr, &reference.state.x_curr);

    let mut worst = f64::NEG_INFINITY;
    solve_inertial_fb(
        &rof.pair,
        &m,
        vec![0.0; dim],
        &FbOptions { lambda: 1.0 / l, schedule: AlphaSchedule::Fista, tol: 0.0, k_max: 3000 },
        |s, info| {
            let bound = 2.0 * l * dist0 / ((info.k as f64 + 1.0).powi(2));
            worst = worst.max(rof.objective(&s.x_curr) - q_star - bound);
            ControlFlow::Continue(())
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(worst <= 0.0, || format!("function gap exceeds the bound by {worst:e}"))?;

    let mut slopes = Vec::new();
    for c in [1e4, 1e5] {
        let text = format!(
            "[problem]\nkind = \"rof-dual-fista\"\nlambda = {lambda}\n\
             [image]\nwidth = 16\nheight = 16\nnoise_sigma = 0.1\nseed = 7\n\
             [solver]\nalpha_mode = \"fista-safeguarded\"\nc = {c}\n[stop]\nk_max = 3000\n"
        );
        let out = run_experiment(&ExperimentConfig::parse(&text, &[]).unwrap()).map_err(|e| e.to_string())?;
        let pts: Vec<(f64, f64)> = out.trace.iter().filter(|r| r.k >= 50).map(|r| (r.k as f64, r.e_k)).collect();
        let slope = oracle::loglog_slope(&pts);
        let total = out.trace.last().unwrap().err_sum;
        ensure(slope <= -2.0, || format!("c = {c}: slope {slope}"))?;
        ensure(total.is_finite(), || format!("c = {c}: err_sum {total}"))?;
        slopes.push(format!("c = {c:e}: slope {slope:.2}, err_sum {total:.3}"));
    }
    Ok(format!("reference after {} iterations; bound holds for k <= 3000; {}", reference.state.k, slopes.join("; ")))
}

fn deconv_cfg(kind: &str, steps: &str, alpha: &str) -> ExperimentConfig {
    let text = format!(
        "[problem]\nkind = \"{kind}\"\nlambda = 1000.0\n\
         [image]\nwidth = 64\nheight = 64\nnoise_sigma = 0.01\nseed = 11\n\
         [blur]\nsize = 7\nangle = 30.0\n\
         [solver]\n{steps}\nr = 100.0\n{alpha}\n\
         [stop]\nk_max = 5000\ngap_abs = 1e-2\nstop_at_threshold = true\nreference_iters = 10000\n"
    );
    ExperimentConfig::parse(&text, &[]).unwrap()
}

fn c8_deconvolution() -> Outcome {
    let lemma = "steps = \"lemma\"";
    let precond = "steps = \"precond\"\ns = 1.0\nzero_lines = \"unit\"";
    let plain = "alpha_mode = \"constant\"\nalpha = 0.0";
    let pairs = [
        ("explicit", deconv_cfg("deconv-explicit", lemma, plain), deconv_cfg("deconv-explicit", lemma, "alpha_mode = \"bound\"")),
        (
            "split-dual",
            deconv_cfg("deconv-splitdual", precond, plain),
            deconv_cfg("deconv-splitdual", precond, "alpha_mode = \"constant\"\nalpha = 0.3333333333333333"),
        ),
    ];
    let inst = Instance::build(&pairs[0].1).map_err(|e| e.to_string())?;
    let reference = reference_energy(&pairs[0].1, &inst).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (name, plain_cfg, inertial_cfg) in &pairs {
        let run = |cfg: &ExperimentConfig| -> Result<RunOutput, String> {
            run_on_instance(cfg, &inst, reference).map_err(|e| e.to_string())
        };
        let (p, i) = (run(plain_cfg)?, run(inertial_cfg)?);
        let hp = p.summary.iterations_to_threshold.ok_or_else(|| format!("{name}, alpha = 0: gap not below 1e-2"))?;
        let hi = i.summary.iterations_to_threshold.ok_or_else(|| format!("{name}, inertial: gap not below 1e-2"))?;
        ensure(hi < hp, || format!("{name}: inertial needs {hi} vs {hp}"))?;
        notes.push(format!("{name} {hp} -> {hi} (alpha {:.4})", i.trace.last().unwrap().alpha));
    }
    Ok(format!("reference energy {:.8}; iterations to gap 1e-2: {}", reference.unwrap(), notes.join(", ")))
}

fn c9_energy_audit() -> Outcome {
    let mut r = oracle::rng(901);
    let half_sq = |mat: &oracle::Mat, v: &[f64]| 0.5 * oracle::dot(&oracle::matvec(mat, v), v);
    let mut tightest = f64::INFINITY;
    let mut steps = 0;
    for run in 0..20 {
        let n = r.random_range(2..8);
        let m_mat = oracle::random_spd(&mut r, n, 0.5);
        let q = oracle::random_spd(&mut r, n, 0.1);
        let b = oracle::random_vec(&mut r, n);
        let curv: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let shift = oracle::random_vec(&mut r, n);
        let lambda = r.random_range(0.5..1.95) * oracle::min_eigenvalue(&m_mat) / oracle::max_eigenvalue(&q);
        let s_mat = oracle::add_scaled(&m_mat, -lambda / 2.0, &q);
        let rhs: Vec<f64> = b.iter().zip(&shift).map(|(a, c)| a + c).collect();
        let x_star = oracle::solve(&oracle::add_scaled(&q, 1.0, &oracle::diag(&curv)), &rhs);

        let a = QuadraticResolvent::new(curv, shift).unwrap();
        let op = AffineForward::new(dense(&q), b, dense(&q)).unwrap();
        let m = Metric::new(dense(&m_mat)).unwrap();
        let schedule = match run % 3 {
            0 => AlphaSchedule::Fista,
            1 => AlphaSchedule::Constant(r.random_range(0.0..0.9)),
            _ => AlphaSchedule::FistaSafeguarded { c: 1e-2 },
        };
        let mut s = FbState::new(oracle::random_vec(&mut r, n));
        let mut phi_prev = half_sq(&m_mat, &diff(&s.x_curr, &x_star));
        for k in 1..=100 {
            let dx = diff(&s.x_curr, &s.x_prev);
            let alpha = next_alpha(&schedule, k, 2.0 * half_sq(&m_mat, &dx));
            let y: Vec<f64> = s.x_curr.iter().zip(&s.x_prev).map(|(a, b)| a + alpha * (a - b)).collect();
            let next = inertial_fb_step(&s, &a, &op, &m, lambda, alpha).map_err(|e| e.to_string())?;
            let phi = half_sq(&m_mat, &diff(&s.x_curr, &x_star));
            let phi_next = half_sq(&m_mat, &diff(&next.x_curr, &x_star));
            let lhs = phi_next - phi - alpha * (phi - phi_prev);
            let rhs = -half_sq(&s_mat, &diff(&next.x_curr, &y)) + 2.0 * alpha * half_sq(&m_mat, &dx);
            ensure(lhs <= rhs + 1e-10, || format!("run {run}, k {k}: {lhs:e} > {rhs:e}"))?;
            tightest = tightest.min(rhs - lhs);
            phi_prev = phi;
            s = next;
            steps += 1;
        }
    }
    Ok(format!("{steps} iterations over 20 runs; smallest slack {tightest:.2e}"))
}

#[test]
fn acceptance() {
    let results = [
        criterion(1, "extrapolation bound values", c1_alpha_bound),
        criterion(2, "gradient operator norm", c2_gradient_norm),
        criterion(3, "checkers against dense eigensolver", c3_checkers),
        criterion(4, "reduction identities", c4_reductions),
        criterion(5, "diagonal preconditioner soundness", c5_preconditioner),
        criterion(6, "TV denoising", c6_denoising),
        criterion(7, "FISTA on the dual ROF problem", c7_fista),
        criterion(8, "TV deconvolution variants", c8_deconvolution),
        criterion(9, "one-step energy inequality audit", c9_energy_audit),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
