//! Running one configured experiment: build the problem instance, pick
//! steps and extrapolation, solve while logging energies, write artifacts.

use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use inertial_fb::imaging::{
    build_deconv, build_rof_dual, build_rof_saddle, conv_op, grad_norm, Boundary, DeconvVariant, Energies, EnergyModel,
    ImageGrid, Kernel, GRAD_NORM_SQ_BOUND,
};
use inertial_fb::linops::Metric;
use inertial_fb::operators::project_dual_ball;
use inertial_fb::primal_dual::{
    check_theorem3, check_theorem4, diag_precond, scalar_steps_from_lemma, solve_pd, PdConfig, PdOptions, SaddleProblem,
    Steps,
};
use inertial_fb::splitting::{
    check_theorem1, check_theorem2, solve_inertial_fb, AlphaSchedule, FbOptions, IterInfo,
};
use serde::{Deserialize, Serialize};

use crate::config::{AlphaMode, ExperimentConfig, ProblemKind, SolverSection, StepRule};
use crate::error::{CliError, Result};
use crate::image_io::{read_image, write_pgm};
use crate::trace::{TraceLog, TraceRow};

/// Observed data of an experiment, shared by paired runs.
#[derive(Clone, Debug)]
pub struct Instance {
    pub truth: ImageGrid,
    pub observed: ImageGrid,
    pub kernel: Option<Kernel>,
    pub boundary: Boundary,
}

impl Instance {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let img = &cfg.image;
        let mut truth = match &img.path {
            Some(p) => read_image(p)?,
            None => ImageGrid::synthetic_shapes(img.width, img.height),
        };
        if let Some([x0, y0, w, h]) = img.crop {
            truth = truth.crop(x0, y0, w, h)?;
        }
        let boundary: Boundary = cfg.blur.boundary.into();
        let (clean, kernel) = if cfg.problem.kind.is_deconv() {
            let kernel = Kernel::motion(cfg.blur.size, cfg.blur.angle)?;
            let h = conv_op(truth.width, truth.height, &kernel, boundary)?;
            (ImageGrid::new(truth.width, truth.height, h.apply(&truth.pixels))?, Some(kernel))
        } else {
            (truth.clone(), None)
        };
        let observed = if img.noise_sigma > 0.0 { clean.with_noise(img.noise_sigma, img.seed)? } else { clean };
        Ok(Self { truth, observed, kernel, boundary })
    }
}

/// Outcomes of the convergence conditions; `None` where not applicable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub theorem1: Option<bool>,
    pub theorem2: Option<bool>,
    pub theorem3: Option<bool>,
    pub theorem4: Option<bool>,
}

impl Checks {
    pub fn all_pass(&self) -> bool {
        [self.theorem1, self.theorem2, self.theorem3, self.theorem4].iter().all(|c| c.unwrap_or(true))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problem: String,
    pub iterations: usize,
    pub converged: bool,
    pub gap0: Option<f64>,
    pub threshold: Option<f64>,
    pub iterations_to_threshold: Option<usize>,
    pub final_primal: f64,
    pub final_dual: Option<f64>,
    pub final_gap: Option<f64>,
    pub reference_energy: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha_cap: Option<f64>,
    pub err_sum: f64,
    pub checks: Checks,
    /// `"certified"` when every applicable check passes, else `"experimental"`.
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub summary: Summary,
    pub trace: Vec<TraceRow>,
    pub u: Vec<f64>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let inst = Instance::build(cfg)?;
    let reference = reference_energy(cfg, &inst)?;
    run_on_instance(cfg, &inst, reference)
}

fn schedule_for(s: &SolverSection, gamma: f64, delta: f64) -> AlphaSchedule {
    match s.alpha_mode {
        AlphaMode::Constant => AlphaSchedule::Constant(s.alpha),
        AlphaMode::Fista => AlphaSchedule::Fista,
        AlphaMode::FistaSafeguarded => AlphaSchedule::FistaSafeguarded { c: s.c },
        AlphaMode::Bound => AlphaSchedule::TheoremMax { gamma, delta, eps: s.eps },
    }
}

/// Optimal deconvolution energy: the configured value, or the lowest energy
/// seen along a long run of the explicit variant at the extrapolation bound.
pub fn reference_energy(cfg: &ExperimentConfig, inst: &Instance) -> Result<Option<f64>> {
    if !cfg.problem.kind.is_deconv() {
        return Ok(None);
    }
    if let Some(e) = cfg.stop.reference_energy {
        return Ok(Some(e));
    }
    let kernel = inst.kernel.as_ref().expect("deconvolution instance has a kernel");
    let lambda = cfg.problem.lambda;
    let d = build_deconv(&inst.observed, kernel, lambda, DeconvVariant::Explicit, inst.boundary)?;
    let s = &cfg.solver;
    let st = scalar_steps_from_lemma(GRAD_NORM_SQ_BOUND.sqrt(), d.saddle.l_q(), 0.0, s.gamma, s.delta, s.effective_r())?;
    let schedule = AlphaSchedule::TheoremMax { gamma: s.gamma, delta: s.delta, eps: s.eps };
    let pd = PdConfig::new(Steps::Scalar { tau: st.tau, sigma: st.sigma }, schedule);
    let model = EnergyModel::deconv(&inst.observed, d.h.clone(), lambda, None);
    let mut best = model.primal(&inst.observed.pixels);
    let opts = PdOptions { tol: 0.0, k_max: cfg.stop.reference_iters };
    solve_pd(&d.saddle, &pd, inst.observed.pixels.clone(), vec![0.0; d.saddle.dim_y()], &opts, |st, _| {
        best = best.min(model.primal(&st.x));
        ControlFlow::Continue(())
    })?;
    Ok(Some(best))
}

/// Streams energies into the trace and tracks the gap threshold.
struct Monitor {
    log: TraceLog,
    rel: Option<f64>,
    abs: Option<f64>,
    threshold: Option<f64>,
    gap0: Option<f64>,
    hit: Option<usize>,
    stop_at_threshold: bool,
    last: Option<Energies>,
    error: Option<CliError>,
}

impl Monitor {
    fn new(cfg: &ExperimentConfig, trace_path: Option<&Path>) -> Result<Self> {
        Ok(Self {
            log: TraceLog::new(trace_path, cfg.output.stride(), cfg.output.wall_clock)?,
            rel: cfg.stop.gap_rel,
            abs: cfg.stop.gap_abs,
            threshold: None,
            gap0: None,
            hit: None,
            stop_at_threshold: cfg.stop.stop_at_threshold,
            last: None,
            error: None,
        })
    }

    fn start(&mut self, e: Energies) {
        self.gap0 = e.gap;
        let rel = self.rel.zip(e.gap).map(|(r, g)| r * g);
        self.threshold = match (rel, self.abs) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let info = IterInfo { k: 0, alpha: 0.0, residual_m: 0.0, e_k: 0.0, err_sum: 0.0 };
        let _ = self.observe(&info, e);
    }

    fn observe(&mut self, info: &IterInfo, e: Energies) -> ControlFlow<()> {
        let row = TraceRow {
            k: info.k,
            alpha: info.alpha,
            primal: e.primal,
            dual: e.dual,
            gap: e.gap,
            residual_m: info.residual_m,
            e_k: info.e_k,
            err_sum: info.err_sum,
            ms: self.log.elapsed_ms(),
        };
        let hit_now = self.hit.is_none() && matches!((self.threshold, e.gap), (Some(t), Some(g)) if g < t);
        if hit_now {
            self.hit = Some(info.k);
        }
        self.last = Some(e);
        if let Err(err) = self.log.push(row, hit_now) {
            self.error = Some(err);
            return ControlFlow::Break(());
        }
        if hit_now && self.stop_at_threshold {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}

struct Solved {
    u: Vec<f64>,
    k: usize,
    converged: bool,
    err_sum: f64,
    checks: Checks,
    alpha_cap: Option<f64>,
    scalar_steps: Option<(f64, f64)>,
}

/// Run `cfg` on a prebuilt instance. `reference` is the optimal energy for
/// deconvolution problems.
pub fn run_on_instance(cfg: &ExperimentConfig, inst: &Instance, reference: Option<f64>) -> Result<RunOutput> {
    cfg.validate()?;
    let dir = cfg.output.dir.as_deref();
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }
    let trace_path = dir.map(|d| d.join("trace.csv"));
    let mut mon = Monitor::new(cfg, trace_path.as_deref())?;

    let result = match cfg.problem.kind {
        ProblemKind::RofDualFista => solve_rof_dual(cfg, inst, &mut mon),
        kind => solve_saddle(cfg, kind, inst, reference, &mut mon),
    };
    let flushed = mon.log.finish();
    let solved = result?;
    flushed?;
    if let Some(err) = mon.error.take() {
        return Err(err);
    }

    let last = mon.last.expect("initial energies recorded");
    let checks = solved.checks;
    let summary = Summary {
        problem: cfg.problem.kind.name().to_string(),
        iterations: solved.k,
        converged: solved.converged,
        gap0: mon.gap0,
        threshold: mon.threshold,
        iterations_to_threshold: mon.hit,
        final_primal: last.primal,
        final_dual: last.dual,
        final_gap: last.gap,
        reference_energy: reference,
        tau: solved.scalar_steps.map(|s| s.0),
        sigma: solved.scalar_steps.map(|s| s.1),
        alpha_cap: solved.alpha_cap,
        err_sum: solved.err_sum,
        checks,
        status: if checks.all_pass() { "certified" } else { "experimental" }.to_string(),
    };
    if let Some(d) = dir {
        write_artifacts(d, inst, &solved.u, &summary)?;
    }
    Ok(RunOutput { summary, trace: mon.log.into_rows(), u: solved.u })
}

fn write_artifacts(dir: &Path, inst: &Instance, u: &[f64], summary: &Summary) -> Result<()> {
    let (w, h) = (inst.observed.width, inst.observed.height);
    write_pgm(&dir.join("observed.pgm"), &inst.observed, true)?;
    write_pgm(&dir.join("result.pgm"), &ImageGrid::new(w, h, u.to_vec())?, true)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

fn solve_rof_dual(cfg: &ExperimentConfig, inst: &Instance, mon: &mut Monitor) -> Result<Solved> {
    let (s, lambda) = (&cfg.solver, cfg.problem.lambda);
    let rof = build_rof_dual(&inst.observed, lambda)?;
    let step = s.gamma / rof.lipschitz();
    let schedule = schedule_for(s, s.gamma, s.gamma);
    schedule.validate()?;
    let dim = rof.pair.dim();
    let m = Metric::identity(dim);
    let l = rof.pair.b.cocoercivity();
    let alpha_cap = schedule.cap();
    let checks = Checks {
        theorem1: Some(check_theorem1(&m, l, step)?.ok),
        theorem2: Some(match alpha_cap {
            Some(a) => check_theorem2(&m, l, step, a, s.eps)?.ok,
            None => false,
        }),
        ..Checks::default()
    };

    let model = EnergyModel::denoise(&inst.observed, lambda);
    let p0 = vec![0.0; dim];
    mon.start(model.evaluate(&rof.recover_u(&p0), &p0));
    let opts = FbOptions { lambda: step, schedule, tol: cfg.stop.tol, k_max: cfg.stop.k_max };
    let run = solve_inertial_fb(&rof.pair, &m, p0, &opts, |st, info| {
        mon.observe(info, model.evaluate(&rof.recover_u(&st.x_curr), &st.x_curr))
    })?;
    Ok(Solved {
        u: rof.recover_u(&run.state.x_curr),
        k: run.state.k,
        converged: run.converged,
        err_sum: run.state.err_sum,
        checks,
        alpha_cap,
        scalar_steps: Some((step, step)),
    })
}

fn solve_saddle(
    cfg: &ExperimentConfig,
    kind: ProblemKind,
    inst: &Instance,
    reference: Option<f64>,
    mon: &mut Monitor,
) -> Result<Solved> {
    let (s, lambda) = (&cfg.solver, cfg.problem.lambda);
    let f = &inst.observed;
    let n = f.len();
    let (saddle, model, k_bound): (SaddleProblem, EnergyModel, f64) = match kind {
        ProblemKind::RofSaddlePd => {
            (build_rof_saddle(f, lambda)?, EnergyModel::denoise(f, lambda), GRAD_NORM_SQ_BOUND.sqrt())
        }
        _ => {
            let variant =
                if kind == ProblemKind::DeconvExplicit { DeconvVariant::Explicit } else { DeconvVariant::SplitDual };
            let kernel = inst.kernel.as_ref().ok_or_else(|| CliError::Config("deconvolution needs a kernel".into()))?;
            let d = build_deconv(f, kernel, lambda, variant, inst.boundary)?;
            let model = EnergyModel::deconv(f, d.h.clone(), lambda, reference);
            let k_bound = match variant {
                DeconvVariant::Explicit => GRAD_NORM_SQ_BOUND.sqrt(),
                DeconvVariant::SplitDual => (GRAD_NORM_SQ_BOUND + d.h_norm * d.h_norm).sqrt(),
            };
            let saddle = if variant == DeconvVariant::Explicit && s.steps == StepRule::Precond {
                let l_q = d.saddle.l_q();
                d.saddle.with_cocoercivity_diagonals(Some(vec![l_q; n]), None)?
            } else {
                d.saddle
            };
            (saddle, model, k_bound)
        }
    };
    debug_assert!(k_bound >= grad_norm(f.width, f.height));

    let steps = match s.steps {
        StepRule::Lemma => {
            let st = scalar_steps_from_lemma(k_bound, saddle.l_q(), saddle.l_p(), s.gamma, s.delta, s.effective_r())?;
            Steps::Scalar { tau: st.tau, sigma: st.sigma }
        }
        StepRule::Precond => {
            let (d, e) = (saddle.d(), saddle.e());
            let d = d.iter().any(|v| *v > 0.0).then_some(d);
            let e = e.iter().any(|v| *v > 0.0).then_some(e);
            diag_precond(saddle.k(), d.as_deref(), e.as_deref(), s.gamma, s.delta, s.effective_r(), s.s, s.zero_lines.into())?
        }
    };
    let schedule = schedule_for(s, s.gamma, s.delta);
    let pd = PdConfig { steps: steps.clone(), schedule, rho: s.rho, eps: s.eps };
    pd.validate(&saddle)?;

    let alpha_cap = if s.rho != 1.0 { Some(0.0) } else { schedule.cap() };
    let (checks, scalar_steps) = match &steps {
        Steps::Scalar { tau, sigma } => {
            let ok = match alpha_cap {
                Some(a) => check_theorem3(&saddle, &pd, a)?,
                None => false,
            };
            (Checks { theorem3: Some(ok), ..Checks::default() }, Some((*tau, *sigma)))
        }
        Steps::Diagonal { t, sigma } => {
            let ok = match alpha_cap {
                Some(a) => check_theorem4(&saddle, t, sigma, a, s.eps)?,
                None => false,
            };
            (Checks { theorem4: Some(ok), ..Checks::default() }, None)
        }
    };

    let denoise = kind == ProblemKind::RofSaddlePd;
    let energies = |x: &[f64], y: &[f64]| -> Energies {
        if denoise {
            // Overrelaxed iterates may leave the ball; the dual is taken at the projection.
            let p = project_dual_ball(&y[..2 * n]).expect("even length");
            model.evaluate(x, &p)
        } else {
            model.evaluate(x, y)
        }
    };
    let (x0, y0) = (f.pixels.clone(), vec![0.0; saddle.dim_y()]);
    mon.start(energies(&x0, &y0));
    let opts = PdOptions { tol: cfg.stop.tol, k_max: cfg.stop.k_max };
    let run = solve_pd(&saddle, &pd, x0, y0, &opts, |st, info| mon.observe(info, energies(&st.x, &st.y)))?;
    Ok(Solved {
        u: run.state.x,
        k: run.state.k,
        converged: run.converged,
        err_sum: run.state.err_sum,
        checks,
        alpha_cap,
        scalar_steps,
    })
}

/// Output directory of run `tag` when paired runs share `dir`.
pub(crate) fn paired_dir(dir: &Option<PathBuf>, other: &Option<PathBuf>, tag: &str) -> Option<PathBuf> {
    match (dir, other) {
        (Some(a), Some(b)) if a == b => Some(a.join(tag)),
        (a, _) => a.clone(),
    }
}
