//! Experiment configuration: TOML with sections, plus `section.key=value`
//! overrides applied before deserialization.

use std::path::{Path, PathBuf};

use inertial_fb::imaging::Boundary;
use inertial_fb::primal_dual::ZeroLines;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    RofDualFista,
    RofSaddlePd,
    DeconvExplicit,
    DeconvSplitdual,
}

impl ProblemKind {
    pub fn is_deconv(self) -> bool {
        matches!(self, ProblemKind::DeconvExplicit | ProblemKind::DeconvSplitdual)
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::RofDualFista => "rof-dual-fista",
            ProblemKind::RofSaddlePd => "rof-saddle-pd",
            ProblemKind::DeconvExplicit => "deconv-explicit",
            ProblemKind::DeconvSplitdual => "deconv-splitdual",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode {
    Constant,
    Fista,
    FistaSafeguarded,
    /// Largest constant admitted by the extrapolation bound.
    Bound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    Lemma,
    Precond,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryName {
    #[default]
    Replicate,
    Zero,
}

impl From<BoundaryName> for Boundary {
    fn from(b: BoundaryName) -> Self {
        match b {
            BoundaryName::Replicate => Boundary::Replicate,
            BoundaryName::Zero => Boundary::Zero,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroLinesName {
    #[default]
    Reject,
    Unit,
}

impl From<ZeroLinesName> for ZeroLines {
    fn from(z: ZeroLinesName) -> Self {
        match z {
            ZeroLinesName::Reject => ZeroLines::Reject,
            ZeroLinesName::Unit => ZeroLines::Unit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSection {
    /// PGM file; the synthetic test image is used when absent.
    pub path: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
    /// `[x0, y0, width, height]`
    pub crop: Option<[usize; 4]>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ImageSection {
    fn default() -> Self {
        Self { path: None, width: 64, height: 64, crop: None, noise_sigma: 0.1, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlurSection {
    /// Side of the square motion kernel (odd).
    pub size: usize,
    pub angle: f64,
    pub boundary: BoundaryName,
}

impl Default for BlurSection {
    fn default() -> Self {
        Self { size: 7, angle: 30.0, boundary: BoundaryName::Replicate }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub steps: StepRule,
    /// Target `τ/σ`; overrides `r` with `r = 1/√ratio`.
    pub tau_sigma_ratio: Option<f64>,
    pub r: f64,
    pub s: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub alpha_mode: AlphaMode,
    pub alpha: f64,
    /// Safeguard constant.
    pub c: f64,
    pub rho: f64,
    pub zero_lines: ZeroLinesName,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            steps: StepRule::Lemma,
            tau_sigma_ratio: None,
            r: 1.0,
            s: 1.0,
            gamma: 1.0,
            delta: 1.0,
            eps: 1e-6,
            alpha_mode: AlphaMode::Constant,
            alpha: 0.0,
            c: 1e4,
            rho: 1.0,
            zero_lines: ZeroLinesName::Reject,
        }
    }
}

impl SolverSection {
    pub fn effective_r(&self) -> f64 {
        self.tau_sigma_ratio.map_or(self.r, |q| 1.0 / q.sqrt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopSection {
    /// Relative fixed-point residual; 0 disables.
    pub tol: f64,
    pub k_max: usize,
    /// Threshold relative to the initial gap.
    pub gap_rel: Option<f64>,
    pub gap_abs: Option<f64>,
    pub stop_at_threshold: bool,
    /// Deconvolution: iterations of the reference run.
    pub reference_iters: usize,
    /// Deconvolution: known optimal energy, skipping the reference run.
    pub reference_energy: Option<f64>,
}

impl Default for StopSection {
    fn default() -> Self {
        Self {
            tol: 0.0,
            k_max: 1000,
            gap_rel: None,
            gap_abs: None,
            stop_at_threshold: false,
            reference_iters: 10_000,
            reference_energy: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for `trace.csv`, `summary.json` and images; nothing is
    /// written when absent.
    pub dir: Option<PathBuf>,
    pub log_stride: Option<usize>,
    /// Record elapsed milliseconds in the trace (breaks byte-identical reruns).
    pub wall_clock: bool,
}

impl OutputSection {
    pub fn stride(&self) -> usize {
        self.log_stride.unwrap_or(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub image: ImageSection,
    #[serde(default)]
    pub blur: BlurSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parse `section.key=value`; the value is read as a TOML literal and falls
/// back to a plain string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| cfg_err(format!("override `{spec}` lacks `=`")))?;
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields one item");
    let mut cur = table;
    for key in parents {
        let entry = cur.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| cfg_err(format!("`{key}` in `{path}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| cfg_err(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range checks on every numeric parameter.
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(cfg_err(msg)) };
        let (p, img, blur, s, st, out) = (&self.problem, &self.image, &self.blur, &self.solver, &self.stop, &self.output);

        check(p.lambda > 0.0 && p.lambda.is_finite(), format!("problem.lambda must be positive, got {}", p.lambda))?;
        if img.path.is_none() {
            check(img.width >= 2 && img.height >= 2, format!("image size {}x{} too small", img.width, img.height))?;
        }
        if let Some([_, _, w, h]) = img.crop {
            check(w >= 2 && h >= 2, format!("crop {w}x{h} too small"))?;
        }
        check(img.noise_sigma >= 0.0 && img.noise_sigma.is_finite(), format!("image.noise_sigma must be >= 0, got {}", img.noise_sigma))?;
        if p.kind.is_deconv() {
            check(blur.size % 2 == 1, format!("blur.size must be odd, got {}", blur.size))?;
            check(blur.angle.is_finite(), "blur.angle must be finite".into())?;
        }

        let in_open_02 = |v: f64| v > 0.0 && v < 2.0;
        check(in_open_02(s.gamma), format!("solver.gamma must lie in (0, 2), got {}", s.gamma))?;
        check(in_open_02(s.delta), format!("solver.delta must lie in (0, 2), got {}", s.delta))?;
        check(s.eps > 0.0 && s.eps < 1.0, format!("solver.eps must lie in (0, 1), got {}", s.eps))?;
        check(s.r > 0.0 && s.r.is_finite(), format!("solver.r must be positive, got {}", s.r))?;
        if let Some(q) = s.tau_sigma_ratio {
            check(q > 0.0 && q.is_finite(), format!("solver.tau_sigma_ratio must be positive, got {q}"))?;
        }
        check((0.0..=2.0).contains(&s.s), format!("solver.s must lie in [0, 2], got {}", s.s))?;
        check((0.0..1.0).contains(&s.alpha), format!("solver.alpha must lie in [0, 1), got {}", s.alpha))?;
        check(s.c > 0.0, format!("solver.c must be positive, got {}", s.c))?;
        check(s.rho > 0.0 && s.rho <= 2.0, format!("solver.rho must lie in (0, 2], got {}", s.rho))?;
        if s.rho != 1.0 {
            check(p.kind != ProblemKind::RofDualFista, "solver.rho applies to primal-dual problems only".into())?;
            check(
                s.alpha_mode == AlphaMode::Constant && s.alpha == 0.0,
                "solver.rho != 1 requires alpha_mode = \"constant\" and alpha = 0".into(),
            )?;
        }
        if s.steps == StepRule::Precond {
            check(p.kind != ProblemKind::RofDualFista, "solver.steps = \"precond\" applies to primal-dual problems only".into())?;
        }

        check(st.tol >= 0.0, format!("stop.tol must be >= 0, got {}", st.tol))?;
        check(st.k_max >= 1, "stop.k_max must be >= 1".into())?;
        for (name, v) in [("gap_rel", st.gap_rel), ("gap_abs", st.gap_abs)] {
            if let Some(v) = v {
                check(v > 0.0, format!("stop.{name} must be positive, got {v}"))?;
            }
        }
        check(
            !st.stop_at_threshold || st.gap_rel.is_some() || st.gap_abs.is_some(),
            "stop.stop_at_threshold needs stop.gap_rel or stop.gap_abs".into(),
        )?;
        if p.kind.is_deconv() && st.reference_energy.is_none() {
            check(st.reference_iters >= 1, "stop.reference_iters must be >= 1".into())?;
        }
        check(out.stride() >= 1, "output.log_stride must be >= 1".into())?;
        Ok(())
    }

    /// Whether two configurations describe the same problem instance.
    pub fn same_instance(&self, other: &Self) -> bool {
        self.problem.kind.is_deconv() == other.problem.kind.is_deconv()
            && self.problem.lambda == other.problem.lambda
            && self.image == other.image
            && (!self.problem.kind.is_deconv() || self.blur == other.blur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[problem]\nkind = \"rof-saddle-pd\"\nlambda = 10\n";

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = ExperimentConfig::parse(BASE, &[]).unwrap();
        assert_eq!(cfg.image.width, 64);
        assert_eq!(cfg.solver.rho, 1.0);
        assert_eq!(cfg.output.stride(), 1);
    }

    #[test]
    fn overrides_replace_and_create_keys() {
        let cfg = ExperimentConfig::parse(
            BASE,
            &["problem.lambda=2.5".into(), "solver.alpha_mode=fista".into(), "image.crop=[0, 0, 8, 8]".into()],
        )
        .unwrap();
        assert_eq!(cfg.problem.lambda, 2.5);
        assert_eq!(cfg.solver.alpha_mode, AlphaMode::Fista);
        assert_eq!(cfg.image.crop, Some([0, 0, 8, 8]));
    }

    #[test]
    fn invalid_values_name_the_key() {
        for (o, needle) in [
            ("solver.gamma=2", "solver.gamma"),
            ("solver.alpha=1", "solver.alpha"),
            ("problem.lambda=-1", "problem.lambda"),
            ("solver.unknown=1", "unknown"),
        ] {
            let err = ExperimentConfig::parse(BASE, &[o.into()]).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains(needle), "{o}: {err}");
        }
        assert!(ExperimentConfig::parse(BASE, &["nonsense".into()]).is_err());
        let relaxed = ["solver.rho=1.9".to_string(), "solver.alpha=0.2".to_string()];
        let err = ExperimentConfig::parse(BASE, &relaxed).unwrap_err();
        assert!(err.to_string().contains("requires alpha_mode"));
        assert!(ExperimentConfig::parse(BASE, &relaxed[..1]).is_ok());
    }

    #[test]
    fn serialization_round_trips() {
        let cfg = ExperimentConfig::parse(BASE, &["stop.gap_rel=1e-4".into()]).unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml(), &[]).unwrap(), cfg);
    }
}
