use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiment::{paired_dir, reference_energy, run_on_instance, Instance, RunOutput, Summary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: Summary,
    pub b: Summary,
    /// `"a"`, `"b"` or `"tie"`; absent when neither run reached the threshold.
    pub fewer_iterations: Option<String>,
}

/// Run both configurations on one problem instance. Deconvolution runs share
/// a single reference energy.
pub fn compare(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<(Comparison, RunOutput, RunOutput)> {
    a.validate()?;
    b.validate()?;
    if !a.same_instance(b) {
        return Err(CliError::Config("compared configurations describe different problem instances".into()));
    }
    let inst = Instance::build(a)?;
    let seed_cfg = if b.stop.reference_energy.is_some() { b } else { a };
    let reference = reference_energy(seed_cfg, &inst)?;

    let (mut a, mut b) = (a.clone(), b.clone());
    let (da, db) = (a.output.dir.clone(), b.output.dir.clone());
    a.output.dir = paired_dir(&da, &db, "a");
    b.output.dir = paired_dir(&db, &da, "b");
    let ra = run_on_instance(&a, &inst, reference)?;
    let rb = run_on_instance(&b, &inst, reference)?;

    let fewer = match (ra.summary.iterations_to_threshold, rb.summary.iterations_to_threshold) {
        (Some(x), Some(y)) => Some(if x < y { "a" } else if y < x { "b" } else { "tie" }),
        (Some(_), None) => Some("a"),
        (None, Some(_)) => Some("b"),
        (None, None) => None,
    };
    let cmp = Comparison { a: ra.summary.clone(), b: rb.summary.clone(), fewer_iterations: fewer.map(str::to_string) };
    Ok((cmp, ra, rb))
}
