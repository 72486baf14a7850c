use std::io::Write;

use inertial_fb::splitting::alpha_max_scalar;

use crate::error::{CliError, Result};

/// `(γ, α(γ))` at `γ = 10⁻⁶` and `γ = 2i/grid` for `0 < i < grid`.
pub fn alpha_curve(eps: f64, grid: usize) -> Result<Vec<(f64, f64)>> {
    if grid < 2 {
        return Err(CliError::Config(format!("grid must be at least 2, got {grid}")));
    }
    if !(eps > 0.0) {
        return Err(CliError::Config(format!("eps must be positive, got {eps}")));
    }
    std::iter::once(1e-6)
        .chain((1..grid).map(|i| 2.0 * i as f64 / grid as f64))
        .map(|g| alpha_max_scalar(g, eps).map(|a| (g, a)).map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

/// Whitespace-separated columns behind a `#` header line.
pub fn write_alpha_curve(rows: &[(f64, f64)], mut out: impl Write) -> Result<()> {
    writeln!(out, "# gamma alpha")?;
    for (g, a) in rows {
        writeln!(out, "{g} {a}")?;
    }
    Ok(())
}
