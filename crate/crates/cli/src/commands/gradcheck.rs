use std::io::Write;

use lscm_core::gradcheck::{gradient_suite, SUITE_TOLERANCE};

use super::out_err;
use crate::cli::GradcheckArgs;
use crate::error::{CliError, Result};

pub fn gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<()> {
    let results = gradient_suite(a.seed, a.trials, a.model_trials)?;
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(4);
    writeln!(out, "{:<width$}  {:>12}  trials  status", "case", "max_err").map_err(out_err)?;
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for r in &results {
        let status = if r.passed() { "ok" } else { "FAIL" };
        writeln!(
            out,
            "{:<width$}  {:>12.3e}  {:>6}  {status}",
            r.name, r.max_err, r.trials
        )
        .map_err(out_err)?;
        worst = worst.max(r.max_err);
        if !r.passed() {
            failed.push(r.name.as_str());
        }
    }
    writeln!(out, "max error {worst:.3e} (tolerance {SUITE_TOLERANCE:e})").map_err(out_err)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "gradient check failed: {}",
            failed.join(", ")
        )))
    }
}
