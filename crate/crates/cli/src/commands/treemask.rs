use std::io::Write;

use lscm_core::text::{parse_conllu_document, tree_mask};

use super::out_err;
use crate::cli::TreemaskArgs;
use crate::error::{CliError, Result};

/// Prints S for every sentence: one row per line, values space-separated,
/// sentences separated by a blank line.
pub fn treemask(a: &TreemaskArgs, conllu: &str, out: &mut dyn Write) -> Result<()> {
    if !(0.0..=1.0).contains(&a.alpha) {
        return Err(CliError::Usage(format!(
            "--alpha must lie in [0, 1], got {}",
            a.alpha
        )));
    }
    let sentences =
        parse_conllu_document(conllu).map_err(|e| CliError::format("<stdin>", e.to_string()))?;
    if sentences.is_empty() {
        return Err(CliError::format("<stdin>", "no sentences"));
    }
    for (k, s) in sentences.iter().enumerate() {
        if k > 0 {
            writeln!(out).map_err(out_err)?;
        }
        let m = tree_mask(&s.tree, a.alpha)?;
        let t = s.tree.len();
        for i in 0..t {
            let row: Vec<String> = (0..t).map(|j| m.s.at2(i, j).to_string()).collect();
            writeln!(out, "{}", row.join(" ")).map_err(out_err)?;
        }
    }
    Ok(())
}
