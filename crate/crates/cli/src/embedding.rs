//! Optional pretrained word vectors: whitespace-separated `word v1 … vC_e`
//! lines. Words absent from the file keep their random initialization.

use std::path::Path;

use lscm_core::params::ParamStore;
use lscm_core::text::Vocabulary;

use crate::error::{CliError, Result};

/// Overwrites rows of `embed.table` for vocabulary words found in the file.
/// Returns how many rows were replaced.
pub fn load_embeddings(path: &Path, vocab: &Vocabulary, params: &mut ParamStore) -> Result<usize> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    apply_embeddings(&text, path, vocab, params)
}

pub fn apply_embeddings(
    text: &str,
    path: &Path,
    vocab: &Vocabulary,
    params: &mut ParamStore,
) -> Result<usize> {
    let table = params
        .get_mut("embed.table")
        .ok_or_else(|| CliError::Usage("model has no embedding table".into()))?;
    let c_e = table.last_dim();
    let mut replaced = vec![false; vocab.len()];
    for (n, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values = parts
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| CliError::format(path, format!("line {}: non-numeric value", n + 1)))?;
        if values.len() != c_e {
            return Err(CliError::format(
                path,
                format!(
                    "line {}: {} values, embedding size is {c_e}",
                    n + 1,
                    values.len()
                ),
            ));
        }
        let id = vocab.id(word);
        if id == 0 || replaced[id] {
            continue;
        }
        table.data_mut()[id * c_e..(id + 1) * c_e].copy_from_slice(&values);
        replaced[id] = true;
    }
    Ok(replaced.iter().filter(|&&r| r).count())
}
