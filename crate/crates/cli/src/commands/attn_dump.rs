use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use lscm_core::model::{Model, LEVELS};
use lscm_core::{Tape, Tensor};

use super::{load_config, out_err, read_vocab};
use crate::checkpoint::Checkpoint;
use crate::cli::AttnDumpArgs;
use crate::dataset::{create_dir, heat_pgm, read_sample};
use crate::error::{CliError, Result};

fn matrix_csv(t: &Tensor, rows: usize, cols: usize) -> String {
    let mut s = String::new();
    for r in 0..rows {
        let row: Vec<String> = t.data()[r * cols..(r + 1) * cols]
            .iter()
            .map(f64::to_string)
            .collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn put(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Per level and word: the gather attention row `B[t]` as an H×W CSV and a
/// PGM scaled by the row maximum; per level: the masked adjacency `A_t`.
pub fn attn_dump(a: &AttnDumpArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let vocab = read_vocab(a.vocab.as_deref(), &a.checkpoint)?;
    let mut model_cfg = cfg.model.clone();
    model_cfg.vocab_size = vocab.len();
    let model = Model::new(model_cfg)?;
    let params = Checkpoint::load(&a.checkpoint)?.params;
    let sample = read_sample(&a.sample)?;
    let ex = sample.example(&vocab);

    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, |_| true);
    let fwd = model.forward(&mut tape, &bound, &ex.image, &ex.ids, &ex.tree)?;
    let grid = model.config().grid();
    let words: Vec<&str> = sample.tokens.iter().collect();
    let t_len = words.len();

    create_dir(&a.out)?;
    let mut files = 0;
    for (level, lo) in LEVELS.iter().zip(&fwd.lscm.levels) {
        let b = tape.value(lo.b);
        for (t, word) in words.iter().enumerate() {
            let row = &b.data()[t * grid * grid..(t + 1) * grid * grid];
            let stem = format!("level{level}_word{t:02}_{word}");
            let heat = Tensor::new(vec![grid, grid], row.to_vec())?;
            put(
                &a.out.join(format!("{stem}.csv")),
                matrix_csv(&heat, grid, grid),
            )?;
            put(
                &a.out.join(format!("{stem}.pgm")),
                heat_pgm(grid, grid, row),
            )?;
            files += 2;
        }
        put(
            &a.out.join(format!("level{level}_adjacency.csv")),
            matrix_csv(tape.value(lo.a_t), t_len, t_len),
        )?;
        files += 1;
    }
    writeln!(
        out,
        "wrote {files} files for \"{}\" to {}",
        sample.tokens,
        a.out.display()
    )
    .map_err(out_err)
}
