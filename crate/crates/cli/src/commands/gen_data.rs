use std::io::Write;

use lscm_core::synth::{gen_sample, sample_seed, DifficultyMix, Split};

use super::{load_config, out_err};
use crate::cli::GenDataArgs;
use crate::dataset::{create_dir, sample_name, write_sample};
use crate::error::{CliError, Result};

pub fn gen_data(a: &GenDataArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let mix = match &a.mix {
        Some(m) => DifficultyMix::parse(m).map_err(|e| CliError::Usage(e.to_string()))?,
        None => cfg.mix,
    };
    let counts = [
        (Split::Train, a.train.unwrap_or(cfg.train_count)),
        (Split::Val, a.val.unwrap_or(cfg.val_count)),
    ];
    if counts.iter().any(|&(_, n)| n == 0) {
        return Err(CliError::Usage("sample counts must be at least 1".into()));
    }
    let master = cfg.train.seed;
    for (split, n) in counts {
        let dir = a.out.join(split.name());
        create_dir(&dir)?;
        for k in 0..n {
            let seed = sample_seed(master, split, k);
            let s = gen_sample(seed, mix.pick(seed))?;
            write_sample(&dir.join(sample_name(k)), &s)?;
        }
        writeln!(out, "{}: {n} samples", split.name()).map_err(out_err)?;
    }
    Ok(())
}
