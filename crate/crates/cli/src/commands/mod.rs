mod attn_dump;
mod eval;
mod gen_data;
mod gradcheck;
mod train;
mod treemask;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub use attn_dump::attn_dump;
pub use eval::{eval, format_report};
pub use gen_data::gen_data;
pub use gradcheck::gradcheck;
pub use train::train;
pub use treemask::treemask;

use lscm_core::text::Vocabulary;

use crate::cli::{Cli, Command, Overrides};
use crate::config::{parse_depth, Config, SEED_ENV};
use crate::error::{CliError, Result};

pub const VOCAB_FILE: &str = "vocab.txt";
pub const CONFIG_FILE: &str = "config.txt";

/// Defaults, then the config file, then `LSCM_SEED`, then flags.
pub fn load_config(o: &Overrides) -> Result<Config> {
    let env = std::env::var(SEED_ENV).ok();
    load_config_with_env(o, env.as_deref())
}

pub fn load_config_with_env(o: &Overrides, seed_env: Option<&str>) -> Result<Config> {
    let mut cfg = Config::default();
    if let Some(path) = &o.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_seed_env(seed_env)?;
    if let Some(a) = o.alpha {
        cfg.model.alpha = a;
    }
    if let Some(n) = &o.n_layers {
        cfg.model.depth = parse_depth(n)?;
    }
    if let Some(s) = o.seed {
        cfg.train.seed = s;
    }
    if let Some(i) = o.iters {
        cfg.train.max_iters = i;
    }
    if let Some(d) = &o.data {
        cfg.data = Some(d.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn data_root(cfg: &Config) -> Result<&Path> {
    cfg.data.as_deref().ok_or_else(|| {
        CliError::Usage("no dataset given; pass --data or set `data` in the config".into())
    })
}

pub(crate) fn read_vocab(explicit: Option<&Path>, checkpoint: &Path) -> Result<Vocabulary> {
    let path: PathBuf = match explicit {
        Some(p) => p.to_path_buf(),
        None => checkpoint
            .parent()
            .unwrap_or(Path::new("."))
            .join(VOCAB_FILE),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    Ok(Vocabulary::from_lines(&text))
}

/// Dispatches a parsed command line. Tabular output goes to `out`; `input`
/// feeds commands that read stdin.
pub fn run(cli: Cli, input: &mut dyn Read, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(&a, out),
        Command::Eval(a) => eval(&a, out),
        Command::GenData(a) => gen_data(&a, out),
        Command::AttnDump(a) => attn_dump(&a, out),
        Command::Gradcheck(a) => gradcheck(&a, out),
        Command::Treemask(a) => {
            let mut text = String::new();
            input
                .read_to_string(&mut text)
                .map_err(|e| CliError::io("<stdin>", e))?;
            treemask(&a, &text, out)
        }
    }
}

pub(crate) fn out_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}
