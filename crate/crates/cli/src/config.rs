//! `key = value` configuration files.
//!
//! Precedence, lowest first: built-in defaults, the config file, the
//! `LSCM_SEED` environment variable (seed only), command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lscm_core::lscm::Depth;
use lscm_core::model::ModelConfig;
use lscm_core::synth::DifficultyMix;
use lscm_core::train::TrainConfig;

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "LSCM_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Checkpoint period in iterations; 0 keeps only the final one.
    pub checkpoint_every: u64,
    pub mix: DifficultyMix,
    pub train_count: usize,
    pub val_count: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            data: None,
            embeddings: None,
            checkpoint_every: 1000,
            mix: DifficultyMix::uniform(),
            train_count: 2000,
            val_count: 200,
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Usage(format!("config key `{key}`: `{value}` is not {what}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, what))
}

pub fn parse_depth(value: &str) -> Result<Depth> {
    if value == "adaptive" {
        return Ok(Depth::Adaptive);
    }
    value
        .parse()
        .map(Depth::Fixed)
        .map_err(|_| bad("n_layers", value, "a non-negative integer or `adaptive`"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, value, "a boolean")),
    }
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let m = &mut self.model;
        let t = &mut self.train;
        let size = "a positive integer";
        match key {
            "image_size" => m.image_size = parse_num(key, value, size)?,
            "c_v" => m.c_v = parse_num(key, value, size)?,
            "c_l" => m.c_l = parse_num(key, value, size)?,
            "c_h" => m.c_h = parse_num(key, value, size)?,
            "c_o" => m.c_o = parse_num(key, value, size)?,
            "c_s" => m.c_s = parse_num(key, value, size)?,
            "c_e" => m.c_e = parse_num(key, value, size)?,
            "mutan_rank" => m.mutan_rank = parse_num(key, value, size)?,
            "alpha" => m.alpha = parse_num(key, value, "a number")?,
            "n_layers" => m.depth = parse_depth(value)?,
            "lr" | "lr_base" => t.lr = parse_num(key, value, "a number")?,
            "weight_decay" => t.weight_decay = parse_num(key, value, "a number")?,
            "poly_power" => t.poly_power = parse_num(key, value, "a number")?,
            "max_iters" => t.max_iters = parse_num(key, value, "a non-negative integer")?,
            "batch" | "batch_size" => t.batch = parse_num(key, value, size)?,
            "seed" => t.seed = parse_num(key, value, "an unsigned integer")?,
            "freeze_cnn" => t.freeze_cnn = parse_bool(key, value)?,
            "data" => self.data = Some(PathBuf::from(value)),
            "embeddings" => self.embeddings = Some(PathBuf::from(value)),
            "checkpoint_every" => {
                self.checkpoint_every = parse_num(key, value, "a non-negative integer")?
            }
            "mix" => {
                self.mix =
                    DifficultyMix::parse(value).map_err(|_| bad(key, value, "a difficulty mix"))?
            }
            "train_count" => self.train_count = parse_num(key, value, size)?,
            "val_count" => self.val_count = parse_num(key, value, size)?,
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", n + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn apply_seed_env(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.train.seed = v.trim().parse().map_err(|_| {
                CliError::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |e: lscm_core::Error| CliError::Usage(e.to_string());
        self.model.validate().map_err(usage)?;
        self.train.validate().map_err(usage)?;
        self.mix.validate().map_err(usage)?;
        Ok(())
    }

    /// The file form of this configuration, readable by [`Config::apply_text`].
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let t = &self.train;
        let mut s = String::new();
        let depth = match m.depth {
            Depth::Fixed(n) => n.to_string(),
            Depth::Adaptive => "adaptive".into(),
        };
        let pairs: [(&str, String); 20] = [
            ("image_size", m.image_size.to_string()),
            ("c_v", m.c_v.to_string()),
            ("c_l", m.c_l.to_string()),
            ("c_h", m.c_h.to_string()),
            ("c_o", m.c_o.to_string()),
            ("c_s", m.c_s.to_string()),
            ("c_e", m.c_e.to_string()),
            ("mutan_rank", m.mutan_rank.to_string()),
            ("alpha", m.alpha.to_string()),
            ("n_layers", depth),
            ("lr", t.lr.to_string()),
            ("weight_decay", t.weight_decay.to_string()),
            ("poly_power", t.poly_power.to_string()),
            ("max_iters", t.max_iters.to_string()),
            ("batch", t.batch.to_string()),
            ("seed", t.seed.to_string()),
            ("freeze_cnn", t.freeze_cnn.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("mix", self.mix.to_string()),
            ("train_count", self.train_count.to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "val_count = {}", self.val_count);
        if let Some(d) = &self.data {
            let _ = writeln!(s, "data = {}", d.display());
        }
        if let Some(e) = &self.embeddings {
            let _ = writeln!(s, "embeddings = {}", e.display());
        }
        s
    }
}
