use std::io::Write;

use lscm_core::optim::AdamConfig;
use lscm_core::train::{Example, Trainer};

use super::{data_root, load_config, out_err, CONFIG_FILE, VOCAB_FILE};
use crate::checkpoint::Checkpoint;
use crate::cli::TrainArgs;
use crate::dataset::{build_vocabulary, create_dir, read_split, split_dir};
use crate::embedding::load_embeddings;
use crate::error::{CliError, Result};

pub fn checkpoint_name(iter: u64) -> String {
    format!("ckpt_{iter:06}.bin")
}

pub const LAST_CHECKPOINT: &str = "last.bin";

pub fn train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if a.freeze_cnn {
        cfg.train.freeze_cnn = true;
    }
    if let Some(e) = &a.embeddings {
        cfg.embeddings = Some(e.clone());
    }
    let root = data_root(&cfg)?.to_path_buf();
    let samples = read_split(&split_dir(&root, "train"))?;
    let vocab = build_vocabulary(&samples);
    cfg.model.vocab_size = vocab.len();
    let data: Vec<Example> = samples.iter().map(|s| s.example(&vocab)).collect();
    if let Some(bad) = data
        .iter()
        .find(|e| e.image.shape()[0] != cfg.model.image_size)
    {
        return Err(CliError::Usage(format!(
            "dataset images are {}x{} but image_size is {}",
            bad.image.shape()[0],
            bad.image.shape()[1],
            cfg.model.image_size
        )));
    }

    let mut trainer = match &a.resume {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            let adam = ck.adam(AdamConfig::default());
            Trainer::from_state(
                cfg.model.clone(),
                cfg.train.clone(),
                ck.params,
                adam,
                ck.iter,
            )?
        }
        None => {
            let mut t = Trainer::new(cfg.model.clone(), cfg.train.clone())?;
            if let Some(e) = &cfg.embeddings {
                let mut params = t.params().clone();
                let n = load_embeddings(e, &vocab, &mut params)?;
                eprintln!("loaded {n} of {} word vectors", vocab.len() - 1);
                t = Trainer::from_state(
                    cfg.model.clone(),
                    cfg.train.clone(),
                    params,
                    t.adam().clone(),
                    0,
                )?;
            }
            t
        }
    };

    create_dir(&a.out)?;
    let write = |name: &str, text: String| {
        let p = a.out.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(p, e))
    };
    write(VOCAB_FILE, vocab.to_lines())?;
    write(CONFIG_FILE, cfg.to_text())?;

    writeln!(out, "iter,lr,loss").map_err(out_err)?;
    let every = cfg.checkpoint_every;
    let until = a
        .stop_at
        .unwrap_or(cfg.train.max_iters)
        .min(cfg.train.max_iters);
    while trainer.iter() < until {
        let log = trainer.step(&data)?;
        let done = log.iter + 1;
        writeln!(out, "{done},{},{}", log.lr, log.loss).map_err(out_err)?;
        if every > 0 && done % every == 0 {
            Checkpoint::from_training(trainer.params(), trainer.adam(), done)
                .save(&a.out.join(checkpoint_name(done)))?;
        }
    }
    Checkpoint::from_training(trainer.params(), trainer.adam(), trainer.iter())
        .save(&a.out.join(LAST_CHECKPOINT))?;
    eprintln!(
        "trained {} iterations; checkpoint in {}",
        trainer.iter(),
        a.out.display()
    );
    Ok(())
}
