use std::fmt::Write as _;
use std::io::Write;

use lscm_core::model::Model;
use lscm_core::synth::{evaluate, EvalReport, Mask};
use lscm_core::train::predict_probs;

use super::{data_root, load_config, out_err, read_vocab};
use crate::checkpoint::Checkpoint;
use crate::cli::EvalArgs;
use crate::dataset::{
    create_dir, prob_csv, read_mask, read_split, sample_dirs, split_dir, write_mask, MASK_FILE,
    PROB_FILE,
};
use crate::error::{CliError, Result};

/// Aligned table followed by a blank line and the same numbers as CSV.
pub fn format_report(r: &EvalReport) -> String {
    let mut rows: Vec<(String, String)> = vec![
        ("samples".into(), r.ious.len().to_string()),
        ("overall_iou".into(), format!("{:.6}", r.overall_iou)),
        ("mean_iou".into(), format!("{:.6}", r.mean_iou())),
    ];
    for (x, v) in &r.pr_at {
        rows.push((format!("pr@{x:.1}"), format!("{v:.6}")));
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  value", "metric");
    for (k, v) in &rows {
        let _ = writeln!(s, "{k:<width$}  {v}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "metric,value");
    for (k, v) in &rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

pub fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let gt_split = split_dir(data_root(&cfg)?, "val");
    let report = match (&a.pred, &a.checkpoint) {
        (Some(pred), None) => {
            let pred_split = split_dir(pred, "val");
            let mut preds = Vec::new();
            let mut gts = Vec::new();
            for dir in sample_dirs(&gt_split)? {
                let name = dir.file_name().expect("sample directories have names");
                gts.push(read_mask(&dir.join(MASK_FILE))?);
                preds.push(read_mask(&pred_split.join(name).join(MASK_FILE))?);
            }
            evaluate(&preds, &gts)?
        }
        (None, Some(ckpt)) => {
            let vocab = read_vocab(a.vocab.as_deref(), ckpt)?;
            let mut model_cfg = cfg.model.clone();
            model_cfg.vocab_size = vocab.len();
            let model = Model::new(model_cfg)?;
            let params = Checkpoint::load(ckpt)?.params;
            let samples = read_split(&gt_split)?;
            let mut preds = Vec::new();
            let mut gts = Vec::new();
            for s in &samples {
                let probs = predict_probs(&model, &params, &s.example(&vocab))?;
                let mask = Mask::from_probs(&probs)?;
                if let Some(dir) = &a.out {
                    let d = dir.join(&s.name);
                    create_dir(&d)?;
                    write_mask(&d.join(MASK_FILE), &mask)?;
                    let p = d.join(PROB_FILE);
                    std::fs::write(&p, prob_csv(&probs)).map_err(|e| CliError::io(p, e))?;
                }
                preds.push(mask);
                gts.push(s.mask.clone());
            }
            evaluate(&preds, &gts)?
        }
        _ => {
            return Err(CliError::Usage(
                "eval needs exactly one of --pred or --checkpoint".into(),
            ))
        }
    };
    out.write_all(format_report(&report).as_bytes())
        .map_err(out_err)
}
