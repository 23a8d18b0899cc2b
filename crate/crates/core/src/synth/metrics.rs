use alloc::format;
use alloc::vec::Vec;

use super::mask::Mask;
use crate::error::{Error, Result};

pub const PR_THRESHOLDS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

/// `ΣI / ΣU` over all pairs; an empty total union counts as a perfect match.
pub fn overall_iou(preds: &[Mask], gts: &[Mask]) -> Result<f64> {
    let (i, u) = totals(preds, gts)?;
    ratio(i, u)
}

/// Per-pair IoU; pairs with an empty union score 1.
pub fn sample_ious(preds: &[Mask], gts: &[Mask]) -> Result<Vec<f64>> {
    check_lengths(preds, gts)?;
    preds
        .iter()
        .zip(gts)
        .map(|(p, g)| {
            let (i, u) = p.overlap(g)?;
            ratio(i, u)
        })
        .collect()
}

/// Fraction of IoUs strictly above each threshold.
pub fn pr_at_x(ious: &[f64], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if ious.is_empty() {
        return Err(Error::Metric("Pr@X of an empty IoU list".into()));
    }
    if let Some(bad) = ious.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Metric(format!("IoU {bad} outside [0, 1]")));
    }
    Ok(thresholds
        .iter()
        .map(|&x| {
            let above = ious.iter().filter(|&&v| v > x).count();
            (x, above as f64 / ious.len() as f64)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub overall_iou: f64,
    pub pr_at: Vec<(f64, f64)>,
    pub ious: Vec<f64>,
}

impl EvalReport {
    pub fn mean_iou(&self) -> f64 {
        self.ious.iter().sum::<f64>() / self.ious.len() as f64
    }
}

pub fn evaluate(preds: &[Mask], gts: &[Mask]) -> Result<EvalReport> {
    let ious = sample_ious(preds, gts)?;
    Ok(EvalReport {
        overall_iou: overall_iou(preds, gts)?,
        pr_at: pr_at_x(&ious, &PR_THRESHOLDS)?,
        ious,
    })
}

fn check_lengths(preds: &[Mask], gts: &[Mask]) -> Result<()> {
    if preds.len() != gts.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} ground truths",
            preds.len(),
            gts.len()
        )));
    }
    Ok(())
}

fn totals(preds: &[Mask], gts: &[Mask]) -> Result<(u64, u64)> {
    check_lengths(preds, gts)?;
    let mut ti = 0;
    let mut tu = 0;
    for (p, g) in preds.iter().zip(gts) {
        let (i, u) = p.overlap(g)?;
        ti += i;
        tu += u;
    }
    Ok((ti, tu))
}

fn ratio(i: u64, u: u64) -> Result<f64> {
    match (i, u) {
        (0, 0) => Ok(1.0),
        (_, 0) => Err(Error::Metric("intersection without union".into())),
        _ => Ok(i as f64 / u as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mask(bits: &[u8]) -> Mask {
        Mask::from_bits(1, bits.len(), bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn accumulates_rather_than_averages() {
        // (I, U) = (0, 1) and (9, 9)
        let p = vec![mask(&[1, 0]), mask(&[1; 9])];
        let g = vec![mask(&[0, 0]), mask(&[1; 9])];
        let r = evaluate(&p, &g).unwrap();
        assert!((r.overall_iou - 0.9).abs() < 1e-15);
        assert!((r.mean_iou() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identical_and_disjoint() {
        let a = vec![mask(&[1, 1, 0])];
        assert_eq!(overall_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(overall_iou(&a, &[mask(&[0, 0, 1])]).unwrap(), 0.0);
        assert_eq!(
            overall_iou(&[mask(&[0, 0])], &[mask(&[0, 0])]).unwrap(),
            1.0
        );
        assert!(overall_iou(&a, &[]).is_err());
    }

    #[test]
    fn pr_counts_strictly_above() {
        let pr = pr_at_x(&[0.55, 0.65], &[0.5, 0.6, 0.7]).unwrap();
        assert_eq!(pr, vec![(0.5, 1.0), (0.6, 0.5), (0.7, 0.0)]);
        let pr = pr_at_x(&[0.5], &[0.5]).unwrap();
        assert_eq!(pr[0].1, 0.0);
        assert!(pr_at_x(&[], &PR_THRESHOLDS).is_err());
        assert!(pr_at_x(&[1.0; 4], &PR_THRESHOLDS)
            .unwrap()
            .iter()
            .all(|&(_, v)| v == 1.0));
    }
}
