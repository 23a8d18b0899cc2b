//! Checks shared by the core tests and the workspace acceptance target.
#![allow(dead_code)]

pub mod oracle;

use lscm_core::lscm::{build_adjacency, gather, propagate};
use lscm_core::rng::Rng;
use lscm_core::synth::{overall_iou, pr_at_x, sample_ious, Mask, PR_THRESHOLDS};
use lscm_core::text::{tree_mask, DependencyTree};
use lscm_core::{Tape, Tensor};

pub fn random_tree(seed: u64, t: usize) -> DependencyTree {
    DependencyTree::random(&mut Rng::new(seed), t)
}

/// `A` from random features, `A_t = A ⊙ S` from propagate with no layers.
pub fn adjacency_pair(seed: u64, tree: &DependencyTree, alpha: f64) -> (Tensor, Tensor) {
    let mut rng = Rng::new(seed);
    let t = tree.len();
    let mut tape = Tape::new();
    let x = tape.constant(rng.uniform_tensor(&[t, 6], 2.0));
    let w1 = tape.constant(rng.uniform_tensor(&[6, 6], 1.0));
    let w2 = tape.constant(rng.uniform_tensor(&[6, 6], 1.0));
    let a = build_adjacency(&mut tape, x, w1, w2).unwrap();
    let s = tape.constant(tree_mask(tree, alpha).unwrap().s);
    let (_, a_t) = propagate(&mut tape, x, a, s, &[], 0).unwrap();
    (tape.value(a).clone(), tape.value(a_t).clone())
}

/// S symmetric, 1 on tree edges, `alpha` elsewhere, 2(T-1) unit entries.
pub fn check_tree_mask(tree: &DependencyTree, alpha: f64) -> Result<(), String> {
    let t = tree.len();
    let s = tree_mask(tree, alpha).map_err(|e| e.to_string())?.s;
    let mut ones = 0;
    for i in 0..t {
        for j in 0..t {
            if s.at2(i, j).to_bits() != s.at2(j, i).to_bits() {
                return Err(format!("S not symmetric at ({i}, {j})"));
            }
            let want = if tree.is_edge(i + 1, j + 1) {
                1.0
            } else {
                alpha
            };
            if s.at2(i, j) != want {
                return Err(format!("S[{i}][{j}] = {} but expected {want}", s.at2(i, j)));
            }
            ones += (s.at2(i, j) == 1.0 && want == 1.0) as usize;
        }
    }
    if ones != 2 * (t - 1) {
        return Err(format!("{ones} unit entries for T = {t}"));
    }
    Ok(())
}

/// α = 1 leaves `A` bitwise; α = 0 zeroes every off-edge entry.
pub fn check_alpha_extremes(seed: u64, tree: &DependencyTree) -> Result<(), String> {
    let (a, a_t) = adjacency_pair(seed, tree, 1.0);
    if !a.bit_eq(&a_t) {
        return Err("α = 1 changed A".into());
    }
    let (a, a_t) = adjacency_pair(seed, tree, 0.0);
    let t = tree.len();
    for i in 0..t {
        for j in 0..t {
            let ok = if tree.is_edge(i + 1, j + 1) {
                a_t.at2(i, j).to_bits() == a.at2(i, j).to_bits()
            } else {
                a_t.at2(i, j) == 0.0
            };
            if !ok {
                return Err(format!("α = 0 entry ({i}, {j}) is {}", a_t.at2(i, j)));
            }
        }
    }
    Ok(())
}

/// `count` random trees with T in 1..=20.
pub fn mask_algebra(count: u64) -> Result<(), String> {
    for seed in 0..count {
        let mut rng = Rng::new(seed);
        let t = 1 + rng.below(20) as usize;
        let tree = random_tree(rng.next_u64(), t);
        check_tree_mask(&tree, rng.uniform(0.0, 1.0)).map_err(|e| format!("tree {seed}: {e}"))?;
        check_alpha_extremes(rng.next_u64(), &tree).map_err(|e| format!("tree {seed}: {e}"))?;
    }
    Ok(())
}

/// Worst `|Σ row − 1|` over the rows of B and A, `count` random inputs with
/// random sizes and scales.
pub fn worst_row_sum_error(count: u64) -> f64 {
    let mut worst = 0.0f64;
    for seed in 0..count {
        let mut rng = Rng::new(seed);
        let t = 1 + rng.below(20) as usize;
        let (h, w) = (1 + rng.below(8) as usize, 1 + rng.below(8) as usize);
        let (c_l, c_h) = (1 + rng.below(8) as usize, 1 + rng.below(8) as usize);
        let scale = rng.uniform(0.1, 10.0);
        let mut tape = Tape::new();
        let q = tape.constant(rng.uniform_tensor(&[t, c_l], scale));
        let m = tape.constant(rng.uniform_tensor(&[h, w, c_h], scale));
        let w_q2 = tape.constant(rng.uniform_tensor(&[c_l, c_h], scale));
        let w_m = tape.constant(rng.uniform_tensor(&[c_h, c_h], scale));
        let w_x1 = tape.constant(rng.uniform_tensor(&[c_h, c_h], scale));
        let w_x2 = tape.constant(rng.uniform_tensor(&[c_h, c_h], scale));
        let (b, x) = gather(&mut tape, q, m, w_q2, w_m).unwrap();
        let a = build_adjacency(&mut tape, x, w_x1, w_x2).unwrap();
        for v in [b, a] {
            let v = tape.value(v);
            for r in 0..v.rows() {
                worst = worst.max((v.row(r).iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    worst
}

pub fn random_mask(rng: &mut Rng, h: usize, w: usize, density: f64) -> Mask {
    Mask::from_bits(
        h,
        w,
        (0..h * w)
            .map(|_| rng.uniform(0.0, 1.0) < density)
            .collect(),
    )
    .unwrap()
}

/// `n` pairs of random sizes; half the predictions are noisy copies of the
/// ground truth so IoUs cover the whole Pr@X range.
pub fn random_mask_pairs(seed: u64, n: usize) -> (Vec<Mask>, Vec<Mask>) {
    let mut rng = Rng::new(seed);
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for _ in 0..n {
        let (h, w) = (1 + rng.below(32) as usize, 1 + rng.below(32) as usize);
        let d = rng.uniform(0.0, 1.0);
        let gt = random_mask(&mut rng, h, w, d);
        let pred = if rng.below(2) == 0 {
            let d = rng.uniform(0.0, 1.0);
            random_mask(&mut rng, h, w, d)
        } else {
            let flip = rng.uniform(0.0, 0.3);
            let bits = gt
                .bits()
                .iter()
                .map(|&b| b ^ (rng.uniform(0.0, 1.0) < flip))
                .collect();
            Mask::from_bits(h, w, bits).unwrap()
        };
        preds.push(pred);
        gts.push(gt);
    }
    (preds, gts)
}

/// Pixel-loop reference: (overall IoU, per-sample IoUs).
pub fn pixel_reference(preds: &[Mask], gts: &[Mask]) -> (f64, Vec<f64>) {
    let (mut ti, mut tu) = (0u64, 0u64);
    let mut ious = Vec::new();
    for (p, g) in preds.iter().zip(gts) {
        let (mut i, mut u) = (0u64, 0u64);
        for y in 0..g.height() {
            for x in 0..g.width() {
                let (a, b) = (p.get(y, x), g.get(y, x));
                i += (a && b) as u64;
                u += (a || b) as u64;
            }
        }
        ious.push(if u == 0 { 1.0 } else { i as f64 / u as f64 });
        ti += i;
        tu += u;
    }
    (if tu == 0 { 1.0 } else { ti as f64 / tu as f64 }, ious)
}

/// Largest deviation of overall IoU, per-sample IoU and Pr@X from the
/// pixel-loop reference.
pub fn metric_error(preds: &[Mask], gts: &[Mask]) -> f64 {
    let (overall, ious) = pixel_reference(preds, gts);
    let mut worst = (overall_iou(preds, gts).unwrap() - overall).abs();
    let got = sample_ious(preds, gts).unwrap();
    for (a, b) in got.iter().zip(&ious) {
        worst = worst.max((a - b).abs());
    }
    for (x, frac) in pr_at_x(&got, &PR_THRESHOLDS).unwrap() {
        let want = ious.iter().filter(|&&v| v > x).count() as f64 / ious.len() as f64;
        worst = worst.max((frac - want).abs());
    }
    worst
}

/// Pairs with (I, U) = (0, 1) and (9, 9).
pub fn distinguishing_pairs() -> (Vec<Mask>, Vec<Mask>) {
    let mut p1 = Mask::zeros(3, 3);
    p1.set(0, 0, true);
    let full = Mask::from_bits(3, 3, vec![true; 9]).unwrap();
    (vec![p1, full.clone()], vec![Mask::zeros(3, 3), full])
}
