mod support;

use lscm_core::rng::Rng;
use lscm_core::synth::{evaluate, gen_sample, Difficulty};
use lscm_core::Tape;
use proptest::prelude::*;
use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tree_mask_structure(seed in any::<u64>(), t in 1usize..=20, alpha in 0.0f64..=1.0) {
        let r = check_tree_mask(&random_tree(seed, t), alpha);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn alpha_extremes(seed in any::<u64>(), t in 1usize..=20) {
        let r = check_alpha_extremes(seed ^ 0x5a5a, &random_tree(seed, t));
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn matmul_is_associative(seed in any::<u64>(), n in 1usize..6, k in 1usize..6, m in 1usize..6, p in 1usize..6) {
        let mut rng = Rng::new(seed);
        let mut tape = Tape::new();
        let a = tape.constant(rng.uniform_tensor(&[n, k], 1.0));
        let b = tape.constant(rng.uniform_tensor(&[k, m], 1.0));
        let c = tape.constant(rng.uniform_tensor(&[m, p], 1.0));
        let ab = tape.matmul(a, b).unwrap();
        let left = tape.matmul(ab, c).unwrap();
        let bc = tape.matmul(b, c).unwrap();
        let right = tape.matmul(a, bc).unwrap();
        prop_assert!(tape.value(left).max_abs_diff(tape.value(right)) < 1e-12);
    }

    #[test]
    fn softmax_rows_are_distributions(seed in any::<u64>(), rows in 1usize..8, cols in 1usize..12, spread in 0.1f64..200.0) {
        let mut tape = Tape::new();
        let x = tape.constant(Rng::new(seed).uniform_tensor(&[rows, cols], spread));
        let y = tape.scaled_row_softmax(x, 1.0).unwrap();
        for r in 0..rows {
            let row = tape.value(y).row(r);
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn metrics_match_pixel_loop_on_small_sets(seed in any::<u64>(), n in 1usize..10) {
        let (preds, gts) = random_mask_pairs(seed, n);
        prop_assert!(metric_error(&preds, &gts) <= 1e-12);
    }
}

#[test]
fn mask_algebra_on_fixed_trees() {
    mask_algebra(100).unwrap();
}

#[test]
fn attention_rows_sum_to_one() {
    let worst = worst_row_sum_error(1000);
    assert!(worst <= 1e-9, "worst row-sum error {worst:e}");
}

#[test]
fn metrics_match_pixel_loop() {
    let (preds, gts) = random_mask_pairs(8, 100);
    for (p, g) in preds.iter().zip(&gts) {
        assert!(metric_error(std::slice::from_ref(p), std::slice::from_ref(g)) <= 1e-12);
    }
    assert!(metric_error(&preds, &gts) <= 1e-12);
}

#[test]
fn overall_iou_differs_from_mean_iou() {
    let (preds, gts) = distinguishing_pairs();
    let r = evaluate(&preds, &gts).unwrap();
    assert!((r.overall_iou - 0.9).abs() <= 1e-12);
    assert!((r.mean_iou() - 0.5).abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn synth_sample_invariants(seed in any::<u64>(), d in 0usize..3) {
        let difficulty = [Difficulty::Simple, Difficulty::Attribute, Difficulty::Relation][d];
        let s = gen_sample(seed, difficulty).unwrap();
        prop_assert_eq!(s.expression.referents(&s.scene), vec![s.target]);
        let masks = s.scene.masks();
        for i in 0..masks.len() {
            prop_assert!(masks[i].count() > 0);
            for j in i + 1..masks.len() {
                prop_assert_eq!(masks[i].overlap(&masks[j]).unwrap().0, 0);
            }
        }
        prop_assert_eq!(&s.mask, &masks[s.target]);
        prop_assert_eq!(s.tokens.len(), s.tree.len());
        let again = gen_sample(seed, difficulty).unwrap();
        prop_assert!(again.image.bit_eq(&s.image));
        prop_assert_eq!(again.mask, s.mask);
        prop_assert_eq!(again.tokens, s.tokens);
    }
}
