use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

/// Low-rank multimodal fusion. For each location `p`,
/// `m_p = Σ_r tanh([v_p; P_p] W_v^r) ⊙ tanh(L W_l^r)`.
///
/// `v: [H×W×C_v]`, `l: [C_l]` (pooled sentence feature), `coord: [H×W×8]`,
/// `w_v[r]: [(C_v+8)×C_h]`, `w_l[r]: [C_l×C_h]`. Returns `[H×W×C_h]`.
pub fn mutan_fuse(
    tape: &mut Tape,
    v: Var,
    l: Var,
    coord: Var,
    w_v: &[Var],
    w_l: &[Var],
) -> Result<Var> {
    if w_v.is_empty() || w_v.len() != w_l.len() {
        return Err(Error::Config(alloc::format!(
            "mutan needs matching non-empty factor lists, got {} and {}",
            w_v.len(),
            w_l.len()
        )));
    }
    let (h, w) = (tape.shape(v)[0], tape.shape(v)[1]);
    let vp = tape.concat_channels(&[v, coord])?;
    let vp_rows = tape.value(vp).last_dim();
    let vp = tape.reshape(vp, &[h * w, vp_rows])?;
    let c_l = tape.value(l).numel();
    let l_row = tape.reshape(l, &[1, c_l])?;
    let mut acc: Option<Var> = None;
    for (&wv, &wl) in w_v.iter().zip(w_l) {
        let vis = tape.matmul(vp, wv)?;
        let vis = tape.tanh(vis);
        let lang = tape.matmul(l_row, wl)?;
        let lang = tape.tanh(lang);
        let c_h = tape.value(lang).numel();
        let lang = tape.reshape(lang, &[c_h])?;
        let lang = tape.tile_rows(lang, h * w)?;
        let term = tape.mul(vis, lang)?;
        acc = Some(match acc {
            Some(a) => tape.add(a, term)?,
            None => term,
        });
    }
    let m = acc.expect("at least one factor");
    let c_h = tape.value(m).last_dim();
    tape.reshape(m, &[h, w, c_h])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lscm::coord_feature;
    use crate::rng::Rng;
    use crate::tensor::Tensor;

    #[test]
    fn zero_sentence_annihilates() {
        let mut rng = Rng::new(1);
        let mut tape = Tape::new();
        let v = tape.constant(rng.uniform_tensor(&[3, 3, 4], 1.0));
        let p = tape.constant(coord_feature(3, 3));
        let l = tape.constant(Tensor::zeros(&[5]));
        let wv: alloc::vec::Vec<Var> = (0..4)
            .map(|_| tape.constant(rng.uniform_tensor(&[12, 6], 1.0)))
            .collect();
        let wl: alloc::vec::Vec<Var> = (0..4)
            .map(|_| tape.constant(rng.uniform_tensor(&[5, 6], 1.0)))
            .collect();
        let m = mutan_fuse(&mut tape, v, l, p, &wv, &wl).unwrap();
        assert_eq!(tape.shape(m), &[3, 3, 6]);
        assert!(tape.value(m).data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rank_one_all_ones_preactivation() {
        // Only the 1/W coordinate channel (= 1 on a 1×1 grid) feeds W_v, so
        // both factor pre-activations are exactly 1.
        let mut tape = Tape::new();
        let (h, w) = (1, 1);
        let v = tape.constant(Tensor::zeros(&[h, w, 2]));
        let p = tape.constant(coord_feature(h, w)); // channel 6 = 1/W = 1
        let mut wv = Tensor::zeros(&[10, 3]);
        for j in 0..3 {
            wv.data_mut()[(2 + 6) * 3 + j] = 1.0;
        }
        let wv = tape.constant(wv);
        let l = tape.constant(Tensor::full(&[1], 1.0));
        let wl = tape.constant(Tensor::full(&[1, 3], 1.0));
        let m = mutan_fuse(&mut tape, v, l, p, &[wv], &[wl]).unwrap();
        let expect = 1.0f64.tanh().powi(2);
        assert!((expect - 0.5800).abs() < 1e-4);
        assert!(tape
            .value(m)
            .data()
            .iter()
            .all(|&x| (x - expect).abs() < 1e-15));
    }

    #[test]
    fn bounded_by_rank() {
        let mut rng = Rng::new(2);
        let mut tape = Tape::new();
        let v = tape.constant(rng.uniform_tensor(&[2, 2, 3], 5.0));
        let p = tape.constant(coord_feature(2, 2));
        let l = tape.constant(rng.uniform_tensor(&[4], 5.0));
        let wv: alloc::vec::Vec<Var> = (0..3)
            .map(|_| tape.constant(rng.uniform_tensor(&[11, 4], 5.0)))
            .collect();
        let wl: alloc::vec::Vec<Var> = (0..3)
            .map(|_| tape.constant(rng.uniform_tensor(&[4, 4], 5.0)))
            .collect();
        let m = mutan_fuse(&mut tape, v, l, p, &wv, &wl).unwrap();
        assert!(tape.value(m).data().iter().all(|x| x.abs() <= 3.0));
    }
}
