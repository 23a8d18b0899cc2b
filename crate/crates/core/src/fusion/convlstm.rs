use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Level visiting order: bottom-up from level 5 to 2, then back up to 5.
pub const FUSION_SCHEDULE: [usize; 7] = [5, 4, 3, 2, 3, 4, 5];

/// Gate convolution over `[x, h]`: `w: [k×k×(C_in+C_s)×4C_s]`, `b: [4C_s]`,
/// output channels laid out `[i | f | o | g]`.
#[derive(Debug, Clone, Copy)]
pub struct ConvLstmParams {
    pub w: Var,
    pub b: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct ConvLstmState {
    pub h: Var,
    pub c: Var,
}

impl ConvLstmState {
    pub fn zeros(tape: &mut Tape, h: usize, w: usize, channels: usize) -> Self {
        ConvLstmState {
            h: tape.constant(Tensor::zeros(&[h, w, channels])),
            c: tape.constant(Tensor::zeros(&[h, w, channels])),
        }
    }
}

pub fn convlstm_cell(
    tape: &mut Tape,
    x: Var,
    state: ConvLstmState,
    p: &ConvLstmParams,
) -> Result<ConvLstmState> {
    if tape.shape(state.h) != tape.shape(state.c) {
        return Err(Error::dim(
            "convlstm_cell",
            tape.shape(state.h),
            tape.shape(state.c),
        ));
    }
    let cs = tape.value(state.h).last_dim();
    let gates_out = tape.value(p.w).last_dim();
    if gates_out != 4 * cs {
        return Err(Error::dim(
            "convlstm_cell",
            tape.shape(p.w),
            tape.shape(state.h),
        ));
    }
    let xh = tape.concat_channels(&[x, state.h])?;
    let z = tape.conv2d_same(xh, p.w, p.b)?;
    let i_pre = tape.slice_channels(z, 0, cs)?;
    let f_pre = tape.slice_channels(z, cs, cs)?;
    let o_pre = tape.slice_channels(z, 2 * cs, cs)?;
    let g_pre = tape.slice_channels(z, 3 * cs, cs)?;
    let i = tape.sigmoid(i_pre);
    let f = tape.sigmoid(f_pre);
    let o = tape.sigmoid(o_pre);
    let g = tape.tanh(g_pre);
    let fc = tape.mul(f, state.c)?;
    let ig = tape.mul(i, g)?;
    let c = tape.add(fc, ig)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok(ConvLstmState { h, c })
}

/// Feeds the level outputs through one shared ConvLSTM cell in
/// [`FUSION_SCHEDULE`] order and returns the final hidden state.
/// `levels[i]` holds level `i + 2`, so exactly four are required.
pub fn dual_path_fuse(tape: &mut Tape, levels: &[Var], p: &ConvLstmParams) -> Result<Var> {
    if levels.len() != 4 {
        return Err(Error::Config(alloc::format!(
            "dual-path fusion needs levels 2..=5, got {} levels",
            levels.len()
        )));
    }
    let (h, w) = (tape.shape(levels[0])[0], tape.shape(levels[0])[1]);
    let cs = tape.value(p.w).last_dim() / 4;
    let mut state = ConvLstmState::zeros(tape, h, w, cs);
    let mut steps = 0;
    for &level in &FUSION_SCHEDULE {
        state = convlstm_cell(tape, levels[level - 2], state, p)?;
        steps += 1;
    }
    assert_eq!(steps, 7, "fusion schedule must run exactly seven steps");
    Ok(state.h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{finite_diff_check_many, Coverage, DEFAULT_EPS};
    use crate::rng::Rng;
    use alloc::vec::Vec;

    #[test]
    fn zero_weights_zero_state() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_fn(&[3, 3, 2], |i| i as f64));
        let p = ConvLstmParams {
            w: tape.constant(Tensor::zeros(&[3, 3, 4, 8])),
            b: tape.constant(Tensor::zeros(&[8])),
        };
        let s0 = ConvLstmState::zeros(&mut tape, 3, 3, 2);
        let s = convlstm_cell(&mut tape, x, s0, &p).unwrap();
        assert!(tape.value(s.h).data().iter().all(|&v| v == 0.0));
        assert!(tape.value(s.c).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_forget_gate_preserves_cell() {
        let mut tape = Tape::new();
        let cs = 2;
        let x = tape.constant(Tensor::zeros(&[2, 2, 1]));
        let mut b = Tensor::zeros(&[4 * cs]);
        for j in cs..2 * cs {
            b.data_mut()[j] = 1e3; // forget gate saturates at 1
        }
        for j in 0..cs {
            b.data_mut()[j] = -1e3; // input gate closed
        }
        let p = ConvLstmParams {
            w: tape.constant(Tensor::zeros(&[3, 3, 1 + cs, 4 * cs])),
            b: tape.constant(b),
        };
        let c0 = Tensor::from_fn(&[2, 2, cs], |i| i as f64 * 0.3 - 0.5);
        let state = ConvLstmState {
            h: tape.constant(Tensor::zeros(&[2, 2, cs])),
            c: tape.constant(c0.clone()),
        };
        let s = convlstm_cell(&mut tape, x, state, &p).unwrap();
        assert!(tape.value(s.c).max_abs_diff(&c0) < 1e-12);
    }

    fn random_params(tape: &mut Tape, rng: &mut Rng, cin: usize, cs: usize) -> ConvLstmParams {
        ConvLstmParams {
            w: tape.constant(rng.uniform_tensor(&[3, 3, cin + cs, 4 * cs], 0.4)),
            b: tape.constant(rng.uniform_tensor(&[4 * cs], 0.4)),
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let run = || {
            let mut rng = Rng::new(77);
            let mut tape = Tape::new();
            let p = random_params(&mut tape, &mut rng, 3, 3);
            let x = tape.constant(rng.uniform_tensor(&[4, 4, 3], 1.0));
            let s0 = ConvLstmState::zeros(&mut tape, 4, 4, 3);
            let s = convlstm_cell(&mut tape, x, s0, &p).unwrap();
            tape.value(s.h).clone()
        };
        assert!(run().bit_eq(&run()));
    }

    #[test]
    fn zero_levels_fuse_to_zero() {
        let mut rng = Rng::new(3);
        let mut tape = Tape::new();
        let mut p = random_params(&mut tape, &mut rng, 2, 2);
        p.b = tape.constant(Tensor::zeros(&[8]));
        let zero = tape.constant(Tensor::zeros(&[3, 3, 2]));
        let h = dual_path_fuse(&mut tape, &[zero; 4], &p).unwrap();
        assert!(tape.value(h).data().iter().all(|&v| v == 0.0));
        assert!(matches!(
            dual_path_fuse(&mut tape, &[zero; 3], &p),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn schedule_visits_levels_in_prescribed_order() {
        assert_eq!(FUSION_SCHEDULE.len(), 7);
        for level in [3, 4, 5] {
            assert_eq!(FUSION_SCHEDULE.iter().filter(|&&l| l == level).count(), 2);
        }
        assert_eq!(FUSION_SCHEDULE.iter().filter(|&&l| l == 2).count(), 1);
    }

    /// Reference value captured at the first correct run; guards the order.
    #[test]
    fn permuted_order_changes_output() {
        let mut rng = Rng::new(2024);
        let mut tape = Tape::new();
        let p = random_params(&mut tape, &mut rng, 3, 3);
        let levels: Vec<Var> = (0..4)
            .map(|_| tape.constant(rng.uniform_tensor(&[3, 3, 3], 1.0)))
            .collect();
        let h = dual_path_fuse(&mut tape, &levels, &p).unwrap();
        let fused = tape.value(h).data().iter().sum::<f64>();

        let mut state = ConvLstmState::zeros(&mut tape, 3, 3, 3);
        for level in [2, 3, 4, 5, 4, 3, 2] {
            state = convlstm_cell(&mut tape, levels[level - 2], state, &p).unwrap();
        }
        let permuted = tape.value(state.h).data().iter().sum::<f64>();
        assert!((fused - permuted).abs() > 1e-6);
        assert!(
            (fused - FUSED_REFERENCE).abs() < 1e-12,
            "fused = {fused:.17}"
        );
    }

    const FUSED_REFERENCE: f64 = -0.677_139_710_582_527_98;

    #[test]
    fn cell_gradient_matches_finite_differences() {
        let mut rng = Rng::new(8);
        let cs = 4;
        let inputs = [
            rng.uniform_tensor(&[4, 4, 4], 1.0),
            rng.uniform_tensor(&[4, 4, cs], 1.0),
            rng.uniform_tensor(&[4, 4, cs], 1.0),
            rng.uniform_tensor(&[3, 3, 4 + cs, 4 * cs], 0.3),
            rng.uniform_tensor(&[4 * cs], 0.3),
        ];
        let err = finite_diff_check_many(
            |tape, v| {
                let p = ConvLstmParams { w: v[3], b: v[4] };
                let s = convlstm_cell(tape, v[0], ConvLstmState { h: v[1], c: v[2] }, &p)?;
                let hs = tape.mul(s.h, s.h)?;
                let l1 = tape.sum(hs);
                let l2 = tape.sum(s.c);
                tape.add(l1, l2)
            },
            &inputs,
            DEFAULT_EPS,
            Coverage::All,
        )
        .unwrap();
        assert!(err <= 1e-4, "err = {err}");
    }
}
