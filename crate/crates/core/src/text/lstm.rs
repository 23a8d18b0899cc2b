use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

/// Single-layer LSTM weights. Gate columns are laid out `[i | f | o | g]`,
/// each `C_l` wide.
#[derive(Debug, Clone, Copy)]
pub struct LstmParams {
    /// `[C_e × 4C_l]`
    pub w_x: Var,
    /// `[C_l × 4C_l]`
    pub w_h: Var,
    /// `[4C_l]`
    pub b: Var,
}

/// Embedding-table row lookup; unknown words already map to row 0.
pub fn embed(tape: &mut Tape, table: Var, ids: &[usize]) -> Result<Var> {
    tape.embed_rows(table, ids)
}

/// Runs the LSTM over `x: [T×C_e]` from a zero state and stacks the hidden
/// states into `Q: [T×C_l]`.
pub fn lstm_encode(tape: &mut Tape, x: Var, p: &LstmParams) -> Result<Var> {
    let t_len = tape.shape(x)[0];
    if t_len == 0 {
        return Err(Error::Empty { op: "lstm_encode" });
    }
    let four_c = tape.value(p.w_x).last_dim();
    if four_c % 4 != 0 || tape.shape(p.w_h) != [four_c / 4, four_c] {
        return Err(Error::dim(
            "lstm_encode",
            tape.shape(p.w_x),
            tape.shape(p.w_h),
        ));
    }
    let c = four_c / 4;
    let xw = tape.matmul(x, p.w_x)?;
    let mut h: Option<Var> = None;
    let mut cell: Option<Var> = None;
    let mut hidden = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut z = tape.select_row(xw, t)?;
        if let Some(h_prev) = h {
            let hw = tape.matmul(h_prev, p.w_h)?;
            z = tape.add(z, hw)?;
        }
        z = tape.add_row_bias(z, p.b)?;
        let i_pre = tape.slice_channels(z, 0, c)?;
        let f_pre = tape.slice_channels(z, c, c)?;
        let o_pre = tape.slice_channels(z, 2 * c, c)?;
        let g_pre = tape.slice_channels(z, 3 * c, c)?;
        let i = tape.sigmoid(i_pre);
        let f = tape.sigmoid(f_pre);
        let o = tape.sigmoid(o_pre);
        let g = tape.tanh(g_pre);
        let ig = tape.mul(i, g)?;
        // zero initial state: f ⊙ c_0 vanishes on the first step
        let c_new = match cell {
            Some(c_prev) => {
                let fc = tape.mul(f, c_prev)?;
                tape.add(fc, ig)?
            }
            None => ig,
        };
        let tc = tape.tanh(c_new);
        let h_new = tape.mul(o, tc)?;
        hidden.push(h_new);
        h = Some(h_new);
        cell = Some(c_new);
    }
    tape.concat_rows(&hidden)
}
