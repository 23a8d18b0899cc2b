use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// 1×1 projection to a single logit channel: `w: [1×1×C_s×1]`, `b: [1]`.
#[derive(Debug, Clone, Copy)]
pub struct HeadParams {
    pub w: Var,
    pub b: Var,
}

/// Logits `[H·f × W·f × 1]`: a 1×1 convolution then bilinear upsampling by
/// `factor`.
pub fn predict_mask(tape: &mut Tape, h: Var, p: &HeadParams, factor: usize) -> Result<Var> {
    if factor == 0 {
        return Err(Error::Config("upsample factor must be at least 1".into()));
    }
    let logits = tape.conv2d_same(h, p.w, p.b)?;
    tape.upsample_bilinear(logits, factor)
}

/// Mean pixel-wise binary cross-entropy; `gt` is a `{0, 1}` tensor shaped
/// like `logits`.
pub fn bce_loss(tape: &mut Tape, logits: Var, gt: &Tensor) -> Result<Var> {
    tape.bce_with_logits(logits, gt)
}
