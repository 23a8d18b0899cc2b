//! Dual-path multi-level fusion, mask head and loss.

mod convlstm;
mod head;

pub use convlstm::{convlstm_cell, dual_path_fuse, ConvLstmParams, ConvLstmState, FUSION_SCHEDULE};
pub use head::{bce_loss, predict_mask, HeadParams};
