//! Linguistic-structure guided context modeling.
//!
//! For each visual level the multimodal map `M` is built by low-rank fusion,
//! then context is modeled on a word graph in three steps:
//!
//! 1. **gather**: cross-modal attention `B = softmax((Q W_q2)(M W_m)ᵀ / √C_h)`
//!    pools the `HW` locations into `T` word nodes, `X = B M`.
//! 2. **propagate**: a learned adjacency `A = softmax((X W_x1)(X W_x2)ᵀ / √C_h)`
//!    is suppressed by the tree mask, `A_t = A ⊙ S`, and a graph convolution
//!    `Z = (A_t + I) X W_z` updates the nodes (no renormalization, no
//!    nonlinearity).
//! 3. **distribute**: `Z̃ = Bᵀ Z` scatters node features back to locations.
//!
//! The level output `Y` is a 1×1 convolution over `[V, Z̃, L̂, P]`.

mod context;
mod coord;
mod mutan;

pub use context::{
    build_adjacency, distribute, gather, lscm_forward, lscm_level, output_project, propagate,
    Depth, LevelOutput, LevelParams, LscmOutput,
};
pub use coord::{coord_feature, COORD_CHANNELS};
pub use mutan::mutan_fuse;
