//! Linguistic-structure guided context modeling (LSCM) for referring image
//! segmentation, built on a small dense-tensor reverse-mode autodiff engine.
//!
//! The crate is `no_std` (with `alloc`) so that the numerical core carries no
//! IO. File formats, checkpoints, and the command line live in `lscm-cli`.
//!
//! Layout:
//! - [`tensor`], [`autodiff`], [`gradcheck`]: dense f64 tensors and the tape.
//! - [`text`]: tokenization, vocabulary, CoNLL-U trees, tree mask, LSTM encoder.
//! - [`lscm`]: coordinate feature, fusion, gather / propagate / distribute.
//! - [`fusion`]: ConvLSTM dual-path multi-level fusion, mask head and loss.
//! - [`model`], [`optim`], [`train`]: the full network and its training loop.
//! - [`synth`]: procedural referring-segmentation benchmark and metrics.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod autodiff;
pub mod error;
pub mod fusion;
pub mod gradcheck;
pub mod lscm;
pub mod model;
pub mod optim;
pub mod params;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod text;
pub mod train;

pub use autodiff::{Tape, Var};
pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::Tensor;
