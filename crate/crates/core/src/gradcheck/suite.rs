//! The full finite-difference suite: every differentiable op in isolation,
//! then the composite stages and the whole model at a tiny configuration.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{finite_diff_check_many, Coverage, DEFAULT_EPS};
use crate::autodiff::{Tape, Var};
use crate::error::Result;
use crate::fusion::{bce_loss, convlstm_cell, ConvLstmParams, ConvLstmState};
use crate::lscm::{
    build_adjacency, distribute, gather, mutan_fuse, output_project, propagate, Depth,
};
use crate::model::{init_params, Model, ModelConfig};
use crate::rng::{derive_seed, Rng};
use crate::tensor::Tensor;
use crate::text::{lstm_encode, tree_mask, DependencyTree, LstmParams};

pub const SUITE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    /// Worst error over all trials.
    pub max_err: f64,
    pub trials: usize,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_err <= SUITE_TOLERANCE
    }
}

type Case = fn(&mut Rng) -> Result<f64>;

/// `Σ out²`, a scalar that exercises every output coordinate.
fn sum_sq(t: &mut Tape, out: Var) -> Result<Var> {
    let sq = t.mul(out, out)?;
    Ok(t.sum(sq))
}

fn check(
    rng: &mut Rng,
    shapes: &[&[usize]],
    f: impl Fn(&mut Tape, &[Var]) -> Result<Var>,
) -> Result<f64> {
    let inputs: Vec<Tensor> = shapes.iter().map(|s| rng.uniform_tensor(s, 1.0)).collect();
    finite_diff_check_many(f, &inputs, DEFAULT_EPS, Coverage::All)
}

fn op_cases() -> Vec<(&'static str, Case)> {
    vec![
        ("matmul", |r| {
            check(r, &[&[3, 4], &[4, 2]], |t, v| {
                let y = t.matmul(v[0], v[1])?;
                sum_sq(t, y)
            })
        }),
        ("transpose", |r| {
            check(r, &[&[3, 2]], |t, v| {
                let y = t.transpose(v[0])?;
                let w = t.constant(Tensor::from_fn(&[3, 1], |i| i as f64 + 1.0));
                let y = t.matmul(y, w)?;
                sum_sq(t, y)
            })
        }),
        ("add", |r| {
            check(r, &[&[2, 3], &[2, 3]], |t, v| {
                let y = t.add(v[0], v[1])?;
                sum_sq(t, y)
            })
        }),
        ("sub", |r| {
            check(r, &[&[2, 3], &[2, 3]], |t, v| {
                let y = t.sub(v[0], v[1])?;
                sum_sq(t, y)
            })
        }),
        ("mul", |r| {
            check(r, &[&[2, 3], &[2, 3]], |t, v| {
                let y = t.mul(v[0], v[1])?;
                sum_sq(t, y)
            })
        }),
        ("scale", |r| {
            check(r, &[&[4]], |t, v| {
                let y = t.scale(v[0], -1.7);
                sum_sq(t, y)
            })
        }),
        ("add_row_bias", |r| {
            check(r, &[&[3, 2], &[2]], |t, v| {
                let y = t.add_row_bias(v[0], v[1])?;
                sum_sq(t, y)
            })
        }),
        ("add_identity", |r| {
            check(r, &[&[3, 3]], |t, v| {
                let y = t.add_identity(v[0])?;
                sum_sq(t, y)
            })
        }),
        ("sigmoid", |r| {
            check(r, &[&[5]], |t, v| {
                let y = t.sigmoid(v[0]);
                sum_sq(t, y)
            })
        }),
        ("tanh", |r| {
            check(r, &[&[5]], |t, v| {
                let y = t.tanh(v[0]);
                sum_sq(t, y)
            })
        }),
        ("relu", |r| {
            check(r, &[&[5]], |t, v| {
                let y = t.relu(v[0]);
                sum_sq(t, y)
            })
        }),
        ("scaled_row_softmax", |r| {
            check(r, &[&[3, 4]], |t, v| {
                let y = t.scaled_row_softmax(v[0], 1.5)?;
                sum_sq(t, y)
            })
        }),
        ("max_pool_over_rows", |r| {
            check(r, &[&[4, 3]], |t, v| {
                let y = t.max_pool_over_rows(v[0])?;
                sum_sq(t, y)
            })
        }),
        ("concat_channels", |r| {
            check(r, &[&[2, 2, 1], &[2, 2, 3]], |t, v| {
                let y = t.concat_channels(&[v[0], v[1]])?;
                let y = t.reshape(y, &[4, 4])?;
                let y = t.scaled_row_softmax(y, 1.0)?;
                sum_sq(t, y)
            })
        }),
        ("concat_rows", |r| {
            check(r, &[&[1, 3], &[2, 3]], |t, v| {
                let y = t.concat_rows(&[v[0], v[1]])?;
                let y = t.scaled_row_softmax(y, 1.0)?;
                sum_sq(t, y)
            })
        }),
        ("slice_channels", |r| {
            check(r, &[&[2, 2, 4]], |t, v| {
                let y = t.slice_channels(v[0], 1, 2)?;
                sum_sq(t, y)
            })
        }),
        ("select_row", |r| {
            check(r, &[&[3, 2]], |t, v| {
                let y = t.select_row(v[0], 1)?;
                sum_sq(t, y)
            })
        }),
        ("reshape", |r| {
            check(r, &[&[2, 3]], |t, v| {
                let y = t.reshape(v[0], &[3, 2])?;
                let y = t.scaled_row_softmax(y, 1.0)?;
                sum_sq(t, y)
            })
        }),
        ("sum", |r| {
            check(r, &[&[2, 3]], |t, v| {
                let y = t.sum(v[0]);
                sum_sq(t, y)
            })
        }),
        ("mean", |r| {
            check(r, &[&[2, 3]], |t, v| {
                let y = t.mean(v[0]);
                sum_sq(t, y)
            })
        }),
        ("conv2d_same_k1", |r| {
            check(r, &[&[3, 3, 2], &[1, 1, 2, 3], &[3]], |t, v| {
                let y = t.conv2d_same(v[0], v[1], v[2])?;
                sum_sq(t, y)
            })
        }),
        ("conv2d_same_k3", |r| {
            check(r, &[&[4, 3, 2], &[3, 3, 2, 2], &[2]], |t, v| {
                let y = t.conv2d_same(v[0], v[1], v[2])?;
                sum_sq(t, y)
            })
        }),
        ("avg_pool", |r| {
            check(r, &[&[4, 4, 2]], |t, v| {
                let y = t.avg_pool(v[0], 2)?;
                sum_sq(t, y)
            })
        }),
        ("upsample_bilinear", |r| {
            check(r, &[&[2, 3, 2]], |t, v| {
                let y = t.upsample_bilinear(v[0], 4)?;
                sum_sq(t, y)
            })
        }),
        ("embed_rows", |r| {
            check(r, &[&[4, 3]], |t, v| {
                let y = t.embed_rows(v[0], &[2, 0, 2])?;
                sum_sq(t, y)
            })
        }),
        ("tile_rows", |r| {
            check(r, &[&[3]], |t, v| {
                let y = t.tile_rows(v[0], 4)?;
                sum_sq(t, y)
            })
        }),
        ("bce_with_logits", |r| {
            let gt = Tensor::from_fn(&[3, 3, 1], |i| (i % 2) as f64);
            check(r, &[&[3, 3, 1]], move |t, v| bce_loss(t, v[0], &gt))
        }),
    ]
}

fn stage_cases() -> Vec<(&'static str, Case)> {
    vec![
        ("lstm_encode", |r| {
            check(r, &[&[3, 6], &[6, 24], &[6, 24], &[24]], |t, v| {
                let q = lstm_encode(
                    t,
                    v[0],
                    &LstmParams {
                        w_x: v[1],
                        w_h: v[2],
                        b: v[3],
                    },
                )?;
                sum_sq(t, q)
            })
        }),
        ("mutan_fuse", |r| {
            check(
                r,
                &[
                    &[3, 3, 4],
                    &[5],
                    &[3, 3, 2],
                    &[6, 3],
                    &[6, 3],
                    &[5, 3],
                    &[5, 3],
                ],
                |t, v| {
                    let m = mutan_fuse(t, v[0], v[1], v[2], &v[3..5], &v[5..7])?;
                    sum_sq(t, m)
                },
            )
        }),
        ("gather", |r| {
            check(r, &[&[3, 4], &[2, 3, 5], &[4, 5], &[5, 5]], |t, v| {
                let (b, x) = gather(t, v[0], v[1], v[2], v[3])?;
                let lb = sum_sq(t, b)?;
                let lx = sum_sq(t, x)?;
                t.add(lb, lx)
            })
        }),
        ("build_adjacency", |r| {
            check(r, &[&[4, 5], &[5, 5], &[5, 5]], |t, v| {
                let a = build_adjacency(t, v[0], v[1], v[2])?;
                sum_sq(t, a)
            })
        }),
        ("propagate", |r| {
            let s = tree_mask(&DependencyTree::new(vec![2, 0, 2, 3]).expect("valid"), 0.1)?.s;
            check(r, &[&[4, 5], &[4, 4], &[5, 5], &[5, 5]], move |t, v| {
                let s = t.constant(s.clone());
                let (z, _) = propagate(t, v[0], v[1], s, &v[2..4], 2)?;
                sum_sq(t, z)
            })
        }),
        ("distribute", |r| {
            check(r, &[&[3, 6], &[3, 4]], |t, v| {
                let z = distribute(t, v[0], v[1], 2, 3)?;
                sum_sq(t, z)
            })
        }),
        ("output_project", |r| {
            check(
                r,
                &[
                    &[2, 2, 3],
                    &[2, 2, 4],
                    &[5],
                    &[2, 2, 8],
                    &[1, 1, 20, 3],
                    &[3],
                ],
                |t, v| {
                    let y = output_project(t, v[0], v[1], v[2], v[3], v[4], v[5])?;
                    sum_sq(t, y)
                },
            )
        }),
        ("convlstm_cell", |r| {
            check(
                r,
                &[&[4, 4, 4], &[4, 4, 4], &[4, 4, 4], &[3, 3, 8, 16], &[16]],
                |t, v| {
                    let s = convlstm_cell(
                        t,
                        v[0],
                        ConvLstmState { h: v[1], c: v[2] },
                        &ConvLstmParams { w: v[3], b: v[4] },
                    )?;
                    let lh = sum_sq(t, s.h)?;
                    let lc = t.sum(s.c);
                    t.add(lh, lc)
                },
            )
        }),
    ]
}

/// Tiny configuration of the full-model check: 4×4 grid, T=3, channels 8.
pub fn tiny_model_config() -> ModelConfig {
    ModelConfig {
        image_size: 16,
        c_v: 8,
        c_l: 8,
        c_h: 8,
        c_o: 8,
        c_s: 8,
        c_e: 8,
        vocab_size: 5,
        mutan_rank: 4,
        alpha: 0.1,
        depth: Depth::Fixed(1),
    }
}

/// Full forward to BCE loss, gradients w.r.t. every parameter tensor
/// (`per_input` sampled coordinates each).
pub fn full_model_check(seed: u64, per_input: usize) -> Result<f64> {
    let cfg = tiny_model_config();
    let params = init_params(&cfg, seed)?;
    let model = Model::new(cfg.clone())?;
    let mut rng = Rng::new(derive_seed(seed, 1));
    let image = rng.uniform_tensor(&[16, 16, 3], 1.0).map(|v| 0.5 + 0.5 * v);
    let gt = Tensor::from_fn(&[16, 16, 1], |_| if rng.below(2) == 0 { 0.0 } else { 1.0 });
    let tree = DependencyTree::new(vec![2, 0, 2])?;
    let ids = [1, 3, 4];
    finite_diff_check_many(
        |t, vars| {
            let bound = params.bind_vars(vars)?;
            let out = model.forward(t, &bound, &image, &ids, &tree)?;
            bce_loss(t, out.logits, &gt)
        },
        params.tensors(),
        DEFAULT_EPS,
        Coverage::Sample { per_input, seed },
    )
}

/// Runs every case for `trials` seeds derived from `seed`, and the full model
/// `model_trials` times.
pub fn gradient_suite(seed: u64, trials: usize, model_trials: usize) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (name, case) in op_cases().into_iter().chain(stage_cases()) {
        let mut worst = 0.0f64;
        for k in 0..trials {
            let mut rng = Rng::new(derive_seed(seed, k as u64));
            worst = worst.max(case(&mut rng)?);
        }
        out.push(CheckResult {
            name: name.into(),
            max_err: worst,
            trials,
        });
    }
    let mut worst = 0.0f64;
    for k in 0..model_trials {
        worst = worst.max(full_model_check(derive_seed(seed, 1000 + k as u64), 8)?);
    }
    out.push(CheckResult {
        name: "full_model".into(),
        max_err: worst,
        trials: model_trials,
    });
    Ok(out)
}
