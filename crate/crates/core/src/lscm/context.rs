use alloc::vec::Vec;

use super::{coord_feature, mutan_fuse};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::text::{tree_mask, DependencyTree};

/// Number of graph-convolution layers in propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Fixed(usize),
    /// One layer per level of the parse tree (its depth).
    Adaptive,
}

impl Depth {
    pub fn layers_for(self, tree: &DependencyTree) -> usize {
        match self {
            Depth::Fixed(n) => n,
            Depth::Adaptive => tree.depth(),
        }
    }
}

/// Weights of one visual level.
#[derive(Debug, Clone)]
pub struct LevelParams {
    /// Fusion factors `W_v^r: [(C_v+8)×C_h]`.
    pub w_v: Vec<Var>,
    /// Fusion factors `W_l^r: [C_l×C_h]`.
    pub w_l: Vec<Var>,
    pub w_q2: Var,
    pub w_m: Var,
    pub w_x1: Var,
    pub w_x2: Var,
    /// One `[C_h×C_h]` matrix per graph-convolution layer.
    pub w_z: Vec<Var>,
    /// `[1×1×(C_v+C_h+C_l+8)×C_o]`
    pub w_out: Var,
    pub b_out: Var,
}

/// Intermediate values of one level, kept for diagnostics and attention dumps.
#[derive(Debug, Clone, Copy)]
pub struct LevelOutput {
    pub m: Var,
    pub b: Var,
    pub x: Var,
    pub a: Var,
    pub a_t: Var,
    pub z: Var,
    pub z_tilde: Var,
    pub y: Var,
}

#[derive(Debug, Clone)]
pub struct LscmOutput {
    /// Max-pooled sentence feature `[C_l]`.
    pub sentence: Var,
    pub levels: Vec<LevelOutput>,
}

fn sqrt_channels(tape: &Tape, x: Var) -> f64 {
    libm::sqrt(tape.value(x).last_dim() as f64)
}

/// Cross-modal attention from words to locations. `q: [T×C_l]`,
/// `m: [H×W×C_h]`. Returns `B: [T×HW]` and `X = B M: [T×C_h]`.
pub fn gather(tape: &mut Tape, q: Var, m: Var, w_q2: Var, w_m: Var) -> Result<(Var, Var)> {
    let shape = tape.shape(m).to_vec();
    let [h, w, c_h] = shape[..] else {
        return Err(Error::dim("gather", &shape, &[0, 0, 0]));
    };
    let m2 = tape.reshape(m, &[h * w, c_h])?;
    let qw = tape.matmul(q, w_q2)?;
    let mw = tape.matmul(m2, w_m)?;
    let mwt = tape.transpose(mw)?;
    let logits = tape.matmul(qw, mwt)?;
    let b = tape.scaled_row_softmax(logits, libm::sqrt(c_h as f64))?;
    let x = tape.matmul(b, m2)?;
    Ok((b, x))
}

/// Row-stochastic word-graph adjacency `A = softmax((X W_x1)(X W_x2)ᵀ / √C_h)`.
pub fn build_adjacency(tape: &mut Tape, x: Var, w_x1: Var, w_x2: Var) -> Result<Var> {
    let scale = sqrt_channels(tape, x);
    let x1 = tape.matmul(x, w_x1)?;
    let x2 = tape.matmul(x, w_x2)?;
    let x2t = tape.transpose(x2)?;
    let logits = tape.matmul(x1, x2t)?;
    tape.scaled_row_softmax(logits, scale)
}

/// Masked graph convolution. Returns `(Z, A_t)` with `A_t = A ⊙ S` and `Z`
/// after `layers` applications of `Z ← (A_t + I) Z W_z[l]`, starting at `X`.
pub fn propagate(
    tape: &mut Tape,
    x: Var,
    a: Var,
    s: Var,
    w_z: &[Var],
    layers: usize,
) -> Result<(Var, Var)> {
    if layers > w_z.len() {
        return Err(Error::Config(alloc::format!(
            "propagate asked for {layers} layers but only {} weight matrices exist",
            w_z.len()
        )));
    }
    let a_t = tape.mul(a, s)?;
    if layers == 0 {
        return Ok((x, a_t));
    }
    let route = tape.add_identity(a_t)?;
    let mut z = x;
    for &w in &w_z[..layers] {
        let mixed = tape.matmul(route, z)?;
        z = tape.matmul(mixed, w)?;
    }
    Ok((z, a_t))
}

/// `Z̃ = Bᵀ Z` reshaped to `[H×W×C_h]`.
pub fn distribute(tape: &mut Tape, b: Var, z: Var, h: usize, w: usize) -> Result<Var> {
    if tape.shape(b)[1] != h * w {
        return Err(Error::dim("distribute", tape.shape(b), &[h, w]));
    }
    let bt = tape.transpose(b)?;
    let zt = tape.matmul(bt, z)?;
    let c = tape.value(zt).last_dim();
    tape.reshape(zt, &[h, w, c])
}

/// 1×1 convolution over `[V, Z̃, L̂, P]`, where `L̂` tiles the sentence
/// feature over the grid.
pub fn output_project(
    tape: &mut Tape,
    v: Var,
    z_tilde: Var,
    sentence: Var,
    coord: Var,
    w_out: Var,
    b_out: Var,
) -> Result<Var> {
    let (h, w) = (tape.shape(v)[0], tape.shape(v)[1]);
    let c_l = tape.value(sentence).numel();
    let tiled = tape.tile_rows(sentence, h * w)?;
    let tiled = tape.reshape(tiled, &[h, w, c_l])?;
    let cat = tape.concat_channels(&[v, z_tilde, tiled, coord])?;
    tape.conv2d_same(cat, w_out, b_out)
}

/// One level of the module: fuse, gather, adjacency, propagate, distribute,
/// project.
#[allow(clippy::too_many_arguments)]
pub fn lscm_level(
    tape: &mut Tape,
    v: Var,
    q: Var,
    sentence: Var,
    coord: Var,
    s: Var,
    p: &LevelParams,
    layers: usize,
) -> Result<LevelOutput> {
    let (h, w) = (tape.shape(v)[0], tape.shape(v)[1]);
    let m = mutan_fuse(tape, v, sentence, coord, &p.w_v, &p.w_l)?;
    let (b, x) = gather(tape, q, m, p.w_q2, p.w_m)?;
    let a = build_adjacency(tape, x, p.w_x1, p.w_x2)?;
    let (z, a_t) = propagate(tape, x, a, s, &p.w_z, layers)?;
    let z_tilde = distribute(tape, b, z, h, w)?;
    let y = output_project(tape, v, z_tilde, sentence, coord, p.w_out, p.b_out)?;
    Ok(LevelOutput {
        m,
        b,
        x,
        a,
        a_t,
        z,
        z_tilde,
        y,
    })
}

/// Runs every level. `levels[i]` is `[H×W×C_v]` and all levels share `H, W`;
/// `q: [T×C_l]` with `T` equal to the tree size.
pub fn lscm_forward(
    tape: &mut Tape,
    levels: &[Var],
    q: Var,
    tree: &DependencyTree,
    alpha: f64,
    params: &[LevelParams],
    depth: Depth,
) -> Result<LscmOutput> {
    if levels.len() != params.len() || levels.is_empty() {
        return Err(Error::Config(alloc::format!(
            "{} visual levels but {} parameter sets",
            levels.len(),
            params.len()
        )));
    }
    let t = tape.shape(q)[0];
    if t != tree.len() {
        return Err(Error::dim("lscm_forward", tape.shape(q), &[tree.len()]));
    }
    let grid = tape.shape(levels[0])[..2].to_vec();
    for &v in levels {
        if tape.shape(v).len() != 3 || tape.shape(v)[..2] != grid[..] {
            return Err(Error::dim("lscm_forward", &grid, tape.shape(v)));
        }
    }
    let sentence = tape.max_pool_over_rows(q)?;
    let coord = tape.constant(coord_feature(grid[0], grid[1]));
    let s = tape.constant(tree_mask(tree, alpha)?.s);
    let layers = depth.layers_for(tree);
    let levels = levels
        .iter()
        .zip(params)
        .map(|(&v, p)| lscm_level(tape, v, q, sentence, coord, s, p, layers))
        .collect::<Result<Vec<_>>>()?;
    Ok(LscmOutput { sentence, levels })
}
