//! The full referring-segmentation network.
//!
//! image ──conv stack──► V2..V5 ─┐
//! words ──embed─►LSTM─► Q ──────┼─► LSCM per level ─► Y2..Y5 ─► ConvLSTM ─► head ─► logits
//! tree ──► tree mask S ─────────┘

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::fusion::{dual_path_fuse, predict_mask, ConvLstmParams, HeadParams};
use crate::lscm::{lscm_forward, Depth, LevelParams, LscmOutput, COORD_CHANNELS};
use crate::params::{Bound, ParamStore};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::text::{embed, lstm_encode, DependencyTree, LstmParams, MAX_TOKENS};

/// Visual levels, named after the backbone stages they stand in for.
pub const LEVELS: [usize; 4] = [2, 3, 4, 5];

/// Spatial downsampling between the image and the feature grid.
pub const GRID_STRIDE: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub image_size: usize,
    pub c_v: usize,
    pub c_l: usize,
    pub c_h: usize,
    pub c_o: usize,
    pub c_s: usize,
    pub c_e: usize,
    pub vocab_size: usize,
    pub mutan_rank: usize,
    pub alpha: f64,
    pub depth: Depth,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            image_size: 32,
            c_v: 32,
            c_l: 32,
            c_h: 32,
            c_o: 16,
            c_s: 16,
            c_e: 50,
            vocab_size: 1,
            mutan_rank: 4,
            alpha: 0.1,
            depth: Depth::Fixed(1),
        }
    }
}

impl ModelConfig {
    pub fn grid(&self) -> usize {
        self.image_size / GRID_STRIDE
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("c_v", self.c_v),
            ("c_l", self.c_l),
            ("c_h", self.c_h),
            ("c_o", self.c_o),
            ("c_s", self.c_s),
            ("c_e", self.c_e),
            ("vocab_size", self.vocab_size),
            ("mutan_rank", self.mutan_rank),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.image_size == 0 || self.image_size % GRID_STRIDE != 0 {
            return Err(Error::Config(format!(
                "image size must be a positive multiple of {GRID_STRIDE}, got {}",
                self.image_size
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Graph-convolution weight matrices allocated per level.
    pub fn gcn_layers(&self) -> usize {
        match self.depth {
            Depth::Fixed(n) => n,
            Depth::Adaptive => MAX_TOKENS - 1,
        }
    }

    fn lscm_out_inputs(&self) -> usize {
        self.c_v + self.c_h + self.c_l + COORD_CHANNELS
    }
}

fn conv_fans(k: usize, cin: usize, cout: usize) -> (usize, usize) {
    (k * k * cin, k * k * cout)
}

/// Parameters registered in a fixed order; names are stable and used by
/// checkpoints.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> Result<ParamStore> {
    cfg.validate()?;
    let mut rng = Rng::new(seed);
    let mut p = ParamStore::new();
    let mut glorot = |p: &mut ParamStore, name: String, shape: &[usize], fans: (usize, usize)| {
        p.insert(name, rng.glorot(shape, fans.0, fans.1))
    };

    glorot(
        &mut p,
        "embed.table".into(),
        &[cfg.vocab_size, cfg.c_e],
        (cfg.vocab_size, cfg.c_e),
    )?;
    glorot(
        &mut p,
        "lstm.w_x".into(),
        &[cfg.c_e, 4 * cfg.c_l],
        (cfg.c_e, 4 * cfg.c_l),
    )?;
    glorot(
        &mut p,
        "lstm.w_h".into(),
        &[cfg.c_l, 4 * cfg.c_l],
        (cfg.c_l, 4 * cfg.c_l),
    )?;
    p.insert("lstm.b", Tensor::zeros(&[4 * cfg.c_l]))?;

    let mut cin = 3;
    for stage in 1..=4 {
        glorot(
            &mut p,
            format!("cnn.conv{stage}.w"),
            &[3, 3, cin, cfg.c_v],
            conv_fans(3, cin, cfg.c_v),
        )?;
        p.insert(format!("cnn.conv{stage}.b"), Tensor::zeros(&[cfg.c_v]))?;
        cin = cfg.c_v;
    }

    for level in LEVELS {
        let pre = format!("lscm{level}");
        let fused_in = cfg.c_v + COORD_CHANNELS;
        for r in 0..cfg.mutan_rank {
            glorot(
                &mut p,
                format!("{pre}.w_v{r}"),
                &[fused_in, cfg.c_h],
                (fused_in, cfg.c_h),
            )?;
            glorot(
                &mut p,
                format!("{pre}.w_l{r}"),
                &[cfg.c_l, cfg.c_h],
                (cfg.c_l, cfg.c_h),
            )?;
        }
        glorot(
            &mut p,
            format!("{pre}.w_q2"),
            &[cfg.c_l, cfg.c_h],
            (cfg.c_l, cfg.c_h),
        )?;
        for name in ["w_m", "w_x1", "w_x2"] {
            glorot(
                &mut p,
                format!("{pre}.{name}"),
                &[cfg.c_h, cfg.c_h],
                (cfg.c_h, cfg.c_h),
            )?;
        }
        for l in 0..cfg.gcn_layers() {
            glorot(
                &mut p,
                format!("{pre}.w_z{l}"),
                &[cfg.c_h, cfg.c_h],
                (cfg.c_h, cfg.c_h),
            )?;
        }
        let cat = cfg.lscm_out_inputs();
        glorot(
            &mut p,
            format!("{pre}.w_out"),
            &[1, 1, cat, cfg.c_o],
            conv_fans(1, cat, cfg.c_o),
        )?;
        p.insert(format!("{pre}.b_out"), Tensor::zeros(&[cfg.c_o]))?;
    }

    let fuse_in = cfg.c_o + cfg.c_s;
    glorot(
        &mut p,
        "fuse.w".into(),
        &[3, 3, fuse_in, 4 * cfg.c_s],
        conv_fans(3, fuse_in, 4 * cfg.c_s),
    )?;
    p.insert("fuse.b", Tensor::zeros(&[4 * cfg.c_s]))?;
    glorot(
        &mut p,
        "head.w".into(),
        &[1, 1, cfg.c_s, 1],
        conv_fans(1, cfg.c_s, 1),
    )?;
    p.insert("head.b", Tensor::zeros(&[1]))?;
    Ok(p)
}

pub fn is_backbone_param(name: &str) -> bool {
    name.starts_with("cnn.")
}

/// Everything a forward pass leaves behind.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub visual: Vec<Var>,
    pub q: Var,
    pub lscm: LscmOutput,
    pub fused: Var,
    /// `[S×S×1]` at image resolution.
    pub logits: Var,
}

#[derive(Debug, Clone)]
pub struct Model {
    cfg: ModelConfig,
}

impl Model {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Model { cfg })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn level_params(&self, bound: &Bound, level: usize) -> LevelParams {
        let pre = format!("lscm{level}");
        let v = |name: &str| bound.var(&format!("{pre}.{name}"));
        LevelParams {
            w_v: (0..self.cfg.mutan_rank)
                .map(|r| v(&format!("w_v{r}")))
                .collect(),
            w_l: (0..self.cfg.mutan_rank)
                .map(|r| v(&format!("w_l{r}")))
                .collect(),
            w_q2: v("w_q2"),
            w_m: v("w_m"),
            w_x1: v("w_x1"),
            w_x2: v("w_x2"),
            w_z: (0..self.cfg.gcn_layers())
                .map(|l| v(&format!("w_z{l}")))
                .collect(),
            w_out: v("w_out"),
            b_out: v("b_out"),
        }
    }

    /// Four visual levels at grid resolution from an `[S×S×3]` image. Stage
    /// `k` has `k` conv layers behind it; earlier stages are average-pooled
    /// down to the grid.
    pub fn backbone(&self, tape: &mut Tape, bound: &Bound, image: Var) -> Result<Vec<Var>> {
        let s = self.cfg.image_size;
        if tape.shape(image) != [s, s, 3] {
            return Err(Error::dim("backbone", tape.shape(image), &[s, s, 3]));
        }
        let conv = |tape: &mut Tape, x: Var, stage: usize| -> Result<Var> {
            let w = bound.var(&format!("cnn.conv{stage}.w"));
            let b = bound.var(&format!("cnn.conv{stage}.b"));
            let y = tape.conv2d_same(x, w, b)?;
            Ok(tape.relu(y))
        };
        let x1 = conv(tape, image, 1)?;
        let v2 = tape.avg_pool(x1, 4)?;
        let p1 = tape.avg_pool(x1, 2)?;
        let x2 = conv(tape, p1, 2)?;
        let v3 = tape.avg_pool(x2, 2)?;
        let x3 = conv(tape, v3, 3)?;
        let x4 = conv(tape, x3, 4)?;
        Ok(alloc::vec![v2, v3, x3, x4])
    }

    /// Word features `Q: [T×C_l]`.
    pub fn encode_words(&self, tape: &mut Tape, bound: &Bound, ids: &[usize]) -> Result<Var> {
        let x = embed(tape, bound.var("embed.table"), ids)?;
        let p = LstmParams {
            w_x: bound.var("lstm.w_x"),
            w_h: bound.var("lstm.w_h"),
            b: bound.var("lstm.b"),
        };
        lstm_encode(tape, x, &p)
    }

    /// Runs everything after the backbone on precomputed visual levels.
    pub fn forward_from_features(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        visual: Vec<Var>,
        ids: &[usize],
        tree: &DependencyTree,
    ) -> Result<ForwardOutput> {
        if ids.len() != tree.len() {
            return Err(Error::Input(format!(
                "{} tokens but the parse covers {} words",
                ids.len(),
                tree.len()
            )));
        }
        let q = self.encode_words(tape, bound, ids)?;
        let params: Vec<LevelParams> = LEVELS
            .iter()
            .map(|&l| self.level_params(bound, l))
            .collect();
        let lscm = lscm_forward(
            tape,
            &visual,
            q,
            tree,
            self.cfg.alpha,
            &params,
            self.cfg.depth,
        )?;
        let ys: Vec<Var> = lscm.levels.iter().map(|l| l.y).collect();
        let fuse = ConvLstmParams {
            w: bound.var("fuse.w"),
            b: bound.var("fuse.b"),
        };
        let fused = dual_path_fuse(tape, &ys, &fuse)?;
        let head = HeadParams {
            w: bound.var("head.w"),
            b: bound.var("head.b"),
        };
        let logits = predict_mask(tape, fused, &head, GRID_STRIDE)?;
        Ok(ForwardOutput {
            visual,
            q,
            lscm,
            fused,
            logits,
        })
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        image: &Tensor,
        ids: &[usize],
        tree: &DependencyTree,
    ) -> Result<ForwardOutput> {
        let img = tape.constant(image.clone());
        let visual = self.backbone(tape, bound, img)?;
        self.forward_from_features(tape, bound, visual, ids, tree)
    }
}
