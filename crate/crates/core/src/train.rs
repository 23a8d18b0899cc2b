//! Training loop with a resumable, seed-determined sample order.

use alloc::format;
use alloc::vec::Vec;

use crate::autodiff::{sigmoid, Tape};
use crate::error::{Error, Result};
use crate::fusion::bce_loss;
use crate::model::{init_params, is_backbone_param, Model, ModelConfig};
use crate::optim::{poly_lr, Adam, AdamConfig};
use crate::params::ParamStore;
use crate::rng::{derive_seed, Rng};
use crate::synth::{evaluate, EvalReport, Mask, Sample};
use crate::tensor::Tensor;
use crate::text::{DependencyTree, Vocabulary};

const INIT_STREAM: u64 = 0x1417;
const ORDER_STREAM: u64 = 0x0DE5;

/// A sample reduced to what the network consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub image: Tensor,
    pub ids: Vec<usize>,
    pub tree: DependencyTree,
    /// `[S×S×1]` of 0.0 / 1.0.
    pub target: Tensor,
}

impl Example {
    pub fn from_sample(s: &Sample, vocab: &Vocabulary) -> Self {
        Example {
            image: s.image.clone(),
            ids: vocab.ids(&s.tokens),
            tree: s.tree.clone(),
            target: s.mask.to_tensor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub poly_power: f64,
    pub max_iters: u64,
    pub batch: usize,
    pub seed: u64,
    pub freeze_cnn: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 2e-3,
            weight_decay: 0.0,
            poly_power: 0.9,
            max_iters: 5000,
            batch: 4,
            seed: 7,
            freeze_cnn: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if !(self.poly_power.is_finite() && self.poly_power > 0.0) {
            return Err(Error::Config(format!(
                "poly power must be positive, got {}",
                self.poly_power
            )));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    /// Iteration that was just performed, counted from 0.
    pub iter: u64,
    pub lr: f64,
    pub loss: f64,
}

/// Index of the `global`-th draw: each epoch is a fresh permutation seeded
/// by `(seed, epoch)`, so the order never depends on RNG state.
pub fn sample_index(seed: u64, global: u64, n: usize) -> usize {
    let epoch = global / n as u64;
    epoch_order(seed, epoch, n)[(global % n as u64) as usize]
}

fn epoch_order(seed: u64, epoch: u64, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(derive_seed(derive_seed(seed, ORDER_STREAM), epoch)).shuffle(&mut order);
    order
}

#[derive(Debug, Clone)]
pub struct Trainer {
    model: Model,
    params: ParamStore,
    adam: Adam,
    iter: u64,
    cfg: TrainConfig,
    order: Option<(u64, Vec<usize>)>,
}

impl Trainer {
    /// Fresh parameters initialized from the training seed.
    pub fn new(model_cfg: ModelConfig, cfg: TrainConfig) -> Result<Self> {
        let params = init_params(&model_cfg, derive_seed(cfg.seed, INIT_STREAM))?;
        let adam = Adam::new(&params, Self::adam_config(&cfg));
        Self::from_state(model_cfg, cfg, params, adam, 0)
    }

    /// Resumes from saved parameters, optimizer moments and iteration.
    pub fn from_state(
        model_cfg: ModelConfig,
        cfg: TrainConfig,
        params: ParamStore,
        mut adam: Adam,
        iter: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let model = Model::new(model_cfg)?;
        let layout = init_params(model.config(), 0)?;
        if layout.names() != params.names() {
            return Err(Error::Config(
                "parameter names do not match the model configuration".into(),
            ));
        }
        for (name, t) in layout.iter() {
            let got = params.get(name).expect("names match");
            if got.shape() != t.shape() {
                return Err(Error::TensorShape {
                    name: name.into(),
                    expected: t.shape().to_vec(),
                    found: got.shape().to_vec(),
                });
            }
        }
        adam.cfg = Self::adam_config(&cfg);
        Ok(Trainer {
            model,
            params,
            adam,
            iter,
            cfg,
            order: None,
        })
    }

    fn adam_config(cfg: &TrainConfig) -> AdamConfig {
        AdamConfig {
            weight_decay: cfg.weight_decay,
            ..AdamConfig::default()
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn adam(&self) -> &Adam {
        &self.adam
    }

    pub fn iter(&self) -> u64 {
        self.iter
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    fn is_frozen(&self, name: &str) -> bool {
        self.cfg.freeze_cnn && is_backbone_param(name)
    }

    fn next_index(&mut self, global: u64, n: usize) -> usize {
        let epoch = global / n as u64;
        if self.order.as_ref().map(|(e, o)| (*e, o.len())) != Some((epoch, n)) {
            self.order = Some((epoch, epoch_order(self.cfg.seed, epoch, n)));
        }
        let (_, order) = self.order.as_ref().expect("just filled");
        order[(global % n as u64) as usize]
    }

    /// One optimizer step over a batch; gradients are averaged.
    pub fn step(&mut self, data: &[Example]) -> Result<StepLog> {
        if data.is_empty() {
            return Err(Error::Empty { op: "train_step" });
        }
        let lr = poly_lr(
            self.iter,
            self.cfg.max_iters,
            self.cfg.lr,
            self.cfg.poly_power,
        );
        let b = self.cfg.batch;
        let mut sum: Vec<Tensor> = self
            .params
            .tensors()
            .iter()
            .map(|t| Tensor::zeros(t.shape()))
            .collect();
        let mut loss_sum = 0.0;
        for j in 0..b {
            let idx = self.next_index(self.iter * b as u64 + j as u64, data.len());
            let ex = &data[idx];
            let mut tape = Tape::new();
            let bound = self.params.bind(&mut tape, |n| self.is_frozen(n));
            let out = self
                .model
                .forward(&mut tape, &bound, &ex.image, &ex.ids, &ex.tree)?;
            let loss = bce_loss(&mut tape, out.logits, &ex.target)?;
            loss_sum += tape.value(loss).item();
            tape.backward(loss)?;
            for (acc, g) in sum.iter_mut().zip(bound.grads(&tape)) {
                acc.add_assign(&g);
            }
        }
        let scale = 1.0 / b as f64;
        let grads: Vec<Option<Tensor>> = sum
            .into_iter()
            .zip(self.params.names())
            .map(|(g, name)| {
                (!self.is_frozen(name)).then(|| if b == 1 { g } else { g.map(|v| v * scale) })
            })
            .collect();
        let loss = loss_sum * scale;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("loss at iteration {}", self.iter)));
        }
        self.adam.update(&mut self.params, &grads, lr)?;
        let log = StepLog {
            iter: self.iter,
            lr,
            loss,
        };
        self.iter += 1;
        Ok(log)
    }

    /// Steps until `until` iterations (capped at `max_iters`) have run,
    /// calling `on_step` after each.
    pub fn run(
        &mut self,
        data: &[Example],
        until: u64,
        mut on_step: impl FnMut(&StepLog, &Trainer) -> Result<()>,
    ) -> Result<()> {
        let end = until.min(self.cfg.max_iters);
        while self.iter < end {
            let log = self.step(data)?;
            on_step(&log, self)?;
        }
        Ok(())
    }
}

/// Foreground probabilities `[S×S×1]`.
pub fn predict_probs(model: &Model, params: &ParamStore, ex: &Example) -> Result<Tensor> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, |_| true);
    let out = model.forward(&mut tape, &bound, &ex.image, &ex.ids, &ex.tree)?;
    Ok(tape.value(out.logits).map(sigmoid))
}

pub fn predict_masks(
    model: &Model,
    params: &ParamStore,
    examples: &[Example],
) -> Result<Vec<Mask>> {
    examples
        .iter()
        .map(|ex| Mask::from_probs(&predict_probs(model, params, ex)?))
        .collect()
}

pub fn evaluate_examples(
    model: &Model,
    params: &ParamStore,
    examples: &[Example],
) -> Result<EvalReport> {
    let preds = predict_masks(model, params, examples)?;
    let gts = examples
        .iter()
        .map(|ex| Mask::from_probs(&ex.target))
        .collect::<Result<Vec<_>>>()?;
    evaluate(&preds, &gts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lscm::Depth;
    use crate::synth::{gen_split, vocabulary, DifficultyMix, Split};

    fn tiny() -> ModelConfig {
        ModelConfig {
            c_v: 6,
            c_l: 6,
            c_h: 6,
            c_o: 6,
            c_s: 6,
            c_e: 6,
            vocab_size: vocabulary().len(),
            mutan_rank: 2,
            depth: Depth::Fixed(1),
            ..ModelConfig::default()
        }
    }

    fn data(n: usize) -> Vec<Example> {
        let vocab = vocabulary();
        gen_split(3, Split::Train, n, &DifficultyMix::uniform())
            .unwrap()
            .iter()
            .map(|s| Example::from_sample(s, &vocab))
            .collect()
    }

    #[test]
    fn order_is_a_permutation_per_epoch() {
        let mut seen: Vec<usize> = (0..7).map(|g| sample_index(5, g, 7)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn identical_runs_are_bitwise_equal() {
        let d = data(3);
        let cfg = TrainConfig {
            max_iters: 4,
            lr: 1e-3,
            ..TrainConfig::default()
        };
        let run = || {
            let mut t = Trainer::new(tiny(), cfg.clone()).unwrap();
            let mut losses = Vec::new();
            t.run(&d, 4, |l, _| {
                losses.push(l.loss.to_bits());
                Ok(())
            })
            .unwrap();
            (losses, t.params().clone())
        };
        let (la, pa) = run();
        let (lb, pb) = run();
        assert_eq!(la, lb);
        for (a, b) in pa.tensors().iter().zip(pb.tensors()) {
            assert!(a.bit_eq(b));
        }
    }

    #[test]
    fn frozen_backbone_does_not_move() {
        let d = data(2);
        let cfg = TrainConfig {
            max_iters: 2,
            lr: 1e-2,
            freeze_cnn: true,
            ..TrainConfig::default()
        };
        let mut t = Trainer::new(tiny(), cfg).unwrap();
        let before = t.params().get("cnn.conv1.w").unwrap().clone();
        let head_before = t.params().get("head.w").unwrap().clone();
        t.run(&d, 2, |_, _| Ok(())).unwrap();
        assert!(t.params().get("cnn.conv1.w").unwrap().bit_eq(&before));
        assert!(!t.params().get("head.w").unwrap().bit_eq(&head_before));
    }
}
