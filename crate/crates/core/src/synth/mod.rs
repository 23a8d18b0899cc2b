//! Procedural referring-segmentation benchmark: shape scenes, template
//! expressions with known parses, and the evaluation metrics.

mod expression;
mod mask;
mod metrics;
mod scene;

pub use expression::{gen_expression, Expression, Relation};
pub use mask::Mask;
pub use metrics::{evaluate, overall_iou, pr_at_x, sample_ious, EvalReport, PR_THRESHOLDS};
pub use scene::{
    gen_scene, Color, Difficulty, Object, Scene, Shape, IMAGE_SIZE, MAX_RETRIES, PATCH_MARGIN,
};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::text::{DependencyTree, TokenSequence, Vocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub seed: u64,
    pub difficulty: Difficulty,
    pub scene: Scene,
    pub target: usize,
    pub expression: Expression,
    pub tokens: TokenSequence,
    pub tree: DependencyTree,
    pub image: Tensor,
    pub mask: Mask,
}

/// Generates one sample. Scenes whose focus object has no unambiguous
/// description are redrawn, up to [`MAX_RETRIES`] times.
pub fn gen_sample(seed: u64, difficulty: Difficulty) -> Result<Sample> {
    let mut rng = Rng::new(seed);
    for _ in 0..MAX_RETRIES {
        let scene = gen_scene(&mut rng, difficulty)?;
        let target = scene.focus;
        let expression = match gen_expression(&scene, target, difficulty, &mut rng) {
            Ok(e) => e,
            Err(Error::Generation(_)) => continue,
            Err(e) => return Err(e),
        };
        return Ok(Sample {
            seed,
            difficulty,
            image: scene.render(),
            mask: scene.objects[target].mask(),
            tokens: expression.tokens(),
            tree: expression.tree(),
            target,
            expression,
            scene,
        });
    }
    Err(Error::Generation(format!(
        "no describable {difficulty} scene for seed {seed} after {MAX_RETRIES} attempts"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

/// Largest per-split sample count; indices must fit in 31 bits.
pub const MAX_SPLIT_LEN: usize = 1 << 31;

/// `(master << 32) | (split << 31) | k`: distinct for every (split, k) under
/// one master seed, so train and val never share a sample seed.
pub fn sample_seed(master: u64, split: Split, k: usize) -> u64 {
    assert!(
        k < MAX_SPLIT_LEN,
        "sample index {k} exceeds the split capacity"
    );
    let bit = match split {
        Split::Train => 0,
        Split::Val => 1,
    };
    (master << 32) | (bit << 31) | k as u64
}

/// Relative weights of the three difficulties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifficultyMix {
    pub simple: f64,
    pub attribute: f64,
    pub relation: f64,
}

impl DifficultyMix {
    pub fn only(d: Difficulty) -> Self {
        let mut m = DifficultyMix {
            simple: 0.0,
            attribute: 0.0,
            relation: 0.0,
        };
        match d {
            Difficulty::Simple => m.simple = 1.0,
            Difficulty::Attribute => m.attribute = 1.0,
            Difficulty::Relation => m.relation = 1.0,
        }
        m
    }

    pub fn uniform() -> Self {
        DifficultyMix {
            simple: 1.0,
            attribute: 1.0,
            relation: 1.0,
        }
    }

    /// Parses `simple:attribute:relation` weights, e.g. `1:1:2`, or a single
    /// difficulty name.
    pub fn parse(s: &str) -> Result<Self> {
        if let Ok(d) = Difficulty::parse(s) {
            return Ok(Self::only(d));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("bad difficulty mix `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let w: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let mix = DifficultyMix {
            simple: w[0],
            attribute: w[1],
            relation: w[2],
        };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.simple, self.attribute, self.relation];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(
                "difficulty weights must be non-negative and not all zero".into(),
            ));
        }
        Ok(())
    }

    /// Deterministic choice from a sample seed.
    pub fn pick(&self, seed: u64) -> Difficulty {
        let total = self.simple + self.attribute + self.relation;
        let u = Rng::new(crate::rng::derive_seed(seed, 0xD1FF)).uniform(0.0, total);
        if u < self.simple {
            Difficulty::Simple
        } else if u < self.simple + self.attribute || self.relation == 0.0 {
            Difficulty::Attribute
        } else {
            Difficulty::Relation
        }
    }
}

impl core::fmt::Display for DifficultyMix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}:{}:{}", self.simple, self.attribute, self.relation)
    }
}

pub fn gen_split(
    master: u64,
    split: Split,
    count: usize,
    mix: &DifficultyMix,
) -> Result<Vec<Sample>> {
    mix.validate()?;
    (0..count)
        .map(|k| {
            let seed = sample_seed(master, split, k);
            gen_sample(seed, mix.pick(seed))
        })
        .collect()
}

/// Every word the templates can produce, in a fixed order.
pub fn vocabulary() -> Vocabulary {
    let mut words: Vec<&str> = Vec::new();
    words.extend(Color::ALL.iter().map(|c| c.name()));
    words.extend(Shape::ALL.iter().map(|s| s.name()));
    words.extend(["on", "patch", "of"]);
    words.extend(Relation::ALL.iter().map(|r| r.name()));
    Vocabulary::from_words(words)
}
