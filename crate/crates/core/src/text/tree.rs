use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Head assignments over `T` words. `heads[t]` is the 1-based index of word
/// `t + 1`'s head, or 0 for the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyTree {
    heads: Vec<usize>,
}

/// A structural defect, located at a 0-based word index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TreeDefect {
    pub word: usize,
    pub msg: alloc::string::String,
}

pub(crate) fn validate_heads(heads: &[usize]) -> core::result::Result<(), TreeDefect> {
    let t = heads.len();
    if t == 0 {
        return Err(TreeDefect {
            word: 0,
            msg: "empty sentence".into(),
        });
    }
    for (i, &h) in heads.iter().enumerate() {
        if h > t {
            return Err(TreeDefect {
                word: i,
                msg: format!("head {h} out of range 0..={t}"),
            });
        }
        if h == i + 1 {
            return Err(TreeDefect {
                word: i,
                msg: "word is its own head".into(),
            });
        }
    }
    let roots: Vec<usize> = (0..t).filter(|&i| heads[i] == 0).collect();
    match roots.len() {
        0 => {}
        1 => {}
        _ => {
            return Err(TreeDefect {
                word: roots[1],
                msg: format!(
                    "multiple roots (words {} and {})",
                    roots[0] + 1,
                    roots[1] + 1
                ),
            })
        }
    }
    // Follow heads upward from every word; with T words, reaching the root
    // takes fewer than T steps unless there is a cycle.
    for start in 0..t {
        let mut cur = start;
        let mut steps = 0;
        while heads[cur] != 0 {
            cur = heads[cur] - 1;
            steps += 1;
            if steps > t {
                return Err(TreeDefect {
                    word: start,
                    msg: format!("cycle through word {}", start + 1),
                });
            }
        }
    }
    if roots.is_empty() {
        return Err(TreeDefect {
            word: 0,
            msg: "no root".into(),
        });
    }
    Ok(())
}

impl DependencyTree {
    pub fn new(heads: Vec<usize>) -> Result<Self> {
        validate_heads(&heads)
            .map_err(|d| Error::Input(format!("invalid tree at word {}: {}", d.word + 1, d.msg)))?;
        Ok(DependencyTree { heads })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    /// 1-based index of the root word.
    pub fn root(&self) -> usize {
        self.heads
            .iter()
            .position(|&h| h == 0)
            .expect("validated tree has a root")
            + 1
    }

    /// `C(j)`: 1-based indices of the children of 1-based word `j`.
    pub fn children(&self, j: usize) -> Vec<usize> {
        (1..=self.len())
            .filter(|&i| self.heads[i - 1] == j)
            .collect()
    }

    /// Whether `i` is a child of `j` or `j` a child of `i` (1-based).
    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.heads[i - 1] == j || self.heads[j - 1] == i
    }

    /// Uniformly shaped random tree over `t` words: each word in a shuffled
    /// order attaches to one that precedes it.
    pub fn random(rng: &mut Rng, t: usize) -> Self {
        assert!(t >= 1);
        let mut order: Vec<usize> = (0..t).collect();
        rng.shuffle(&mut order);
        let mut heads = vec![0; t];
        for k in 1..t {
            let parent = order[rng.below(k as u32) as usize];
            heads[order[k]] = parent + 1;
        }
        DependencyTree { heads }
    }

    /// Edge count on the longest root-to-leaf path; 0 for a single word.
    pub fn depth(&self) -> usize {
        (0..self.len())
            .map(|start| {
                let mut d = 0;
                let mut cur = start;
                while self.heads[cur] != 0 {
                    cur = self.heads[cur] - 1;
                    d += 1;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }
}

/// `S[i][j] = 1` on parent–child pairs (either direction), `alpha` elsewhere,
/// including the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeMask {
    pub s: Tensor,
    pub alpha: f64,
}

pub fn tree_mask(tree: &DependencyTree, alpha: f64) -> Result<TreeMask> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let t = tree.len();
    let mut data = vec![alpha; t * t];
    for (i, &h) in tree.heads().iter().enumerate() {
        if h != 0 {
            let j = h - 1;
            data[i * t + j] = 1.0;
            data[j * t + i] = 1.0;
        }
    }
    Ok(TreeMask {
        s: Tensor::new(vec![t, t], data)?,
        alpha,
    })
}
