use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Binary `[H×W]` mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    h: usize,
    w: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn zeros(h: usize, w: usize) -> Self {
        Mask {
            h,
            w,
            bits: vec![false; h * w],
        }
    }

    pub fn from_bits(h: usize, w: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != h * w {
            return Err(Error::Input(alloc::format!(
                "mask of {h}x{w} needs {} values, got {}",
                h * w,
                bits.len()
            )));
        }
        Ok(Mask { h, w, bits })
    }

    /// Pixels with probability strictly above 0.5 are foreground.
    pub fn from_probs(probs: &Tensor) -> Result<Self> {
        let s = probs.shape();
        if s.len() < 2 || s[2..].iter().any(|&d| d != 1) {
            return Err(Error::Input(alloc::format!(
                "probabilities must be [H×W] or [H×W×1], got {s:?}"
            )));
        }
        Ok(Mask {
            h: s[0],
            w: s[1],
            bits: probs.data().iter().map(|&p| p > 0.5).collect(),
        })
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.bits[y * self.w + x]
    }

    pub fn set(&mut self, y: usize, x: usize, v: bool) {
        self.bits[y * self.w + x] = v;
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    /// Intersection and union pixel counts.
    pub fn overlap(&self, other: &Mask) -> Result<(u64, u64)> {
        if (self.h, self.w) != (other.h, other.w) {
            return Err(Error::dim(
                "mask_overlap",
                &[self.h, self.w],
                &[other.h, other.w],
            ));
        }
        let mut i = 0;
        let mut u = 0;
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            i += (a && b) as u64;
            u += (a || b) as u64;
        }
        Ok((i, u))
    }

    /// `[H×W×1]` tensor of 0.0 / 1.0.
    pub fn to_tensor(&self) -> Tensor {
        let data = self
            .bits
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect();
        Tensor::new(vec![self.h, self.w, 1], data).expect("extents match")
    }
}
