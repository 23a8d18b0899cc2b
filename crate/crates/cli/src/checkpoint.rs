//! Binary checkpoints.
//!
//! ```text
//! "LSCM" | version u8 = 1
//! repeated: name_len u32 | name utf-8 | ndim u32 | dims u32 × ndim | f64 × numel
//! iteration u64
//! ```
//! All integers and floats are little-endian. Tensors run until exactly eight
//! bytes remain. Adam moments follow the parameters as ordinary tensors named
//! `adam.m.<param>` and `adam.v.<param>`.

use std::path::Path;

use lscm_core::optim::{Adam, AdamConfig};
use lscm_core::params::ParamStore;
use lscm_core::Tensor;

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"LSCM";
pub const VERSION: u8 = 1;
const M_PREFIX: &str = "adam.m.";
const V_PREFIX: &str = "adam.v.";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ParamStore,
    /// First and second Adam moments in parameter order.
    pub moments: Option<(Vec<Tensor>, Vec<Tensor>)>,
    pub iter: u64,
}

impl Checkpoint {
    pub fn from_training(params: &ParamStore, adam: &Adam, iter: u64) -> Self {
        Checkpoint {
            params: params.clone(),
            moments: Some((adam.m.clone(), adam.v.clone())),
            iter,
        }
    }

    /// Optimizer state to resume with; the Adam step count equals the
    /// iteration because every iteration makes one update.
    pub fn adam(&self, cfg: AdamConfig) -> Adam {
        let mut adam = Adam::new(&self.params, cfg);
        if let Some((m, v)) = &self.moments {
            adam.m = m.clone();
            adam.v = v.clone();
            adam.step = self.iter;
        }
        adam
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        for (name, t) in self.params.iter() {
            put_tensor(&mut out, name, t);
        }
        if let Some((m, v)) = &self.moments {
            for (prefix, moments) in [(M_PREFIX, m), (V_PREFIX, v)] {
                for (name, t) in self.params.names().iter().zip(moments) {
                    put_tensor(&mut out, &format!("{prefix}{name}"), t);
                }
            }
        }
        out.extend_from_slice(&self.iter.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(corrupt(0, "bad magic"));
        }
        let version = r.take(1, "version")?[0];
        if version != VERSION {
            return Err(corrupt(4, format!("unsupported version {version}")));
        }
        let mut params = ParamStore::new();
        let mut m = Vec::new();
        let mut v = Vec::new();
        while r.remaining() > 8 {
            let start = r.pos as u64;
            let (name, t) = r.tensor()?;
            let dup = |e: lscm_core::Error| corrupt(start, e.to_string());
            if let Some(p) = name.strip_prefix(M_PREFIX) {
                m.push((p.to_string(), t));
            } else if let Some(p) = name.strip_prefix(V_PREFIX) {
                v.push((p.to_string(), t));
            } else {
                if !m.is_empty() || !v.is_empty() {
                    return Err(corrupt(
                        start,
                        format!("parameter `{name}` after optimizer moments"),
                    ));
                }
                params.insert(name, t).map_err(dup)?;
            }
        }
        if r.remaining() != 8 {
            return Err(corrupt(
                r.pos as u64,
                "truncated before the iteration counter",
            ));
        }
        let iter = u64::from_le_bytes(r.take(8, "iteration")?.try_into().expect("8 bytes"));
        let moments = match (m.is_empty(), v.is_empty()) {
            (true, true) => None,
            _ => Some((align(&params, m, "first")?, align(&params, v, "second")?)),
        };
        Ok(Checkpoint {
            params,
            moments,
            iter,
        })
    }

    /// Writes through a temporary file and a rename, so a failed save never
    /// leaves a partial checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.encode()).map_err(|e| CliError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::decode(&bytes)
    }
}

fn corrupt(offset: u64, msg: impl Into<String>) -> CliError {
    CliError::CorruptCheckpoint {
        offset,
        msg: msg.into(),
    }
}

fn align(params: &ParamStore, moments: Vec<(String, Tensor)>, which: &str) -> Result<Vec<Tensor>> {
    let names: Vec<&String> = moments.iter().map(|(n, _)| n).collect();
    if names.len() != params.len() || names.iter().zip(params.names()).any(|(a, b)| *a != b) {
        return Err(corrupt(
            0,
            format!("{which} Adam moments do not match the parameter list"),
        ));
    }
    moments
        .into_iter()
        .zip(params.tensors())
        .map(|((name, t), p)| {
            if t.shape() != p.shape() {
                Err(corrupt(
                    0,
                    format!("{which} moment of `{name}` has the wrong shape"),
                ))
            } else {
                Ok(t)
            }
        })
        .collect()
}

fn put_tensor(out: &mut Vec<u8>, name: &str, t: &Tensor) {
    let u32_of = |n: usize| u32::try_from(n).expect("extent fits in u32");
    out.extend_from_slice(&u32_of(name.len()).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&u32_of(t.ndim()).to_le_bytes());
    for &d in t.shape() {
        out.extend_from_slice(&u32_of(d).to_le_bytes());
    }
    for &x in t.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(corrupt(
                self.pos as u64,
                format!("truncated while reading {what}"),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn tensor(&mut self) -> Result<(String, Tensor)> {
        let at = self.pos as u64;
        let len = self.u32("name length")?;
        let name = std::str::from_utf8(self.take(len, "name")?)
            .map_err(|_| corrupt(at + 4, "name is not UTF-8"))?
            .to_string();
        let ndim = self.u32("rank")?;
        let mut shape = Vec::with_capacity(ndim.min(8));
        let mut numel: usize = 1;
        for _ in 0..ndim {
            let d = self.u32("dimension")?;
            numel = numel
                .checked_mul(d)
                .ok_or_else(|| corrupt(self.pos as u64, "tensor size overflows"))?;
            shape.push(d);
        }
        let payload_at = self.pos as u64;
        let bytes = numel
            .checked_mul(8)
            .ok_or_else(|| corrupt(payload_at, "tensor size overflows"))?;
        let payload = self.take(bytes, "tensor payload")?;
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let t = Tensor::new(shape, data).map_err(|e| corrupt(payload_at, e.to_string()))?;
        Ok((name, t))
    }
}
