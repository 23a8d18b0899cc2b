//! Dataset directories and image-like files.
//!
//! A split directory holds one subdirectory per sample:
//! `image.csv` (H·W rows of `r,g,b`), `mask.pgm`, `expr.txt`,
//! `parse.conllu` and `meta.txt`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lscm_core::synth::{Mask, Sample};
use lscm_core::text::{
    parse_conllu, to_conllu, tokenize, DependencyTree, TokenSequence, Vocabulary,
};
use lscm_core::train::Example;
use lscm_core::Tensor;

use crate::error::{CliError, Result};

pub const IMAGE_FILE: &str = "image.csv";
pub const MASK_FILE: &str = "mask.pgm";
pub const EXPR_FILE: &str = "expr.txt";
pub const PARSE_FILE: &str = "parse.conllu";
pub const META_FILE: &str = "meta.txt";
pub const PROB_FILE: &str = "prob.csv";

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Binary (P5) 8-bit graymap.
pub fn encode_pgm(h: usize, w: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Reads a P5 graymap with maxval ≤ 255. Returns `(h, w, maxval, pixels)`.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<(usize, usize, u8, Vec<u8>)> {
    let bad = |msg: &str| CliError::format(path, msg);
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("bad PGM header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("only binary P5 graymaps are supported"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad PGM header number"));
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("PGM maxval must be in 1..=255"));
    }
    pos += 1; // single whitespace byte after maxval
    let pixels = bytes
        .get(pos..pos + h * w)
        .ok_or_else(|| bad("truncated PGM data"))?;
    Ok((h, w, maxval as u8, pixels.to_vec()))
}

pub fn write_mask(path: &Path, m: &Mask) -> Result<()> {
    let px: Vec<u8> = m.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write(path, encode_pgm(m.height(), m.width(), &px))
}

/// Pixels above half the maxval are foreground.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let (h, w, maxval, px) = decode_pgm(&bytes, path)?;
    let bits = px.iter().map(|&v| 2 * v as u32 > maxval as u32).collect();
    Ok(Mask::from_bits(h, w, bits)?)
}

/// Probabilities `[H×W(×1)]` as H lines of W comma-separated values.
pub fn prob_csv(probs: &Tensor) -> String {
    let (h, w) = (probs.shape()[0], probs.shape()[1]);
    let mut s = String::new();
    for y in 0..h {
        let row: Vec<String> = (0..w)
            .map(|x| probs.data()[y * w + x].to_string())
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Row values scaled by the row maximum into 0..=255.
pub fn heat_pgm(h: usize, w: usize, values: &[f64]) -> Vec<u8> {
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    let px: Vec<u8> = values
        .iter()
        .map(|&v| {
            if max > 0.0 {
                (v / max * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    encode_pgm(h, w, &px)
}

pub fn image_csv(image: &Tensor) -> String {
    let mut s = String::new();
    for px in image.data().chunks(3) {
        let _ = writeln!(s, "{},{},{}", px[0], px[1], px[2]);
    }
    s
}

/// Parses `image.csv` into a square `[S×S×3]` image.
pub fn parse_image_csv(text: &str, path: &Path) -> Result<Tensor> {
    let mut data = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != 3 {
            return Err(CliError::format(
                path,
                format!("line {}: expected 3 values", n + 1),
            ));
        }
        for v in vals {
            let x: f64 = v.trim().parse().map_err(|_| {
                CliError::format(path, format!("line {}: `{v}` is not a number", n + 1))
            })?;
            data.push(x);
        }
    }
    let pixels = data.len() / 3;
    let side = (pixels as f64).sqrt().round() as usize;
    if side == 0 || side * side != pixels {
        return Err(CliError::format(
            path,
            format!("{pixels} pixels do not form a square image"),
        ));
    }
    Ok(Tensor::new(vec![side, side, 3], data)?)
}

pub fn write_sample(dir: &Path, s: &Sample) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join(IMAGE_FILE), image_csv(&s.image))?;
    write_mask(&dir.join(MASK_FILE), &s.mask)?;
    write(&dir.join(EXPR_FILE), format!("{}\n", s.tokens))?;
    write(&dir.join(PARSE_FILE), to_conllu(s.tokens.tokens(), &s.tree))?;
    write(
        &dir.join(META_FILE),
        format!(
            "seed = {}\ndifficulty = {}\ntarget = {}\n",
            s.seed, s.difficulty, s.target
        ),
    )
}

/// A sample as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskSample {
    pub name: String,
    pub image: Tensor,
    pub tokens: TokenSequence,
    pub tree: DependencyTree,
    pub mask: Mask,
}

impl DiskSample {
    pub fn example(&self, vocab: &Vocabulary) -> Example {
        Example {
            image: self.image.clone(),
            ids: vocab.ids(&self.tokens),
            tree: self.tree.clone(),
            target: self.mask.to_tensor(),
        }
    }
}

pub fn read_sample(dir: &Path) -> Result<DiskSample> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let image_path = dir.join(IMAGE_FILE);
    let image = parse_image_csv(&read(&image_path)?, &image_path)?;
    let expr_path = dir.join(EXPR_FILE);
    let tokens =
        tokenize(&read(&expr_path)?).map_err(|e| CliError::format(&expr_path, e.to_string()))?;
    let parse_path = dir.join(PARSE_FILE);
    let tree = parse_conllu(&read(&parse_path)?)
        .map_err(|e| CliError::format(&parse_path, e.to_string()))?;
    if tree.len() != tokens.len() {
        return Err(CliError::format(
            &parse_path,
            format!("{} parse words for {} tokens", tree.len(), tokens.len()),
        ));
    }
    let mask = read_mask(&dir.join(MASK_FILE))?;
    Ok(DiskSample {
        name,
        image,
        tokens,
        tree,
        mask,
    })
}

/// Sample subdirectories in name order.
pub fn sample_dirs(split: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(split).map_err(|e| CliError::io(split, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(split, e))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no sample directories",
            split.display()
        )));
    }
    Ok(dirs)
}

/// `root/<split>` when it exists, otherwise `root` itself.
pub fn split_dir(root: &Path, split: &str) -> PathBuf {
    let sub = root.join(split);
    if sub.is_dir() {
        sub
    } else {
        root.to_path_buf()
    }
}

pub fn read_split(split: &Path) -> Result<Vec<DiskSample>> {
    sample_dirs(split)?.iter().map(|d| read_sample(d)).collect()
}

/// Sorted set of every token in the samples.
pub fn build_vocabulary(samples: &[DiskSample]) -> Vocabulary {
    let words: BTreeSet<&str> = samples.iter().flat_map(|s| s.tokens.iter()).collect();
    Vocabulary::from_words(words)
}

pub fn sample_name(k: usize) -> String {
    format!("{k:06}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use lscm_core::synth::{gen_sample, Difficulty};

    #[test]
    fn pgm_round_trip() {
        let m = Mask::from_bits(2, 3, vec![true, false, true, false, false, true]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        write_mask(&p, &m).unwrap();
        assert_eq!(read_mask(&p).unwrap(), m);
    }

    #[test]
    fn pgm_header_comments_and_errors() {
        let bytes = b"P5 # c\n2 1\n# x\n255\n\x00\xff";
        let (h, w, _, px) = decode_pgm(bytes, Path::new("x")).unwrap();
        assert_eq!((h, w, px), (1, 2, vec![0, 255]));
        assert!(decode_pgm(b"P2\n1 1\n255\n0", Path::new("x")).is_err());
        assert!(decode_pgm(b"P5\n4 4\n255\n\x00", Path::new("x")).is_err());
    }

    #[test]
    fn sample_round_trip() {
        let s = gen_sample(5, Difficulty::Relation).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("000000");
        write_sample(&d, &s).unwrap();
        let back = read_sample(&d).unwrap();
        assert!(back.image.bit_eq(&s.image));
        assert_eq!(back.tokens, s.tokens);
        assert_eq!(back.tree, s.tree);
        assert_eq!(back.mask, s.mask);
    }
}
