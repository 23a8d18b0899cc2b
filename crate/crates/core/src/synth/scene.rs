use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use super::mask::Mask;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const IMAGE_SIZE: usize = 32;
/// Border of a support patch around its object's box.
pub const PATCH_MARGIN: usize = 2;
pub const MAX_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Circle,
    Square,
    Triangle,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Circle, Shape::Square, Shape::Triangle];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Circle => "circle",
            Shape::Square => "square",
            Shape::Triangle => "triangle",
        }
    }

    fn random(rng: &mut Rng) -> Self {
        Self::ALL[rng.below(3) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Cyan,
    Magenta,
    White,
    Orange,
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Yellow,
        Color::Cyan,
        Color::Magenta,
        Color::White,
        Color::Orange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
            Color::Cyan => "cyan",
            Color::Magenta => "magenta",
            Color::White => "white",
            Color::Orange => "orange",
        }
    }

    pub fn rgb(self) -> [f64; 3] {
        match self {
            Color::Red => [0.9, 0.1, 0.1],
            Color::Green => [0.1, 0.8, 0.1],
            Color::Blue => [0.15, 0.25, 0.95],
            Color::Yellow => [0.95, 0.9, 0.1],
            Color::Cyan => [0.1, 0.85, 0.9],
            Color::Magenta => [0.85, 0.1, 0.85],
            Color::White => [0.95, 0.95, 0.95],
            Color::Orange => [0.95, 0.55, 0.1],
        }
    }

    fn random(rng: &mut Rng) -> Self {
        Self::ALL[rng.below(8) as usize]
    }

    fn random_except(rng: &mut Rng, not: Color) -> Self {
        loop {
            let c = Self::random(rng);
            if c != not {
                return c;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Difficulty {
    Simple,
    Attribute,
    Relation,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [
        Difficulty::Simple,
        Difficulty::Attribute,
        Difficulty::Relation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Simple => "simple",
            Difficulty::Attribute => "attribute",
            Difficulty::Relation => "relation",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown difficulty `{s}`")))
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One object: a shape drawn inside the square box at `(x0, y0)` with side
/// `size`, optionally resting on a patch `PATCH_MARGIN` pixels wider.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Object {
    pub shape: Shape,
    pub color: Color,
    pub x0: usize,
    pub y0: usize,
    pub size: usize,
    pub patch: Option<Color>,
}

impl Object {
    pub fn center(&self) -> (f64, f64) {
        let half = self.size as f64 / 2.0;
        (self.x0 as f64 + half, self.y0 as f64 + half)
    }

    /// Whether pixel `(x, y)` belongs to the shape, by its pixel center.
    pub fn covers(&self, x: usize, y: usize) -> bool {
        if x < self.x0 || y < self.y0 || x >= self.x0 + self.size || y >= self.y0 + self.size {
            return false;
        }
        let s = self.size as f64;
        let u = (x - self.x0) as f64 + 0.5;
        let v = (y - self.y0) as f64 + 0.5;
        match self.shape {
            Shape::Square => true,
            Shape::Circle => {
                let r = s / 2.0;
                (u - r) * (u - r) + (v - r) * (v - r) <= r * r
            }
            // apex at the top center, base along the bottom edge
            Shape::Triangle => libm::fabs(u - s / 2.0) <= v / 2.0,
        }
    }

    pub fn mask(&self) -> Mask {
        let mut m = Mask::zeros(IMAGE_SIZE, IMAGE_SIZE);
        for y in self.y0..self.y0 + self.size {
            for x in self.x0..self.x0 + self.size {
                if self.covers(x, y) {
                    m.set(y, x, true);
                }
            }
        }
        m
    }

    /// Box reserved in the scene: the object plus its patch border if any.
    fn footprint(&self) -> (usize, usize, usize, usize) {
        let m = if self.patch.is_some() {
            PATCH_MARGIN
        } else {
            0
        };
        (
            self.x0 - m,
            self.y0 - m,
            self.x0 + self.size + m,
            self.y0 + self.size + m,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub objects: Vec<Object>,
    /// Object the difficulty guarantee was built around; the usual target.
    pub focus: usize,
}

impl Scene {
    /// `[32×32×3]` in `[0, 1]`: dark background, patches, then objects.
    pub fn render(&self) -> Tensor {
        let mut img = Tensor::full(&[IMAGE_SIZE, IMAGE_SIZE, 3], 0.05);
        let data = img.data_mut();
        let mut paint = |x: usize, y: usize, rgb: [f64; 3]| {
            let o = (y * IMAGE_SIZE + x) * 3;
            data[o..o + 3].copy_from_slice(&rgb);
        };
        for obj in &self.objects {
            if let Some(pc) = obj.patch {
                let (x0, y0, x1, y1) = obj.footprint();
                for y in y0..y1 {
                    for x in x0..x1 {
                        paint(x, y, pc.rgb());
                    }
                }
            }
        }
        for obj in &self.objects {
            for y in obj.y0..obj.y0 + obj.size {
                for x in obj.x0..obj.x0 + obj.size {
                    if obj.covers(x, y) {
                        paint(x, y, obj.color.rgb());
                    }
                }
            }
        }
        img
    }

    pub fn masks(&self) -> Vec<Mask> {
        self.objects.iter().map(Object::mask).collect()
    }
}

fn size_range(n: usize) -> (i32, i32) {
    match n {
        0..=2 => (10, 14),
        3 => (9, 13),
        4 => (8, 12),
        _ => (8, 10),
    }
}

fn disjoint(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> bool {
    // one pixel of clearance between footprints
    a.2 < b.0 || b.2 < a.0 || a.3 < b.1 || b.3 < a.1
}

/// Places the given (shape, color, patch) specs without overlap.
fn place(rng: &mut Rng, specs: &[(Shape, Color, Option<Color>)]) -> Option<Vec<Object>> {
    let (lo, hi) = size_range(specs.len());
    let mut placed: Vec<Object> = Vec::with_capacity(specs.len());
    for &(shape, color, patch) in specs {
        let margin = if patch.is_some() { PATCH_MARGIN } else { 0 };
        let mut ok = false;
        for _ in 0..MAX_RETRIES {
            let size = rng.range_inclusive(lo, hi) as usize;
            let span = IMAGE_SIZE - size - 2 * margin;
            let x0 = margin + rng.range_inclusive(0, span as i32) as usize;
            let y0 = margin + rng.range_inclusive(0, span as i32) as usize;
            let obj = Object {
                shape,
                color,
                x0,
                y0,
                size,
                patch,
            };
            if placed
                .iter()
                .all(|p| disjoint(p.footprint(), obj.footprint()))
            {
                placed.push(obj);
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    Some(placed)
}

/// A random scene honoring the difficulty's distractor guarantee. The focus
/// object is drawn first; for `attribute` a same-shape, different-color
/// distractor follows, for `relation` a same-shape, same-color twin.
pub fn gen_scene(rng: &mut Rng, difficulty: Difficulty) -> Result<Scene> {
    for _ in 0..MAX_RETRIES {
        let n = match difficulty {
            Difficulty::Relation => rng.range_inclusive(3, 5),
            _ => rng.range_inclusive(2, 5),
        } as usize;
        let shape = Shape::random(rng);
        let color = Color::random(rng);
        let mut specs: Vec<(Shape, Color, Option<Color>)> = Vec::with_capacity(n);
        match difficulty {
            Difficulty::Simple => specs.push((shape, color, None)),
            Difficulty::Attribute => {
                specs.push((shape, color, None));
                specs.push((shape, Color::random_except(rng, color), None));
            }
            Difficulty::Relation => {
                let on_patch = rng.below(2) == 0;
                let patch = on_patch.then(|| Color::random_except(rng, color));
                let twin_patch = match patch {
                    Some(p) if rng.below(2) == 0 => Some(Color::random_except(rng, p)),
                    _ => None,
                };
                specs.push((shape, color, patch));
                specs.push((shape, color, twin_patch));
            }
        }
        while specs.len() < n {
            specs.push((Shape::random(rng), Color::random(rng), None));
        }
        if let Some(objects) = place(rng, &specs) {
            return Ok(Scene { objects, focus: 0 });
        }
    }
    Err(Error::Generation(format!(
        "could not place a {difficulty} scene after {MAX_RETRIES} attempts"
    )))
}
