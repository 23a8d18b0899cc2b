use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::scene::{Color, Difficulty, Object, Scene, Shape};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::text::{DependencyTree, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Left,
    Right,
    Above,
    Below,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::Left,
        Relation::Right,
        Relation::Above,
        Relation::Below,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Left => "left",
            Relation::Right => "right",
            Relation::Above => "above",
            Relation::Below => "below",
        }
    }

    /// Compares box centers; `a` is the described object, `b` the anchor.
    pub fn holds(self, a: &Object, b: &Object) -> bool {
        let (ax, ay) = a.center();
        let (bx, by) = b.center();
        match self {
            Relation::Left => ax < bx,
            Relation::Right => ax > bx,
            Relation::Above => ay < by,
            Relation::Below => ay > by,
        }
    }
}

/// The expression grammar, one variant per template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expression {
    /// `<color> <shape>`
    Attribute { color: Color, shape: Shape },
    /// `<color> <shape> on <color> patch`
    OnPatch {
        color: Color,
        shape: Shape,
        patch: Color,
    },
    /// `<shape> <relation> of <color> <shape>`
    Spatial {
        shape: Shape,
        relation: Relation,
        color: Color,
        anchor: Shape,
    },
}

impl Expression {
    pub fn words(&self) -> Vec<&'static str> {
        match *self {
            Expression::Attribute { color, shape } => vec![color.name(), shape.name()],
            Expression::OnPatch {
                color,
                shape,
                patch,
            } => {
                vec![color.name(), shape.name(), "on", patch.name(), "patch"]
            }
            Expression::Spatial {
                shape,
                relation,
                color,
                anchor,
            } => {
                vec![
                    shape.name(),
                    relation.name(),
                    "of",
                    color.name(),
                    anchor.name(),
                ]
            }
        }
    }

    /// Fixed per-template parse: modifiers attach to their noun, the
    /// preposition to the head noun, its object to the preposition.
    pub fn heads(&self) -> Vec<usize> {
        match self {
            Expression::Attribute { .. } => vec![2, 0],
            Expression::OnPatch { .. } => vec![2, 0, 2, 5, 3],
            Expression::Spatial { .. } => vec![0, 1, 2, 5, 3],
        }
    }

    pub fn tokens(&self) -> TokenSequence {
        TokenSequence::from_words(self.words()).expect("templates are non-empty")
    }

    pub fn tree(&self) -> DependencyTree {
        DependencyTree::new(self.heads()).expect("template parses are trees")
    }

    /// Whether object `i` of `scene` satisfies the description.
    pub fn describes(&self, scene: &Scene, i: usize) -> bool {
        let o = &scene.objects[i];
        match *self {
            Expression::Attribute { color, shape } => o.color == color && o.shape == shape,
            Expression::OnPatch {
                color,
                shape,
                patch,
            } => o.color == color && o.shape == shape && o.patch == Some(patch),
            Expression::Spatial {
                shape,
                relation,
                color,
                anchor,
            } => {
                o.shape == shape
                    && scene.objects.iter().enumerate().any(|(j, a)| {
                        j != i && a.color == color && a.shape == anchor && relation.holds(o, a)
                    })
            }
        }
    }

    /// Every object the expression describes, by exhaustive search.
    pub fn referents(&self, scene: &Scene) -> Vec<usize> {
        (0..scene.objects.len())
            .filter(|&i| self.describes(scene, i))
            .collect()
    }
}

/// Candidate descriptions of `target` allowed at this difficulty, in a
/// fixed order before shuffling.
fn candidates(scene: &Scene, target: usize, difficulty: Difficulty) -> Vec<Expression> {
    let o = scene.objects[target];
    let mut out = Vec::new();
    match difficulty {
        Difficulty::Simple | Difficulty::Attribute => {
            out.push(Expression::Attribute {
                color: o.color,
                shape: o.shape,
            });
        }
        Difficulty::Relation => {
            if let Some(patch) = o.patch {
                out.push(Expression::OnPatch {
                    color: o.color,
                    shape: o.shape,
                    patch,
                });
            }
            for (j, a) in scene.objects.iter().enumerate() {
                if j == target {
                    continue;
                }
                for relation in Relation::ALL {
                    if relation.holds(&o, a) {
                        out.push(Expression::Spatial {
                            shape: o.shape,
                            relation,
                            color: a.color,
                            anchor: a.shape,
                        });
                    }
                }
            }
        }
    }
    out
}

/// A description that singles out `target`, drawn at random among the
/// unambiguous candidates of the difficulty's templates.
pub fn gen_expression(
    scene: &Scene,
    target: usize,
    difficulty: Difficulty,
    rng: &mut Rng,
) -> Result<Expression> {
    if target >= scene.objects.len() {
        return Err(Error::Generation(format!(
            "target {target} out of range for {} objects",
            scene.objects.len()
        )));
    }
    let unique: Vec<Expression> = candidates(scene, target, difficulty)
        .into_iter()
        .filter(|e| e.referents(scene) == [target])
        .collect();
    // pick the template first so the single patch description is not
    // drowned out by the many spatial ones
    let (spatial, other): (Vec<Expression>, Vec<Expression>) = unique
        .into_iter()
        .partition(|e| matches!(e, Expression::Spatial { .. }));
    let groups: Vec<Vec<Expression>> = [other, spatial]
        .into_iter()
        .filter(|g| !g.is_empty())
        .collect();
    if groups.is_empty() {
        return Err(Error::Generation(format!(
            "object {target} has no unambiguous {difficulty} description"
        )));
    }
    let group = &groups[rng.below(groups.len() as u32) as usize];
    Ok(group[rng.below(group.len() as u32) as usize])
}
