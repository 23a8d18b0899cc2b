use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::TokenSequence;

pub const UNKNOWN: &str = "<unk>";

/// Word→row map for the embedding table. Row 0 is reserved for unknown words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from words in first-seen order; duplicates are
    /// ignored.
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Vocabulary {
            words: alloc::vec![UNKNOWN.to_string()],
            index: BTreeMap::new(),
        };
        for w in words {
            if w != UNKNOWN && !v.index.contains_key(w) {
                v.index.insert(w.to_string(), v.words.len());
                v.words.push(w.to_string());
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(0)
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn ids(&self, tokens: &TokenSequence) -> Vec<usize> {
        tokens.iter().map(|w| self.id(w)).collect()
    }

    /// One word per line, line `i` holding row `i`.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for w in &self.words {
            s.push_str(w);
            s.push('\n');
        }
        s
    }

    pub fn from_lines(text: &str) -> Self {
        Self::from_words(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }
}
