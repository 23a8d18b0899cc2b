use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Longest expression the model accepts; longer inputs are truncated.
pub const MAX_TOKENS: usize = 20;

/// Lowercase, punctuation-free words, `1 ≤ len ≤ MAX_TOKENS`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Wraps already-normalized words, truncating to [`MAX_TOKENS`].
    pub fn from_words<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut tokens: Vec<String> = words.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::Input("empty expression".into()));
        }
        tokens.truncate(MAX_TOKENS);
        Ok(TokenSequence(tokens))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(t)?;
        }
        Ok(())
    }
}

pub fn tokenize(text: &str) -> Result<TokenSequence> {
    let words: Vec<String> = text
        .split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect();
    TokenSequence::from_words(words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    #[test]
    fn plain_and_normalized() {
        assert_eq!(tokenize("golden dog").unwrap().tokens(), &["golden", "dog"]);
        assert_eq!(
            tokenize("Golden, dog.").unwrap().tokens(),
            &["golden", "dog"]
        );
    }

    #[test]
    fn truncates_to_twenty() {
        let text: Vec<String> = (0..25).map(|i| format!("w{i}")).collect();
        let t = tokenize(&text.join(" ")).unwrap();
        assert_eq!(t.len(), 20);
        assert_eq!(t.tokens()[19], "w19");
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(tokenize("   "), Err(Error::Input(_))));
        assert!(matches!(tokenize(" , . "), Err(Error::Input(_))));
    }
}
