//! Expression side of the model: tokens, vocabulary, parse trees, the tree
//! mask that suppresses word-graph edges, and the LSTM word encoder.

mod conllu;
mod lstm;
mod tokenize;
mod tree;
mod vocab;

pub use conllu::{parse_conllu, parse_conllu_document, to_conllu, ConllSentence};
pub use lstm::{embed, lstm_encode, LstmParams};
pub use tokenize::{tokenize, TokenSequence, MAX_TOKENS};
pub use tree::{tree_mask, DependencyTree, TreeMask};
pub use vocab::{Vocabulary, UNKNOWN};
