//! Reader and writer for the CoNLL-U subset the pipeline consumes.
//!
//! Accepted token lines carry at least `ID FORM HEAD`. Lines with the full ten
//! CoNLL-U columns take HEAD from column 7; shorter lines take it from column
//! 3. Columns are tab separated; lines without tabs are split on whitespace.
//! `#` comments, multiword ranges (`1-2`) and empty nodes (`1.1`) are skipped.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::tree::{validate_heads, DependencyTree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllSentence {
    pub forms: Vec<String>,
    pub tree: DependencyTree,
}

struct Pending {
    forms: Vec<String>,
    heads: Vec<usize>,
    lines: Vec<usize>,
}

impl Pending {
    fn new() -> Self {
        Pending {
            forms: Vec::new(),
            heads: Vec::new(),
            lines: Vec::new(),
        }
    }

    fn finish(self) -> Result<ConllSentence> {
        validate_heads(&self.heads).map_err(|d| Error::Parse {
            line: self.lines[d.word.min(self.lines.len() - 1)],
            msg: d.msg,
        })?;
        Ok(ConllSentence {
            forms: self.forms,
            tree: DependencyTree::new(self.heads)?,
        })
    }
}

/// Parses every sentence in a document (blank-line separated).
pub fn parse_conllu_document(text: &str) -> Result<Vec<ConllSentence>> {
    let mut out = Vec::new();
    let mut cur = Pending::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !cur.forms.is_empty() {
                out.push(core::mem::replace(&mut cur, Pending::new()).finish()?);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else {
            line.split_whitespace().collect()
        };
        if cols.len() < 3 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!(
                    "expected at least 3 columns (ID FORM HEAD), found {}",
                    cols.len()
                ),
            });
        }
        let id = cols[0].trim();
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let id: usize = id.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad token id `{id}`"),
        })?;
        if id != cur.forms.len() + 1 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected id {}, found {id}", cur.forms.len() + 1),
            });
        }
        let head_col = if cols.len() >= 10 { cols[6] } else { cols[2] };
        let head: usize = head_col.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad head `{head_col}`"),
        })?;
        cur.forms.push(cols[1].trim().to_string());
        cur.heads.push(head);
        cur.lines.push(line_no);
    }
    if !cur.forms.is_empty() {
        out.push(cur.finish()?);
    }
    Ok(out)
}

/// Parses exactly one sentence.
pub fn parse_conllu(text: &str) -> Result<DependencyTree> {
    let mut sentences = parse_conllu_document(text)?;
    match sentences.len() {
        1 => Ok(sentences.pop().unwrap().tree),
        0 => Err(Error::Parse {
            line: 1,
            msg: "no tokens".into(),
        }),
        n => Err(Error::Parse {
            line: 1,
            msg: format!("expected one sentence, found {n}"),
        }),
    }
}

/// Writes `ID<TAB>FORM<TAB>HEAD` lines followed by a blank line.
pub fn to_conllu(forms: &[String], tree: &DependencyTree) -> String {
    assert_eq!(forms.len(), tree.len(), "one form per tree node");
    let mut s = String::new();
    for (i, (form, head)) in forms.iter().zip(tree.heads()).enumerate() {
        let _ = writeln!(s, "{}\t{}\t{}", i + 1, form, head);
    }
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_root() {
        let t = parse_conllu("1\tdog\t0\n").unwrap();
        assert_eq!(t.heads(), &[0]);
        assert_eq!(t.root(), 1);
        // whitespace-separated variant
        assert_eq!(parse_conllu("1 dog 0").unwrap().heads(), &[0]);
    }

    #[test]
    fn single_edge() {
        let t = parse_conllu("1\tgolden\t2\n2\tdog\t0\n").unwrap();
        assert_eq!(t.children(2), vec![1]);
    }

    #[test]
    fn malformed_inputs_report_lines() {
        match parse_conllu("1\ta\t2\n2\tb\t1\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("cycle"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        match parse_conllu("1\ta\t0\n2\tb\t0\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("multiple roots"));
            }
            other => panic!("{other:?}"),
        }
        match parse_conllu("1\ta\t0\n3\tb\t1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_conllu("# c\n1\ta\t0\n2\tb\t7\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("out of range"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_ten_column_lines_use_head_column() {
        let doc = "# text = red circle\n1\tred\tred\tADJ\t_\t_\t2\tamod\t_\t_\n2\tcircle\tcircle\tNOUN\t_\t_\t0\troot\t_\t_\n";
        assert_eq!(parse_conllu(doc).unwrap().heads(), &[2, 0]);
    }

    #[test]
    fn document_with_several_sentences() {
        let doc = "1\ta\t0\n\n1\tb\t2\n2\tc\t0\n\n";
        let s = parse_conllu_document(doc).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].forms, vec!["b".to_string(), "c".to_string()]);
        assert!(parse_conllu(doc).is_err());
    }

    proptest::proptest! {
        #[test]
        fn serialization_round_trips_heads(tree in crate::text::tree::tests::random_tree()) {
            let forms: Vec<String> = (0..tree.len()).map(|i| format!("w{i}")).collect();
            let text = to_conllu(&forms, &tree);
            let back = parse_conllu_document(&text).unwrap();
            proptest::prop_assert_eq!(back.len(), 1);
            proptest::prop_assert_eq!(&back[0].tree, &tree);
            proptest::prop_assert_eq!(&back[0].forms, &forms);
        }
    }
}
