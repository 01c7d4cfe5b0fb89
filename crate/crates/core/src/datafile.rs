//! Plain-text data files: one token per line, `#` starts a comment.

use std::collections::BTreeSet;

use thiserror::Error;

const NORETURN: &str = include_str!("../data/noreturn.txt");
const SCAFFOLD: &str = include_str!("../data/scaffold.txt");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DataFileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// Non-empty lines with comments removed, paired with 1-based line numbers.
pub fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Whitespace-separated hex bytes, e.g. `"66 2e"`.
pub fn parse_hex_bytes(s: &str) -> Result<Vec<u8>, String> {
    s.split_whitespace()
        .map(|tok| {
            if tok.len() != 2 {
                return Err(format!("expected a two-digit hex byte, got {tok:?}"));
            }
            u8::from_str_radix(tok, 16).map_err(|_| format!("bad hex byte {tok:?}"))
        })
        .collect()
}

/// A list of names, one per line.
pub fn parse_names(text: &str) -> Result<BTreeSet<String>, DataFileError> {
    lines(text)
        .map(|(line, l)| {
            if l.split_whitespace().count() != 1 {
                return Err(DataFileError::Syntax { line, msg: format!("expected one name, got {l:?}") });
            }
            Ok(l.to_string())
        })
        .collect()
}

pub fn default_noreturn_seeds() -> BTreeSet<String> {
    parse_names(NORETURN).expect("built-in noreturn list parses")
}

pub fn default_scaffold_names() -> BTreeSet<String> {
    parse_names(SCAFFOLD).expect("built-in scaffold list parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks() {
        let got: Vec<_> = lines("# head\n\n abort # trailing\nexit\n").collect();
        assert_eq!(got, vec![(3, "abort"), (4, "exit")]);
    }

    #[test]
    fn hex_bytes() {
        assert_eq!(parse_hex_bytes("66 2e"), Ok(vec![0x66, 0x2e]));
        assert_eq!(parse_hex_bytes(""), Ok(vec![]));
        assert!(parse_hex_bytes("6").is_err());
        assert!(parse_hex_bytes("0x90").is_err());
    }

    #[test]
    fn builtin_lists() {
        let seeds = default_noreturn_seeds();
        for name in ["abort", "exit", "_exit", "__stack_chk_fail", "__assert_fail", "longjmp"] {
            assert!(seeds.contains(name), "{name}");
        }
        let scaffold = default_scaffold_names();
        for name in ["_start", "_init", "_fini", "frame_dummy", "__do_global_dtors_aux"] {
            assert!(scaffold.contains(name), "{name}");
        }
        assert!(parse_names("two words\n").is_err());
    }
}
