//! Padding alphabets and trailing-padding trimming.

use thiserror::Error;

use crate::datafile::{self, DataFileError};
use crate::model::{Addr, BinaryImage, Machine};

const X86_PADDING: &str = include_str!("../../data/padding-x86.txt");
const MAX_PREFIXES: usize = 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PadToken {
    /// A literal byte sequence.
    Bytes(Vec<u8>),
    /// Opcode bytes followed by a ModRM operand whose reg field is 0,
    /// optionally preceded by any number of the alphabet's prefix bytes.
    ModrmNop(Vec<u8>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PaddingAlphabet {
    tokens: Vec<PadToken>,
    prefixes: Vec<u8>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrimError {
    #[error("function bytes {start:#x}..{end:#x} are not file-backed")]
    NoBytes { start: Addr, end: Addr },
}

impl PaddingAlphabet {
    /// An alphabet that matches nothing; trimming is the identity.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn x86() -> Self {
        Self::parse(X86_PADDING).expect("built-in x86 padding alphabet parses")
    }

    pub fn for_machine(machine: Machine) -> Self {
        if machine.is_x86() {
            Self::x86()
        } else {
            Self::empty()
        }
    }

    pub fn parse(text: &str) -> Result<Self, DataFileError> {
        let mut out = PaddingAlphabet::default();
        for (line_no, line) in datafile::lines(text) {
            let hex = |s: &str| {
                datafile::parse_hex_bytes(s).map_err(|msg| DataFileError::Syntax { line: line_no, msg })
            };
            if let Some(rest) = line.strip_prefix("prefix") {
                out.prefixes.extend(hex(rest)?);
            } else if let Some(opcode) = line.strip_suffix("/m") {
                let opcode = hex(opcode)?;
                if opcode.is_empty() {
                    return Err(DataFileError::Syntax { line: line_no, msg: "empty opcode".into() });
                }
                out.tokens.push(PadToken::ModrmNop(opcode));
            } else {
                out.tokens.push(PadToken::Bytes(hex(line)?));
            }
        }
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Lengths of every token that matches at the start of `bytes`.
    fn matches<'a>(&'a self, bytes: &'a [u8]) -> impl Iterator<Item = usize> + 'a {
        self.tokens.iter().filter_map(move |t| match t {
            PadToken::Bytes(b) => (!b.is_empty() && bytes.starts_with(b)).then_some(b.len()),
            PadToken::ModrmNop(op) => {
                let prefixes = bytes
                    .iter()
                    .take(MAX_PREFIXES)
                    .take_while(|b| self.prefixes.contains(b))
                    .count();
                // Try every prefix count, longest first, so a prefix byte that
                // is also a literal token is still accepted here.
                (0..=prefixes).rev().find_map(|p| {
                    let rest = &bytes[p..];
                    if !rest.starts_with(op) {
                        return None;
                    }
                    modrm_len(&rest[op.len()..]).map(|m| p + op.len() + m)
                })
            }
        })
    }

    /// Offset of the shortest suffix of `bytes`, starting at or after `floor`,
    /// that is made up entirely of padding tokens.
    pub fn padding_suffix_start(&self, bytes: &[u8], floor: usize) -> usize {
        let n = bytes.len();
        if self.is_empty() || floor >= n {
            return n.max(floor.min(n));
        }
        let mut tail = vec![false; n + 1];
        tail[n] = true;
        for i in (floor..n).rev() {
            tail[i] = self.matches(&bytes[i..]).any(|len| tail[i + len]);
        }
        (floor..=n).find(|&i| tail[i]).unwrap_or(n)
    }

    /// True when `bytes` decomposes entirely into padding tokens.
    pub fn is_all_padding(&self, bytes: &[u8]) -> bool {
        self.padding_suffix_start(bytes, 0) == 0
    }
}

/// Length of a ModRM operand (ModRM, SIB, displacement) with 32/64-bit
/// addressing, or `None` if truncated or the reg field is not 0.
fn modrm_len(bytes: &[u8]) -> Option<usize> {
    let modrm = *bytes.first()?;
    let md = modrm >> 6;
    let reg = (modrm >> 3) & 7;
    let rm = modrm & 7;
    if reg != 0 {
        return None;
    }
    let mut len = 1;
    if md == 3 {
        return Some(len);
    }
    let mut disp = match md {
        1 => 1,
        2 => 4,
        _ => 0,
    };
    if rm == 4 {
        let sib = *bytes.get(1)?;
        len += 1;
        if md == 0 && sib & 7 == 5 {
            disp = 4;
        }
    } else if md == 0 && rm == 5 {
        disp = 4;
    }
    len += disp;
    (bytes.len() >= len).then_some(len)
}

/// Trimmed end of `[start, end_raw)`: trailing padding is removed, but never
/// the byte at any entry point and never down to zero length.
pub fn trim_padding(
    start: Addr,
    end_raw: Addr,
    entry_points: &[Addr],
    image: &BinaryImage,
    alphabet: &PaddingAlphabet,
) -> Result<Addr, TrimError> {
    let len = end_raw.saturating_sub(start);
    let bytes = image
        .bytes_at(start, len)
        .ok_or(TrimError::NoBytes { start, end: end_raw })?;
    let last_entry = entry_points.iter().copied().max().unwrap_or(start).max(start);
    let floor = (last_entry - start + 1).min(len) as usize;
    let cut = alphabet.padding_suffix_start(bytes, floor);
    Ok(start + cut as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight-line oracle: repeatedly drop a trailing single-byte pad or a
    /// trailing multi-byte nop from a fixed list.
    fn oracle_trim(bytes: &[u8], floor: usize) -> usize {
        const NOPS: &[&[u8]] = &[
            &[0x0f, 0x1f, 0x00],
            &[0x0f, 0x1f, 0x40, 0x00],
            &[0x0f, 0x1f, 0x44, 0x00, 0x00],
            &[0x66, 0x0f, 0x1f, 0x44, 0x00, 0x00],
            &[0x0f, 0x1f, 0x80, 0, 0, 0, 0],
            &[0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
            &[0x66, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
            &[0x66, 0x2e, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
            &[0x66, 0x66, 0x2e, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
        ];
        let mut end = bytes.len();
        'outer: while end > floor {
            for nop in NOPS.iter().rev() {
                if end >= floor + nop.len() && bytes[..end].ends_with(nop) {
                    end -= nop.len();
                    continue 'outer;
                }
            }
            if matches!(bytes[end - 1], 0x90 | 0xcc | 0x00) {
                end -= 1;
                continue;
            }
            break;
        }
        end
    }

    #[test]
    fn ret_then_nops() {
        let a = PaddingAlphabet::x86();
        let mut body = vec![0x55, 0x89, 0xe5, 0x31, 0xc0, 0x5d, 0x8b, 0x45, 0x08, 0x01, 0xd0, 0x5d, 0xc3];
        body.extend([0x90, 0x90, 0x90]);
        assert_eq!(body.len(), 16);
        assert_eq!(a.padding_suffix_start(&body, 1), 13);
        assert_eq!(oracle_trim(&body, 1), 13);
    }

    #[test]
    fn no_padding_is_fixed_point() {
        let a = PaddingAlphabet::x86();
        assert_eq!(a.padding_suffix_start(&[0x55, 0xc3], 1), 2);
    }

    #[test]
    fn multi_byte_nops() {
        let a = PaddingAlphabet::x86();
        // retq; nopw %cs:0x0(%rax,%rax,1)
        let listing = [0xc3, 0x66, 0x2e, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0];
        assert_eq!(a.padding_suffix_start(&listing, 1), 1);
        // jmpq; data16 nopw %cs:0x0(%rax,%rax,1)
        let yyalloc = [0xe9, 0x0b, 0x93, 0xff, 0xff, 0x66, 0x66, 0x2e, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0];
        assert_eq!(a.padding_suffix_start(&yyalloc, 1), 5);
        assert!(a.is_all_padding(&[0x0f, 0x1f, 0x44, 0x00, 0x00, 0x90, 0xcc]));
        assert!(!a.is_all_padding(&[0x0f, 0x1f, 0x48, 0x00]), "reg field must be 0");
        assert!(!a.is_all_padding(&[0x66, 0x90]));
    }

    #[test]
    fn floor_keeps_at_least_one_byte() {
        let a = PaddingAlphabet::x86();
        assert_eq!(a.padding_suffix_start(&[0x90, 0x90, 0x90], 1), 1);
        assert_eq!(a.padding_suffix_start(&[0x90, 0x90, 0x90], 3), 3);
    }

    #[test]
    fn empty_alphabet_never_trims() {
        let a = PaddingAlphabet::empty();
        assert_eq!(a.padding_suffix_start(&[0xc3, 0x90, 0x90], 1), 3);
        assert!(!a.is_all_padding(&[0x90]));
        assert!(a.is_all_padding(&[]));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(PaddingAlphabet::parse("zz\n").is_err());
        assert!(PaddingAlphabet::parse(" /m\n").is_err());
        let a = PaddingAlphabet::parse("# c\n66 90  # xchg\n").unwrap();
        assert!(a.is_all_padding(&[0x66, 0x90, 0x66, 0x90]));
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_oracle(
            body in proptest::collection::vec(proptest::prelude::any::<u8>(), 1..24),
            pads in proptest::collection::vec(0usize..12, 0..6),
        ) {
            const PIECES: &[&[u8]] = &[
                &[0x90], &[0xcc], &[0x00], &[0x0f, 0x1f, 0x00], &[0x0f, 0x1f, 0x40, 0x00],
                &[0x0f, 0x1f, 0x44, 0x00, 0x00], &[0x66, 0x0f, 0x1f, 0x44, 0x00, 0x00],
                &[0x0f, 0x1f, 0x80, 0, 0, 0, 0], &[0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
                &[0x66, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0], &[0x66, 0x2e, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
                &[0x66, 0x66, 0x2e, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
            ];
            let mut bytes = body.clone();
            *bytes.last_mut().unwrap() = 0xc3;
            let code_len = bytes.len();
            for p in &pads {
                bytes.extend_from_slice(PIECES[*p]);
            }
            let got = PaddingAlphabet::x86().padding_suffix_start(&bytes, 1);
            proptest::prop_assert_eq!(got, code_len);
            proptest::prop_assert_eq!(oracle_trim(&bytes, 1), code_len);
        }
    }
}
