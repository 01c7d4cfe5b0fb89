//! ELF32/ELF64 reader: file header, section headers, `.symtab` / `.dynsym`.

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::bytes::{str_at, Cursor};
use crate::model::{
    digest_binary, Binding, BinaryImage, DiagCode, Diagnostic, Endianness, Machine,
    SectionRecord, SymbolKind, SymbolRecord, WordSize,
};

pub const SHT_SYMTAB: u32 = 2;
pub const SHT_STRTAB: u32 = 3;
pub const SHT_NOBITS: u32 = 8;
pub const SHT_DYNSYM: u32 = 11;

pub const SHF_WRITE: u64 = 0x1;
pub const SHF_ALLOC: u64 = 0x2;
pub const SHF_EXECINSTR: u64 = 0x4;
pub const SHF_TLS: u64 = 0x400;

pub const STT_OBJECT: u8 = 1;
pub const STT_FUNC: u8 = 2;

const SHN_LORESERVE: u16 = 0xff00;
const SHN_XINDEX: u16 = 0xffff;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElfError {
    #[error("input is empty")]
    Empty,
    #[error("bad ELF magic")]
    BadMagic,
    #[error("unsupported object format ({0}); only ELF is supported")]
    UnsupportedFormat(&'static str),
    #[error("unsupported ELF class {0}")]
    UnsupportedClass(u8),
    #[error("unsupported ELF data encoding {0}")]
    UnsupportedEncoding(u8),
    #[error("truncated: {0} extends past end of input")]
    Truncated(String),
}

#[derive(Clone, Debug)]
struct RawSection {
    name_off: u32,
    kind: u32,
    flags: u64,
    addr: u64,
    offset: u64,
    size: u64,
    link: u32,
    entsize: u64,
}

/// Parses raw bytes into a [`BinaryImage`] with an empty source path.
pub fn parse_image(raw: &[u8]) -> Result<BinaryImage, ElfError> {
    parse_image_named("", raw)
}

pub fn parse_image_named(source_path: &str, raw: &[u8]) -> Result<BinaryImage, ElfError> {
    if raw.is_empty() {
        return Err(ElfError::Empty);
    }
    if raw.len() < 4 || raw[..4] != [0x7f, b'E', b'L', b'F'] {
        return Err(match raw {
            [b'M', b'Z', ..] => ElfError::UnsupportedFormat("PE"),
            [0xfe, 0xed, 0xfa, 0xce | 0xcf, ..]
            | [0xce | 0xcf, 0xfa, 0xed, 0xfe, ..]
            | [0xca, 0xfe, 0xba, 0xbe, ..] => ElfError::UnsupportedFormat("Mach-O"),
            _ => ElfError::BadMagic,
        });
    }
    let ident = raw
        .get(..16)
        .ok_or_else(|| ElfError::Truncated("ELF identification".into()))?;
    let word_size = match ident[4] {
        1 => WordSize::Bits32,
        2 => WordSize::Bits64,
        c => return Err(ElfError::UnsupportedClass(c)),
    };
    let endianness = match ident[5] {
        1 => Endianness::Little,
        2 => Endianness::Big,
        e => return Err(ElfError::UnsupportedEncoding(e)),
    };
    let is64 = word_size == WordSize::Bits64;
    let truncated = |what: &str| ElfError::Truncated(what.to_string());

    let mut c = Cursor::at(raw, 16, endianness);
    let header = (|| {
        let _e_type = c.u16()?;
        let machine = c.u16()?;
        let _version = c.u32()?;
        let word = if is64 { 8 } else { 4 };
        let _entry = c.uint(word)?;
        let _phoff = c.uint(word)?;
        let shoff = c.uint(word)?;
        let _flags = c.u32()?;
        let _ehsize = c.u16()?;
        let _phentsize = c.u16()?;
        let _phnum = c.u16()?;
        let shentsize = c.u16()?;
        let shnum = c.u16()?;
        let shstrndx = c.u16()?;
        Some((machine, shoff, shentsize, shnum, shstrndx))
    })();
    let (machine, shoff, shentsize, shnum, shstrndx) =
        header.ok_or_else(|| truncated("ELF header"))?;

    let mut raw_sections = Vec::new();
    if shoff != 0 {
        let expected = if is64 { 64 } else { 40 };
        if shentsize != expected {
            return Err(truncated("section header table (bad entry size)"));
        }
        let first = read_section_header(raw, shoff, is64, endianness)
            .ok_or_else(|| truncated("section header table"))?;
        // Extended numbering: counts that do not fit live in section 0.
        let count = if shnum == 0 { first.size } else { u64::from(shnum) };
        let table_end = count
            .checked_mul(u64::from(shentsize))
            .and_then(|n| n.checked_add(shoff))
            .ok_or_else(|| truncated("section header table"))?;
        if table_end > raw.len() as u64 {
            return Err(truncated("section header table"));
        }
        for i in 0..count {
            let off = shoff + i * u64::from(shentsize);
            raw_sections.push(
                read_section_header(raw, off, is64, endianness)
                    .ok_or_else(|| truncated("section header table"))?,
            );
        }
    }

    let shstrndx = if shstrndx == SHN_XINDEX {
        raw_sections.first().map(|s| s.link as usize).unwrap_or(0)
    } else {
        shstrndx as usize
    };

    let mut diagnostics = Vec::new();

    for (i, s) in raw_sections.iter().enumerate() {
        if s.kind != SHT_NOBITS && i != 0 {
            let end = s.offset.checked_add(s.size);
            if end.is_none_or(|e| e > raw.len() as u64) {
                return Err(ElfError::Truncated(format!("contents of section {i}")));
            }
        }
    }

    let shstrtab: &[u8] = match raw_sections.get(shstrndx) {
        Some(s) if shstrndx != 0 => section_bytes(raw, s),
        _ => &[],
    };

    let sections: Vec<SectionRecord> = raw_sections
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let name = if i == 0 {
                String::new()
            } else {
                match str_at(shstrtab, u64::from(s.name_off)) {
                    Some(n) => n,
                    None => {
                        diagnostics.push(Diagnostic::error(
                            DiagCode::BadStrtab,
                            format!("section {i} name offset {} out of range", s.name_off),
                        ));
                        format!("<bad-strtab:{}>", s.name_off)
                    }
                }
            };
            let tls_nobits = s.flags & SHF_TLS != 0 && s.kind == SHT_NOBITS;
            let allocated = s.flags & SHF_ALLOC != 0 && !tls_nobits;
            SectionRecord {
                name,
                vaddr: s.addr,
                size: s.size,
                executable: allocated && s.flags & SHF_EXECINSTR != 0,
                writable: s.flags & SHF_WRITE != 0,
                allocated,
                file_offset: s.offset,
                file_backed: s.kind != SHT_NOBITS,
            }
        })
        .collect();

    check_overlaps(&sections, &mut diagnostics);

    let mut symbols = Vec::new();
    for table_kind in [SHT_SYMTAB, SHT_DYNSYM] {
        let mut seen: HashSet<(String, u64)> = if table_kind == SHT_DYNSYM {
            symbols.iter().map(|s: &SymbolRecord| (s.name.clone(), s.value)).collect()
        } else {
            HashSet::new()
        };
        for (i, s) in raw_sections.iter().enumerate() {
            if s.kind != table_kind {
                continue;
            }
            let strtab: &[u8] = raw_sections
                .get(s.link as usize)
                .filter(|_| s.link != 0)
                .map(|st| section_bytes(raw, st))
                .unwrap_or(&[]);
            let table = read_symbols(
                section_bytes(raw, s),
                s.entsize,
                is64,
                endianness,
                strtab,
                sections.len(),
                &mut diagnostics,
            )
            .ok_or_else(|| ElfError::Truncated(format!("symbol table in section {i}")))?;
            for sym in table {
                if table_kind == SHT_DYNSYM && !seen.insert((sym.name.clone(), sym.value)) {
                    continue;
                }
                symbols.push(sym);
            }
        }
    }

    Ok(BinaryImage {
        source_path: source_path.to_string(),
        content_digest: digest_binary(raw),
        word_size,
        endianness,
        machine: Machine::from_code(machine),
        sections,
        symbols,
        diagnostics,
        raw: Arc::from(raw),
    })
}

fn read_section_header(raw: &[u8], off: u64, is64: bool, endian: Endianness) -> Option<RawSection> {
    let mut c = Cursor::at(raw, usize::try_from(off).ok()?, endian);
    let w = if is64 { 8 } else { 4 };
    let name_off = c.u32()?;
    let kind = c.u32()?;
    let flags = c.uint(w)?;
    let addr = c.uint(w)?;
    let offset = c.uint(w)?;
    let size = c.uint(w)?;
    let link = c.u32()?;
    let _info = c.u32()?;
    let _align = c.uint(w)?;
    let entsize = c.uint(w)?;
    Some(RawSection { name_off, kind, flags, addr, offset, size, link, entsize })
}

fn section_bytes<'a>(raw: &'a [u8], s: &RawSection) -> &'a [u8] {
    if s.kind == SHT_NOBITS {
        return &[];
    }
    let start = s.offset as usize;
    raw.get(start..start.saturating_add(s.size as usize)).unwrap_or(&[])
}

fn check_overlaps(sections: &[SectionRecord], diags: &mut Vec<Diagnostic>) {
    let mut alloc: Vec<&SectionRecord> =
        sections.iter().filter(|s| s.allocated && s.size > 0).collect();
    alloc.sort_by_key(|s| s.vaddr);
    for pair in alloc.windows(2) {
        if pair[1].vaddr < pair[0].end() {
            diags.push(
                Diagnostic::warning(
                    DiagCode::SectionOverlap,
                    format!("sections {} and {} overlap", pair[0].name, pair[1].name),
                )
                .at(pair[1].vaddr, pair[0].end() - pair[1].vaddr),
            );
        }
    }
}

fn read_symbols(
    data: &[u8],
    entsize: u64,
    is64: bool,
    endian: Endianness,
    strtab: &[u8],
    section_count: usize,
    diags: &mut Vec<Diagnostic>,
) -> Option<Vec<SymbolRecord>> {
    let expected = if is64 { 24 } else { 16 };
    if entsize != 0 && entsize != expected {
        return None;
    }
    let count = data.len() / expected as usize;
    let mut out = Vec::with_capacity(count.saturating_sub(1));
    let mut c = Cursor::new(data, endian);
    for idx in 0..count {
        let (name_off, info, shndx, value, size) = if is64 {
            let name = c.u32()?;
            let info = c.u8()?;
            let _other = c.u8()?;
            let shndx = c.u16()?;
            let value = c.u64()?;
            let size = c.u64()?;
            (name, info, shndx, value, size)
        } else {
            let name = c.u32()?;
            let value = u64::from(c.u32()?);
            let size = u64::from(c.u32()?);
            let info = c.u8()?;
            let _other = c.u8()?;
            let shndx = c.u16()?;
            (name, info, shndx, value, size)
        };
        if idx == 0 {
            continue;
        }
        let name = match str_at(strtab, u64::from(name_off)) {
            Some(n) => n,
            None => {
                diags.push(
                    Diagnostic::error(
                        DiagCode::BadStrtab,
                        format!("symbol {idx} name offset {name_off} out of range"),
                    )
                    .at(value, size),
                );
                format!("<bad-strtab:{name_off}>")
            }
        };
        let kind = match info & 0xf {
            STT_FUNC => SymbolKind::Function,
            STT_OBJECT => SymbolKind::Object,
            _ => SymbolKind::Other,
        };
        let binding = match info >> 4 {
            0 => Binding::Local,
            2 => Binding::Weak,
            _ => Binding::Global,
        };
        let section_index = if shndx == 0 || shndx >= SHN_LORESERVE {
            None
        } else if (shndx as usize) < section_count {
            Some(shndx as usize)
        } else {
            diags.push(
                Diagnostic::warning(
                    DiagCode::BadSectionIndex,
                    format!("symbol {name} refers to missing section {shndx}"),
                )
                .at(value, size),
            );
            None
        };
        out.push(SymbolRecord { name, value, size, kind, binding, section_index });
    }
    Some(out)
}

/// Function symbols residing in allocated sections, sorted by address then
/// name, with a `GT_MISSING_SIZE` diagnostic per zero-size entry.
pub fn function_symbols(image: &BinaryImage) -> (Vec<SymbolRecord>, Vec<Diagnostic>) {
    let mut funcs: Vec<SymbolRecord> = image
        .symbols
        .iter()
        .filter(|s| s.kind == SymbolKind::Function)
        .filter(|s| {
            s.section_index
                .and_then(|i| image.sections.get(i))
                .is_some_and(|sec| sec.allocated)
        })
        .cloned()
        .collect();
    funcs.sort_by(|a, b| (a.value, &a.name).cmp(&(b.value, &b.name)).then_with(|| a.cmp(b)));
    let diags = funcs
        .iter()
        .filter(|s| s.size == 0)
        .map(|s| {
            Diagnostic::warning(
                DiagCode::MissingSize,
                format!("function symbol {} has no size", s.name),
            )
            .at(s.value, 0)
        })
        .collect();
    (funcs, diags)
}

/// The unique allocated section containing `addr`.
pub fn section_of(image: &BinaryImage, addr: u64) -> Option<&SectionRecord> {
    image.section_of(addr)
}
