//! Shared domain types: the parsed binary, its sections and symbols, and the
//! diagnostics vocabulary every stage reports through.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

/// A virtual address in the analysed binary.
pub type Addr = u64;

/// SHA-256 of the raw file contents.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentDigest(pub [u8; 32]);

impl ContentDigest {
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(64);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 64 || !s.is_ascii() {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            let pair = std::str::from_utf8(chunk).ok()?;
            out[i] = u8::from_str_radix(pair, 16).ok()?;
        }
        Some(ContentDigest(out))
    }
}

impl fmt::Debug for ContentDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentDigest({})", self.to_hex())
    }
}

impl fmt::Display for ContentDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for ContentDigest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentDigest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ContentDigest::from_hex(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid digest {s:?}")))
    }
}

/// Deterministic content digest of a binary.
pub fn digest_binary(raw: &[u8]) -> ContentDigest {
    ContentDigest(Sha256::digest(raw).into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WordSize {
    Bits32,
    Bits64,
}

impl WordSize {
    pub fn bytes(self) -> u8 {
        match self {
            WordSize::Bits32 => 4,
            WordSize::Bits64 => 8,
        }
    }

    pub fn bits(self) -> u32 {
        self.bytes() as u32 * 8
    }

    pub fn max_addr(self) -> u64 {
        match self {
            WordSize::Bits32 => u32::MAX as u64,
            WordSize::Bits64 => u64::MAX,
        }
    }
}

impl Serialize for WordSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.bits())
    }
}

impl<'de> Deserialize<'de> for WordSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match u32::deserialize(d)? {
            32 => Ok(WordSize::Bits32),
            64 => Ok(WordSize::Bits64),
            n => Err(serde::de::Error::custom(format!("word size must be 32 or 64, got {n}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endianness {
    Little,
    Big,
}

/// ELF `e_machine`. Unknown codes are kept so corpus statistics can count them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Machine {
    X86,
    X86_64,
    Other(u16),
}

impl Machine {
    pub const EM_386: u16 = 3;
    pub const EM_X86_64: u16 = 62;

    pub fn from_code(code: u16) -> Self {
        match code {
            Self::EM_386 => Machine::X86,
            Self::EM_X86_64 => Machine::X86_64,
            other => Machine::Other(other),
        }
    }

    pub fn code(self) -> u16 {
        match self {
            Machine::X86 => Self::EM_386,
            Machine::X86_64 => Self::EM_X86_64,
            Machine::Other(c) => c,
        }
    }

    pub fn is_x86(self) -> bool {
        matches!(self, Machine::X86 | Machine::X86_64)
    }
}

impl fmt::Display for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Machine::X86 => f.write_str("x86"),
            Machine::X86_64 => f.write_str("x86_64"),
            Machine::Other(c) => write!(f, "other:{c}"),
        }
    }
}

impl std::str::FromStr for Machine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "x86" => Ok(Machine::X86),
            "x86_64" => Ok(Machine::X86_64),
            _ => s
                .strip_prefix("other:")
                .and_then(|c| c.parse::<u16>().ok())
                .map(Machine::Other)
                .ok_or_else(|| format!("unknown machine {s:?}")),
        }
    }
}

impl Serialize for Machine {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Machine {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionRecord {
    pub name: String,
    pub vaddr: Addr,
    pub size: u64,
    pub executable: bool,
    pub writable: bool,
    pub allocated: bool,
    pub file_offset: u64,
    /// False for `SHT_NOBITS` sections (.bss and friends).
    pub file_backed: bool,
}

impl SectionRecord {
    pub fn end(&self) -> Addr {
        self.vaddr.saturating_add(self.size)
    }

    pub fn contains(&self, addr: Addr) -> bool {
        addr >= self.vaddr && addr < self.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Function,
    Object,
    Other,
}

/// Symbol binding. Ordered by canonical-name preference: global, then weak,
/// then local.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Global,
    Weak,
    Local,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolRecord {
    pub name: String,
    pub value: Addr,
    /// 0 means unknown, never "empty function".
    pub size: u64,
    pub kind: SymbolKind,
    pub binding: Binding,
    /// Index into [`BinaryImage::sections`] (the ELF section header index).
    pub section_index: Option<usize>,
}

/// A parsed binary. Immutable once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryImage {
    pub source_path: String,
    pub content_digest: ContentDigest,
    pub word_size: WordSize,
    pub endianness: Endianness,
    pub machine: Machine,
    /// All section headers in file order, including the null section at 0.
    pub sections: Vec<SectionRecord>,
    pub symbols: Vec<SymbolRecord>,
    /// Non-fatal problems found while parsing.
    pub diagnostics: Vec<Diagnostic>,
    pub(crate) raw: Arc<[u8]>,
}

impl BinaryImage {
    /// Assembles an image from already-decoded parts. `raw` is the whole file;
    /// section file offsets index into it.
    pub fn from_parts(
        source_path: impl Into<String>,
        word_size: WordSize,
        endianness: Endianness,
        machine: Machine,
        sections: Vec<SectionRecord>,
        symbols: Vec<SymbolRecord>,
        raw: Vec<u8>,
    ) -> Self {
        BinaryImage {
            source_path: source_path.into(),
            content_digest: digest_binary(&raw),
            word_size,
            endianness,
            machine,
            sections,
            symbols,
            diagnostics: Vec::new(),
            raw: raw.into(),
        }
    }

    /// Raw bytes of `[addr, addr + len)` when the range lies inside one
    /// allocated, file-backed section.
    pub fn bytes_at(&self, addr: Addr, len: u64) -> Option<&[u8]> {
        let end = addr.checked_add(len)?;
        let sec = self
            .sections
            .iter()
            .find(|s| s.allocated && s.file_backed && s.size > 0 && s.contains(addr))?;
        if end > sec.end() {
            return None;
        }
        let start = sec.file_offset.checked_add(addr - sec.vaddr)?;
        let stop = start.checked_add(len)?;
        self.raw.get(usize::try_from(start).ok()?..usize::try_from(stop).ok()?)
    }

    /// The unique allocated section containing `addr`.
    pub fn section_of(&self, addr: Addr) -> Option<&SectionRecord> {
        self.section_index_of(addr).map(|i| &self.sections[i])
    }

    pub fn section_index_of(&self, addr: Addr) -> Option<usize> {
        self.sections
            .iter()
            .position(|s| s.allocated && s.size > 0 && s.contains(addr))
    }

    pub fn section_by_name(&self, name: &str) -> Option<&SectionRecord> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// File contents of a section (empty for NOBITS or out-of-range data).
    pub fn section_data(&self, sec: &SectionRecord) -> &[u8] {
        if !sec.file_backed {
            return &[];
        }
        let start = sec.file_offset as usize;
        let end = start.saturating_add(sec.size as usize);
        self.raw.get(start..end).unwrap_or(&[])
    }

    pub fn raw_bytes(&self) -> &[u8] {
        &self.raw
    }

    /// Same image with a different symbol order; used for order-independence checks.
    pub fn with_symbols(&self, symbols: Vec<SymbolRecord>) -> Self {
        BinaryImage { symbols, ..self.clone() }
    }

    pub fn has_code(&self) -> bool {
        self.sections
            .iter()
            .any(|s| s.allocated && s.executable && s.size > 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

/// Closed set of diagnostic codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagCode {
    /// Function symbol with size 0; end resolved from the next boundary.
    #[serde(rename = "GT_MISSING_SIZE")]
    MissingSize,
    /// Several symbols at one address folded into one function.
    #[serde(rename = "GT_ALIAS_MERGED")]
    AliasMerged,
    /// A trailing-dot twin folded in as a secondary entry point.
    #[serde(rename = "GT_MULTI_ENTRY_MERGED")]
    MultiEntryMerged,
    #[serde(rename = "GT_PADDING_TRIMMED")]
    PaddingTrimmed,
    /// Ground truth cannot be trusted; the document is marked incomplete.
    #[serde(rename = "GT_INCOMPLETE_EXCLUDED")]
    IncompleteExcluded,
    /// Declared size crossed the next function or the section end and was clamped.
    #[serde(rename = "GT_SIZE_OVERLAP")]
    SizeOverlap,
    #[serde(rename = "GT_NO_DEBUG_INFO")]
    NoDebugInfo,
    #[serde(rename = "GT_DISCONTIGUOUS_RANGE")]
    DiscontiguousRange,
    #[serde(rename = "GT_MALFORMED_DEBUG")]
    MalformedDebug,
    /// Subprogram without a code address (declaration or inlined away).
    #[serde(rename = "GT_NO_CODE_ADDRESS")]
    NoCodeAddress,
    #[serde(rename = "GT_DEBUG_OUTSIDE_EXEC")]
    DebugOutsideExec,
    /// Function symbol not inside an executable section; dropped.
    #[serde(rename = "GT_FUNC_OUTSIDE_EXEC")]
    FuncOutsideExec,
    #[serde(rename = "GT_BAD_STRTAB")]
    BadStrtab,
    #[serde(rename = "GT_BAD_SECTION_INDEX")]
    BadSectionIndex,
    #[serde(rename = "GT_SECTION_OVERLAP")]
    SectionOverlap,
    /// Symbol table and debug info disagree on a function start.
    #[serde(rename = "GT_START_MISMATCH")]
    StartMismatch,
    /// Debug info names a function the symbol table lacks.
    #[serde(rename = "GT_MISSING_SYMBOL")]
    MissingSymbol,
}

impl DiagCode {
    pub const ALL: [DiagCode; 17] = [
        DiagCode::MissingSize,
        DiagCode::AliasMerged,
        DiagCode::MultiEntryMerged,
        DiagCode::PaddingTrimmed,
        DiagCode::IncompleteExcluded,
        DiagCode::SizeOverlap,
        DiagCode::NoDebugInfo,
        DiagCode::DiscontiguousRange,
        DiagCode::MalformedDebug,
        DiagCode::NoCodeAddress,
        DiagCode::DebugOutsideExec,
        DiagCode::FuncOutsideExec,
        DiagCode::BadStrtab,
        DiagCode::BadSectionIndex,
        DiagCode::SectionOverlap,
        DiagCode::StartMismatch,
        DiagCode::MissingSymbol,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::MissingSize => "GT_MISSING_SIZE",
            DiagCode::AliasMerged => "GT_ALIAS_MERGED",
            DiagCode::MultiEntryMerged => "GT_MULTI_ENTRY_MERGED",
            DiagCode::PaddingTrimmed => "GT_PADDING_TRIMMED",
            DiagCode::IncompleteExcluded => "GT_INCOMPLETE_EXCLUDED",
            DiagCode::SizeOverlap => "GT_SIZE_OVERLAP",
            DiagCode::NoDebugInfo => "GT_NO_DEBUG_INFO",
            DiagCode::DiscontiguousRange => "GT_DISCONTIGUOUS_RANGE",
            DiagCode::MalformedDebug => "GT_MALFORMED_DEBUG",
            DiagCode::NoCodeAddress => "GT_NO_CODE_ADDRESS",
            DiagCode::DebugOutsideExec => "GT_DEBUG_OUTSIDE_EXEC",
            DiagCode::FuncOutsideExec => "GT_FUNC_OUTSIDE_EXEC",
            DiagCode::BadStrtab => "GT_BAD_STRTAB",
            DiagCode::BadSectionIndex => "GT_BAD_SECTION_INDEX",
            DiagCode::SectionOverlap => "GT_SECTION_OVERLAP",
            DiagCode::StartMismatch => "GT_START_MISMATCH",
            DiagCode::MissingSymbol => "GT_MISSING_SYMBOL",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    #[serde(with = "crate::serde_hex::addr")]
    pub start: Addr,
    pub length: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagCode,
    pub message: String,
    pub span: Option<Span>,
}

impl Diagnostic {
    pub fn new(severity: Severity, code: DiagCode, message: impl Into<String>) -> Self {
        Diagnostic { severity, code, message: message.into(), span: None }
    }

    pub fn info(code: DiagCode, message: impl Into<String>) -> Self {
        Self::new(Severity::Info, code, message)
    }

    pub fn warning(code: DiagCode, message: impl Into<String>) -> Self {
        Self::new(Severity::Warning, code, message)
    }

    pub fn error(code: DiagCode, message: impl Into<String>) -> Self {
        Self::new(Severity::Error, code, message)
    }

    pub fn at(mut self, start: Addr, length: u64) -> Self {
        self.span = Some(Span { start, length });
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}[{}]", self.code)?;
        if let Some(span) = self.span {
            write!(f, " @{:#x}+{}", span.start, span.length)?;
        }
        write!(f, ": {}", self.message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_digest_is_sha256_of_nothing() {
        assert_eq!(
            digest_binary(&[]).to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn digest_is_deterministic_and_sensitive() {
        // Frozen with Python's hashlib.sha256.
        let data = b"\x7fELF groundtruth fixture";
        assert_eq!(
            digest_binary(data).to_hex(),
            "1d1acf936cab12d8b1e8bda5655701deb039f44792f30ac8b505f2fb24120365"
        );
        let mut flipped = data.to_vec();
        flipped[5] ^= 1;
        assert_eq!(
            digest_binary(&flipped).to_hex(),
            "4c30b8462614cbcdb262b3a371009c709dcba4d216d46b07be2bd72f3ce8cde2"
        );
        assert_ne!(digest_binary(data), digest_binary(&flipped));
        assert_eq!(digest_binary(data), digest_binary(data));
    }

    #[test]
    fn digest_hex_round_trips() {
        let d = digest_binary(b"abc");
        assert_eq!(ContentDigest::from_hex(&d.to_hex()), Some(d));
        assert_eq!(ContentDigest::from_hex("zz"), None);
    }

    #[test]
    fn machine_codes_are_preserved() {
        assert_eq!(Machine::from_code(3), Machine::X86);
        assert_eq!(Machine::from_code(62), Machine::X86_64);
        assert_eq!(Machine::from_code(183), Machine::Other(183));
        assert_eq!("other:183".parse::<Machine>().unwrap(), Machine::Other(183));
        assert_eq!(Machine::Other(183).to_string(), "other:183");
    }

    #[test]
    fn binding_order_prefers_global() {
        assert!(Binding::Global < Binding::Weak && Binding::Weak < Binding::Local);
    }
}
