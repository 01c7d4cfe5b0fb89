use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{Addr, Binding, Endianness, Machine, WordSize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SectionFlags {
    pub alloc: bool,
    pub exec: bool,
    pub write: bool,
}

impl SectionFlags {
    pub const CODE: SectionFlags = SectionFlags { alloc: true, exec: true, write: false };
    pub const RODATA: SectionFlags = SectionFlags { alloc: true, exec: false, write: false };
    pub const DATA: SectionFlags = SectionFlags { alloc: true, exec: false, write: true };
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Content {
    /// File-backed; bytes not covered by a function are this value.
    Fill(u8),
    /// Explicit contents, zero-extended to the section size.
    Bytes(Vec<u8>),
    /// No file contents (.bss style).
    NoBits,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionSpec {
    pub name: String,
    pub vaddr: Addr,
    pub size: u64,
    pub flags: SectionFlags,
    pub content: Content,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quirk {
    /// Split the body at `split`: `name` covers the stub, `name.` the rest.
    TrailingDotTwin { split: u64 },
    /// The symbol is `name..N`; debug info keeps the plain name.
    SpecializationClone(u32),
    /// An extra weak symbol at the same address and size.
    Alias(String),
    /// Declared size covers the trailing padding.
    IccSizeIncludesPadding,
    /// Declared size 0.
    OmitSize,
    DwarfHighPcConstant,
    DwarfHighPcAddress,
    DwarfNoreturn,
    /// Left out of the debug info.
    NoDwarf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    /// Emit a location description; without one the parameter is declared
    /// but optimized away.
    pub located: bool,
}

/// An inlined copy of another (abstract, address-less) subprogram placed
/// inside the enclosing function's body.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InlineSpec {
    pub callee: String,
    pub offset: u64,
    pub len: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub name: String,
    pub section: String,
    pub offset: u64,
    pub body: Vec<u8>,
    pub padding: Vec<u8>,
    pub binding: Binding,
    pub quirks: BTreeSet<Quirk>,
    pub source: Option<(String, u64)>,
    pub params: Vec<ParamSpec>,
    pub inlined: Vec<InlineSpec>,
}

impl FunctionSpec {
    pub fn new(name: &str, section: &str, offset: u64, body: Vec<u8>) -> Self {
        FunctionSpec {
            name: name.into(),
            section: section.into(),
            offset,
            body,
            padding: Vec::new(),
            binding: Binding::Global,
            quirks: BTreeSet::new(),
            source: None,
            params: Vec::new(),
            inlined: Vec::new(),
        }
    }

    pub fn has(&self, q: &Quirk) -> bool {
        self.quirks.contains(q)
    }

    /// Name in the symbol table.
    pub fn symbol_name(&self) -> String {
        match self.clone_index() {
            Some(n) => format!("{}..{n}", self.name),
            None => self.name.clone(),
        }
    }

    pub fn clone_index(&self) -> Option<u32> {
        self.quirks.iter().find_map(|q| match q {
            Quirk::SpecializationClone(n) => Some(*n),
            _ => None,
        })
    }

    pub fn twin_split(&self) -> Option<u64> {
        self.quirks.iter().find_map(|q| match q {
            Quirk::TrailingDotTwin { split } => Some(*split),
            _ => None,
        })
    }

    pub fn aliases(&self) -> Vec<String> {
        self.quirks
            .iter()
            .filter_map(|q| match q {
                Quirk::Alias(a) => Some(a.clone()),
                _ => None,
            })
            .collect()
    }

    /// Body plus padding.
    pub fn footprint(&self) -> u64 {
        (self.body.len() + self.padding.len()) as u64
    }

    /// Size recorded in the symbol table for the whole function.
    pub fn declared_size(&self) -> u64 {
        if self.has(&Quirk::OmitSize) {
            0
        } else if self.has(&Quirk::IccSizeIncludesPadding) {
            self.footprint()
        } else {
            self.body.len() as u64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub name: String,
    pub section: String,
    pub offset: u64,
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DwarfSpec {
    pub version: u16,
    pub producer_dir: String,
    /// Describe every function in two units, first with address-class and
    /// then with constant-class high PCs.
    pub twin_units: bool,
    /// Repeat the whole `.debug_info` contents byte for byte.
    pub duplicate_info: bool,
}

impl DwarfSpec {
    pub fn version(version: u16) -> Self {
        DwarfSpec { version, producer_dir: "/build".into(), twin_units: false, duplicate_info: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub name: String,
    pub word_size: WordSize,
    pub endianness: Endianness,
    pub machine: Machine,
    pub sections: Vec<SectionSpec>,
    pub functions: Vec<FunctionSpec>,
    pub objects: Vec<ObjectSpec>,
    pub symtab: bool,
    /// Mirror global and weak function symbols into `.dynsym`.
    pub dynsym: bool,
    pub dwarf: Option<DwarfSpec>,
}

impl FixtureSpec {
    /// Headers only: no sections, no symbols.
    pub fn empty(name: &str) -> Self {
        FixtureSpec {
            name: name.into(),
            word_size: WordSize::Bits64,
            endianness: Endianness::Little,
            machine: Machine::X86_64,
            sections: Vec::new(),
            functions: Vec::new(),
            objects: Vec::new(),
            symtab: true,
            dynsym: false,
            dwarf: None,
        }
    }

    pub fn section(&self, name: &str) -> Option<&SectionSpec> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn function_start(&self, f: &FunctionSpec) -> Option<Addr> {
        self.section(&f.section).map(|s| s.vaddr + f.offset)
    }
}
