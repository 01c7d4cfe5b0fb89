//! Synthetic ELF fixtures with controlled quirks, and the ground truth each
//! one is expected to produce.

mod corpus;
mod dwarf_out;
mod elf_out;
mod expected;
mod presets;
mod spec;

use std::collections::HashSet;

use thiserror::Error;

use crate::model::WordSize;

pub use corpus::{generate_corpus, QuirkMix};
pub use expected::{expected_truth, ExpectedTruth};
pub use presets::{preset, synthetic_body, PRESETS};
pub use spec::{
    Content, DwarfSpec, FixtureSpec, FunctionSpec, InlineSpec, ObjectSpec, ParamSpec, Quirk, SectionFlags,
    SectionSpec,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ForgeError {
    #[error("invalid fixture spec: {0}")]
    InvalidSpec(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

/// Serializes a spec into ELF bytes.
pub fn emit(spec: &FixtureSpec) -> Result<Vec<u8>, ForgeError> {
    validate(spec)?;
    Ok(elf_out::write_elf(spec))
}

pub fn validate(spec: &FixtureSpec) -> Result<(), ForgeError> {
    let bad = |msg: String| Err(ForgeError::InvalidSpec(msg));
    let limit = match spec.word_size {
        WordSize::Bits32 => 1u64 << 32,
        WordSize::Bits64 => u64::MAX,
    };

    let mut names = HashSet::new();
    for s in &spec.sections {
        if s.name.is_empty() || !names.insert(s.name.as_str()) {
            return bad(format!("section name {:?} empty or repeated", s.name));
        }
        if s.flags.exec && !s.flags.alloc {
            return bad(format!("section {} is executable but not allocated", s.name));
        }
        if s.vaddr.checked_add(s.size).is_none_or(|end| end > limit) {
            return bad(format!("section {} does not fit the address space", s.name));
        }
        if let Content::Bytes(b) = &s.content {
            if b.len() as u64 > s.size {
                return bad(format!("section {} contents exceed its size", s.name));
            }
        }
        if s.size > 1 << 28 {
            return bad(format!("section {} is too large for a fixture", s.name));
        }
    }
    let mut alloc: Vec<&SectionSpec> = spec.sections.iter().filter(|s| s.flags.alloc && s.size > 0).collect();
    alloc.sort_by_key(|s| s.vaddr);
    for w in alloc.windows(2) {
        if w[0].vaddr + w[0].size > w[1].vaddr {
            return bad(format!("sections {} and {} overlap", w[0].name, w[1].name));
        }
    }

    let mut symbol_names = HashSet::new();
    let mut footprints: Vec<(&str, u64, u64, &str)> = Vec::new();
    for f in &spec.functions {
        let Some(sec) = spec.section(&f.section) else {
            return bad(format!("function {} names missing section {}", f.name, f.section));
        };
        if !sec.flags.exec || sec.content == Content::NoBits {
            return bad(format!("function {} must live in a file-backed executable section", f.name));
        }
        if f.body.is_empty() {
            return bad(format!("function {} has an empty body", f.name));
        }
        if f.offset + f.footprint() > sec.size {
            return bad(format!("function {} extends past section {}", f.name, sec.name));
        }
        footprints.push((&f.section, f.offset, f.offset + f.footprint(), &f.name));
        if let Some(split) = f.twin_split() {
            if split == 0 || split >= f.body.len() as u64 {
                return bad(format!("function {}: twin split {split} outside the body", f.name));
            }
            if f.has(&Quirk::OmitSize) {
                return bad(format!("function {}: a trailing-dot twin needs a declared size", f.name));
            }
            if !f.aliases().is_empty() {
                return bad(format!("function {}: a trailing-dot twin cannot carry aliases", f.name));
            }
        }
        if f.has(&Quirk::DwarfHighPcAddress) && f.has(&Quirk::DwarfHighPcConstant) {
            return bad(format!("function {}: both high PC encodings requested", f.name));
        }
        if f.quirks.iter().filter(|q| matches!(q, Quirk::SpecializationClone(_))).count() > 1 {
            return bad(format!("function {}: more than one clone index", f.name));
        }
        if let Some(d) = &spec.dwarf {
            if d.version < 4 && f.has(&Quirk::DwarfHighPcConstant) {
                return bad(format!("function {}: constant-class high PC needs DWARF 4 or later", f.name));
            }
        }
        for inl in &f.inlined {
            if inl.offset + inl.len > f.body.len() as u64 {
                return bad(format!("function {}: inlined copy of {} outside the body", f.name, inl.callee));
            }
        }
        let mut names = vec![f.symbol_name()];
        if f.twin_split().is_some() {
            names.push(format!("{}.", f.symbol_name()));
        }
        names.extend(f.aliases());
        for n in names {
            if n.is_empty() || !symbol_names.insert(n.clone()) {
                return bad(format!("symbol name {n:?} empty or repeated"));
            }
        }
    }
    footprints.sort();
    for w in footprints.windows(2) {
        if w[0].0 == w[1].0 && w[0].2 > w[1].1 {
            return bad(format!("functions {} and {} overlap", w[0].3, w[1].3));
        }
    }
    for o in &spec.objects {
        let Some(sec) = spec.section(&o.section) else {
            return bad(format!("object {} names missing section {}", o.name, o.section));
        };
        if o.offset + o.size > sec.size || !symbol_names.insert(o.name.clone()) {
            return bad(format!("object {} out of its section or repeated", o.name));
        }
    }
    if let Some(d) = &spec.dwarf {
        if !(2..=5).contains(&d.version) {
            return bad(format!("DWARF version {} unsupported", d.version));
        }
        if d.twin_units && d.version < 4 {
            return bad("twin units need DWARF 4 or later".into());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rejected(edit: impl FnOnce(&mut FixtureSpec)) -> bool {
        let mut spec = presets::preset("listing1").unwrap();
        edit(&mut spec);
        matches!(validate(&spec), Err(ForgeError::InvalidSpec(_)))
    }

    #[test]
    fn presets_validate() {
        for name in presets::PRESETS {
            validate(&presets::preset(name).unwrap()).unwrap();
        }
    }

    #[test]
    fn malformed_specs_are_rejected() {
        assert!(rejected(|s| {
            let dup = s.sections[0].clone();
            s.sections.push(dup);
        }));
        assert!(rejected(|s| s.sections[0].flags.alloc = false));
        assert!(rejected(|s| s.functions[0].body.clear()));
        assert!(rejected(|s| s.functions[0].section = "nowhere".into()));
        assert!(rejected(|s| s.functions[0].offset = u64::from(u32::MAX)));
        assert!(rejected(|s| {
            s.functions[0].quirks.insert(Quirk::DwarfHighPcAddress);
            s.functions[0].quirks.insert(Quirk::DwarfHighPcConstant);
        }));
    }
}
