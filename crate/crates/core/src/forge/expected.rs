//! Ground truth a spec should produce under the default normalizer
//! configuration, worked out from the spec alone.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::spec::{Content, FixtureSpec, FunctionSpec, Quirk};
use crate::datafile::{default_noreturn_seeds, default_scaffold_names};
use crate::model::{Addr, Binding, DiagCode};
use crate::normalize::{Flag, GroundTruthDocument, GroundTruthFunction, Provenance, SourceLoc};

/// Expected functions, completeness and per-code diagnostic counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedTruth {
    pub name: String,
    pub functions: Vec<GroundTruthFunction>,
    pub complete: bool,
    /// Only the codes listed here are compared.
    pub counts: BTreeMap<DiagCode, usize>,
}

impl ExpectedTruth {
    /// Describes the first difference from `doc`, if any.
    pub fn mismatch(&self, doc: &GroundTruthDocument) -> Option<String> {
        if doc.complete != self.complete {
            return Some(format!("{}: complete is {}, expected {}", self.name, doc.complete, self.complete));
        }
        if doc.functions.len() != self.functions.len() {
            return Some(format!(
                "{}: {} functions, expected {}",
                self.name,
                doc.functions.len(),
                self.functions.len()
            ));
        }
        for (got, want) in doc.functions.iter().zip(&self.functions) {
            if got != want {
                return Some(format!("{}: function differs\n  got  {got:?}\n  want {want:?}", self.name));
            }
        }
        for (&code, &n) in &self.counts {
            let got = doc.count(code);
            if got != n {
                return Some(format!("{}: {} x{got}, expected {n}", self.name, code.as_str()));
            }
        }
        None
    }
}

/// Multi-byte nops the fixtures place after bodies, plus the single-byte
/// fillers. Each one's third byte fixes its length, so a greedy parse is exact.
const NOPS: &[&[u8]] = &[
    &[0x90],
    &[0xcc],
    &[0x00],
    &[0x0f, 0x1f, 0x00],
    &[0x0f, 0x1f, 0x40, 0x00],
    &[0x0f, 0x1f, 0x44, 0x00, 0x00],
    &[0x66, 0x0f, 0x1f, 0x44, 0x00, 0x00],
    &[0x0f, 0x1f, 0x80, 0x00, 0x00, 0x00, 0x00],
    &[0x0f, 0x1f, 0x84, 0x00, 0x00, 0x00, 0x00, 0x00],
    &[0x66, 0x0f, 0x1f, 0x84, 0x00, 0x00, 0x00, 0x00, 0x00],
    &[0x66, 0x2e, 0x0f, 0x1f, 0x84, 0x00, 0x00, 0x00, 0x00, 0x00],
    &[0x66, 0x66, 0x2e, 0x0f, 0x1f, 0x84, 0x00, 0x00, 0x00, 0x00, 0x00],
];

pub(super) fn nop_table() -> &'static [&'static [u8]] {
    NOPS
}

fn all_nops(mut bytes: &[u8]) -> bool {
    while !bytes.is_empty() {
        match NOPS.iter().filter(|n| bytes.starts_with(n)).map(|n| n.len()).max() {
            Some(len) => bytes = &bytes[len..],
            None => return false,
        }
    }
    true
}

/// Bytes of the section holding `f`, as the emitter lays them out.
fn section_bytes(spec: &FixtureSpec, section: &str) -> Vec<u8> {
    let sec = spec.section(section).expect("validated section");
    let mut data = match &sec.content {
        Content::Fill(b) => vec![*b; sec.size as usize],
        Content::Bytes(b) => {
            let mut d = b.clone();
            d.resize(sec.size as usize, 0);
            d
        }
        Content::NoBits => vec![0; sec.size as usize],
    };
    for f in spec.functions.iter().filter(|f| f.section == section) {
        let at = f.offset as usize;
        data[at..at + f.body.len()].copy_from_slice(&f.body);
        let pad = at + f.body.len();
        data[pad..pad + f.padding.len()].copy_from_slice(&f.padding);
    }
    data
}

fn rank(b: Binding) -> u8 {
    match b {
        Binding::Global => 0,
        Binding::Weak => 1,
        Binding::Local => 2,
    }
}

/// The truth `spec` yields with merging on, the built-in seed and scaffold
/// lists, and no call edges.
///
/// # Panics
///
/// On specs that fail validation, that mirror symbols only into `.dynsym`,
/// or that put non-padding bytes inside a function's resolved extent.
pub fn expected_truth(spec: &FixtureSpec) -> ExpectedTruth {
    assert!(spec.symtab || !spec.dynsym, "{}: .dynsym-only specs are not modelled", spec.name);
    let seeds = default_noreturn_seeds();
    let scaffold = default_scaffold_names();
    let mut counts: BTreeMap<DiagCode, usize> = [
        DiagCode::MultiEntryMerged,
        DiagCode::AliasMerged,
        DiagCode::PaddingTrimmed,
        DiagCode::MissingSize,
        DiagCode::IncompleteExcluded,
    ]
    .into_iter()
    .map(|c| (c, 0))
    .collect();

    let has_code = spec.sections.iter().any(|s| s.flags.exec && s.size > 0);
    if !spec.symtab || spec.functions.is_empty() {
        let complete = !has_code;
        counts.insert(DiagCode::IncompleteExcluded, usize::from(!complete));
        return ExpectedTruth { name: spec.name.clone(), functions: Vec::new(), complete, counts };
    }

    let described = |f: &FunctionSpec| spec.dwarf.is_some() && !f.has(&Quirk::NoDwarf);
    let any_described = spec.functions.iter().any(described);
    let mut order: Vec<&FunctionSpec> = spec.functions.iter().collect();
    order.sort_by_key(|f| spec.function_start(f));
    let starts: Vec<Addr> = order.iter().map(|f| spec.function_start(f).unwrap()).collect();

    let mut functions = Vec::new();
    for (i, f) in order.iter().enumerate() {
        let start = starts[i];
        let sec = spec.section(&f.section).unwrap();
        let body_end = start + f.body.len() as u64;

        let mut names: Vec<(u8, String)> = vec![(rank(f.binding), f.symbol_name())];
        names.extend(f.aliases().into_iter().map(|a| (rank(Binding::Weak), a)));
        names.sort();
        let canonical = names[0].1.clone();
        let mut aliases: Vec<String> = names[1..].iter().map(|(_, n)| n.clone()).collect();
        let mut flags = BTreeSet::new();
        if !aliases.is_empty() {
            counts.entry(DiagCode::AliasMerged).and_modify(|n| *n += 1);
            flags.insert(Flag::MergedAlias);
        }
        let mut entries = vec![start];
        if let Some(split) = f.twin_split() {
            entries.push(start + split);
            aliases.push(format!("{}.", f.symbol_name()));
            flags.insert(Flag::MultiEntry);
            counts.entry(DiagCode::MultiEntryMerged).and_modify(|n| *n += 1);
        }

        let end_raw = match f.declared_size() {
            0 => {
                counts.entry(DiagCode::MissingSize).and_modify(|n| *n += 1);
                let next = starts.get(i + 1).copied().unwrap_or(Addr::MAX);
                next.min(sec.vaddr + sec.size)
            }
            size => start + size,
        };
        let end_trimmed = if spec.machine.is_x86() && end_raw > body_end {
            let data = section_bytes(spec, &f.section);
            let from = (body_end - sec.vaddr) as usize;
            let to = (end_raw - sec.vaddr) as usize;
            assert!(all_nops(&data[from..to]), "{}: {} is followed by non-padding bytes", spec.name, f.name);
            body_end
        } else {
            end_raw
        };
        if end_trimmed < end_raw {
            counts.entry(DiagCode::PaddingTrimmed).and_modify(|n| *n += 1);
        }

        let mut provenance = BTreeSet::from([Provenance::Symtab]);
        let mut source = None;
        if described(f) {
            provenance.insert(Provenance::Dwarf);
            source = f.source.clone().map(|(file, line)| SourceLoc { file, line: Some(line) });
            if f.has(&Quirk::DwarfNoreturn) {
                flags.insert(Flag::Noreturn);
            }
        }
        if seeds.contains(&canonical) || aliases.iter().any(|a| seeds.contains(a)) {
            flags.insert(Flag::Noreturn);
        }
        if (any_described && !described(f)) || scaffold.contains(&canonical) {
            flags.insert(Flag::CompilerInserted);
        }

        functions.push(GroundTruthFunction {
            canonical_name: canonical,
            entry_points: entries,
            start,
            end_exclusive_raw: end_raw,
            end_exclusive_trimmed: end_trimmed,
            aliases,
            specialization_group: None,
            flags,
            provenance,
            source,
        });
    }

    // `base..N` clones and, when present, `base` itself.
    let bases: BTreeSet<String> = functions
        .iter()
        .filter_map(|f| clone_base(&f.canonical_name))
        .collect();
    for f in &mut functions {
        if let Some(base) = clone_base(&f.canonical_name) {
            f.specialization_group = Some(base);
            f.flags.insert(Flag::Specialized);
        } else if bases.contains(&f.canonical_name) {
            f.specialization_group = Some(f.canonical_name.clone());
        }
    }

    ExpectedTruth { name: spec.name.clone(), functions, complete: true, counts }
}

fn clone_base(name: &str) -> Option<String> {
    let at = name.rfind("..")?;
    let digits = &name[at + 2..];
    (at > 0 && !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())).then(|| name[..at].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nop_table_parses_greedily() {
        assert!(all_nops(&[0x90, 0x66, 0x2e, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0, 0xcc]));
        assert!(all_nops(&[]));
        assert!(!all_nops(&[0x90, 0xc3]));
        assert!(!all_nops(&[0x0f, 0x1f]));
    }

    #[test]
    fn clone_names() {
        assert_eq!(clone_base("expr..1").as_deref(), Some("expr"));
        assert_eq!(clone_base("expr."), None);
        assert_eq!(clone_base("..1"), None);
    }
}
