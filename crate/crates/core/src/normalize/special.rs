use std::collections::{BTreeMap, BTreeSet};

use super::{Flag, GroundTruthFunction};
use crate::dwarf::DebugFunctionRecord;
use crate::model::Addr;

/// `base..N` with a non-empty base and an all-digit N.
pub fn specialization_base(name: &str) -> Option<&str> {
    let (base, n) = name.rsplit_once("..")?;
    (!base.is_empty() && !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit())).then_some(base)
}

/// Sets `specialization_group` on `base..N` clones and on `base` itself
/// when it is present alongside at least one clone. Only clones are flagged
/// `specialized`.
pub fn cluster_specializations(functions: &mut [GroundTruthFunction]) {
    let bases: BTreeSet<String> = functions
        .iter()
        .filter_map(|f| specialization_base(&f.canonical_name).map(str::to_string))
        .collect();
    for f in functions.iter_mut() {
        if let Some(base) = specialization_base(&f.canonical_name) {
            f.specialization_group = Some(base.to_string());
            f.flags.insert(Flag::Specialized);
        } else if bases.contains(&f.canonical_name) {
            f.specialization_group = Some(f.canonical_name.clone());
        }
    }
}

/// Group name to member start addresses, in address order.
pub fn specialization_groups(functions: &[GroundTruthFunction]) -> BTreeMap<String, Vec<Addr>> {
    let mut out: BTreeMap<String, Vec<Addr>> = BTreeMap::new();
    for f in functions {
        if let Some(g) = &f.specialization_group {
            out.entry(g.clone()).or_default().push(f.start);
        }
    }
    for members in out.values_mut() {
        members.sort_unstable();
    }
    out
}

/// `matched[i]` is the debug record matched to `functions[i]`, if any.
pub fn annotate_noreturn(
    functions: &mut [GroundTruthFunction],
    matched: &[Option<&DebugFunctionRecord>],
    seeds: &BTreeSet<String>,
) {
    for (f, rec) in functions.iter_mut().zip(matched) {
        let attr = rec.is_some_and(|r| r.noreturn);
        let seeded = seeds.contains(&f.canonical_name) || f.aliases.iter().any(|a| seeds.contains(a));
        if attr || seeded {
            f.flags.insert(Flag::Noreturn);
        }
    }
}

/// Flags functions with no source-level counterpart: those without a
/// matching debug record (only judged when the binary has debug records at
/// all) and those named in the runtime-scaffold list.
pub fn tag_compiler_inserted(
    functions: &mut [GroundTruthFunction],
    matched: &[Option<&DebugFunctionRecord>],
    has_debug_records: bool,
    scaffold: &BTreeSet<String>,
) {
    for (f, rec) in functions.iter_mut().zip(matched) {
        let undeclared = has_debug_records && rec.is_none();
        if undeclared || scaffold.contains(&f.canonical_name) {
            f.flags.insert(Flag::CompilerInserted);
        }
    }
}

/// Flags functions that no call edge reaches from outside themselves.
pub fn tag_uncalled(functions: &mut [GroundTruthFunction], edges: &[(Addr, Addr)]) {
    for f in functions.iter_mut() {
        let called = edges.iter().any(|&(src, dst)| {
            f.entry_points.contains(&dst) && !(src >= f.start && src < f.end_exclusive_raw)
        });
        if !called {
            f.flags.insert(Flag::Uncalled);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_parsing() {
        assert_eq!(specialization_base("integer_constant..2"), Some("integer_constant"));
        assert_eq!(specialization_base("a..b..12"), Some("a..b"));
        assert_eq!(specialization_base("fix_syms."), None);
        assert_eq!(specialization_base("x.."), None);
        assert_eq!(specialization_base("..3"), None);
        assert_eq!(specialization_base("x..3a"), None);
        assert_eq!(specialization_base("plain"), None);
    }
}
