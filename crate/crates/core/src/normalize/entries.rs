use super::alias::AliasGroup;
use crate::model::{BinaryImage, DiagCode, Diagnostic};

/// Folds a trailing-dot twin (`f` immediately followed by `f.`) into the
/// preceding group as a second entry point. Chains (`f`, `f.`, `f..`) fold
/// into one function. Only canonical names are compared.
pub fn merge_fallthrough_entries(groups: Vec<AliasGroup>, image: &BinaryImage) -> (Vec<AliasGroup>, Vec<Diagnostic>) {
    let mut out: Vec<AliasGroup> = Vec::with_capacity(groups.len());
    let mut diags = Vec::new();
    for g in groups {
        if let Some(prev) = out.last_mut() {
            if is_fallthrough_twin(prev, &g, image) {
                diags.push(
                    Diagnostic::info(
                        DiagCode::MultiEntryMerged,
                        format!("{} merged into {} as a secondary entry point", g.name, prev.name),
                    )
                    .at(g.value, g.size),
                );
                prev.size = if g.size == 0 { 0 } else { g.value + g.size - prev.value };
                prev.entries.extend(g.entries);
                prev.entry_names.extend(g.entry_names);
                prev.aliases.push(g.name);
                prev.aliases.extend(g.aliases);
                prev.merged_alias |= g.merged_alias;
                continue;
            }
        }
        out.push(g);
    }
    (out, diags)
}

fn is_fallthrough_twin(a: &AliasGroup, b: &AliasGroup, image: &BinaryImage) -> bool {
    let tail = a.entry_names.last().unwrap_or(&a.name);
    let named = b.name.strip_suffix('.') == Some(tail.as_str());
    let adjacent = a.size != 0 && a.value.checked_add(a.size) == Some(b.value);
    named && adjacent && image.section_index_of(a.value).is_some() && image.section_index_of(a.value) == image.section_index_of(b.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Addr, Binding, Endianness, Machine, SectionRecord, WordSize};

    fn group(name: &str, value: Addr, size: u64) -> AliasGroup {
        AliasGroup {
            name: name.into(),
            value,
            size,
            binding: Binding::Local,
            section_index: Some(1),
            aliases: vec![],
            entries: vec![value],
            entry_names: vec![name.into()],
            merged_alias: false,
        }
    }

    fn image() -> BinaryImage {
        let sec = |name: &str, vaddr| SectionRecord {
            name: name.into(),
            vaddr,
            size: 0x100,
            executable: true,
            writable: false,
            allocated: true,
            file_offset: 0,
            file_backed: false,
        };
        let null = SectionRecord { allocated: false, size: 0, ..sec("", 0) };
        BinaryImage::from_parts("", WordSize::Bits32, Endianness::Little, Machine::X86, vec![null, sec(".text", 0x1000), sec(".more", 0x1100)], vec![], vec![])
    }

    #[test]
    fn adjacent_twin_and_chain_merge() {
        let groups = vec![group("f", 0x1000, 8), group("f.", 0x1008, 8), group("f..", 0x1010, 4), group("g", 0x1014, 4)];
        let (out, diags) = merge_fallthrough_entries(groups, &image());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].entries, [0x1000, 0x1008, 0x1010]);
        assert_eq!(out[0].size, 0x14);
        assert_eq!(out[0].aliases, ["f.", "f.."]);
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn gaps_sizes_and_sections_block_merging() {
        let img = image();
        let gap = vec![group("f", 0x1000, 8), group("f.", 0x1009, 8)];
        assert_eq!(merge_fallthrough_entries(gap, &img).0.len(), 2);
        let sizeless = vec![group("f", 0x1000, 0), group("f.", 0x1008, 8)];
        assert_eq!(merge_fallthrough_entries(sizeless, &img).0.len(), 2);
        let other_name = vec![group("f", 0x1000, 8), group("g.", 0x1008, 8)];
        assert_eq!(merge_fallthrough_entries(other_name, &img).0.len(), 2);
        let across = vec![group("f", 0x10f8, 8), group("f.", 0x1100, 8)];
        assert_eq!(merge_fallthrough_entries(across, &img).0.len(), 2);
    }

    #[test]
    fn unsized_twin_leaves_size_unknown() {
        let (out, _) = merge_fallthrough_entries(vec![group("f", 0x1000, 8), group("f.", 0x1008, 0)], &image());
        assert_eq!((out.len(), out[0].size), (1, 0));
    }
}
