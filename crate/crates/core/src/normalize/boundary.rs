use super::alias::AliasGroup;
use crate::model::{Addr, BinaryImage, DiagCode, Diagnostic};

/// Raw exclusive end of each group: the declared end, clamped to the next
/// group's start and to the end of the containing section. Groups must be
/// address-sorted and lie in allocated sections.
pub fn resolve_boundaries(groups: &[AliasGroup], image: &BinaryImage) -> (Vec<Addr>, Vec<Diagnostic>) {
    let mut ends = Vec::with_capacity(groups.len());
    let mut diags = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        let next = groups.get(i + 1).map_or(Addr::MAX, |n| n.value);
        let section_end = image.section_of(g.value).map_or(Addr::MAX, |s| s.end());
        let limit = next.min(section_end);
        let end = if g.size == 0 {
            diags.push(
                Diagnostic::warning(
                    DiagCode::MissingSize,
                    format!("{} has no size; end taken from the next boundary", g.name),
                )
                .at(g.value, limit - g.value),
            );
            limit
        } else {
            let declared = g.value.saturating_add(g.size);
            if declared > limit {
                let what = if next <= section_end { "the next function" } else { "its section end" };
                diags.push(
                    Diagnostic::warning(
                        DiagCode::SizeOverlap,
                        format!("{} declared size {:#x} crosses {what}; clamped", g.name, g.size),
                    )
                    .at(g.value, limit - g.value),
                );
                limit
            } else {
                declared
            }
        };
        ends.push(end);
    }
    (ends, diags)
}
