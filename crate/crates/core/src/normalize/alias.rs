use crate::model::{Addr, Binding, DiagCode, Diagnostic, SymbolRecord};

/// One or more function symbols folded into a single function candidate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AliasGroup {
    pub name: String,
    pub value: Addr,
    /// Largest declared size among the members; 0 when all are unknown.
    pub size: u64,
    pub binding: Binding,
    pub section_index: Option<usize>,
    pub aliases: Vec<String>,
    /// Entry addresses (sorted), and the symbol name at each.
    pub entries: Vec<Addr>,
    pub entry_names: Vec<String>,
    pub merged_alias: bool,
}

/// Groups symbols that share an address. The canonical name prefers global
/// over weak over local binding, then the lexicographically smallest name.
pub fn dedupe_aliases(symbols: &[SymbolRecord]) -> (Vec<AliasGroup>, Vec<Diagnostic>) {
    let mut sorted: Vec<&SymbolRecord> = symbols.iter().collect();
    sorted.sort_by(|a, b| (a.value, a.binding, &a.name).cmp(&(b.value, b.binding, &b.name)).then_with(|| a.cmp(b)));

    let mut groups = Vec::new();
    let mut diags = Vec::new();
    for run in sorted.chunk_by(|a, b| a.value == b.value) {
        let head = run[0];
        let mut aliases: Vec<String> = run[1..].iter().map(|s| s.name.clone()).filter(|n| *n != head.name).collect();
        aliases.sort();
        aliases.dedup();
        let size = run.iter().map(|s| s.size).max().unwrap_or(0);
        if !aliases.is_empty() {
            diags.push(
                Diagnostic::info(
                    DiagCode::AliasMerged,
                    format!("{} merged as alias of {}", aliases.join(", "), head.name),
                )
                .at(head.value, size),
            );
        }
        groups.push(AliasGroup {
            name: head.name.clone(),
            value: head.value,
            size,
            binding: head.binding,
            section_index: head.section_index,
            merged_alias: !aliases.is_empty(),
            aliases,
            entries: vec![head.value],
            entry_names: vec![head.name.clone()],
        });
    }
    (groups, diags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SymbolKind;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn sym(name: &str, value: Addr, binding: Binding) -> SymbolRecord {
        SymbolRecord { name: name.into(), value, size: 4, kind: SymbolKind::Function, binding, section_index: Some(1) }
    }

    #[test]
    fn global_beats_weak() {
        let (g, d) = dedupe_aliases(&[sym("open", 0x5000, Binding::Weak), sym("open64", 0x5000, Binding::Global)]);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].name, "open64");
        assert_eq!(g[0].aliases, vec!["open".to_string()]);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::AliasMerged);
    }

    #[test]
    fn same_binding_is_lexicographic() {
        let (g, _) = dedupe_aliases(&[sym("b", 1, Binding::Local), sym("a", 1, Binding::Local)]);
        assert_eq!(g[0].name, "a");
    }

    #[test]
    fn distinct_addresses_stay_apart() {
        let (g, d) = dedupe_aliases(&[sym("a", 1, Binding::Global), sym("b", 2, Binding::Global)]);
        assert_eq!(g.len(), 2);
        assert!(d.is_empty());
    }

    proptest! {
        #[test]
        fn one_group_per_address(syms in proptest::collection::vec((0u64..8, 0u8..3, "[a-d]{1,2}"), 0..30)) {
            let input: Vec<SymbolRecord> = syms
                .iter()
                .map(|(v, b, n)| sym(n, *v, [Binding::Global, Binding::Weak, Binding::Local][*b as usize]))
                .collect();
            let (groups, diags) = dedupe_aliases(&input);
            let distinct: BTreeSet<Addr> = input.iter().map(|s| s.value).collect();
            prop_assert_eq!(groups.len(), distinct.len());
            for g in &groups {
                let members: Vec<&SymbolRecord> = input.iter().filter(|s| s.value == g.value).collect();
                let best = members.iter().map(|s| s.binding).min().unwrap();
                prop_assert_eq!(g.binding, best);
                let expect = members.iter().filter(|s| s.binding == best).map(|s| &s.name).min().unwrap();
                prop_assert_eq!(&g.name, expect);
            }
            prop_assert_eq!(diags.len(), groups.iter().filter(|g| !g.aliases.is_empty()).count());
        }
    }
}
