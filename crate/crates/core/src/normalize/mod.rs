//! Symbols and debug records in, canonical ground truth out.
//!
//! Every step that alters or discards data leaves exactly one diagnostic
//! behind, so a document can always be traced back to the symbols it came
//! from.

mod alias;
mod boundary;
mod entries;
mod padding;
mod special;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::byteclass::{classify_bytes_with, ByteClassMap};
use crate::datafile::{default_noreturn_seeds, default_scaffold_names};
use crate::dwarf::{extract_debug_functions, DebugFunctionRecord};
use crate::elf::function_symbols;
use crate::model::{
    Addr, BinaryImage, ContentDigest, DiagCode, Diagnostic, Machine, Severity, SymbolRecord, WordSize,
};

pub use alias::{dedupe_aliases, AliasGroup};
pub use boundary::resolve_boundaries;
pub use entries::merge_fallthrough_entries;
pub use padding::{trim_padding, PadToken, PaddingAlphabet, TrimError};
pub use special::{
    annotate_noreturn, cluster_specializations, specialization_base, specialization_groups,
    tag_compiler_inserted, tag_uncalled,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    MultiEntry,
    MergedAlias,
    CompilerInserted,
    Noreturn,
    Uncalled,
    Specialized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Symtab,
    Dwarf,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceLoc {
    pub file: String,
    pub line: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthFunction {
    #[serde(rename = "name")]
    pub canonical_name: String,
    #[serde(rename = "entries", with = "crate::serde_hex::addrs")]
    pub entry_points: Vec<Addr>,
    #[serde(with = "crate::serde_hex::addr")]
    pub start: Addr,
    #[serde(rename = "end_raw", with = "crate::serde_hex::addr")]
    pub end_exclusive_raw: Addr,
    #[serde(rename = "end_trimmed", with = "crate::serde_hex::addr")]
    pub end_exclusive_trimmed: Addr,
    pub aliases: Vec<String>,
    #[serde(rename = "group")]
    pub specialization_group: Option<String>,
    pub flags: BTreeSet<Flag>,
    pub provenance: BTreeSet<Provenance>,
    pub source: Option<SourceLoc>,
}

impl GroundTruthFunction {
    pub fn trimmed_size(&self) -> u64 {
        self.end_exclusive_trimmed - self.start
    }

    pub fn raw_size(&self) -> u64 {
        self.end_exclusive_raw - self.start
    }

    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryInfo {
    pub path: String,
    #[serde(rename = "digest_hex")]
    pub digest: ContentDigest,
    pub word_size: WordSize,
    pub machine: Machine,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruthDocument {
    pub binary: BinaryInfo,
    pub functions: Vec<GroundTruthFunction>,
    pub byte_classes: ByteClassMap,
    pub diagnostics: Vec<Diagnostic>,
    pub complete: bool,
}

impl GroundTruthDocument {
    pub fn function_at(&self, start: Addr) -> Option<&GroundTruthFunction> {
        self.functions
            .binary_search_by_key(&start, |f| f.start)
            .ok()
            .map(|i| &self.functions[i])
    }

    pub fn count(&self, code: DiagCode) -> usize {
        self.diagnostics.iter().filter(|d| d.code == code).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizeConfig {
    pub merge_multi_entry: bool,
    pub noreturn_seeds: BTreeSet<String>,
    pub scaffold_names: BTreeSet<String>,
    /// Largest tolerated distance between a debug record's start and the
    /// symbol-table start it is matched to.
    pub start_tolerance: u64,
    /// `(caller site, callee)` pairs; when present, enables `uncalled` flags.
    pub call_edges: Option<Vec<(Addr, Addr)>>,
    /// Overrides the machine's padding alphabet.
    pub padding: Option<PaddingAlphabet>,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig {
            merge_multi_entry: true,
            noreturn_seeds: default_noreturn_seeds(),
            scaffold_names: default_scaffold_names(),
            start_tolerance: 0,
            call_edges: None,
            padding: None,
        }
    }
}

/// Reads debug info from the image and builds its ground truth. Parse and
/// debug-info diagnostics are carried into the document.
pub fn extract_ground_truth(image: &BinaryImage, config: &NormalizeConfig) -> GroundTruthDocument {
    let (records, debug_diags) = extract_debug_functions(image);
    let mut doc = build_ground_truth(image, &records, config);
    let at = image.diagnostics.len();
    doc.diagnostics.splice(at..at, debug_diags);
    doc
}

/// The full normalization pipeline. Never fails: problems become
/// diagnostics, and untrustworthy input yields `complete = false`.
pub fn build_ground_truth(
    image: &BinaryImage,
    debug_records: &[DebugFunctionRecord],
    config: &NormalizeConfig,
) -> GroundTruthDocument {
    let mut diags = image.diagnostics.clone();
    let alphabet = config.padding.clone().unwrap_or_else(|| PaddingAlphabet::for_machine(image.machine));

    // Missing sizes are reported once, by boundary resolution.
    let (symbols, _) = function_symbols(image);
    let symbol_count = symbols.len();
    let symbols: Vec<SymbolRecord> = symbols
        .into_iter()
        .filter(|s| {
            let exec = image.section_of(s.value).is_some_and(|sec| sec.executable);
            if !exec {
                diags.push(
                    Diagnostic::warning(
                        DiagCode::FuncOutsideExec,
                        format!("function symbol {} is outside executable code; dropped", s.name),
                    )
                    .at(s.value, s.size),
                );
            }
            exec
        })
        .collect();

    let (groups, d) = dedupe_aliases(&symbols);
    diags.extend(d);
    let groups = if config.merge_multi_entry {
        let (g, d) = merge_fallthrough_entries(groups, image);
        diags.extend(d);
        g
    } else {
        groups
    };
    let (ends, d) = resolve_boundaries(&groups, image);
    diags.extend(d);

    let mut functions = Vec::with_capacity(groups.len());
    for (g, end_raw) in groups.into_iter().zip(ends) {
        let end_trimmed = match trim_padding(g.value, end_raw, &g.entries, image, &alphabet) {
            Ok(end) => {
                if end < end_raw {
                    diags.push(
                        Diagnostic::info(
                            DiagCode::PaddingTrimmed,
                            format!("{} trailing padding of {} bytes trimmed", g.name, end_raw - end),
                        )
                        .at(end, end_raw - end),
                    );
                }
                end
            }
            Err(e) => {
                diags.push(Diagnostic::error(DiagCode::IncompleteExcluded, format!("{}: {e}", g.name)).at(g.value, end_raw - g.value));
                end_raw
            }
        };
        let mut flags = BTreeSet::new();
        if g.entries.len() > 1 {
            flags.insert(Flag::MultiEntry);
        }
        if g.merged_alias {
            flags.insert(Flag::MergedAlias);
        }
        functions.push(GroundTruthFunction {
            canonical_name: g.name,
            start: g.value,
            entry_points: g.entries,
            end_exclusive_raw: end_raw,
            end_exclusive_trimmed: end_trimmed,
            aliases: g.aliases,
            specialization_group: None,
            flags,
            provenance: BTreeSet::from([Provenance::Symtab]),
            source: None,
        });
    }

    cluster_specializations(&mut functions);

    let located: Vec<&DebugFunctionRecord> = debug_records
        .iter()
        .filter(|r| !r.is_inlined_copy && image.section_of(r.low_pc).is_some_and(|s| s.executable))
        .collect();
    let matched: Vec<Option<&DebugFunctionRecord>> = functions
        .iter()
        .map(|f| match_record(f, &located, config.start_tolerance))
        .collect();
    for (f, rec) in functions.iter_mut().zip(&matched) {
        if let Some(r) = rec {
            f.provenance.insert(Provenance::Dwarf);
            f.source = r.decl_file.clone().map(|file| SourceLoc { file, line: r.decl_line });
        }
    }
    annotate_noreturn(&mut functions, &matched, &config.noreturn_seeds);
    tag_compiler_inserted(&mut functions, &matched, !located.is_empty(), &config.scaffold_names);
    if let Some(edges) = &config.call_edges {
        tag_uncalled(&mut functions, edges);
    }

    let byte_classes = match classify_bytes_with(image, &functions, &alphabet) {
        Ok(map) => map,
        Err(e) => {
            diags.push(Diagnostic::error(DiagCode::IncompleteExcluded, e.to_string()));
            ByteClassMap::default()
        }
    };

    check_completeness(image, symbol_count, &functions, &located, config.start_tolerance, &mut diags);
    let complete = !diags
        .iter()
        .any(|d| d.code == DiagCode::IncompleteExcluded && d.severity == Severity::Error);

    GroundTruthDocument {
        binary: BinaryInfo {
            path: image.source_path.clone(),
            digest: image.content_digest,
            word_size: image.word_size,
            machine: image.machine,
        },
        functions,
        byte_classes,
        diagnostics: diags,
        complete,
    }
}

fn match_record<'a>(
    f: &GroundTruthFunction,
    records: &[&'a DebugFunctionRecord],
    tolerance: u64,
) -> Option<&'a DebugFunctionRecord> {
    let exact = records.iter().find(|r| f.entry_points.contains(&r.low_pc));
    exact
        .or_else(|| {
            records
                .iter()
                .filter(|r| r.low_pc >= f.start && r.low_pc < f.end_exclusive_raw)
                .find(|r| f.entry_points.iter().any(|&e| e.abs_diff(r.low_pc) <= tolerance))
        })
        .copied()
}

fn check_completeness(
    image: &BinaryImage,
    symbol_count: usize,
    functions: &[GroundTruthFunction],
    records: &[&DebugFunctionRecord],
    tolerance: u64,
    diags: &mut Vec<Diagnostic>,
) {
    if image.has_code() && (symbol_count == 0 || functions.is_empty()) {
        diags.push(Diagnostic::error(
            DiagCode::IncompleteExcluded,
            "binary has executable code but no usable function symbols",
        ));
        return;
    }
    let mut disagreements = 0;
    for r in records {
        let owner = functions
            .iter()
            .find(|f| r.low_pc >= f.start && r.low_pc < f.end_exclusive_raw);
        match owner {
            None => {
                disagreements += 1;
                diags.push(
                    Diagnostic::warning(
                        DiagCode::MissingSymbol,
                        format!("debug info describes {} but no function symbol covers it", r.name),
                    )
                    .at(r.low_pc, r.end_exclusive.saturating_sub(r.low_pc)),
                );
            }
            Some(f) if !f.entry_points.iter().any(|&e| e.abs_diff(r.low_pc) <= tolerance) => {
                disagreements += 1;
                diags.push(
                    Diagnostic::warning(
                        DiagCode::StartMismatch,
                        format!(
                            "debug info starts {} at {:#x}, symbol table starts {} at {:#x}",
                            r.name, r.low_pc, f.canonical_name, f.start
                        ),
                    )
                    .at(r.low_pc, r.end_exclusive.saturating_sub(r.low_pc)),
                );
            }
            Some(_) => {}
        }
    }
    if disagreements > 0 {
        diags.push(Diagnostic::error(
            DiagCode::IncompleteExcluded,
            format!("symbol table and debug info disagree on {disagreements} function(s)"),
        ));
    }
}
