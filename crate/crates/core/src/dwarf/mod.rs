//! Function-level records from DWARF: out-of-line subprograms, inlined
//! copies, their parameters and `noreturn` attributes.
//!
//! High PC values are normalized here: an address-class high PC is used as
//! is, a constant-class one is an offset from low PC. Either way the result
//! is the first byte past the function.

mod forms;
mod line;
mod reader;

use thiserror::Error;

use crate::model::{Addr, BinaryImage, DiagCode, Diagnostic, WordSize};

pub use forms::{form_spec, Class as AttrClass, Encoding as FormEncoding, FormSpec, FORMS};
pub(crate) use forms::*;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParameterRecord {
    pub name: Option<String>,
    pub declared: bool,
    /// A location description exists, so the parameter is materially present.
    pub has_location: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DebugFunctionRecord {
    pub low_pc: Addr,
    pub end_exclusive: Addr,
    pub name: String,
    pub decl_file: Option<String>,
    pub decl_line: Option<u64>,
    pub noreturn: bool,
    pub is_inlined_copy: bool,
    pub parameters: Vec<ParameterRecord>,
}

impl DebugFunctionRecord {
    pub fn contains(&self, addr: Addr) -> bool {
        addr >= self.low_pc && addr < self.end_exclusive
    }
}

/// Which attribute class a high PC was encoded with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HighPcForm {
    Address,
    Constant,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DwarfError {
    #[error("high PC {low_pc:#x} + {value:#x} overflows a {bits}-bit address")]
    Overflow { low_pc: Addr, value: u64, bits: u32 },
    #[error("malformed debug data: {0}")]
    MalformedDebugData(String),
}

/// Exclusive end address of a function from its low PC and high PC value,
/// with 64-bit address arithmetic.
pub fn resolve_high_pc(low_pc: Addr, form: HighPcForm, value: u64) -> Result<Addr, DwarfError> {
    resolve_high_pc_for(WordSize::Bits64, low_pc, form, value)
}

/// As [`resolve_high_pc`], overflowing at the given address width.
pub fn resolve_high_pc_for(
    width: WordSize,
    low_pc: Addr,
    form: HighPcForm,
    value: u64,
) -> Result<Addr, DwarfError> {
    match form {
        HighPcForm::Address => Ok(value),
        HighPcForm::Constant => low_pc
            .checked_add(value)
            .filter(|&end| width == WordSize::Bits64 || end <= 1 << 32)
            .ok_or(DwarfError::Overflow { low_pc, value, bits: width.bits() }),
    }
}

/// `(declared, located)` parameter counts. The located count is the
/// ground-truth parameter count: optimized-away parameters do not exist in
/// the binary.
pub fn parameter_summary(record: &DebugFunctionRecord) -> (usize, usize) {
    let declared = record.parameters.iter().filter(|p| p.declared).count();
    let located = record
        .parameters
        .iter()
        .filter(|p| p.declared && p.has_location)
        .count();
    (declared, located)
}

/// Records from one compilation unit, before cross-unit deduplication.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DebugUnit {
    pub offset: u64,
    pub version: u16,
    pub records: Vec<DebugFunctionRecord>,
    /// High PC encodings seen on records of this unit, in DIE order.
    pub high_pc_forms: Vec<HighPcForm>,
}

/// Per-unit extraction. Malformed units yield the records read so far plus
/// an error diagnostic.
pub fn extract_debug_units(image: &BinaryImage) -> (Vec<DebugUnit>, Vec<Diagnostic>) {
    reader::read_units(image)
}

/// All function records in the image, sorted and deduplicated, with
/// diagnostics for absent debug info and records outside executable code.
pub fn extract_debug_functions(image: &BinaryImage) -> (Vec<DebugFunctionRecord>, Vec<Diagnostic>) {
    let (units, mut diags) = extract_debug_units(image);
    let mut records: Vec<DebugFunctionRecord> =
        units.into_iter().flat_map(|u| u.records).collect();
    records.sort();
    records.dedup();
    for r in records.iter().filter(|r| !r.is_inlined_copy) {
        let in_exec = image.section_of(r.low_pc).is_some_and(|s| s.executable);
        if !in_exec {
            diags.push(
                Diagnostic::warning(
                    DiagCode::DebugOutsideExec,
                    format!("debug record {} starts outside executable code", r.name),
                )
                .at(r.low_pc, r.end_exclusive.saturating_sub(r.low_pc)),
            );
        }
    }
    (records, diags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_high_pc_is_relative() {
        assert_eq!(resolve_high_pc(0x1000, HighPcForm::Constant, 0x40), Ok(0x1040));
        assert_eq!(resolve_high_pc(0x1000, HighPcForm::Constant, 0), Ok(0x1000));
        assert_eq!(resolve_high_pc(0x1000, HighPcForm::Address, 0x1040), Ok(0x1040));
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(
            resolve_high_pc(u64::MAX - 1, HighPcForm::Constant, 4),
            Err(DwarfError::Overflow { .. })
        ));
        assert!(matches!(
            resolve_high_pc_for(WordSize::Bits32, 0xffff_fff0, HighPcForm::Constant, 0x20),
            Err(DwarfError::Overflow { bits: 32, .. })
        ));
        // A function ending exactly at the top of the 32-bit space is fine.
        assert_eq!(
            resolve_high_pc_for(WordSize::Bits32, 0xffff_fff0, HighPcForm::Constant, 0x10),
            Ok(0x1_0000_0000)
        );
    }

    fn record(params: &[(bool, bool)]) -> DebugFunctionRecord {
        DebugFunctionRecord {
            low_pc: 0,
            end_exclusive: 1,
            name: "f".into(),
            decl_file: None,
            decl_line: None,
            noreturn: false,
            is_inlined_copy: false,
            parameters: params
                .iter()
                .map(|&(declared, has_location)| ParameterRecord { name: None, declared, has_location })
                .collect(),
        }
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(parameter_summary(&record(&[(true, true); 4])), (4, 4));
        // Radix folded into the specialization: declared but no location.
        assert_eq!(parameter_summary(&record(&[(true, false), (true, true)])), (2, 1));
        assert_eq!(parameter_summary(&record(&[])), (0, 0));
    }

    proptest! {
        #[test]
        fn constant_equals_address_twin(low in 0u64..u64::MAX / 2, len in 0u64..u64::MAX / 2) {
            prop_assert_eq!(
                resolve_high_pc(low, HighPcForm::Constant, len),
                resolve_high_pc(low, HighPcForm::Address, low + len)
            );
        }

        #[test]
        fn parameter_counts_match_recount(params in proptest::collection::vec(any::<bool>(), 0..12)) {
            let rec = record(&params.iter().map(|&loc| (true, loc)).collect::<Vec<_>>());
            let mut located = 0;
            for p in &params {
                if *p {
                    located += 1;
                }
            }
            prop_assert_eq!(parameter_summary(&rec), (params.len(), located));
        }
    }
}
