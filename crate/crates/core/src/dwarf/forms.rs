//! DWARF constants and the form table. Each form maps to how its value is
//! encoded and which attribute class it belongs to; supporting a new form is a
//! new table row.

pub const DW_TAG_FORMAL_PARAMETER: u64 = 0x05;
pub const DW_TAG_COMPILE_UNIT: u64 = 0x11;
pub const DW_TAG_INLINED_SUBROUTINE: u64 = 0x1d;
pub const DW_TAG_SUBPROGRAM: u64 = 0x2e;

pub const DW_AT_LOCATION: u64 = 0x02;
pub const DW_AT_NAME: u64 = 0x03;
pub const DW_AT_STMT_LIST: u64 = 0x10;
pub const DW_AT_LOW_PC: u64 = 0x11;
pub const DW_AT_HIGH_PC: u64 = 0x12;
pub const DW_AT_COMP_DIR: u64 = 0x1b;
pub const DW_AT_INLINE: u64 = 0x20;
pub const DW_AT_ABSTRACT_ORIGIN: u64 = 0x31;
pub const DW_AT_DECL_FILE: u64 = 0x3a;
pub const DW_AT_DECL_LINE: u64 = 0x3b;
pub const DW_AT_SPECIFICATION: u64 = 0x47;
pub const DW_AT_RANGES: u64 = 0x55;
pub const DW_AT_STR_OFFSETS_BASE: u64 = 0x72;
pub const DW_AT_ADDR_BASE: u64 = 0x73;
pub const DW_AT_RNGLISTS_BASE: u64 = 0x74;
pub const DW_AT_NORETURN: u64 = 0x87;
pub const DW_AT_GNU_ADDR_BASE: u64 = 0x2133;
pub const DW_AT_GNU_RANGES_BASE: u64 = 0x2132;

pub const DW_FORM_ADDR: u64 = 0x01;
pub const DW_FORM_BLOCK1: u64 = 0x0a;
pub const DW_FORM_DATA1: u64 = 0x0b;
pub const DW_FORM_DATA2: u64 = 0x05;
pub const DW_FORM_DATA4: u64 = 0x06;
pub const DW_FORM_DATA8: u64 = 0x07;
pub const DW_FORM_STRING: u64 = 0x08;
pub const DW_FORM_FLAG: u64 = 0x0c;
pub const DW_FORM_UDATA: u64 = 0x0f;
pub const DW_FORM_REF4: u64 = 0x13;
pub const DW_FORM_SEC_OFFSET: u64 = 0x17;
pub const DW_FORM_EXPRLOC: u64 = 0x18;
pub const DW_FORM_FLAG_PRESENT: u64 = 0x19;
pub const DW_FORM_IMPLICIT_CONST: u64 = 0x21;

pub const DW_LNCT_PATH: u64 = 0x1;
pub const DW_LNCT_DIRECTORY_INDEX: u64 = 0x2;

/// How a form's bytes are laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Fixed(u8),
    /// Target address size from the unit header.
    Address,
    /// 4 bytes in 32-bit DWARF, 8 in 64-bit DWARF.
    Offset,
    /// Address size in DWARF 2, offset size afterwards.
    RefAddr,
    Uleb,
    Sleb,
    CStr,
    Block1,
    Block2,
    Block4,
    BlockUleb,
    /// No bytes in the DIE (flag_present, implicit_const).
    Empty,
    Indirect,
}

/// Attribute class of a form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    Address,
    AddressIndex,
    Constant,
    SignedConstant,
    InlineString,
    StrOffset,
    LineStrOffset,
    StrIndex,
    /// Unit-relative reference.
    UnitRef,
    /// `.debug_info`-relative reference.
    InfoRef,
    /// Reference into another object file; not followed.
    ExternalRef,
    SecOffset,
    Block,
    Flag,
    FlagPresent,
    ImplicitConst,
    RngListIndex,
    LocListIndex,
    Indirect,
}

#[derive(Clone, Copy, Debug)]
pub struct FormSpec {
    pub code: u64,
    pub name: &'static str,
    pub encoding: Encoding,
    pub class: Class,
}

const fn f(code: u64, name: &'static str, encoding: Encoding, class: Class) -> FormSpec {
    FormSpec { code, name, encoding, class }
}

use Class as C;
use Encoding as E;

pub static FORMS: &[FormSpec] = &[
    f(0x01, "DW_FORM_addr", E::Address, C::Address),
    f(0x03, "DW_FORM_block2", E::Block2, C::Block),
    f(0x04, "DW_FORM_block4", E::Block4, C::Block),
    f(0x05, "DW_FORM_data2", E::Fixed(2), C::Constant),
    f(0x06, "DW_FORM_data4", E::Fixed(4), C::Constant),
    f(0x07, "DW_FORM_data8", E::Fixed(8), C::Constant),
    f(0x08, "DW_FORM_string", E::CStr, C::InlineString),
    f(0x09, "DW_FORM_block", E::BlockUleb, C::Block),
    f(0x0a, "DW_FORM_block1", E::Block1, C::Block),
    f(0x0b, "DW_FORM_data1", E::Fixed(1), C::Constant),
    f(0x0c, "DW_FORM_flag", E::Fixed(1), C::Flag),
    f(0x0d, "DW_FORM_sdata", E::Sleb, C::SignedConstant),
    f(0x0e, "DW_FORM_strp", E::Offset, C::StrOffset),
    f(0x0f, "DW_FORM_udata", E::Uleb, C::Constant),
    f(0x10, "DW_FORM_ref_addr", E::RefAddr, C::InfoRef),
    f(0x11, "DW_FORM_ref1", E::Fixed(1), C::UnitRef),
    f(0x12, "DW_FORM_ref2", E::Fixed(2), C::UnitRef),
    f(0x13, "DW_FORM_ref4", E::Fixed(4), C::UnitRef),
    f(0x14, "DW_FORM_ref8", E::Fixed(8), C::UnitRef),
    f(0x15, "DW_FORM_ref_udata", E::Uleb, C::UnitRef),
    f(0x16, "DW_FORM_indirect", E::Indirect, C::Indirect),
    f(0x17, "DW_FORM_sec_offset", E::Offset, C::SecOffset),
    f(0x18, "DW_FORM_exprloc", E::BlockUleb, C::Block),
    f(0x19, "DW_FORM_flag_present", E::Empty, C::FlagPresent),
    f(0x1a, "DW_FORM_strx", E::Uleb, C::StrIndex),
    f(0x1b, "DW_FORM_addrx", E::Uleb, C::AddressIndex),
    f(0x1c, "DW_FORM_ref_sup4", E::Fixed(4), C::ExternalRef),
    f(0x1d, "DW_FORM_strp_sup", E::Offset, C::ExternalRef),
    f(0x1e, "DW_FORM_data16", E::Fixed(16), C::Block),
    f(0x1f, "DW_FORM_line_strp", E::Offset, C::LineStrOffset),
    f(0x20, "DW_FORM_ref_sig8", E::Fixed(8), C::ExternalRef),
    f(0x21, "DW_FORM_implicit_const", E::Empty, C::ImplicitConst),
    f(0x22, "DW_FORM_loclistx", E::Uleb, C::LocListIndex),
    f(0x23, "DW_FORM_rnglistx", E::Uleb, C::RngListIndex),
    f(0x24, "DW_FORM_ref_sup8", E::Fixed(8), C::ExternalRef),
    f(0x25, "DW_FORM_strx1", E::Fixed(1), C::StrIndex),
    f(0x26, "DW_FORM_strx2", E::Fixed(2), C::StrIndex),
    f(0x27, "DW_FORM_strx3", E::Fixed(3), C::StrIndex),
    f(0x28, "DW_FORM_strx4", E::Fixed(4), C::StrIndex),
    f(0x29, "DW_FORM_addrx1", E::Fixed(1), C::AddressIndex),
    f(0x2a, "DW_FORM_addrx2", E::Fixed(2), C::AddressIndex),
    f(0x2b, "DW_FORM_addrx3", E::Fixed(3), C::AddressIndex),
    f(0x2c, "DW_FORM_addrx4", E::Fixed(4), C::AddressIndex),
    f(0x1f01, "DW_FORM_GNU_addr_index", E::Uleb, C::AddressIndex),
    f(0x1f02, "DW_FORM_GNU_str_index", E::Uleb, C::StrIndex),
    f(0x1f20, "DW_FORM_GNU_ref_alt", E::Offset, C::ExternalRef),
    f(0x1f21, "DW_FORM_GNU_strp_alt", E::Offset, C::ExternalRef),
];

pub fn form_spec(code: u64) -> Option<&'static FormSpec> {
    FORMS.iter().find(|s| s.code == code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn form_codes_are_unique() {
        let mut codes: Vec<u64> = FORMS.iter().map(|f| f.code).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), FORMS.len());
    }

    #[test]
    fn high_pc_forms_classify() {
        assert_eq!(form_spec(DW_FORM_ADDR).unwrap().class, Class::Address);
        assert_eq!(form_spec(DW_FORM_DATA4).unwrap().class, Class::Constant);
        assert_eq!(form_spec(0x29).unwrap().class, Class::AddressIndex);
        assert!(form_spec(0x7777).is_none());
    }
}
