//! Minimal DWARF emitter: one compile unit per description pass, line
//! program headers carrying only the file table.

use std::collections::HashMap;

use super::spec::{DwarfSpec, FixtureSpec, FunctionSpec, Quirk};
use crate::bytes::Writer;
use crate::dwarf::*;
use crate::model::Endianness;

const DW_INL_INLINED: u64 = 1;
const DW_OP_FBREG: u8 = 0x91;
const DW_UT_COMPILE: u8 = 1;

#[derive(Clone, Debug)]
enum Value {
    Str(String),
    Addr(u64),
    Data(u64),
    Flag(bool),
    FlagPresent,
    /// Stored in the abbreviation, not the DIE.
    Implicit(i64),
    Block(Vec<u8>),
    /// Unit-relative reference to the DIE with this id.
    Ref(usize),
}

#[derive(Clone, Debug)]
struct Die {
    tag: u64,
    id: Option<usize>,
    attrs: Vec<(u64, u64, Value)>,
    children: Vec<Die>,
}

impl Die {
    fn new(tag: u64) -> Self {
        Die { tag, id: None, attrs: Vec::new(), children: Vec::new() }
    }

    fn attr(mut self, at: u64, form: u64, v: Value) -> Self {
        self.attrs.push((at, form, v));
        self
    }
}

pub(super) struct DebugSections {
    pub abbrev: Vec<u8>,
    pub info: Vec<u8>,
    pub line: Vec<u8>,
}

/// Tag, children flag, and `(attribute, form, implicit constant)` triples.
type AbbrevKey = (u64, bool, Vec<(u64, u64, Option<i64>)>);

#[derive(Default)]
struct Abbrevs {
    codes: HashMap<AbbrevKey, u64>,
    order: Vec<AbbrevKey>,
}

impl Abbrevs {
    fn code(&mut self, die: &Die) -> u64 {
        let attrs = die
            .attrs
            .iter()
            .map(|(a, f, v)| (*a, *f, if let Value::Implicit(i) = v { Some(*i) } else { None }))
            .collect();
        let key = (die.tag, !die.children.is_empty(), attrs);
        if let Some(&c) = self.codes.get(&key) {
            return c;
        }
        let c = self.order.len() as u64 + 1;
        self.codes.insert(key.clone(), c);
        self.order.push(key);
        c
    }

    fn encode(&self, endian: Endianness) -> Vec<u8> {
        let mut w = Writer::new(endian);
        for (i, (tag, children, attrs)) in self.order.iter().enumerate() {
            w.uleb(i as u64 + 1);
            w.uleb(*tag);
            w.u8(u8::from(*children));
            for (a, f, implicit) in attrs {
                w.uleb(*a);
                w.uleb(*f);
                if let Some(i) = implicit {
                    w.sleb(*i);
                }
            }
            w.uleb(0);
            w.uleb(0);
        }
        w.uleb(0);
        w.buf
    }
}

pub(super) fn emit_debug(spec: &FixtureSpec, dwarf: &DwarfSpec) -> DebugSections {
    let endian = spec.endianness;
    let addr_size = spec.word_size.bytes();
    let described: Vec<&FunctionSpec> = spec.functions.iter().filter(|f| !f.has(&Quirk::NoDwarf)).collect();

    let mut files: Vec<String> = Vec::new();
    for f in &described {
        if let Some((file, _)) = &f.source {
            if !files.contains(file) {
                files.push(file.clone());
            }
        }
    }
    let line = line_header(dwarf, &files, addr_size, endian);

    let mut abbrevs = Abbrevs::default();
    let mut info = Writer::new(endian);
    let passes: Vec<Option<bool>> = if dwarf.twin_units { vec![Some(true), Some(false)] } else { vec![None] };
    for force_address in passes {
        let cu = compile_unit(spec, dwarf, &described, &files, force_address);
        write_unit(&mut info, &mut abbrevs, &cu, dwarf.version, addr_size);
    }
    let mut info = info.buf;
    if dwarf.duplicate_info {
        info.extend_from_within(..);
    }
    DebugSections { abbrev: abbrevs.encode(endian), info, line }
}

fn compile_unit(
    spec: &FixtureSpec,
    dwarf: &DwarfSpec,
    described: &[&FunctionSpec],
    files: &[String],
    force_address: Option<bool>,
) -> Die {
    let v = dwarf.version;
    let sec_off_form = if v >= 4 { DW_FORM_SEC_OFFSET } else { DW_FORM_DATA4 };
    let mut cu = Die::new(DW_TAG_COMPILE_UNIT)
        .attr(DW_AT_NAME, DW_FORM_STRING, Value::Str(format!("{}.c", spec.name)))
        .attr(DW_AT_COMP_DIR, DW_FORM_STRING, Value::Str(dwarf.producer_dir.clone()))
        .attr(DW_AT_STMT_LIST, sec_off_form, Value::Data(0));

    // Abstract instances of inlined callees come first so references resolve.
    let mut callees: Vec<&str> = described.iter().flat_map(|f| f.inlined.iter().map(|i| i.callee.as_str())).collect();
    callees.sort_unstable();
    callees.dedup();
    let mut callee_ids = HashMap::new();
    for (next_id, name) in callees.into_iter().enumerate() {
        let mut die = Die::new(DW_TAG_SUBPROGRAM)
            .attr(DW_AT_NAME, DW_FORM_STRING, Value::Str(name.into()))
            .attr(DW_AT_INLINE, DW_FORM_DATA1, Value::Data(DW_INL_INLINED));
        die.id = Some(next_id);
        callee_ids.insert(name, next_id);
        cu.children.push(die);
    }

    for f in described {
        let low = spec.function_start(f).expect("validated section");
        let len = f.body.len() as u64;
        let address_form = force_address.unwrap_or(f.has(&Quirk::DwarfHighPcAddress) || (v < 4 && !f.has(&Quirk::DwarfHighPcConstant)));
        let mut die = Die::new(DW_TAG_SUBPROGRAM)
            .attr(DW_AT_NAME, DW_FORM_STRING, Value::Str(f.name.clone()))
            .attr(DW_AT_LOW_PC, DW_FORM_ADDR, Value::Addr(low));
        die = if address_form {
            die.attr(DW_AT_HIGH_PC, DW_FORM_ADDR, Value::Addr(low + len))
        } else {
            die.attr(DW_AT_HIGH_PC, DW_FORM_DATA4, Value::Data(len))
        };
        if let Some((file, line)) = &f.source {
            let idx = files.iter().position(|x| x == file).expect("collected") as u64;
            die = if v >= 5 {
                die.attr(DW_AT_DECL_FILE, DW_FORM_IMPLICIT_CONST, Value::Implicit(idx as i64))
            } else {
                die.attr(DW_AT_DECL_FILE, DW_FORM_UDATA, Value::Data(idx + 1))
            };
            die = die.attr(DW_AT_DECL_LINE, DW_FORM_UDATA, Value::Data(*line));
        }
        if f.has(&Quirk::DwarfNoreturn) {
            die = if v >= 4 {
                die.attr(DW_AT_NORETURN, DW_FORM_FLAG_PRESENT, Value::FlagPresent)
            } else {
                die.attr(DW_AT_NORETURN, DW_FORM_FLAG, Value::Flag(true))
            };
        }
        for p in &f.params {
            let mut pd = Die::new(DW_TAG_FORMAL_PARAMETER).attr(DW_AT_NAME, DW_FORM_STRING, Value::Str(p.name.clone()));
            if p.located {
                let form = if v >= 4 { DW_FORM_EXPRLOC } else { DW_FORM_BLOCK1 };
                pd = pd.attr(DW_AT_LOCATION, form, Value::Block(vec![DW_OP_FBREG, 0]));
            }
            die.children.push(pd);
        }
        for inl in &f.inlined {
            let id = callee_ids[inl.callee.as_str()];
            die.children.push(
                Die::new(DW_TAG_INLINED_SUBROUTINE)
                    .attr(DW_AT_ABSTRACT_ORIGIN, DW_FORM_REF4, Value::Ref(id))
                    .attr(DW_AT_LOW_PC, DW_FORM_ADDR, Value::Addr(low + inl.offset))
                    .attr(DW_AT_HIGH_PC, DW_FORM_ADDR, Value::Addr(low + inl.offset + inl.len)),
            );
        }
        cu.children.push(die);
    }
    cu
}

fn write_unit(w: &mut Writer, abbrevs: &mut Abbrevs, cu: &Die, version: u16, addr_size: u8) {
    let unit_start = w.len();
    w.u32(0);
    w.u16(version);
    if version >= 5 {
        w.u8(DW_UT_COMPILE);
        w.u8(addr_size);
        w.u32(0);
    } else {
        w.u32(0);
        w.u8(addr_size);
    }
    let mut offsets = HashMap::new();
    let mut patches = Vec::new();
    write_die(w, abbrevs, cu, unit_start, addr_size, &mut offsets, &mut patches);
    for (pos, id) in patches {
        w.patch_u32(pos, offsets[&id]);
    }
    let len = (w.len() - unit_start - 4) as u32;
    w.patch_u32(unit_start, len);
}

fn write_die(
    w: &mut Writer,
    abbrevs: &mut Abbrevs,
    die: &Die,
    unit_start: usize,
    addr_size: u8,
    offsets: &mut HashMap<usize, u32>,
    patches: &mut Vec<(usize, usize)>,
) {
    if let Some(id) = die.id {
        offsets.insert(id, (w.len() - unit_start) as u32);
    }
    w.uleb(abbrevs.code(die));
    for (_, form, value) in &die.attrs {
        match (value, *form) {
            (Value::Str(s), _) => w.cstr(s),
            (Value::Addr(a), _) => w.uint(addr_size, *a),
            (Value::Data(d), DW_FORM_UDATA) => w.uleb(*d),
            (Value::Data(d), DW_FORM_DATA1) => w.u8(*d as u8),
            (Value::Data(d), DW_FORM_DATA2) => w.u16(*d as u16),
            (Value::Data(d), DW_FORM_DATA8) => w.u64(*d),
            (Value::Data(d), _) => w.u32(*d as u32),
            (Value::Flag(b), _) => w.u8(u8::from(*b)),
            (Value::FlagPresent | Value::Implicit(_), _) => {}
            (Value::Block(b), DW_FORM_EXPRLOC) => {
                w.uleb(b.len() as u64);
                w.bytes(b);
            }
            (Value::Block(b), _) => {
                w.u8(b.len() as u8);
                w.bytes(b);
            }
            (Value::Ref(id), _) => {
                patches.push((w.len(), *id));
                w.u32(0);
            }
        }
    }
    if !die.children.is_empty() {
        for c in &die.children {
            write_die(w, abbrevs, c, unit_start, addr_size, offsets, patches);
        }
        w.u8(0);
    }
}

/// A line program header with no opcodes after it.
fn line_header(dwarf: &DwarfSpec, files: &[String], addr_size: u8, endian: Endianness) -> Vec<u8> {
    let v = dwarf.version;
    let mut w = Writer::new(endian);
    w.u32(0);
    w.u16(v);
    if v >= 5 {
        w.u8(addr_size);
        w.u8(0);
    }
    let header_len_at = w.len();
    w.u32(0);
    let header_start = w.len();
    w.u8(1);
    if v >= 4 {
        w.u8(1);
    }
    w.u8(1);
    w.u8((-5i8) as u8);
    w.u8(14);
    w.u8(13);
    w.bytes(&[0, 1, 1, 1, 1, 0, 0, 0, 1, 0, 0, 1]);
    if v >= 5 {
        w.u8(1);
        w.uleb(DW_LNCT_PATH);
        w.uleb(DW_FORM_STRING);
        w.uleb(1);
        w.cstr(&dwarf.producer_dir);
        w.u8(2);
        w.uleb(DW_LNCT_PATH);
        w.uleb(DW_FORM_STRING);
        w.uleb(DW_LNCT_DIRECTORY_INDEX);
        w.uleb(DW_FORM_UDATA);
        w.uleb(files.len() as u64);
        for f in files {
            w.cstr(f);
            w.uleb(0);
        }
    } else {
        w.u8(0);
        for f in files {
            w.cstr(f);
            w.uleb(0);
            w.uleb(0);
            w.uleb(0);
        }
        w.u8(0);
    }
    let header_len = (w.len() - header_start) as u32;
    w.patch_u32(header_len_at, header_len);
    let total = (w.len() - 4) as u32;
    w.patch_u32(0, total);
    w.buf
}
