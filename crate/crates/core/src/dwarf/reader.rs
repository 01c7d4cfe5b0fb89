use std::collections::HashMap;

use super::forms::*;
use super::line::FileTable;
use super::{resolve_high_pc_for, DebugFunctionRecord, DebugUnit, HighPcForm, ParameterRecord};
use crate::bytes::{str_at, Cursor};
use crate::model::{BinaryImage, DiagCode, Diagnostic, Endianness, WordSize};

const MAX_ORIGIN_DEPTH: usize = 16;

type Result<T> = std::result::Result<T, String>;

fn short(what: &str) -> String {
    format!("{what} extends past end of section")
}

pub(super) struct Sections<'a> {
    pub info: &'a [u8],
    pub abbrev: &'a [u8],
    pub str: &'a [u8],
    pub line_str: &'a [u8],
    pub line: &'a [u8],
    pub addr: &'a [u8],
    pub str_offsets: &'a [u8],
    pub ranges: &'a [u8],
    pub rnglists: &'a [u8],
    pub endian: Endianness,
}

impl<'a> Sections<'a> {
    fn from_image(image: &'a BinaryImage) -> Self {
        let get = |name: &str| {
            image
                .section_by_name(name)
                .map(|s| image.section_data(s))
                .unwrap_or(&[])
        };
        Sections {
            info: get(".debug_info"),
            abbrev: get(".debug_abbrev"),
            str: get(".debug_str"),
            line_str: get(".debug_line_str"),
            line: get(".debug_line"),
            addr: get(".debug_addr"),
            str_offsets: get(".debug_str_offsets"),
            ranges: get(".debug_ranges"),
            rnglists: get(".debug_rnglists"),
            endian: image.endianness,
        }
    }

    fn cursor(&self, data: &'a [u8], pos: usize) -> Cursor<'a> {
        Cursor::at(data, pos, self.endian)
    }
}

#[derive(Clone, Debug)]
struct AbbrevAttr {
    at: u64,
    form: u64,
    implicit: i64,
}

#[derive(Clone, Debug)]
struct Abbrev {
    tag: u64,
    has_children: bool,
    attrs: Vec<AbbrevAttr>,
}

fn parse_abbrevs(secs: &Sections<'_>, offset: u64) -> Result<HashMap<u64, Abbrev>> {
    let start = usize::try_from(offset).map_err(|_| "abbrev offset too large".to_string())?;
    if start >= secs.abbrev.len() {
        return Err(format!("abbrev offset {offset:#x} outside .debug_abbrev"));
    }
    let mut c = secs.cursor(secs.abbrev, start);
    let mut table = HashMap::new();
    loop {
        let code = c.uleb().ok_or_else(|| short("abbrev table"))?;
        if code == 0 {
            return Ok(table);
        }
        let tag = c.uleb().ok_or_else(|| short("abbrev"))?;
        let has_children = c.u8().ok_or_else(|| short("abbrev"))? != 0;
        let mut attrs = Vec::new();
        loop {
            let at = c.uleb().ok_or_else(|| short("abbrev attribute"))?;
            let form = c.uleb().ok_or_else(|| short("abbrev attribute"))?;
            if at == 0 && form == 0 {
                break;
            }
            let implicit = if form == DW_FORM_IMPLICIT_CONST {
                c.sleb().ok_or_else(|| short("implicit const"))?
            } else {
                0
            };
            attrs.push(AbbrevAttr { at, form, implicit });
        }
        table.insert(code, Abbrev { tag, has_children, attrs });
    }
}

#[derive(Clone, Debug)]
struct UnitHeader {
    offset: usize,
    end: usize,
    version: u16,
    addr_size: u8,
    offset_size: u8,
    abbrev_offset: u64,
    die_start: usize,
    skip: bool,
}

fn parse_unit_header(secs: &Sections<'_>, offset: usize) -> Result<UnitHeader> {
    let mut c = secs.cursor(secs.info, offset);
    let mut length = u64::from(c.u32().ok_or_else(|| short("unit length"))?);
    let mut offset_size = 4u8;
    if length == 0xffff_ffff {
        length = c.u64().ok_or_else(|| short("unit length"))?;
        offset_size = 8;
    } else if length >= 0xffff_fff0 {
        return Err(format!("reserved unit length {length:#x}"));
    }
    let body = c.pos();
    let end = usize::try_from(length)
        .ok()
        .and_then(|l| body.checked_add(l))
        .filter(|&e| e <= secs.info.len())
        .ok_or_else(|| format!("unit at {offset:#x} extends past .debug_info"))?;
    let version = c.u16().ok_or_else(|| short("unit version"))?;
    let (abbrev_offset, addr_size, skip);
    match version {
        2..=4 => {
            abbrev_offset = c.uint(offset_size).ok_or_else(|| short("unit header"))?;
            addr_size = c.u8().ok_or_else(|| short("unit header"))?;
            skip = false;
        }
        5 => {
            let unit_type = c.u8().ok_or_else(|| short("unit header"))?;
            addr_size = c.u8().ok_or_else(|| short("unit header"))?;
            abbrev_offset = c.uint(offset_size).ok_or_else(|| short("unit header"))?;
            match unit_type {
                // compile, partial
                1 | 3 => skip = false,
                // skeleton, split_compile
                4 | 5 => {
                    c.skip(8).ok_or_else(|| short("unit header"))?;
                    skip = false;
                }
                // type units
                2 | 6 => skip = true,
                other => return Err(format!("unknown unit type {other:#x}")),
            }
        }
        v => return Err(format!("unsupported DWARF version {v}")),
    }
    if !matches!(addr_size, 4 | 8) {
        return Err(format!("unsupported address size {addr_size}"));
    }
    Ok(UnitHeader {
        offset,
        end,
        version,
        addr_size,
        offset_size,
        abbrev_offset,
        die_start: c.pos(),
        skip,
    })
}

/// A raw attribute value before string/address/reference resolution.
#[derive(Clone, Debug)]
enum Raw {
    U(u64),
    I(i64),
    S(String),
    Block(u64),
}

#[derive(Clone, Debug, PartialEq)]
enum Val {
    Addr(u64),
    Const(u64),
    Signed(i64),
    Str(String),
    Ref(usize),
    SecOff(u64),
    Block(u64),
    Flag(bool),
    RngIdx(u64),
    LocIdx(u64),
    Unresolved,
}

#[derive(Clone, Debug)]
struct Attr {
    at: u64,
    class: Class,
    val: Val,
}

fn read_raw(
    c: &mut Cursor<'_>,
    hdr: &UnitHeader,
    form: u64,
    implicit: i64,
    depth: u8,
) -> Result<(Class, Raw)> {
    let spec = form_spec(form).ok_or_else(|| format!("unknown form {form:#x}"))?;
    let bad = || short(spec.name);
    let raw = match spec.encoding {
        Encoding::Fixed(16) => {
            c.skip(16).ok_or_else(bad)?;
            Raw::Block(16)
        }
        Encoding::Fixed(n) => Raw::U(c.uint(n).ok_or_else(bad)?),
        Encoding::Address => Raw::U(c.uint(hdr.addr_size).ok_or_else(bad)?),
        Encoding::Offset => Raw::U(c.uint(hdr.offset_size).ok_or_else(bad)?),
        Encoding::RefAddr => {
            let size = if hdr.version == 2 { hdr.addr_size } else { hdr.offset_size };
            Raw::U(c.uint(size).ok_or_else(bad)?)
        }
        Encoding::Uleb => Raw::U(c.uleb().ok_or_else(bad)?),
        Encoding::Sleb => Raw::I(c.sleb().ok_or_else(bad)?),
        Encoding::CStr => Raw::S(String::from_utf8_lossy(c.cstr().ok_or_else(bad)?).into_owned()),
        Encoding::Block1 => block(c, |c| c.u8().map(u64::from)).ok_or_else(bad)?,
        Encoding::Block2 => block(c, |c| c.u16().map(u64::from)).ok_or_else(bad)?,
        Encoding::Block4 => block(c, |c| c.u32().map(u64::from)).ok_or_else(bad)?,
        Encoding::BlockUleb => block(c, |c| c.uleb()).ok_or_else(bad)?,
        Encoding::Empty => match spec.class {
            Class::ImplicitConst => Raw::I(implicit),
            _ => Raw::U(1),
        },
        Encoding::Indirect => {
            if depth > 4 {
                return Err("nested DW_FORM_indirect".into());
            }
            let actual = c.uleb().ok_or_else(bad)?;
            return read_raw(c, hdr, actual, implicit, depth + 1);
        }
    };
    Ok((spec.class, raw))
}

fn block(c: &mut Cursor<'_>, len: impl FnOnce(&mut Cursor<'_>) -> Option<u64>) -> Option<Raw> {
    let n = len(c)?;
    c.skip(n)?;
    Some(Raw::Block(n))
}

#[derive(Clone, Debug, Default)]
struct UnitCtx {
    addr_base: Option<u64>,
    str_offsets_base: Option<u64>,
    rnglists_base: Option<u64>,
    base_address: u64,
    files: Option<FileTable>,
}

struct Resolver<'s, 'a> {
    secs: &'s Sections<'a>,
    hdr: &'s UnitHeader,
    ctx: &'s UnitCtx,
}

impl Resolver<'_, '_> {
    fn resolve(&self, class: Class, raw: Raw) -> Val {
        let u = |raw: &Raw| match raw {
            Raw::U(v) => *v,
            Raw::I(v) => *v as u64,
            _ => 0,
        };
        match class {
            Class::Address => Val::Addr(u(&raw)),
            Class::AddressIndex => self.addr_index(u(&raw)).map_or(Val::Unresolved, Val::Addr),
            Class::Constant => Val::Const(u(&raw)),
            Class::SignedConstant | Class::ImplicitConst => match raw {
                Raw::I(v) => Val::Signed(v),
                other => Val::Const(u(&other)),
            },
            Class::InlineString => match raw {
                Raw::S(s) => Val::Str(s),
                _ => Val::Unresolved,
            },
            Class::StrOffset => str_at(self.secs.str, u(&raw)).map_or(Val::Unresolved, Val::Str),
            Class::LineStrOffset => {
                str_at(self.secs.line_str, u(&raw)).map_or(Val::Unresolved, Val::Str)
            }
            Class::StrIndex => self
                .str_index(u(&raw))
                .and_then(|off| str_at(self.secs.str, off))
                .map_or(Val::Unresolved, Val::Str),
            Class::UnitRef => usize::try_from(u(&raw))
                .ok()
                .and_then(|r| r.checked_add(self.hdr.offset))
                .map_or(Val::Unresolved, Val::Ref),
            Class::InfoRef => usize::try_from(u(&raw)).map_or(Val::Unresolved, Val::Ref),
            Class::ExternalRef | Class::Indirect => Val::Unresolved,
            Class::SecOffset => Val::SecOff(u(&raw)),
            Class::Block => match raw {
                Raw::Block(n) => Val::Block(n),
                _ => Val::Unresolved,
            },
            Class::Flag => Val::Flag(u(&raw) != 0),
            Class::FlagPresent => Val::Flag(true),
            Class::RngListIndex => Val::RngIdx(u(&raw)),
            Class::LocListIndex => Val::LocIdx(u(&raw)),
        }
    }

    fn addr_index(&self, idx: u64) -> Option<u64> {
        let base = self.ctx.addr_base.unwrap_or(if self.hdr.version >= 5 { 8 } else { 0 });
        let off = idx.checked_mul(u64::from(self.hdr.addr_size))?.checked_add(base)?;
        let mut c = self.secs.cursor(self.secs.addr, usize::try_from(off).ok()?);
        c.uint(self.hdr.addr_size)
    }

    fn str_index(&self, idx: u64) -> Option<u64> {
        let default = if self.hdr.version >= 5 { 2 * u64::from(self.hdr.offset_size) } else { 0 };
        let base = self.ctx.str_offsets_base.unwrap_or(default);
        let off = idx.checked_mul(u64::from(self.hdr.offset_size))?.checked_add(base)?;
        let mut c = self.secs.cursor(self.secs.str_offsets, usize::try_from(off).ok()?);
        c.uint(self.hdr.offset_size)
    }
}

#[derive(Clone, Debug)]
struct Die {
    offset: usize,
    unit: usize,
    tag: u64,
    parent: Option<usize>,
    attrs: Vec<Attr>,
}

impl Die {
    fn get(&self, at: u64) -> Option<&Attr> {
        self.attrs.iter().find(|a| a.at == at)
    }
}

struct UnitState {
    hdr: UnitHeader,
    ctx: UnitCtx,
}

fn interesting(tag: u64) -> bool {
    matches!(tag, DW_TAG_SUBPROGRAM | DW_TAG_INLINED_SUBROUTINE | DW_TAG_FORMAL_PARAMETER)
}

struct Collector<'s, 'a> {
    secs: &'s Sections<'a>,
    units: Vec<UnitState>,
    dies: Vec<Die>,
    by_offset: HashMap<usize, usize>,
    abbrev_cache: HashMap<u64, HashMap<u64, Abbrev>>,
    diags: Vec<Diagnostic>,
}

impl<'s, 'a> Collector<'s, 'a> {
    fn read_unit(&mut self, hdr: UnitHeader) -> Result<()> {
        if !self.abbrev_cache.contains_key(&hdr.abbrev_offset) {
            let table = parse_abbrevs(self.secs, hdr.abbrev_offset)?;
            self.abbrev_cache.insert(hdr.abbrev_offset, table);
        }
        let abbrevs = &self.abbrev_cache[&hdr.abbrev_offset];
        let unit_idx = self.units.len();
        self.units.push(UnitState { hdr: hdr.clone(), ctx: UnitCtx::default() });

        let info = &self.secs.info[..hdr.end];
        let mut c = self.secs.cursor(info, hdr.die_start);
        // Stack of enclosing DIEs; `None` for DIEs we do not keep.
        let mut stack: Vec<Option<usize>> = Vec::new();
        let mut first = true;
        while !c.is_empty() {
            let die_offset = c.pos();
            let code = c.uleb().ok_or_else(|| short("DIE"))?;
            if code == 0 {
                stack.pop();
                continue;
            }
            let abbrev = abbrevs
                .get(&code)
                .ok_or_else(|| format!("DIE at {die_offset:#x} uses unknown abbrev code {code}"))?;
            let mut raws = Vec::with_capacity(abbrev.attrs.len());
            for a in &abbrev.attrs {
                let (class, raw) = read_raw(&mut c, &hdr, a.form, a.implicit, 0)?;
                raws.push((a.at, class, raw));
            }

            if first {
                first = false;
                let ctx = self.unit_context(&hdr, &raws);
                self.units[unit_idx].ctx = ctx;
            }

            let keep = interesting(abbrev.tag);
            let idx = if keep {
                let resolver = Resolver { secs: self.secs, hdr: &hdr, ctx: &self.units[unit_idx].ctx };
                let attrs = raws
                    .into_iter()
                    .map(|(at, class, raw)| Attr { at, class, val: resolver.resolve(class, raw) })
                    .collect();
                let parent = stack.last().copied().flatten();
                self.dies.push(Die { offset: die_offset, unit: unit_idx, tag: abbrev.tag, parent, attrs });
                let i = self.dies.len() - 1;
                self.by_offset.insert(die_offset, i);
                Some(i)
            } else {
                None
            };
            if abbrev.has_children {
                stack.push(idx);
            }
        }
        Ok(())
    }

    fn unit_context(&self, hdr: &UnitHeader, raws: &[(u64, Class, Raw)]) -> UnitCtx {
        let mut ctx = UnitCtx::default();
        let sec = |raw: &Raw| match raw {
            Raw::U(v) => Some(*v),
            _ => None,
        };
        for (at, _, raw) in raws {
            match *at {
                DW_AT_ADDR_BASE | DW_AT_GNU_ADDR_BASE => ctx.addr_base = sec(raw),
                DW_AT_STR_OFFSETS_BASE => ctx.str_offsets_base = sec(raw),
                DW_AT_RNGLISTS_BASE | DW_AT_GNU_RANGES_BASE => ctx.rnglists_base = sec(raw),
                _ => {}
            }
        }
        let resolver = Resolver { secs: self.secs, hdr, ctx: &ctx };
        let mut name = None;
        let mut comp_dir = None;
        let mut stmt_list = None;
        let mut base = 0;
        for (at, class, raw) in raws {
            match *at {
                DW_AT_LOW_PC => {
                    if let Val::Addr(a) = resolver.resolve(*class, raw.clone()) {
                        base = a;
                    }
                }
                DW_AT_NAME => name = as_str(&resolver.resolve(*class, raw.clone())),
                DW_AT_COMP_DIR => comp_dir = as_str(&resolver.resolve(*class, raw.clone())),
                DW_AT_STMT_LIST => stmt_list = sec(raw),
                _ => {}
            }
        }
        ctx.base_address = base;
        if let Some(off) = stmt_list {
            ctx.files = FileTable::parse(self.secs, off, hdr.addr_size, name, comp_dir).ok();
        }
        ctx
    }

    /// Looks up `at` on the DIE or, failing that, along its abstract-origin /
    /// specification chain. Returns the value and the unit it came from.
    fn lookup(&self, die: usize, at: u64) -> Option<(&Val, usize)> {
        let mut cur = die;
        for _ in 0..MAX_ORIGIN_DEPTH {
            let d = &self.dies[cur];
            if let Some(a) = d.get(at) {
                return Some((&a.val, d.unit));
            }
            let next = [DW_AT_ABSTRACT_ORIGIN, DW_AT_SPECIFICATION].iter().find_map(|link| {
                match d.get(*link).map(|a| &a.val) {
                    Some(Val::Ref(off)) => self.by_offset.get(off).copied(),
                    _ => None,
                }
            })?;
            cur = next;
        }
        None
    }

    fn ranges(&self, unit: usize, val: &Val) -> Result<Vec<(u64, u64)>> {
        let st = &self.units[unit];
        let hdr = &st.hdr;
        if hdr.version >= 5 {
            let offset = match val {
                Val::SecOff(o) | Val::Const(o) => *o,
                Val::RngIdx(i) => {
                    let base = st.ctx.rnglists_base.unwrap_or(u64::from(hdr.offset_size) * 2 + 4);
                    let pos = i
                        .checked_mul(u64::from(hdr.offset_size))
                        .and_then(|p| p.checked_add(base))
                        .ok_or("range list index overflow")?;
                    let mut c = self.secs.cursor(self.secs.rnglists, pos as usize);
                    c.uint(hdr.offset_size).ok_or_else(|| short("range list offsets"))? + base
                }
                _ => return Err("unsupported DW_AT_ranges form".into()),
            };
            self.rnglist(unit, offset)
        } else {
            let offset = match val {
                Val::SecOff(o) | Val::Const(o) => *o,
                _ => return Err("unsupported DW_AT_ranges form".into()),
            };
            let mut c = self.secs.cursor(self.secs.ranges, offset as usize);
            let mut base = st.ctx.base_address;
            let max = if hdr.addr_size == 4 { u32::MAX as u64 } else { u64::MAX };
            let mut out = Vec::new();
            loop {
                let begin = c.uint(hdr.addr_size).ok_or_else(|| short(".debug_ranges"))?;
                let end = c.uint(hdr.addr_size).ok_or_else(|| short(".debug_ranges"))?;
                if begin == 0 && end == 0 {
                    return Ok(out);
                }
                if begin == max {
                    base = end;
                    continue;
                }
                out.push((base.wrapping_add(begin), base.wrapping_add(end)));
            }
        }
    }

    fn rnglist(&self, unit: usize, offset: u64) -> Result<Vec<(u64, u64)>> {
        let st = &self.units[unit];
        let size = st.hdr.addr_size;
        let resolver = Resolver { secs: self.secs, hdr: &st.hdr, ctx: &st.ctx };
        let addrx = |i: u64| resolver.addr_index(i).ok_or_else(|| format!("bad address index {i}"));
        let mut c = self.secs.cursor(self.secs.rnglists, offset as usize);
        let mut base = st.ctx.base_address;
        let mut out = Vec::new();
        let err = || short(".debug_rnglists");
        loop {
            match c.u8().ok_or_else(err)? {
                0 => return Ok(out),
                1 => base = addrx(c.uleb().ok_or_else(err)?)?,
                2 => {
                    let b = addrx(c.uleb().ok_or_else(err)?)?;
                    let e = addrx(c.uleb().ok_or_else(err)?)?;
                    out.push((b, e));
                }
                3 => {
                    let b = addrx(c.uleb().ok_or_else(err)?)?;
                    let len = c.uleb().ok_or_else(err)?;
                    out.push((b, b.wrapping_add(len)));
                }
                4 => {
                    let b = c.uleb().ok_or_else(err)?;
                    let e = c.uleb().ok_or_else(err)?;
                    out.push((base.wrapping_add(b), base.wrapping_add(e)));
                }
                5 => base = c.uint(size).ok_or_else(err)?,
                6 => {
                    let b = c.uint(size).ok_or_else(err)?;
                    let e = c.uint(size).ok_or_else(err)?;
                    out.push((b, e));
                }
                7 => {
                    let b = c.uint(size).ok_or_else(err)?;
                    let len = c.uleb().ok_or_else(err)?;
                    out.push((b, b.wrapping_add(len)));
                }
                k => return Err(format!("unknown range list entry kind {k}")),
            }
        }
    }

    fn build_record(
        &mut self,
        idx: usize,
        params: &[usize],
        width: WordSize,
    ) -> Option<(DebugFunctionRecord, Option<HighPcForm>)> {
        let die = &self.dies[idx];
        let unit = die.unit;
        let inlined = die.tag == DW_TAG_INLINED_SUBROUTINE;
        let name = self
            .lookup(idx, DW_AT_NAME)
            .and_then(|(v, _)| as_str(v))
            .unwrap_or_else(|| format!("<anon@{:#x}>", die.offset));

        let low = die.get(DW_AT_LOW_PC).map(|a| a.val.clone());
        let high = die.get(DW_AT_HIGH_PC).cloned();
        let ranges = die.get(DW_AT_RANGES).map(|a| a.val.clone());

        let (low_pc, end, form) = match (low, ranges) {
            (Some(Val::Addr(low)), _) => {
                let (end, form) = match high {
                    None => (low, None),
                    Some(Attr { class, val, .. }) => {
                        let (form, value) = match (class, val) {
                            (_, Val::Addr(a)) => (HighPcForm::Address, a),
                            (_, Val::Const(v)) => (HighPcForm::Constant, v),
                            (_, Val::Signed(v)) if v >= 0 => (HighPcForm::Constant, v as u64),
                            (class, _) => {
                                self.diags.push(malformed(format!(
                                    "{name}: unusable high PC of class {class:?}"
                                )));
                                return None;
                            }
                        };
                        match resolve_high_pc_for(width, low, form, value) {
                            Ok(end) if end >= low => (end, Some(form)),
                            Ok(end) => {
                                self.diags.push(malformed(format!(
                                    "{name}: high PC {end:#x} below low PC {low:#x}"
                                )));
                                return None;
                            }
                            Err(e) => {
                                self.diags.push(malformed(format!("{name}: {e}")));
                                return None;
                            }
                        }
                    }
                };
                (low, end, form)
            }
            (Some(_), _) => {
                self.diags.push(malformed(format!("{name}: unresolvable low PC")));
                return None;
            }
            (None, Some(rv)) => {
                let list = match self.ranges(unit, &rv) {
                    Ok(list) => list,
                    Err(e) => {
                        self.diags.push(malformed(format!("{name}: {e}")));
                        return None;
                    }
                };
                let list: Vec<(u64, u64)> = list.into_iter().filter(|(b, e)| e > b).collect();
                let min = list.iter().map(|r| r.0).min()?;
                let max = list.iter().map(|r| r.1).max()?;
                if !inlined && list.len() > 1 {
                    self.diags.push(
                        Diagnostic::warning(
                            DiagCode::DiscontiguousRange,
                            format!("{name} spans {} address ranges; recorded as one", list.len()),
                        )
                        .at(min, max - min),
                    );
                }
                (min, max, None)
            }
            (None, None) => {
                if !inlined {
                    self.diags.push(Diagnostic::info(
                        DiagCode::NoCodeAddress,
                        format!("subprogram {name} has no code address; skipped"),
                    ));
                }
                return None;
            }
        };

        let decl_file = self
            .lookup(idx, DW_AT_DECL_FILE)
            .and_then(|(v, u)| as_unsigned(v).and_then(|i| self.units[u].ctx.files.as_ref()?.name(i)));
        let decl_line = self
            .lookup(idx, DW_AT_DECL_LINE)
            .and_then(|(v, _)| as_unsigned(v))
            .filter(|&l| l > 0);
        let noreturn = matches!(self.lookup(idx, DW_AT_NORETURN), Some((Val::Flag(true), _)));

        let parameters = params
            .iter()
            .map(|&p| {
                let name = self.lookup(p, DW_AT_NAME).and_then(|(v, _)| as_str(v));
                let has_location = match self.dies[p].get(DW_AT_LOCATION).map(|a| &a.val) {
                    Some(Val::Block(n)) => *n > 0,
                    Some(Val::SecOff(_) | Val::LocIdx(_) | Val::Const(_)) => true,
                    _ => false,
                };
                ParameterRecord { name, declared: true, has_location }
            })
            .collect();

        Some((
            DebugFunctionRecord {
                low_pc,
                end_exclusive: end,
                name,
                decl_file,
                decl_line,
                noreturn,
                is_inlined_copy: inlined,
                parameters,
            },
            form,
        ))
    }
}

fn as_str(v: &Val) -> Option<String> {
    match v {
        Val::Str(s) => Some(s.clone()),
        _ => None,
    }
}

/// Unsigned value of a constant; implicit constants arrive signed.
fn as_unsigned(v: &Val) -> Option<u64> {
    match v {
        Val::Const(c) => Some(*c),
        Val::Signed(c) => u64::try_from(*c).ok(),
        _ => None,
    }
}

fn malformed(msg: String) -> Diagnostic {
    Diagnostic::error(DiagCode::MalformedDebug, msg)
}

pub(super) fn read_units(image: &BinaryImage) -> (Vec<DebugUnit>, Vec<Diagnostic>) {
    let secs = Sections::from_image(image);
    if secs.info.is_empty() {
        return (
            Vec::new(),
            vec![Diagnostic::warning(DiagCode::NoDebugInfo, "binary has no DWARF .debug_info")],
        );
    }
    let mut col = Collector {
        secs: &secs,
        units: Vec::new(),
        dies: Vec::new(),
        by_offset: HashMap::new(),
        abbrev_cache: HashMap::new(),
        diags: Vec::new(),
    };

    let mut offset = 0usize;
    while offset < secs.info.len() {
        let hdr = match parse_unit_header(&secs, offset) {
            Ok(h) => h,
            Err(e) => {
                col.diags.push(malformed(format!("unit at {offset:#x}: {e}")));
                break;
            }
        };
        let next = hdr.end;
        if !hdr.skip {
            if let Err(e) = col.read_unit(hdr) {
                col.diags.push(malformed(format!("unit at {offset:#x}: {e}")));
            }
        }
        offset = next;
    }

    let mut units: Vec<DebugUnit> = col
        .units
        .iter()
        .map(|u| DebugUnit {
            offset: u.hdr.offset as u64,
            version: u.hdr.version,
            records: Vec::new(),
            high_pc_forms: Vec::new(),
        })
        .collect();
    let mut params: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, d) in col.dies.iter().enumerate() {
        if d.tag == DW_TAG_FORMAL_PARAMETER {
            if let Some(p) = d.parent {
                params.entry(p).or_default().push(i);
            }
        }
    }
    for idx in 0..col.dies.len() {
        let tag = col.dies[idx].tag;
        if tag != DW_TAG_SUBPROGRAM && tag != DW_TAG_INLINED_SUBROUTINE {
            continue;
        }
        let unit = col.dies[idx].unit;
        let width = if col.units[unit].hdr.addr_size == 4 { WordSize::Bits32 } else { WordSize::Bits64 };
        if let Some((rec, form)) = col.build_record(idx, params.get(&idx).map_or(&[], Vec::as_slice), width) {
            units[unit].records.push(rec);
            if let Some(f) = form {
                units[unit].high_pc_forms.push(f);
            }
        }
    }
    (units, col.diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsigned_constants_accept_both_classes() {
        assert_eq!(as_unsigned(&Val::Const(7)), Some(7));
        assert_eq!(as_unsigned(&Val::Signed(3)), Some(3));
        assert_eq!(as_unsigned(&Val::Signed(-1)), None);
        assert_eq!(as_unsigned(&Val::Addr(7)), None);
    }
}
