use super::dwarf_out::emit_debug;
use super::spec::{Content, FixtureSpec};
use crate::bytes::Writer;
use crate::elf::{SHF_ALLOC, SHF_EXECINSTR, SHF_WRITE, SHT_DYNSYM, SHT_NOBITS, SHT_STRTAB, SHT_SYMTAB, STT_FUNC, STT_OBJECT};
use crate::model::{Binding, Endianness, WordSize};

const SHT_PROGBITS: u32 = 1;
const ET_EXEC: u16 = 2;

struct OutSection {
    name: String,
    kind: u32,
    flags: u64,
    addr: u64,
    data: Vec<u8>,
    /// Size for NOBITS sections, which have no data.
    nobits_size: u64,
    link: u32,
    info: u32,
    align: u64,
    entsize: u64,
}

impl OutSection {
    fn plain(name: &str, kind: u32, data: Vec<u8>) -> Self {
        OutSection { name: name.into(), kind, flags: 0, addr: 0, data, nobits_size: 0, link: 0, info: 0, align: 1, entsize: 0 }
    }
}

struct Sym {
    name: String,
    value: u64,
    size: u64,
    kind: u8,
    binding: Binding,
    shndx: u16,
}

/// Symbols in table order: locals first, as the ELF format requires.
fn symbols(spec: &FixtureSpec) -> Vec<Sym> {
    let shndx = |name: &str| spec.sections.iter().position(|s| s.name == name).map_or(0, |i| i as u16 + 1);
    let mut out = Vec::new();
    for f in &spec.functions {
        let start = spec.function_start(f).expect("validated section");
        let idx = shndx(&f.section);
        let name = f.symbol_name();
        let size = f.declared_size();
        let mut push = |name: String, value, size, binding| {
            out.push(Sym { name, value, size, kind: STT_FUNC, binding, shndx: idx });
        };
        match f.twin_split() {
            Some(split) => {
                push(name.clone(), start, split, f.binding);
                push(format!("{name}."), start + split, size - split, f.binding);
            }
            None => push(name, start, size, f.binding),
        }
        for alias in f.aliases() {
            push(alias, start, size, Binding::Weak);
        }
    }
    for o in &spec.objects {
        let base = spec.section(&o.section).expect("validated section").vaddr;
        out.push(Sym { name: o.name.clone(), value: base + o.offset, size: o.size, kind: STT_OBJECT, binding: Binding::Global, shndx: shndx(&o.section) });
    }
    out.sort_by_key(|s| s.binding != Binding::Local);
    out
}

/// Writes a symbol table into `w`; returns its string table and the index
/// of the first non-local symbol.
fn symbol_table(syms: &[&Sym], word: WordSize, w: &mut Writer) -> (Vec<u8>, u32) {
    let mut strtab = vec![0u8];
    let is64 = word == WordSize::Bits64;
    let zero = if is64 { 24 } else { 16 };
    w.bytes(&vec![0; zero]);
    let mut first_global = syms.len() as u32 + 1;
    for (i, s) in syms.iter().enumerate() {
        if s.binding != Binding::Local && first_global > syms.len() as u32 {
            first_global = i as u32 + 1;
        }
        let name = strtab.len() as u32;
        strtab.extend_from_slice(s.name.as_bytes());
        strtab.push(0);
        let bind = match s.binding {
            Binding::Local => 0,
            Binding::Global => 1,
            Binding::Weak => 2,
        };
        let info = (bind << 4) | s.kind;
        if is64 {
            w.u32(name);
            w.u8(info);
            w.u8(0);
            w.u16(s.shndx);
            w.u64(s.value);
            w.u64(s.size);
        } else {
            w.u32(name);
            w.u32(s.value as u32);
            w.u32(s.size as u32);
            w.u8(info);
            w.u8(0);
            w.u16(s.shndx);
        }
    }
    (strtab, first_global)
}

pub(super) fn write_elf(spec: &FixtureSpec) -> Vec<u8> {
    let endian = spec.endianness;
    let is64 = spec.word_size == WordSize::Bits64;
    let mut sections: Vec<OutSection> = Vec::new();

    for s in &spec.sections {
        let mut flags = 0;
        if s.flags.alloc {
            flags |= SHF_ALLOC;
        }
        if s.flags.exec {
            flags |= SHF_EXECINSTR;
        }
        if s.flags.write {
            flags |= SHF_WRITE;
        }
        let (kind, data, nobits_size) = match &s.content {
            Content::NoBits => (SHT_NOBITS, Vec::new(), s.size),
            Content::Fill(b) => (SHT_PROGBITS, vec![*b; s.size as usize], 0),
            Content::Bytes(b) => {
                let mut d = b.clone();
                d.resize(s.size as usize, 0);
                (SHT_PROGBITS, d, 0)
            }
        };
        sections.push(OutSection { name: s.name.clone(), kind, flags, addr: s.vaddr, data, nobits_size, link: 0, info: 0, align: 16, entsize: 0 });
    }
    for f in &spec.functions {
        let i = spec.sections.iter().position(|s| s.name == f.section).expect("validated section");
        let at = f.offset as usize;
        let data = &mut sections[i].data;
        data[at..at + f.body.len()].copy_from_slice(&f.body);
        let pad = at + f.body.len();
        data[pad..pad + f.padding.len()].copy_from_slice(&f.padding);
    }

    if let Some(dwarf) = &spec.dwarf {
        let dbg = emit_debug(spec, dwarf);
        sections.push(OutSection::plain(".debug_abbrev", SHT_PROGBITS, dbg.abbrev));
        sections.push(OutSection::plain(".debug_info", SHT_PROGBITS, dbg.info));
        sections.push(OutSection::plain(".debug_line", SHT_PROGBITS, dbg.line));
    }

    let syms = symbols(spec);
    let (entsize, align) = if is64 { (24, 8) } else { (16, 4) };
    let mut tables = vec![];
    if spec.symtab {
        tables.push((".symtab", ".strtab", SHT_SYMTAB, syms.iter().collect::<Vec<_>>()));
    }
    if spec.dynsym {
        let dynamic = syms.iter().filter(|s| s.kind == STT_FUNC && s.binding != Binding::Local).collect();
        tables.push((".dynsym", ".dynstr", SHT_DYNSYM, dynamic));
    }
    for (name, strname, kind, list) in tables {
        let mut w = Writer::new(endian);
        let (strtab, first_global) = symbol_table(&list, spec.word_size, &mut w);
        let strtab_index = sections.len() as u32 + 2;
        let mut table = OutSection::plain(name, kind, w.buf);
        table.link = strtab_index;
        table.info = first_global;
        table.align = align;
        table.entsize = entsize;
        sections.push(table);
        sections.push(OutSection::plain(strname, SHT_STRTAB, strtab));
    }

    let mut shstrtab = vec![0u8];
    let mut name_offsets = Vec::new();
    for s in sections.iter().map(|s| s.name.as_str()).chain([".shstrtab"]) {
        name_offsets.push(shstrtab.len() as u32);
        shstrtab.extend_from_slice(s.as_bytes());
        shstrtab.push(0);
    }
    sections.push(OutSection::plain(".shstrtab", SHT_STRTAB, shstrtab));

    let ehsize: usize = if is64 { 64 } else { 52 };
    let mut out = Writer::new(endian);
    out.bytes(&vec![0; ehsize]);
    let mut offsets = Vec::new();
    for s in &sections {
        out.align(s.align as usize);
        offsets.push(out.len() as u64);
        out.bytes(&s.data);
    }
    out.align(8);
    let shoff = out.len() as u64;
    let uword = |w: &mut Writer, v: u64| if is64 { w.u64(v) } else { w.u32(v as u32) };
    out.bytes(&vec![0; if is64 { 64 } else { 40 }]);
    for (i, s) in sections.iter().enumerate() {
        out.u32(name_offsets[i]);
        out.u32(s.kind);
        uword(&mut out, s.flags);
        uword(&mut out, s.addr);
        uword(&mut out, offsets[i]);
        uword(&mut out, if s.kind == SHT_NOBITS { s.nobits_size } else { s.data.len() as u64 });
        out.u32(s.link);
        out.u32(s.info);
        uword(&mut out, s.align);
        uword(&mut out, s.entsize);
    }

    let shnum = sections.len() as u16 + 1;
    let entry = spec.functions.first().and_then(|f| spec.function_start(f)).unwrap_or(0);
    let mut hdr = Writer::new(endian);
    hdr.bytes(&[0x7f, b'E', b'L', b'F', if is64 { 2 } else { 1 }, if endian == Endianness::Little { 1 } else { 2 }, 1, 0]);
    hdr.bytes(&[0; 8]);
    hdr.u16(ET_EXEC);
    hdr.u16(spec.machine.code());
    hdr.u32(1);
    uword(&mut hdr, entry);
    uword(&mut hdr, 0);
    uword(&mut hdr, shoff);
    hdr.u32(0);
    hdr.u16(ehsize as u16);
    hdr.u16(0);
    hdr.u16(0);
    hdr.u16(if is64 { 64 } else { 40 });
    hdr.u16(shnum);
    hdr.u16(shnum - 1);
    let mut raw = out.buf;
    raw[..ehsize].copy_from_slice(&hdr.buf);
    raw
}
