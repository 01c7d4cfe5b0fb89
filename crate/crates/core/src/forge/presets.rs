use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::*;
use super::ForgeError;
use crate::model::{Binding, Machine, WordSize};

pub const PRESETS: &[&str] = &[
    "listing1",
    "listing2",
    "padding-icc-vs-gcc",
    "highpc-twins",
    "scaffold",
    "stripped",
    "multi-entry",
    "jump-table",
    "nop-gap",
];

pub fn preset(name: &str) -> Result<FixtureSpec, ForgeError> {
    Ok(match name {
        "listing1" => listing1(),
        "listing2" => listing2(),
        "padding-icc-vs-gcc" => padding_icc_vs_gcc(),
        "highpc-twins" => highpc_twins(),
        "scaffold" => scaffold(),
        "stripped" => stripped(),
        "multi-entry" => multi_entry(3),
        "jump-table" => jump_table(),
        "nop-gap" => nop_gap(),
        _ => return Err(ForgeError::UnknownPreset(name.into())),
    })
}

const X86_OPS: &[&[u8]] = &[
    &[0x55],
    &[0x53],
    &[0x89, 0xe5],
    &[0x8b, 0x45, 0x08],
    &[0x8b, 0x55, 0x0c],
    &[0x01, 0xd0],
    &[0x31, 0xc0],
    &[0x83, 0xc0, 0x01],
    &[0x83, 0xec, 0x1c],
    &[0x89, 0xc6],
    &[0x39, 0xd0],
    &[0x75, 0x02],
    &[0x5b],
    &[0x5d],
];

const PPC_OPS: &[[u8; 4]] = &[
    [0x7c, 0x08, 0x02, 0xa6],
    [0x94, 0x21, 0xff, 0xf0],
    [0x38, 0x60, 0x00, 0x01],
    [0x7c, 0x63, 0x22, 0x14],
    [0x80, 0x01, 0x00, 0x14],
    [0x7c, 0x08, 0x03, 0xa6],
];

/// A deterministic function body of exactly `len` bytes ending in a return.
/// x86 bodies never contain `0f`, so no suffix of one reads as a
/// multi-byte nop. PowerPC bodies need `len` to be a multiple of 4.
pub fn synthetic_body(machine: Machine, len: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if machine.is_x86() {
        assert!(len >= 1, "body needs room for a return");
        let mut out = Vec::with_capacity(len);
        while out.len() + 1 < len {
            let op = X86_OPS[rng.gen_range(0..X86_OPS.len())];
            if out.len() + op.len() < len {
                out.extend_from_slice(op);
            } else {
                out.push(0x50 + rng.gen_range(0..8));
            }
        }
        out.push(0xc3);
        out
    } else {
        assert!(len >= 4 && len.is_multiple_of(4), "PowerPC bodies are whole words");
        let mut out = Vec::with_capacity(len);
        while out.len() + 4 < len {
            out.extend_from_slice(&PPC_OPS[rng.gen_range(0..PPC_OPS.len())]);
        }
        out.extend_from_slice(&[0x4e, 0x80, 0x00, 0x20]);
        out
    }
}

fn text(vaddr: u64, size: u64, fill: u8) -> SectionSpec {
    SectionSpec { name: ".text".into(), vaddr, size, flags: SectionFlags::CODE, content: Content::Fill(fill) }
}

fn x86_32(name: &str) -> FixtureSpec {
    FixtureSpec { word_size: WordSize::Bits32, machine: Machine::X86, ..FixtureSpec::empty(name) }
}

fn listing1() -> FixtureSpec {
    let mut body = vec![0x8b, 0x44, 0x24, 0x04, 0x8b, 0x54, 0x24, 0x08];
    body.extend_from_slice(&[
        0x55, 0x57, 0x56, 0x53, 0x83, 0xec, 0x1c, 0x89, 0xc6, 0x89, 0xd7, 0x31, 0xc0, 0x83, 0xc4, 0x1c, 0x5b, 0x5e,
        0x5f, 0x5d, 0xc3,
    ]);
    let mut f = FunctionSpec::new("fix_syms", ".text", 0, body);
    f.padding = vec![0x90; 3];
    f.quirks.insert(Quirk::TrailingDotTwin { split: 8 });
    f.source = Some(("../binutils2.23/bfd/linker.c".into(), 3208));
    FixtureSpec {
        sections: vec![text(0x080b_41c0, 0x20, 0x90)],
        functions: vec![f],
        dwarf: Some(DwarfSpec::version(4)),
        ..x86_32("listing1")
    }
}

/// Nine local symbols at their original addresses and sizes; the gaps
/// between them are `int3` filler.
fn listing2() -> FixtureSpec {
    const BASE: u64 = 0x0805_5750;
    let rows: [(&str, Option<u32>, u64, u64); 9] = [
        ("operand", Some(0), 0x0805_5750, 0xc30),
        ("integer_constant", Some(1), 0x0805_6380, 0x1a0),
        ("integer_constant", Some(4), 0x0805_6520, 0x320),
        ("integer_constant", Some(3), 0x0805_6840, 0x320),
        ("integer_constant", Some(2), 0x0805_6b60, 0x540),
        ("integer_constant", Some(0), 0x0805_70a0, 0x330),
        ("expr", Some(1), 0x0805_73d0, 0xc80),
        ("operand", None, 0x0805_8fa0, 0xcd0),
        ("expr", Some(0), 0x0805_a7d0, 0xcb0),
    ];
    let radix_16 = [0x8b, 0xd5, 0xc1, 0xea, 0x1c, 0xc1, 0xe5, 0x04, 0xc1, 0xe6, 0x04];
    let radix_2 = [0x8b, 0xd3, 0x03, 0xdb, 0xc1, 0xea, 0x1f, 0x03, 0xc0];
    let mut functions = Vec::new();
    for (i, (name, clone, addr, size)) in rows.into_iter().enumerate() {
        let mut body = synthetic_body(Machine::X86, size as usize, i as u64);
        match clone {
            Some(2) if name == "integer_constant" => body[0x4a..0x4a + radix_16.len()].copy_from_slice(&radix_16),
            Some(3) if name == "integer_constant" => body[0x4c..0x4c + radix_2.len()].copy_from_slice(&radix_2),
            _ => {}
        }
        let mut f = FunctionSpec::new(name, ".text", addr - BASE, body);
        f.binding = Binding::Local;
        if let Some(n) = clone {
            f.quirks.insert(Quirk::SpecializationClone(n));
        }
        if name == "integer_constant" {
            f.params = vec![
                ParamSpec { name: "radix".into(), located: clone == Some(1) },
                ParamSpec { name: "expressionP".into(), located: true },
            ];
        }
        functions.push(f);
    }
    let mut dwarf = DwarfSpec::version(2);
    dwarf.producer_dir = "/src/binutils-2.23/gas".into();
    FixtureSpec {
        sections: vec![text(BASE, 0x0805_b480 - BASE, 0xcc)],
        functions,
        dwarf: Some(dwarf),
        ..x86_32("listing2")
    }
}

/// One body twice: once with a symbol size counting the trailing nops, once
/// without.
fn padding_icc_vs_gcc() -> FixtureSpec {
    let body = vec![0x55, 0x89, 0xe5, 0x8b, 0x45, 0x08, 0x8b, 0x55, 0x0c, 0x01, 0xd0, 0x5d, 0xc3];
    let mut icc = FunctionSpec::new("add_icc", ".text", 0, body.clone());
    icc.padding = vec![0x90; 3];
    icc.quirks.insert(Quirk::IccSizeIncludesPadding);
    let mut gcc = FunctionSpec::new("add_gcc", ".text", 16, body);
    gcc.padding = vec![0x90; 3];
    FixtureSpec {
        sections: vec![text(0x0804_9000, 32, 0x90)],
        functions: vec![icc, gcc],
        dwarf: Some(DwarfSpec::version(4)),
        ..x86_32("padding-icc-vs-gcc")
    }
}

fn highpc_twins() -> FixtureSpec {
    let mut f = FunctionSpec::new("twin", ".text", 0, synthetic_body(Machine::X86_64, 24, 7));
    f.source = Some(("twin.c".into(), 3));
    f.params = vec![ParamSpec { name: "n".into(), located: true }];
    let mut dwarf = DwarfSpec::version(4);
    dwarf.twin_units = true;
    FixtureSpec {
        sections: vec![text(0x40_1000, 32, 0xcc)],
        functions: vec![f],
        dwarf: Some(dwarf),
        ..FixtureSpec::empty("highpc-twins")
    }
}

/// Toolchain scaffolding without debug info around one real function.
fn scaffold() -> FixtureSpec {
    let sections = vec![
        SectionSpec { name: ".init".into(), vaddr: 0x40_1000, size: 16, flags: SectionFlags::CODE, content: Content::Fill(0xcc) },
        text(0x40_1020, 0x100, 0xcc),
        SectionSpec { name: ".fini".into(), vaddr: 0x40_1120, size: 16, flags: SectionFlags::CODE, content: Content::Fill(0xcc) },
    ];
    let mut functions = vec![
        FunctionSpec::new("_init", ".init", 0, synthetic_body(Machine::X86_64, 12, 1)),
        FunctionSpec::new("_fini", ".fini", 0, synthetic_body(Machine::X86_64, 9, 2)),
    ];
    let text_fns = ["_start", "deregister_tm_clones", "register_tm_clones", "__do_global_dtors_aux", "frame_dummy"];
    for (i, name) in text_fns.iter().enumerate() {
        functions.push(FunctionSpec::new(name, ".text", i as u64 * 32, synthetic_body(Machine::X86_64, 20 + i, 10 + i as u64)));
    }
    for f in &mut functions {
        f.quirks.insert(Quirk::NoDwarf);
        if f.section == ".text" {
            f.binding = Binding::Local;
        }
    }
    functions[2].binding = Binding::Global;
    let mut main = FunctionSpec::new("main", ".text", 0xa0, synthetic_body(Machine::X86_64, 40, 99));
    main.source = Some(("main.c".into(), 1));
    functions.push(main);
    FixtureSpec { sections, functions, dwarf: Some(DwarfSpec::version(5)), ..FixtureSpec::empty("scaffold") }
}

fn stripped() -> FixtureSpec {
    let functions = (0..3)
        .map(|i| FunctionSpec::new(&format!("f{i}"), ".text", i * 32, synthetic_body(Machine::X86_64, 24, i)))
        .collect();
    FixtureSpec { sections: vec![text(0x40_1000, 96, 0xcc)], functions, symtab: false, ..FixtureSpec::empty("stripped") }
}

/// `pairs` stack-convention stubs, each falling through into its body.
pub(super) fn multi_entry(pairs: u64) -> FixtureSpec {
    let stub = [0x8b, 0x44, 0x24, 0x04, 0x8b, 0x54, 0x24, 0x08];
    let functions = (0..pairs)
        .map(|i| {
            let mut body = stub.to_vec();
            body.extend(synthetic_body(Machine::X86, 24, i));
            let mut f = FunctionSpec::new(&format!("entry{i}"), ".text", i * 48, body);
            f.quirks.insert(Quirk::TrailingDotTwin { split: 8 });
            f
        })
        .collect();
    FixtureSpec {
        sections: vec![text(0x0804_9000, pairs.max(1) * 48, 0x90)],
        functions,
        dwarf: Some(DwarfSpec::version(3)),
        ..x86_32("multi-entry")
    }
}

/// A switch through an indirect jump table, followed by code reachable
/// only through the table.
fn jump_table() -> FixtureSpec {
    let mut body = vec![
        0x8b, 0x44, 0x24, 0x04, // movl 0x4(%esp),%eax
        0x3d, 0xff, 0x1f, 0x00, 0x00, // cmpl $0x1fff,%eax
        0x7f, 0x18, // jg
        0x48, // decl %eax
        0x83, 0xf8, 0x04, // cmpl $0x4,%eax
        0x77, 0x4e, // ja
        0xb8, 0x07, 0x8d, 0x1f, 0x08, // movl $0x81f8d07,%eax
        0xff, 0x24, 0x85, 0x4c, 0x62, 0x1f, 0x08, // jmpl *0x81f624c(,%eax,4)
        0xb8, 0x1b, 0x8d, 0x1f, 0x08, // movl $0x81f8d1b,%eax
        0xc3, // retl
    ];
    body.extend(synthetic_body(Machine::X86, 0x70 - body.len(), 4));
    let mut f = FunctionSpec::new("get_DW_IDX_name", ".text", 0, body);
    f.source = Some(("dwarf.c".into(), 1));
    FixtureSpec {
        sections: vec![text(0x0815_2ad0, 0x70, 0x90)],
        functions: vec![f],
        dwarf: Some(DwarfSpec::version(4)),
        ..x86_32("jump-table")
    }
}

/// A tail-jump stub after a multi-byte nop gap, itself followed by a
/// prefixed nop.
fn nop_gap() -> FixtureSpec {
    let mut prev = FunctionSpec::new("scan_tail", ".text", 0, synthetic_body(Machine::X86_64, 0x36, 5));
    prev.padding = vec![0x66, 0x2e, 0x0f, 0x1f, 0x84, 0x00, 0x00, 0x00, 0x00, 0x00];
    let mut yyalloc = FunctionSpec::new("yyalloc", ".text", 0x40, vec![0xe9, 0x0b, 0x93, 0xff, 0xff]);
    yyalloc.padding = vec![0x66, 0x66, 0x2e, 0x0f, 0x1f, 0x84, 0x00, 0x00, 0x00, 0x00, 0x00];
    FixtureSpec {
        sections: vec![text(0x40_8100, 0x50, 0xcc)],
        functions: vec![prev, yyalloc],
        dwarf: Some(DwarfSpec::version(5)),
        ..FixtureSpec::empty("nop-gap")
    }
}
