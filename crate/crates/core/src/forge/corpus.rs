//! Seeded random fixture corpora.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::expected::{expected_truth, nop_table, ExpectedTruth};
use super::presets::synthetic_body;
use super::spec::*;
use crate::model::{Binding, Endianness, Machine, WordSize};

/// Per-quirk probabilities in `[0, 1]`. The structural quirks (twin, clone,
/// alias, omitted size, padded size) are mutually exclusive per function and
/// picked by relative weight against a "plain" weight of 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuirkMix {
    pub twin: f64,
    pub clone: f64,
    pub alias: f64,
    pub omit_size: f64,
    pub icc_padding: f64,
    pub noreturn: f64,
    pub no_dwarf: f64,
    pub highpc_constant: f64,
    pub highpc_address: f64,
    pub inlined: f64,
    pub junk_gap: f64,
    pub dwarf: f64,
    pub twin_units: f64,
    pub duplicate_info: f64,
    pub dynsym: f64,
    pub scaffold: f64,
}

impl Default for QuirkMix {
    fn default() -> Self {
        QuirkMix::all(0.25)
    }
}

impl QuirkMix {
    pub fn none() -> Self {
        QuirkMix::all(0.0)
    }

    pub fn all(w: f64) -> Self {
        QuirkMix {
            twin: w,
            clone: w,
            alias: w,
            omit_size: w,
            icc_padding: w,
            noreturn: w,
            no_dwarf: w,
            highpc_constant: w,
            highpc_address: w,
            inlined: w,
            junk_gap: w,
            dwarf: w,
            twin_units: w,
            duplicate_info: w,
            dynsym: w,
            scaffold: w,
        }
    }
}

#[derive(Clone, Copy)]
enum Shape {
    Plain,
    Twin,
    Clone,
    Alias,
    OmitSize,
    IccPadding,
}

struct Arch {
    machine: Machine,
    word_size: WordSize,
    endianness: Endianness,
    text_base: u64,
}

const ARCHES: [Arch; 4] = [
    Arch { machine: Machine::X86, word_size: WordSize::Bits32, endianness: Endianness::Little, text_base: 0x0804_9000 },
    Arch { machine: Machine::X86_64, word_size: WordSize::Bits64, endianness: Endianness::Little, text_base: 0x40_1000 },
    Arch { machine: Machine::Other(20), word_size: WordSize::Bits32, endianness: Endianness::Big, text_base: 0x1000_0000 },
    Arch { machine: Machine::Other(21), word_size: WordSize::Bits64, endianness: Endianness::Big, text_base: 0x1000_0000 },
];

const SCAFFOLD: [&str; 4] = ["frame_dummy", "register_tm_clones", "deregister_tm_clones", "__libc_csu_init"];
const NORETURN: [&str; 3] = ["abort", "exit", "_exit"];
const PPC_NOP: [u8; 4] = [0x60, 0x00, 0x00, 0x00];

fn chance(rng: &mut ChaCha8Rng, p: f64) -> bool {
    p > 0.0 && rng.gen_bool(p.min(1.0))
}

/// Padding of roughly `len` bytes (exact on x86; whole words on PowerPC).
fn padding(rng: &mut ChaCha8Rng, x86: bool, len: usize) -> Vec<u8> {
    let mut out = Vec::new();
    if x86 {
        let nops = nop_table();
        while out.len() < len {
            let fits: Vec<&[u8]> = nops.iter().copied().filter(|n| out.len() + n.len() <= len).collect();
            out.extend_from_slice(fits.choose(rng).expect("single-byte nops always fit"));
        }
    } else {
        for _ in 0..len / 4 {
            out.extend_from_slice(&PPC_NOP);
        }
    }
    out
}

/// Non-padding filler: bytes outside the padding alphabet.
fn junk(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.gen_range(0x10..0x50)).collect()
}

/// `count` fixtures, each paired with the truth it must produce. The same
/// seed and mix always give the same corpus.
pub fn generate_corpus(seed: u64, count: usize, mix: &QuirkMix) -> Vec<(FixtureSpec, ExpectedTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let spec = random_fixture(&mut rng, &format!("corpus-{seed}-{i:04}"), mix);
            let truth = expected_truth(&spec);
            (spec, truth)
        })
        .collect()
}

fn random_fixture(rng: &mut ChaCha8Rng, name: &str, mix: &QuirkMix) -> FixtureSpec {
    let arch = &ARCHES[rng.gen_range(0..ARCHES.len())];
    let x86 = arch.machine.is_x86();
    let unit = if x86 { 1 } else { 4 };
    let dwarf = chance(rng, mix.dwarf).then(|| {
        let mut d = DwarfSpec::version(rng.gen_range(2..=5));
        d.twin_units = d.version >= 4 && chance(rng, mix.twin_units);
        d.duplicate_info = chance(rng, mix.duplicate_info);
        d
    });
    let version = dwarf.as_ref().map_or(0, |d| d.version);

    let shapes = [Shape::Plain, Shape::Twin, Shape::Clone, Shape::Alias, Shape::OmitSize, Shape::IccPadding];
    let weights = [1.0, mix.twin, mix.clone, mix.alias, mix.omit_size, mix.icc_padding];
    let pick = WeightedIndex::new(weights).expect("plain weight is positive");

    let n = rng.gen_range(1..=12);
    let mut text = Vec::new();
    let mut functions = Vec::new();
    let mut clone_bases: Vec<(String, u32)> = Vec::new();
    let mut scaffold_left: Vec<&str> = SCAFFOLD.to_vec();
    let mut noreturn_left: Vec<&str> = NORETURN.to_vec();
    let mut declared_prev = true;
    for i in 0..n {
        let shape = shapes[pick.sample(rng)];
        let words = rng.gen_range(2..=12);
        let body = synthetic_body(arch.machine, words * unit * if x86 { 3 } else { 1 }, rng.gen());

        let mut name = format!("fn_{i}");
        if chance(rng, mix.scaffold) {
            if let Some(s) = scaffold_left.pop() {
                name = s.to_string();
            }
        } else if chance(rng, mix.noreturn / 2.0) {
            if let Some(s) = noreturn_left.pop() {
                name = s.to_string();
            }
        }
        let mut f = FunctionSpec::new(&name, ".text", 0, body);
        f.binding = if rng.gen_bool(0.5) { Binding::Global } else { Binding::Local };
        f.source = Some((format!("src/{name}.c"), rng.gen_range(1..2000)));

        let pad_len = rng.gen_range(0..=3) * 4;
        f.padding = padding(rng, x86, pad_len);
        match shape {
            Shape::Plain => {}
            Shape::Twin => {
                let split = rng.gen_range(1..f.body.len() as u64 / unit as u64) * unit as u64;
                f.quirks.insert(Quirk::TrailingDotTwin { split });
            }
            Shape::Clone => {
                let reuse = !clone_bases.is_empty() && rng.gen_bool(0.6);
                let (base, n) = if reuse {
                    let k = rng.gen_range(0..clone_bases.len());
                    clone_bases[k].1 += 1;
                    clone_bases[k].clone()
                } else {
                    clone_bases.push((format!("spec_{i}"), 0));
                    clone_bases.last().unwrap().clone()
                };
                f.name = base;
                f.quirks.insert(Quirk::SpecializationClone(n));
                f.source = Some((format!("src/{}.c", f.name), 10));
            }
            Shape::Alias => {
                f.quirks.insert(Quirk::Alias(format!("{name}_alias")));
            }
            Shape::OmitSize => {
                f.quirks.insert(Quirk::OmitSize);
            }
            Shape::IccPadding => {
                if f.padding.is_empty() {
                    f.padding = padding(rng, x86, 4);
                }
                f.quirks.insert(Quirk::IccSizeIncludesPadding);
            }
        }
        if dwarf.is_some() {
            if chance(rng, mix.no_dwarf) || SCAFFOLD.contains(&f.name.as_str()) {
                f.quirks.insert(Quirk::NoDwarf);
            }
            if chance(rng, mix.noreturn) {
                f.quirks.insert(Quirk::DwarfNoreturn);
            }
            if version >= 4 && chance(rng, mix.highpc_constant) {
                f.quirks.insert(Quirk::DwarfHighPcConstant);
            } else if chance(rng, mix.highpc_address) {
                f.quirks.insert(Quirk::DwarfHighPcAddress);
            }
            if rng.gen_bool(0.3) {
                f.params.push(ParamSpec { name: "arg".into(), located: rng.gen_bool(0.5) });
            }
            if chance(rng, mix.inlined) && f.body.len() >= 2 * unit {
                let len = unit as u64;
                f.inlined.push(InlineSpec { callee: "inline_helper".into(), offset: 0, len });
            }
        }

        // Bytes between the previous footprint and this function. Junk is
        // only safe after a function whose declared size fixes its end.
        let gap = rng.gen_range(0..=4) * unit;
        if declared_prev && chance(rng, mix.junk_gap) {
            text.extend(junk(rng, gap));
        } else {
            text.extend(padding(rng, x86, gap));
        }
        f.offset = text.len() as u64;
        text.extend_from_slice(&f.body);
        text.extend_from_slice(&f.padding);
        declared_prev = f.declared_size() != 0;
        functions.push(f);
    }
    let tail = rng.gen_range(0..=2) * unit;
    text.extend(padding(rng, x86, tail));

    let text_size = text.len() as u64;
    let rodata_base = (arch.text_base + text_size + 0xfff) & !0xfff;
    let rodata_size = rng.gen_range(1..=8) * 8;
    let data_base = rodata_base + 0x1000;
    let data_size = rng.gen_range(1..=8) * 8;
    let bss_base = data_base + 0x1000;
    let sections = vec![
        SectionSpec { name: ".text".into(), vaddr: arch.text_base, size: text_size, flags: SectionFlags::CODE, content: Content::Bytes(text) },
        SectionSpec {
            name: ".rodata".into(),
            vaddr: rodata_base,
            size: rodata_size,
            flags: SectionFlags::RODATA,
            content: Content::Bytes(junk(rng, rodata_size as usize)),
        },
        SectionSpec { name: ".data".into(), vaddr: data_base, size: data_size, flags: SectionFlags::DATA, content: Content::Fill(0) },
        SectionSpec { name: ".bss".into(), vaddr: bss_base, size: 64, flags: SectionFlags::DATA, content: Content::NoBits },
    ];
    let objects = vec![
        ObjectSpec { name: "table".into(), section: ".rodata".into(), offset: 0, size: rodata_size },
        ObjectSpec { name: "counter".into(), section: ".data".into(), offset: 0, size: 4 },
    ];
    FixtureSpec {
        name: name.into(),
        word_size: arch.word_size,
        endianness: arch.endianness,
        machine: arch.machine,
        sections,
        functions,
        objects,
        symtab: true,
        dynsym: chance(rng, mix.dynsym),
        dwarf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::validate;

    #[test]
    fn deterministic_in_seed() {
        let a = generate_corpus(9, 5, &QuirkMix::default());
        let b = generate_corpus(9, 5, &QuirkMix::default());
        assert_eq!(a, b);
        assert_ne!(a, generate_corpus(10, 5, &QuirkMix::default()));
    }

    #[test]
    fn zero_weights_give_plain_functions() {
        let corpus = generate_corpus(0, 1, &QuirkMix::none());
        assert_eq!(corpus.len(), 1);
        let spec = &corpus[0].0;
        assert!(spec.dwarf.is_none() && !spec.dynsym);
        assert!(spec.functions.iter().all(|f| f.quirks.is_empty()));
    }

    #[test]
    fn generated_specs_validate() {
        for (spec, _) in generate_corpus(3, 60, &QuirkMix::all(0.5)) {
            validate(&spec).unwrap_or_else(|e| panic!("{}: {e}", spec.name));
        }
    }
}
