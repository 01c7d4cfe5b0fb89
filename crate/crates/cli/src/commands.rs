use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::Serialize;

use groundtruth::datafile::{lines, parse_names};
use groundtruth::forge::{self, FixtureSpec, QuirkMix};
use groundtruth::schema::{
    to_canonical_json, CorpusEntryOutcome, CorpusFile, ExtractConfig, GroundTruthFile, Manifest, ManifestEntry, Meta,
    ScoreConfig, ScoreFile, ToolInfo, ToolReportFile, SCHEMA_VERSION,
};
use groundtruth::score::DEFAULT_THRESHOLD;
use groundtruth::serde_hex::parse_addr;
use groundtruth::{
    corpus_aggregate, digest_binary, extract_ground_truth, match_boundaries, match_starts, parse_image_named,
    score_byte_classes, GroundTruthDocument, NormalizeConfig, ScoreError, ToolReport,
};

use crate::{
    diff, table, CorpusArgs, DiffArgs, ExtractArgs, Failure, FixturesArgs, Format, NormalizeArgs, ScoreArgs,
    EXIT_INCOMPLETE,
};

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::input)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).with_context(|| format!("{} does not match its schema", path.display())).map_err(Failure::input)
}

fn check_version(found: u32, path: &Path) -> Result<(), Failure> {
    if found != SCHEMA_VERSION {
        return Err(Failure::input(anyhow!(
            "{}: schema_version {found} is not supported (expected {SCHEMA_VERSION})",
            path.display()
        )));
    }
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<GroundTruthDocument, Failure> {
    let file: GroundTruthFile = read_json(path)?;
    check_version(file.schema_version, path)?;
    Ok(file.into_document())
}

fn read_report(path: &Path) -> Result<ToolReport, Failure> {
    let file: ToolReportFile = read_json(path)?;
    check_version(file.schema_version, path)?;
    Ok(file.into())
}

fn read_manifest(path: &Path) -> Result<(Manifest, PathBuf), Failure> {
    let manifest: Manifest = read_json(path)?;
    check_version(manifest.schema_version, path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((manifest, dir))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(Failure::input)
}

/// Writes JSON to `out` when given, and prints the requested format to
/// stdout otherwise (or as well, for tables).
fn emit<T: Serialize>(value: &T, out: Option<&Path>, format: Format, table: impl FnOnce() -> String) -> Result<(), Failure> {
    let json = to_canonical_json(value).map_err(Failure::input)?;
    match (out, format) {
        (Some(path), Format::Json) => write(path, &json),
        (Some(path), Format::Table) => {
            write(path, &json)?;
            print!("{}", table());
            Ok(())
        }
        (None, Format::Json) => {
            print!("{json}");
            Ok(())
        }
        (None, Format::Table) => {
            print!("{}", table());
            Ok(())
        }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(Failure::usage)
}

fn normalize_config(args: &NormalizeArgs) -> Result<(NormalizeConfig, ExtractConfig), Failure> {
    let mut config = NormalizeConfig { merge_multi_entry: !args.no_merge_multi_entry, start_tolerance: args.start_tolerance, ..Default::default() };
    for path in &args.noreturn_seeds {
        let text = String::from_utf8(read(path)?).map_err(Failure::input)?;
        let names = parse_names(&text).with_context(|| path.display().to_string()).map_err(Failure::input)?;
        config.noreturn_seeds.extend(names);
    }
    if let Some(path) = &args.call_edges {
        let text = String::from_utf8(read(path)?).map_err(Failure::input)?;
        let mut edges = Vec::new();
        for (line_no, line) in lines(&text) {
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Failure::input(anyhow!("{}:{line_no}: expected two addresses", path.display())));
            };
            let parse = |s| parse_addr(s).map_err(|e| Failure::input(anyhow!("{}:{line_no}: {e}", path.display())));
            edges.push((parse(a)?, parse(b)?));
        }
        config.call_edges = Some(edges);
    }
    let described = ExtractConfig {
        noreturn_seed_files: args.noreturn_seeds.iter().map(|p| p.display().to_string()).collect(),
        call_edges_file: args.call_edges.as_ref().map(|p| p.display().to_string()),
        ..ExtractConfig::describe(&config)
    };
    Ok((config, described))
}

/// Reads and normalizes one binary; `expected_digest` comes from a manifest.
fn extract_one(path: &Path, expected_digest: Option<&str>, config: &NormalizeConfig) -> anyhow::Result<GroundTruthDocument> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(want) = expected_digest {
        let got = digest_binary(&raw).to_hex();
        if got != want {
            bail!("{}: digest {got} does not match manifest digest {want}", path.display());
        }
    }
    let image = parse_image_named(&path.display().to_string(), &raw).with_context(|| format!("parsing {}", path.display()))?;
    Ok(extract_ground_truth(&image, config))
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn extract(args: ExtractArgs) -> Outcome {
    let (config, described) = normalize_config(&args.normalize)?;
    let inputs: Vec<(PathBuf, Option<String>)> = match &args.manifest {
        Some(m) => {
            let (manifest, dir) = read_manifest(m)?;
            manifest.entries.into_iter().map(|e| (dir.join(&e.file), Some(e.digest_hex.to_hex()))).collect()
        }
        None => args.binaries.iter().map(|p| (p.clone(), None)).collect(),
    };
    let single = inputs.len() == 1 && args.manifest.is_none();
    if !single {
        match &args.out {
            Some(dir) => fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::input)?,
            None => return Err(Failure::usage(anyhow!("--out DIR is required with more than one binary"))),
        }
    }

    let docs: Vec<anyhow::Result<GroundTruthDocument>> =
        pool(args.jobs)?.install(|| inputs.par_iter().map(|(p, d)| extract_one(p, d.as_deref(), &config)).collect());

    let meta = Meta::new(&described);
    let (mut failed, mut incomplete) = (0, 0);
    for ((path, _), doc) in inputs.iter().zip(docs) {
        let doc = match doc {
            Ok(d) => d,
            Err(e) => {
                eprintln!("gtruth: {e:#}");
                failed += 1;
                continue;
            }
        };
        if !doc.complete {
            incomplete += 1;
            eprintln!("gtruth: {}: ground truth incomplete; excluded from scoring", path.display());
        }
        let tbl = table::functions(&doc);
        let file = GroundTruthFile::new(doc, meta.clone());
        let out = if single { args.out.clone() } else { args.out.as_ref().map(|d| d.join(format!("{}.truth.json", file_name(path)))) };
        emit(&file, out.as_deref(), args.format, || tbl)?;
    }
    Ok(if failed > 0 {
        2
    } else if incomplete > 0 {
        EXIT_INCOMPLETE
    } else {
        0
    })
}

fn score_failure(e: ScoreError) -> Failure {
    let code = match e {
        ScoreError::IncompleteTruthRejected => EXIT_INCOMPLETE,
        ScoreError::EmptyCorpus => 1,
        _ => 2,
    };
    Failure { code, error: e.into() }
}

pub fn score(args: ScoreArgs) -> Outcome {
    let truth = read_truth(&args.truth)?;
    let report = read_report(&args.report)?;
    let policy = args.policy.policy();
    let starts = match_starts::<f64>(&truth, &report, &policy).map_err(score_failure)?;
    let boundaries = match_boundaries::<f64>(&truth, &report, &policy).map_err(score_failure)?;
    let byte_classes = match &report.predicted_byte_classes {
        Some(pred) => Some(score_byte_classes::<f64>(&truth.byte_classes, pred).map_err(score_failure)?),
        None => None,
    };
    for w in &boundaries.warnings {
        eprintln!("{}", table::banner(w));
    }
    let file = ScoreFile {
        schema_version: SCHEMA_VERSION,
        meta: Meta::new(&ScoreConfig { policy, thresholds: Vec::new() }),
        binary_digest_hex: truth.binary.digest,
        tool: ToolInfo { name: report.tool_name.clone(), version: report.tool_version.clone() },
        starts,
        boundaries,
        byte_classes,
    };
    emit(&file, args.out.as_deref(), args.format, || table::score(&file))?;
    Ok(0)
}

pub fn diff(args: DiffArgs) -> Outcome {
    let a = read_truth(&args.a)?;
    let b = read_truth(&args.b)?;
    if a.binary.digest != b.binary.digest {
        return Err(Failure::input(ScoreError::DigestMismatch { truth: a.binary.digest.to_hex(), report: b.binary.digest.to_hex() }));
    }
    let d = diff::diff_documents(&a, &b);
    emit(&d, None, args.format, || table::diff(&d))?;
    Ok(if d.is_empty() { 0 } else { 1 })
}

pub fn corpus(args: CorpusArgs) -> Outcome {
    let (manifest, dir) = read_manifest(&args.manifest)?;
    if manifest.entries.is_empty() {
        return Err(score_failure(ScoreError::EmptyCorpus));
    }
    let (config, described) = normalize_config(&args.normalize)?;
    let policy = args.policy.policy();
    let thresholds = if args.thresholds.is_empty() { vec![DEFAULT_THRESHOLD] } else { args.thresholds.clone() };

    let score_entry = |e: &ManifestEntry| -> anyhow::Result<groundtruth::Score> {
        let truth = extract_one(&dir.join(&e.file), Some(&e.digest_hex.to_hex()), &config)?;
        let report_path = args.reports.join(format!("{}.report.json", file_name(Path::new(&e.file))));
        let report = read_report(&report_path).map_err(|f| f.error)?;
        Ok(match_boundaries::<f64>(&truth, &report, &policy)?)
    };
    let results: Vec<anyhow::Result<groundtruth::Score>> =
        pool(args.jobs)?.install(|| manifest.entries.par_iter().map(score_entry).collect());

    let mut binaries = Vec::new();
    let mut scored = Vec::new();
    for (e, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok(r) => {
                scored.push(r.clone());
                binaries.push(CorpusEntryOutcome { file: e.file.clone(), result: Some(r), error: None });
            }
            Err(err) => {
                eprintln!("gtruth: {}: {err:#}", e.file);
                binaries.push(CorpusEntryOutcome { file: e.file.clone(), result: None, error: Some(format!("{err:#}")) });
            }
        }
    }
    let failed = binaries.len() - scored.len();
    let summary = corpus_aggregate(&scored, &thresholds)
        .map_err(|e| Failure::input(anyhow!("all {failed} binaries failed: {e}")))?;
    if policy.boundary_rule == groundtruth::BoundaryRule::LegacyLenient {
        eprintln!("{}", table::banner(groundtruth::score::LEGACY_LENIENT_WARNING));
    }
    let meta = Meta::new(&serde_json::json!({
        "extract": described,
        "score": ScoreConfig { policy, thresholds },
    }));
    let file = CorpusFile { schema_version: SCHEMA_VERSION, meta, binaries, failed, summary };
    emit(&file, args.out.as_deref(), args.format, || table::corpus(&file))?;
    Ok(0)
}

pub fn fixtures(args: FixturesArgs) -> Outcome {
    let mut specs: Vec<FixtureSpec> = Vec::new();
    for name in &args.preset {
        specs.push(forge::preset(name).map_err(Failure::usage)?);
    }
    if let Some(count) = args.count {
        if count == 0 {
            return Err(Failure::usage(anyhow!("--count must be at least 1")));
        }
        if !(0.0..=1.0).contains(&args.quirk_weight) {
            return Err(Failure::usage(anyhow!("--quirk-weight must lie in [0, 1]")));
        }
        specs.extend(forge::generate_corpus(args.seed, count, &QuirkMix::all(args.quirk_weight)).into_iter().map(|(s, _)| s));
    }
    if specs.is_empty() {
        specs = forge::PRESETS.iter().map(|n| forge::preset(n).expect("built-in preset")).collect();
    }
    let mut names = BTreeSet::new();
    if let Some(dup) = specs.iter().find(|s| !names.insert(s.name.clone())) {
        return Err(Failure::usage(anyhow!("fixture {} requested twice", dup.name)));
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display())).map_err(Failure::input)?;
    let mut entries = Vec::new();
    for spec in &specs {
        let raw = forge::emit(spec).map_err(Failure::input)?;
        let bin = format!("{}.elf", spec.name);
        let expected = format!("{}.expected.json", spec.name);
        fs::write(args.out.join(&bin), &raw).with_context(|| format!("writing {bin}")).map_err(Failure::input)?;
        let truth = to_canonical_json(&forge::expected_truth(spec)).map_err(Failure::input)?;
        write(&args.out.join(&expected), &truth)?;
        entries.push(ManifestEntry { file: bin, digest_hex: digest_binary(&raw), expected: Some(expected) });
    }
    let manifest = Manifest { schema_version: SCHEMA_VERSION, entries };
    write(&args.out.join("manifest.json"), &to_canonical_json(&manifest).map_err(Failure::input)?)?;
    eprintln!("gtruth: wrote {} fixture(s) to {}", specs.len(), args.out.display());
    Ok(0)
}
