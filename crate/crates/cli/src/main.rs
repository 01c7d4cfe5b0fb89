//! `gtruth`: extract ground truth, score tool reports, diff documents, run
//! corpus studies and generate fixtures.
//!
//! Exit codes: 0 success, 1 usage, 2 input or parse error, 3 incomplete
//! ground truth.

mod commands;
mod diff;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use groundtruth::{BoundaryRule, MatchPolicy, StartRule};

#[derive(Parser, Debug)]
#[command(name = "gtruth", version, about = "Ground truth for binary analysis evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract a ground-truth document from each binary.
    Extract(ExtractArgs),
    /// Score a tool report against a ground-truth document.
    Score(ScoreArgs),
    /// Compare two ground-truth documents for the same binary.
    Diff(DiffArgs),
    /// Score a directory of reports against every binary in a manifest.
    Corpus(CorpusArgs),
    /// Write fixture binaries, their expected truth and a manifest.
    Fixtures(FixturesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyPreset {
    Default,
    Strict,
    Legacy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Ignore,
    StrictTrimmed,
    StrictRaw,
    PaddingTolerant,
    LegacyLenient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    PrimaryEntryOnly,
    AnyEntry,
}

#[derive(Args, Debug, Clone)]
pub struct NormalizeArgs {
    /// Keep trailing-dot twins as separate functions.
    #[arg(long)]
    pub no_merge_multi_entry: bool,
    /// Extra noreturn names, one per line; added to the built-in list.
    #[arg(long, value_name = "PATH")]
    pub noreturn_seeds: Vec<PathBuf>,
    /// Call edges as `0xCALLER 0xCALLEE` lines; enables `uncalled` flags.
    #[arg(long, value_name = "PATH")]
    pub call_edges: Option<PathBuf>,
    /// Largest accepted distance between debug-info and symbol-table starts.
    #[arg(long, default_value_t = 0, value_name = "BYTES")]
    pub start_tolerance: u64,
}

#[derive(Args, Debug, Clone)]
pub struct PolicyArgs {
    #[arg(long, value_enum, default_value_t = PolicyPreset::Default)]
    pub policy: PolicyPreset,
    /// Overrides the preset's boundary rule.
    #[arg(long, value_enum)]
    pub boundary_rule: Option<BoundaryArg>,
    /// Overrides the preset's start rule.
    #[arg(long, value_enum)]
    pub start_rule: Option<StartArg>,
    /// Score against ground truth marked incomplete instead of refusing.
    #[arg(long)]
    pub allow_incomplete: bool,
}

impl PolicyArgs {
    pub fn policy(&self) -> MatchPolicy {
        let mut p = match self.policy {
            PolicyPreset::Default => MatchPolicy::default(),
            PolicyPreset::Strict => MatchPolicy::strict(),
            PolicyPreset::Legacy => MatchPolicy::legacy(),
        };
        if let Some(b) = self.boundary_rule {
            p.boundary_rule = match b {
                BoundaryArg::Ignore => BoundaryRule::Ignore,
                BoundaryArg::StrictTrimmed => BoundaryRule::StrictTrimmed,
                BoundaryArg::StrictRaw => BoundaryRule::StrictRaw,
                BoundaryArg::PaddingTolerant => BoundaryRule::PaddingTolerant,
                BoundaryArg::LegacyLenient => BoundaryRule::LegacyLenient,
            };
        }
        if let Some(s) = self.start_rule {
            p.start_rule = match s {
                StartArg::PrimaryEntryOnly => StartRule::PrimaryEntryOnly,
                StartArg::AnyEntry => StartRule::AnyEntry,
            };
        }
        if self.allow_incomplete {
            p.reject_incomplete_truth = false;
        }
        p
    }
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Binaries to read.
    #[arg(required_unless_present = "manifest")]
    pub binaries: Vec<PathBuf>,
    /// Read the binaries listed in a corpus manifest.
    #[arg(long, conflicts_with = "binaries")]
    pub manifest: Option<PathBuf>,
    /// Output file for one binary; output directory for several.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub normalize: NormalizeArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    pub truth: PathBuf,
    pub report: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct DiffArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    pub manifest: PathBuf,
    /// Directory holding `<binary file name>.report.json` for each entry.
    pub reports: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub normalize: NormalizeArgs,
    /// F1 threshold for `fraction_below`; repeatable.
    #[arg(long = "threshold", value_name = "F")]
    pub thresholds: Vec<f64>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct FixturesArgs {
    /// Preset to write; repeatable. Without presets or --count, writes all.
    #[arg(long)]
    pub preset: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of generated fixtures.
    #[arg(long)]
    pub count: Option<usize>,
    /// Probability of each quirk in generated fixtures.
    #[arg(long, default_value_t = 0.25)]
    pub quirk_weight: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// A failure and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        Failure { code: 1, error: e.into() }
    }

    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: e.into() }
    }
}

pub const EXIT_INCOMPLETE: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Extract(a) => commands::extract(a),
        Command::Score(a) => commands::score(a),
        Command::Diff(a) => commands::diff(a),
        Command::Corpus(a) => commands::corpus(a),
        Command::Fixtures(a) => commands::fixtures(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("gtruth: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
