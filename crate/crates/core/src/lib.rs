//! Ground truth for binary analysis evaluation.
//!
//! Reads unstripped ELF binaries (symbol tables and DWARF), normalizes them
//! into a canonical per-binary [`GroundTruthDocument`], classifies every
//! allocated byte, and scores tool reports against the result under
//! explicit [`MatchPolicy`] rules.
//!
//! ```
//! use groundtruth::{extract_ground_truth, forge, parse_image, NormalizeConfig};
//!
//! let raw = forge::emit(&forge::preset("listing1").unwrap()).unwrap();
//! let doc = extract_ground_truth(&parse_image(&raw).unwrap(), &NormalizeConfig::default());
//! assert_eq!(doc.functions.len(), 1);
//! assert_eq!(doc.functions[0].entry_points.len(), 2);
//! ```

pub(crate) mod bytes;
pub mod byteclass;
pub mod datafile;
pub mod dwarf;
pub mod elf;
pub mod forge;
pub mod model;
pub mod normalize;
pub mod scalar;
pub mod schema;
pub mod score;
pub mod serde_hex;

use num_rational::Ratio;

pub use byteclass::{classify_bytes, coverage_stats, ByteClass, ByteClassMap, ByteRun, Confidence, CoverageStats};
pub use dwarf::{extract_debug_functions, parameter_summary, resolve_high_pc, DebugFunctionRecord, HighPcForm};
pub use elf::{function_symbols, parse_image, parse_image_named, section_of, ElfError};
pub use model::*;
pub use normalize::{
    build_ground_truth, extract_ground_truth, Flag, GroundTruthDocument, GroundTruthFunction, NormalizeConfig,
    Provenance,
};
pub use scalar::Scalar;
pub use score::{
    corpus_aggregate, match_boundaries, match_starts, score_byte_classes, BoundaryRule, CorpusSummary, MatchPolicy,
    ScoreError, ScoreResult, StartRule, ToolReport,
};

/// Exact rational used where float rounding must not leak into results.
pub type Exact = Ratio<u64>;

pub type Score = ScoreResult<f64>;
pub type ExactScore = ScoreResult<Exact>;
pub type Corpus = CorpusSummary<f64>;
pub type ExactCorpus = CorpusSummary<Exact>;
pub type Coverage = CoverageStats<f64>;
pub type ExactCoverage = CoverageStats<Exact>;
