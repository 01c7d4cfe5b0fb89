//! On-disk JSON forms: ground-truth documents, tool reports, corpus
//! manifests, and score and corpus outputs.
//!
//! Every document carries `schema_version`. Run metadata (generator and the
//! exact configuration) lives under `meta`; everything else depends only on
//! the inputs, and [`to_canonical_json`] sorts keys, so identical inputs
//! give byte-identical files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::byteclass::{ByteClass, ByteClassMap};
use crate::model::{Addr, ContentDigest, Diagnostic};
use crate::normalize::{BinaryInfo, GroundTruthDocument, GroundTruthFunction, NormalizeConfig};
use crate::score::{ClassScore, CorpusSummary, MatchPolicy, PredictedFunction, ScoreResult, ToolReport};

pub const SCHEMA_VERSION: u32 = 1;

pub const GROUND_TRUTH_SCHEMA: &str = include_str!("../schemas/ground-truth.schema.json");
pub const TOOL_REPORT_SCHEMA: &str = include_str!("../schemas/tool-report.schema.json");

pub fn generator() -> String {
    format!("gtruth {}", env!("CARGO_PKG_VERSION"))
}

/// Pretty JSON with object keys in sorted order and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // serde_json's map type is ordered, so a round trip through `Value`
    // sorts every object's keys.
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub generator: String,
    pub config: serde_json::Value,
}

impl Meta {
    pub fn new<C: Serialize>(config: &C) -> Self {
        Meta { generator: generator(), config: serde_json::to_value(config).expect("configs serialize") }
    }
}

/// Serializable view of the normalizer settings that shape a document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    pub merge_multi_entry: bool,
    pub start_tolerance: u64,
    /// Seed files added to the built-in list, as given on the command line.
    pub noreturn_seed_files: Vec<String>,
    pub call_edges_file: Option<String>,
}

impl ExtractConfig {
    pub fn describe(config: &NormalizeConfig) -> Self {
        ExtractConfig {
            merge_multi_entry: config.merge_multi_entry,
            start_tolerance: config.start_tolerance,
            noreturn_seed_files: Vec::new(),
            call_edges_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthFile {
    pub schema_version: u32,
    pub meta: Meta,
    pub binary: BinaryInfo,
    pub functions: Vec<GroundTruthFunction>,
    pub byte_classes: ByteClassMap,
    pub diagnostics: Vec<Diagnostic>,
    pub complete: bool,
}

impl GroundTruthFile {
    pub fn new(doc: GroundTruthDocument, meta: Meta) -> Self {
        GroundTruthFile {
            schema_version: SCHEMA_VERSION,
            meta,
            binary: doc.binary,
            functions: doc.functions,
            byte_classes: doc.byte_classes,
            diagnostics: doc.diagnostics,
            complete: doc.complete,
        }
    }

    pub fn into_document(self) -> GroundTruthDocument {
        GroundTruthDocument {
            binary: self.binary,
            functions: self.functions,
            byte_classes: self.byte_classes,
            diagnostics: self.diagnostics,
            complete: self.complete,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolInfo {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportedFunction {
    #[serde(with = "crate::serde_hex::addr")]
    pub start: Addr,
    #[serde(default)]
    pub size: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolReportFile {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub binary_digest_hex: ContentDigest,
    pub functions: Vec<ReportedFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub byte_classes: Option<ByteClassMap>,
}

impl From<&ToolReport> for ToolReportFile {
    fn from(r: &ToolReport) -> Self {
        ToolReportFile {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo { name: r.tool_name.clone(), version: r.tool_version.clone() },
            binary_digest_hex: r.binary_digest,
            functions: r.predicted_functions.iter().map(|p| ReportedFunction { start: p.start, size: p.size }).collect(),
            byte_classes: r.predicted_byte_classes.clone(),
        }
    }
}

impl From<ToolReportFile> for ToolReport {
    fn from(f: ToolReportFile) -> Self {
        ToolReport {
            tool_name: f.tool.name,
            tool_version: f.tool.version,
            binary_digest: f.binary_digest_hex,
            predicted_functions: f.functions.into_iter().map(|p| PredictedFunction { start: p.start, size: p.size }).collect(),
            predicted_byte_classes: f.byte_classes,
        }
    }
}

/// A report that predicts exactly the ground truth: every function at its
/// start with its trimmed size, and the truth's byte classes.
pub fn perfect_report(doc: &GroundTruthDocument, tool_name: &str) -> ToolReport {
    ToolReport {
        tool_name: tool_name.into(),
        tool_version: None,
        binary_digest: doc.binary.digest,
        predicted_functions: doc
            .functions
            .iter()
            .map(|f| PredictedFunction { start: f.start, size: Some(f.trimmed_size()) })
            .collect(),
        predicted_byte_classes: Some(doc.byte_classes.clone()),
    }
}

/// One binary in a corpus. Relative paths resolve against the manifest's
/// directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: String,
    pub digest_hex: ContentDigest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreFile {
    pub schema_version: u32,
    pub meta: Meta,
    pub binary_digest_hex: ContentDigest,
    pub tool: ToolInfo,
    /// Start matching only.
    pub starts: ScoreResult<f64>,
    /// Start matching plus the policy's boundary rule.
    pub boundaries: ScoreResult<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub byte_classes: Option<BTreeMap<ByteClass, ClassScore<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusEntryOutcome {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ScoreResult<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusFile {
    pub schema_version: u32,
    pub meta: Meta,
    pub binaries: Vec<CorpusEntryOutcome>,
    pub failed: usize,
    pub summary: CorpusSummary<f64>,
}

/// Settings embedded in score and corpus outputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreConfig {
    pub policy: MatchPolicy,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub thresholds: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge;
    use crate::{extract_ground_truth, parse_image};

    fn listing1_doc() -> GroundTruthDocument {
        let raw = forge::emit(&forge::preset("listing1").unwrap()).unwrap();
        extract_ground_truth(&parse_image(&raw).unwrap(), &NormalizeConfig::default())
    }

    #[test]
    fn ground_truth_round_trips_through_json() {
        let doc = listing1_doc();
        let meta = Meta::new(&ExtractConfig::describe(&NormalizeConfig::default()));
        let text = to_canonical_json(&GroundTruthFile::new(doc.clone(), meta)).unwrap();
        let back: GroundTruthFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_document(), doc);
        assert!(text.contains("\"start\": \"0x80b41c0\""));
        assert!(text.contains("\"entries\": [\n        \"0x80b41c0\",\n        \"0x80b41c8\"\n      ]"));
    }

    #[test]
    fn canonical_json_is_stable() {
        let meta = Meta::new(&ExtractConfig::describe(&NormalizeConfig::default()));
        let a = to_canonical_json(&GroundTruthFile::new(listing1_doc(), meta.clone())).unwrap();
        let b = to_canonical_json(&GroundTruthFile::new(listing1_doc(), meta)).unwrap();
        assert_eq!(a, b);
        let keys: Vec<&str> = a.lines().filter(|l| l.starts_with("  \"")).map(|l| l.trim().split('"').nth(1).unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn report_round_trip_and_unknown_fields() {
        let doc = listing1_doc();
        let report = perfect_report(&doc, "oracle");
        let text = to_canonical_json(&ToolReportFile::from(&report)).unwrap();
        let back: ToolReportFile = serde_json::from_str(&text).unwrap();
        assert_eq!(ToolReport::from(back), report);
        let extra = text.replacen('{', "{\"surprise\": 1,", 1);
        assert!(serde_json::from_str::<ToolReportFile>(&extra).is_err());
    }

    fn assert_valid(schema: &str, text: &str) {
        let schema: serde_json::Value = serde_json::from_str(schema).unwrap();
        let instance: serde_json::Value = serde_json::from_str(text).unwrap();
        let validator = jsonschema::validator_for(&schema).unwrap();
        let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}");
    }

    #[test]
    fn outputs_validate_against_published_schemas() {
        let config = ExtractConfig::describe(&NormalizeConfig::default());
        for name in forge::PRESETS {
            let raw = forge::emit(&forge::preset(name).unwrap()).unwrap();
            let doc = extract_ground_truth(&parse_image(&raw).unwrap(), &NormalizeConfig::default());
            let report = to_canonical_json(&ToolReportFile::from(&perfect_report(&doc, "oracle"))).unwrap();
            assert_valid(TOOL_REPORT_SCHEMA, &report);
            let text = to_canonical_json(&GroundTruthFile::new(doc, Meta::new(&config))).unwrap();
            assert_valid(GROUND_TRUTH_SCHEMA, &text);
        }
    }
}
