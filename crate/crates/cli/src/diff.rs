//! Field-level comparison of two ground-truth documents.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use groundtruth::{Addr, GroundTruthDocument, GroundTruthFunction};

#[derive(Debug, Serialize)]
pub struct FunctionRef {
    #[serde(with = "groundtruth::serde_hex::addr")]
    pub start: Addr,
    pub name: String,
}

#[derive(Debug, Serialize)]
pub struct FieldChange {
    pub field: String,
    pub a: Value,
    pub b: Value,
}

#[derive(Debug, Serialize)]
pub struct FunctionChange {
    #[serde(with = "groundtruth::serde_hex::addr")]
    pub start: Addr,
    pub name: String,
    pub fields: Vec<FieldChange>,
}

#[derive(Debug, Default, Serialize)]
pub struct DocumentDiff {
    /// Functions only in the second document.
    pub added: Vec<FunctionRef>,
    /// Functions only in the first document.
    pub removed: Vec<FunctionRef>,
    pub changed: Vec<FunctionChange>,
    /// Document-level fields: completeness, byte classes, diagnostics.
    pub document: Vec<FieldChange>,
}

impl DocumentDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.changed.is_empty() && self.document.is_empty()
    }
}

fn fields(f: &GroundTruthFunction) -> serde_json::Map<String, Value> {
    match serde_json::to_value(f).expect("functions serialize") {
        Value::Object(m) => m,
        _ => unreachable!("a function serializes to an object"),
    }
}

fn field_changes(a: serde_json::Map<String, Value>, mut b: serde_json::Map<String, Value>) -> Vec<FieldChange> {
    let mut out = Vec::new();
    for (k, va) in a {
        let vb = b.remove(&k).unwrap_or(Value::Null);
        if va != vb {
            out.push(FieldChange { field: k, a: va, b: vb });
        }
    }
    out.extend(b.into_iter().map(|(k, vb)| FieldChange { field: k, a: Value::Null, b: vb }));
    out
}

/// Functions are paired by start address.
pub fn diff_documents(a: &GroundTruthDocument, b: &GroundTruthDocument) -> DocumentDiff {
    let by_start = |d: &GroundTruthDocument| -> BTreeMap<Addr, GroundTruthFunction> {
        d.functions.iter().map(|f| (f.start, f.clone())).collect()
    };
    let (fa, mut fb) = (by_start(a), by_start(b));
    let mut diff = DocumentDiff::default();
    for (start, f) in fa {
        match fb.remove(&start) {
            None => diff.removed.push(FunctionRef { start, name: f.canonical_name }),
            Some(g) if g != f => diff.changed.push(FunctionChange {
                start,
                name: f.canonical_name.clone(),
                fields: field_changes(fields(&f), fields(&g)),
            }),
            Some(_) => {}
        }
    }
    diff.added = fb.into_values().map(|g| FunctionRef { start: g.start, name: g.canonical_name }).collect();

    let doc_fields: [(&str, Value, Value); 3] = [
        ("complete", Value::Bool(a.complete), Value::Bool(b.complete)),
        ("byte_classes", json(&a.byte_classes), json(&b.byte_classes)),
        ("diagnostics", json(&a.diagnostics), json(&b.diagnostics)),
    ];
    for (field, va, vb) in doc_fields {
        if va != vb {
            diff.document.push(FieldChange { field: field.into(), a: va, b: vb });
        }
    }
    diff
}

fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("document parts serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use groundtruth::forge::{emit, preset};
    use groundtruth::{extract_ground_truth, parse_image, NormalizeConfig};

    fn sample() -> GroundTruthDocument {
        let img = parse_image(&emit(&preset("listing2").unwrap()).unwrap()).unwrap();
        extract_ground_truth(&img, &NormalizeConfig::default())
    }

    #[test]
    fn identical_documents() {
        let d = diff_documents(&sample(), &sample());
        assert!(d.is_empty());
        assert_eq!(crate::table::diff(&d), "identical\n");
    }

    #[test]
    fn added_removed_and_changed() {
        let a = sample();
        let mut b = a.clone();
        let gone = b.functions.remove(0);
        b.functions[0].canonical_name.push_str("_renamed");
        b.complete = !b.complete;
        let d = diff_documents(&a, &b);
        assert_eq!(d.removed.len(), 1);
        assert_eq!(d.removed[0].start, gone.start);
        assert!(d.added.is_empty());
        assert_eq!(d.changed.len(), 1);
        assert!(d.changed[0].fields.iter().any(|f| f.field == "name"));
        assert!(d.document.iter().any(|f| f.field == "complete"));

        let back = diff_documents(&b, &a);
        assert_eq!(back.added.len(), 1);
        let text = crate::table::diff(&back);
        assert!(text.starts_with(&format!("+ {:#x} {}", gone.start, gone.canonical_name)), "{text}");
    }
}
