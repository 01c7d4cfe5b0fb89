//! Runs the built `gtruth` binary and writes tool reports.
#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use groundtruth::schema::{perfect_report, to_canonical_json, GroundTruthFile, ToolReportFile};
use groundtruth::ToolReport;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn gtruth<I, S>(args: I) -> Run
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = Command::new(env!("CARGO_BIN_EXE_gtruth")).args(args).output().expect("gtruth runs");
    Run {
        code: out.status.code().expect("exited normally"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn read_truth(path: &Path) -> GroundTruthFile {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn write_report(path: &Path, report: &ToolReport) {
    std::fs::write(path, to_canonical_json(&ToolReportFile::from(report)).unwrap()).unwrap();
}

/// Extracts `binary` into `truth` and writes a report predicting it exactly.
pub fn perfect(binary: &Path, truth: &Path, report: &Path) -> GroundTruthFile {
    let r = gtruth(["extract", p(binary), "-o", p(truth)]);
    assert!(r.code == 0 || r.code == 3, "{}", r.stderr);
    let file = read_truth(truth);
    write_report(report, &perfect_report(&file.clone().into_document(), "oracle"));
    file
}
