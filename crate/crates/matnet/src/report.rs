//! CSV and JSON outputs of an experiment run.
//!
//! Floating-point values are written with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use matnet_core::train::{EpochRecord, Method};
use serde_json::json;

use crate::error::{HarnessError, Result};
use crate::experiment::{ExperimentReport, MethodOutcome};

pub const COST_HEADER: &str = "epoch,cost,wall_ms";
pub const GAINS_HEADER: &str = "epoch,param_index,value";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn cost_file(method: Method) -> String {
    format!("cost_{}.csv", method.tag())
}

pub fn gains_file(method: Method) -> String {
    format!("gains_{}.csv", method.tag())
}

pub fn cost_csv(records: &[EpochRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(COST_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{}", r.epoch, fmt_f64(r.cost), fmt_f64(r.wall_ms));
    }
    out
}

/// Parses a `cost_<method>.csv` back into records.
pub fn parse_cost_csv(text: &str) -> Result<Vec<EpochRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(COST_HEADER) {
        return Err(HarnessError::config("cost csv: missing header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || HarnessError::config(format!("cost csv: malformed row {}", i + 1));
            let mut f = line.split(',');
            let (Some(e), Some(c), Some(w), None) = (f.next(), f.next(), f.next(), f.next()) else {
                return Err(bad());
            };
            Ok(EpochRecord {
                epoch: e.parse().map_err(|_| bad())?,
                cost: c.parse().map_err(|_| bad())?,
                wall_ms: w.parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn gains_csv(outcome: &MethodOutcome) -> Option<String> {
    let snapshots = outcome.trace.snapshots.as_ref()?;
    let mut out = String::new();
    out.push_str(GAINS_HEADER);
    out.push('\n');
    for (record, flat) in outcome.trace.records.iter().zip(snapshots) {
        for (i, v) in flat.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", record.epoch, i, fmt_f64(*v));
        }
    }
    Some(out)
}

pub fn predictions_csv(report: &ExperimentReport) -> String {
    let probes = &report.probes;
    let mut header: Vec<String> = Vec::new();
    if report.classification {
        header.push("probe".into());
        header.push("label".into());
    } else {
        header.extend((0..probes.input_width()).map(|i| format!("x{i}")));
    }
    header.extend((0..probes.target_width()).map(|i| format!("target{i}")));
    for o in &report.outcomes {
        header.extend((0..probes.target_width()).map(|i| format!("{}_y{i}", o.method.tag())));
    }
    let mut out = header.join(",");
    out.push('\n');
    for (p, s) in probes.iter().enumerate() {
        let mut row: Vec<String> = Vec::new();
        if report.classification {
            row.push(p.to_string());
            row.push(crate::experiment::argmax(&s.target).to_string());
        } else {
            row.extend(s.input.iter().map(|v| fmt_f64(*v)));
        }
        row.extend(s.target.iter().map(|v| fmt_f64(*v)));
        for o in &report.outcomes {
            row.extend(o.predictions[p].iter().map(|v| fmt_f64(*v)));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn accuracy_csv(report: &ExperimentReport) -> Option<String> {
    if !report.classification {
        return None;
    }
    let mut out = String::from("method,class,correct,total\n");
    for o in &report.outcomes {
        let acc = o.accuracy.as_ref()?;
        for (k, (c, t)) in acc.correct.iter().zip(&acc.totals).enumerate() {
            let _ = writeln!(out, "{},{k},{c},{t}", o.method.tag());
        }
    }
    Some(out)
}

pub fn metadata_json(report: &ExperimentReport) -> String {
    let results: Vec<_> = report
        .outcomes
        .iter()
        .map(|o| {
            let mut r = json!({
                "method": o.method.tag(),
                "final_cost": o.trace.final_cost(),
                "records": o.trace.records.len(),
                "termination": o.trace.termination.as_str(),
                "max_probe_error": o.max_probe_error,
            });
            if let Some(seed) = o.trace.seed {
                r["seed"] = json!(seed);
            }
            if let Some(acc) = &o.accuracy {
                r["correct"] = json!(acc.correct);
                r["totals"] = json!(acc.totals);
            }
            r
        })
        .collect();
    let doc = json!({
        "config": report.config,
        "parameters": report.config.network.param_count(),
        "training_samples": report.training.len(),
        "probe_samples": report.probes.len(),
        "notes": report.notes,
        "results": results,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("metadata serializes");
    text.push('\n');
    text
}

pub(crate) fn write_method_files(dir: &Path, outcome: &MethodOutcome) -> Result<()> {
    write(dir.join(cost_file(outcome.method)), &cost_csv(&outcome.trace.records))?;
    if let Some(g) = gains_csv(outcome) {
        write(dir.join(gains_file(outcome.method)), &g)?;
    }
    Ok(())
}

pub(crate) fn write_summary_files(report: &ExperimentReport, dir: &Path) -> Result<()> {
    write(dir.join("predictions.csv"), &predictions_csv(report))?;
    if let Some(a) = accuracy_csv(report) {
        write(dir.join("accuracy.csv"), &a)?;
    }
    write(dir.join("metadata.json"), &metadata_json(report))
}

/// Writes every output file of `report` into `dir` and returns their paths.
pub fn write_csv(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    for o in &report.outcomes {
        write_method_files(dir, o)?;
    }
    write_summary_files(report, dir)?;
    let mut files: Vec<PathBuf> = Vec::new();
    for o in &report.outcomes {
        files.push(dir.join(cost_file(o.method)));
        if o.trace.snapshots.is_some() {
            files.push(dir.join(gains_file(o.method)));
        }
    }
    files.push(dir.join("predictions.csv"));
    if report.classification {
        files.push(dir.join("accuracy.csv"));
    }
    files.push(dir.join("metadata.json"));
    Ok(files)
}
