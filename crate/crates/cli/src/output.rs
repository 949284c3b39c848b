//! Report emission.
//!
//! `<prefix>.recall.csv` has the header `method,r,recall` and one row per
//! (method, r), with recall averaged over every seed of the method. Values
//! use shortest round-trip formatting, so the file is byte-stable for fixed
//! seeds. `<prefix>.report.json` holds the configuration echo, the depth
//! limit for sweep runs, and the full per-seed report including timings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ot_retrieve::config::RunConfig;
use ot_retrieve::retrieval::BenchReport;
use serde_json::json;

/// Twelve significant digits in positional notation.
pub fn format_distance(d: f64) -> String {
    if d == 0.0 || !d.is_finite() {
        return format!("{d:.12}");
    }
    let magnitude = d.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{d:.decimals$}")
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_recall_csv(path: &Path, report: &BenchReport) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["method", "r", "recall"])?;
    for (method, curve) in report.mean_curves() {
        for (r, recall) in curve {
            w.write_record([method.clone(), r.to_string(), recall.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_pair(prefix: &Path, cfg: &RunConfig, report: &BenchReport, limit: Option<u32>) -> Result<()> {
    write_recall_csv(&with_suffix(prefix, ".recall.csv"), report)?;
    let path = with_suffix(prefix, ".report.json");
    let body = json!({ "config": cfg, "depth_limit": limit, "report": report });
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, &body)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
