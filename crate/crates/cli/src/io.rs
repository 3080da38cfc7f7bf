//! Output files, their readers, and the run manifest sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Everything needed to rerun a command. Stored next to the data file so the
/// data itself stays free of timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub tool_version: String,
    pub wall_time_secs: f64,
    pub extra: serde_json::Value,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<()> {
    let path = manifest_path(out);
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read_manifest(out: &Path) -> Result<RunManifest> {
    let path = manifest_path(out);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes a header and rows of floats. `Display` for `f64` prints the
/// shortest string that parses back to the same value.
pub fn write_csv_to<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    write_csv_to(std::io::BufWriter::new(file), header, rows)
}

/// Reads a CSV written by [`write_csv`], checking the header.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let got: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if got != header {
        bail!("{}: expected columns {:?}, found {:?}", path.display(), header, got);
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec.iter().map(|f| f.parse::<f64>().with_context(|| format!("bad number {f:?}"))).collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub const REGION_HEADER: [&str; 2] = ["eps1", "eps2_boundary"];
pub const ACPR_HEADER: [&str; 2] = ["eps1", "eps2_max"];
pub const STAGGER_HEADER: [&str; 3] = ["eps1", "eps2", "decodable"];
pub const HISTORY_HEADER: [&str; 2] = ["generation", "best_score"];

/// ACPR rows with unachievable points as NaN.
pub fn read_acpr(path: &Path) -> Result<Vec<(f64, Option<f64>)>> {
    Ok(read_csv(path, &ACPR_HEADER)?.into_iter().map(|r| (r[0], (!r[1].is_nan()).then_some(r[1]))).collect())
}
