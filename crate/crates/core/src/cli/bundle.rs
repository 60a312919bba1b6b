//! Result bundle: CSV trajectories, error norms, the certificate sweep and a
//! JSON manifest. Rows are ordered by step, then agent label. Numbers use
//! the shortest representation that reads back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{CertificateReport, SimResult, SyncErrors};
use crate::error::{Error, Result};
use crate::protocol::Variant;

pub const TRAJECTORIES: &str = "trajectories.csv";
pub const ERRORS: &str = "errors.csv";
pub const CERTIFICATE: &str = "certificate.csv";
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub grid: usize,
    pub margin: f64,
    pub min_distance: f64,
    pub zero_delay_radius: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub variant: Variant,
    pub seed: u64,
    pub horizon: usize,
    pub tolerance: f64,
    /// Agent labels, ascending.
    pub labels: Vec<usize>,
    /// Cumulative delay to the exosystem for each entry of `labels`.
    pub cumulative_delays: Vec<usize>,
    pub output_width: usize,
    pub final_error: f64,
    pub converged: bool,
    pub certificate: CertificateSummary,
    pub scenario_sha256: String,
    /// Canonical scenario text, with command-line overrides applied.
    pub scenario: String,
    /// `(file name, sha256)` of every CSV in the bundle.
    pub files: Vec<(String, String)>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            Error::io(&path, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{:e}", v);
}

fn cells(out: &mut String, vals: Option<&[f64]>, width: usize) {
    for c in 0..width {
        out.push(',');
        if let Some(v) = vals.and_then(|v| v.get(c)) {
            num(out, *v);
        }
    }
}

fn header(out: &mut String, prefix: &str, width: usize) {
    for c in 1..=width {
        let _ = write!(out, ",{}{}", prefix, c);
    }
}

/// Canonical positions sorted by agent label.
fn by_label(r: &SimResult) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..r.agents()).collect();
    pos.sort_by_key(|&i| r.labels[i]);
    pos
}

/// `step,agent,y..,yref..,x..,u..` where `yref` is the exosystem output
/// delayed by the agent's cumulative delay (empty before it exists). State
/// and input columns are padded to the widest agent.
pub fn trajectories_csv(r: &SimResult) -> String {
    let p = r.exo_outputs.first().map_or(0, |y| y.len());
    let nx = r.states.first().map_or(0, |s| s.iter().map(|x| x.len()).max().unwrap_or(0));
    let nu = r.inputs.first().map_or(0, |s| s.iter().map(|u| u.len()).max().unwrap_or(0));
    let mut out = String::from("step,agent");
    header(&mut out, "y", p);
    header(&mut out, "yref", p);
    header(&mut out, "x", nx);
    header(&mut out, "u", nu);
    out.push('\n');
    let order = by_label(r);
    for k in 0..r.horizon {
        for &i in &order {
            let _ = write!(out, "{},{}", k, r.labels[i] + 1);
            cells(&mut out, Some(&r.outputs[k][i]), p);
            let kappa = r.cumulative_delays[i];
            let yref = (k >= kappa).then(|| r.exo_outputs[k - kappa].as_slice());
            cells(&mut out, yref, p);
            cells(&mut out, Some(&r.states[k][i]), nx);
            cells(&mut out, Some(&r.inputs[k][i]), nu);
            out.push('\n');
        }
    }
    out
}

/// `step,agent,error` with an empty error before the delayed reference exists.
pub fn errors_csv(r: &SimResult, e: &SyncErrors) -> String {
    let mut out = String::from("step,agent,error\n");
    let order = by_label(r);
    for k in 0..r.horizon {
        for &i in &order {
            let _ = write!(out, "{},{},", k, r.labels[i] + 1);
            if let Some(v) = e.regulated[i][k] {
                num(&mut out, v);
            }
            out.push('\n');
        }
    }
    out
}

pub fn certificate_csv(c: &CertificateReport) -> String {
    let mut out = String::from("omega,distance,spectral_radius\n");
    for p in &c.points {
        num(&mut out, p.omega);
        out.push(',');
        num(&mut out, p.distance);
        out.push(',');
        num(&mut out, p.spectral_radius);
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the CSVs and returns their `(name, sha256)` pairs.
pub fn write_csvs(
    dir: &Path,
    r: &SimResult,
    e: &SyncErrors,
    c: &CertificateReport,
) -> Result<Vec<(String, String)>> {
    fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
    let mut hashes = Vec::new();
    for (name, text) in [
        (TRAJECTORIES, trajectories_csv(r)),
        (ERRORS, errors_csv(r, e)),
        (CERTIFICATE, certificate_csv(c)),
    ] {
        write_file(&dir.join(name), &text)?;
        hashes.push((name.to_string(), sha256_hex(text.as_bytes())));
    }
    Ok(hashes)
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<PathBuf> {
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(m)
        .map_err(|e| Error::Validation(format!("cannot serialize manifest: {}", e)))?;
    text.push('\n');
    write_file(&path, &text)?;
    Ok(path)
}
