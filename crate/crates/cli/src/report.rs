//! Run summaries read back from a manifest and its output files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use baffle_core::hemo::PressureDrop;
use baffle_core::mesh::TopologyReport;

use crate::plan::{sha256_hex, RunManifest, MANIFEST, SECTIONS_CSV};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("corrupt manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("sections CSV line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Human- and machine-readable run summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub a_target: f64,
    pub min_area: f64,
    pub mean_area: f64,
    pub accepted_sections: usize,
    pub raised_sections: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_smoothed_min: f64,
    pub alpha_smoothed_max: f64,
    pub dp_estimate: PressureDrop,
    pub topology: TopologyReport,
    pub boundary_preserved: bool,
    /// Output files that are missing or whose digest differs from the manifest.
    pub integrity_warnings: Vec<String>,
}

/// Raw and smoothed amplitude columns of the accepted rows.
pub fn csv_amplitudes(csv: &str) -> Result<Vec<(f64, f64)>, ReportError> {
    let mut lines = csv.lines().enumerate();
    let header = lines.next().map(|(_, h)| h).unwrap_or_default();
    let columns: Vec<&str> = header.split(',').collect();
    let find = |name: &str| {
        columns.iter().position(|c| *c == name).ok_or_else(|| ReportError::Csv {
            line: 1,
            message: format!("missing column {name}"),
        })
    };
    let (acc, raw, smooth) = (find("accepted")?, find("alpha")?, find("alpha_smoothed")?);
    let mut out = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(ReportError::Csv {
                line: i + 1,
                message: format!("expected {} fields, found {}", columns.len(), fields.len()),
            });
        }
        if fields[acc] != "1" {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| ReportError::Csv {
                line: i + 1,
                message: format!("not a number: {s:?}"),
            })
        };
        out.push((parse(fields[raw])?, parse(fields[smooth])?));
    }
    Ok(out)
}

/// Builds the summary from the manifest and the sections CSV text. Amplitude extrema come
/// from the CSV so that the report agrees with the stored file.
pub fn summarize(manifest: &RunManifest, sections_csv: &str) -> Result<ReportSummary, ReportError> {
    let amps = csv_amplitudes(sections_csv)?;
    let fold = |f: fn(&(f64, f64)) -> f64| {
        amps.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let (alpha_min, alpha_max) = fold(|a| a.0);
    let (alpha_smoothed_min, alpha_smoothed_max) = fold(|a| a.1);
    let areas = &manifest.area_profile.area;
    Ok(ReportSummary {
        a_target: manifest.a_target,
        min_area: areas.iter().copied().fold(f64::INFINITY, f64::min),
        mean_area: manifest.area_profile.mean_area(),
        accepted_sections: amps.len(),
        raised_sections: manifest.raised_sections.len(),
        alpha_min,
        alpha_max,
        alpha_smoothed_min,
        alpha_smoothed_max,
        dp_estimate: manifest.dp_estimate,
        topology: manifest.topology.clone(),
        boundary_preserved: manifest.boundary_preserved,
        integrity_warnings: Vec::new(),
    })
}

/// Compares every recorded output digest with the file on disk.
pub fn verify_outputs(dir: &Path, manifest: &RunManifest) -> Vec<String> {
    let mut warnings = Vec::new();
    for (name, expected) in &manifest.output_digests {
        match fs::read(dir.join(name)) {
            Ok(bytes) if sha256_hex(&bytes) == *expected => {}
            Ok(_) => warnings.push(format!("{name}: digest does not match the manifest")),
            Err(e) => warnings.push(format!("{name}: cannot read ({e})")),
        }
    }
    warnings
}

/// Reads `manifest` and the sections CSV beside it, checks output integrity and summarizes.
pub fn cmd_report(manifest_path: &Path) -> Result<ReportSummary, ReportError> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|source| ReportError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    let manifest: RunManifest = serde_json::from_str(&read(manifest_path)?)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let csv = read(&dir.join(SECTIONS_CSV))?;
    let mut summary = summarize(&manifest, &csv)?;
    summary.integrity_warnings = verify_outputs(dir, &manifest);
    Ok(summary)
}

pub fn render_text(s: &ReportSummary) -> String {
    let mut out = String::new();
    let t = &s.topology;
    let _ = writeln!(out, "target area          {:.9} cm2", s.a_target);
    let _ = writeln!(out, "min section area     {:.9} cm2", s.min_area);
    let _ = writeln!(out, "mean section area    {:.9} cm2", s.mean_area);
    let _ = writeln!(out, "accepted sections    {}", s.accepted_sections);
    let _ = writeln!(out, "raised sections      {}", s.raised_sections);
    let _ = writeln!(out, "alpha raw            [{:.9}, {:.9}]", s.alpha_min, s.alpha_max);
    let _ = writeln!(out, "alpha smoothed       [{:.9}, {:.9}]", s.alpha_smoothed_min, s.alpha_smoothed_max);
    let _ = writeln!(
        out,
        "pressure drop        {:.4} mmHg (viscous {:.4}, Bernoulli {:.4})",
        s.dp_estimate.dp_total, s.dp_estimate.dp_viscous, s.dp_estimate.dp_bernoulli
    );
    let _ = writeln!(
        out,
        "topology             watertight {}, boundary edges {}, non-manifold edges {}, components {}, Euler {}",
        t.watertight, t.boundary_edges, t.non_manifold_edges, t.connected_components, t.euler_characteristic
    );
    let _ = writeln!(out, "boundary preserved   {}", s.boundary_preserved);
    for w in &s.integrity_warnings {
        let _ = writeln!(out, "WARNING integrity    {w}");
    }
    out
}

/// Name of the manifest inside a run directory.
pub fn manifest_in(dir: &Path) -> std::path::PathBuf {
    dir.join(MANIFEST)
}
