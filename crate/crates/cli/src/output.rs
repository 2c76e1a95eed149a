//! CSV grids, run manifests and config snapshots.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use pondera_core::sweeps::{MetricGrid, MetricRecord};
use pondera_core::PhysicalConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bumped whenever the column layout changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip text for a float; exponent form outside
/// `[1e-4, 1e6)`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if !x.is_finite() || a == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("not a number: `{s}`"))
}

/// Prefix on axis columns, which would otherwise collide with record
/// columns of the same name (`theta1`, `omega`).
pub const AXIS_PREFIX: &str = "axis_";

/// Header: axis columns, the record columns, then the sampled cumulant
/// column when present.
pub fn csv_header(grid: &MetricGrid) -> Vec<String> {
    let mut h: Vec<String> = grid.meta.axes.iter().map(|a| format!("{AXIS_PREFIX}{}", a.name)).collect();
    h.extend(MetricRecord::COLUMNS.iter().map(|c| c.to_string()));
    if grid.has_monte_carlo() {
        h.push(MetricRecord::MC_COLUMN.into());
    }
    h
}

pub fn write_grid_csv(path: &Path, grid: &MetricGrid) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(csv_header(grid))?;
    let mc = grid.has_monte_carlo();
    for rec in &grid.records {
        let mut row: Vec<String> = rec.coords.iter().map(|x| format_f64(*x)).collect();
        row.extend(rec.metric_values().iter().map(|x| format_f64(*x)));
        if mc {
            row.push(rec.kappa_literal_mc.map_or_else(|| "NaN".into(), format_f64));
        }
        w.write_record(&row)?;
    }
    w.flush()
}

/// Parsed CSV grid: axis column names and records.
#[derive(Debug)]
pub struct CsvGrid {
    pub axis_names: Vec<String>,
    pub records: Vec<MetricRecord>,
}

pub fn read_grid_csv(path: &Path) -> Result<CsvGrid, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    let first_metric = header
        .iter()
        .position(|h| h == MetricRecord::COLUMNS[0])
        .ok_or("missing metric columns")?;
    let n_metrics = MetricRecord::COLUMNS.len();
    if header.len() < first_metric + n_metrics
        || header[first_metric..first_metric + n_metrics] != MetricRecord::COLUMNS.map(String::from)
    {
        return Err("metric columns out of order".into());
    }
    let has_mc = header.last().map(String::as_str) == Some(MetricRecord::MC_COLUMN);
    let mut records = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| e.to_string())?;
        let vals: Vec<f64> = row.iter().map(parse_f64).collect::<Result<_, _>>()?;
        let coords = vals[..first_metric].to_vec();
        let metrics = &vals[first_metric..first_metric + n_metrics];
        let mc = has_mc.then(|| vals[first_metric + n_metrics]);
        records.push(MetricRecord::from_values(coords, metrics, mc).map_err(|e| e.to_string())?);
    }
    Ok(CsvGrid {
        axis_names: header[..first_metric]
            .iter()
            .map(|h| h.strip_prefix(AXIS_PREFIX).unwrap_or(h).to_string())
            .collect(),
        records,
    })
}

/// SHA-256 of the canonical config JSON.
pub fn config_hash(cfg: &PhysicalConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_canonical_json().as_bytes()))
}

pub fn write_config_snapshot(path: &Path, cfg: &PhysicalConfig) -> io::Result<()> {
    let text = serde_json::to_string_pretty(&cfg.to_document()).expect("config serializes");
    fs::write(path, text + "\n")
}

/// How plots were drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotInfo {
    pub file: String,
    pub metric: String,
    pub kind: String,
    pub colormap: Option<String>,
    pub x_scale: String,
    pub value_range: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_sha256: String,
    pub engine_version: String,
    pub csv_schema_version: u32,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub seed: u64,
    pub threads: usize,
    pub mc_samples: usize,
    /// Analysis sideband frequency (rad/s) and how it was chosen.
    pub analysis_omega: Option<f64>,
    pub omega_source: Option<String>,
    pub output_loss: f64,
    pub outputs: Vec<String>,
    pub plots: Vec<PlotInfo>,
    /// Recipe settings for `reproduce`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recipe: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
