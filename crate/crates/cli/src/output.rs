//! File formats. Derived floats are written with 12 significant digits;
//! positions and the real and imaginary weight parts use the shortest
//! representation that parses back to the same `f64`, so that a stored
//! design can be re-evaluated exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tripole::metrics::PatternSweep;
use tripole::{KktResiduals, MetricBundle, WeightVector};

use crate::config::RunConfig;
use crate::error::CliError;

pub const LOCATIONS_CSV: &str = "locations.csv";
pub const PATTERN_CSV: &str = "pattern.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const COMPARISON_CSV: &str = "comparison.csv";
pub const PATTERNS_CSV: &str = "patterns.csv";

const LOCATION_HEADER: [&str; 15] = [
    "index",
    "position_wl",
    "active",
    "abs_wx",
    "abs_wy",
    "abs_wz",
    "phase_wx_deg",
    "phase_wy_deg",
    "phase_wz_deg",
    "re_wx",
    "im_wx",
    "re_wy",
    "im_wy",
    "re_wz",
    "im_wz",
];

/// `x` rounded to 12 significant digits, trailing zeros removed.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    s
}

fn opt12(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_file(path: PathBuf, contents: &[u8]) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Output { path, source })
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writes into a Vec cannot fail
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(r).unwrap();
    }
    w.into_inner().unwrap()
}

pub fn write_locations(dir: &Path, positions: &[f64], w: &WeightVector) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = positions
        .iter()
        .zip(w.triples())
        .enumerate()
        .map(|(m, (pos, t))| {
            let active = t.iter().any(|c| *c != Complex64::new(0.0, 0.0));
            let mut row = vec![m.to_string(), pos.to_string(), u8::from(active).to_string()];
            row.extend(t.iter().map(|c| sig12(c.norm())));
            row.extend(t.iter().map(|c| sig12(c.arg().to_degrees())));
            row.extend(t.iter().flat_map(|c| [c.re.to_string(), c.im.to_string()]));
            row
        })
        .collect();
    write_file(dir.join(LOCATIONS_CSV), &csv_bytes(&LOCATION_HEADER, &rows))
}

#[derive(Debug, Deserialize)]
struct LocationRow {
    index: usize,
    position_wl: f64,
    re_wx: f64,
    im_wx: f64,
    re_wy: f64,
    im_wy: f64,
    re_wz: f64,
    im_wz: f64,
}

/// Reads a locations file back into `(positions, weights)`.
pub fn read_locations(path: &Path) -> Result<(Vec<f64>, WeightVector), CliError> {
    let input = |msg: String| CliError::Input {
        path: path.to_path_buf(),
        msg,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| input(e.to_string()))?;
    let mut positions = Vec::new();
    let mut triples = Vec::new();
    for (i, row) in reader.deserialize::<LocationRow>().enumerate() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(i as u64 + 2, |p| p.line());
            input(format!("line {line}: {e}"))
        })?;
        if row.index != i {
            return Err(input(format!("line {}: expected index {i}, found {}", i + 2, row.index)));
        }
        positions.push(row.position_wl);
        triples.push([
            Complex64::new(row.re_wx, row.im_wx),
            Complex64::new(row.re_wy, row.im_wy),
            Complex64::new(row.re_wz, row.im_wz),
        ]);
    }
    Ok((positions, WeightVector::new(triples)))
}

pub fn write_pattern(dir: &Path, sweep: &PatternSweep) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = sweep
        .points
        .iter()
        .map(|p| vec![sig12(p.signed_theta_deg), sig12(p.magnitude_db)])
        .collect();
    write_file(dir.join(PATTERN_CSV), &csv_bytes(&["signed_theta_deg", "db"], &rows))
}

/// One reweighting iteration as reported in `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub active_count: usize,
    pub residual: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: RunConfig,
    pub metrics: MetricBundle,
    /// Objective of the final solve; absent for re-evaluated weights and
    /// for the ULA.
    pub objective: Option<f64>,
    pub solver_residuals: Option<KktResiduals>,
    pub trace: Option<Vec<TraceRow>>,
    pub warnings: Vec<String>,
}

pub fn write_metrics(dir: &Path, report: &MetricsReport) -> Result<(), CliError> {
    let mut json = serde_json::to_vec_pretty(report).expect("report is always serializable");
    json.push(b'\n');
    write_file(dir.join(METRICS_JSON), &json)
}

/// One row of `comparison.csv`.
pub struct ComparisonRow {
    pub method: &'static str,
    pub status: &'static str,
    pub metrics: Option<MetricBundle>,
    pub objective: Option<f64>,
    pub iterations: Option<usize>,
    pub message: String,
}

pub fn write_comparison(dir: &Path, rows: &[ComparisonRow]) -> Result<(), CliError> {
    let header = [
        "method",
        "status",
        "num_tripoles",
        "aperture_wl",
        "mean_sep_wl",
        "min_sep_wl",
        "mainlobe_deg",
        "psl_db",
        "sidelobe_peak_db",
        "residual",
        "objective",
        "reweight_iterations",
        "message",
    ];
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let m = r.metrics.as_ref();
            vec![
                r.method.to_string(),
                r.status.to_string(),
                m.map(|m| m.num_tripoles.to_string()).unwrap_or_default(),
                opt12(m.and_then(|m| m.aperture_wl)),
                opt12(m.and_then(|m| m.mean_sep_wl)),
                opt12(m.and_then(|m| m.min_sep_wl)),
                opt12(m.map(|m| m.mainlobe_deg)),
                opt12(m.map(|m| m.psl_db)),
                opt12(m.and_then(|m| m.sidelobe_peak_db)),
                opt12(m.map(|m| m.residual)),
                opt12(r.objective),
                r.iterations.map(|k| k.to_string()).unwrap_or_default(),
                r.message.clone(),
            ]
        })
        .collect();
    write_file(dir.join(COMPARISON_CSV), &csv_bytes(&header, &rows))
}

/// Side-by-side patterns. Every sweep must use the same resolution; a
/// missing series leaves its column empty.
pub fn write_patterns(dir: &Path, series: &[(&str, Option<&PatternSweep>)]) -> Result<(), CliError> {
    let Some(reference) = series.iter().find_map(|(_, s)| *s) else {
        return Ok(());
    };
    let mut header = vec!["signed_theta_deg".to_string()];
    header.extend(series.iter().map(|(name, _)| format!("{name}_db")));
    let rows: Vec<Vec<String>> = reference
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![sig12(p.signed_theta_deg)];
            row.extend(series.iter().map(|(_, s)| opt12(s.map(|s| s.points[i].magnitude_db))));
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_file(dir.join(PATTERNS_CSV), &csv_bytes(&header, &rows))
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 360.0;
const SVG_MARGIN: f64 = 48.0;
const SVG_FLOOR_DB: f64 = -60.0;
const SVG_COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

/// Pattern plot (dB against signed theta) as a standalone SVG document.
pub fn render_svg(series: &[(&str, &PatternSweep)]) -> String {
    let x = |t: f64| SVG_MARGIN + (t + 90.0) / 180.0 * (SVG_W - 2.0 * SVG_MARGIN);
    let y = |db: f64| SVG_MARGIN + db.max(SVG_FLOOR_DB) / SVG_FLOOR_DB * (SVG_H - 2.0 * SVG_MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for db in (0..=60).step_by(10) {
        let yy = y(-(db as f64));
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{yy:.1}" x2="{}" y2="{yy:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">-{db}</text>"##,
            x(-90.0),
            x(90.0),
            SVG_MARGIN - 4.0,
            yy + 4.0
        );
    }
    for t in (-90..=90).step_by(30) {
        let xx = x(t as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{xx:.1}" y1="{}" x2="{xx:.1}" y2="{}" stroke="#ddd"/><text x="{xx:.1}" y="{}" text-anchor="middle">{t}</text>"##,
            y(0.0),
            y(SVG_FLOOR_DB),
            SVG_H - SVG_MARGIN + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">signed theta (deg)</text>"#,
        SVG_W / 2.0,
        SVG_H - 8.0
    );
    for (k, (name, sweep)) in series.iter().enumerate() {
        let color = SVG_COLORS[k % SVG_COLORS.len()];
        let pts: Vec<String> = sweep
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.signed_theta_deg), y(p.magnitude_db)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            SVG_W - SVG_MARGIN - 80.0,
            SVG_MARGIN + 14.0 * (k as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(dir: &Path, file: &str, series: &[(&str, &PatternSweep)]) -> Result<(), CliError> {
    write_file(dir.join(file), render_svg(series).as_bytes())
}
