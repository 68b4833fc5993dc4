use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::BenchError;

/// Outcome of one pipeline run. Wall-clock timings are kept in
/// [`Timings`] so that seeded reruns serialize to identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    /// `cylinder` or `general`.
    pub method: String,
    pub direct: DirectSummary,
    pub points: Vec<PointReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectSummary {
    pub iterations: usize,
    /// Picard increments in the `H½₀₀*` norm.
    pub residuals: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub energy: f64,
    pub fixed_point_defect: f64,
    pub oscillation_gamma1: f64,
    /// `max |g|` at distance `≥ 2 r₀` from the boundary; absent when no
    /// grid point qualifies.
    pub flux_lower_bound: Option<f64>,
    /// Grid coordinates along the first axis of `Γ₁`.
    pub grid: Vec<f64>,
    pub u_gamma1: Vec<f64>,
    pub flux_gamma1: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub eps: f64,
    /// Level handed to the regularization (the zero floor when `eps = 0`).
    pub eps_regularization: f64,
    pub seeds: [u64; 2],
    pub gamma: f64,
    pub policy: String,
    pub alpha: f64,
    pub cutoff: usize,
    /// `‖u_ε - u‖` on `Γ₁` in `H½₀₀`.
    pub trace_error: f64,
    /// `‖∂_ν u_ε - ∂_ν u‖` on `Γ₁` in `H½₀₀*`.
    pub flux_error: f64,
    pub u_gamma1: Vec<f64>,
    pub flux_gamma1: Vec<f64>,
    pub identification: Option<IdentReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentReport {
    pub bins: usize,
    pub bin_width: f64,
    pub delta: f64,
    pub flagged: usize,
    /// Sup-error of `f_ε` over interior flagged bins.
    pub sup_error: Option<f64>,
    /// Same after shifting `f_ε(0)` to zero.
    pub sup_error_anchored: Option<f64>,
    pub anchor_shift: f64,
    /// Weighted squared flux misfit of the bin-constant table.
    pub misfit: f64,
    pub table: Vec<TableRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub center: f64,
    pub value: f64,
    pub truth: f64,
    pub weight: f64,
    pub dispersion: f64,
    pub flagged: bool,
}

/// Wall-clock seconds per stage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timings {
    pub entries: Vec<(String, f64)>,
}

impl Timings {
    pub fn push(&mut self, stage: impl Into<String>, seconds: f64) {
        self.entries.push((stage.into(), seconds));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,wall_time_s\n");
        for (stage, s) in &self.entries {
            let _ = writeln!(out, "{stage},{s}");
        }
        out
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const ERRORS_HEADER: &str =
    "eps,alpha,cutoff_K,trace_error_H1/2_00,flux_error_H1/2_00_dual,f_sup_error_Linf_flagged,f_sup_error_anchored_Linf_flagged";

pub const SUMMARY_HEADER: &str = "eps,alpha,cutoff_K,trace_error_H1/2_00,trace_ratio,flux_error_H1/2_00_dual,flux_ratio,f_sup_error_Linf_flagged,f_ratio";

pub const TABLE_HEADER: &str = "bin_center_u,f_identified,f_true,weight_L1,dispersion_flux2,flagged";

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Per-ε error table.
    pub fn errors_csv(&self) -> String {
        let mut out = format!("{ERRORS_HEADER}\n");
        for p in &self.points {
            let id = p.identification.as_ref();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.eps,
                p.alpha,
                p.cutoff,
                p.trace_error,
                p.flux_error,
                opt(id.and_then(|i| i.sup_error)),
                opt(id.and_then(|i| i.sup_error_anchored)),
            );
        }
        out
    }

    /// Identified table of point `i`, if identification ran.
    pub fn table_csv(&self, i: usize) -> Option<String> {
        let id = self.points.get(i)?.identification.as_ref()?;
        let mut out = format!("{TABLE_HEADER}\n");
        for r in &id.table {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.center, r.value, r.truth, r.weight, r.dispersion, r.flagged as u8
            );
        }
        Some(out)
    }

    /// Writes `report.json`, `errors.csv` and one `table_<i>.csv` per point.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
        let mut files = vec![
            write_text(dir, "report.json", &self.to_json())?,
            write_text(dir, "errors.csv", &self.errors_csv())?,
        ];
        for i in 0..self.points.len() {
            if let Some(t) = self.table_csv(i) {
                files.push(write_text(dir, &format!("table_{i}.csv"), &t)?);
            }
        }
        Ok(files)
    }
}

/// `prev / current`, or empty when either is missing or zero.
fn ratio(prev: Option<f64>, cur: Option<f64>) -> String {
    match (prev, cur) {
        (Some(a), Some(b)) if b > 0.0 => (a / b).to_string(),
        _ => String::new(),
    }
}

/// One row per report (first point of each), with observed ratios of
/// successive errors. The first row has no ratios.
pub fn summary_csv(reports: &[RunReport]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    let mut prev: Option<&PointReport> = None;
    for p in reports.iter().filter_map(|r| r.points.first()) {
        let f = |q: &PointReport| q.identification.as_ref().and_then(|i| i.sup_error);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.eps,
            p.alpha,
            p.cutoff,
            p.trace_error,
            ratio(prev.map(|q| q.trace_error), Some(p.trace_error)),
            p.flux_error,
            ratio(prev.map(|q| q.flux_error), Some(p.flux_error)),
            opt(f(p)),
            ratio(prev.and_then(f), f(p)),
        );
        prev = Some(p);
    }
    out
}

pub fn write_text(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| BenchError::io(&path, e))?;
    Ok(path)
}
