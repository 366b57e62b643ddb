//! Report types and their JSON/CSV extracts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::MomentumResidual;
use crate::calibration::Calibration;
use crate::caloric::Dominance;
use crate::error::Result;
use crate::extension::{write_growth_csv, GrowthFit};

use super::config::ExperimentConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub d: usize,
    pub h: f64,
    pub radius: f64,
    pub modes: usize,
    pub fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub term_norms: Vec<f64>,
    pub term_ratios: Vec<f64>,
    /// Tail-rule order; absent when divergence is predicted.
    pub chosen_k: Option<usize>,
    /// Order actually summed for the downstream checks.
    pub summed_k: usize,
    pub predicted_divergence: Option<String>,
    /// `‖v_{k+1}‖ > ‖v_k‖` for every stored `k >= 5`.
    pub observed_growth: bool,
    pub max_divergence_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointEntry {
    pub k: usize,
    pub residual: f64,
    /// Residual over `sup_t ‖v₀‖_{1⊕2}`.
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeEntry {
    pub k: usize,
    pub m: u32,
    pub n: u32,
    pub dominance: Dominance,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub per_time: Vec<f64>,
    pub sup_gap: f64,
    /// `sup_gap / ‖û⁰‖₂`.
    pub relative_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexSummary {
    pub fits: Vec<GrowthFit>,
    /// Largest `|U(x) - u(x)|` between the extension at real points and the
    /// physical reconstruction.
    pub real_axis_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Passed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub grid: GridInfo,
    pub config: ExperimentConfig,
    pub c_hat: f64,
    /// Present when `c_hat` was fitted rather than given.
    pub calibration: Option<Calibration>,
    pub smallness_ratio: f64,
    pub initial_l2: f64,
    pub series: Option<SeriesSummary>,
    pub fixed_point: Vec<FixedPointEntry>,
    pub momentum: Option<MomentumResidual>,
    pub energy: Vec<EnergySample>,
    pub envelopes: Vec<EnvelopeEntry>,
    pub oracle: Option<OracleSummary>,
    pub complex: Option<ComplexSummary>,
    pub checks: Vec<CheckOutcome>,
    pub status: RunStatus,
    pub errors: Vec<String>,
    /// Wall-clock seconds per phase. The only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.status == RunStatus::Passed
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The report with timings cleared, for comparisons across runs.
    pub fn without_timings(&self) -> Self {
        Self { timings: BTreeMap::new(), ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Writes `report.json`, or the `energy.csv`, `term_norms.csv` and
/// `growth.csv` extracts, into `dir`. Returns the paths written.
pub fn emit_report(report: &ExperimentReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = vec![];
    match format {
        ReportFormat::Json => {
            let path = dir.join("report.json");
            std::fs::write(&path, report.to_json()? + "\n")?;
            written.push(path);
        }
        ReportFormat::Csv => {
            let path = dir.join("energy.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["t", "energy"])?;
            for s in &report.energy {
                w.write_record([s.t.to_string(), format!("{:e}", s.energy)])?;
            }
            w.flush()?;
            written.push(path);

            let path = dir.join("term_norms.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["k", "norm", "ratio"])?;
            if let Some(s) = &report.series {
                for (k, n) in s.term_norms.iter().enumerate() {
                    let ratio = if k == 0 { String::new() } else { s.term_ratios[k - 1].to_string() };
                    w.write_record([k.to_string(), format!("{n:e}"), ratio])?;
                }
            }
            w.flush()?;
            written.push(path);

            let path = dir.join("growth.csv");
            let fits = report.complex.as_ref().map_or(&[][..], |c| &c.fits[..]);
            write_growth_csv(BufWriter::new(File::create(&path)?), fits)?;
            written.push(path);
        }
    }
    Ok(written)
}
