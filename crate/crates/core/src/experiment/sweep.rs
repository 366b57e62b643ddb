//! Viscosity sweep at fixed initial data, locating where the series stops
//! converging.

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::config::ExperimentConfig;
use super::run::run_experiment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub nu: f64,
    pub t_max: f64,
    pub smallness_ratio: f64,
    pub term_ratios: Vec<f64>,
    /// Tail rule found an order and the fixed-point check passed.
    pub converged: bool,
    /// Every ratio from `k = 5` on exceeds one.
    pub growing: bool,
}

impl SweepRun {
    /// Last stored term ratio.
    pub fn final_ratio(&self) -> f64 {
        self.term_ratios.last().cloned().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<SweepRun>,
    /// Geometric mean of the largest `ρ` whose final term ratio is below one
    /// and the smallest `ρ` whose final ratio is above one.
    pub critical_rho: Option<f64>,
}

/// Runs `base` at each viscosity with only the series phase and its cheap
/// checks. `t_max` scales as `1/ν` so every run covers the same number of
/// viscous time units.
pub fn nu_sweep(base: &ExperimentConfig, nus: &[f64]) -> Result<SweepReport> {
    let mut runs = vec![];
    for &nu in nus {
        let mut cfg = base.clone();
        cfg.nu = nu;
        cfg.time.t_max = base.time.t_max * base.nu / nu;
        cfg.checks.envelopes = false;
        cfg.checks.residual = false;
        cfg.checks.oracle = false;
        cfg.checks.complex_ext = false;
        cfg.output.dir = None;
        let report = run_experiment(&cfg)?;
        let series = report.series.clone().unwrap_or_else(|| panic!("series phase failed: {:?}", report.errors));
        let converged = series.chosen_k.is_some() && report.check("fixed_point").is_some_and(|c| c.passed);
        runs.push(SweepRun {
            nu,
            t_max: cfg.time.t_max,
            smallness_ratio: report.smallness_ratio,
            term_ratios: series.term_ratios,
            converged,
            growing: series.observed_growth,
        });
    }
    runs.sort_by(|a, b| a.smallness_ratio.total_cmp(&b.smallness_ratio));
    let below = runs.iter().filter(|r| r.final_ratio() < 1.0).map(|r| r.smallness_ratio).max_by(f64::total_cmp);
    let above = runs.iter().filter(|r| r.final_ratio() > 1.0).map(|r| r.smallness_ratio).min_by(f64::total_cmp);
    let critical_rho = match (below, above) {
        (Some(lo), Some(hi)) if lo < hi => Some((lo * hi).sqrt()),
        _ => None,
    };
    Ok(SweepReport { runs, critical_rho })
}
