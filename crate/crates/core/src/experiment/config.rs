//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::convolution::ConvolutionMethod;
use crate::error::{Error, Result};
use crate::field::SwirlRecipe;
use crate::oracle::OracleOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub nu: f64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub truncation: TruncationSpec,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    #[serde(default)]
    pub checks: ChecksSpec,
    #[serde(default)]
    pub oracle: OracleOptions,
    #[serde(default)]
    pub growth: GrowthSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub h: f64,
    pub radius: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { h: 0.5, radius: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub t_max: f64,
    /// Number of intervals; the grid has `steps + 1` points.
    pub steps: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { t_max: 0.8, steps: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    Seeded,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    pub family: Family,
    pub amplitude: f64,
    pub width: f64,
    pub recipe: Recipe,
    /// Only read by the constant recipe.
    pub direction: Vec<f64>,
    pub seed: u64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            family: Family::Gaussian,
            amplitude: 0.0024,
            width: 1.0,
            recipe: Recipe::Seeded,
            direction: vec![],
            seed: 1,
        }
    }
}

impl InitialSpec {
    pub fn swirl(&self) -> SwirlRecipe {
        match self.recipe {
            Recipe::Seeded => SwirlRecipe::Seeded { seed: self.seed },
            Recipe::Constant => SwirlRecipe::Constant { direction: self.direction.clone() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationSpec {
    pub k_max: usize,
    /// Tail tolerance relative to `‖v₀‖`.
    pub tail_tol: f64,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self { k_max: 16, tail_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSpec {
    /// Fixed constant; when absent it is fitted on the corpus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_hat: Option<f64>,
    pub corpus_size: usize,
    pub seed: u64,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self { c_hat: None, corpus_size: 32, seed: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSpec {
    pub envelopes: bool,
    pub residual: bool,
    pub oracle: bool,
    pub complex_ext: bool,
    pub convolution: ConvolutionMethod,
    /// Highest term order whose envelope is checked.
    pub envelope_k_max: usize,
    /// Moduli below this fraction of the slice maximum count as roundoff.
    pub noise_floor: f64,
    pub fixed_point_tol: f64,
    /// Momentum residual relative to `‖v₀‖`.
    pub residual_tol: f64,
    pub energy_growth_tol: f64,
    pub energy_step_tol: f64,
    /// Oracle gap relative to `‖û⁰‖₂`.
    pub oracle_tol: f64,
    pub max_growth_order: f64,
}

impl Default for ChecksSpec {
    fn default() -> Self {
        Self {
            envelopes: true,
            residual: true,
            oracle: true,
            complex_ext: true,
            convolution: ConvolutionMethod::Fft,
            envelope_k_max: 3,
            noise_floor: 1e-12,
            fixed_point_tol: 1e-6,
            residual_tol: 0.05,
            energy_growth_tol: 0.05,
            energy_step_tol: 1e-8,
            oracle_tol: 1e-4,
            max_growth_order: 2.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthSpec {
    /// Evaluation times; empty means the final time.
    pub times: Vec<f64>,
    pub directions: usize,
    pub direction_seed: u64,
    /// Explicit radii; empty means `radii_count` radii picked from the grid reach.
    pub radii: Vec<f64>,
    pub radii_count: usize,
}

impl Default for GrowthSpec {
    fn default() -> Self {
        Self { times: vec![], directions: 3, direction_seed: 11, radii: vec![], radii_count: 10 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Directory for the report and CSV extracts; nothing is written when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub csv: bool,
    /// Also write the summed solution as a binary field dump.
    pub dump: bool,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let at = e.span().map(|s| format!("line {}: ", line_of(text, s.start))).unwrap_or_default();
        Error::Config(format!("{at}{}", e.message()))
    })?;
    cfg.validate(text)?;
    Ok(cfg)
}

pub fn to_toml(cfg: &ExperimentConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (top level when `section` is empty).
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let name = l.split('=').next().unwrap_or("").trim();
        if current == section && name == key {
            return Some(n + 1);
        }
    }
    None
}

impl ExperimentConfig {
    /// Defaults everywhere except the two required keys.
    pub fn with(d: usize, nu: f64) -> Self {
        Self {
            d,
            nu,
            grid: GridSpec::default(),
            time: TimeSpec::default(),
            initial: InitialSpec::default(),
            truncation: TruncationSpec::default(),
            calibration: CalibrationSpec::default(),
            checks: ChecksSpec::default(),
            oracle: OracleOptions::default(),
            growth: GrowthSpec::default(),
            output: OutputSpec::default(),
        }
    }

    /// `text` is the source the config came from, used to report line numbers.
    pub fn validate(&self, text: &str) -> Result<()> {
        let fail = |section: &str, key: &str, msg: String| -> Result<()> {
            let at = locate(text, section, key).map(|n| format!("line {n}: ")).unwrap_or_default();
            let path = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            Err(Error::Config(format!("{at}{path}: {msg}")))
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(1..=3).contains(&self.d) {
            return fail("", "d", format!("dimension must be 1, 2 or 3, got {}", self.d));
        }
        if !positive(self.nu) {
            return fail("", "nu", format!("must be positive, got {}", self.nu));
        }
        if !positive(self.grid.h) {
            return fail("grid", "h", format!("must be positive, got {}", self.grid.h));
        }
        if !positive(self.grid.radius) || self.grid.radius < self.grid.h {
            return fail("grid", "radius", format!("must be at least h, got {}", self.grid.radius));
        }
        if !positive(self.time.t_max) {
            return fail("time", "t_max", format!("must be positive, got {}", self.time.t_max));
        }
        if self.time.steps < 2 {
            return fail("time", "steps", format!("need at least 2 intervals, got {}", self.time.steps));
        }
        if !(self.initial.amplitude >= 0.0 && self.initial.amplitude.is_finite()) {
            return fail("initial", "amplitude", format!("must be nonnegative, got {}", self.initial.amplitude));
        }
        if !positive(self.initial.width) {
            return fail("initial", "width", format!("must be positive, got {}", self.initial.width));
        }
        if self.initial.recipe == Recipe::Constant && self.initial.direction.len() != self.d {
            return fail("initial", "direction", format!("constant recipe needs {} components", self.d));
        }
        if !positive(self.truncation.tail_tol) {
            return fail("truncation", "tail_tol", format!("must be positive, got {}", self.truncation.tail_tol));
        }
        if let Some(c) = self.calibration.c_hat {
            if !positive(c) {
                return fail("calibration", "c_hat", format!("must be positive, got {c}"));
            }
        } else if self.calibration.corpus_size == 0 {
            return fail("calibration", "corpus_size", "must be positive".into());
        }
        if self.oracle.substeps == 0 {
            return fail("oracle", "substeps", "must be positive".into());
        }
        if !positive(self.oracle.blowup_factor) {
            return fail("oracle", "blowup_factor", format!("must be positive, got {}", self.oracle.blowup_factor));
        }
        for &t in &self.growth.times {
            if !(t > 0.0 && t <= self.time.t_max * (1.0 + 1e-12)) {
                return fail("growth", "times", format!("{t} is outside (0, t_max]"));
            }
        }
        if self.growth.radii.iter().any(|&r| !positive(r)) {
            return fail("growth", "radii", "radii must be positive".into());
        }
        if self.checks.complex_ext && self.growth.radii.is_empty() && self.growth.radii_count < 4 {
            return fail("growth", "radii_count", "the fit needs at least 4 radii".into());
        }
        if self.checks.complex_ext && self.growth.directions == 0 {
            return fail("growth", "directions", "must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("d = 3\nnu = 1.0\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::with(3, 1.0));
        assert_eq!(cfg.checks.convolution, ConvolutionMethod::Fft);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("d = 3\nnu = -1\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("nu"), "{e}");
        let e = parse_config("d = 3\nnu = 1\n[grid]\nh = 0.5\nbogus = 2\n").unwrap_err().to_string();
        assert!(e.contains("line 5") && e.contains("bogus"), "{e}");
        let e = parse_config("d = 3\nnu = 1\n[time]\nsteps = 1\n").unwrap_err().to_string();
        assert!(e.contains("line 4"), "{e}");
        assert!(parse_config("nu = 1\n").is_err());
    }

    #[test]
    fn roundtrip_through_toml() {
        let mut cfg = ExperimentConfig::with(3, 0.05);
        cfg.calibration.c_hat = Some(0.5);
        cfg.growth.times = vec![0.1, 0.8];
        cfg.output.dir = Some("out".into());
        let text = to_toml(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
