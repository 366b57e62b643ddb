//! Phase orchestration: seed, series, checks, oracle, complex extension.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{energy, momentum_residual, pressure_symbol, reconstruct_physical};
use crate::calibration::{calibrate_constant, Calibration};
use crate::caloric::lambda_of;
use crate::convolution::Convolver;
use crate::dump::write_dump;
use crate::error::Result;
use crate::extension::{denoise, growth_order_estimate, laplace_fourier_eval, support_radius};
use crate::field::{gaussian_initial_data, smallness_ratio, SpectralField, SpectralTrajectory, TimeGrid};
use crate::grid::FrequencyGrid;
use crate::oracle::{compare_trajectories, run_oracle};
use crate::series::{
    build_v0, catalan_envelope_rhs, fixed_point_residual, monomial_profile, recurse_terms, sum_series,
    truncation_order, SeriesExpansion, DEFAULT_TERM_BUDGET,
};

use super::config::{ExperimentConfig, Family};
use super::report::*;

/// Residuals below this fraction of `‖v₀‖` are roundoff; the monotonicity
/// check does not look past it.
pub const FIXED_POINT_FLOOR: f64 = 1e-13;

/// Orders at which the fixed-point residual is sampled.
pub const FIXED_POINT_ORDERS: [usize; 4] = [2, 4, 8, 16];

/// Envelope violations above this order are reported but do not fail the run.
pub const ENVELOPE_STRICT_K: usize = 2;

struct Seeded {
    grid: Arc<FrequencyGrid>,
    conv: Convolver,
    u0: SpectralField,
    v0: SpectralTrajectory,
    times: Arc<TimeGrid>,
}

struct Builder {
    report: ExperimentReport,
    clock: Instant,
}

impl Builder {
    fn phase_done(&mut self, name: &str) {
        self.report.timings.insert(name.into(), self.clock.elapsed().as_secs_f64());
        self.clock = Instant::now();
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.report.checks.push(CheckOutcome { name: name.into(), passed, detail });
    }

    fn fail(&mut self, phase: &str, e: crate::Error) {
        self.report.errors.push(format!("{phase}: {e}"));
    }

    fn finish(mut self) -> ExperimentReport {
        let ok = self.report.errors.is_empty() && self.report.checks.iter().all(|c| c.passed);
        self.report.status = if ok { RunStatus::Passed } else { RunStatus::Failed };
        self.report
    }
}

/// Runs every enabled phase in order. Phase errors end the run and are
/// recorded in the report rather than returned; only a bad grid is fatal.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate("")?;
    let clock = Instant::now();
    let grid = FrequencyGrid::build(cfg.d, cfg.grid.h, cfg.grid.radius)?;
    let report = ExperimentReport {
        version: env!("CARGO_PKG_VERSION").into(),
        grid: GridInfo {
            d: grid.dim(),
            h: grid.spacing(),
            radius: grid.radius(),
            modes: grid.len(),
            fingerprint: grid.fingerprint(),
        },
        config: cfg.clone(),
        c_hat: f64::NAN,
        calibration: None,
        smallness_ratio: f64::NAN,
        initial_l2: 0.0,
        series: None,
        fixed_point: vec![],
        momentum: None,
        energy: vec![],
        envelopes: vec![],
        oracle: None,
        complex: None,
        checks: vec![],
        status: RunStatus::Failed,
        errors: vec![],
        timings: BTreeMap::new(),
    };
    let mut b = Builder { report, clock };
    let seeded = match seed_phase(cfg, grid, &mut b) {
        Ok(s) => s,
        Err(e) => {
            b.fail("seed", e);
            return Ok(b.finish());
        }
    };
    b.phase_done("seed");
    let (expansion, v) = match series_phase(cfg, &seeded, &mut b) {
        Ok(x) => x,
        Err(e) => {
            b.fail("series", e);
            return Ok(b.finish());
        }
    };
    b.phase_done("series");
    if let Err(e) = checks_phase(cfg, &seeded, &expansion, &v, &mut b) {
        b.fail("checks", e);
        return Ok(b.finish());
    }
    b.phase_done("checks");
    drop(expansion);
    if cfg.checks.oracle {
        if let Err(e) = oracle_phase(cfg, &seeded, &v, &mut b) {
            b.fail("oracle", e);
            return Ok(b.finish());
        }
        b.phase_done("oracle");
    }
    if cfg.checks.complex_ext {
        if let Err(e) = complex_phase(cfg, &seeded, &v, &mut b) {
            b.fail("complex", e);
            return Ok(b.finish());
        }
        b.phase_done("complex");
    }
    if let Some(dir) = &cfg.output.dir {
        if cfg.output.dump {
            let written = std::fs::create_dir_all(dir)
                .map_err(Into::into)
                .and_then(|_| write_dump(BufWriter::new(File::create(dir.join("solution.cnsf"))?), v.slices()));
            if let Err(e) = written {
                b.fail("output", e);
            }
        }
    }
    Ok(b.finish())
}

fn seed_phase(cfg: &ExperimentConfig, grid: Arc<FrequencyGrid>, b: &mut Builder) -> Result<Seeded> {
    let conv = Convolver::new(&grid, cfg.checks.convolution);
    let c_hat = match cfg.calibration.c_hat {
        Some(c) => c,
        None => {
            let cal: Calibration = calibrate_constant(&conv, cfg.calibration.corpus_size, cfg.calibration.seed)?;
            let c = cal.c_hat;
            b.report.calibration = Some(cal);
            c
        }
    };
    b.report.c_hat = c_hat;
    let u0 = match cfg.initial.family {
        Family::Gaussian => gaussian_initial_data(&grid, cfg.initial.amplitude, cfg.initial.width, &cfg.initial.swirl())?,
    };
    b.report.smallness_ratio = smallness_ratio(&u0, cfg.nu, c_hat)?;
    b.report.initial_l2 = u0.l2_norm();
    let times = Arc::new(TimeGrid::uniform(cfg.time.t_max, cfg.time.steps)?);
    let v0 = build_v0(&u0, cfg.nu, &times)?;
    Ok(Seeded { grid, conv, u0, v0, times })
}

fn series_phase(cfg: &ExperimentConfig, s: &Seeded, b: &mut Builder) -> Result<(SeriesExpansion, SpectralTrajectory)> {
    let mut expansion = recurse_terms(&s.v0, cfg.truncation.k_max, cfg.nu, &s.conv, DEFAULT_TERM_BUDGET)?;
    let ratios = expansion.term_ratios();
    let (chosen, predicted) = match truncation_order(&expansion.term_norms, b.report.smallness_ratio, cfg.truncation.tail_tol) {
        Ok(k) => (Some(k), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let tail: Vec<f64> = ratios.iter().skip(5).cloned().collect();
    let observed_growth = !tail.is_empty() && tail.iter().all(|&r| r > 1.0);
    expansion.order = chosen;
    let summed_k = chosen.unwrap_or(expansion.k_max());
    let v = sum_series(&expansion, Some(summed_k))?;
    let max_div = expansion.terms.iter().map(|t| t.max_divergence_ratio()).fold(0.0, f64::max);
    let detail = match (&chosen, &predicted) {
        (Some(k), _) => format!("tail rule chose K = {k}"),
        (None, Some(msg)) => msg.clone(),
        (None, None) => unreachable!(),
    };
    b.check("series_convergence", chosen.is_some(), detail);
    b.check(
        "divergence_free",
        max_div < 1e-10 && v.is_finite(),
        format!("largest |ξ·v|/(|ξ||v|) over all terms {max_div:.3e}"),
    );
    b.report.series = Some(SeriesSummary {
        term_norms: expansion.term_norms.clone(),
        term_ratios: ratios,
        chosen_k: chosen,
        summed_k,
        predicted_divergence: predicted,
        observed_growth,
        max_divergence_ratio: max_div,
    });
    Ok((expansion, v))
}

fn checks_phase(
    cfg: &ExperimentConfig,
    s: &Seeded,
    expansion: &SeriesExpansion,
    v: &SpectralTrajectory,
    b: &mut Builder,
) -> Result<()> {
    let scale = s.v0.sup_norm_1p2();
    let rel = |x: f64| if scale > 0.0 { x / scale } else { 0.0 };

    let mut orders: Vec<usize> = FIXED_POINT_ORDERS.iter().cloned().filter(|&k| k <= expansion.k_max()).collect();
    let chosen = b.report.series.as_ref().and_then(|x| x.chosen_k);
    if let Some(k) = chosen {
        if !orders.contains(&k) {
            orders.push(k);
            orders.sort_unstable();
        }
    }
    for &k in &orders {
        let residual = fixed_point_residual(&sum_series(expansion, Some(k))?, &s.v0, cfg.nu, &s.conv)?;
        b.report.fixed_point.push(FixedPointEntry { k, residual, relative: rel(residual) });
    }
    let sampled: Vec<&FixedPointEntry> =
        b.report.fixed_point.iter().filter(|e| FIXED_POINT_ORDERS.contains(&e.k)).collect();
    let monotone = sampled
        .windows(2)
        .all(|w| w[1].relative < w[0].relative || w[1].relative <= FIXED_POINT_FLOOR);
    let at_chosen = chosen.and_then(|k| b.report.fixed_point.iter().find(|e| e.k == k)).map(|e| e.relative);
    let ok = monotone && at_chosen.is_some_and(|r| r < cfg.checks.fixed_point_tol);
    let detail = format!(
        "relative residuals {:?}; at chosen K {:?}",
        sampled.iter().map(|e| (e.k, e.relative)).collect::<Vec<_>>(),
        at_chosen
    );
    b.check("fixed_point", ok, detail);

    let e = energy(v);
    let e0 = e[0].1;
    let sup = e.iter().map(|x| x.1).fold(0.0, f64::max);
    let worst_step = e.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    b.report.energy = e.iter().map(|&(t, energy)| EnergySample { t, energy }).collect();
    let ok = sup <= e0 * (1.0 + cfg.checks.energy_growth_tol) && worst_step <= cfg.checks.energy_step_tol;
    b.check("energy", ok, format!("E(0) = {e0:.6e}, sup E = {sup:.6e}, largest step increase {worst_step:.3e}"));

    if cfg.checks.residual {
        let r = momentum_residual(v, cfg.nu, &s.conv, true)?;
        let ok = rel(r.sup) <= cfg.checks.residual_tol && r.divergence_ratio < 1e-6;
        b.check(
            "momentum_residual",
            ok,
            format!("sup residual {:.3e} ({:.3e} of ‖v₀‖), divergence ratio {:.1e}", r.sup, rel(r.sup), r.divergence_ratio),
        );
        b.report.momentum = Some(r);
    }

    if cfg.checks.envelopes {
        let leaf = s.u0.modulus_field();
        let top = cfg.checks.envelope_k_max.min(expansion.k_max());
        let mut ok = true;
        for k in 0..=top {
            let profile = monomial_profile(k, &leaf, &s.conv)?;
            let env = catalan_envelope_rhs(k, 0, 0, cfg.nu, &profile)?;
            let dominance = env.dominates(&expansion.terms[k], 1e-9, cfg.checks.noise_floor)?;
            let passed = dominance.violations == 0;
            if k <= ENVELOPE_STRICT_K {
                ok &= passed;
            }
            b.report.envelopes.push(EnvelopeEntry { k, m: 0, n: 0, dominance, passed });
        }
        let detail = b
            .report
            .envelopes
            .iter()
            .map(|e| format!("k={}: {} violations, worst ratio {:.3e}", e.k, e.dominance.violations, e.dominance.worst_ratio))
            .collect::<Vec<_>>()
            .join("; ");
        b.check("envelopes", ok, detail);
    }
    Ok(())
}

fn oracle_phase(cfg: &ExperimentConfig, s: &Seeded, v: &SpectralTrajectory, b: &mut Builder) -> Result<()> {
    let o = run_oracle(&s.u0, cfg.nu, &s.times, &cfg.oracle)?;
    let gap = compare_trajectories(v, &o)?;
    let l2 = s.u0.l2_norm();
    let relative_gap = if l2 > 0.0 { gap.sup_gap / l2 } else { 0.0 };
    b.check(
        "oracle",
        relative_gap <= cfg.checks.oracle_tol,
        format!("sup gap {:.3e} ({relative_gap:.3e} of ‖û⁰‖₂)", gap.sup_gap),
    );
    b.report.oracle = Some(OracleSummary { per_time: gap.per_time, sup_gap: gap.sup_gap, relative_gap });
    Ok(())
}

/// Unit directions drawn uniformly on the sphere by rejection.
pub fn random_directions(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    while out.len() < count {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            out.push(x.iter().map(|a| a / n).collect());
        }
    }
    out
}

/// Geometric radii up to `r_max = (reach - 1.5)(λt + w)/π`, so the summand
/// peak `πr/(λt + w)` of Gaussian-like data stays 1.5 inside `reach`. The
/// smallest radius puts the Gaussian log-derivative `2π²r²/(λt + w)` near 1.5.
pub fn default_radii(reach: f64, nu: f64, width: f64, t: f64, count: usize) -> Vec<f64> {
    let spread = lambda_of(nu) * t + width;
    let r_max = (reach - 1.5).max(0.5 * reach) * spread / PI;
    let r_min = (1.5 * spread / (2.0 * PI * PI)).sqrt().min(r_max / 3.0);
    (0..count)
        .map(|j| r_min * (r_max / r_min).powf(j as f64 / (count.max(2) - 1) as f64))
        .collect()
}

fn complex_phase(cfg: &ExperimentConfig, s: &Seeded, v: &SpectralTrajectory, b: &mut Builder) -> Result<()> {
    let times = if cfg.growth.times.is_empty() { vec![s.times.t_max()] } else { cfg.growth.times.clone() };
    let directions = random_directions(cfg.d, cfg.growth.directions, cfg.growth.direction_seed);
    let mut fits = vec![];
    let zero = s.u0.sup_norm() == 0.0;
    if !zero {
        let floor = cfg.checks.noise_floor;
        let clean = SpectralTrajectory::new(&s.grid, &s.times, v.slices().iter().map(|x| denoise(x, floor)).collect())?;
        for &t in &times {
            let m = s.times.index_of(t).unwrap_or(0);
            let radii = if cfg.growth.radii.is_empty() {
                let reach = support_radius(clean.slice(m));
                default_radii(reach, cfg.nu, cfg.initial.width, t, cfg.growth.radii_count)
            } else {
                cfg.growth.radii.clone()
            };
            for e in &directions {
                fits.push(growth_order_estimate(&clean, t, e, &radii)?);
            }
        }
    }
    let worst = fits.iter().map(|f| f.order).fold(f64::NEG_INFINITY, f64::max);
    let ok = fits.iter().all(|f| f.order <= cfg.checks.max_growth_order);
    let detail = if zero {
        "zero initial data, nothing to fit".to_string()
    } else {
        format!("{} fits, largest order {worst:.3}", fits.len())
    };
    b.check("growth_order", ok, detail);

    // Real-axis restriction against the physical reconstruction.
    let t = *times.last().unwrap();
    let m = s.times.index_of(t).unwrap_or(s.times.len() - 1);
    let t = s.times.t(m);
    let q = pressure_symbol(v, &s.conv)?;
    let points: Vec<Vec<f64>> = random_directions(cfg.d, 4, cfg.growth.direction_seed ^ 0x5eed)
        .into_iter()
        .map(|x| x.iter().map(|a| 0.7 * a).collect())
        .collect();
    let sample = reconstruct_physical(v.slice(m), q.slice(m), &points, t)?;
    let mut gap: f64 = 0.0;
    for (x, u) in points.iter().zip(&sample.u_values) {
        let z: Vec<Complex64> = x.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let ext = laplace_fourier_eval(v, &z, t)?;
        for (a, b) in ext.iter().zip(u) {
            gap = gap.max((a.re - b).abs());
        }
    }
    b.check("real_axis", gap <= 1e-14, format!("largest |U(x) - u(x)| = {gap:.3e}"));
    b.report.complex = Some(ComplexSummary { fits, real_axis_gap: gap });
    Ok(())
}
