//! Classical pseudo-spectral integrator for the mild form, used as an
//! independent cross-check of the series.
//!
//! The nonlinear term `N(v) = 2πi K(ξ)(v∗v)(ξ)ξ` is formed from products in a
//! physical box of `L >= 3⌊R/h⌋ + 1` points per axis, which is alias-free for
//! the kept modes. Time stepping is second-order exponential Runge-Kutta.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::caloric::{lambda_of, leray_apply};
use crate::error::{domain, Error, Result};
use crate::fft::smooth_size_at_least;
use crate::field::{SpectralField, SpectralTrajectory, TimeGrid};
use crate::grid::FrequencyGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Physical-space evaluation of `(v∗v)(ξ)ξ` on a padded periodic box.
pub struct PseudoSpectral {
    grid: Arc<FrequencyGrid>,
    side: usize,
    to_box: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl PseudoSpectral {
    pub fn new(grid: &Arc<FrequencyGrid>) -> Self {
        let side = smooth_size_at_least(3 * grid.half_width() + 1);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(side);
        let inverse = planner.plan_fft_inverse(side);
        let d = grid.dim();
        let to_box = (0..grid.len())
            .map(|i| {
                let n = grid.coords(i);
                (0..d).fold(0, |acc, a| acc * side + n[a].rem_euclid(side as i64) as usize)
            })
            .collect();
        Self { grid: grid.clone(), side, to_box, forward, inverse }
    }

    pub fn box_side(&self) -> usize {
        self.side
    }

    /// In-place transform along every axis, one strided line at a time.
    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let l = self.side;
        let d = self.grid.dim();
        let total = buf.len();
        for axis in 0..d {
            let stride = l.pow((d - 1 - axis) as u32);
            let block = stride * l;
            let starts: Vec<usize> =
                (0..total).step_by(block).flat_map(|b| (0..stride).map(move |o| b + o)).collect();
            let lines: Vec<Vec<Complex64>> = starts
                .par_iter()
                .map(|&s| {
                    let mut line: Vec<Complex64> = (0..l).map(|k| buf[s + k * stride]).collect();
                    plan.process(&mut line);
                    line
                })
                .collect();
            for (s, line) in starts.iter().zip(lines) {
                for (k, v) in line.into_iter().enumerate() {
                    buf[s + k * stride] = v;
                }
            }
        }
    }

    /// `w_a(ξ) = Σ_η h^d v_a(ξ-η)(v(η)·ξ)` on the kept modes.
    pub fn contracted_square(&self, v: &SpectralField) -> SpectralField {
        let g = &self.grid;
        let d = g.dim();
        let nbox = self.side.pow(d as u32);
        // Velocity components on the box: u_a(x_j) = Σ_n v_a(n) e^{+2πi n·j/L}.
        let phys: Vec<Vec<Complex64>> = (0..d)
            .map(|a| {
                let mut buf = vec![ZERO; nbox];
                for (i, &p) in self.to_box.iter().enumerate() {
                    buf[p] = v.mode(i)[a];
                }
                self.transform(&mut buf, &self.inverse);
                buf
            })
            .collect();
        let scale = g.cell_measure() / nbox as f64;
        let mut conv = vec![vec![]; d * d];
        for a in 0..d {
            for b in a..d {
                let mut prod: Vec<Complex64> = phys[a].iter().zip(&phys[b]).map(|(x, y)| x * y).collect();
                self.transform(&mut prod, &self.forward);
                let kept: Vec<Complex64> = self.to_box.iter().map(|&p| prod[p] * scale).collect();
                conv[b * d + a] = kept.clone();
                conv[a * d + b] = kept;
            }
        }
        let mut out = SpectralField::zeros_vector(g);
        for i in 0..g.len() {
            let xi = g.xi(i);
            for a in 0..d {
                out.mode_mut(i)[a] = (0..d).map(|b| conv[a * d + b][i] * xi[b]).sum();
            }
        }
        out
    }

    /// `N(v) = 2πi K(ξ)(v∗v)(ξ)ξ`, zero at `ξ = 0`.
    pub fn nonlinear(&self, v: &SpectralField) -> SpectralField {
        let mut w = self.contracted_square(v);
        let g = &self.grid;
        for i in 0..g.len() {
            let vals = w.mode_mut(i);
            if g.is_zero_mode(i) {
                vals.iter_mut().for_each(|x| *x = ZERO);
                continue;
            }
            leray_apply(g.xi(i), g.xi_sq(i), vals);
            vals.iter_mut().for_each(|x| *x *= Complex64::new(0.0, 2.0 * PI));
        }
        w
    }
}

fn etd_coefficients(x: f64) -> (f64, f64, f64) {
    let e = (-x).exp();
    if x < 0.1 {
        // Σ (-x)^n/(n+1)! and Σ (-x)^n/(n+2)!
        let (mut p1, mut p2) = (0.0, 0.0);
        let mut term = 1.0;
        for n in 0..14 {
            p1 += term / (n + 1) as f64;
            p2 += term / ((n + 1) * (n + 2)) as f64;
            term *= -x / (n + 1) as f64;
        }
        (e, p1, p2)
    } else {
        (e, (1.0 - e) / x, (e - 1.0 + x) / (x * x))
    }
}

/// One Cox-Matthews ETD2RK step of `∂_t v = -λ|ξ|² v + N(v)`.
/// With `nonlinear = false` the step is the exact heat propagator.
pub fn step_integrating_factor(ps: &PseudoSpectral, v: &SpectralField, dt: f64, nu: f64, nonlinear: bool) -> Result<SpectralField> {
    if !(dt > 0.0) || !(nu > 0.0) {
        return domain(format!("step needs dt > 0 and nu > 0, got {dt}, {nu}"));
    }
    let g = v.grid().clone();
    let lambda = lambda_of(nu);
    let coef: Vec<(f64, f64, f64)> = (0..g.len()).map(|i| etd_coefficients(lambda * g.xi_sq(i) * dt)).collect();
    if !nonlinear {
        let mut out = v.clone();
        for (i, c) in coef.iter().enumerate() {
            out.mode_mut(i).iter_mut().for_each(|x| *x *= c.0);
        }
        return Ok(out);
    }
    let n0 = ps.nonlinear(v);
    let mut a = v.clone();
    for (i, c) in coef.iter().enumerate() {
        let nv = n0.mode(i).to_vec();
        for (x, n) in a.mode_mut(i).iter_mut().zip(nv) {
            *x = c.0 * *x + dt * c.1 * n;
        }
    }
    let n1 = ps.nonlinear(&a);
    let mut out = a;
    for (i, c) in coef.iter().enumerate() {
        let (p, q) = (n1.mode(i).to_vec(), n0.mode(i).to_vec());
        for ((x, n1), n0) in out.mode_mut(i).iter_mut().zip(p).zip(q) {
            *x += dt * c.2 * (n1 - n0);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleOptions {
    /// Steps per time-grid interval.
    pub substeps: usize,
    /// Abort when `‖v‖_{1⊕2}` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    pub nonlinear: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { substeps: 8, blowup_factor: 1e6, nonlinear: true }
    }
}

pub fn run_oracle(u0: &SpectralField, nu: f64, times: &Arc<TimeGrid>, opts: &OracleOptions) -> Result<SpectralTrajectory> {
    if opts.substeps == 0 {
        return domain("oracle needs at least one substep");
    }
    let g = u0.grid().clone();
    let ps = PseudoSpectral::new(&g);
    let cap = opts.blowup_factor * u0.norm_1p2().max(f64::MIN_POSITIVE);
    let mut slices = vec![u0.clone()];
    let mut v = u0.clone();
    for m in 1..times.len() {
        let dt = (times.t(m) - times.t(m - 1)) / opts.substeps as f64;
        for s in 0..opts.substeps {
            v = step_integrating_factor(&ps, &v, dt, nu, opts.nonlinear)?;
            let norm = v.norm_1p2();
            if !norm.is_finite() || norm > cap {
                return Err(Error::BlowUp { time: times.t(m - 1) + (s + 1) as f64 * dt, norm, cap });
            }
        }
        slices.push(v.clone());
    }
    SpectralTrajectory::new(&g, times, slices)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryGap {
    pub per_time: Vec<f64>,
    pub sup_gap: f64,
}

/// Per-time `‖a - b‖_{1⊕2}` and its maximum.
pub fn compare_trajectories(a: &SpectralTrajectory, b: &SpectralTrajectory) -> Result<TrajectoryGap> {
    let diff = a.sub(b)?;
    let per_time = diff.norms_1p2();
    let sup_gap = per_time.iter().cloned().fold(0.0, f64::max);
    Ok(TrajectoryGap { per_time, sup_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::{ConvolutionMethod, Convolver};
    use crate::field::{gaussian_initial_data, SwirlRecipe};
    use crate::series::build_v0;

    fn data(g: &Arc<FrequencyGrid>, amp: f64) -> SpectralField {
        gaussian_initial_data(g, amp, 1.0, &SwirlRecipe::Seeded { seed: 11 }).unwrap()
    }

    #[test]
    fn box_product_matches_lattice_direct_sum() {
        let g = FrequencyGrid::build(3, 0.5, 1.5).unwrap();
        let v = data(&g, 1.0);
        let ps = PseudoSpectral::new(&g);
        assert!(ps.box_side() >= 3 * g.half_width() + 1);
        let direct = Convolver::new(&g, ConvolutionMethod::Direct).contracted(&v, &v).unwrap();
        let got = ps.contracted_square(&v);
        let err = got.sub(&direct).unwrap().sup_norm();
        assert!(err < 1e-13 * direct.sup_norm(), "{err}");
    }

    #[test]
    fn linear_oracle_matches_heat_flow() {
        let g = FrequencyGrid::build(3, 0.5, 1.5).unwrap();
        let u0 = data(&g, 1.0);
        let times = Arc::new(TimeGrid::uniform(1.0, 10).unwrap());
        let opts = OracleOptions { nonlinear: false, ..Default::default() };
        let o = run_oracle(&u0, 0.05, &times, &opts).unwrap();
        let v0 = build_v0(&u0, 0.05, &times).unwrap();
        let gap = compare_trajectories(&o, &v0).unwrap();
        assert!(gap.sup_gap < 1e-13 * u0.norm_1p2(), "{gap:?}");
    }

    #[test]
    fn zero_stays_zero_and_divergence_free() {
        let g = FrequencyGrid::build(3, 0.5, 1.5).unwrap();
        let times = Arc::new(TimeGrid::uniform(0.5, 5).unwrap());
        let z = run_oracle(&data(&g, 0.0), 0.05, &times, &OracleOptions::default()).unwrap();
        assert_eq!(z.sup_norm_1p2(), 0.0);
        let v = run_oracle(&data(&g, 0.5), 0.05, &times, &OracleOptions::default()).unwrap();
        assert!(v.max_divergence_ratio() < 1e-12);
    }

    #[test]
    fn local_error_is_third_order() {
        // One step of size dt against a fine reference: local error O(dt³),
        // so halving dt shrinks it by about 8 (the global error by 4).
        let g = FrequencyGrid::build(3, 0.5, 1.5).unwrap();
        let u0 = data(&g, 0.5);
        let ps = PseudoSpectral::new(&g);
        let nu = 0.05;
        let fine = |dt: f64| {
            let mut v = u0.clone();
            for _ in 0..64 {
                v = step_integrating_factor(&ps, &v, dt / 64.0, nu, true).unwrap();
            }
            v
        };
        let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&dt| {
                let one = step_integrating_factor(&ps, &u0, dt, nu, true).unwrap();
                one.sub(&fine(dt)).unwrap().norm_1p2()
            })
            .collect();
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
        assert!(ratios.windows(2).all(|r| r[1] > r[0]) && ratios[2] > 6.5, "{errs:?}");
    }

    #[test]
    fn energy_is_non_increasing() {
        let g = FrequencyGrid::build(3, 0.5, 1.5).unwrap();
        let times = Arc::new(TimeGrid::uniform(1.0, 10).unwrap());
        let v = run_oracle(&data(&g, 0.5), 0.05, &times, &OracleOptions::default()).unwrap();
        let e: Vec<f64> = v.slices().iter().map(|s| s.l2_norm().powi(2)).collect();
        assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    }

    #[test]
    fn identical_trajectories_have_zero_gap() {
        let g = FrequencyGrid::build(3, 0.5, 1.0).unwrap();
        let times = Arc::new(TimeGrid::uniform(0.5, 4).unwrap());
        let v = build_v0(&data(&g, 1.0), 0.05, &times).unwrap();
        assert_eq!(compare_trajectories(&v, &v).unwrap().sup_gap, 0.0);
        let mut pert = SpectralField::zeros_vector(&g);
        pert.mode_mut(3)[0] = Complex64::new(1.0 / (g.cell_measure() + g.cell_measure().sqrt()), 0.0);
        let eps = 1e-3;
        let slices = v.slices().iter().map(|s| {
            let mut s = s.clone();
            s.axpy(Complex64::new(eps, 0.0), &pert).unwrap();
            s
        });
        let w = SpectralTrajectory::new(&g, &times, slices.collect()).unwrap();
        let gap = compare_trajectories(&w, &v).unwrap().sup_gap;
        assert!((gap - eps).abs() < 1e-12, "{gap}");
    }
}
