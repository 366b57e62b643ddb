//! Complex scalar, vector and matrix fields on a [`FrequencyGrid`], their
//! norms, the `S_α` multiplier and divergence-free Gaussian initial data.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::caloric::leray_apply;
use crate::error::{domain, Error, Result};
use crate::grid::FrequencyGrid;

pub const DEFAULT_TOL_DIV: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector,
    /// `d x d`, row-major per mode.
    Matrix,
    /// Any other component count (outer products of mixed kinds).
    Tensor(usize),
}

/// Values are stored mode-major: component `c` of mode `i` is `data[i * ncomp + c]`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<FrequencyGrid>,
    ncomp: usize,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<FrequencyGrid>, ncomp: usize) -> Self {
        Self { grid: grid.clone(), ncomp, data: vec![ZERO; grid.len() * ncomp] }
    }

    pub fn zeros_scalar(grid: &Arc<FrequencyGrid>) -> Self {
        Self::zeros(grid, 1)
    }

    pub fn zeros_vector(grid: &Arc<FrequencyGrid>) -> Self {
        Self::zeros(grid, grid.dim())
    }

    pub fn from_data(grid: &Arc<FrequencyGrid>, ncomp: usize, data: Vec<Complex64>) -> Result<Self> {
        if ncomp == 0 || data.len() != grid.len() * ncomp {
            return Err(Error::KindMismatch(format!(
                "{} values do not fit {} modes x {} components",
                data.len(),
                grid.len(),
                ncomp
            )));
        }
        Ok(Self { grid: grid.clone(), ncomp, data })
    }

    /// Scalar field from a per-mode closure of the mode vector.
    pub fn scalar_from_fn(grid: &Arc<FrequencyGrid>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.xi(i))).collect();
        Self { grid: grid.clone(), ncomp: 1, data }
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn kind(&self) -> FieldKind {
        let d = self.grid.dim();
        match self.ncomp {
            1 => FieldKind::Scalar,
            n if n == d => FieldKind::Vector,
            n if n == d * d => FieldKind::Matrix,
            n => FieldKind::Tensor(n),
        }
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn mode(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.ncomp..(i + 1) * self.ncomp]
    }

    pub fn mode_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.ncomp..(i + 1) * self.ncomp]
    }

    /// Euclidean modulus of the value at mode `i` over all components.
    pub fn modulus(&self, i: usize) -> f64 {
        self.mode(i).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn moduli(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.modulus(i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("fields live on different frequency grids".into()));
        }
        if self.ncomp != other.ncomp {
            return Err(Error::KindMismatch(format!(
                "{} vs {} components",
                self.ncomp, other.ncomp
            )));
        }
        Ok(())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let data = self.data.iter().map(|v| v * s).collect();
        Self { grid: self.grid.clone(), ncomp: self.ncomp, data }
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid.clone(), ncomp: self.ncomp, data })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid.clone(), ncomp: self.ncomp, data })
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: Complex64, other: &SpectralField) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    /// Component `c` as a scalar field.
    pub fn component(&self, c: usize) -> Self {
        let data = (0..self.grid.len()).map(|i| self.data[i * self.ncomp + c]).collect();
        Self { grid: self.grid.clone(), ncomp: 1, data }
    }

    /// Nonnegative scalar field of per-mode moduli.
    pub fn modulus_field(&self) -> Self {
        let data = (0..self.grid.len()).map(|i| Complex64::new(self.modulus(i), 0.0)).collect();
        Self { grid: self.grid.clone(), ncomp: 1, data }
    }

    /// Largest `|ξ·v(ξ)| / (|ξ| |v(ξ)|)` over nonzero modes with `v(ξ) != 0`.
    pub fn divergence_ratio(&self) -> f64 {
        let d = self.grid.dim();
        if self.ncomp != d {
            return f64::NAN;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() {
            let norm = self.modulus(i);
            let xi_n = self.grid.xi_norm(i);
            if norm == 0.0 || xi_n == 0.0 {
                continue;
            }
            let dot: Complex64 = self.mode(i).iter().zip(self.grid.xi(i)).map(|(v, x)| v * x).sum();
            worst = worst.max(dot.norm() / (xi_n * norm));
        }
        worst
    }

    pub fn is_divergence_free(&self, tol: f64) -> bool {
        self.divergence_ratio() <= tol
    }

    /// `Σ h^d |φ(ξ)|`.
    pub fn l1_norm(&self) -> f64 {
        self.grid.cell_measure() * (0..self.grid.len()).map(|i| self.modulus(i)).sum::<f64>()
    }

    /// `(Σ h^d |φ(ξ)|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_measure() * self.data.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len()).map(|i| self.modulus(i)).fold(0.0, f64::max)
    }

    /// `‖φ‖₁ + ‖φ‖₂`.
    pub fn norm_1p2(&self) -> f64 {
        self.l1_norm() + self.l2_norm()
    }
}

/// `Σ h^d |ξ|^β |φ| + (Σ h^d |ξ|^{2β} |φ|²)^{1/2}`; the zero mode counts
/// only when `β = 0`.
pub fn weighted_norm_1p2(field: &SpectralField, beta: f64) -> f64 {
    let g = field.grid();
    let (mut l1, mut l2) = (0.0, 0.0);
    for i in 0..g.len() {
        let r = g.xi_norm(i);
        let w = if beta == 0.0 {
            1.0
        } else if r == 0.0 {
            0.0
        } else {
            r.powf(beta)
        };
        let m = field.modulus(i);
        l1 += w * m;
        l2 += w * w * m * m;
    }
    let cell = g.cell_measure();
    cell * l1 + (cell * l2).sqrt()
}

/// `p_n(φ) = max_ξ (1 + |ξ|²)^n |φ(ξ)|`.
pub fn seminorm_pn(field: &SpectralField, n: u32) -> f64 {
    let g = field.grid();
    (0..g.len())
        .map(|i| (1.0 + g.xi_sq(i)).powi(n as i32) * field.modulus(i))
        .fold(0.0, f64::max)
}

/// `φ(ξ) / |ξ|^α` per mode (all components), zero mode set to 0.
pub fn apply_s_alpha(field: &SpectralField, alpha: f64) -> Result<SpectralField> {
    let d = field.grid().dim() as f64;
    if !(alpha > 0.0 && alpha < d) {
        return domain(format!("S_alpha requires 0 < alpha < {d}, got {alpha}"));
    }
    let mut out = field.clone();
    let g = field.grid().clone();
    for i in 0..g.len() {
        let vals = out.mode_mut(i);
        if g.is_zero_mode(i) {
            vals.iter_mut().for_each(|v| *v = ZERO);
        } else {
            let w = g.xi_sq(i).powf(-0.5 * alpha);
            vals.iter_mut().for_each(|v| *v *= w);
        }
    }
    Ok(out)
}

/// `max{1, |ξ|}^β |φ(ξ)|` as a nonnegative scalar field.
pub fn envelope_weight(field: &SpectralField, beta: f64) -> SpectralField {
    let g = field.grid();
    let data = (0..g.len())
        .map(|i| Complex64::new(g.xi_norm(i).max(1.0).powf(beta) * field.modulus(i), 0.0))
        .collect();
    SpectralField { grid: g.clone(), ncomp: 1, data }
}

/// `(2 Ĉ / (π ν)) ‖max{1,|·|}^{(d+1)/2} |û⁰|‖_{1⊕2}`; the series is predicted
/// to converge when this is below one.
pub fn smallness_ratio(u0: &SpectralField, nu: f64, c_hat: f64) -> Result<f64> {
    if !(nu > 0.0) || !(c_hat > 0.0) {
        return domain(format!("smallness ratio needs nu > 0 and C_hat > 0, got {nu}, {c_hat}"));
    }
    let beta = 0.5 * (u0.grid().dim() as f64 + 1.0);
    let weighted = envelope_weight(u0, beta);
    Ok(2.0 * c_hat / (PI * nu) * weighted_norm_1p2(&weighted, 0.0))
}

/// Mode-dependent direction fed through the Leray projector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SwirlRecipe {
    /// `a(ξ) = a`, a fixed real direction.
    Constant { direction: Vec<f64> },
    /// `a(ξ) = c + i B ξ` with real `c` and `B` drawn from the seed.
    Seeded { seed: u64 },
}

impl Default for SwirlRecipe {
    fn default() -> Self {
        SwirlRecipe::Seeded { seed: 1 }
    }
}

impl SwirlRecipe {
    fn direction_fn(&self, d: usize) -> Result<Box<dyn Fn(&[f64]) -> Vec<Complex64>>> {
        match self {
            SwirlRecipe::Constant { direction } => {
                if direction.len() != d {
                    return domain(format!(
                        "swirl direction has {} components, grid dimension is {d}",
                        direction.len()
                    ));
                }
                let a: Vec<Complex64> = direction.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                Ok(Box::new(move |_| a.clone()))
            }
            SwirlRecipe::Seeded { seed } => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                let c: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let b: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
                Ok(Box::new(move |xi: &[f64]| {
                    (0..d)
                        .map(|r| {
                            let bx: f64 = (0..d).map(|s| b[r * d + s] * xi[s]).sum();
                            Complex64::new(c[r], bx)
                        })
                        .collect()
                }))
            }
        }
    }
}

/// `û⁰(ξ) = amplitude · e^{-width |ξ|²} · K(ξ) a(ξ)`, zero at `ξ = 0`.
pub fn gaussian_initial_data(
    grid: &Arc<FrequencyGrid>,
    amplitude: f64,
    width: f64,
    recipe: &SwirlRecipe,
) -> Result<SpectralField> {
    if !(width > 0.0) {
        return domain(format!("gaussian width must be positive, got {width}"));
    }
    let d = grid.dim();
    let dir = recipe.direction_fn(d)?;
    let mut out = SpectralField::zeros_vector(grid);
    for i in 0..grid.len() {
        if grid.is_zero_mode(i) {
            continue;
        }
        let xi = grid.xi(i);
        let mut a = dir(xi);
        leray_apply(xi, grid.xi_sq(i), &mut a);
        let s = amplitude * (-width * grid.xi_sq(i)).exp();
        for (o, v) in out.mode_mut(i).iter_mut().zip(a) {
            *o = v * s;
        }
    }
    Ok(out)
}

/// Strictly increasing sample times starting at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::TimeGrid("time grid must start at t = 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::TimeGrid("times must be finite and strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// `steps + 1` equally spaced points on `[0, t_max]`.
    pub fn uniform(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max > 0.0) || steps == 0 {
            return Err(Error::TimeGrid(format!("need t_max > 0 and steps >= 1, got {t_max}, {steps}")));
        }
        Self::new((0..=steps).map(|m| t_max * m as f64 / steps as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t(&self, m: usize) -> f64 {
        self.times[m]
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Index of the sample equal to `t` up to a relative `1e-9`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.t_max().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }
}

/// A field sampled on a time grid.
#[derive(Clone, Debug)]
pub struct SpectralTrajectory {
    grid: Arc<FrequencyGrid>,
    times: Arc<TimeGrid>,
    slices: Vec<SpectralField>,
}

impl SpectralTrajectory {
    pub fn new(grid: &Arc<FrequencyGrid>, times: &Arc<TimeGrid>, slices: Vec<SpectralField>) -> Result<Self> {
        if slices.len() != times.len() {
            return Err(Error::TimeGrid(format!("{} slices for {} times", slices.len(), times.len())));
        }
        let ncomp = slices.first().map(|s| s.ncomp()).unwrap_or(grid.dim());
        for s in &slices {
            if !s.grid().same_as(grid) {
                return Err(Error::GridMismatch("slice grid differs from trajectory grid".into()));
            }
            if s.ncomp() != ncomp {
                return Err(Error::KindMismatch("slices disagree on component count".into()));
            }
        }
        Ok(Self { grid: grid.clone(), times: times.clone(), slices })
    }

    pub fn zeros(grid: &Arc<FrequencyGrid>, times: &Arc<TimeGrid>, ncomp: usize) -> Self {
        let slices = (0..times.len()).map(|_| SpectralField::zeros(grid, ncomp)).collect();
        Self { grid: grid.clone(), times: times.clone(), slices }
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn times(&self) -> &Arc<TimeGrid> {
        &self.times
    }

    pub fn slices(&self) -> &[SpectralField] {
        &self.slices
    }

    pub fn slice(&self, m: usize) -> &SpectralField {
        &self.slices[m]
    }

    pub fn slice_mut(&mut self, m: usize) -> &mut SpectralField {
        &mut self.slices[m]
    }

    pub fn ncomp(&self) -> usize {
        self.slices.first().map(|s| s.ncomp()).unwrap_or(0)
    }

    pub fn check_compatible(&self, other: &SpectralTrajectory) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("trajectories live on different grids".into()));
        }
        if self.times.times() != other.times.times() {
            return Err(Error::TimeGrid("trajectories use different time grids".into()));
        }
        if self.ncomp() != other.ncomp() {
            return Err(Error::KindMismatch("trajectories differ in component count".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralTrajectory) -> Result<Self> {
        self.check_compatible(other)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Ok(Self { grid: self.grid.clone(), times: self.times.clone(), slices })
    }

    pub fn sub(&self, other: &SpectralTrajectory) -> Result<Self> {
        self.check_compatible(other)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        Ok(Self { grid: self.grid.clone(), times: self.times.clone(), slices })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let slices = self.slices.iter().map(|a| a.scale(s)).collect();
        Self { grid: self.grid.clone(), times: self.times.clone(), slices }
    }

    pub fn axpy(&mut self, s: Complex64, other: &SpectralTrajectory) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.slices.iter_mut().zip(&other.slices) {
            a.axpy(s, b)?;
        }
        Ok(())
    }

    /// Per-time `‖·‖_{1⊕2}`.
    pub fn norms_1p2(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.norm_1p2()).collect()
    }

    /// `sup_t ‖v(·,t)‖_{1⊕2}` over the time grid.
    pub fn sup_norm_1p2(&self) -> f64 {
        self.norms_1p2().into_iter().fold(0.0, f64::max)
    }

    pub fn max_divergence_ratio(&self) -> f64 {
        self.slices.iter().map(|s| s.divergence_ratio()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.slices.iter().all(|s| s.is_finite())
    }
}
