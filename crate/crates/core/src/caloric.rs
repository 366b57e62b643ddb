//! Leray projection, exponentially weighted Duhamel quadrature and the `⊙`
//! product `(f⊙g)(ξ,t) = 2πi K(ξ) [∫₀ᵗ e^{-λ(t-s)|ξ|²} (f∗g)(ξ,s) ds] ξ`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convolution::Convolver;
use crate::error::{domain, Error, Result};
use crate::field::{SpectralField, SpectralTrajectory, TimeGrid};
use crate::grid::FrequencyGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// `λ = 4π²ν`.
pub fn lambda_of(nu: f64) -> f64 {
    4.0 * PI * PI * nu
}

/// `K(ξ) = I - ξξᵀ/|ξ|²` as a row-major `d x d` matrix; the identity at `ξ = 0`.
pub fn leray_projector(xi: &[f64]) -> Vec<f64> {
    let d = xi.len();
    let s: f64 = xi.iter().map(|v| v * v).sum();
    let mut k = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            let id = if a == b { 1.0 } else { 0.0 };
            k[a * d + b] = if s == 0.0 { id } else { id - xi[a] * xi[b] / s };
        }
    }
    k
}

/// In-place `w ← K(ξ) w`; no-op at `ξ = 0`.
pub fn leray_apply(xi: &[f64], xi_sq: f64, w: &mut [Complex64]) {
    if xi_sq == 0.0 {
        return;
    }
    let dot: Complex64 = w.iter().zip(xi).map(|(v, x)| v * x).sum::<Complex64>() / xi_sq;
    for (v, x) in w.iter_mut().zip(xi) {
        *v -= dot * x;
    }
}

/// `(ξξᵀ/|ξ|²) w`; zero at `ξ = 0`.
pub fn normal_part(xi: &[f64], xi_sq: f64, w: &[Complex64]) -> Vec<Complex64> {
    if xi_sq == 0.0 {
        return vec![ZERO; w.len()];
    }
    let dot: Complex64 = w.iter().zip(xi).map(|(v, x)| v * x).sum::<Complex64>() / xi_sq;
    xi.iter().map(|x| dot * x).collect()
}

/// One interval of the piecewise-linear Duhamel rule:
/// `I(t+Δ) = decay·I(t) + left·φ(t) + right·φ(t+Δ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalWeights {
    pub decay: f64,
    pub left: f64,
    pub right: f64,
}

/// Exact weights for `∫_0^Δ e^{-κ(Δ-s)} φ(s) ds` with `φ` linear on the interval.
pub fn interval_weights(dt: f64, kappa: f64) -> IntervalWeights {
    let x = kappa * dt;
    let decay = (-x).exp();
    // phi1 = (1 - e^{-x})/x and psi = (1 - e^{-x}(1+x))/x².
    let (phi1, psi) = if x < 0.1 {
        let (mut p1, mut ps) = (0.0, 0.0);
        let mut term = 1.0;
        for n in 0..14 {
            // term = (-x)^n / n!
            p1 += term / (n + 1) as f64;
            ps += term * (n + 1) as f64 / ((n + 1) * (n + 2)) as f64;
            term *= -x / (n + 1) as f64;
        }
        (p1, ps)
    } else {
        ((1.0 - decay) / x, (1.0 - decay * (1.0 + x)) / (x * x))
    };
    let left = dt * psi;
    IntervalWeights { decay, left, right: dt * phi1 - left }
}

/// Weights `w_j` with `Σ_j w_j φ(t_j) = ∫₀^{t_m} e^{-λ(t_m-s)|ξ|²} φ(s) ds`
/// for `φ` piecewise linear on the time grid.
pub fn duhamel_weights(times: &TimeGrid, m: usize, xi_sq: f64, nu: f64) -> Vec<f64> {
    let kappa = lambda_of(nu) * xi_sq;
    let mut w = vec![0.0; m + 1];
    for i in 0..m {
        let iw = interval_weights(times.t(i + 1) - times.t(i), kappa);
        for v in w.iter_mut().take(i + 1) {
            *v *= iw.decay;
        }
        w[i] += iw.left;
        w[i + 1] += iw.right;
    }
    w
}

/// Running Duhamel integral of a vector field sampled slice by slice.
pub struct DuhamelIntegrator {
    grid: Arc<FrequencyGrid>,
    lambda: f64,
    state: SpectralField,
    prev: Option<(f64, SpectralField)>,
}

impl DuhamelIntegrator {
    pub fn new(grid: &Arc<FrequencyGrid>, ncomp: usize, nu: f64) -> Self {
        Self { grid: grid.clone(), lambda: lambda_of(nu), state: SpectralField::zeros(grid, ncomp), prev: None }
    }

    /// Feed `φ(t)`; returns the integral up to `t`.
    pub fn push(&mut self, t: f64, value: SpectralField) -> &SpectralField {
        if let Some((t0, prev)) = self.prev.take() {
            let dt = t - t0;
            let nc = value.ncomp();
            let lambda = self.lambda;
            let grid = &self.grid;
            let (pd, vd) = (prev.data(), value.data());
            self.state.data_mut().par_chunks_mut(nc).enumerate().for_each(|(i, s)| {
                let w = interval_weights(dt, lambda * grid.xi_sq(i));
                for c in 0..nc {
                    s[c] = w.decay * s[c] + w.left * pd[i * nc + c] + w.right * vd[i * nc + c];
                }
            });
        }
        self.prev = Some((t, value));
        &self.state
    }
}

/// `2πi K(ξ) w(ξ)` per mode with the zero mode set to 0.
pub fn project_times_2pi_i(mut w: SpectralField) -> SpectralField {
    let grid = w.grid().clone();
    let nc = w.ncomp();
    w.data_mut().par_chunks_mut(nc).enumerate().for_each(|(i, vals)| {
        if grid.is_zero_mode(i) {
            vals.iter_mut().for_each(|v| *v = ZERO);
            return;
        }
        leray_apply(grid.xi(i), grid.xi_sq(i), vals);
        vals.iter_mut().for_each(|v| *v *= TWO_PI_I);
    });
    w
}

/// `f⊙g` together with the contracted convolution slices it was built from.
pub struct OdotOutput {
    pub product: SpectralTrajectory,
    pub contracted: SpectralTrajectory,
}

pub struct OdotEngine<'a> {
    conv: &'a Convolver,
    nu: f64,
}

impl<'a> OdotEngine<'a> {
    pub fn new(conv: &'a Convolver, nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return domain(format!("viscosity must be positive, got {nu}"));
        }
        Ok(Self { conv, nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        lambda_of(self.nu)
    }

    fn check(&self, f: &SpectralTrajectory, g: &SpectralTrajectory) -> Result<()> {
        f.check_compatible(g)?;
        if !f.grid().same_as(self.conv.grid()) {
            return Err(Error::GridMismatch("trajectory grid differs from the convolution grid".into()));
        }
        Ok(())
    }

    pub fn odot_product(&self, f: &SpectralTrajectory, g: &SpectralTrajectory) -> Result<SpectralTrajectory> {
        Ok(self.odot_sum(&[(f, g)])?.product)
    }

    /// `Σ_p f_p ⊙ g_p`, convolving each slice once.
    pub fn odot_sum(&self, pairs: &[(&SpectralTrajectory, &SpectralTrajectory)]) -> Result<OdotOutput> {
        let (f0, _) = pairs.first().ok_or_else(|| Error::Domain("empty odot sum".into()))?;
        for (f, g) in pairs {
            self.check(f0, f)?;
            self.check(f, g)?;
        }
        let grid = f0.grid().clone();
        let times = f0.times().clone();
        let mut duhamel = DuhamelIntegrator::new(&grid, grid.dim(), self.nu);
        let mut product = Vec::with_capacity(times.len());
        let mut contracted = Vec::with_capacity(times.len());
        for m in 0..times.len() {
            let slice_pairs: Vec<(&SpectralField, &SpectralField)> =
                pairs.iter().map(|(f, g)| (f.slice(m), g.slice(m))).collect();
            let c = self.conv.contracted_sum(&slice_pairs)?;
            let integral = duhamel.push(times.t(m), c.clone()).clone();
            product.push(project_times_2pi_i(integral));
            contracted.push(c);
        }
        Ok(OdotOutput {
            product: SpectralTrajectory::new(&grid, &times, product)?,
            contracted: SpectralTrajectory::new(&grid, &times, contracted)?,
        })
    }

    /// `∂_t(f⊙g) = -λ|ξ|²(f⊙g) + 2πi K(ξ)(f∗g)(ξ)ξ`.
    pub fn odot_time_derivative(&self, f: &SpectralTrajectory, g: &SpectralTrajectory) -> Result<SpectralTrajectory> {
        let out = self.odot_sum(&[(f, g)])?;
        self.derivative_from(&out)
    }

    pub fn derivative_from(&self, out: &OdotOutput) -> Result<SpectralTrajectory> {
        let grid = out.product.grid().clone();
        let lambda = self.lambda();
        let slices = out
            .product
            .slices()
            .iter()
            .zip(out.contracted.slices())
            .map(|(p, c)| {
                let mut r = project_times_2pi_i(c.clone());
                for i in 0..grid.len() {
                    let k = -lambda * grid.xi_sq(i);
                    for (x, y) in r.mode_mut(i).iter_mut().zip(p.mode(i)) {
                        *x += k * y;
                    }
                }
                r
            })
            .collect();
        SpectralTrajectory::new(&grid, out.product.times(), slices)
    }
}

/// `|f(ξ,t)| <= tⁿ e^{-λ t |ξ|^α} f⁰(ξ)`.
#[derive(Clone, Debug)]
pub struct CaloricEnvelope {
    pub lambda: f64,
    pub alpha: f64,
    pub poly_degree: u32,
    pub profile: SpectralField,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub checked: usize,
    pub violations: usize,
    /// Points above the bound but under the noise floor; not counted as violations.
    pub below_floor: usize,
    /// Largest `|f| / bound` over points above the floor (0 when there are none).
    pub worst_ratio: f64,
}

impl CaloricEnvelope {
    pub fn new(lambda: f64, alpha: f64, poly_degree: u32, profile: SpectralField) -> Result<Self> {
        if !(lambda > 0.0) || !(alpha > 0.0) {
            return domain(format!("envelope needs lambda > 0 and alpha > 0, got {lambda}, {alpha}"));
        }
        if profile.ncomp() != 1 || profile.data().iter().any(|v| v.im != 0.0 || v.re < 0.0) {
            return domain("envelope profile must be a nonnegative real scalar field");
        }
        Ok(Self { lambda, alpha, poly_degree, profile })
    }

    pub fn bound(&self, i: usize, t: f64) -> f64 {
        let r = self.profile.grid().xi_norm(i);
        t.powi(self.poly_degree as i32) * (-self.lambda * t * r.powf(self.alpha)).exp() * self.profile.mode(i)[0].re
    }

    /// Dominance check with relative slack `rel_tol` on the bound. Values below
    /// `noise_floor` times the slice's largest modulus are treated as roundoff:
    /// FFT convolutions carry an absolute error of about 1e-16 of the slice
    /// maximum, far above the envelope at the grid edge.
    pub fn dominates(&self, traj: &SpectralTrajectory, rel_tol: f64, noise_floor: f64) -> Result<Dominance> {
        if !traj.grid().same_as(self.profile.grid()) {
            return Err(Error::GridMismatch("envelope and trajectory grids differ".into()));
        }
        let mut dom = Dominance::default();
        for (m, slice) in traj.slices().iter().enumerate() {
            let t = traj.times().t(m);
            let moduli = slice.moduli();
            let floor = noise_floor * moduli.iter().cloned().fold(0.0, f64::max);
            for (i, &value) in moduli.iter().enumerate() {
                let bound = self.bound(i, t);
                dom.checked += 1;
                if value <= bound * (1.0 + rel_tol) || value == 0.0 {
                    if value > 0.0 && value > floor {
                        dom.worst_ratio = dom.worst_ratio.max(value / bound);
                    }
                    continue;
                }
                if value <= floor {
                    dom.below_floor += 1;
                    continue;
                }
                dom.violations += 1;
                dom.worst_ratio = dom.worst_ratio.max(if bound > 0.0 { value / bound } else { f64::INFINITY });
            }
        }
        Ok(dom)
    }
}
