//! Laplace-Fourier extension `U(z,t) = Σ h^d v(ξ,t) e^{-2πi z·ξ}` at complex
//! points and an empirical estimate of its growth order along `z = i r e`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::{SpectralField, SpectralTrajectory};

/// Largest exponent allowed in a single summand before reporting overflow.
pub const EXPONENT_LIMIT: f64 = 700.0;

/// `Σ_ξ h^d φ(ξ) e^{-2πi z·ξ}` per component. Each summand is formed as
/// `exp(ln|φ_a(ξ)| + 2π Im(z)·ξ)` times a unit phase, so the growing and the
/// decaying factors never appear separately.
pub fn fourier_sum(field: &SpectralField, z: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(fourier_sum_with_slope(field, z, None)?.0)
}

/// Also returns `Σ h^d φ(ξ) 2π(e·ξ) e^{-2πi z·ξ}`, the derivative of the sum
/// along `z = z₀ + i s e` with respect to `s`, when `slope` is given.
fn fourier_sum_with_slope(
    field: &SpectralField,
    z: &[Complex64],
    slope: Option<&[f64]>,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let g = field.grid();
    let d = g.dim();
    if z.len() != d {
        return domain(format!("evaluation point has {} coordinates, grid dimension is {d}", z.len()));
    }
    let nc = field.ncomp();
    let cell = g.cell_measure();
    let mut sum = vec![Complex64::new(0.0, 0.0); nc];
    let mut dsum = vec![Complex64::new(0.0, 0.0); nc];
    for i in 0..g.len() {
        let xi = g.xi(i);
        let (mut re_dot, mut im_dot) = (0.0, 0.0);
        for a in 0..d {
            re_dot += z[a].re * xi[a];
            im_dot += z[a].im * xi[a];
        }
        let lift = 2.0 * PI * im_dot;
        let phase = -2.0 * PI * re_dot;
        let de = slope.map(|e| 2.0 * PI * e.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>());
        for (c, v) in field.mode(i).iter().enumerate() {
            let m = v.norm();
            if m == 0.0 {
                continue;
            }
            let exponent = m.ln() + lift;
            if exponent > EXPONENT_LIMIT {
                return Err(Error::ExtensionOverflow { exponent, limit: EXPONENT_LIMIT });
            }
            let term = Complex64::from_polar(exponent.exp(), v.arg() + phase) * cell;
            sum[c] += term;
            if let Some(de) = de {
                dsum[c] += term * de;
            }
        }
    }
    Ok((sum, dsum))
}

/// `U(z,t)` on a stored time slice; `t` must be a grid time and positive
/// whenever `Im z != 0`.
pub fn laplace_fourier_eval(v: &SpectralTrajectory, z: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let m = slice_at(v, t)?;
    if t <= 0.0 && z.iter().any(|c| c.im != 0.0) {
        return domain("complex evaluation points need t > 0");
    }
    fourier_sum(v.slice(m), z)
}

fn slice_at(v: &SpectralTrajectory, t: f64) -> Result<usize> {
    v.times()
        .index_of(t)
        .ok_or_else(|| Error::TimeGrid(format!("t = {t} is not on the trajectory's time grid")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub radius: f64,
    pub abs_u: f64,
    /// `r d ln|U(i r e)| / dr`.
    pub log_derivative: f64,
    pub used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub time: f64,
    pub direction: Vec<f64>,
    /// Slope of `ln(r d ln|U|/dr)` against `ln r`.
    pub order: f64,
    /// `c` in `ln|U| ≈ c r^order`, from the fit intercept.
    pub constant: f64,
    /// Root-mean-square residual of the linear fit.
    pub residual: f64,
    pub samples: Vec<GrowthSample>,
}

/// Minimum log-derivative for a radius to enter the fit.
pub const MIN_LOG_DERIVATIVE: f64 = 1.0;

/// Fits the growth order of `r ↦ |U(i r e, t)|`.
///
/// For `ln|U| ≈ c r^p + b` the log-derivative `r d ln|U|/dr ≈ p c r^p` does not
/// depend on `b`, so its log-log slope estimates `p` without the bias that the
/// additive constant puts on `ln ln|U|` at moderate radii.
pub fn growth_order_estimate(v: &SpectralTrajectory, t: f64, direction: &[f64], radii: &[f64]) -> Result<GrowthFit> {
    if !(t > 0.0) {
        return domain("growth estimates need t > 0");
    }
    let m = slice_at(v, t)?;
    let norm: f64 = direction.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return domain("direction must be nonzero");
    }
    let e: Vec<f64> = direction.iter().map(|a| a / norm).collect();
    let slice = v.slice(m);
    let samples = radii
        .par_iter()
        .map(|&r| {
            let z: Vec<Complex64> = e.iter().map(|&a| Complex64::new(0.0, r * a)).collect();
            let (u, du) = fourier_sum_with_slope(slice, &z, Some(&e))?;
            let abs2: f64 = u.iter().map(|c| c.norm_sqr()).sum();
            let cross: f64 = u.iter().zip(&du).map(|(a, b)| (a.conj() * b).re).sum();
            let log_derivative = if abs2 > 0.0 { r * cross / abs2 } else { 0.0 };
            Ok(GrowthSample { radius: r, abs_u: abs2.sqrt(), log_derivative, used: false })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut samples = samples;
    let mut pts = vec![];
    for s in samples.iter_mut() {
        if s.radius > 0.0 && s.log_derivative.is_finite() && s.log_derivative >= MIN_LOG_DERIVATIVE {
            s.used = true;
            pts.push((s.radius.ln(), s.log_derivative.ln()));
        }
    }
    if pts.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "{} usable radii (need 4 with r d ln|U|/dr >= {MIN_LOG_DERIVATIVE})",
            pts.len()
        )));
    }
    let (slope, intercept, residual) = least_squares(&pts);
    Ok(GrowthFit {
        time: t,
        direction: e,
        order: slope,
        constant: intercept.exp() / slope,
        residual,
        samples,
    })
}

/// Zeroes every mode whose modulus is below `floor` times the field maximum.
///
/// FFT convolutions leave an absolute error near 1e-16 of the largest value
/// at every mode, and `e^{2π Im z·ξ}` amplifies it most at the lattice edge,
/// where at moderate `|Im z|` it outgrows the true decaying summands.
pub fn denoise(field: &SpectralField, floor: f64) -> SpectralField {
    let cut = floor * field.moduli().into_iter().fold(0.0, f64::max);
    let mut out = field.clone();
    for i in 0..field.grid().len() {
        if field.modulus(i) < cut {
            out.mode_mut(i).iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        }
    }
    out
}

/// Largest `|ξ|` carrying a nonzero value.
pub fn support_radius(field: &SpectralField) -> f64 {
    let g = field.grid();
    (0..g.len()).filter(|&i| field.modulus(i) > 0.0).map(|i| g.xi_norm(i)).fold(0.0, f64::max)
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, rms residual)`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rms = (pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// CSV with columns `time, direction, radius, abs_u, fitted_order, residual`.
pub fn write_growth_csv<W: Write>(out: W, fits: &[GrowthFit]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "direction", "radius", "abs_u", "fitted_order", "residual"])?;
    for f in fits {
        let dir = f.direction.iter().map(|a| format!("{a:.6}")).collect::<Vec<_>>().join(";");
        for s in &f.samples {
            w.write_record([
                f.time.to_string(),
                dir.clone(),
                s.radius.to_string(),
                format!("{:e}", s.abs_u),
                f.order.to_string(),
                f.residual.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
