//! Pressure, the momentum residual, physical-space reconstruction and energy.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::caloric::{lambda_of, leray_apply, normal_part};
use crate::convolution::Convolver;
use crate::error::{domain, Error, Result};
use crate::extension::fourier_sum;
use crate::field::{SpectralField, SpectralTrajectory};

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// `q(ξ,t) = 2πi (ξξᵀ/|ξ|²)(v∗v)(ξ,t)ξ`, a vector parallel to `ξ`.
pub fn pressure_symbol(v: &SpectralTrajectory, conv: &Convolver) -> Result<SpectralTrajectory> {
    let slices = v
        .slices()
        .iter()
        .map(|s| Ok(pressure_from_contracted(&conv.contracted(s, s)?)))
        .collect::<Result<Vec<_>>>()?;
    SpectralTrajectory::new(v.grid(), v.times(), slices)
}

fn pressure_from_contracted(c: &SpectralField) -> SpectralField {
    let g = c.grid().clone();
    let mut q = SpectralField::zeros_vector(&g);
    for i in 0..g.len() {
        let n = normal_part(g.xi(i), g.xi_sq(i), c.mode(i));
        for (o, x) in q.mode_mut(i).iter_mut().zip(n) {
            *o = TWO_PI_I * x;
        }
    }
    q
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumResidual {
    /// `sup` over interior times of the residual's 1⊕2 norm.
    pub sup: f64,
    /// Same quantity for `D_t v` alone, as a scale.
    pub sup_time_derivative: f64,
    pub per_time: Vec<f64>,
    /// Largest `|ξ·R|/(|ξ||R|)` over modes and times.
    pub divergence_ratio: f64,
}

/// `R = D_t v + λ|ξ|² v - 2πi(v∗v)ξ + q` with centered `D_t`; endpoints are
/// excluded. With `nonlinear = false` only the heat part is kept.
pub fn momentum_residual(v: &SpectralTrajectory, nu: f64, conv: &Convolver, nonlinear: bool) -> Result<MomentumResidual> {
    let times = v.times();
    if times.len() < 3 {
        return Err(Error::TimeGrid("momentum residual needs at least 3 time points".into()));
    }
    if !(nu > 0.0) {
        return domain(format!("viscosity must be positive, got {nu}"));
    }
    let g = v.grid().clone();
    let d = g.dim();
    let lambda = lambda_of(nu);
    let mut per_time = vec![];
    let mut sup_dt: f64 = 0.0;
    let mut div: f64 = 0.0;
    for m in 1..times.len() - 1 {
        let span = times.t(m + 1) - times.t(m - 1);
        let (prev, cur, next) = (v.slice(m - 1), v.slice(m), v.slice(m + 1));
        let mut dt = SpectralField::zeros_vector(&g);
        for (o, (a, b)) in dt.data_mut().iter_mut().zip(next.data().iter().zip(prev.data())) {
            *o = (a - b) / span;
        }
        sup_dt = sup_dt.max(dt.norm_1p2());
        let mut r = dt;
        if nonlinear {
            let c = conv.contracted(cur, cur)?;
            let q = pressure_from_contracted(&c);
            for i in 0..g.len() {
                let (cv, qv) = (c.mode(i).to_vec(), q.mode(i).to_vec());
                for a in 0..d {
                    r.mode_mut(i)[a] += -TWO_PI_I * cv[a] + qv[a];
                }
            }
        }
        for i in 0..g.len() {
            let k = lambda * g.xi_sq(i);
            let vc = cur.mode(i).to_vec();
            for a in 0..d {
                r.mode_mut(i)[a] += k * vc[a];
            }
        }
        div = div.max(r.divergence_ratio());
        per_time.push(r.norm_1p2());
    }
    let sup = per_time.iter().cloned().fold(0.0, f64::max);
    Ok(MomentumResidual { sup, sup_time_derivative: sup_dt, per_time, divergence_ratio: div })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSample {
    pub time: f64,
    pub points: Vec<Vec<f64>>,
    pub u_values: Vec<Vec<f64>>,
    pub p_values: Vec<f64>,
    /// Largest `|Im u| / max|u|` over the points.
    pub max_imag_u: f64,
    pub max_imag_p: f64,
}

/// `u(x) = Σ h^d v(ξ) e^{-2πi x·ξ}` and
/// `p(x) = -(1/2πi) Σ h^d (ξᵀq(ξ)/|ξ|²) e^{-2πi x·ξ}` at the given points.
pub fn reconstruct_physical(v: &SpectralField, q: &SpectralField, points: &[Vec<f64>], t: f64) -> Result<PhysicalSample> {
    let g = v.grid().clone();
    if !q.grid().same_as(&g) {
        return Err(Error::GridMismatch("velocity and pressure symbols live on different grids".into()));
    }
    let mut pnum = SpectralField::zeros_scalar(&g);
    for i in 0..g.len() {
        if g.xi_sq(i) > 0.0 {
            let dot: Complex64 = q.mode(i).iter().zip(g.xi(i)).map(|(a, b)| a * b).sum();
            pnum.mode_mut(i)[0] = -dot / (g.xi_sq(i) * TWO_PI_I);
        }
    }
    let mut u_values = vec![];
    let mut p_values = vec![];
    let (mut imag_u, mut scale_u, mut imag_p, mut scale_p): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for x in points {
        let z: Vec<Complex64> = x.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let u = fourier_sum(v, &z)?;
        let p = fourier_sum(&pnum, &z)?[0];
        for c in &u {
            imag_u = imag_u.max(c.im.abs());
            scale_u = scale_u.max(c.norm());
        }
        imag_p = imag_p.max(p.im.abs());
        scale_p = scale_p.max(p.norm());
        u_values.push(u.iter().map(|c| c.re).collect());
        p_values.push(p.re);
    }
    Ok(PhysicalSample {
        time: t,
        points: points.to_vec(),
        u_values,
        p_values,
        max_imag_u: if scale_u > 0.0 { imag_u / scale_u } else { 0.0 },
        max_imag_p: if scale_p > 0.0 { imag_p / scale_p } else { 0.0 },
    })
}

impl PhysicalSample {
    /// Columns `x1..xd, t, u1..ud, p`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.points.first().map_or(0, |p| p.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=d).map(|a| format!("x{a}")).collect();
        header.push("t".into());
        header.extend((1..=d).map(|a| format!("u{a}")));
        header.push("p".into());
        w.write_record(&header)?;
        for ((x, u), p) in self.points.iter().zip(&self.u_values).zip(&self.p_values) {
            let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            row.push(self.time.to_string());
            row.extend(u.iter().map(|v| format!("{v:e}")));
            row.push(format!("{p:e}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `E(t_m) = Σ h^d |v(ξ,t_m)|²`.
pub fn energy(v: &SpectralTrajectory) -> Vec<(f64, f64)> {
    v.times().times().iter().zip(v.slices()).map(|(&t, s)| (t, s.l2_norm().powi(2))).collect()
}

/// `K(ξ)` applied to a whole field, used to split off the divergence-free part.
pub fn leray_field(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    let mut out = f.clone();
    for i in 0..g.len() {
        leray_apply(g.xi(i), g.xi_sq(i), out.mode_mut(i));
    }
    out
}
