//! Scalar utilities and closed-form bounds used by the rest of the crate
//! and by the randomized inequality suite.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Lebesgue exponent in `[1, ∞]`. Infinity is a distinct variant so that
/// norm code has to branch on it instead of doing arithmetic with `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinite => None,
        }
    }
}

/// `p' = p / (p - 1)`, with `1' = ∞` and `∞' = 1`.
pub fn conjugate_exponent(p: Exponent) -> Result<Exponent> {
    match p {
        Exponent::Infinite => Ok(Exponent::Finite(1.0)),
        Exponent::Finite(p) if p.is_nan() || p < 1.0 => {
            domain(format!("exponent {p} is outside [1, inf]"))
        }
        Exponent::Finite(p) if p == 1.0 => Ok(Exponent::Infinite),
        Exponent::Finite(p) if p.is_infinite() => Ok(Exponent::Finite(1.0)),
        Exponent::Finite(p) => Ok(Exponent::Finite(p / (p - 1.0))),
    }
}

/// Plain-`f64` shorthand for finite `p > 1`, used where the exponent is
/// known to be finite on both sides (e.g. `α > 1` in the polynomial bounds).
fn conj(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `c_0..=c_K` from `c_0 = 1`, `c_k = Σ_{j<k} c_j c_{k-1-j}`; overflow is an error.
pub fn catalan_sequence(k_max: usize) -> Result<Vec<u64>> {
    let mut c: Vec<u64> = Vec::with_capacity(k_max + 1);
    c.push(1);
    for k in 1..=k_max {
        let mut acc: u64 = 0;
        for j in 0..k {
            let term = c[j]
                .checked_mul(c[k - 1 - j])
                .ok_or(Error::Overflow { what: "catalan number", index: k })?;
            acc = acc
                .checked_add(term)
                .ok_or(Error::Overflow { what: "catalan number", index: k })?;
        }
        c.push(acc);
    }
    Ok(c)
}

/// `1 / max(2^{α-1}, 1)`: the constant with `-|ξ-η|^α - |η|^α <= -r_α |ξ|^α`.
pub fn r_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("r_alpha requires alpha > 0, got {alpha}"));
    }
    Ok(1.0 / 2f64.powf(alpha - 1.0).max(1.0))
}

/// Coefficients of the two-sided bound on `(s+t)^α` in terms of `s^α + t^α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerSplitConstants {
    pub alpha: f64,
    pub lower_factor: f64,
    pub upper_factor: f64,
}

impl PowerSplitConstants {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return domain(format!("power split requires alpha > 0, got {alpha}"));
        }
        let split = 2f64.powf(alpha - 1.0);
        let (lower_factor, upper_factor) = if alpha >= 1.0 { (1.0, split) } else { (split, 1.0) };
        Ok(Self { alpha, lower_factor, upper_factor })
    }

    /// `(lower, upper)` bounds on `(s+t)^α`.
    pub fn bounds(&self, s: f64, t: f64) -> (f64, f64) {
        let base = s.powf(self.alpha) + t.powf(self.alpha);
        (self.lower_factor * base, self.upper_factor * base)
    }
}

/// Maximum over `t >= 0` of `g(t) = -t^α + a t`, namely `(α-1)(a/α)^{α'}`.
pub fn polyalpha_max(alpha: f64, a: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return domain(format!("polyalpha_max requires alpha > 1, got {alpha}"));
    }
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("polyalpha_max requires a > 0, got {a}"));
    }
    Ok((alpha - 1.0) * (a / alpha).powf(conj(alpha)))
}

/// Upper bound `(α-1)(c/α)^{α'} |y|^{α'}` on `-|x|^α + c x·y` over all `x`.
pub fn star_bound(alpha: f64, c: f64, y_norm: f64) -> Result<f64> {
    if !(alpha > 1.0) || !(c > 0.0) {
        return domain(format!("star bound requires alpha > 1 and c > 0, got {alpha}, {c}"));
    }
    let q = conj(alpha);
    Ok((alpha - 1.0) * (c / alpha).powf(q) * y_norm.powf(q))
}

/// `max_{x+y=z} <x, y> = |z|^2 / 4`.
pub fn inner_split_max(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>() / 4.0
}

/// A linear operator on complex vectors.
pub trait LinearMap {
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
}

impl<F> LinearMap for F
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self(x)
    }
}

/// Given `Lx = αx + y`, returns `L^n x = α^n x + Σ_{j<n} α^j L^{n-1-j} y`.
///
/// Only `y` is pushed through the operator; `x` enters through the scalar
/// power, so the result can be compared against direct `n`-fold application.
pub fn powerlinear_expand<L: LinearMap + ?Sized>(
    alpha: Complex64,
    n: usize,
    op: &L,
    x: &[Complex64],
    y: &[Complex64],
) -> Vec<Complex64> {
    if n == 0 {
        return x.to_vec();
    }
    // images[p] = L^p y
    let mut images = Vec::with_capacity(n);
    images.push(y.to_vec());
    for p in 1..n {
        let next = op.apply(&images[p - 1]);
        images.push(next);
    }
    let alpha_n = alpha.powu(n as u32);
    let mut out: Vec<Complex64> = x.iter().map(|v| alpha_n * v).collect();
    let mut alpha_j = Complex64::new(1.0, 0.0);
    for j in 0..n {
        for (o, v) in out.iter_mut().zip(&images[n - 1 - j]) {
            *o += alpha_j * v;
        }
        alpha_j *= alpha;
    }
    out
}
