//! Randomized checks of the scalar inequalities the bounds are built from.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::math::{inner_split_max, polyalpha_max, powerlinear_expand, r_alpha, star_bound, PowerSplitConstants};

/// Relative slack allowed on every inequality.
pub const SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityOutcome {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest `(lhs - rhs) / scale` seen; negative when every case holds strictly.
    pub worst_margin: f64,
}

impl InequalityOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failures: 0, worst: f64::NEG_INFINITY }
    }

    /// Records `lhs <= rhs` up to `SLACK * scale`.
    fn le(&mut self, lhs: f64, rhs: f64, scale: f64) {
        let margin = (lhs - rhs) / scale.max(f64::MIN_POSITIVE);
        self.worst = self.worst.max(margin);
        if !(margin <= SLACK) {
            self.failures += 1;
        }
    }

    fn done(self) -> InequalityOutcome {
        InequalityOutcome { name: self.name.into(), cases: self.cases, failures: self.failures, worst_margin: self.worst }
    }
}

fn vec3(rng: &mut ChaCha8Rng, r: f64) -> [f64; 3] {
    [rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r)]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Runs every family with `cases` random draws each.
pub fn run_inequality_suite(seed: u64, cases: usize) -> Vec<InequalityOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];

    // (s+t)^α between the split factors times s^α + t^α.
    let mut t = Tally::new("power_split");
    for _ in 0..cases {
        let alpha = if rng.random_bool(0.8) { rng.random_range(1.0..5.0) } else { rng.random_range(0.05..1.0) };
        let (s, u) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        let c = PowerSplitConstants::new(alpha).unwrap();
        let (lo, hi) = c.bounds(s, u);
        let mid = (s + u).powf(alpha);
        t.le(lo, mid, mid.max(hi));
        t.le(mid, hi, mid.max(hi));
        t.cases += 1;
    }
    out.push(t.done());

    // -|ξ-η|^α - |η|^α <= -r_α |ξ|^α
    let mut t = Tally::new("split_exponent");
    for _ in 0..cases {
        let alpha = rng.random_range(0.05..4.0);
        let (xi, eta) = (vec3(&mut rng, 5.0), vec3(&mut rng, 5.0));
        let diff: Vec<f64> = xi.iter().zip(&eta).map(|(a, b)| a - b).collect();
        let lhs = -norm(&diff).powf(alpha) - norm(&eta).powf(alpha);
        let rhs = -r_alpha(alpha).unwrap() * norm(&xi).powf(alpha);
        t.le(lhs, rhs, lhs.abs().max(rhs.abs()));
        t.cases += 1;
    }
    out.push(t.done());

    // -|x|^α + c x·y <= (α-1)(c/α)^{α'} |y|^{α'}
    let mut t = Tally::new("star");
    for _ in 0..cases {
        let alpha = rng.random_range(1.05..4.0);
        let c = rng.random_range(0.01..5.0);
        let (x, y) = (vec3(&mut rng, 3.0), vec3(&mut rng, 3.0));
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let lhs = -norm(&x).powf(alpha) + c * dot;
        let rhs = star_bound(alpha, c, norm(&y)).unwrap();
        t.le(lhs, rhs, norm(&x).powf(alpha) + c * dot.abs() + rhs);
        t.cases += 1;
    }
    out.push(t.done());

    // -t^α + a t <= (α-1)(a/α)^{α'} on a dense grid of t.
    let mut t = Tally::new("poly_max");
    for _ in 0..cases {
        let alpha = rng.random_range(1.05..4.0);
        let a = rng.random_range(0.01..5.0);
        let m = polyalpha_max(alpha, a).unwrap();
        let peak = (a / alpha).powf(1.0 / (alpha - 1.0));
        for k in 0..=64 {
            let s = 3.0 * peak * k as f64 / 64.0;
            let g = -s.powf(alpha) + a * s;
            t.le(g, m, s.powf(alpha) + a * s + m);
        }
        t.cases += 1;
    }
    out.push(t.done());

    // <x, z-x> <= |z|²/4
    let mut t = Tally::new("inner_split");
    for _ in 0..cases {
        let dim = rng.random_range(1..6);
        let z: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let lhs: f64 = x.iter().zip(&z).map(|(a, b)| a * (b - a)).sum();
        let rhs = inner_split_max(&z);
        let scale: f64 = x.iter().zip(&z).map(|(a, b)| (a * (b - a)).abs()).sum::<f64>() + rhs;
        t.le(lhs, rhs, scale);
        t.cases += 1;
    }
    out.push(t.done());

    // L^n x via the expansion against direct iteration, 4x4 complex maps.
    let mut t = Tally::new("power_linear");
    for _ in 0..cases {
        let m: Vec<Complex64> =
            (0..16).map(|_| Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))).collect();
        let apply = |v: &[Complex64]| -> Vec<Complex64> { (0..4).map(|r| (0..4).map(|c| m[r * 4 + c] * v[c]).sum()).collect() };
        let x: Vec<Complex64> =
            (0..4).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let alpha = Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let lx = apply(&x);
        let y: Vec<Complex64> = lx.iter().zip(&x).map(|(l, v)| l - alpha * v).collect();
        let n = rng.random_range(1..9);
        let expanded = powerlinear_expand(alpha, n, &apply, &x, &y);
        let mut direct = x.clone();
        for _ in 0..n {
            direct = apply(&direct);
        }
        // Scale: the size of the largest term in the expansion.
        let mut scale = alpha.norm().powi(n as i32) * x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut img = y.clone();
        for j in (0..n).rev() {
            scale = scale.max(alpha.norm().powi(j as i32) * img.iter().map(|v| v.norm()).fold(0.0, f64::max));
            img = apply(&img);
        }
        let err = expanded.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        t.le(err, 0.0, scale);
        t.cases += 1;
    }
    out.push(t.done());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_is_deterministic() {
        let a = run_inequality_suite(3, 500);
        assert_eq!(a.len(), 6);
        assert!(a.iter().all(|o| o.passed() && o.cases == 500), "{a:?}");
        assert_eq!(a, run_inequality_suite(3, 500));
    }

    #[test]
    fn tally_flags_violations() {
        let mut t = Tally::new("x");
        t.le(1.0, 0.5, 1.0);
        t.le(0.5, 1.0, 1.0);
        assert_eq!(t.failures, 1);
    }
}
