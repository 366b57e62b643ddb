//! The series `v = Σ_k v_k` with `v_0 = e^{-λt|ξ|²} û⁰` and
//! `v_k = Σ_{j<k} v_j ⊙ v_{k-1-j}`, plus truncation and certification.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::caloric::{lambda_of, project_times_2pi_i, CaloricEnvelope, DuhamelIntegrator, OdotEngine};
use crate::convolution::{Convolver, MonomialTree};
use crate::error::{domain, Error, Result};
use crate::field::{SpectralField, SpectralTrajectory, TimeGrid};
use crate::math::catalan_sequence;

/// Default cap on the bytes held by stored series terms.
pub const DEFAULT_TERM_BUDGET: u64 = 2 << 30;

/// `v_0(ξ,t) = e^{-λt|ξ|²} û⁰(ξ)`.
pub fn build_v0(u0: &SpectralField, nu: f64, times: &Arc<TimeGrid>) -> Result<SpectralTrajectory> {
    if !(nu > 0.0) {
        return domain(format!("viscosity must be positive, got {nu}"));
    }
    let grid = u0.grid().clone();
    let lambda = lambda_of(nu);
    let slices = times
        .times()
        .iter()
        .map(|&t| {
            let mut s = u0.clone();
            if t > 0.0 {
                for i in 0..grid.len() {
                    let e = (-lambda * t * grid.xi_sq(i)).exp();
                    s.mode_mut(i).iter_mut().for_each(|v| *v *= e);
                }
            }
            s
        })
        .collect();
    SpectralTrajectory::new(&grid, times, slices)
}

#[derive(Clone, Debug)]
pub struct SeriesExpansion {
    pub terms: Vec<SpectralTrajectory>,
    /// Decay exponent `λ/2^k` of the envelope for each term.
    pub exponents: Vec<f64>,
    /// `sup_t ‖v_k(·,t)‖_{1⊕2}`.
    pub term_norms: Vec<f64>,
    /// Truncation order once chosen; all stored terms otherwise.
    pub order: Option<usize>,
    pub nu: f64,
}

impl SeriesExpansion {
    pub fn k_max(&self) -> usize {
        self.terms.len() - 1
    }

    /// `‖v_{k+1}‖ / ‖v_k‖` for consecutive stored terms.
    pub fn term_ratios(&self) -> Vec<f64> {
        self.term_norms.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect()
    }
}

/// Runs the recursion up to `k_max`, slice by slice: at each time slice all
/// orders are advanced together, so only the current slice's spectra are held.
pub fn recurse_terms(
    v0: &SpectralTrajectory,
    k_max: usize,
    nu: f64,
    conv: &Convolver,
    budget_bytes: u64,
) -> Result<SeriesExpansion> {
    if !(nu > 0.0) {
        return domain(format!("viscosity must be positive, got {nu}"));
    }
    let grid = v0.grid().clone();
    if !grid.same_as(conv.grid()) {
        return Err(Error::GridMismatch("seed trajectory and convolver grids differ".into()));
    }
    let times = v0.times().clone();
    let slice_bytes = (grid.len() * grid.dim() * std::mem::size_of::<Complex64>()) as u64;
    for k in 0..=k_max {
        let needed = (k as u64 + 1) * times.len() as u64 * slice_bytes;
        if needed > budget_bytes {
            return Err(Error::Budget { what: format!("series terms up to k = {k}"), needed, budget: budget_bytes });
        }
    }
    let mut slices: Vec<Vec<SpectralField>> = vec![Vec::with_capacity(times.len()); k_max + 1];
    let mut integrators: Vec<DuhamelIntegrator> =
        (0..=k_max).map(|_| DuhamelIntegrator::new(&grid, grid.dim(), nu)).collect();
    for m in 0..times.len() {
        let mut spectra = Vec::with_capacity(k_max + 1);
        let first = v0.slice(m).clone();
        if k_max > 0 {
            spectra.push(conv.spectrum(&first)?);
        }
        slices[0].push(first);
        for k in 1..=k_max {
            let pairs: Vec<_> = (0..k).map(|j| (&spectra[j], &spectra[k - 1 - j])).collect();
            let c = conv.contracted_from(&pairs, true);
            let vk = project_times_2pi_i(integrators[k].push(times.t(m), c).clone());
            if k < k_max {
                spectra.push(conv.spectrum(&vk)?);
            }
            slices[k].push(vk);
        }
    }
    let lambda = lambda_of(nu);
    let terms = slices
        .into_iter()
        .map(|s| SpectralTrajectory::new(&grid, &times, s))
        .collect::<Result<Vec<_>>>()?;
    let term_norms = terms.iter().map(|t| t.sup_norm_1p2()).collect();
    let exponents = (0..=k_max).map(|k| lambda / 2f64.powi(k as i32)).collect();
    Ok(SeriesExpansion { terms, exponents, term_norms, order: None, nu })
}

/// `c_k (λ(k+1)²)^{m/2+n} / (2πν)^k · e^{-λt|ξ|²/2^k} · profile(ξ)`.
pub fn catalan_envelope_rhs(k: usize, m: u32, n: u32, nu: f64, profile: &SpectralField) -> Result<CaloricEnvelope> {
    let c = catalan_sequence(k)?[k] as f64;
    let lambda = lambda_of(nu);
    let growth = (lambda * ((k + 1) * (k + 1)) as f64).powf(0.5 * m as f64 + n as f64);
    let scale = c * growth / (2.0 * PI * nu).powi(k as i32);
    CaloricEnvelope::new(lambda / 2f64.powi(k as i32), 2.0, 0, profile.scale(Complex64::new(scale, 0.0)))
}

/// Pointwise maximum over all bracketings of `k+1` copies of `leaf` under `∗₁`.
pub fn monomial_profile(k: usize, leaf: &SpectralField, conv: &Convolver) -> Result<SpectralField> {
    let leaves = vec![leaf.clone(); k + 1];
    let mut best: Option<SpectralField> = None;
    for tree in MonomialTree::all_bracketings(k + 1) {
        let w = conv.monomial(&tree, &leaves, 1.0)?.modulus_field();
        best = Some(match best {
            None => w,
            Some(mut b) => {
                for (x, y) in b.data_mut().iter_mut().zip(w.data()) {
                    if y.re > x.re {
                        *x = *y;
                    }
                }
                b
            }
        });
    }
    best.ok_or_else(|| Error::Domain("monomial profile needs at least one leaf".into()))
}

/// Smallest `K` with `‖v_K‖ q/(1-q) < tail_tol ‖v_0‖`, where `q` is the larger
/// of `ρ` and the worst term ratio observed up to `K`.
pub fn truncation_order(term_norms: &[f64], rho: f64, tail_tol: f64) -> Result<usize> {
    let Some(&base) = term_norms.first() else {
        return domain("no series terms to truncate");
    };
    if base == 0.0 {
        return Ok(0);
    }
    if !(rho < 1.0) {
        return Err(Error::Divergence(format!(
            "smallness ratio {rho:.3} >= 1; term norms {}",
            fmt_norms(term_norms)
        )));
    }
    let mut worst_ratio: f64 = 0.0;
    for k in 0..term_norms.len() {
        if k > 0 {
            worst_ratio = worst_ratio.max(term_norms[k] / term_norms[k - 1]);
        }
        let q = rho.max(worst_ratio);
        if q < 1.0 && term_norms[k] * q / (1.0 - q) < tail_tol * base {
            return Ok(k);
        }
    }
    let last = term_norms.len();
    if last >= 2 && term_norms[last - 1] >= term_norms[last - 2] {
        return Err(Error::Divergence(format!("term norms stop decreasing: {}", fmt_norms(term_norms))));
    }
    Err(Error::Domain(format!(
        "tail tolerance {tail_tol:e} not reached within {} terms: {}",
        last,
        fmt_norms(term_norms)
    )))
}

fn fmt_norms(norms: &[f64]) -> String {
    norms.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
}

/// `Σ_{k<=K} v_k` in order `k = 0, 1, ..., K`.
pub fn sum_series(expansion: &SeriesExpansion, order: Option<usize>) -> Result<SpectralTrajectory> {
    let k = order.or(expansion.order).unwrap_or(expansion.k_max()).min(expansion.k_max());
    let mut acc = expansion.terms[0].clone();
    for t in &expansion.terms[1..=k] {
        acc.axpy(Complex64::new(1.0, 0.0), t)?;
    }
    Ok(acc)
}

/// `sup_t ‖v - v_0 - v⊙v‖_{1⊕2}`.
pub fn fixed_point_residual(v: &SpectralTrajectory, v0: &SpectralTrajectory, nu: f64, conv: &Convolver) -> Result<f64> {
    let vv = OdotEngine::new(conv, nu)?.odot_product(v, v)?;
    Ok(v.sub(v0)?.sub(&vv)?.sup_norm_1p2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::ConvolutionMethod;
    use crate::field::{gaussian_initial_data, SwirlRecipe};
    use crate::grid::FrequencyGrid;

    fn setup(amplitude: f64) -> (Arc<FrequencyGrid>, Arc<TimeGrid>, SpectralField) {
        let g = FrequencyGrid::build(3, 0.5, 1.5).unwrap();
        let times = Arc::new(TimeGrid::uniform(0.5, 8).unwrap());
        let u0 = gaussian_initial_data(&g, amplitude, 1.0, &SwirlRecipe::Seeded { seed: 2 }).unwrap();
        (g, times, u0)
    }

    #[test]
    fn v0_properties() {
        let (g, times, u0) = setup(0.2);
        let nu = 0.1;
        let v0 = build_v0(&u0, nu, &times).unwrap();
        assert_eq!(v0.slice(0).data(), u0.data());
        let lambda = lambda_of(nu);
        for (m, &t) in times.times().iter().enumerate() {
            let e: f64 = v0.slice(m).l2_norm().powi(2);
            let expect: f64 = g.cell_measure()
                * (0..g.len()).map(|i| (-2.0 * lambda * t * g.xi_sq(i)).exp() * u0.modulus(i).powi(2)).sum::<f64>();
            assert!((e - expect).abs() <= 1e-14 * expect);
        }
        let (_, _, z) = setup(0.0);
        assert_eq!(build_v0(&z, nu, &times).unwrap().sup_norm_1p2(), 0.0);
    }

    #[test]
    fn recursion_matches_hand_expansion() {
        let (g, times, u0) = setup(0.3);
        let nu = 0.1;
        let conv = Convolver::new(&g, ConvolutionMethod::Fft);
        let v0 = build_v0(&u0, nu, &times).unwrap();
        let s = recurse_terms(&v0, 3, nu, &conv, DEFAULT_TERM_BUDGET).unwrap();
        let eng = OdotEngine::new(&conv, nu).unwrap();
        let v1 = eng.odot_product(&v0, &v0).unwrap();
        let v2 = eng.odot_product(&v0, &v1).unwrap().add(&eng.odot_product(&v1, &v0).unwrap()).unwrap();
        let v3 = eng
            .odot_product(&v0, &v2)
            .unwrap()
            .add(&eng.odot_product(&v1, &v1).unwrap())
            .unwrap()
            .add(&eng.odot_product(&v2, &v0).unwrap())
            .unwrap();
        for (k, expect) in [(1, &v1), (2, &v2), (3, &v3)] {
            let diff = s.terms[k].sub(expect).unwrap().sup_norm_1p2();
            assert!(diff <= 1e-12 * expect.sup_norm_1p2(), "k={k}: {diff}");
            assert_eq!(s.terms[k].slice(0).sup_norm(), 0.0);
            assert!(s.terms[k].max_divergence_ratio() < 1e-12);
        }
        let only = recurse_terms(&v0, 0, nu, &conv, DEFAULT_TERM_BUDGET).unwrap();
        assert_eq!(only.terms.len(), 1);
    }

    #[test]
    fn budget_names_offending_order() {
        let (g, times, u0) = setup(0.3);
        let conv = Convolver::new(&g, ConvolutionMethod::Fft);
        let v0 = build_v0(&u0, 0.1, &times).unwrap();
        let slice = (g.len() * 3 * 16) as u64 * times.len() as u64;
        match recurse_terms(&v0, 5, 0.1, &conv, 3 * slice) {
            Err(Error::Budget { what, .. }) => assert!(what.contains("k = 3"), "{what}"),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(truncation_order(&[0.0, 0.0], 0.5, 1e-6).unwrap(), 0);
        let geometric: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
        assert_eq!(truncation_order(&geometric, 0.5, 1e-6).unwrap(), 20);
        assert!(matches!(truncation_order(&geometric, 1.5, 1e-6), Err(Error::Divergence(_))));
        let growing: Vec<f64> = (0..10).map(|k| 1.3f64.powi(k)).collect();
        assert!(matches!(truncation_order(&growing, 0.5, 1e-6), Err(Error::Divergence(_))));
    }

    #[test]
    fn sums_and_residual() {
        let (g, times, u0) = setup(0.3);
        let nu = 0.1;
        let conv = Convolver::new(&g, ConvolutionMethod::Fft);
        let v0 = build_v0(&u0, nu, &times).unwrap();
        let s = recurse_terms(&v0, 8, nu, &conv, DEFAULT_TERM_BUDGET).unwrap();
        let s01 = sum_series(&s, Some(1)).unwrap();
        let s012 = sum_series(&s, Some(2)).unwrap();
        let step = s01.add(&s.terms[2]).unwrap();
        assert!(step.sub(&s012).unwrap().sup_norm_1p2() == 0.0);
        assert_eq!(sum_series(&s, Some(0)).unwrap().slice(0).data(), u0.data());
        assert_eq!(s012.slice(0).data(), u0.data());
        let mut last = f64::INFINITY;
        for k in [2, 4, 8] {
            let r = fixed_point_residual(&sum_series(&s, Some(k)).unwrap(), &v0, nu, &conv).unwrap();
            assert!(r < last, "{k}: {r} vs {last}");
            last = r;
        }
        let (_, _, z) = setup(0.0);
        let zv = build_v0(&z, nu, &times).unwrap();
        assert_eq!(fixed_point_residual(&zv, &zv, nu, &conv).unwrap(), 0.0);
    }

    #[test]
    fn first_envelope_is_exact_seed() {
        let (g, times, u0) = setup(0.3);
        let nu = 0.1;
        let conv = Convolver::new(&g, ConvolutionMethod::Fft);
        let v0 = build_v0(&u0, nu, &times).unwrap();
        let profile = monomial_profile(0, &u0.modulus_field(), &conv).unwrap();
        let env = catalan_envelope_rhs(0, 0, 0, nu, &profile).unwrap();
        assert_eq!(env.dominates(&v0, 1e-12, 0.0).unwrap().violations, 0);
        assert_eq!(monomial_profile(2, &u0.modulus_field(), &conv).unwrap().ncomp(), 1);
        let _ = g;
    }
}
