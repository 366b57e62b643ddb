//! Empirical constant `Ĉ` for `‖f ∗₁ g‖_{1⊕2} <= Ĉ ‖f‖_{1⊕2} ‖g‖_{1⊕2}`.
//!
//! The corpus is nonnegative sums of one to three Gaussian bumps with random
//! centres, widths and weights. `Ĉ` is the largest ratio seen on it.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convolution::Convolver;
use crate::error::{domain, Result};
use crate::field::SpectralField;
use crate::grid::FrequencyGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c_hat: f64,
    pub corpus_size: usize,
    pub seed: u64,
    pub mean_ratio: f64,
    pub min_ratio: f64,
}

/// One corpus member.
pub fn corpus_field(grid: &Arc<FrequencyGrid>, rng: &mut ChaCha8Rng) -> SpectralField {
    let bumps = rng.random_range(1..=3);
    let reach = (0.25 * grid.radius()).min(1.0);
    let params: Vec<(f64, f64, Vec<f64>)> = (0..bumps)
        .map(|_| {
            let weight = rng.random_range(0.2..1.0);
            let width = rng.random_range(0.5..4.0);
            let centre = (0..grid.dim()).map(|_| rng.random_range(-reach..reach)).collect();
            (weight, width, centre)
        })
        .collect();
    SpectralField::scalar_from_fn(grid, |xi| {
        let v: f64 = params
            .iter()
            .map(|(w, a, c)| w * (-a * xi.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()).exp())
            .sum();
        Complex64::new(v, 0.0)
    })
}

pub fn calibrate_constant(conv: &Convolver, corpus_size: usize, seed: u64) -> Result<Calibration> {
    if corpus_size == 0 {
        return domain("calibration corpus must be nonempty");
    }
    let grid = conv.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(corpus_size);
    for _ in 0..corpus_size {
        let f = corpus_field(&grid, &mut rng);
        let g = corpus_field(&grid, &mut rng);
        let w = conv.riesz(&f, &g, 1.0)?;
        ratios.push(w.norm_1p2() / (f.norm_1p2() * g.norm_1p2()));
    }
    let c_hat = ratios.iter().cloned().fold(0.0, f64::max);
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_ratio = ratios.iter().sum::<f64>() / corpus_size as f64;
    Ok(Calibration { c_hat, corpus_size, seed, mean_ratio, min_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::ConvolutionMethod;

    #[test]
    fn calibration_bounds_its_corpus_and_is_reproducible() {
        let g = FrequencyGrid::build(3, 0.5, 2.0).unwrap();
        let conv = Convolver::new(&g, ConvolutionMethod::Fft);
        let a = calibrate_constant(&conv, 12, 4).unwrap();
        assert!(a.c_hat > 0.0 && a.min_ratio <= a.mean_ratio && a.mean_ratio <= a.c_hat);
        assert_eq!(a, calibrate_constant(&conv, 12, 4).unwrap());
        assert!(calibrate_constant(&conv, 0, 4).is_err());
    }
}
