//! Multi-dimensional FFT on an `L^d` cube and the zero-padded embedding of
//! a frequency lattice into it.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::FrequencyGrid;

/// Smallest integer `>= n` whose only prime factors are 2, 3, 5 and 7.
pub fn smooth_size_at_least(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Unnormalised forward/inverse DFT over all axes of a row-major `L^d` cube.
///
/// Each pass transforms the contiguous axis and then rotates the axes by
/// one (a transpose of the `L^{d-1} x L` view), so after `d` passes every
/// axis has been transformed and the original layout is restored.
pub struct CubeFft {
    d: usize,
    side: usize,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CubeFft {
    pub fn new(d: usize, side: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(side);
        let inverse = planner.plan_fft_inverse(side);
        Self { d, side, len: side.pow(d as u32), forward, inverse }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut Vec<Complex64>) {
        self.run(buf, &self.forward);
    }

    /// Inverse transform without the `1/L^d` factor.
    pub fn inverse(&self, buf: &mut Vec<Complex64>) {
        self.run(buf, &self.inverse);
    }

    fn run(&self, buf: &mut Vec<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(buf.len(), self.len);
        let mut tmp = vec![Complex64::new(0.0, 0.0); self.len];
        let rows = self.len / self.side;
        let rows_per_task = (rows / (4 * rayon::current_num_threads())).max(1);
        for _ in 0..self.d {
            buf.par_chunks_mut(self.side * rows_per_task).for_each(|chunk| {
                plan.process(chunk);
            });
            transpose(buf, &mut tmp, rows, self.side);
            std::mem::swap(buf, &mut tmp);
        }
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    dst.par_chunks_mut(rows * B.min(cols)).enumerate().for_each(|(blk, out)| {
        let c0 = blk * B.min(cols);
        let ncols = out.len() / rows;
        for r0 in (0..rows).step_by(B) {
            let r1 = (r0 + B).min(rows);
            for dc in 0..ncols {
                let c = c0 + dc;
                for r in r0..r1 {
                    out[dc * rows + r] = src[r * cols + c];
                }
            }
        }
    });
}

/// A frequency lattice embedded in a periodic box of at least `2·side - 1`
/// points per axis, so cyclic convolution reproduces the linear lattice
/// convolution on every kept mode.
pub struct PaddedLattice {
    grid: Arc<FrequencyGrid>,
    fft: CubeFft,
    map: Vec<usize>,
}

impl PaddedLattice {
    pub fn new(grid: Arc<FrequencyGrid>) -> Self {
        let side = smooth_size_at_least(2 * grid.side() - 1);
        Self::with_side(grid, side)
    }

    pub fn with_side(grid: Arc<FrequencyGrid>, side: usize) -> Self {
        let d = grid.dim();
        let fft = CubeFft::new(d, side);
        let map = (0..grid.len())
            .map(|i| {
                grid.coords(i)
                    .iter()
                    .fold(0usize, |acc, &c| acc * side + c.rem_euclid(side as i64) as usize)
            })
            .collect();
        Self { grid, fft, map }
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn padded_len(&self) -> usize {
        self.fft.len()
    }

    pub fn padded_side(&self) -> usize {
        self.fft.side()
    }

    /// Forward transform of one component (`stride`-interleaved in `data`).
    pub fn transform(&self, data: &[Complex64], stride: usize, comp: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        for (i, &p) in self.map.iter().enumerate() {
            buf[p] = data[i * stride + comp];
        }
        self.fft.forward(&mut buf);
        buf
    }

    /// Inverse transform of a product spectrum, scaled by `scale / L^d`, and
    /// read back onto the lattice.
    pub fn untransform(&self, mut buf: Vec<Complex64>, scale: f64) -> Vec<Complex64> {
        self.fft.inverse(&mut buf);
        let s = scale / self.fft.len() as f64;
        self.map.iter().map(|&p| buf[p] * s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size_at_least(33), 35);
        assert_eq!(smooth_size_at_least(17), 18);
        assert_eq!(smooth_size_at_least(64), 64);
        assert_eq!(smooth_size_at_least(11), 12);
    }

    #[test]
    fn cube_fft_matches_naive_dft() {
        let (d, l) = (3, 5);
        let fft = CubeFft::new(d, l);
        let n = l.pow(3);
        let data: Vec<Complex64> =
            (0..n).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let mut buf = data.clone();
        fft.forward(&mut buf);
        let idx = |a: usize, b: usize, c: usize| (a * l + b) * l + c;
        for (ka, kb, kc) in [(0, 0, 0), (1, 2, 3), (4, 0, 1), (2, 2, 2)] {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..l {
                for b in 0..l {
                    for c in 0..l {
                        let ph = -2.0 * std::f64::consts::PI * ((ka * a + kb * b + kc * c) as f64) / l as f64;
                        acc += data[idx(a, b, c)] * Complex64::from_polar(1.0, ph);
                    }
                }
            }
            assert!((acc - buf[idx(ka, kb, kc)]).norm() < 1e-10);
        }
        fft.inverse(&mut buf);
        for (x, y) in buf.iter().zip(&data) {
            assert!((x / n as f64 - y).norm() < 1e-12);
        }
    }
}
