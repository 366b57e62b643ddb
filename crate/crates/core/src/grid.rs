//! Truncated cubic lattice in frequency space.
//!
//! Modes are `ξ = h·n` for integer vectors `n` with `|n|_∞ <= ⌊R/h⌋`, stored in
//! row-major order (first axis slowest). With that layout the mode `-ξ` of
//! index `i` sits at `len - 1 - i` and the zero mode is the centre.

use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};

/// Default cap on the number of lattice modes a grid may hold.
pub const DEFAULT_MAX_MODES: usize = 4_000_000;

#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    d: usize,
    h: f64,
    radius: f64,
    half: usize,
    side: usize,
    len: usize,
    xi: Vec<f64>,
    xi_sq: Vec<f64>,
}

impl PartialEq for FrequencyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.h == other.h && self.half == other.half
    }
}

impl FrequencyGrid {
    pub fn build(d: usize, h: f64, radius: f64) -> Result<Arc<Self>> {
        Self::build_with_budget(d, h, radius, DEFAULT_MAX_MODES)
    }

    pub fn build_with_budget(d: usize, h: f64, radius: f64, max_modes: usize) -> Result<Arc<Self>> {
        if d < 3 {
            return domain(format!("dimension must be at least 3, got {d}"));
        }
        if !(h > 0.0) || !h.is_finite() {
            return domain(format!("lattice spacing must be positive, got {h}"));
        }
        if !(radius >= h) || !radius.is_finite() {
            return domain(format!("radius {radius} must be at least the spacing {h}"));
        }
        let half = (radius / h + 1e-9).floor() as usize;
        let side = 2 * half + 1;
        let len = (0..d).try_fold(1usize, |acc, _| acc.checked_mul(side));
        let len = match len {
            Some(n) if n <= max_modes => n,
            _ => {
                return Err(Error::Budget {
                    what: format!("frequency grid {side}^{d}"),
                    needed: (side as f64).powi(d as i32) as u64,
                    budget: max_modes as u64,
                })
            }
        };
        let mut xi = vec![0.0; len * d];
        let mut xi_sq = vec![0.0; len];
        let mut n = vec![0i64; d];
        for i in 0..len {
            decode(i, half, side, &mut n);
            let mut s = 0.0;
            for a in 0..d {
                let v = h * n[a] as f64;
                xi[i * d + a] = v;
                s += v * v;
            }
            xi_sq[i] = s;
        }
        Ok(Arc::new(Self { d, h, radius, half, side, len, xi, xi_sq }))
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    /// `⌊R/h⌋`, the largest lattice coordinate magnitude.
    pub fn half_width(&self) -> usize {
        self.half
    }
    /// Modes per axis, `2⌊R/h⌋ + 1`.
    pub fn side(&self) -> usize {
        self.side
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.d as i32)
    }
    pub fn zero_index(&self) -> usize {
        self.len / 2
    }
    pub fn is_zero_mode(&self, i: usize) -> bool {
        i == self.zero_index()
    }
    pub fn xi(&self, i: usize) -> &[f64] {
        &self.xi[i * self.d..(i + 1) * self.d]
    }
    pub fn xi_sq(&self, i: usize) -> f64 {
        self.xi_sq[i]
    }
    pub fn xi_norm(&self, i: usize) -> f64 {
        self.xi_sq[i].sqrt()
    }
    pub fn xi_sq_all(&self) -> &[f64] {
        &self.xi_sq
    }
    pub fn neg_index(&self, i: usize) -> usize {
        self.len - 1 - i
    }

    /// Integer lattice coordinates of mode `i`.
    pub fn coords(&self, i: usize) -> Vec<i64> {
        let mut n = vec![0i64; self.d];
        decode(i, self.half, self.side, &mut n);
        n
    }

    pub fn index_of(&self, n: &[i64]) -> Option<usize> {
        if n.len() != self.d {
            return None;
        }
        let half = self.half as i64;
        let mut idx = 0usize;
        for &c in n {
            if c < -half || c > half {
                return None;
            }
            idx = idx * self.side + (c + half) as usize;
        }
        Some(idx)
    }

    /// Index of `ξ_i - ξ_j`, or `None` when it lies outside the lattice.
    pub fn shift_index(&self, i: usize, j: usize) -> Option<usize> {
        let half = self.half as i64;
        let side = self.side;
        let (mut a, mut b) = (i, j);
        let mut idx = 0usize;
        let mut scale = 1usize;
        for _ in 0..self.d {
            let ca = (a % side) as i64 - half;
            let cb = (b % side) as i64 - half;
            a /= side;
            b /= side;
            let c = ca - cb;
            if c < -half || c > half {
                return None;
            }
            idx += (c + half) as usize * scale;
            scale *= side;
        }
        Some(idx)
    }

    /// Total quadrature volume `((2⌊R/h⌋+1) h)^d`.
    pub fn volume(&self) -> f64 {
        (self.side as f64 * self.h).powi(self.d as i32)
    }

    /// Stable fingerprint of the grid parameters for reports.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.d as u64).to_le_bytes());
        hasher.update(self.h.to_le_bytes());
        hasher.update(self.radius.to_le_bytes());
        hasher.update((self.half as u64).to_le_bytes());
        hex::encode(&hasher.finalize()[..8])
    }

    pub fn same_as(&self, other: &FrequencyGrid) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}

fn decode(mut i: usize, half: usize, side: usize, out: &mut [i64]) {
    for slot in out.iter_mut().rev() {
        *slot = (i % side) as i64 - half as i64;
        i /= side;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn mode_counts() {
        assert_eq!(FrequencyGrid::build(3, 1.0, 2.0).unwrap().len(), 125);
        assert_eq!(FrequencyGrid::build(3, 0.5, 1.0).unwrap().len(), 125);
        assert_eq!(FrequencyGrid::build(4, 1.0, 1.0).unwrap().len(), 81);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FrequencyGrid::build(2, 1.0, 2.0).is_err());
        assert!(FrequencyGrid::build(3, 0.0, 2.0).is_err());
        assert!(FrequencyGrid::build(3, 1.0, 0.5).is_err());
        assert!(matches!(
            FrequencyGrid::build_with_budget(3, 0.01, 1.0, 1000),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn zero_mode_and_symmetry() {
        let g = FrequencyGrid::build(3, 0.5, 1.5).unwrap();
        let z = g.zero_index();
        assert_eq!(g.xi_sq(z), 0.0);
        assert_eq!((0..g.len()).filter(|&i| g.xi_sq(i) == 0.0).count(), 1);
        for i in 0..g.len() {
            let j = g.neg_index(i);
            for a in 0..3 {
                assert_eq!(g.xi(i)[a], -g.xi(j)[a]);
            }
        }
    }

    #[test]
    fn volume_matches_cell_sum() {
        let g = FrequencyGrid::build(3, 0.25, 1.0).unwrap();
        let total: f64 = (0..g.len()).map(|_| g.cell_measure()).sum();
        assert!((total - g.volume()).abs() < 1e-12 * g.volume());
        assert!((g.volume() - (9.0f64 * 0.25).powi(3)).abs() < 1e-12);
    }

    #[test]
    fn shift_index_examples() {
        let g = FrequencyGrid::build(3, 1.0, 3.0).unwrap();
        let z = g.zero_index();
        for i in 0..g.len() {
            assert_eq!(g.shift_index(i, i), Some(z));
            assert_eq!(g.shift_index(i, z), Some(i));
            assert_eq!(g.shift_index(z, i), Some(g.neg_index(i)));
        }
    }

    #[test]
    fn shift_index_matches_direct_coordinates() {
        let g = FrequencyGrid::build(3, 0.5, 2.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut saw_out = 0;
        for _ in 0..2000 {
            let i = rng.random_range(0..g.len());
            let j = rng.random_range(0..g.len());
            let diff: Vec<i64> = g.coords(i).iter().zip(g.coords(j)).map(|(a, b)| a - b).collect();
            let inside = diff.iter().all(|c| c.abs() <= g.half_width() as i64);
            match g.shift_index(i, j) {
                Some(k) => {
                    assert!(inside);
                    assert_eq!(g.coords(k), diff);
                }
                None => {
                    assert!(!inside);
                    saw_out += 1;
                }
            }
        }
        assert!(saw_out > 0);
    }

    #[test]
    fn index_roundtrip() {
        let g = FrequencyGrid::build(4, 1.0, 2.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.index_of(&g.coords(i)), Some(i));
        }
    }
}
