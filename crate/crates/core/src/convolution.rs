//! Lattice convolutions: tensor `f ∗ g`, the contracted vector `(f ∗ g)(ξ) ξ`,
//! Riesz convolution `∗_α` and nonassociative monomials of `∗_α`.
//!
//! The direct method sums over the truncated lattice in a fixed order and is
//! the reference. The FFT method embeds the lattice in a zero-padded box so
//! the cyclic convolution equals the linear one on every kept mode.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::PaddedLattice;
use crate::field::{apply_s_alpha, SpectralField};
use crate::grid::FrequencyGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    Direct,
    #[default]
    Fft,
}

/// Convolution engine bound to one grid.
pub struct Convolver {
    grid: Arc<FrequencyGrid>,
    method: ConvolutionMethod,
    lattice: Option<PaddedLattice>,
}

impl Convolver {
    pub fn new(grid: &Arc<FrequencyGrid>, method: ConvolutionMethod) -> Self {
        let lattice = match method {
            ConvolutionMethod::Fft => Some(PaddedLattice::new(grid.clone())),
            ConvolutionMethod::Direct => None,
        };
        Self { grid: grid.clone(), method, lattice }
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn method(&self) -> ConvolutionMethod {
        self.method
    }

    fn check(&self, f: &SpectralField, g: &SpectralField) -> Result<()> {
        if !f.grid().same_as(&self.grid) || !g.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch("convolution operands must share the engine grid".into()));
        }
        Ok(())
    }

    /// `(f ∗ g)(ξ)_{ab} = Σ_η h^d f_a(ξ-η) g_b(η)`, components row-major in `(a, b)`.
    pub fn tensor(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        self.check(f, g)?;
        let (nf, ng) = (f.ncomp(), g.ncomp());
        let pairs: Vec<(usize, usize)> = (0..nf).flat_map(|a| (0..ng).map(move |b| (a, b))).collect();
        let planes = self.planes(&[(f, g)], &pairs);
        let n = self.grid.len();
        let mut data = vec![ZERO; n * nf * ng];
        for (p, plane) in planes.iter().enumerate() {
            for i in 0..n {
                data[i * nf * ng + p] = plane[i];
            }
        }
        SpectralField::from_data(&self.grid, nf * ng, data)
    }

    /// Scalar convolution of two scalar fields.
    pub fn scalar(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        if f.ncomp() != 1 || g.ncomp() != 1 {
            return Err(Error::KindMismatch("scalar convolution needs scalar fields".into()));
        }
        self.tensor(f, g)
    }

    /// `(f ∗ g)(ξ) ξ`, i.e. `Σ_η h^d f(ξ-η) (g(η)·ξ)`, without forming the matrix.
    pub fn contracted(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        self.contracted_sum(&[(f, g)])
    }

    /// `Σ_p (f_p ∗ g_p)(ξ) ξ` over a list of vector pairs.
    pub fn contracted_sum(&self, pairs: &[(&SpectralField, &SpectralField)]) -> Result<SpectralField> {
        let d = self.grid.dim();
        for (f, g) in pairs {
            self.check(f, g)?;
            if f.ncomp() != d || g.ncomp() != d {
                return Err(Error::KindMismatch("contracted convolution needs vector fields".into()));
            }
        }
        let comps: Vec<(usize, usize)> = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).collect();
        let planes = self.planes(pairs, &comps);
        Ok(contract_planes(&self.grid, &planes))
    }

    /// Per component pair `(a, b)`, the plane `Σ_p (f_p)_a ∗ (g_p)_b`.
    fn planes(&self, pairs: &[(&SpectralField, &SpectralField)], comps: &[(usize, usize)]) -> Vec<Vec<Complex64>> {
        match &self.lattice {
            Some(lat) => fft_planes(lat, pairs, comps),
            None => comps
                .par_iter()
                .map(|&(a, b)| {
                    let mut acc = vec![ZERO; self.grid.len()];
                    for (f, g) in pairs {
                        let plane = direct_plane(&self.grid, f, a, g, b);
                        acc.iter_mut().zip(plane).for_each(|(x, y)| *x += y);
                    }
                    acc
                })
                .collect(),
        }
    }

    /// Precomputed per-component operand, reusable across many contractions.
    pub fn spectrum(&self, f: &SpectralField) -> Result<Spectrum> {
        if !f.grid().same_as(&self.grid) || f.ncomp() != self.grid.dim() {
            return Err(Error::KindMismatch("spectrum needs a vector field on the engine grid".into()));
        }
        Ok(match &self.lattice {
            Some(lat) => Spectrum::Padded((0..f.ncomp()).map(|c| lat.transform(f.data(), f.ncomp(), c)).collect()),
            None => Spectrum::Lattice(f.clone()),
        })
    }

    /// `Σ_p (f_p ∗ g_p)(ξ) ξ` from spectra. With `symmetric` the caller
    /// promises the pair list is closed under swapping, so the `d x d` plane
    /// sum is symmetric and only its upper triangle is inverted.
    pub fn contracted_from(&self, pairs: &[(&Spectrum, &Spectrum)], symmetric: bool) -> SpectralField {
        let d = self.grid.dim();
        let comps: Vec<(usize, usize)> =
            (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).filter(|&(a, b)| !symmetric || a <= b).collect();
        let computed: Vec<Vec<Complex64>> = match &self.lattice {
            Some(lat) => {
                let cell = self.grid.cell_measure();
                comps
                    .iter()
                    .map(|&(a, b)| {
                        let mut prod = vec![ZERO; lat.padded_len()];
                        for (f, g) in pairs {
                            let (Spectrum::Padded(ft), Spectrum::Padded(gt)) = (f, g) else {
                                unreachable!("spectrum kind follows the engine method")
                            };
                            prod.par_iter_mut()
                                .zip(ft[a].par_iter().zip(gt[b].par_iter()))
                                .for_each(|(p, (x, y))| *p += x * y);
                        }
                        lat.untransform(prod, cell)
                    })
                    .collect()
            }
            None => {
                let fields: Vec<(&SpectralField, &SpectralField)> = pairs
                    .iter()
                    .map(|(f, g)| match (f, g) {
                        (Spectrum::Lattice(a), Spectrum::Lattice(b)) => (a, b),
                        _ => unreachable!("spectrum kind follows the engine method"),
                    })
                    .collect();
                comps
                    .par_iter()
                    .map(|&(a, b)| {
                        let mut acc = vec![ZERO; self.grid.len()];
                        for (f, g) in &fields {
                            let plane = direct_plane(&self.grid, f, a, g, b);
                            acc.iter_mut().zip(plane).for_each(|(x, y)| *x += y);
                        }
                        acc
                    })
                    .collect()
            }
        };
        let mut planes: Vec<Vec<Complex64>> = vec![vec![]; d * d];
        for (&(a, b), plane) in comps.iter().zip(computed) {
            if symmetric && a != b {
                planes[b * d + a] = plane.clone();
            }
            planes[a * d + b] = plane;
        }
        contract_planes(&self.grid, &planes)
    }

    /// `(f ∗_α g)(ξ) = (f ∗ g)(ξ)/|ξ|^α`, zero mode set to 0.
    pub fn riesz(&self, f: &SpectralField, g: &SpectralField, alpha: f64) -> Result<SpectralField> {
        apply_s_alpha(&self.tensor(f, g)?, alpha)
    }

    /// Bottom-up evaluation of a monomial of `∗_α` over `leaves`.
    pub fn monomial(&self, tree: &MonomialTree, leaves: &[SpectralField], alpha: f64) -> Result<SpectralField> {
        match tree {
            MonomialTree::Leaf(i) => leaves
                .get(*i)
                .cloned()
                .ok_or_else(|| Error::Domain(format!("monomial leaf {i} has no field"))),
            MonomialTree::Node(l, r) => {
                let a = self.monomial(l, leaves, alpha)?;
                let b = self.monomial(r, leaves, alpha)?;
                self.riesz(&a, &b, alpha)
            }
        }
    }
}

/// A convolution operand prepared by [`Convolver::spectrum`].
pub enum Spectrum {
    Padded(Vec<Vec<Complex64>>),
    Lattice(SpectralField),
}

/// Reference sum for one component pair, in fixed `(ξ, η)` enumeration order.
fn direct_plane(grid: &FrequencyGrid, f: &SpectralField, a: usize, g: &SpectralField, b: usize) -> Vec<Complex64> {
    let (nf, ng) = (f.ncomp(), g.ncomp());
    let (fd, gd) = (f.data(), g.data());
    let cell = grid.cell_measure();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = ZERO;
            for j in 0..grid.len() {
                if let Some(k) = grid.shift_index(i, j) {
                    acc += fd[k * nf + a] * gd[j * ng + b];
                }
            }
            acc * cell
        })
        .collect()
}

fn fft_planes(
    lat: &PaddedLattice,
    pairs: &[(&SpectralField, &SpectralField)],
    comps: &[(usize, usize)],
) -> Vec<Vec<Complex64>> {
    let cell = lat.grid().cell_measure();
    let transformed: Vec<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> = pairs
        .iter()
        .map(|(f, g)| {
            let ft = (0..f.ncomp()).map(|c| lat.transform(f.data(), f.ncomp(), c)).collect();
            let gt = (0..g.ncomp()).map(|c| lat.transform(g.data(), g.ncomp(), c)).collect();
            (ft, gt)
        })
        .collect();
    comps
        .iter()
        .map(|&(a, b)| {
            let mut prod = vec![ZERO; lat.padded_len()];
            for (ft, gt) in &transformed {
                prod.par_iter_mut()
                    .zip(ft[a].par_iter().zip(gt[b].par_iter()))
                    .for_each(|(p, (x, y))| *p += x * y);
            }
            lat.untransform(prod, cell)
        })
        .collect()
}

/// `out_a(ξ) = Σ_b plane_{ab}(ξ) ξ_b` from row-major `d x d` planes.
pub(crate) fn contract_planes(grid: &Arc<FrequencyGrid>, planes: &[Vec<Complex64>]) -> SpectralField {
    let d = grid.dim();
    let mut out = SpectralField::zeros_vector(grid);
    for i in 0..grid.len() {
        let xi = grid.xi(i);
        let vals = out.mode_mut(i);
        for a in 0..d {
            vals[a] = (0..d).map(|b| planes[a * d + b][i] * xi[b]).sum();
        }
    }
    out
}

/// Binary bracketing of leaves `0..k`; internal nodes denote `∗_α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonomialTree {
    Leaf(usize),
    Node(Box<MonomialTree>, Box<MonomialTree>),
}

impl MonomialTree {
    pub fn node(l: MonomialTree, r: MonomialTree) -> Self {
        MonomialTree::Node(Box::new(l), Box::new(r))
    }

    pub fn degree(&self) -> usize {
        match self {
            MonomialTree::Leaf(_) => 1,
            MonomialTree::Node(l, r) => l.degree() + r.degree(),
        }
    }

    /// Every bracketing of `k` ordered leaves; there are `Catalan(k-1)` of them.
    pub fn all_bracketings(k: usize) -> Vec<MonomialTree> {
        fn build(lo: usize, hi: usize) -> Vec<MonomialTree> {
            if hi - lo == 1 {
                return vec![MonomialTree::Leaf(lo)];
            }
            let mut out = vec![];
            for split in lo + 1..hi {
                for l in build(lo, split) {
                    for r in build(split, hi) {
                        out.push(MonomialTree::node(l.clone(), r));
                    }
                }
            }
            out
        }
        if k == 0 {
            return vec![];
        }
        build(0, k)
    }

    pub fn render(&self) -> String {
        match self {
            MonomialTree::Leaf(i) => format!("f{i}"),
            MonomialTree::Node(l, r) => format!("({} * {})", l.render(), r.render()),
        }
    }
}
