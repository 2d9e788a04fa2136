//! Sector-wise exact diagonalization and the spectral diagnostics built on it:
//! density of states, local density of states, window weights, and the
//! structure of an operator expressed in an energy eigenbasis.

use std::cmp::Ordering;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LadderError, Result};
use crate::lattice::{Basis, BlockedOperator};

/// Relative asymmetry tolerated before an operator is rejected as non-Hermitian.
const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenpairs of one sector, eigenvalues ascending, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub energies: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SectorSpectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `U† M U`.
    pub fn to_eigenbasis(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.vectors.transpose() * m * &self.vectors
    }

    /// `U M U†`.
    pub fn from_eigenbasis(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.vectors * m * self.vectors.transpose()
    }

    /// `U† diag(d) U` without forming the diagonal matrix.
    pub fn diagonal_to_eigenbasis(&self, d: &[f64]) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (mut row, &w) in scaled.row_iter_mut().zip(d) {
            row *= w;
        }
        self.vectors.transpose() * scaled
    }
}

/// Full eigendecomposition of a sector-blocked operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    basis: Arc<Basis>,
    pub sectors: Vec<SectorSpectrum>,
}

impl Spectrum {
    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// All eigenvalues, ascending.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .sectors
            .iter()
            .flat_map(|s| s.energies.iter().copied())
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn ground_energy(&self) -> f64 {
        self.sectors
            .iter()
            .filter(|s| s.dim() > 0)
            .map(|s| s.energies[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// `(sector, index)` of every eigenstate, ordered by energy. Ties keep
    /// sector order, so the ordering is deterministic.
    pub fn global_order(&self) -> Vec<(usize, usize)> {
        let mut order: Vec<(usize, usize)> = self
            .sectors
            .iter()
            .enumerate()
            .flat_map(|(s, sec)| (0..sec.dim()).map(move |i| (s, i)))
            .collect();
        order.sort_by(|a, b| {
            self.sectors[a.0].energies[a.1].total_cmp(&self.sectors[b.0].energies[b.1])
        });
        order
    }

    pub fn check_compatible(&self, op: &BlockedOperator) -> Result<()> {
        if op.basis().sites != self.basis.sites {
            return Err(LadderError::DimensionMismatch(format!(
                "operator on {} sites, spectrum on {}",
                op.basis().sites,
                self.basis.sites
            )));
        }
        Ok(())
    }

    /// `max_s ‖U_s† U_s − 1‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| {
                let g = s.vectors.transpose() * &s.vectors;
                (g - DMatrix::identity(s.dim(), s.dim())).amax()
            })
            .fold(0.0, f64::max)
    }

    /// `max_s max|U E U† − M|` against the operator that was diagonalized.
    pub fn reconstruction_error(&self, op: &BlockedOperator) -> f64 {
        self.sectors
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let e = DMatrix::from_diagonal(&s.energies);
                (s.from_eigenbasis(&e) - op.sector_dense(i)).amax()
            })
            .fold(0.0, f64::max)
    }
}

fn sorted_eigen(m: DMatrix<f64>) -> SectorSpectrum {
    let n = m.nrows();
    if n == 0 {
        return SectorSpectrum {
            energies: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    SectorSpectrum { energies, vectors }
}

/// Diagonalizes every sector block of `op`.
pub fn diagonalize(op: &BlockedOperator) -> Result<Spectrum> {
    let asym = op.max_asymmetry();
    if asym > HERMITIAN_TOL * op.max_abs().max(1.0) {
        return Err(LadderError::NotHermitian(asym));
    }
    let sectors = (0..op.blocks().len())
        .into_par_iter()
        .map(|s| sorted_eigen(op.sector_dense(s)))
        .collect();
    Ok(Spectrum {
        basis: Arc::clone(op.basis()),
        sectors,
    })
}

/// Diagonalizes dense per-sector matrices that share `basis`.
pub fn diagonalize_dense(basis: &Arc<Basis>, blocks: Vec<DMatrix<f64>>) -> Result<Spectrum> {
    if blocks.len() != basis.sectors.len() {
        return Err(LadderError::DimensionMismatch(format!(
            "{} blocks for {} sectors",
            blocks.len(),
            basis.sectors.len()
        )));
    }
    for b in &blocks {
        let asym = (b - b.transpose()).amax();
        if asym > HERMITIAN_TOL * b.amax().max(1.0) {
            return Err(LadderError::NotHermitian(asym));
        }
    }
    let sectors = blocks.into_par_iter().map(sorted_eigen).collect();
    Ok(Spectrum {
        basis: Arc::clone(basis),
        sectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Eigenstate count per bin divided by the dimension.
    Count,
    /// Probability weight per bin.
    Weight,
}

/// Uniform-width histogram over energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub start: f64,
    pub width: f64,
    pub values: Vec<f64>,
    pub normalization: Normalization,
}

impl Histogram {
    fn accumulate(
        start: f64,
        stop: f64,
        width: f64,
        samples: impl Iterator<Item = (f64, f64)>,
        normalization: Normalization,
    ) -> Self {
        let bins = (((stop - start) / width).ceil() as usize).max(1);
        let mut values = vec![0.0; bins];
        for (e, w) in samples {
            let i = (((e - start) / width).floor().max(0.0) as usize).min(bins - 1);
            values[i] += w;
        }
        Self {
            start,
            width,
            values,
            normalization,
        }
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let lo = self.start + i as f64 * self.width;
        (lo, lo + self.width)
    }

    pub fn center(&self, i: usize) -> f64 {
        self.start + (i as f64 + 0.5) * self.width
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn end(&self) -> f64 {
        self.edges(self.values.len() - 1).1
    }
}

fn check_width(width: f64) -> Result<()> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(LadderError::InvalidParameter(format!(
            "bin width must be positive, got {width}"
        )));
    }
    Ok(())
}

/// Fraction of eigenstates per bin; bins are anchored at the lowest eigenvalue.
pub fn dos_histogram(spectrum: &Spectrum, bin_width: f64) -> Result<Histogram> {
    check_width(bin_width)?;
    let e = spectrum.energies();
    let d = e.len() as f64;
    let (lo, hi) = (e[0], e[e.len() - 1]);
    Ok(Histogram::accumulate(
        lo,
        hi,
        bin_width,
        e.iter().map(|&x| (x, 1.0 / d)),
        Normalization::Count,
    ))
}

/// Energy distribution of `populations` (one weight per eigenstate, sector
/// by sector, matching `spectrum`), using the same bins as [`dos_histogram`].
pub fn ldos_histogram(
    spectrum: &Spectrum,
    populations: &[Vec<f64>],
    bin_width: f64,
) -> Result<Histogram> {
    check_width(bin_width)?;
    if populations.len() != spectrum.sectors.len()
        || populations
            .iter()
            .zip(&spectrum.sectors)
            .any(|(p, s)| p.len() != s.dim())
    {
        return Err(LadderError::DimensionMismatch(
            "populations do not match spectrum sectors".into(),
        ));
    }
    let total: f64 = populations.iter().flatten().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(LadderError::InvalidState(format!(
            "populations sum to {total}"
        )));
    }
    let e = spectrum.energies();
    let (lo, hi) = (e[0], e[e.len() - 1]);
    let samples = spectrum
        .sectors
        .iter()
        .zip(populations)
        .flat_map(|(s, p)| s.energies.iter().copied().zip(p.iter().copied()))
        .map(|(e, w)| (e, w / total));
    Ok(Histogram::accumulate(
        lo,
        hi,
        bin_width,
        samples,
        Normalization::Weight,
    ))
}

/// Histogram mass inside `[lo, hi]`, partial bins weighted by overlap.
pub fn window_weight(h: &Histogram, lo: f64, hi: f64) -> Result<f64> {
    if lo.partial_cmp(&hi) != Some(Ordering::Less) {
        return Err(LadderError::InvalidParameter(format!(
            "window [{lo}, {hi}] is empty"
        )));
    }
    Ok(h.values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (a, b) = h.edges(i);
            let overlap = (b.min(hi) - a.max(lo)).max(0.0);
            v * overlap / h.width
        })
        .sum())
}

/// Dense operator in the energy-ordered eigenbasis of a spectrum.
#[derive(Debug, Clone)]
pub struct EigenbasisMatrix {
    pub energies: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

impl EigenbasisMatrix {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Entries with `|M_mn| > threshold·max|M|`, as `(row, col, value)`.
    pub fn entries_above(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        let cut = threshold * self.matrix.amax();
        let n = self.dim();
        let mut out = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = self.matrix[(r, c)];
                if v.abs() > cut {
                    out.push((r, c, v));
                }
            }
        }
        out
    }
}

/// `⟨m|op|n⟩` with `m, n` running over all eigenstates in ascending energy.
pub fn in_eigenbasis(op: &BlockedOperator, spectrum: &Spectrum) -> Result<EigenbasisMatrix> {
    spectrum.check_compatible(op)?;
    let order = spectrum.global_order();
    let d = order.len();
    let mut position: Vec<Vec<usize>> = spectrum.sectors.iter().map(|s| vec![0; s.dim()]).collect();
    for (g, &(s, i)) in order.iter().enumerate() {
        position[s][i] = g;
    }
    let mut matrix = DMatrix::zeros(d, d);
    for (s, sec) in spectrum.sectors.iter().enumerate() {
        if sec.dim() == 0 {
            continue;
        }
        let block = op.block(s);
        let local = match block.as_diagonal() {
            Some(diag) => sec.diagonal_to_eigenbasis(&diag),
            None => sec.to_eigenbasis(&block.to_dense()),
        };
        for i in 0..sec.dim() {
            for j in 0..sec.dim() {
                matrix[(position[s][i], position[s][j])] = local[(i, j)];
            }
        }
    }
    let energies = order
        .iter()
        .map(|&(s, i)| spectrum.sectors[s].energies[i])
        .collect();
    Ok(EigenbasisMatrix { energies, matrix })
}

/// Perturbation matrix in the unperturbed eigenbasis.
pub fn v_in_eigenbasis(v: &BlockedOperator, spectrum: &Spectrum) -> Result<EigenbasisMatrix> {
    in_eigenbasis(v, spectrum)
}

/// Fraction of all `d²` elements above `threshold·max|M|`.
pub fn sparseness(m: &EigenbasisMatrix, threshold: f64) -> Result<f64> {
    if threshold.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(LadderError::InvalidParameter(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let max = m.matrix.amax();
    if max == 0.0 {
        return Ok(0.0);
    }
    let cut = threshold * max;
    let count = m.matrix.iter().filter(|v| v.abs() > cut).count();
    Ok(count as f64 / (m.dim() * m.dim()) as f64)
}
