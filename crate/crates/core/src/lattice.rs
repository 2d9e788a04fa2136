//! Two-leg spin-1/2 ladder operators over the bit-encoded z-product basis.
//!
//! Spin `(l, k)` (rung `l` in `1..=L`, leg `k` in `1..=2`) lives on bit
//! `2(l-1) + (k-1)`; a set bit is spin up. Every operator built here conserves
//! total Sᶻ, so it is stored block by block, one block per number of up spins.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LadderError, Result};

/// How a Heisenberg bond is normalized in terms of spin-1/2 operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondConvention {
    /// `J S_i · S_j` with `S = σ/2`.
    #[default]
    Spin,
    /// `(J/2) σ_i · σ_j`, i.e. every bond (including the diagonal Sᶻ-Sᶻ
    /// perturbation) carries twice the `Spin` energy.
    HalfPauli,
}

impl BondConvention {
    pub fn scale(self) -> f64 {
        match self {
            BondConvention::Spin => 1.0,
            BondConvention::HalfPauli => 2.0,
        }
    }
}

fn default_coupling() -> f64 {
    1.0
}

/// Geometry and couplings of a periodic two-leg ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    /// Number of rungs `L`.
    #[serde(rename = "L", alias = "rungs")]
    pub rungs: usize,
    #[serde(default = "default_coupling")]
    pub j_par: f64,
    #[serde(default = "default_coupling")]
    pub j_perp: f64,
    /// Strength of the diagonal perturbation.
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub convention: BondConvention,
}

impl LadderSpec {
    pub fn new(rungs: usize) -> Self {
        Self {
            rungs,
            j_par: 1.0,
            j_perp: 1.0,
            lambda: 0.0,
            convention: BondConvention::Spin,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_couplings(mut self, j_par: f64, j_perp: f64) -> Self {
        self.j_par = j_par;
        self.j_perp = j_perp;
        self
    }

    pub fn with_convention(mut self, convention: BondConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rungs < 2 {
            return Err(LadderError::InvalidSpec(format!(
                "need at least 2 rungs, got {}",
                self.rungs
            )));
        }
        if 2 * self.rungs > 30 {
            return Err(LadderError::InvalidSpec(format!(
                "{} rungs exceed the 30-spin basis limit",
                self.rungs
            )));
        }
        for (name, v) in [
            ("j_par", self.j_par),
            ("j_perp", self.j_perp),
            ("lambda", self.lambda),
        ] {
            if !v.is_finite() {
                return Err(LadderError::InvalidSpec(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        2 * self.rungs
    }

    pub fn dim(&self) -> usize {
        1 << self.sites()
    }

    fn check_rung(&self, rung: usize) -> Result<()> {
        if rung == 0 || rung > self.rungs {
            return Err(LadderError::IndexOutOfRange {
                what: "rung",
                index: rung,
                lo: 1,
                hi: self.rungs,
            });
        }
        Ok(())
    }

    /// Middle rung: `L/2` for even `L`, `(L+1)/2` for odd `L`.
    pub fn middle_rung(&self) -> usize {
        if self.rungs.is_multiple_of(2) {
            self.rungs / 2
        } else {
            self.rungs.div_ceil(2)
        }
    }

    /// Weights `cos[q(l - L/2)]`, `q = 2πk/L`, for `l = 1..=L`.
    pub fn mode_coefficients(&self, k: usize) -> Result<Vec<f64>> {
        if k >= self.rungs {
            return Err(LadderError::IndexOutOfRange {
                what: "mode",
                index: k,
                lo: 0,
                hi: self.rungs - 1,
            });
        }
        let q = 2.0 * PI * k as f64 / self.rungs as f64;
        let half = self.rungs as f64 / 2.0;
        Ok((1..=self.rungs)
            .map(|l| (q * (l as f64 - half)).cos())
            .collect())
    }
}

/// Bit position of spin `(rung, leg)`, both 1-based. Rungs wrap periodically.
pub fn site_bit(rungs: usize, rung: usize, leg: usize) -> u32 {
    let l = (rung - 1) % rungs;
    (2 * l + (leg - 1)) as u32
}

#[inline]
fn sz(state: u32, bit: u32) -> f64 {
    if state >> bit & 1 == 1 {
        0.5
    } else {
        -0.5
    }
}

/// Basis states of one total-Sᶻ sector, in increasing bit-string order.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    pub n_up: usize,
    pub states: Vec<u32>,
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, state: u32) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    /// Total Sᶻ of the sector.
    pub fn magnetization(&self, sites: usize) -> f64 {
        self.n_up as f64 - sites as f64 / 2.0
    }
}

/// All sectors of a `sites`-spin product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub sites: usize,
    pub sectors: Vec<SectorBasis>,
}

impl Basis {
    pub fn new(sites: usize) -> Self {
        let mut sectors: Vec<SectorBasis> = (0..=sites)
            .map(|n_up| SectorBasis {
                n_up,
                states: Vec::new(),
            })
            .collect();
        for s in 0u32..(1u32 << sites) {
            sectors[s.count_ones() as usize].states.push(s);
        }
        Self { sites, sectors }
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }
}

/// Compressed-row sparse matrix for one sector block.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlock {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseBlock {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    fn diagonal(diag: Vec<f64>) -> Self {
        let dim = diag.len();
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: diag,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (r, self.cols[i], self.vals[i]))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    /// Diagonal entries, if the block has no off-diagonal entries.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        let mut d = vec![0.0; self.dim];
        for (r, c, v) in self.iter() {
            if r != c {
                if v != 0.0 {
                    return None;
                }
            } else {
                d[r] += v;
            }
        }
        Some(d)
    }

    fn linear_combination(&self, a: f64, other: &SparseBlock, b: f64) -> SparseBlock {
        let rows = (0..self.dim)
            .map(|r| {
                let mut row: Vec<(usize, f64)> = Vec::new();
                for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                    row.push((self.cols[i], a * self.vals[i]));
                }
                for i in other.row_ptr[r]..other.row_ptr[r + 1] {
                    row.push((other.cols[i], b * other.vals[i]));
                }
                row
            })
            .collect();
        SparseBlock::from_rows(rows)
    }

    /// `max |M_rc - M_cr|`.
    pub fn max_asymmetry(&self) -> f64 {
        let dense = self.to_dense();
        let mut worst = 0.0f64;
        for (r, c, _) in self.iter() {
            worst = worst.max((dense[(r, c)] - dense[(c, r)]).abs());
        }
        worst
    }
}

/// Hermitian operator stored as one sparse block per total-Sᶻ sector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedOperator {
    basis: Arc<Basis>,
    blocks: Vec<SparseBlock>,
}

impl BlockedOperator {
    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn blocks(&self) -> &[SparseBlock] {
        &self.blocks
    }

    pub fn block(&self, sector: usize) -> &SparseBlock {
        &self.blocks[sector]
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.blocks.iter().map(SparseBlock::nnz).sum()
    }

    pub fn sector_dense(&self, sector: usize) -> DMatrix<f64> {
        self.blocks[sector].to_dense()
    }

    /// Full-space dense matrix indexed by bit string. Only sensible for small ladders.
    pub fn to_dense_full(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (sector, block) in self.basis.sectors.iter().zip(&self.blocks) {
            for (r, c, v) in block.iter() {
                m[(sector.states[r] as usize, sector.states[c] as usize)] += v;
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .filter(|&(r, c, _)| r == c)
            .map(|(_, _, v)| v)
            .sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.blocks
            .iter()
            .map(SparseBlock::max_asymmetry)
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|(_, _, v)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.blocks.iter().all(|b| b.as_diagonal().is_some())
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &BlockedOperator, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(x, y)| x.linear_combination(a, y, b))
            .collect();
        Ok(Self {
            basis: Arc::clone(&self.basis),
            blocks,
        })
    }

    pub fn check_compatible(&self, other: &BlockedOperator) -> Result<()> {
        if self.basis.sites != other.basis.sites {
            return Err(LadderError::DimensionMismatch(format!(
                "{} vs {} sites",
                self.basis.sites, other.basis.sites
            )));
        }
        Ok(())
    }

    /// Largest entry of `[self, other]`, evaluated block by block with dense products.
    pub fn commutator_max_abs(&self, other: &BlockedOperator) -> Result<f64> {
        self.check_compatible(other)?;
        let mut worst = 0.0f64;
        for (x, y) in self.blocks.iter().zip(&other.blocks) {
            let (x, y) = (x.to_dense(), y.to_dense());
            let c = &x * &y - &y * &x;
            worst = worst.max(c.amax());
        }
        Ok(worst)
    }

    fn from_diagonal(basis: Arc<Basis>, f: impl Fn(u32) -> f64) -> Self {
        let blocks = basis
            .sectors
            .iter()
            .map(|s| SparseBlock::diagonal(s.states.iter().map(|&st| f(st)).collect()))
            .collect();
        Self { basis, blocks }
    }
}

/// Builder holding the shared basis for one ladder geometry.
#[derive(Debug, Clone)]
pub struct Ladder {
    spec: LadderSpec,
    basis: Arc<Basis>,
}

impl Ladder {
    pub fn new(spec: LadderSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            basis: Arc::new(Basis::new(spec.sites())),
        })
    }

    pub fn spec(&self) -> &LadderSpec {
        &self.spec
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// Same geometry and basis with a different perturbation strength.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            spec: self.spec.with_lambda(lambda),
            basis: Arc::clone(&self.basis),
        }
    }

    fn leg_bonds(&self) -> Vec<(u32, u32)> {
        let l = self.spec.rungs;
        (1..=2)
            .flat_map(|k| (1..=l).map(move |r| (site_bit(l, r, k), site_bit(l, r + 1, k))))
            .collect()
    }

    fn rung_bonds(&self) -> Vec<(u32, u32)> {
        let l = self.spec.rungs;
        (1..=l)
            .map(|r| (site_bit(l, r, 1), site_bit(l, r, 2)))
            .collect()
    }

    fn diagonal_bonds(&self) -> Vec<(u32, u32)> {
        let l = self.spec.rungs;
        (1..=l)
            .flat_map(|r| {
                [
                    (site_bit(l, r, 1), site_bit(l, r + 1, 2)),
                    (site_bit(l, r, 2), site_bit(l, r + 1, 1)),
                ]
            })
            .collect()
    }

    fn heisenberg(&self, bonds: &[(u32, f64, u32)]) -> BlockedOperator {
        let blocks = self
            .basis
            .sectors
            .iter()
            .map(|sector| {
                let rows = sector
                    .states
                    .iter()
                    .map(|&s| {
                        let mut row = Vec::with_capacity(bonds.len() + 1);
                        let mut diag = 0.0;
                        for &(a, j, b) in bonds {
                            let (za, zb) = (sz(s, a), sz(s, b));
                            diag += j * za * zb;
                            if za != zb {
                                let flipped = s ^ (1 << a) ^ (1 << b);
                                let c = sector.index_of(flipped).expect("flip stays in sector");
                                row.push((c, 0.5 * j));
                            }
                        }
                        row.push((sector.index_of(s).unwrap(), diag));
                        row
                    })
                    .collect();
                SparseBlock::from_rows(rows)
            })
            .collect();
        BlockedOperator {
            basis: Arc::clone(&self.basis),
            blocks,
        }
    }

    /// Unperturbed Hamiltonian: Heisenberg legs plus Heisenberg rungs.
    pub fn h0(&self) -> BlockedOperator {
        let scale = self.spec.convention.scale();
        let j_par = scale * self.spec.j_par;
        let j_perp = scale * self.spec.j_perp;
        let mut bonds: Vec<(u32, f64, u32)> = self
            .leg_bonds()
            .into_iter()
            .map(|(a, b)| (a, j_par, b))
            .collect();
        bonds.extend(self.rung_bonds().into_iter().map(|(a, b)| (a, j_perp, b)));
        self.heisenberg(&bonds)
    }

    /// Diagonal Sᶻ-Sᶻ couplings across both diagonals of every plaquette.
    pub fn v(&self) -> BlockedOperator {
        let scale = self.spec.convention.scale();
        let bonds = self.diagonal_bonds();
        BlockedOperator::from_diagonal(Arc::clone(&self.basis), |s| {
            scale * bonds.iter().map(|&(a, b)| sz(s, a) * sz(s, b)).sum::<f64>()
        })
    }

    /// `H0 + λV`.
    pub fn total(&self) -> BlockedOperator {
        let h0 = self.h0();
        if self.spec.lambda == 0.0 {
            return h0;
        }
        h0.linear_combination(1.0, &self.v(), self.spec.lambda)
            .expect("same basis")
    }

    /// `S^z_{l,1} + S^z_{l,2}` for rung `l` (1-based).
    pub fn sz_rung(&self, rung: usize) -> Result<BlockedOperator> {
        self.spec.check_rung(rung)?;
        let l = self.spec.rungs;
        let (a, b) = (site_bit(l, rung, 1), site_bit(l, rung, 2));
        Ok(BlockedOperator::from_diagonal(
            Arc::clone(&self.basis),
            move |s| sz(s, a) + sz(s, b),
        ))
    }

    /// Fourier mode `Σ_l cos[q(l - L/2)] S^z_l` with `q = 2πk/L`.
    pub fn sz_mode(&self, k: usize) -> Result<BlockedOperator> {
        let coef = self.spec.mode_coefficients(k)?;
        let l = self.spec.rungs;
        let bits: Vec<(u32, u32)> = (1..=l)
            .map(|r| (site_bit(l, r, 1), site_bit(l, r, 2)))
            .collect();
        Ok(BlockedOperator::from_diagonal(
            Arc::clone(&self.basis),
            move |s| {
                coef.iter()
                    .zip(&bits)
                    .map(|(c, &(a, b))| c * (sz(s, a) + sz(s, b)))
                    .sum()
            },
        ))
    }

    pub fn sz_total(&self) -> BlockedOperator {
        let n = self.spec.sites() as u32;
        BlockedOperator::from_diagonal(Arc::clone(&self.basis), move |s| {
            (0..n).map(|b| sz(s, b)).sum()
        })
    }
}

pub fn build_h0(spec: &LadderSpec) -> Result<BlockedOperator> {
    Ok(Ladder::new(*spec)?.h0())
}

pub fn build_v(spec: &LadderSpec) -> Result<BlockedOperator> {
    Ok(Ladder::new(*spec)?.v())
}

pub fn build_total(spec: &LadderSpec) -> Result<BlockedOperator> {
    Ok(Ladder::new(*spec)?.total())
}

pub fn build_sz_rung(spec: &LadderSpec, rung: usize) -> Result<BlockedOperator> {
    Ladder::new(*spec)?.sz_rung(rung)
}

pub fn build_sz_mode(spec: &LadderSpec, k: usize) -> Result<BlockedOperator> {
    Ladder::new(*spec)?.sz_mode(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_dense_h0(spec: &LadderSpec) -> DMatrix<f64> {
        // Brute-force full-space construction from single-site operators.
        let n = spec.sites();
        let d = 1usize << n;
        let mut h = DMatrix::zeros(d, d);
        let l = spec.rungs;
        let scale = spec.convention.scale();
        let mut bonds = Vec::new();
        for k in 1..=2 {
            for r in 1..=l {
                bonds.push((site_bit(l, r, k), site_bit(l, r + 1, k), spec.j_par));
            }
        }
        for r in 1..=l {
            bonds.push((site_bit(l, r, 1), site_bit(l, r, 2), spec.j_perp));
        }
        for s in 0..d {
            for &(a, b, j) in &bonds {
                let (ua, ub) = ((s >> a) & 1, (s >> b) & 1);
                let za = ua as f64 - 0.5;
                let zb = ub as f64 - 0.5;
                h[(s, s)] += scale * j * za * zb;
                if ua != ub {
                    let t = s ^ (1 << a) ^ (1 << b);
                    h[(t, s)] += scale * j * 0.5;
                }
            }
        }
        h
    }

    #[test]
    fn rejects_short_ladder() {
        assert!(matches!(
            build_h0(&LadderSpec::new(1)),
            Err(LadderError::InvalidSpec(_))
        ));
    }

    #[test]
    fn bit_map_is_bijective_and_periodic() {
        let l = 5;
        let mut seen: Vec<u32> = (1..=l)
            .flat_map(|r| (1..=2).map(move |k| site_bit(l, r, k)))
            .collect();
        seen.sort();
        assert_eq!(seen, (0..2 * l as u32).collect::<Vec<_>>());
        assert_eq!(site_bit(l, l + 1, 2), site_bit(l, 1, 2));
    }

    #[test]
    fn single_rung_spectrum() {
        let spec = LadderSpec::new(2).with_couplings(0.0, 1.0);
        let h = build_h0(&spec).unwrap().to_dense_full();
        let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        // Two independent rungs: sums of {-3/4, 1/4, 1/4, 1/4}.
        let rung = [-0.75, 0.25, 0.25, 0.25];
        let mut expected: Vec<f64> = rung
            .iter()
            .flat_map(|a| rung.iter().map(move |b| a + b))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn heisenberg_and_perturbation_are_traceless() {
        let spec = LadderSpec::new(6);
        let ladder = Ladder::new(spec).unwrap();
        assert!(ladder.h0().trace().abs() < 1e-9);
        assert!(ladder.v().trace().abs() < 1e-9);
    }

    #[test]
    fn perturbation_is_diagonal() {
        for l in 2..=5 {
            assert!(build_v(&LadderSpec::new(l)).unwrap().is_diagonal());
        }
    }

    #[test]
    fn perturbation_all_up_at_two_rungs() {
        // Four diagonal bonds, each doubled by the wrap, each worth 1/4.
        let v = build_v(&LadderSpec::new(2)).unwrap().to_dense_full();
        assert!((v[(15, 15)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn total_is_linear_in_lambda() {
        let base = LadderSpec::new(3);
        let h0 = build_h0(&base).unwrap().to_dense_full();
        let v = build_v(&base).unwrap().to_dense_full();
        assert_eq!(
            build_total(&base.with_lambda(0.0)).unwrap(),
            build_h0(&base).unwrap()
        );
        let h = build_total(&base.with_lambda(0.7)).unwrap().to_dense_full();
        assert!((h - (&h0 + &v * 0.7)).amax() < 1e-14);
    }

    #[test]
    fn blocked_matches_dense_construction() {
        for l in 2..=3 {
            for conv in [BondConvention::Spin, BondConvention::HalfPauli] {
                let spec = LadderSpec::new(l)
                    .with_couplings(1.3, 0.7)
                    .with_convention(conv);
                let blocked = build_h0(&spec).unwrap().to_dense_full();
                assert_eq!((blocked - pauli_dense_h0(&spec)).amax(), 0.0);
            }
        }
    }

    #[test]
    fn operators_are_symmetric_per_sector() {
        let ladder = Ladder::new(LadderSpec::new(4).with_lambda(0.4)).unwrap();
        assert_eq!(ladder.total().max_asymmetry(), 0.0);
        assert_eq!(ladder.sz_mode(1).unwrap().max_asymmetry(), 0.0);
    }

    #[test]
    fn conservation_and_commutation() {
        for l in 2..=4 {
            let ladder = Ladder::new(LadderSpec::new(l).with_lambda(0.7)).unwrap();
            let stot = ladder.sz_total();
            let h = ladder.total();
            let v = ladder.v();
            // Commutators are evaluated within blocks; also check full space
            // for the sector-free statement.
            let hd = h.to_dense_full();
            let sd = stot.to_dense_full();
            assert!((&hd * &sd - &sd * &hd).amax() < 1e-12);
            assert!(h.commutator_max_abs(&stot).unwrap() < 1e-12);
            assert!(v.commutator_max_abs(&stot).unwrap() < 1e-12);
            for k in 0..l {
                let mode = ladder.sz_mode(k).unwrap();
                assert!(v.commutator_max_abs(&mode).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn rung_magnetization_traces() {
        let spec = LadderSpec::new(3);
        let ladder = Ladder::new(spec).unwrap();
        let d = spec.dim() as f64;
        for l in 1..=3 {
            let s = ladder.sz_rung(l).unwrap().to_dense_full();
            assert_eq!(s.trace(), 0.0);
            assert!(((&s * &s).trace() - d / 2.0).abs() < 1e-12);
            let diag: Vec<f64> = s.diagonal().iter().copied().collect();
            assert!(diag.iter().all(|x| [-1.0, 0.0, 1.0].contains(x)));
        }
        assert!(matches!(
            ladder.sz_rung(4),
            Err(LadderError::IndexOutOfRange { .. })
        ));
        assert!(ladder.sz_rung(0).is_err());
    }

    #[test]
    fn zero_mode_is_total_magnetization() {
        let ladder = Ladder::new(LadderSpec::new(4)).unwrap();
        let m0 = ladder.sz_mode(0).unwrap().to_dense_full();
        let tot = ladder.sz_total().to_dense_full();
        assert!((m0 - tot).amax() < 1e-14);
        assert!(ladder.sz_mode(4).is_err());
    }

    #[test]
    fn mode_coefficient_table() {
        let c = LadderSpec::new(6).mode_coefficients(1).unwrap();
        let expected = [-0.5, 0.5, 1.0, 0.5, -0.5, -1.0];
        for (a, b) in c.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn middle_rung_convention() {
        assert_eq!(LadderSpec::new(6).middle_rung(), 3);
        assert_eq!(LadderSpec::new(13).middle_rung(), 7);
    }

    #[test]
    fn translation_leaves_spectrum_invariant() {
        // Relabel rungs l -> l+1 by permuting bits; spectrum must not change.
        for l in 2..=4 {
            let spec = LadderSpec::new(l).with_lambda(0.4);
            let h = build_total(&spec).unwrap().to_dense_full();
            let d = spec.dim();
            let shift = |s: usize| -> usize {
                let n = 2 * l;
                ((s << 2) | (s >> (n - 2))) & (d - 1)
            };
            let mut p = DMatrix::zeros(d, d);
            for s in 0..d {
                p[(shift(s), s)] = 1.0;
            }
            let shifted = &p * &h * p.transpose();
            assert!((shifted - &h).amax() < 1e-14);
        }
    }
}
