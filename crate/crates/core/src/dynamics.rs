//! Initial states and exact time evolution of expectation values.
//!
//! Everything is expressed in the eigenbasis of the evolving Hamiltonian, so
//! `⟨A(t)⟩ = Σ_{mn} ρ_mn A_nm e^{i(E_m − E_n)t}` with no time stepping. For
//! real symmetric `ρ` and `A` the sum splits into `cᵀMc + sᵀMs` with
//! `c_m = cos E_m t`, `s_m = sin E_m t` and `M = ρ ∘ Aᵀ`, which is evaluated
//! for all grid times at once with two matrix products per sector.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LadderError, Result};
use crate::lattice::{BlockedOperator, Ladder};
use crate::series::TimeSeries;
use crate::spectral::{diagonalize_dense, SectorSpectrum, Spectrum};

/// Largest tolerated imaginary part of an expectation value.
pub const IMAGINARY_TOL: f64 = 1e-9;

/// Rows of the trigonometric tables processed per matrix product.
const TIME_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    /// `ρ ∝ 1 − ε S^z_mid`.
    Rho1 { epsilon: f64 },
    /// `ρ ∝ exp[−β(H + B S^z_mid)]` with the full perturbed `H`.
    Rho2 {
        beta: f64,
        #[serde(rename = "B", alias = "field")]
        field: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialStateSpec {
    #[serde(flatten)]
    pub kind: StateKind,
    /// Rung carrying the initial magnetization peak; the ladder centre if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mid_rung: Option<usize>,
}

impl InitialStateSpec {
    pub fn rho1(epsilon: f64) -> Self {
        Self {
            kind: StateKind::Rho1 { epsilon },
            mid_rung: None,
        }
    }

    pub fn rho2(beta: f64, field: f64) -> Self {
        Self {
            kind: StateKind::Rho2 { beta, field },
            mid_rung: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            StateKind::Rho1 { epsilon } if !(epsilon > 0.0 && epsilon.is_finite()) => Err(
                LadderError::InvalidState(format!("epsilon must be positive, got {epsilon}")),
            ),
            StateKind::Rho2 { beta, .. } if !(beta >= 0.0 && beta.is_finite()) => Err(
                LadderError::InvalidState(format!("beta must be non-negative, got {beta}")),
            ),
            StateKind::Rho2 { field, .. } if !field.is_finite() => {
                Err(LadderError::InvalidState("field is not finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn mid_rung(&self, ladder: &Ladder) -> usize {
        self.mid_rung.unwrap_or_else(|| ladder.spec().middle_rung())
    }

    pub fn is_rho1(&self) -> bool {
        matches!(self.kind, StateKind::Rho1 { .. })
    }
}

/// Density matrix in the eigenbasis of some [`Spectrum`], one block per sector.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub blocks: Vec<DMatrix<f64>>,
}

impl DensityMatrix {
    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.transpose()).amax())
            .fold(0.0, f64::max)
    }

    /// Diagonal elements `ρ_nn`, sector by sector.
    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|b| b.diagonal().iter().copied().collect())
            .collect()
    }

    fn check_against(&self, spectrum: &Spectrum) -> Result<()> {
        if self.blocks.len() != spectrum.sectors.len()
            || self
                .blocks
                .iter()
                .zip(&spectrum.sectors)
                .any(|(b, s)| b.nrows() != s.dim() || b.ncols() != s.dim())
        {
            return Err(LadderError::DimensionMismatch(
                "density matrix does not match spectrum".into(),
            ));
        }
        let asym = self.max_asymmetry();
        let scale = self.blocks.iter().map(|b| b.amax()).fold(0.0, f64::max);
        if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(LadderError::NotHermitian(asym));
        }
        Ok(())
    }
}

/// `(1 − ε S^z_mid)/d` in the eigenbasis of `spectrum`.
pub fn make_rho1(
    ladder: &Ladder,
    state: &InitialStateSpec,
    spectrum: &Spectrum,
) -> Result<DensityMatrix> {
    state.validate()?;
    let StateKind::Rho1 { epsilon } = state.kind else {
        return Err(LadderError::InvalidState("expected rho1".into()));
    };
    let mid = ladder.sz_rung(state.mid_rung(ladder))?;
    spectrum.check_compatible(&mid)?;
    let d = ladder.spec().dim() as f64;
    let blocks = spectrum
        .sectors
        .par_iter()
        .enumerate()
        .map(|(s, sec)| {
            let diag: Vec<f64> = mid
                .block(s)
                .as_diagonal()
                .expect("rung magnetization is diagonal")
                .iter()
                .map(|m| (1.0 - epsilon * m) / d)
                .collect();
            sec.diagonal_to_eigenbasis(&diag)
        })
        .collect();
    Ok(DensityMatrix { blocks })
}

/// `exp[−β(H + B S^z_mid)]/Z` in the eigenbasis of `spectrum`.
///
/// `hamiltonian` is the full (perturbed) Hamiltonian entering the exponent;
/// `spectrum` may belong to a different operator, e.g. `H0` for an LDOS.
pub fn make_rho2(
    ladder: &Ladder,
    state: &InitialStateSpec,
    hamiltonian: &BlockedOperator,
    spectrum: &Spectrum,
) -> Result<DensityMatrix> {
    state.validate()?;
    let StateKind::Rho2 { beta, field } = state.kind else {
        return Err(LadderError::InvalidState("expected rho2".into()));
    };
    spectrum.check_compatible(hamiltonian)?;
    let mid = ladder.sz_rung(state.mid_rung(ladder))?;
    let biased = hamiltonian.linear_combination(1.0, &mid, field)?;
    let blocks = (0..biased.blocks().len())
        .map(|s| biased.sector_dense(s))
        .collect();
    let thermal = diagonalize_dense(biased.basis(), blocks)?;
    let shift = thermal.ground_energy();
    let boltzmann: Vec<Vec<f64>> = thermal
        .sectors
        .iter()
        .map(|s| {
            s.energies
                .iter()
                .map(|e| (-beta * (e - shift)).exp())
                .collect()
        })
        .collect();
    let z: f64 = boltzmann.iter().flatten().sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(LadderError::InvalidState(format!(
            "partition function is {z}"
        )));
    }
    let blocks = spectrum
        .sectors
        .par_iter()
        .zip(thermal.sectors.par_iter())
        .zip(boltzmann.par_iter())
        .map(|((target, own), w)| {
            if target.dim() == 0 {
                return DMatrix::zeros(0, 0);
            }
            let mut scaled = own.vectors.clone();
            for (mut col, &wi) in scaled.column_iter_mut().zip(w) {
                col *= wi / z;
            }
            let rho = &scaled * own.vectors.transpose();
            let rho = (&rho + rho.transpose()) * 0.5;
            target.to_eigenbasis(&rho)
        })
        .collect();
    Ok(DensityMatrix { blocks })
}

/// Builds `ρ(0)` of either kind in the eigenbasis of `spectrum`.
pub fn make_state(
    ladder: &Ladder,
    state: &InitialStateSpec,
    hamiltonian: &BlockedOperator,
    spectrum: &Spectrum,
) -> Result<DensityMatrix> {
    match state.kind {
        StateKind::Rho1 { .. } => make_rho1(ladder, state, spectrum),
        StateKind::Rho2 { .. } => make_rho2(ladder, state, hamiltonian, spectrum),
    }
}

fn operator_in_sector(sec: &SectorSpectrum, op: &BlockedOperator, s: usize) -> DMatrix<f64> {
    let block = op.block(s);
    match block.as_diagonal() {
        Some(d) => sec.diagonal_to_eigenbasis(&d),
        None => sec.to_eigenbasis(&block.to_dense()),
    }
}

/// Exact evolution of a fixed initial state under the Hamiltonian whose
/// spectrum is given, sampled on `t_n = n·dt`.
pub struct Evolution<'a> {
    spectrum: &'a Spectrum,
    rho: &'a DensityMatrix,
    dt: f64,
    steps: usize,
}

impl<'a> Evolution<'a> {
    pub fn new(
        spectrum: &'a Spectrum,
        rho: &'a DensityMatrix,
        dt: f64,
        steps: usize,
    ) -> Result<Self> {
        rho.check_against(spectrum)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LadderError::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if steps == 0 {
            return Err(LadderError::InvalidParameter("empty time grid".into()));
        }
        Ok(Self {
            spectrum,
            rho,
            dt,
            steps,
        })
    }

    /// Real and imaginary parts of `⟨op(t_n)⟩` contributed by one sector.
    fn sector_trace(&self, s: usize, op: &BlockedOperator) -> (Vec<f64>, Vec<f64>) {
        let sec = &self.spectrum.sectors[s];
        let n = sec.dim();
        let mut re = vec![0.0; self.steps];
        let mut im = vec![0.0; self.steps];
        if n == 0 {
            return (re, im);
        }
        let a = operator_in_sector(sec, op, s);
        let m = self.rho.blocks[s].component_mul(&a.transpose());
        if m.amax() == 0.0 {
            return (re, im);
        }
        for start in (0..self.steps).step_by(TIME_CHUNK) {
            let rows = TIME_CHUNK.min(self.steps - start);
            let cos = DMatrix::from_fn(rows, n, |r, c| {
                (sec.energies[c] * (start + r) as f64 * self.dt).cos()
            });
            let sin = DMatrix::from_fn(rows, n, |r, c| {
                (sec.energies[c] * (start + r) as f64 * self.dt).sin()
            });
            let cm = &cos * &m;
            let sm = &sin * &m;
            for r in 0..rows {
                let (mut real, mut imag) = (0.0, 0.0);
                for c in 0..n {
                    real += cm[(r, c)] * cos[(r, c)] + sm[(r, c)] * sin[(r, c)];
                    imag += sm[(r, c)] * cos[(r, c)] - cm[(r, c)] * sin[(r, c)];
                }
                re[start + r] = real;
                im[start + r] = imag;
            }
        }
        (re, im)
    }

    /// `⟨op(t_n)⟩`, rejecting results with imaginary residue above [`IMAGINARY_TOL`].
    pub fn expectation(&self, op: &BlockedOperator) -> Result<TimeSeries> {
        self.spectrum.check_compatible(op)?;
        let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..self.spectrum.sectors.len())
            .into_par_iter()
            .map(|s| self.sector_trace(s, op))
            .collect();
        let mut re = vec![0.0; self.steps];
        let mut im = vec![0.0; self.steps];
        for (r, i) in &parts {
            for n in 0..self.steps {
                re[n] += r[n];
                im[n] += i[n];
            }
        }
        let worst = im.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if worst > IMAGINARY_TOL {
            return Err(LadderError::ComplexExpectation(worst));
        }
        TimeSeries::new(self.dt, re)
    }
}

/// `⟨op(t)⟩` on `t_n = n·dt`, `n = 0..steps`.
pub fn evolve_expectation(
    spectrum: &Spectrum,
    rho: &DensityMatrix,
    op: &BlockedOperator,
    dt: f64,
    steps: usize,
) -> Result<TimeSeries> {
    Evolution::new(spectrum, rho, dt, steps)?.expectation(op)
}

/// Rung magnetizations `p_l(t)` for `l = 1..=L`.
pub fn magnetization_profile(
    ladder: &Ladder,
    spectrum: &Spectrum,
    rho: &DensityMatrix,
    dt: f64,
    steps: usize,
) -> Result<Vec<TimeSeries>> {
    let evolution = Evolution::new(spectrum, rho, dt, steps)?;
    (1..=ladder.spec().rungs)
        .map(|l| evolution.expectation(&ladder.sz_rung(l)?))
        .collect()
}

/// Infinite-time average of `⟨op(t)⟩`: the sum of `ρ_mn A_nm` over pairs of
/// eigenstates with equal energy (including `m = n`).
pub fn diagonal_ensemble(
    spectrum: &Spectrum,
    rho: &DensityMatrix,
    op: &BlockedOperator,
    degeneracy_tol: f64,
) -> Result<f64> {
    rho.check_against(spectrum)?;
    spectrum.check_compatible(op)?;
    let mut total = 0.0;
    for (s, sec) in spectrum.sectors.iter().enumerate() {
        if sec.dim() == 0 {
            continue;
        }
        let a = operator_in_sector(sec, op, s);
        let r = &rho.blocks[s];
        for m in 0..sec.dim() {
            for n in 0..sec.dim() {
                if (sec.energies[m] - sec.energies[n]).abs() <= degeneracy_tol {
                    total += r[(m, n)] * a[(n, m)];
                }
            }
        }
    }
    Ok(total)
}
