//! Competing descriptions of a perturbed curve: direct exponential damping of
//! the unperturbed curve with a constant rate, or with a time-dependent rate
//! that vanishes at `t = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{LadderError, Result};
use crate::kernel::FitOptions;
use crate::optimize::{golden_section, minimize_nonnegative};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingModel {
    /// `a(t) e^{−Γt}`.
    Constant,
    /// `a(t) exp(−∫₀ᵗ Γ(s) ds)` with `Γ(s) = g(1 − e^{−s/τ_c})`.
    Tcl,
}

fn check_rate(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(LadderError::InvalidParameter(format!(
            "{name} must be non-negative, got {x}"
        )));
    }
    Ok(())
}

pub fn constant_damping_predict(a: &TimeSeries, rate: f64) -> Result<TimeSeries> {
    check_rate("damping rate", rate)?;
    Ok(a.map(|t, x| x * (-rate * t).exp()))
}

/// `∫₀ᵗ g(1 − e^{−s/τ_c}) ds`.
fn tcl_exponent(g: f64, tau_c: f64, t: f64) -> f64 {
    if tau_c == 0.0 {
        return g * t;
    }
    g * (t + tau_c * (-(t / tau_c)).exp_m1())
}

pub fn tcl_damping_predict(a: &TimeSeries, g: f64, tau_c: f64) -> Result<TimeSeries> {
    check_rate("g", g)?;
    check_rate("tau_c", tau_c)?;
    Ok(a.map(|t, x| x * (-tcl_exponent(g, tau_c, t)).exp()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingFit {
    pub model: DampingModel,
    /// `Γ` for the constant model, `g` for the time-dependent one.
    pub rate: f64,
    /// `τ_c`; absent for the constant model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_c: Option<f64>,
    pub l2_error: f64,
    pub at_boundary: bool,
}

impl DampingFit {
    pub fn predict(&self, a: &TimeSeries) -> Result<TimeSeries> {
        match self.model {
            DampingModel::Constant => constant_damping_predict(a, self.rate),
            DampingModel::Tcl => tcl_damping_predict(a, self.rate, self.tau_c.unwrap_or(0.0)),
        }
    }

    pub fn relative_error(&self, target: &TimeSeries) -> f64 {
        self.l2_error / target.l2_norm()
    }
}

/// Log-spaced `τ_c` grid for the coarse stage of the two-parameter fit.
const TAU_GRID: (f64, f64, usize) = (1e-3, 1e2, 26);

/// Least-squares fit of either damping model, using the same L2 objective as
/// the memory-kernel fit.
pub fn fit_damping(
    a_unpert: &TimeSeries,
    a_pert: &TimeSeries,
    model: DampingModel,
    options: &FitOptions,
) -> Result<DampingFit> {
    let (unpert, pert) = options.windowed(a_unpert, a_pert)?;
    let cost = |rate: f64, tau: f64| -> f64 {
        let pred = match model {
            DampingModel::Constant => constant_damping_predict(&unpert, rate),
            DampingModel::Tcl => tcl_damping_predict(&unpert, rate, tau),
        };
        pred.and_then(|p| p.squared_distance(&pert))
            .unwrap_or(f64::INFINITY)
    };
    let fit_rate = |tau: f64| {
        minimize_nonnegative(
            |r| cost(r, tau),
            options.upper,
            options.scan_points,
            options.rel_tol,
        )
    };
    match model {
        DampingModel::Constant => {
            let best = fit_rate(0.0);
            Ok(DampingFit {
                model,
                rate: best.x,
                tau_c: None,
                l2_error: best.fx.sqrt(),
                at_boundary: best.at_boundary,
            })
        }
        DampingModel::Tcl => {
            let (lo, hi, n) = TAU_GRID;
            let step = (hi / lo).ln() / (n - 1) as f64;
            let log_taus: Vec<f64> = (0..n).map(|i| lo.ln() + step * i as f64).collect();
            let coarse: Vec<f64> = log_taus.iter().map(|&lt| fit_rate(lt.exp()).fx).collect();
            let i = coarse
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            let a = log_taus[i.saturating_sub(1)];
            let b = log_taus[(i + 1).min(n - 1)];
            let polished = golden_section(|lt| fit_rate(lt.exp()).fx, a, b, 1e-4, 1e-6, 100);
            let (log_tau, _) = if coarse[i] < polished.fx {
                (log_taus[i], coarse[i])
            } else {
                (polished.x, polished.fx)
            };
            let tau = log_tau.exp();
            let best = fit_rate(tau);
            Ok(DampingFit {
                model,
                rate: best.x,
                tau_c: Some(tau),
                l2_error: best.fx.sqrt(),
                at_boundary: best.at_boundary,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    DampingFeasible,
    DampingInfeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Fraction of grid points with `|a_pert| > |a_unpert|`.
    pub fraction_above: f64,
    pub slope_unperturbed: f64,
    pub slope_perturbed: f64,
    pub equal_start: bool,
    pub verdict: Verdict,
}

/// Relative tolerance for two curves to count as starting at the same value.
const START_TOL: f64 = 1e-9;

/// Checks whether any damping of `a_unpert` could reproduce `a_pert`.
///
/// A damped prediction satisfies `|a e^{−Γt}| ≤ |a|` pointwise, so a perturbed
/// curve that starts equal and lies above the unperturbed one in magnitude on
/// most of the grid rules the whole family out.
pub fn damping_feasibility(
    a_unpert: &TimeSeries,
    a_pert: &TimeSeries,
) -> Result<FeasibilityReport> {
    a_unpert.check_same_grid(a_pert)?;
    let above = a_unpert
        .samples
        .iter()
        .zip(&a_pert.samples)
        .filter(|(u, p)| p.abs() > u.abs())
        .count();
    let fraction_above = above as f64 / a_unpert.len() as f64;
    let (u0, p0) = (a_unpert.initial(), a_pert.initial());
    let equal_start = (u0 - p0).abs() <= START_TOL * u0.abs().max(p0.abs());
    let verdict = if equal_start && fraction_above > 0.5 {
        Verdict::DampingInfeasible
    } else {
        Verdict::DampingFeasible
    };
    Ok(FeasibilityReport {
        fraction_above,
        slope_unperturbed: a_unpert.slope_at_zero()?,
        slope_perturbed: a_pert.slope_at_zero()?,
        equal_start,
        verdict,
    })
}
