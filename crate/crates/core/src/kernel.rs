//! Memory kernels of the convolution equation
//!
//! ```text
//! da/dt = −∫₀ᵗ K(t − t') a(t') dt'
//! ```
//!
//! on a uniform grid. [`extract_kernel`] deconvolves `K` from samples of `a`,
//! [`forward_solve`] integrates `a` from `K` and `a(0)`. Both use trapezoidal
//! convolution quadrature; extraction takes derivatives from central
//! differences, the forward solve steps with the trapezoidal rule. The two
//! schemes are independent, so they invert each other to `O(dt²)` only.

use serde::{Deserialize, Serialize};

use crate::error::{LadderError, Result};
use crate::optimize::minimize_nonnegative;
use crate::series::TimeSeries;

/// Samples `K(τ_n)`, `τ_n = n·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub dt: f64,
    pub samples: Vec<f64>,
    /// Damping rate applied by [`damp_kernel`], if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Kernel {
    pub fn from_fn(dt: f64, len: usize, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dt,
            samples: (0..len).map(|n| f(n as f64 * dt)).collect(),
            gamma: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Central-difference derivative estimates. The first sample uses the
/// one-sided second-order stencil; the last one uses a ghost sample from
/// quartic extrapolation, keeping the central stencil whose error cancels
/// against the trapezoidal quadrature.
fn derivative(a: &[f64], h: f64) -> Vec<f64> {
    let n = a.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (a[i + 1] - a[i - 1]) / (2.0 * h);
    }
    let ghost = 5.0 * a[n - 1] - 10.0 * a[n - 2] + 10.0 * a[n - 3] - 5.0 * a[n - 4] + a[n - 5];
    d[n - 1] = (ghost - a[n - 2]) / (2.0 * h);
    d
}

/// `a''(0)`. Inputs that start flat are extended evenly, `a(−t) = a(t)`;
/// otherwise a one-sided four-point stencil is used.
fn second_derivative_at_zero(a: &[f64], h: f64) -> f64 {
    let slope_step = ((-3.0 * a[0] + 4.0 * a[1] - a[2]) / 2.0).abs();
    let rise = (a[1] - a[0]).abs();
    if slope_step <= 0.1 * rise || rise == 0.0 {
        2.0 * (a[1] - a[0]) / (h * h)
    } else {
        (2.0 * a[0] - 5.0 * a[1] + 4.0 * a[2] - a[3]) / (h * h)
    }
}

/// `Σ_{j=1}^{n−1} K_j a_{n−j}`.
#[inline]
fn interior_convolution(k: &[f64], a: &[f64], n: usize) -> f64 {
    (1..n).map(|j| k[j] * a[n - j]).sum()
}

/// Memory kernel of `a` on the same grid.
pub fn extract_kernel(a: &TimeSeries) -> Result<Kernel> {
    if a.len() < 5 {
        return Err(LadderError::TooFewSamples {
            needed: 5,
            got: a.len(),
        });
    }
    let s = &a.samples;
    let a0 = s[0];
    if a0.abs() <= 1e-12 * a.max_abs() || a0 == 0.0 {
        return Err(LadderError::SingularDeconvolution);
    }
    let h = a.dt;
    let da = derivative(s, h);
    let mut k = vec![0.0; s.len()];
    k[0] = -second_derivative_at_zero(s, h) / a0;
    for n in 1..s.len() {
        let known = 0.5 * k[0] * s[n] + interior_convolution(&k, s, n);
        k[n] = -2.0 * (da[n] / h + known) / a0;
    }
    Ok(Kernel {
        dt: h,
        samples: k,
        gamma: None,
    })
}

/// Integrates the convolution equation for `steps` samples starting at `a0`.
///
/// Each step is the trapezoidal rule `a_n = a_{n−1} + h(f_{n−1} + f_n)/2` with
/// the convolution `f_n` itself by trapezoidal quadrature. `f_n` is affine in
/// `a_n`, so the implicit corrector is solved exactly.
pub fn forward_solve(k: &Kernel, a0: f64, steps: usize) -> Result<TimeSeries> {
    if !a0.is_finite() {
        return Err(LadderError::InvalidParameter("a(0) is not finite".into()));
    }
    if steps > k.len() {
        return Err(LadderError::KernelTooShort {
            available: k.len(),
            requested: steps,
        });
    }
    let h = k.dt;
    let kk = &k.samples;
    let mut a = vec![0.0; steps];
    if steps == 0 {
        return TimeSeries::new(h, a);
    }
    a[0] = a0;
    let self_coupling = -0.5 * h * kk[0];
    let denom = 1.0 - 0.5 * h * self_coupling;
    let mut f_prev = 0.0;
    for n in 1..steps {
        let known = -h * (0.5 * kk[n] * a0 + interior_convolution(kk, &a, n));
        a[n] = (a[n - 1] + 0.5 * h * (f_prev + known)) / denom;
        f_prev = known + self_coupling * a[n];
    }
    TimeSeries::new(h, a)
}

/// `K̃(τ) = e^{−γτ} K(τ)`.
pub fn damp_kernel(k: &Kernel, gamma: f64) -> Result<Kernel> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(LadderError::InvalidParameter(format!(
            "damping rate must be non-negative, got {gamma}"
        )));
    }
    let samples = k
        .samples
        .iter()
        .enumerate()
        .map(|(n, &x)| (-gamma * n as f64 * k.dt).exp() * x)
        .collect();
    Ok(Kernel {
        dt: k.dt,
        samples,
        gamma: Some(gamma),
    })
}

/// Unperturbed curve → kernel → damped kernel → modified curve.
pub fn predict_modified(a_unpert: &TimeSeries, gamma: f64) -> Result<TimeSeries> {
    let k = extract_kernel(a_unpert)?;
    predict_from_kernel(&k, a_unpert.initial(), gamma, a_unpert.len())
}

fn predict_from_kernel(k: &Kernel, a0: f64, gamma: f64, steps: usize) -> Result<TimeSeries> {
    forward_solve(&damp_kernel(k, gamma)?, a0, steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Upper end of the initial search interval `[0, upper]`.
    pub upper: f64,
    pub scan_points: usize,
    pub rel_tol: f64,
    /// Fit only the first `window` samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            upper: 10.0,
            scan_points: 41,
            rel_tol: 1e-5,
            window: None,
        }
    }
}

impl FitOptions {
    pub(crate) fn windowed(
        &self,
        a: &TimeSeries,
        b: &TimeSeries,
    ) -> Result<(TimeSeries, TimeSeries)> {
        a.check_same_grid(b)?;
        let len = self.window.map_or(a.len(), |w| w.min(a.len()));
        Ok((a.truncated(len), b.truncated(len)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    /// `sqrt(Σ (prediction − target)² dt)` at the optimum.
    pub l2_error: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// The optimum sits on the widened upper bound.
    pub at_boundary: bool,
}

impl GammaFit {
    /// `l2_error` relative to the L2 norm of `target`.
    pub fn relative_error(&self, target: &TimeSeries) -> f64 {
        self.l2_error / target.l2_norm()
    }
}

/// Least-squares damping rate mapping `a_unpert` onto `a_pert`.
pub fn fit_gamma(
    a_unpert: &TimeSeries,
    a_pert: &TimeSeries,
    options: &FitOptions,
) -> Result<GammaFit> {
    let (unpert, pert) = options.windowed(a_unpert, a_pert)?;
    let k = extract_kernel(&unpert)?;
    let a0 = unpert.initial();
    let steps = unpert.len();
    let objective = |gamma: f64| -> f64 {
        predict_from_kernel(&k, a0, gamma, steps)
            .and_then(|p| p.squared_distance(&pert))
            .unwrap_or(f64::INFINITY)
    };
    let best = minimize_nonnegative(
        objective,
        options.upper,
        options.scan_points,
        options.rel_tol,
    );
    if !best.fx.is_finite() {
        return Err(LadderError::Numerical(
            "memory-kernel prediction diverged for every damping rate".into(),
        ));
    }
    Ok(GammaFit {
        gamma: best.x,
        l2_error: best.fx.sqrt(),
        bracket: best.bracket,
        iterations: best.iterations,
        at_boundary: best.at_boundary,
    })
}
