//! Experiment configuration, read from JSON.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spinladder::dynamics::{InitialStateSpec, StateKind};
use spinladder::kernel::FitOptions;
use spinladder::{BondConvention, LadderSpec};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    #[serde(rename = "L")]
    pub rungs: usize,
    #[serde(rename = "J_par", alias = "j_par", default = "one")]
    pub j_par: f64,
    #[serde(rename = "J_perp", alias = "j_perp", default = "one")]
    pub j_perp: f64,
    #[serde(default)]
    pub convention: BondConvention,
}

impl LadderConfig {
    pub fn spec(&self, lambda: f64) -> LadderSpec {
        LadderSpec::new(self.rungs)
            .with_couplings(self.j_par, self.j_perp)
            .with_convention(self.convention)
            .with_lambda(lambda)
    }
}

/// What to record: the Fourier mode `k` and/or individual rungs (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rungs: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub dt: f64,
    pub t_max: f64,
}

impl Grid {
    pub fn steps(&self) -> usize {
        spinladder::series::grid_len(self.t_max, self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Analysis {
    pub dos: bool,
    pub ldos: bool,
    pub vmatrix: bool,
    pub kernel_fit: bool,
    pub damping_fit: bool,
    pub feasibility: bool,
}

impl Default for Analysis {
    fn default() -> Self {
        Self {
            dos: true,
            ldos: true,
            vmatrix: true,
            kernel_fit: true,
            damping_fit: true,
            feasibility: true,
        }
    }
}

impl Analysis {
    pub fn needs_reference(&self) -> bool {
        self.kernel_fit || self.damping_fit || self.feasibility
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Spectral {
    pub bin_width: f64,
    pub window: [f64; 2],
    /// Relative threshold for counting `V` matrix elements as nonzero.
    pub threshold: f64,
}

impl Default for Spectral {
    fn default() -> Self {
        Self {
            bin_width: 1.0,
            window: [-3.0, 3.0],
            threshold: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ladder: LadderConfig,
    pub lambdas: Vec<f64>,
    pub state: InitialStateSpec,
    pub observable: Observable,
    pub grid: Grid,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub spectral: Spectral,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Divide curves by the unperturbed initial value in plot files.
    #[serde(default)]
    pub normalize: bool,
}

fn one() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.ladder.spec(0.0);
        spec.validate()
            .map_err(|e| CliError::config("ladder", e.to_string()))?;
        if self.lambdas.is_empty() {
            return Err(CliError::config("lambdas", "at least one value required"));
        }
        for (i, l) in self.lambdas.iter().enumerate() {
            if !l.is_finite() {
                return Err(CliError::config(format!("lambdas[{i}]"), "not finite"));
            }
            if self.lambdas[..i].contains(l) {
                return Err(CliError::config(
                    format!("lambdas[{i}]"),
                    format!("duplicate value {l}"),
                ));
            }
        }
        if self.analysis.needs_reference() && !self.lambdas.contains(&0.0) {
            return Err(CliError::config(
                "lambdas",
                "fits and feasibility compare against lambda = 0, which is missing",
            ));
        }

        self.state
            .validate()
            .map_err(|e| CliError::config("state", e.to_string()))?;
        if let Some(m) = self.state.mid_rung {
            if m == 0 || m > spec.rungs {
                return Err(CliError::config(
                    "state.mid_rung",
                    format!("must lie in 1..={}", spec.rungs),
                ));
            }
        }

        match self.observable.mode {
            Some(k) if k >= spec.rungs => {
                return Err(CliError::config(
                    "observable.mode",
                    format!("must lie in 0..{}", spec.rungs),
                ))
            }
            None if self.observable.rungs.is_empty() => {
                return Err(CliError::config(
                    "observable",
                    "needs a mode or at least one rung",
                ))
            }
            None if self.analysis.needs_reference() => {
                return Err(CliError::config(
                    "observable.mode",
                    "required when fits or feasibility are enabled",
                ))
            }
            _ => {}
        }
        for (i, &r) in self.observable.rungs.iter().enumerate() {
            if r == 0 || r > spec.rungs {
                return Err(CliError::config(
                    format!("observable.rungs[{i}]"),
                    format!("must lie in 1..={}", spec.rungs),
                ));
            }
        }

        if !(self.grid.dt > 0.0 && self.grid.dt.is_finite()) {
            return Err(CliError::config("grid.dt", "must be positive"));
        }
        if !(self.grid.t_max >= 0.0 && self.grid.t_max.is_finite()) {
            return Err(CliError::config("grid.t_max", "must be non-negative"));
        }
        let needed = if self.analysis.kernel_fit { 5 } else { 3 };
        if self.grid.steps() < needed {
            return Err(CliError::config(
                "grid",
                format!(
                    "t_max / dt gives {} samples, need at least {needed}",
                    self.grid.steps()
                ),
            ));
        }

        let s = &self.spectral;
        if !(s.bin_width > 0.0 && s.bin_width.is_finite()) {
            return Err(CliError::config("spectral.bin_width", "must be positive"));
        }
        if s.window[0].partial_cmp(&s.window[1]) != Some(Ordering::Less) {
            return Err(CliError::config(
                "spectral.window",
                "lower edge must be below upper edge",
            ));
        }
        if !(s.threshold > 0.0 && s.threshold.is_finite()) {
            return Err(CliError::config("spectral.threshold", "must be positive"));
        }

        let f = &self.fit;
        if !(f.upper > 0.0 && f.upper.is_finite()) {
            return Err(CliError::config("fit.upper", "must be positive"));
        }
        if f.scan_points < 3 {
            return Err(CliError::config("fit.scan_points", "need at least 3"));
        }
        if !(f.rel_tol > 0.0 && f.rel_tol < 1.0) {
            return Err(CliError::config("fit.rel_tol", "must lie in (0, 1)"));
        }
        if matches!(f.window, Some(w) if w < 5) {
            return Err(CliError::config("fit.window", "need at least 5 samples"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = PathBuf::new();
        let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn is_rho1(&self) -> bool {
        matches!(self.state.kind, StateKind::Rho1 { .. })
    }

    /// Index of `lambda = 0`, or of the first listed value when absent.
    pub fn reference_index(&self) -> usize {
        self.lambdas.iter().position(|&l| l == 0.0).unwrap_or(0)
    }
}

/// Label used in artifact file names.
pub fn lambda_label(lambda: f64) -> String {
    format!("lambda_{lambda}")
}
