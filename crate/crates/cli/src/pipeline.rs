//! Per-λ simulation and analysis, assembled into a [`RunManifest`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spinladder::comparators::{
    damping_feasibility, fit_damping, DampingFit, DampingModel, FeasibilityReport,
};
use spinladder::dynamics::{make_state, Evolution};
use spinladder::kernel::{extract_kernel, fit_gamma, predict_modified, GammaFit, Kernel};
use spinladder::spectral::{
    diagonalize, dos_histogram, ldos_histogram, sparseness, v_in_eigenbasis, window_weight,
    Histogram, Spectrum,
};
use spinladder::{Ladder, TimeSeries};

use crate::artifacts::{write_json, Artifact, ArtifactKind, Writer};
use crate::config::{lambda_label, ExperimentConfig};
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Which parts of the pipeline a verb runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stages {
    pub series: bool,
    pub kernels: bool,
    pub fits: bool,
    pub spectral: bool,
}

impl Stages {
    pub fn all() -> Self {
        Self {
            series: true,
            kernels: true,
            fits: true,
            spectral: true,
        }
    }

    fn needs_dynamics(&self) -> bool {
        self.series || self.kernels || self.fits
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectralSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dos_window_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparseness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmatrix_entries: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    /// Initial value of the recorded mode before any rescaling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_value: Option<f64>,
    /// Factor applied so the curve starts at the reference initial value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldos_window_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_fit: Option<GammaFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_relative_l2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_damping: Option<DampingFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tcl_damping: Option<DampingFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityReport>,
}

impl LambdaSummary {
    fn new(lambda: f64) -> Self {
        Self {
            lambda,
            initial_value: None,
            scale: None,
            ldos_window_weight: None,
            gamma_fit: None,
            kernel_relative_l2: None,
            constant_damping: None,
            tcl_damping: None,
            feasibility: None,
        }
    }

    fn merge(&mut self, newer: LambdaSummary) {
        macro_rules! take {
            ($($f:ident),*) => { $( if newer.$f.is_some() { self.$f = newer.$f; } )* };
        }
        take!(
            initial_value,
            scale,
            ldos_window_weight,
            gamma_fit,
            kernel_relative_l2,
            constant_damping,
            tcl_damping,
            feasibility
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
    pub spectral: SpectralSummary,
    pub lambdas: Vec<LambdaSummary>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::format(&path, e))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }

    pub fn artifact(&self, path: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.path == path)
    }

    pub fn summary(&self, lambda: f64) -> Option<&LambdaSummary> {
        self.lambdas.iter().find(|s| s.lambda == lambda)
    }

    /// Folds a later partial run of the same config into this one.
    pub fn merge(&mut self, newer: RunManifest) {
        for a in newer.artifacts {
            match self.artifacts.iter_mut().find(|b| b.path == a.path) {
                Some(b) => *b = a,
                None => self.artifacts.push(a),
            }
        }
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let s = newer.spectral;
        self.spectral.ground_energy = s.ground_energy.or(self.spectral.ground_energy);
        self.spectral.dos_window_weight = s.dos_window_weight.or(self.spectral.dos_window_weight);
        self.spectral.sparseness = s.sparseness.or(self.spectral.sparseness);
        self.spectral.vmatrix_entries = s.vmatrix_entries.or(self.spectral.vmatrix_entries);
        for l in newer.lambdas {
            match self.lambdas.iter_mut().find(|m| m.lambda == l.lambda) {
                Some(m) => m.merge(l),
                None => self.lambdas.push(l),
            }
        }
        self.timings.extend(newer.timings);
    }

    /// Checks every listed file exists and is non-empty.
    pub fn missing_artifacts(&self, root: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| fs::metadata(root.join(&a.path)).map_or(true, |m| m.len() == 0))
            .map(|a| a.path.clone())
            .collect()
    }
}

pub fn mode_series_path(k: usize, lambda: f64) -> String {
    format!("series/mode_k{k}_{}.csv", lambda_label(lambda))
}

pub fn rung_series_path(rung: usize, lambda: f64) -> String {
    format!("series/rung_{rung}_{}.csv", lambda_label(lambda))
}

pub fn prediction_path(lambda: f64) -> String {
    format!("fits/prediction_{}.csv", lambda_label(lambda))
}

pub fn ldos_path(lambda: f64) -> String {
    format!("spectral/ldos_{}.csv", lambda_label(lambda))
}

pub const DOS_PATH: &str = "spectral/dos.csv";
pub const VMATRIX_PATH: &str = "spectral/vmatrix.csv";

/// Everything computed for one λ before anything is written.
struct LambdaRun {
    lambda: f64,
    mode: Option<TimeSeries>,
    rungs: Vec<(usize, TimeSeries)>,
    ldos: Option<Histogram>,
}

fn simulate_lambda(
    config: &ExperimentConfig,
    stages: Stages,
    lambda: f64,
    h0: Option<&Spectrum>,
) -> spinladder::Result<LambdaRun> {
    let ladder = Ladder::new(config.ladder.spec(lambda))?;
    let mut run = LambdaRun {
        lambda,
        mode: None,
        rungs: Vec::new(),
        ldos: None,
    };
    let h = ladder.total();
    if stages.needs_dynamics() {
        let spectrum = diagonalize(&h)?;
        let rho = make_state(&ladder, &config.state, &h, &spectrum)?;
        let evolution = Evolution::new(&spectrum, &rho, config.grid.dt, config.grid.steps())?;
        if let Some(k) = config.observable.mode {
            run.mode = Some(evolution.expectation(&ladder.sz_mode(k)?)?);
        }
        for &r in &config.observable.rungs {
            run.rungs
                .push((r, evolution.expectation(&ladder.sz_rung(r)?)?));
        }
    }
    if let Some(h0) = h0 {
        let rho = make_state(&ladder, &config.state, &h, h0)?;
        run.ldos = Some(ldos_histogram(
            h0,
            &rho.populations(),
            config.spectral.bin_width,
        )?);
    }
    Ok(run)
}

fn seconds(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

/// Runs the requested stages and writes artifacts under `out`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out: &Path,
    stages: Stages,
) -> Result<RunManifest> {
    config.validate()?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut writer = Writer::new(out);
    let mut timings = BTreeMap::new();
    let mut spectral = SpectralSummary::default();
    let analysis = config.analysis;
    let [lo, hi] = config.spectral.window;

    let want_h0 = stages.spectral && (analysis.dos || analysis.ldos || analysis.vmatrix);
    let h0 = if want_h0 {
        let start = Instant::now();
        let ladder = Ladder::new(config.ladder.spec(0.0))?;
        let spectrum = diagonalize(&ladder.h0())?;
        spectral.ground_energy = Some(spectrum.ground_energy());
        if analysis.dos {
            let dos = dos_histogram(&spectrum, config.spectral.bin_width)?;
            spectral.dos_window_weight = Some(window_weight(&dos, lo, hi)?);
            writer.histogram(DOS_PATH, None, &dos)?;
        }
        if analysis.vmatrix {
            let m = v_in_eigenbasis(&ladder.v(), &spectrum)?;
            let threshold = config.spectral.threshold;
            spectral.sparseness = Some(sparseness(&m, threshold)?);
            let entries = m.entries_above(threshold);
            spectral.vmatrix_entries = Some(entries.len());
            writer.matrix(VMATRIX_PATH, &entries)?;
        }
        timings.insert("unperturbed_spectrum".to_owned(), seconds(start));
        Some(spectrum)
    } else {
        None
    };

    let start = Instant::now();
    let ldos_h0 = h0.as_ref().filter(|_| analysis.ldos);
    let mut runs: Vec<LambdaRun> = config
        .lambdas
        .par_iter()
        .map(|&lambda| simulate_lambda(config, stages, lambda, ldos_h0))
        .collect::<spinladder::Result<_>>()?;
    timings.insert("dynamics".to_owned(), seconds(start));

    let mut summaries: Vec<LambdaSummary> = config
        .lambdas
        .iter()
        .map(|&l| LambdaSummary::new(l))
        .collect();

    // Curves start at the same value as the reference curve.
    let reference = config.reference_index();
    if let Some(target) = runs[reference].mode.as_ref().map(TimeSeries::initial) {
        for (run, summary) in runs.iter_mut().zip(&mut summaries) {
            let Some(mode) = run.mode.as_mut() else {
                continue;
            };
            let initial = mode.initial();
            let scale = if config.is_rho1() {
                1.0
            } else {
                target / initial
            };
            summary.initial_value = Some(initial);
            summary.scale = Some(scale);
            if scale != 1.0 {
                *mode = mode.scaled(scale);
                for (_, r) in run.rungs.iter_mut() {
                    *r = r.scaled(scale);
                }
            }
        }
    }

    for (run, summary) in runs.iter().zip(&mut summaries) {
        if let Some(ldos) = &run.ldos {
            summary.ldos_window_weight = Some(window_weight(ldos, lo, hi)?);
            writer.histogram(&ldos_path(run.lambda), Some(run.lambda), ldos)?;
        }
        if stages.series {
            if let (Some(k), Some(mode)) = (config.observable.mode, &run.mode) {
                writer.series(
                    &mode_series_path(k, run.lambda),
                    ArtifactKind::Series,
                    Some(run.lambda),
                    None,
                    mode,
                )?;
            }
            for (r, s) in &run.rungs {
                writer.series(
                    &rung_series_path(*r, run.lambda),
                    ArtifactKind::Series,
                    Some(run.lambda),
                    Some(*r),
                    s,
                )?;
            }
        }
        if stages.kernels {
            if let Some(mode) = &run.mode {
                let k: Kernel = extract_kernel(mode)?;
                writer.kernel(
                    &format!("kernel/{}.csv", lambda_label(run.lambda)),
                    run.lambda,
                    &k,
                )?;
            }
        }
    }

    if stages.fits && analysis.needs_reference() {
        let start = Instant::now();
        let unperturbed = runs[reference].mode.as_ref().expect("mode validated");
        let fits: Vec<Fits> = runs
            .par_iter()
            .map(|run| {
                fit_lambda(
                    config,
                    unperturbed,
                    run.mode.as_ref().expect("mode validated"),
                )
            })
            .collect::<spinladder::Result<_>>()?;
        for ((run, summary), fit) in runs.iter().zip(&mut summaries).zip(fits) {
            let label = lambda_label(run.lambda);
            let lambda = Some(run.lambda);
            if let Some((g, prediction)) = fit.gamma {
                summary.kernel_relative_l2 = Some(g.relative_error(run.mode.as_ref().unwrap()));
                writer.json(
                    &format!("fits/gamma_{label}.json"),
                    ArtifactKind::Fit,
                    lambda,
                    &g,
                )?;
                writer.series(
                    &prediction_path(run.lambda),
                    ArtifactKind::Prediction,
                    lambda,
                    None,
                    &prediction,
                )?;
                summary.gamma_fit = Some(g);
            }
            if let Some((c, t)) = fit.damping {
                writer.json(
                    &format!("fits/damping_constant_{label}.json"),
                    ArtifactKind::Fit,
                    lambda,
                    &c,
                )?;
                writer.json(
                    &format!("fits/damping_tcl_{label}.json"),
                    ArtifactKind::Fit,
                    lambda,
                    &t,
                )?;
                summary.constant_damping = Some(c);
                summary.tcl_damping = Some(t);
            }
            if let Some(f) = fit.feasibility {
                writer.json(
                    &format!("fits/feasibility_{label}.json"),
                    ArtifactKind::Feasibility,
                    lambda,
                    &f,
                )?;
                summary.feasibility = Some(f);
            }
        }
        timings.insert("fits".to_owned(), seconds(start));
    }

    let mut artifacts = writer.into_artifacts();
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = RunManifest {
        config_hash: config.hash(),
        config: config.clone(),
        artifacts,
        spectral,
        lambdas: summaries,
        timings,
    };
    let missing = manifest.missing_artifacts(out);
    if !missing.is_empty() {
        return Err(CliError::MissingArtifacts(missing));
    }
    Ok(manifest)
}

struct Fits {
    gamma: Option<(GammaFit, TimeSeries)>,
    damping: Option<(DampingFit, DampingFit)>,
    feasibility: Option<FeasibilityReport>,
}

fn fit_lambda(
    config: &ExperimentConfig,
    unperturbed: &TimeSeries,
    perturbed: &TimeSeries,
) -> spinladder::Result<Fits> {
    let a = config.analysis;
    let options = &config.fit;
    let gamma = if a.kernel_fit {
        let g = fit_gamma(unperturbed, perturbed, options)?;
        let prediction = predict_modified(unperturbed, g.gamma)?;
        Some((g, prediction))
    } else {
        None
    };
    let damping = if a.damping_fit {
        Some((
            fit_damping(unperturbed, perturbed, DampingModel::Constant, options)?,
            fit_damping(unperturbed, perturbed, DampingModel::Tcl, options)?,
        ))
    } else {
        None
    };
    let feasibility = if a.feasibility {
        Some(damping_feasibility(unperturbed, perturbed)?)
    } else {
        None
    };
    Ok(Fits {
        gamma,
        damping,
        feasibility,
    })
}

/// Runs `stages` and merges the result into any manifest already in `out`
/// for the same config, then saves it.
pub fn run_and_record(
    config: &ExperimentConfig,
    out: &Path,
    stages: Stages,
) -> Result<RunManifest> {
    let fresh = run_experiment(config, out, stages)?;
    let manifest = match RunManifest::load(out) {
        Ok(mut old) if old.config_hash == fresh.config_hash => {
            old.merge(fresh);
            old
        }
        _ => fresh,
    };
    manifest.save(out)?;
    Ok(manifest)
}

pub fn output_dir(config: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| config.output.clone())
}
