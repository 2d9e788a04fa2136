//! Multi-column plot tables assembled from the per-λ artifacts of a run.

use std::path::Path;

use crate::artifacts::{read_csv, read_series, Writer};
use crate::config::lambda_label;
use crate::error::{CliError, Result};
use crate::pipeline::{
    ldos_path, mode_series_path, prediction_path, rung_series_path, RunManifest, DOS_PATH,
    VMATRIX_PATH,
};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlotOptions {
    /// Shift the i-th comparison curve by `−i·step`.
    pub offsets: bool,
    /// Divide curves by the unperturbed initial value.
    pub normalize: bool,
}

/// Vertical step between stacked comparison curves.
pub fn offset_step(rho1: bool) -> f64 {
    if rho1 {
        0.1
    } else {
        0.05
    }
}

fn require(manifest: &RunManifest, paths: &[String]) -> Result<()> {
    let missing: Vec<String> = paths
        .iter()
        .filter(|p| manifest.artifact(p).is_none())
        .cloned()
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::MissingArtifacts(missing))
    }
}

fn columns(root: &Path, paths: &[String]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut t = Vec::new();
    let mut cols = Vec::new();
    for p in paths {
        let s = read_series(&root.join(p))?;
        if t.is_empty() {
            t = s.times().collect();
        } else if s.len() != t.len() {
            return Err(CliError::format(
                root.join(p),
                "time grid differs from the other curves",
            ));
        }
        cols.push(s.samples);
    }
    Ok((t, cols))
}

fn rows(t: &[f64], cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..t.len())
        .map(|n| {
            std::iter::once(t[n])
                .chain(cols.iter().map(|c| c[n]))
                .collect()
        })
        .collect()
}

/// Writes every plot table the manifest has inputs for, returning the paths
/// relative to `root`.
pub fn emit_plotdata(
    manifest: &RunManifest,
    root: &Path,
    options: PlotOptions,
) -> Result<Vec<String>> {
    let config = &manifest.config;
    let lambdas = &config.lambdas;
    let mut missing = manifest.missing_artifacts(root);
    if !missing.is_empty() {
        missing.sort();
        return Err(CliError::MissingArtifacts(missing));
    }
    let mut writer = Writer::new(root);

    let reference = config.reference_index();
    let norm = |paths: &[String]| -> Result<f64> {
        if !options.normalize {
            return Ok(1.0);
        }
        let a0 = read_series(&root.join(&paths[reference]))?.initial();
        if a0 == 0.0 {
            return Err(CliError::format(
                root.join(&paths[reference]),
                "cannot normalize a curve starting at zero",
            ));
        }
        Ok(a0)
    };

    if let Some(k) = config.observable.mode {
        let series: Vec<String> = lambdas.iter().map(|&l| mode_series_path(k, l)).collect();
        require(manifest, &series)?;
        let scale = norm(&series)?;
        let (t, mut cols) = columns(root, &series)?;
        cols.iter_mut().flatten().for_each(|x| *x /= scale);

        let mut header = vec!["t".to_owned()];
        header.extend(lambdas.iter().map(|&l| lambda_label(l)));
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        writer.table("plots/mode_curves.csv", &h, rows(&t, &cols))?;

        if config.analysis.kernel_fit {
            let predictions: Vec<String> = lambdas.iter().map(|&l| prediction_path(l)).collect();
            require(manifest, &predictions)?;
            let (_, mut pred) = columns(root, &predictions)?;
            pred.iter_mut().flatten().for_each(|x| *x /= scale);
            let step = offset_step(config.is_rho1());
            let mut table = Vec::new();
            let mut header = vec!["t".to_owned()];
            for (i, (&l, (data, p))) in lambdas.iter().zip(cols.iter().zip(&pred)).enumerate() {
                let shift = if options.offsets {
                    -(i as f64) * step
                } else {
                    0.0
                };
                table.push(data.iter().map(|x| x + shift).collect::<Vec<_>>());
                table.push(p.iter().map(|x| x + shift).collect::<Vec<_>>());
                header.push(format!("data_{}", lambda_label(l)));
                header.push(format!("prediction_{}", lambda_label(l)));
            }
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            writer.table("plots/kernel_comparison.csv", &h, rows(&t, &table))?;
        }
    }

    if !config.observable.rungs.is_empty() {
        for &l in lambdas {
            let series: Vec<String> = config
                .observable
                .rungs
                .iter()
                .map(|&r| rung_series_path(r, l))
                .collect();
            require(manifest, &series)?;
            let (t, cols) = columns(root, &series)?;
            let mut header = vec!["t".to_owned()];
            header.extend(config.observable.rungs.iter().map(|r| format!("p_{r}")));
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            writer.table(
                &format!("plots/profile_{}.csv", lambda_label(l)),
                &h,
                rows(&t, &cols),
            )?;
        }
    }

    if config.analysis.dos {
        require(manifest, &[DOS_PATH.to_owned()])?;
        let (_, dos) = read_csv(&root.join(DOS_PATH))?;
        let mut header = vec!["E".to_owned(), "dos".to_owned()];
        let mut cols = vec![dos.iter().map(|r| r[1]).collect::<Vec<_>>()];
        if config.analysis.ldos {
            let paths: Vec<String> = lambdas.iter().map(|&l| ldos_path(l)).collect();
            require(manifest, &paths)?;
            for (&l, p) in lambdas.iter().zip(&paths) {
                let (_, ldos) = read_csv(&root.join(p))?;
                if ldos.len() != dos.len() {
                    return Err(CliError::format(
                        root.join(p),
                        "bins differ from the DOS histogram",
                    ));
                }
                cols.push(ldos.iter().map(|r| r[1]).collect());
                header.push(format!("ldos_{}", lambda_label(l)));
            }
        }
        let e: Vec<f64> = dos.iter().map(|r| r[0]).collect();
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        writer.table("plots/spectral_density.csv", &h, rows(&e, &cols))?;
    }

    if config.analysis.vmatrix {
        require(manifest, &[VMATRIX_PATH.to_owned()])?;
        let (_, entries) = read_csv(&root.join(VMATRIX_PATH))?;
        writer.table(
            "plots/perturbation_matrix.csv",
            &["row", "col", "abs_value"],
            entries
                .iter()
                .map(|r| vec![r[0], r[1], r[2].hypot(r[3])])
                .collect(),
        )?;
    }

    Ok(writer
        .into_artifacts()
        .into_iter()
        .map(|a| a.path)
        .collect())
}

/// Emits plot tables and records them in the manifest saved in `root`.
pub fn emit_and_record(root: &Path, options: PlotOptions) -> Result<Vec<String>> {
    let mut manifest = RunManifest::load(root)?;
    let files = emit_plotdata(&manifest, root, options)?;
    for f in &files {
        if manifest.artifact(f).is_none() {
            manifest.artifacts.push(crate::artifacts::Artifact {
                path: f.clone(),
                kind: crate::artifacts::ArtifactKind::Plot,
                lambda: None,
                rung: None,
            });
        }
    }
    manifest.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    manifest.save(root)?;
    Ok(files)
}
