use std::fs;
use std::path::Path;

use spinladder_cli::artifacts::read_csv;
use spinladder_cli::pipeline::{mode_series_path, RunManifest};
use spinladder_cli::plotdata::emit_and_record;
use spinladder_cli::{
    emit_plotdata, run_and_record, run_experiment, CliError, ExperimentConfig, PlotOptions, Stages,
};

fn small_config(state: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{
            "ladder": {{ "L": 4 }},
            "lambdas": [0.0, 0.4],
            "state": {state},
            "observable": {{ "mode": 1, "rungs": [1, 2, 3, 4] }},
            "grid": {{ "dt": 0.1, "t_max": 10.0 }}
        }}"#
    ))
    .unwrap()
}

fn rho1() -> ExperimentConfig {
    small_config(r#"{ "kind": "rho1", "epsilon": 0.01 }"#)
}

fn rho2() -> ExperimentConfig {
    small_config(r#"{ "kind": "rho2", "beta": 0.1, "B": 5.0 }"#)
}

fn repo_config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    ExperimentConfig::load(&path).unwrap()
}

#[test]
fn config_round_trip() {
    for config in [
        rho1(),
        rho2(),
        repo_config("default_rho2.json"),
        repo_config("default_rho1.json"),
    ] {
        let again = ExperimentConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(again, config);
        assert_eq!(again.hash(), config.hash());
    }
}

#[test]
fn shipped_defaults() {
    let c = repo_config("default_rho2.json");
    assert_eq!(c.ladder.rungs, 6);
    assert_eq!(c.lambdas, vec![0.0, 0.1, 0.2, 0.4, 0.7]);
    assert_eq!(c.observable.mode, Some(1));
    assert!(!c.is_rho1());
}

fn config_error(text: &str) -> String {
    match ExperimentConfig::from_json(text) {
        Err(CliError::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_errors_name_the_field() {
    let base = rho1().to_json();
    let edit = |from: &str, to: &str| {
        assert!(base.contains(from), "{from}");
        base.replacen(from, to, 1)
    };
    assert_eq!(
        config_error(&edit(r#""dt": 0.1"#, r#""dt": -0.1"#)),
        "grid.dt"
    );
    assert_eq!(
        config_error(&edit(r#""dt": 0.1"#, r#""dt": "fast""#)),
        "grid.dt"
    );
    assert_eq!(
        config_error(&edit(r#""L": 4"#, r#""L": 4, "legs": 3"#)),
        "ladder.legs"
    );
    assert_eq!(
        config_error(&edit(r#""mode": 1"#, r#""mode": 9"#)),
        "observable.mode"
    );
    assert_eq!(config_error(&edit("0.0,", "0.2,")), "lambdas");
    assert_eq!(
        config_error(&edit(r#""epsilon": 0.01"#, r#""epsilon": 0.0"#)),
        "state"
    );
    assert_eq!(
        config_error(&edit(r#""t_max": 10.0"#, r#""t_max": 0.1"#)),
        "grid"
    );
    let mut bad_rung = rho1();
    bad_rung.observable.rungs.push(5);
    assert!(
        matches!(bad_rung.validate(), Err(CliError::Config { path, .. }) if path == "observable.rungs[4]")
    );
}

#[test]
fn exit_codes_by_category() {
    assert_eq!(CliError::config("x", "y").exit_code(), 2);
    assert_eq!(
        CliError::Numerical(spinladder::LadderError::Numerical("x".into())).exit_code(),
        3
    );
    assert_eq!(CliError::io("x", std::io::Error::other("y")).exit_code(), 4);
}

fn check_csvs(manifest: &RunManifest, root: &Path) {
    assert!(manifest.missing_artifacts(root).is_empty());
    for a in &manifest.artifacts {
        if !a.path.ends_with(".csv") {
            continue;
        }
        let (header, rows) = read_csv(&root.join(&a.path)).unwrap();
        assert!(!rows.is_empty(), "{}", a.path);
        for row in rows {
            assert_eq!(row.len(), header.len(), "{}", a.path);
            assert!(row.iter().all(|x| x.is_finite()), "{}", a.path);
        }
    }
}

#[test]
fn full_run_writes_complete_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = rho1();
    let m = run_experiment(&config, dir.path(), Stages::all()).unwrap();
    check_csvs(&m, dir.path());

    assert_eq!(m.lambdas.len(), 2);
    let self_fit = m.summary(0.0).unwrap();
    assert!(self_fit.gamma_fit.as_ref().unwrap().gamma < 1e-4);
    assert!(self_fit.constant_damping.as_ref().unwrap().rate < 1e-4);
    let perturbed = m.summary(0.4).unwrap();
    let g = perturbed.gamma_fit.as_ref().unwrap();
    assert!(g.gamma >= 0.0 && g.l2_error.is_finite());
    assert!(perturbed.feasibility.is_some());
    assert!(perturbed.ldos_window_weight.unwrap() > 0.0);

    let s = &m.spectral;
    let dos = s.dos_window_weight.unwrap();
    assert!(dos > 0.0 && dos <= 1.0);
    assert!(s.sparseness.unwrap() > 0.0);
    assert_eq!(m.config_hash, config.hash());
}

#[test]
fn rho2_curves_share_the_reference_start() {
    let dir = tempfile::tempdir().unwrap();
    let stages = Stages {
        series: true,
        ..Stages::default()
    };
    let m = run_experiment(&rho2(), dir.path(), stages).unwrap();
    let reference = m.summary(0.0).unwrap().initial_value.unwrap();
    let perturbed = m.summary(0.4).unwrap();
    assert_ne!(perturbed.initial_value.unwrap(), reference);
    let (_, rows) = read_csv(&dir.path().join(mode_series_path(1, 0.4))).unwrap();
    assert!((rows[0][1] - reference).abs() < 1e-14);
}

#[test]
fn repeated_runs_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let config = rho2();
    let mut ma = run_experiment(&config, a.path(), Stages::all()).unwrap();
    let mut mb = run_experiment(&config, b.path(), Stages::all()).unwrap();
    ma.timings.clear();
    mb.timings.clear();
    assert_eq!(ma, mb);
    for art in &ma.artifacts {
        assert_eq!(
            fs::read(a.path().join(&art.path)).unwrap(),
            fs::read(b.path().join(&art.path)).unwrap(),
            "{}",
            art.path
        );
    }
}

#[test]
fn partial_runs_merge_into_one_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = rho1();
    run_and_record(
        &config,
        dir.path(),
        Stages {
            series: true,
            ..Stages::default()
        },
    )
    .unwrap();
    let m = run_and_record(
        &config,
        dir.path(),
        Stages {
            spectral: true,
            ..Stages::default()
        },
    )
    .unwrap();
    assert!(m.artifact(&mode_series_path(1, 0.4)).is_some());
    assert!(m.artifact("spectral/dos.csv").is_some());
    assert_eq!(RunManifest::load(dir.path()).unwrap(), m);
}

#[test]
fn plot_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = rho1();
    let m = run_experiment(&config, dir.path(), Stages::all()).unwrap();
    let plain = emit_plotdata(&m, dir.path(), PlotOptions::default()).unwrap();
    for name in [
        "mode_curves",
        "kernel_comparison",
        "profile_lambda_0",
        "spectral_density",
        "perturbation_matrix",
    ] {
        assert!(
            plain.contains(&format!("plots/{name}.csv")),
            "{name}: {plain:?}"
        );
    }
    let (header, rows) = read_csv(&dir.path().join("plots/mode_curves.csv")).unwrap();
    assert_eq!(header.len(), 1 + config.lambdas.len());
    assert_eq!(rows.len(), config.grid.steps());
    let (header, _) = read_csv(&dir.path().join("plots/profile_lambda_0.4.csv")).unwrap();
    assert_eq!(header, ["t", "p_1", "p_2", "p_3", "p_4"]);
    let (header, _) = read_csv(&dir.path().join("plots/spectral_density.csv")).unwrap();
    assert_eq!(header, ["E", "dos", "ldos_lambda_0", "ldos_lambda_0.4"]);

    let (_, before) = read_csv(&dir.path().join("plots/kernel_comparison.csv")).unwrap();
    emit_plotdata(
        &m,
        dir.path(),
        PlotOptions {
            offsets: true,
            normalize: true,
        },
    )
    .unwrap();
    let (header, after) = read_csv(&dir.path().join("plots/kernel_comparison.csv")).unwrap();
    assert_eq!(header.len(), 1 + 2 * config.lambdas.len());
    // Normalized data start at 1, stacked in steps of −0.1.
    assert!((after[0][1] - 1.0).abs() < 1e-12);
    assert!((after[0][3] - 0.9).abs() < 1e-12);
    assert!((after[0][4] - 0.9).abs() < 1e-6);
    assert!((after[5][3] - (before[5][3] / before[0][1] - 0.1)).abs() < 1e-12);
}

#[test]
fn emit_reports_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = rho1();
    run_and_record(
        &config,
        dir.path(),
        Stages {
            series: true,
            ..Stages::default()
        },
    )
    .unwrap();
    match emit_and_record(dir.path(), PlotOptions::default()) {
        Err(CliError::MissingArtifacts(paths)) => {
            assert!(
                paths.iter().any(|p| p.starts_with("fits/prediction_")),
                "{paths:?}"
            )
        }
        other => panic!("expected missing artifacts, got {other:?}"),
    }
    fs::remove_file(dir.path().join(mode_series_path(1, 0.0))).unwrap();
    match emit_and_record(dir.path(), PlotOptions::default()) {
        Err(CliError::MissingArtifacts(paths)) => assert_eq!(paths, [mode_series_path(1, 0.0)]),
        other => panic!("expected missing artifacts, got {other:?}"),
    }
}
