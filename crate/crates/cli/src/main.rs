use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinladder_cli::pipeline::{output_dir, run_and_record, Stages};
use spinladder_cli::plotdata::{emit_and_record, PlotOptions};
use spinladder_cli::{CliError, ExperimentConfig, Result};

#[derive(Parser)]
#[command(
    name = "spinladder",
    version,
    about = "Perturbed spin-ladder dynamics and memory-kernel fits"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the one named in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "SPINLADDER_THREADS")]
    threads: Option<usize>,
    /// Divide plotted curves by the unperturbed initial value.
    #[arg(long)]
    normalize: bool,
}

#[derive(Subcommand)]
enum Verb {
    /// Time series of the configured observables.
    Simulate(Common),
    /// Time series plus extracted memory kernels.
    Kernel(Common),
    /// Kernel-damping and damping-model fits, feasibility checks.
    Fit(Common),
    /// DOS, LDOS and perturbation-matrix diagnostics.
    Analyze(Common),
    /// Plot tables from an existing run.
    Emit {
        #[command(flatten)]
        common: Common,
        /// Stack comparison curves with vertical offsets.
        #[arg(long)]
        offsets: bool,
    },
    /// Full pipeline followed by `emit`.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        offsets: bool,
    },
}

fn setup(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::config("--threads", "must be positive"));
        }
        // Ignored if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let mut config = ExperimentConfig::load(&common.config)?;
    config.normalize |= common.normalize;
    let out = output_dir(&config, common.out.clone());
    Ok((config, out))
}

fn stages_for(verb: &Verb) -> Stages {
    let none = Stages::default();
    match verb {
        Verb::Simulate(_) => Stages {
            series: true,
            ..none
        },
        Verb::Kernel(_) => Stages {
            series: true,
            kernels: true,
            ..none
        },
        Verb::Fit(_) => Stages {
            series: true,
            fits: true,
            ..none
        },
        Verb::Analyze(_) => Stages {
            spectral: true,
            ..none
        },
        Verb::Emit { .. } => none,
        Verb::Run { .. } => Stages::all(),
    }
}

fn execute(verb: Verb) -> Result<()> {
    let stages = stages_for(&verb);
    let (common, offsets) = match &verb {
        Verb::Simulate(c) | Verb::Kernel(c) | Verb::Fit(c) | Verb::Analyze(c) => (c, None),
        Verb::Emit { common, offsets } | Verb::Run { common, offsets } => (common, Some(*offsets)),
    };
    let (config, out) = setup(common)?;
    if stages != Stages::default() {
        let manifest = run_and_record(&config, &out, stages)?;
        for s in &manifest.lambdas {
            let gamma = s.gamma_fit.as_ref().map(|g| format!("{:.6}", g.gamma));
            let rate = s
                .constant_damping
                .as_ref()
                .map(|d| format!("{:.6}", d.rate));
            let verdict = s.feasibility.as_ref().map(|f| format!("{:?}", f.verdict));
            println!(
                "lambda {}: gamma* {}, Gamma* {}, verdict {}",
                s.lambda,
                gamma.as_deref().unwrap_or("-"),
                rate.as_deref().unwrap_or("-"),
                verdict.as_deref().unwrap_or("-"),
            );
        }
        println!(
            "{} artifacts in {}",
            manifest.artifacts.len(),
            out.display()
        );
    }
    if let Some(offsets) = offsets {
        let options = PlotOptions {
            offsets,
            normalize: config.normalize,
        };
        let files = emit_and_record(&out, options)?;
        println!("wrote {} plot tables", files.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
