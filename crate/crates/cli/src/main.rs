use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qmcfem::error::{Error, Result};
use qmcfem::experiments::{
    build_reference, emit_plot_data, load_weights, run_example, ConvergenceReport, ExperimentConfig, PresetId,
    RunOptions,
};
use qmcfem::qmc::{cbc_construct, format_vector, save_vector, CbcMethod};

#[derive(Parser)]
#[command(name = "qmcfem", version, about = "QMC-FEM convergence studies for random linear elasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset study and write its CSV table.
    Run {
        /// One of 1, 2, 3, 4a, 4b.
        #[arg(long)]
        preset: Option<PresetId>,
        /// Use the published sizes instead of the workstation defaults.
        #[arg(long)]
        paper_scale: bool,
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory for the table.
        #[arg(long)]
        out: Option<PathBuf>,
        /// TOML file with a preset and overrides; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Recompute the reference value even if it is cached.
        #[arg(long)]
        rebuild_reference: bool,
    },
    /// Compute (or look up) the reference value of a configuration.
    Reference {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        rebuild: bool,
    },
    /// Write plot-ready columns for a CSV table.
    Plotdata {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Construct a generating vector by fast CBC.
    GenVector {
        #[arg(long, default_value_t = 2)]
        b: u32,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        alpha: u32,
        #[arg(long)]
        s: usize,
        /// TOML file with `kind = "spod"` and `beta`, or `kind = "product"` and `gamma`.
        #[arg(long)]
        weights: PathBuf,
        /// Destination file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(
    preset: Option<PresetId>,
    paper_scale: bool,
    config: Option<&Path>,
) -> Result<ExperimentConfig> {
    match (preset, config) {
        (Some(id), None) => Ok(ExperimentConfig::preset(id, paper_scale)),
        (preset, Some(path)) => {
            let mut c = ExperimentConfig::load(path)?;
            if let Some(id) = preset.filter(|&id| id != c.preset) {
                return Err(Error::Config(format!(
                    "--preset {id} conflicts with preset {} in {}",
                    c.preset,
                    path.display()
                )));
            }
            if paper_scale && !c.paper_scale {
                return Err(Error::Config("--paper-scale must be set in the config file when one is given".into()));
            }
            c.validate()?;
            c.paper_scale |= paper_scale;
            Ok(c)
        }
        (None, None) => Err(Error::Config("either --preset or --config is required".into())),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            preset,
            paper_scale,
            workers,
            out,
            config,
            rebuild_reference,
        } => {
            let mut c = load_config(preset, paper_scale, config.as_deref())?;
            if let Some(w) = workers {
                c.workers = w;
            }
            if let Some(dir) = out {
                c.output_dir = dir;
            }
            let outcome = run_example(&c, &RunOptions { rebuild_reference })?;
            print!("{}", outcome.report.to_csv());
            if let Some(meta) = &outcome.report.metadata {
                for w in &meta.warnings {
                    eprintln!("warning: {w}");
                }
            }
            eprintln!("wrote {}", outcome.csv_path.display());
        }
        Command::Reference { config, rebuild } => {
            let c = ExperimentConfig::load(&config)?;
            let r = build_reference(&c, None, rebuild)?;
            println!("{:.17e}", r.value);
            eprintln!(
                "{} ({} solves) {}",
                if r.cache_hit { "cache hit" } else { "computed" },
                r.solves,
                r.path.display()
            );
        }
        Command::Plotdata { report, out } => {
            let text = std::fs::read_to_string(&report)?;
            let rep = ConvergenceReport::from_csv(&text, &report)?;
            emit_plot_data(&rep, &out)?;
        }
        Command::GenVector {
            b,
            m,
            alpha,
            s,
            weights,
            out,
        } => {
            let w = load_weights(&weights)?;
            let gv = cbc_construct(b, m, s, alpha, &w, CbcMethod::Fast)?;
            match out {
                Some(path) => save_vector(&gv, &path)?,
                None => print!("{}", format_vector(&gv)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
