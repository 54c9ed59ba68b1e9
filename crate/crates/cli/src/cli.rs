//! Argument parsing and dispatch.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use qjc_core::coherent::YMode;

use crate::commands::{cmd_export, cmd_spectrum, cmd_verify, ExportKind, Suite};
use crate::config::{Overrides, RunConfig};
use crate::report::{to_json, write_atomic};
use crate::{CliError, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "qjc",
    version,
    about = "Verify the P3 anticlique of the truncated qubit-oscillator model"
)]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,

    /// JSON configuration file with flat keys; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub omega_f: Option<f64>,
    #[arg(long, global = true)]
    pub omega_s: Option<f64>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    /// Gauss nodes per component (Q).
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    /// Coherent-series terms (K).
    #[arg(long, global = true)]
    pub series_depth: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub y_mode: Option<YModeArg>,
    /// Angle samples per x-node in grid mode.
    #[arg(long, global = true)]
    pub y_points: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print JSON on stdout instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum YModeArg {
    Exact,
    Grid,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate dressed energies, J and S sequences and mixing angles.
    Spectrum,
    /// Run verification suites; exit 0 iff every asserted check passes.
    Verify {
        #[arg(value_enum, default_value_t = Which::All)]
        which: Which,
    },
    /// Write an atlas, channel or graph as JSON.
    Export {
        #[arg(value_enum)]
        what: ExportArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Povm,
    Anticlique,
    Channel,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportArg {
    Atlas,
    Channel,
    Graph,
}

impl Args {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            omega_f: self.omega_f,
            omega_s: self.omega_s,
            kappa: self.kappa,
            n_max: self.n_max,
            quad_order: self.quad_order,
            series_depth: self.series_depth,
            y_mode: self.y_mode.map(|m| match m {
                YModeArg::Exact => YMode::ExactMean,
                YModeArg::Grid => YMode::FiniteGrid,
            }),
            y_points: self.y_points,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

pub fn suites(which: Which) -> Vec<Suite> {
    match which {
        Which::Povm => vec![Suite::Povm],
        Which::Anticlique => vec![Suite::Anticlique],
        Which::Channel => vec![Suite::Channel],
        Which::All => vec![Suite::Povm, Suite::Anticlique, Suite::Channel],
    }
}

/// Runs the command and returns the process exit status.
pub fn run(args: Args) -> i32 {
    match execute(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn spectrum_paths(out: &Path) -> (PathBuf, PathBuf) {
    let json = out.with_extension("json");
    if json == out {
        (out.with_extension("csv"), json)
    } else {
        (out.to_path_buf(), json)
    }
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(args.config.as_deref(), &args.overrides())?;
    match &args.command {
        Command::Spectrum => {
            let out = cmd_spectrum(&cfg)?;
            let summary = to_json(&out.summary)?;
            if let Some(path) = &cfg.out {
                let (csv_path, json_path) = spectrum_paths(path);
                write_atomic(&csv_path, &out.csv)?;
                write_atomic(&json_path, &summary)?;
            }
            if args.json {
                print!("{summary}");
            } else if cfg.out.is_none() {
                print!("{}", out.csv);
            } else {
                println!(
                    "M0 = {}, K0 = {}, J increasing: {}, S increasing: {}",
                    out.summary.m0, out.summary.k0, out.summary.j_increasing, out.summary.s_increasing
                );
            }
            Ok(EXIT_PASS)
        }
        Command::Verify { which } => {
            let report = cmd_verify(&cfg, &suites(*which))?;
            let text = report.to_json()?;
            if let Some(path) = &cfg.out {
                write_atomic(path, &text)?;
            }
            if args.json {
                print!("{text}");
            } else {
                print!("{}", report.summary());
            }
            Ok(if report.passed { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Export { what } => {
            if cfg.out.is_none() && !args.json {
                return Err(CliError::Io("export needs --out PATH (or --json for stdout)".into()));
            }
            let kind = match what {
                ExportArg::Atlas => ExportKind::Atlas,
                ExportArg::Channel => ExportKind::Channel,
                ExportArg::Graph => ExportKind::Graph,
            };
            let text = cmd_export(&cfg, kind)?;
            if let Some(path) = &cfg.out {
                write_atomic(path, &text)?;
            }
            if args.json {
                print!("{text}");
            }
            Ok(EXIT_PASS)
        }
    }
}
