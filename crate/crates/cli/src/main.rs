use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use kerrlab::experiments::{
    self, ChiTableConfig, ExperimentConfig, Preset, RateCurveConfig, ValidationConfig,
};
use kerrlab::Error;
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "kerrlab", version, about = "Nonlinear interference experiments for WDM fiber links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named configuration (fig1, fig3, fig4, fig5, fig6, cc-rate).
    #[arg(long)]
    preset: Option<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// SNR sweep over lengths, schemes, detection and BPS modes.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        symbols: Option<usize>,
        #[arg(long)]
        amplitude_multiplier: Option<f64>,
        /// Launch power per channel in dBm.
        #[arg(long, allow_hyphen_values = true)]
        launch_dbm: Option<f64>,
        /// Lengths as start:stop:step in km.
        #[arg(long)]
        lengths: Option<String>,
    },
    /// XPM coefficient table.
    ChiTable {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        j_max: Option<i64>,
        #[arg(long)]
        length_km: Option<f64>,
        #[arg(long)]
        channels_m: Option<usize>,
    },
    /// Rates of CC codes against IUD signalling.
    RateCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m_max: Option<usize>,
    },
    /// Perturbation model against the split-step solver at low power.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        amplitude_multiplier: Option<f64>,
        #[arg(long)]
        length_km: Option<f64>,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Numerical { err: anyhow::Error, diagnostics: Option<PathBuf> },
    Other(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidParameter { .. } => Failure::Config(e.into()),
            Error::Io { .. } | Error::Csv(_) => Failure::Other(e.into()),
            _ => Failure::Numerical {
                err: e.into(),
                diagnostics: None,
            },
        }
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config_err)?;
    toml::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(config_err)
}

fn parse_preset(p: &Option<String>) -> Result<Option<Preset>, Failure> {
    p.as_deref()
        .map(|s| s.parse::<Preset>())
        .transpose()
        .map_err(config_err)
}

fn parse_lengths(s: &str) -> Result<experiments::LengthSweep, Failure> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| config_err(anyhow::anyhow!("--lengths `{s}`: {e}")))?;
    match parts[..] {
        [start, stop, step] => Ok(experiments::LengthSweep { start, stop, step }),
        [single] => Ok(experiments::LengthSweep {
            start: single,
            stop: single,
            step: 1.0,
        }),
        _ => Err(config_err(anyhow::anyhow!("--lengths expects start:stop:step"))),
    }
}

fn print_toml<T: serde::Serialize>(v: &T) -> Result<(), Failure> {
    print!("{}", toml::to_string_pretty(v).map_err(|e| Failure::Other(e.into()))?);
    Ok(())
}

fn diagnostics_path(output: &Path) -> PathBuf {
    let mut p = output.as_os_str().to_owned();
    p.push(".diagnostics.txt");
    PathBuf::from(p)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep {
            common,
            seed,
            trials,
            symbols,
            amplitude_multiplier,
            launch_dbm,
            lengths,
        } => {
            let mut cfg = match (&common.config, parse_preset(&common.preset)?) {
                (Some(path), _) => load::<ExperimentConfig>(path)?,
                (None, Some(p)) => ExperimentConfig::preset(p)?,
                (None, None) => ExperimentConfig::preset(Preset::Fig3)?,
            };
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = trials {
                cfg.trials = v;
            }
            if let Some(v) = symbols {
                cfg.symbols = v;
            }
            if let Some(v) = amplitude_multiplier {
                cfg.amplitude_multiplier = v;
            }
            if let Some(v) = launch_dbm {
                cfg.physics.launch_dbm = Some(v);
            }
            if let Some(s) = lengths {
                cfg.lengths_km = parse_lengths(&s)?;
            }
            if let Some(o) = common.output {
                cfg.output = o;
            }
            cfg.validate()?;
            if common.print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            let out = experiments::run_sweep(&cfg)?;
            experiments::write_rows_file(&out.rows, &cfg.output)?;
            experiments::write_manifest(&cfg, &out.resolved, &experiments::manifest_path(&cfg.output))?;
            for r in &out.rows {
                log::info!(
                    "{:>7.1} km {:>7} {:>6} bps={:<5} {:>7.3} dB ({})",
                    r.length_km,
                    r.scheme,
                    r.detection,
                    r.bps,
                    r.snr_db,
                    r.status
                );
            }
            if out.failed() {
                let diag = diagnostics_path(&cfg.output);
                let text: String = out
                    .rows
                    .iter()
                    .filter(|r| r.status != "ok")
                    .map(|r| format!("{} km {} {} {}: {}\n", r.length_km, r.scheme, r.detection, r.bps, r.status))
                    .collect();
                fs::write(&diag, text).map_err(|e| Failure::Other(e.into()))?;
                return Err(Failure::Numerical {
                    err: anyhow::anyhow!("some sweep cells failed"),
                    diagnostics: Some(diag),
                });
            }
            Ok(())
        }
        Command::ChiTable {
            common,
            j_max,
            length_km,
            channels_m,
        } => {
            let mut cfg = match (&common.config, parse_preset(&common.preset)?) {
                (Some(path), _) => load::<ChiTableConfig>(path)?,
                (None, None | Some(Preset::Fig1)) => ChiTableConfig::fig1(),
                (None, Some(_)) => return Err(config_err(anyhow::anyhow!("chi-table only knows the fig1 preset"))),
            };
            if let Some(v) = j_max {
                cfg.j_max = v;
            }
            if let Some(v) = length_km {
                cfg.length_km = v;
            }
            if let Some(v) = channels_m {
                cfg.channels_m = v;
            }
            if let Some(o) = common.output {
                cfg.output = o;
            }
            cfg.validate()?;
            if common.print_config {
                return print_toml(&cfg);
            }
            let table = experiments::emit_chi_table(&cfg)?;
            log::info!("wrote {} coefficients to {}", table.iter().count(), cfg.output.display());
            Ok(())
        }
        Command::RateCurve { common, m_max } => {
            let mut cfg = match (&common.config, parse_preset(&common.preset)?) {
                (Some(path), _) => load::<RateCurveConfig>(path)?,
                (None, None | Some(Preset::CcRate)) => RateCurveConfig::cc_rate(),
                (None, Some(_)) => return Err(config_err(anyhow::anyhow!("rate-curve only knows the cc-rate preset"))),
            };
            if let Some(v) = m_max {
                cfg.m_max = v;
            }
            if let Some(o) = common.output {
                cfg.output = o;
            }
            if common.print_config {
                return print_toml(&cfg);
            }
            experiments::emit_rate_curve(&cfg)?;
            Ok(())
        }
        Command::Validate {
            common,
            amplitude_multiplier,
            length_km,
        } => {
            let mut cfg = match &common.config {
                Some(path) => load::<ValidationConfig>(path)?,
                None => ValidationConfig::default(),
            };
            if common.preset.is_some() {
                return Err(config_err(anyhow::anyhow!("validate has no presets")));
            }
            if let Some(v) = amplitude_multiplier {
                cfg.amplitude_multiplier = v;
            }
            if let Some(v) = length_km {
                cfg.length_km = v;
            }
            if common.print_config {
                return print_toml(&cfg);
            }
            let report = experiments::validate_model(&cfg)?;
            let text = toml::to_string_pretty(&report).map_err(|e| Failure::Other(e.into()))?;
            match common.output {
                Some(path) => fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Failure::Other)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical { err, diagnostics }) => {
            eprintln!("numerical failure: {err:#}");
            if let Some(p) = diagnostics {
                eprintln!("diagnostics written to {}", p.display());
            }
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
