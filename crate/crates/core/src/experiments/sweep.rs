//! Monte-Carlo SNR sweeps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{BpsMode, Detection, ExperimentConfig, Resolved};
use crate::error::{Error, Result};
use crate::rng;
use crate::ssfm;
use crate::txrx::{self, Band, BpsConfig, SnrReport, SymbolFrame, EDGE_EXCLUSION};

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "KERRLAB_WORKERS";

/// One cell of the sweep, pooled over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub length_km: f64,
    pub scheme: String,
    pub detection: String,
    pub bps: String,
    pub snr_db: f64,
    pub n_symbols: usize,
    pub trials: usize,
    pub seed: u64,
    pub status: String,
}

/// Key of a cell inside one trial's output.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    length: usize,
    detection: Detection,
    bps: BpsMode,
}

/// SNR reports of one trial, one per cell.
struct TrialOutput {
    cells: Vec<(Cell, SnrReport)>,
}

pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub resolved: Resolved,
}

impl SweepOutput {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.status != "ok")
    }

    pub fn get(&self, length_km: f64, scheme: &str, detection: Detection, bps: BpsMode) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            (r.length_km - length_km).abs() < 1e-9
                && r.scheme == scheme
                && r.detection == detection.label()
                && r.bps == bps.label()
        })
    }
}

/// Builds the launch frame of one trial: every channel carries the same
/// scheme, channel `k` drawing from its own derived stream.
fn launch_frame(cfg: &ExperimentConfig, scheme_idx: usize, unit_seed: u64) -> Result<SymbolFrame> {
    let scheme = cfg.schemes[scheme_idx].build()?;
    let m = cfg.channels_m as i64;
    let rows = (-m..=m)
        .map(|k| scheme.symbols(cfg.symbols, rng::derive_seed(unit_seed, &[(k + m) as u64])))
        .collect::<Result<Vec<_>>>()?;
    SymbolFrame::new(cfg.channels_m, 0, rows)?.with_tags(vec![Some(scheme.tag()); 2 * cfg.channels_m + 1])
}

fn run_trial(cfg: &ExperimentConfig, r: &Resolved, scheme_idx: usize, trial: usize) -> Result<TrialOutput> {
    let unit_seed = rng::derive_seed(cfg.seed, &[scheme_idx as u64, trial as u64]);
    let frame = launch_frame(cfg, scheme_idx, unit_seed)?;
    let sent = frame.row(0).expect("channel 0").to_vec();
    let launch = txrx::modulate(&frame.scaled(r.amplitude), &r.plan)?;
    let lengths = cfg.lengths_km.lengths();
    let last = *lengths.last().expect("validated");
    let link = cfg.link(r, last);
    let policy = cfg.numerics.policy();
    let noise_seed = rng::derive_seed(unit_seed, &[u64::MAX]);
    let (snaps, stats) = ssfm::propagate_with_snapshots(&launch, &link, &policy, noise_seed, &lengths)?;
    log::info!(
        "{} trial {trial}: {} split-step steps",
        cfg.schemes[scheme_idx].label(),
        stats.steps
    );
    let inv = if r.amplitude > 0.0 { 1.0 / r.amplitude } else { 1.0 };
    let mut cells = Vec::new();
    for (li, (&len_km, field)) in lengths.iter().zip(&snaps).enumerate() {
        let z = r.map.length_to_z(len_km);
        for &det in &cfg.detection {
            let detected = match det {
                Detection::Mf => txrx::matched_filter_detect(field, z, &r.plan, Band::full(&r.plan, 0))?,
                Detection::BpMf => {
                    let sel = txrx::channel_select(field, &r.plan, 0, cfg.numerics.bp_sps)?;
                    let bp = ssfm::back_propagate_band(&sel.signal, sel.band.carrier, &cfg.link(r, len_km), &policy)?;
                    txrx::matched_filter_detect(&bp, 0.0, &r.plan, sel.band)?
                }
            };
            let y: Vec<Complex64> = detected.iter().map(|v| v * inv).collect();
            for &bps in &cfg.bps {
                let corrected = match bps {
                    BpsMode::Off => txrx::mean_phase_correct(&sent, &y)?,
                    BpsMode::Genie => txrx::bps_genie(
                        &sent,
                        &y,
                        &BpsConfig {
                            half_window: cfg.bps_window / 2,
                            enabled: true,
                            grid_phases: None,
                        },
                    )?,
                };
                let report = txrx::snr_estimate(&sent, &corrected, EDGE_EXCLUSION)?;
                cells.push((
                    Cell {
                        length: li,
                        detection: det,
                        bps,
                    },
                    report,
                ));
            }
        }
    }
    Ok(TrialOutput { cells })
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::config(WORKERS_ENV, format!("not a worker count: `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::ResourceLimit(e.to_string()))
}

/// Runs every `(scheme, trial)` unit, one propagation per unit with
/// snapshots at all lengths, and pools SNR per cell. Unit failures mark the
/// affected rows instead of aborting the sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let resolved = cfg.resolve()?;
    let units: Vec<(usize, usize)> = (0..cfg.schemes.len())
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let pool = worker_pool()?;
    let outputs: Vec<Result<TrialOutput>> = pool.install(|| {
        units
            .par_iter()
            .map(|&(s, t)| run_trial(cfg, &resolved, s, t))
            .collect()
    });

    let lengths = cfg.lengths_km.lengths();
    let mut rows = Vec::new();
    for (li, &len_km) in lengths.iter().enumerate() {
        for (si, scheme) in cfg.schemes.iter().enumerate() {
            for &det in &cfg.detection {
                for &bps in &cfg.bps {
                    let mut reports = Vec::new();
                    let mut failures = Vec::new();
                    for ((s, t), out) in units.iter().zip(&outputs) {
                        if *s != si {
                            continue;
                        }
                        match out {
                            Ok(o) => reports.extend(
                                o.cells
                                    .iter()
                                    .filter(|(c, _)| c.length == li && c.detection == det && c.bps == bps)
                                    .map(|(_, r)| *r),
                            ),
                            Err(e) => failures.push(format!("trial {t}: {e}")),
                        }
                    }
                    let pooled = txrx::pool_snr(&reports);
                    rows.push(ResultRow {
                        length_km: len_km,
                        scheme: scheme.label(),
                        detection: det.label().into(),
                        bps: bps.label().into(),
                        snr_db: pooled.map_or(f64::NAN, |p| p.snr_db),
                        n_symbols: pooled.map_or(0, |p| p.n_symbols),
                        trials: reports.len(),
                        seed: cfg.seed,
                        status: if failures.is_empty() {
                            "ok".into()
                        } else {
                            format!("failed: {}", failures.join("; "))
                        },
                    });
                }
            }
        }
    }
    Ok(SweepOutput { rows, resolved })
}

pub fn write_rows(rows: &[ResultRow], w: impl Write) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_rows_file(rows: &[ResultRow], path: &Path) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(rows, f)
}

/// Path of the manifest written next to an output file.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut p = output.as_os_str().to_owned();
    p.push(".manifest.toml");
    PathBuf::from(p)
}

#[derive(Serialize)]
struct Manifest<'a> {
    /// Physical parameters filled in by default rather than set by the user,
    /// with the values used.
    unstated_defaults: Unstated,
    derived: Derived,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct Unstated {
    beta2_ps2_per_km: f64,
    gamma_per_w_km: f64,
    launch_dbm_per_channel: f64,
    noise_figure_db: f64,
    loss_db_per_km: f64,
    symbols_per_channel: usize,
    samples_per_symbol: usize,
    max_nonlinear_phase_rad: f64,
    max_step_km: f64,
}

#[derive(Serialize)]
struct Derived {
    baud_gbd: f64,
    l0_km: f64,
    t0_ps: f64,
    p0_mw: f64,
    normalized_amplitude: f64,
    effective_spacing: f64,
}

pub fn write_manifest(cfg: &ExperimentConfig, r: &Resolved, path: &Path) -> Result<()> {
    let m = Manifest {
        unstated_defaults: Unstated {
            beta2_ps2_per_km: cfg.physics.beta2_ps2_per_km,
            gamma_per_w_km: cfg.physics.gamma,
            launch_dbm_per_channel: r.launch_dbm,
            noise_figure_db: cfg.physics.noise_figure_db,
            loss_db_per_km: cfg.physics.loss_db_per_km,
            symbols_per_channel: cfg.symbols,
            samples_per_symbol: cfg.numerics.sps,
            max_nonlinear_phase_rad: cfg.numerics.max_nonlinear_phase,
            max_step_km: cfg.numerics.max_step_km,
        },
        derived: Derived {
            baud_gbd: r.baud_gbd,
            l0_km: r.map.l0,
            t0_ps: r.map.t0 * 1e12,
            p0_mw: r.map.p0 * 1e3,
            normalized_amplitude: r.amplitude,
            effective_spacing: r.plan.spacing(),
        },
        config: cfg,
    };
    let text = toml::to_string_pretty(&m).map_err(|e| Error::config("manifest", e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::super::config::{LengthSweep, Preset};
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut c = ExperimentConfig::preset(Preset::Fig3).unwrap();
        c.lengths_km = LengthSweep {
            start: 100.0,
            stop: 200.0,
            step: 100.0,
        };
        c.symbols = 171;
        c.trials = 1;
        c.channels_m = 1;
        c.numerics.sps = 8;
        c.numerics.max_step_km = 5.0;
        c
    }

    #[test]
    fn cell_count_and_determinism() {
        let c = tiny();
        let a = run_sweep(&c).unwrap();
        assert_eq!(a.rows.len(), 8);
        assert!(!a.failed());
        let b = run_sweep(&c).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_rows(&a.rows, &mut x).unwrap();
        write_rows(&b.rows, &mut y).unwrap();
        assert_eq!(x, y);
        let header = String::from_utf8(x).unwrap();
        assert!(header.starts_with("length_km,scheme,detection,bps,snr_db,n_symbols,trials,seed,status\n"));
        assert!(a.get(100.0, "cc171", Detection::BpMf, BpsMode::Off).is_some());
    }

    #[test]
    fn linear_limit_is_clean() {
        let mut c = tiny();
        c.amplitude_multiplier = 1e-6;
        c.detection = vec![Detection::Mf];
        let out = run_sweep(&c).unwrap();
        for r in &out.rows {
            assert_eq!(r.snr_db, txrx::SNR_CAP_DB);
        }
    }

    #[test]
    fn failures_are_recorded() {
        let mut c = tiny();
        c.numerics.min_step_km = 4.0;
        c.physics.launch_dbm = Some(20.0);
        let out = run_sweep(&c).unwrap();
        assert!(out.failed());
        assert!(out.rows[0].status.starts_with("failed"));
    }

    #[test]
    fn manifest_records_defaults() {
        let c = tiny();
        let r = c.resolve().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = manifest_path(&dir.path().join("out.csv"));
        write_manifest(&c, &r, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("launch_dbm_per_channel"));
        assert!(text.contains("beta2_ps2_per_km"));
    }
}
