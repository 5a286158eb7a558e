//! First-order model against the split-step solver at low power.

use num_complex::Complex64;
use serde::Serialize;

use super::config::{ValidationConfig, IDEALIZED_LAUNCH_DBM};
use crate::error::{Error, Result};
use crate::perturbation::{first_order_field, FirstOrderOptions};
use crate::rng;
use crate::ssfm::{self, LinkSpec};
use crate::txrx::{self, Band, ChannelPlan, PulseShape, SymbolFrame};
use crate::units::{normalize, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n_symbols: usize,
    /// `|<model, ssfm>| / (|model| |ssfm|)` for the perturbation of channel 0.
    pub correlation: f64,
    /// RMS perturbation predicted by the model.
    pub delta_rms: f64,
    /// RMS of `ssfm - model` at the configured amplitude.
    pub residual: f64,
    /// Same at half the amplitude.
    pub residual_half: f64,
    pub shrink_factor: f64,
    /// Largest `|a_hat - a|` when the nonlinearity is switched off.
    pub linear_error: f64,
    pub ssfm_steps: usize,
}

fn rms(v: &[Complex64]) -> f64 {
    (v.iter().map(|x| x.norm_sqr()).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn validate_model(cfg: &ValidationConfig) -> Result<ValidationReport> {
    if !(cfg.length_km > 0.0) || !(cfg.amplitude_multiplier > 0.0) {
        return Err(Error::config("validate", "length and amplitude multiplier must be positive"));
    }
    let map = normalize(&PhysicalParams::from_engineering(
        cfg.physics.beta2_ps2_per_km,
        cfg.physics.gamma,
        cfg.spacing_ghz,
    ))?;
    let plan = ChannelPlan::new(cfg.channels_m, cfg.symbols, cfg.numerics.sps, 1.0, PulseShape::Sinc)?;
    let launch_dbm = cfg.physics.launch_dbm.unwrap_or(IDEALIZED_LAUNCH_DBM);
    let amp = cfg.amplitude_multiplier * map.power_to_normalized(1e-3 * 10f64.powf(launch_dbm / 10.0)).sqrt();
    let scheme = cfg.scheme.build()?;
    let m = cfg.channels_m as i64;
    let rows = (-m..=m)
        .map(|k| scheme.symbols(cfg.symbols, rng::derive_seed(cfg.seed, &[(k + m) as u64])))
        .collect::<Result<Vec<_>>>()?;
    let frame = SymbolFrame::new(cfg.channels_m, 0, rows)?;
    let sent = frame.row(0).expect("channel 0");
    let z = map.length_to_z(cfg.length_km);
    let link = LinkSpec::ideal(cfg.length_km, map);
    let policy = cfg.numerics.policy();
    let band = Band::full(&plan, 0);

    let q = txrx::modulate(&frame.scaled(amp), &plan)?;
    let q1 = first_order_field(
        &q,
        z,
        FirstOrderOptions {
            panel_width: cfg.panel_width,
            order: 8,
        },
    )?;
    let model = txrx::matched_filter_detect(&q1, z, &plan, band)?;
    let linear = txrx::matched_filter_detect(&crate::dispersion::disperse(&q, z)?, z, &plan, band)?;
    let linear_error = linear
        .iter()
        .zip(sent)
        .map(|(y, a)| (y - a * amp).norm() / amp)
        .fold(0.0, f64::max);

    let mut steps = 0;
    let mut residuals = Vec::new();
    let mut correlation = 0.0;
    for (i, scale) in [1.0, 0.5].into_iter().enumerate() {
        let (out, stats) = ssfm::propagate_with_snapshots(&q.scaled(scale), &link, &policy, 0, &[cfg.length_km])?;
        steps += stats.steps;
        let y = txrx::matched_filter_detect(&out[0], z, &plan, band)?;
        let ds: Vec<Complex64> = y.iter().zip(sent).map(|(y, a)| y - a * amp * scale).collect();
        // The first-order term is cubic in the launch field.
        let dm: Vec<Complex64> = model.iter().map(|d| d * scale.powi(3)).collect();
        if i == 0 {
            let inner: Complex64 = dm.iter().zip(&ds).map(|(a, b)| a.conj() * b).sum();
            correlation = inner.norm() / (rms(&dm) * rms(&ds) * dm.len() as f64);
        }
        let diff: Vec<Complex64> = ds.iter().zip(&dm).map(|(a, b)| a - b).collect();
        residuals.push(rms(&diff));
    }
    Ok(ValidationReport {
        n_symbols: cfg.symbols,
        correlation,
        delta_rms: rms(&model),
        residual: residuals[0],
        residual_half: residuals[1],
        shrink_factor: residuals[0] / residuals[1],
        linear_error,
        ssfm_steps: steps,
    })
}
