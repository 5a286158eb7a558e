//! Physical to normalized unit conversion.
//!
//! The normalized NLS uses `q = Q / sqrt(P0)`, `z = l / L0`, `t = tau / T0`
//! with `T0 = sqrt(|beta2| L0 / 2)` and `P0 = 2 / (gamma L0)`. `L0` is picked so
//! that one symbol interval maps to `t = 1`.
//!
//! Sign convention: physical propagation over a length `l >= 0` maps to a
//! *positive* normalized distance `z = l / L0`, and the normalized equation
//! `dq/dz = -i d2q/dt2 - 2i |q|^2 q` is integrated forward in `z`. Every module
//! (dispersion, perturbation, split-step) goes through [`NormalizationMap`], so
//! this is the only place the sign is decided.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical fiber and signalling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Group velocity dispersion in s^2/km (negative, anomalous regime).
    pub beta2: f64,
    /// Kerr coefficient in 1/(W km).
    pub gamma: f64,
    /// Symbol interval in seconds.
    pub symbol_interval: f64,
}

impl PhysicalParams {
    /// `beta2` given in ps^2/km, `gamma` in 1/(W km), baud rate in GBd.
    pub fn from_engineering(beta2_ps2_per_km: f64, gamma: f64, baud_gbd: f64) -> Self {
        Self {
            beta2: beta2_ps2_per_km * 1e-24,
            gamma,
            symbol_interval: 1.0 / (baud_gbd * 1e9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationMap {
    /// Length scale in km.
    pub l0: f64,
    /// Time scale in s.
    pub t0: f64,
    /// Power scale in W.
    pub p0: f64,
    /// s^2/km.
    pub beta2: f64,
    /// 1/(W km).
    pub gamma: f64,
}

/// Builds the map for which the symbol interval is exactly one normalized
/// time unit.
pub fn normalize(p: &PhysicalParams) -> Result<NormalizationMap> {
    if !(p.beta2 < 0.0) || !p.beta2.is_finite() {
        return Err(Error::invalid("beta2", format!("must be negative, got {}", p.beta2)));
    }
    if !(p.gamma > 0.0) || !p.gamma.is_finite() {
        return Err(Error::invalid("gamma", format!("must be positive, got {}", p.gamma)));
    }
    if !(p.symbol_interval > 0.0) || !p.symbol_interval.is_finite() {
        return Err(Error::invalid(
            "symbol_interval",
            format!("must be positive, got {}", p.symbol_interval),
        ));
    }
    let l0 = 2.0 * p.symbol_interval * p.symbol_interval / p.beta2.abs();
    Ok(NormalizationMap::with_length_scale(p.beta2, p.gamma, l0))
}

impl NormalizationMap {
    pub fn with_length_scale(beta2: f64, gamma: f64, l0: f64) -> Self {
        Self {
            l0,
            t0: (beta2.abs() * l0 / 2.0).sqrt(),
            p0: 2.0 / (gamma * l0),
            beta2,
            gamma,
        }
    }

    pub fn length_to_z(&self, km: f64) -> f64 {
        km / self.l0
    }

    pub fn z_to_length(&self, z: f64) -> f64 {
        z * self.l0
    }

    pub fn time_to_t(&self, seconds: f64) -> f64 {
        seconds / self.t0
    }

    pub fn t_to_time(&self, t: f64) -> f64 {
        t * self.t0
    }

    /// Physical frequency (Hz) to normalized frequency.
    pub fn freq_to_f(&self, hz: f64) -> f64 {
        hz * self.t0
    }

    pub fn f_to_freq(&self, f: f64) -> f64 {
        f / self.t0
    }

    /// Physical field amplitude (sqrt(W)) to normalized amplitude.
    pub fn field_to_q(&self, amplitude: f64) -> f64 {
        amplitude / self.p0.sqrt()
    }

    pub fn q_to_field(&self, q: f64) -> f64 {
        q * self.p0.sqrt()
    }

    pub fn power_to_normalized(&self, watts: f64) -> f64 {
        watts / self.p0
    }

    pub fn normalized_to_power(&self, p: f64) -> f64 {
        p * self.p0
    }

    /// Power attenuation in dB/km to the normalized power decay rate per unit z.
    pub fn loss_to_alpha(&self, db_per_km: f64) -> f64 {
        db_per_km * std::f64::consts::LN_10 / 10.0 * self.l0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fiber() -> PhysicalParams {
        PhysicalParams::from_engineering(-21.7, 1.3, 50.0)
    }

    #[test]
    fn length_scale_gives_unit_symbol_interval() {
        let p = fiber();
        let map = normalize(&p).unwrap();
        let expected_l0 = 2.0 * (20e-12f64).powi(2) / 21.7e-24;
        assert!((map.l0 - expected_l0).abs() < 1e-12 * expected_l0);
        assert!((map.time_to_t(p.symbol_interval) - 1.0).abs() < 1e-12);
        // 50 GHz spacing with 50 GBd maps to unit normalized spacing.
        assert!((map.freq_to_f(50e9) - 1.0).abs() < 1e-12);
        assert!((map.t0 - (map.beta2.abs() * map.l0 / 2.0).sqrt()).abs() == 0.0);
        assert!((map.p0 - 2.0 / (map.gamma * map.l0)).abs() == 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut p = fiber();
        p.beta2 = 1e-26;
        assert!(normalize(&p).is_err());
        let mut p = fiber();
        p.gamma = 0.0;
        assert!(normalize(&p).is_err());
        let mut p = fiber();
        p.symbol_interval = -1.0;
        assert!(normalize(&p).is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let map = normalize(&fiber()).unwrap();
        for &(l, tau, amp) in &[(2000.0, 3.3e-11, 0.01), (0.5, -7e-12, 2.0), (4500.0, 1e-9, 1e-4)] {
            let l2 = map.z_to_length(map.length_to_z(l));
            let t2 = map.t_to_time(map.time_to_t(tau));
            let a2 = map.q_to_field(map.field_to_q(amp));
            assert!((l2 - l).abs() <= 1e-12 * l.abs());
            assert!((t2 - tau).abs() <= 1e-12 * tau.abs());
            assert!((a2 - amp).abs() <= 1e-12 * amp.abs());
        }
    }
}
