//! The linear dispersion operator `D[s; z] = F^-1[exp(i (2 pi f)^2 z) F[s]]`,
//! with `F[q](f) = int q(t) exp(-i 2 pi f t) dt`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{Boundary, SampledSignal};
use crate::spectral;

/// Spectral energy fraction treated as "outside the band" by the guards.
const GUARD_TAIL: f64 = 1e-12;
/// Isolated signals must keep their spectrum below this fraction of Nyquist.
const BAND_LIMIT_FRACTION: f64 = 0.95;

/// Disperses `s` over normalized distance `z` (negative `z` undoes dispersion).
pub fn disperse(s: &SampledSignal, z: f64) -> Result<SampledSignal> {
    disperse_shifted(s, z, 0.0)
}

/// `D[s(t - t0) exp(i 2 pi f0 t); z]` evaluated through the translation and
/// modulation identity
/// `S(z, t - t0 + 4 pi f0 z) exp(i 2 pi f0 (t + 2 pi f0 z))`, where
/// `S = D[s; z]`. The translation is applied spectrally so `t0` and the
/// walk-off need not fall on the sample grid.
pub fn disperse_modulated(s: &SampledSignal, z: f64, t0: f64, f0: f64) -> Result<SampledSignal> {
    if !f0.is_finite() || !t0.is_finite() {
        return Err(Error::invalid("f0/t0", "must be finite"));
    }
    if s.boundary() == Boundary::Isolated {
        let nyquist = 0.5 / s.dt();
        let band = s.occupied_bandwidth(GUARD_TAIL) + f0.abs();
        if band > BAND_LIMIT_FRACTION * nyquist {
            return Err(Error::Aliasing {
                what: "modulated bandwidth",
                required: band,
                available: BAND_LIMIT_FRACTION * nyquist,
            });
        }
    }
    let shift = t0 - 4.0 * PI * f0 * z;
    let out = disperse_shifted(s, z, shift)?;
    let samples = out
        .samples()
        .iter()
        .enumerate()
        .map(|(i, x)| x * Complex64::cis(2.0 * PI * f0 * (out.time(i) + 2.0 * PI * f0 * z)))
        .collect();
    Ok(out.with_samples(samples))
}

/// Impulse response of the dispersion operator,
/// `exp(-i (t^2 / 4z - pi/4)) / sqrt(4 pi z)` with `sqrt(z) = i sqrt(|z|)` for
/// `z < 0`.
pub fn dispersion_kernel(z: f64, t: f64) -> Result<Complex64> {
    if z == 0.0 || !z.is_finite() {
        return Err(Error::invalid(
            "z",
            "kernel is a distribution at z = 0; need finite nonzero z",
        ));
    }
    let phase = Complex64::cis(-(t * t / (4.0 * z) - PI / 4.0));
    let root = (4.0 * PI * z.abs()).sqrt();
    let inv_sqrt = if z > 0.0 {
        Complex64::new(1.0 / root, 0.0)
    } else {
        Complex64::new(0.0, -1.0 / root)
    };
    Ok(inv_sqrt * phase)
}

/// Disperses and delays by `shift` (i.e. returns `S(z, t - shift)`).
fn disperse_shifted(s: &SampledSignal, z: f64, shift: f64) -> Result<SampledSignal> {
    if !z.is_finite() {
        return Err(Error::invalid("z", "must be finite"));
    }
    if z == 0.0 && shift == 0.0 {
        return Ok(s.clone());
    }
    if s.boundary() == Boundary::Isolated {
        check_isolated_grid(s, z, shift)?;
    }
    let freqs = s.frequencies();
    let mut buf = s.samples().to_vec();
    spectral::fft(&mut buf);
    for (x, &f) in buf.iter_mut().zip(&freqs) {
        let w = 2.0 * PI * f;
        *x *= Complex64::cis(w * w * z - w * shift);
    }
    spectral::ifft(&mut buf);
    Ok(s.with_samples(buf))
}

/// An isolated signal must be band-limited well inside Nyquist and its
/// dispersive spread must fit the window, otherwise the cyclic FFT would
/// silently wrap it.
fn check_isolated_grid(s: &SampledSignal, z: f64, shift: f64) -> Result<()> {
    let nyquist = 0.5 / s.dt();
    let band = s.occupied_bandwidth(GUARD_TAIL);
    if band > BAND_LIMIT_FRACTION * nyquist {
        return Err(Error::Aliasing {
            what: "signal bandwidth",
            required: band,
            available: BAND_LIMIT_FRACTION * nyquist,
        });
    }
    let spread = 8.0 * PI * band * z.abs() + time_support(s) + shift.abs();
    if spread > s.duration() {
        return Err(Error::Aliasing {
            what: "dispersive spread",
            required: spread,
            available: s.duration(),
        });
    }
    Ok(())
}

/// Width of the shortest index interval holding all but `GUARD_TAIL` of the
/// energy, measured from both ends of the window.
fn time_support(s: &SampledSignal) -> f64 {
    let e: Vec<f64> = s.samples().iter().map(|x| x.norm_sqr()).collect();
    let total: f64 = e.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let cut = 0.5 * GUARD_TAIL * total;
    let mut acc = 0.0;
    let mut first = 0;
    for (i, v) in e.iter().enumerate() {
        acc += v;
        if acc > cut {
            first = i;
            break;
        }
    }
    acc = 0.0;
    let mut last = e.len() - 1;
    for (i, v) in e.iter().enumerate().rev() {
        acc += v;
        if acc > cut {
            last = i;
            break;
        }
    }
    (last.saturating_sub(first) + 1) as f64 * s.dt()
}
