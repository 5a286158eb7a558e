use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral;

/// How the sample window relates to the underlying continuous signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// The window holds one period of a periodic signal (cyclic symbol
    /// streams). Wrap-around is part of the model.
    Periodic,
    /// The window holds an isolated signal that must not wrap.
    Isolated,
}

/// Uniformly sampled complex envelope in normalized time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    dt: f64,
    t0: f64,
    boundary: Boundary,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, dt: f64, t0: f64, boundary: Boundary) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "signal must have at least one sample"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::invalid("samples", "non-finite sample"));
        }
        Ok(Self {
            samples,
            dt,
            t0,
            boundary,
        })
    }

    pub fn isolated(samples: Vec<Complex64>, dt: f64, t0: f64) -> Result<Self> {
        Self::new(samples, dt, t0, Boundary::Isolated)
    }

    pub fn periodic(samples: Vec<Complex64>, dt: f64, t0: f64) -> Result<Self> {
        Self::new(samples, dt, t0, Boundary::Periodic)
    }

    /// Samples `f` on `n` points starting at `t0`.
    pub fn from_fn(
        n: usize,
        dt: f64,
        t0: f64,
        boundary: Boundary,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let samples = (0..n).map(|i| f(t0 + i as f64 * dt)).collect();
        Self::new(samples, dt, t0, boundary)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Length of the time window.
    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn frequencies(&self) -> Vec<f64> {
        spectral::frequencies(self.len(), self.dt)
    }

    /// `dt * sum |q|^2`.
    pub fn energy(&self) -> f64 {
        self.dt * self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>()
    }

    /// `dt * sum a b*`.
    pub fn inner(&self, other: &SampledSignal) -> Result<Complex64> {
        self.check_same_grid(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * self.dt)
    }

    /// Relative L2 distance `||a - b|| / ||b||`.
    pub fn relative_distance(&self, reference: &SampledSignal) -> Result<f64> {
        self.check_same_grid(reference)?;
        let num: f64 = self
            .samples
            .iter()
            .zip(&reference.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = reference.samples.iter().map(|b| b.norm_sqr()).sum();
        Ok((num / den).sqrt())
    }

    pub fn check_same_grid(&self, other: &SampledSignal) -> Result<()> {
        if self.len() != other.len() || (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(Error::SupportMismatch(format!(
                "grids differ: {} samples at dt={} vs {} samples at dt={}",
                self.len(),
                self.dt,
                other.len(),
                other.dt
            )));
        }
        Ok(())
    }

    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        assert_eq!(samples.len(), self.samples.len());
        Self {
            samples,
            dt: self.dt,
            t0: self.t0,
            boundary: self.boundary,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.with_samples(self.samples.iter().map(|s| s * factor).collect())
    }

    /// Unnormalized DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.samples.clone();
        spectral::fft(&mut buf);
        buf
    }

    /// Smallest `f` such that all but `tail` of the spectral energy lies
    /// within `|freq| <= f`.
    pub fn occupied_bandwidth(&self, tail: f64) -> f64 {
        let spec = self.spectrum();
        let freqs = self.frequencies();
        let mut bins: Vec<(f64, f64)> = freqs
            .iter()
            .zip(&spec)
            .map(|(f, x)| (f.abs(), x.norm_sqr()))
            .collect();
        bins.sort_by(|a, b| b.0.total_cmp(&a.0));
        let total: f64 = bins.iter().map(|b| b.1).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for (f, e) in bins {
            acc += e;
            if acc > tail * total {
                return f;
            }
        }
        0.0
    }

    /// Band-limited resampling onto `new_len` points over the same window.
    ///
    /// Content above the new Nyquist frequency is discarded, so callers should
    /// only downsample signals whose band fits.
    pub fn resample(&self, new_len: usize) -> Result<Self> {
        if new_len == 0 {
            return Err(Error::invalid("new_len", "must be positive"));
        }
        let n = self.len();
        let spec = self.spectrum();
        let mut out = vec![Complex64::default(); new_len];
        for (m, x) in spec.iter().enumerate() {
            let b = spectral::signed_bin(m, n);
            let idx = spectral::bin_index(b, new_len);
            if spectral::signed_bin(idx, new_len) == b {
                out[idx] = *x;
            }
        }
        spectral::ifft(&mut out);
        let scale = new_len as f64 / n as f64;
        out.iter_mut().for_each(|x| *x *= scale);
        Self::new(
            out,
            self.duration() / new_len as f64,
            self.t0,
            self.boundary,
        )
    }

    /// Multiplies by `exp(i 2 pi f0 t)`.
    pub fn modulated(&self, f0: f64) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| s * Complex64::cis(2.0 * PI * f0 * self.time(i)))
            .collect();
        self.with_samples(samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid() {
        assert!(SampledSignal::isolated(vec![], 1.0, 0.0).is_err());
        assert!(SampledSignal::isolated(vec![Complex64::new(1.0, 0.0)], 0.0, 0.0).is_err());
        assert!(SampledSignal::isolated(vec![Complex64::new(f64::NAN, 0.0)], 1.0, 0.0).is_err());
    }

    #[test]
    fn energy_of_gaussian() {
        let s = SampledSignal::from_fn(4096, 0.01, -20.48, Boundary::Isolated, |t| {
            Complex64::new((-t * t / 2.0).exp(), 0.0)
        })
        .unwrap();
        // integral of exp(-t^2) = sqrt(pi)
        assert!((s.energy() - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn resample_preserves_bandlimited_samples() {
        let n = 64;
        let s = SampledSignal::from_fn(n, 1.0 / 8.0, 0.0, Boundary::Periodic, |t| {
            Complex64::cis(2.0 * PI * t / 8.0) + Complex64::new(0.5, 0.0) * Complex64::cis(-2.0 * PI * 3.0 * t / 8.0)
        })
        .unwrap();
        let r = s.resample(16).unwrap();
        for i in 0..16 {
            let t = r.time(i);
            let want = Complex64::cis(2.0 * PI * t / 8.0) + Complex64::new(0.5, 0.0) * Complex64::cis(-2.0 * PI * 3.0 * t / 8.0);
            assert!((r.samples()[i] - want).norm() < 1e-12);
        }
        let back = r.resample(n).unwrap();
        assert!(back.relative_distance(&s).unwrap() < 1e-12);
    }
}
