//! FFT plumbing shared by the dispersion operator, the transmitter and the
//! split-step solver.
//!
//! Forward transforms are unnormalized (`X[m] = sum_n x[n] e^{-i 2 pi m n / N}`),
//! the inverse carries the `1/N`, so `ifft(fft(x)) == x`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// A forward/inverse plan pair for one transform length.
#[derive(Clone)]
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    len: usize,
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len).finish()
    }
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let (forward, inverse) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(len), p.plan_fft_inverse(len))
        });
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::default(); scratch_len],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Normalized inverse.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|x| *x *= scale);
    }
}

pub fn fft(buf: &mut [Complex64]) {
    FftPair::new(buf.len()).forward(buf);
}

pub fn ifft(buf: &mut [Complex64]) {
    FftPair::new(buf.len()).inverse(buf);
}

/// Signed bin index of DFT bin `m` for a length-`n` transform.
#[inline]
pub fn signed_bin(m: usize, n: usize) -> i64 {
    if m < n.div_ceil(2) {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Storage index of a signed bin.
#[inline]
pub fn bin_index(bin: i64, n: usize) -> usize {
    bin.rem_euclid(n as i64) as usize
}

/// Frequencies of the DFT bins of an `n`-point grid with spacing `dt`.
pub fn frequencies(n: usize, dt: f64) -> Vec<f64> {
    let df = 1.0 / (n as f64 * dt);
    (0..n).map(|m| signed_bin(m, n) as f64 * df).collect()
}

/// Multiplies `buf` by the spectral dispersion factor `exp(i (2 pi f)^2 z)`.
pub fn apply_dispersion(buf: &mut [Complex64], freqs: &[f64], z: f64) {
    for (x, &f) in buf.iter_mut().zip(freqs) {
        let w = 2.0 * PI * f;
        *x *= Complex64::cis(w * w * z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_round_trip() {
        for n in [1usize, 2, 7, 8, 33] {
            for m in 0..n {
                assert_eq!(bin_index(signed_bin(m, n), n), m);
            }
        }
        assert_eq!(signed_bin(4, 8), -4);
        assert_eq!(signed_bin(3, 7), 3);
        assert_eq!(signed_bin(4, 7), -3);
    }

    #[test]
    fn inverse_undoes_forward() {
        let mut x: Vec<Complex64> = (0..45).map(|i| Complex64::new(i as f64, -(i as f64).sqrt())).collect();
        let orig = x.clone();
        fft(&mut x);
        ifft(&mut x);
        for (a, b) in x.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
