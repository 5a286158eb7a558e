//! The full first-order term
//! `q1(z) = -2i int_0^z D[ |q0(z')|^2 q0(z'); z - z' ] dz'`, `q0(z') = D[q0; z']`,
//! evaluated on the sample grid by composite Gauss-Legendre in `z'`.
//!
//! Pulling `D[.; z]` out of the integral, every node costs one forward and one
//! inverse FFT pair: the integrand is accumulated as
//! `D[ |q0(z')|^2 q0(z'); -z' ]` and dispersed over `z` once at the end.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;
use crate::signal::SampledSignal;
use crate::spectral::{self, FftPair};

/// Upper bound on the number of `z'` nodes.
const MAX_NODES: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderOptions {
    /// Width of each Gauss-Legendre panel in `z'`.
    pub panel_width: f64,
    pub order: usize,
}

impl Default for FirstOrderOptions {
    fn default() -> Self {
        Self {
            panel_width: 0.005,
            order: 8,
        }
    }
}

/// First-order field `q1(z)` for the launch field `q0`.
pub fn first_order_field(q0: &SampledSignal, z: f64, opts: FirstOrderOptions) -> Result<SampledSignal> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::invalid("z", format!("must be finite and non-negative, got {z}")));
    }
    if !(opts.panel_width > 0.0) || opts.order == 0 {
        return Err(Error::invalid("opts", "panel width and order must be positive"));
    }
    let n = q0.len();
    if z == 0.0 {
        return Ok(q0.with_samples(vec![Complex64::default(); n]));
    }
    let panels = (z / opts.panel_width).ceil().max(1.0) as usize;
    if panels.saturating_mul(opts.order) > MAX_NODES {
        return Err(Error::ResourceLimit(format!(
            "{} z' nodes requested, limit {MAX_NODES}",
            panels * opts.order
        )));
    }
    let omega2: Vec<f64> = spectral::frequencies(n, q0.dt())
        .into_iter()
        .map(|f| (2.0 * PI * f).powi(2))
        .collect();
    let mut fft = FftPair::new(n);
    let mut spec0 = q0.samples().to_vec();
    fft.forward(&mut spec0);
    let mut acc = vec![Complex64::default(); n];
    let mut buf = vec![Complex64::default(); n];
    for (zp, w) in quad::composite_nodes(0.0, z, panels, opts.order) {
        for ((b, s), o) in buf.iter_mut().zip(&spec0).zip(&omega2) {
            *b = s * Complex64::cis(o * zp);
        }
        fft.inverse(&mut buf);
        buf.iter_mut().for_each(|x| *x *= x.norm_sqr());
        fft.forward(&mut buf);
        for ((a, b), o) in acc.iter_mut().zip(&buf).zip(&omega2) {
            *a += w * b * Complex64::cis(-o * zp);
        }
    }
    let factor = Complex64::new(0.0, -2.0);
    for (a, o) in acc.iter_mut().zip(&omega2) {
        *a *= factor * Complex64::cis(o * z);
    }
    fft.inverse(&mut acc);
    Ok(q0.with_samples(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::chi;
    use crate::txrx::{matched_filter_detect, modulate, Band, ChannelPlan, PulseShape, SymbolFrame};

    fn frame(a00: Complex64, a1j: Complex64, j: usize, len: usize) -> SymbolFrame {
        let mut rows = vec![vec![Complex64::default(); len]; 3];
        rows[1][0] = a00;
        rows[2][j] = a1j;
        SymbolFrame::new(1, 0, rows).unwrap()
    }

    #[test]
    fn cubic_scaling() {
        let plan = ChannelPlan::new(1, 33, 8, 1.0, PulseShape::Sinc).unwrap();
        let f = frame(Complex64::new(1.0, 0.5), Complex64::new(-0.3, 1.0), 3, 33);
        let q = modulate(&f, &plan).unwrap();
        let opts = FirstOrderOptions {
            panel_width: 0.05,
            order: 8,
        };
        let a = first_order_field(&q, 0.7, opts).unwrap();
        let b = first_order_field(&q.scaled(0.5), 0.7, opts).unwrap();
        assert!(b.relative_distance(&a.scaled(0.125)).unwrap() < 1e-12);
        let zero = first_order_field(&q, 0.0, opts).unwrap();
        assert_eq!(zero.energy(), 0.0);
    }

    /// The matched-filter output of the first-order field, averaged over the
    /// phase of a single interferer, isolates `2 chi_{1,j}` once the SPM part
    /// is removed.
    #[test]
    fn recovers_chi() {
        let len = 257;
        let z = 1.0;
        let plan = ChannelPlan::new(1, len, 8, 1.0, PulseShape::Sinc).unwrap();
        let opts = FirstOrderOptions {
            panel_width: 0.01,
            order: 8,
        };
        let one = Complex64::new(1.0, 0.0);
        let delta = |a1: Complex64, j: usize| {
            let q = modulate(&frame(one, a1, j, len), &plan).unwrap();
            let q1 = first_order_field(&q, z, opts).unwrap();
            matched_filter_detect(&q1, z, &plan, Band::full(&plan, 0)).unwrap()[0]
        };
        let spm = delta(Complex64::default(), 0);
        for j in [0usize, 5] {
            let avg: Complex64 = (0..4)
                .map(|p| delta(Complex64::cis(p as f64 * PI / 2.0), j))
                .sum::<Complex64>()
                / 4.0;
            let got = (avg - spm) / 2.0;
            let expect = chi::chi(1, j as i64, z).unwrap();
            assert!((got - expect).norm() < 1e-4 * expect.norm(), "j={j}: {got} vs {expect}");
        }
    }
}
