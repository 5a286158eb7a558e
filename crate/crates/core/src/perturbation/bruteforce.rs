//! Reference evaluation of the general coefficient
//! `C(k1,j1,k2,j2,k3,j3,z) = -2i int_0^z int c dt dz'` straight from the
//! product of four dispersed sinc pulses. Slow; meant for small indices and
//! for checking the closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;
use crate::spectral::{self, FftPair};

/// Largest FFT accepted by the reference routines.
const MAX_GRID: usize = 1 << 22;
/// Largest number of `z'` nodes.
const MAX_NODES: usize = 200_000;

/// Discretization of the reference integral.
#[derive(Debug, Clone, Copy)]
pub struct BruteForceOptions {
    /// Width of each Gauss-Legendre panel in `z'`.
    pub panel_width: f64,
    /// Points per panel.
    pub order: usize,
    /// Extra time window on each side of the dispersive spread. The periodic
    /// grid wraps the slowly decaying sinc tails; the resulting error falls
    /// roughly as `1 / margin^2` and is near 1e-5 relative at 2048.
    pub margin: f64,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            panel_width: 0.05,
            order: 8,
            margin: 2048.0,
        }
    }
}

/// `(k, j)` label of one dispersed pulse `D(k, j, z, t)`.
pub type Pulse = (i64, i64);

/// Time grid large enough for every pulse in `pulses` up to distance `z`.
struct Grid {
    n: usize,
    dt: f64,
    t_start: f64,
    freqs: Vec<f64>,
}

impl Grid {
    fn for_pulses(pulses: &[Pulse], z: f64, margin: f64) -> Result<Self> {
        let kmax = pulses.iter().map(|p| p.0.abs()).max().unwrap_or(0) as f64;
        let net = (pulses[0].0 - pulses[1].0 + pulses[2].0) as f64;
        // Individual pulses need |f| <= kmax + 1/2 in band; the t-integral is the
        // DC bin of the product, whose spectrum sits in [net - 2, net + 2].
        let fs_needed = (2.0 * kmax + 1.0).max(net.abs() + 2.0) + 1.0;
        let fs = fs_needed.log2().ceil().exp2();
        let mut lo: f64 = 0.0;
        let mut hi: f64 = 0.0;
        for &(k, j) in pulses.iter().chain(std::iter::once(&(0, 0))) {
            let (k, j) = (k as f64, j as f64);
            for f in [k - 0.5, k + 0.5] {
                for zz in [0.0, z] {
                    let delay = j - 4.0 * PI * f * zz;
                    lo = lo.min(delay);
                    hi = hi.max(delay);
                }
            }
        }
        let span = hi - lo + 2.0 * margin;
        let window = span.log2().ceil().exp2();
        let n = (window * fs) as usize;
        if n > MAX_GRID {
            return Err(Error::ResourceLimit(format!(
                "reference grid of {n} points exceeds {MAX_GRID}"
            )));
        }
        let dt = 1.0 / fs;
        let t_start = 0.5 * (lo + hi) - 0.5 * window;
        Ok(Self {
            n,
            dt,
            t_start,
            freqs: spectral::frequencies(n, dt),
        })
    }

    /// Samples of `D(k, j, z, t)` from the exact spectrum
    /// `rect(f - k) exp(-i 2 pi (f - k) j) exp(i (2 pi f)^2 z)`, band edges
    /// weighted 1/2.
    fn pulse(&self, fft: &mut FftPair, (k, j): Pulse, z: f64, out: &mut Vec<Complex64>) {
        out.clear();
        let window = self.n as f64 * self.dt;
        let kf = k as f64;
        out.extend(self.freqs.iter().map(|&f| {
            let off = f - kf;
            let weight = if off.abs() < 0.5 - 1e-9 / window {
                1.0
            } else if (off.abs() - 0.5).abs() <= 1e-9 / window {
                0.5
            } else {
                return Complex64::default();
            };
            let w = 2.0 * PI * f;
            weight * Complex64::cis(w * w * z - 2.0 * PI * off * j as f64 + 2.0 * PI * f * self.t_start)
        }));
        fft.inverse(out);
        // Continuous inverse transform of a spectrum sampled at 1/window.
        let scale = self.n as f64 / window;
        out.iter_mut().for_each(|x| *x *= scale);
    }
}

fn z_nodes(z: f64, opts: &BruteForceOptions) -> Result<Vec<(f64, f64)>> {
    if z == 0.0 {
        return Ok(Vec::new());
    }
    let panels = ((z.abs() / opts.panel_width).ceil() as usize).max(1);
    if panels * opts.order > MAX_NODES {
        return Err(Error::ResourceLimit(format!(
            "{} quadrature nodes exceed {MAX_NODES}",
            panels * opts.order
        )));
    }
    Ok(quad::composite_nodes(0.0, z, panels, opts.order))
}

/// `C(k1, j1, k2, j2, k3, j3, z)` by direct quadrature.
pub fn c_bruteforce(p1: Pulse, p2: Pulse, p3: Pulse, z: f64) -> Result<Complex64> {
    c_bruteforce_with(p1, p2, p3, z, BruteForceOptions::default())
}

pub fn c_bruteforce_with(
    p1: Pulse,
    p2: Pulse,
    p3: Pulse,
    z: f64,
    opts: BruteForceOptions,
) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::invalid("z", "must be finite"));
    }
    let pulses = [p1, p2, p3];
    let grid = Grid::for_pulses(&pulses, z, opts.margin)?;
    let nodes = z_nodes(z, &opts)?;
    let mut fft = FftPair::new(grid.n);
    let mut d: [Vec<Complex64>; 4] = Default::default();
    let mut total = Complex64::default();
    for (zp, w) in nodes {
        grid.pulse(&mut fft, p1, zp, &mut d[0]);
        grid.pulse(&mut fft, p2, zp, &mut d[1]);
        grid.pulse(&mut fft, p3, zp, &mut d[2]);
        grid.pulse(&mut fft, (0, 0), zp, &mut d[3]);
        let inner: Complex64 = (0..grid.n)
            .map(|i| d[0][i] * d[1][i].conj() * d[2][i] * d[3][i].conj())
            .sum();
        total += w * inner * grid.dt;
    }
    Ok(Complex64::new(0.0, -2.0) * total)
}

/// `C(0, j1, 0, j2, 0, j3, z)` for `|j1|, |j2|, |j3| <= window`, the
/// self-phase modulation coefficients of the channel of interest.
#[derive(Debug, Clone)]
pub struct SpmCoefficients {
    z: f64,
    window: i64,
    values: Vec<Complex64>,
    tail: f64,
}

/// Default SPM index window.
pub const SPM_WINDOW: usize = 16;

impl SpmCoefficients {
    pub fn compute(z: f64, window: usize) -> Result<Self> {
        Self::compute_with(z, window, BruteForceOptions::default())
    }

    pub fn compute_with(z: f64, window: usize, opts: BruteForceOptions) -> Result<Self> {
        let w = window as i64;
        let side = (2 * w + 1) as usize;
        let grid = Grid::for_pulses(&[(0, -w), (0, w), (0, 0)], z, opts.margin)?;
        let per_unit = (1.0 / grid.dt).round() as usize;
        let nodes = z_nodes(z, &opts)?;
        let mut fft = FftPair::new(grid.n);
        let mut g = Vec::new();
        let mut acc = vec![Complex64::default(); side * side * side];
        // D(0, j, z, t) = D(0, 0, z, t - j): integer shifts on a grid with an
        // integer number of samples per symbol.
        let n = grid.n;
        for (zp, wt) in nodes {
            grid.pulse(&mut fft, (0, 0), zp, &mut g);
            let shifted = |j: i64, i: usize| -> Complex64 {
                let idx = (i as i64 - j * per_unit as i64).rem_euclid(n as i64) as usize;
                g[idx]
            };
            for j1 in -w..=w {
                for j3 in j1..=w {
                    let left: Vec<Complex64> = (0..n).map(|i| shifted(j1, i) * shifted(j3, i) * g[i].conj()).collect();
                    for j2 in -w..=w {
                        let v: Complex64 = (0..n).map(|i| left[i] * shifted(j2, i).conj()).sum();
                        let v = v * (wt * grid.dt);
                        let a = Self::index_of(w, j1, j2, j3);
                        acc[a] += v;
                        if j1 != j3 {
                            acc[Self::index_of(w, j3, j2, j1)] += v;
                        }
                    }
                }
            }
        }
        let values: Vec<Complex64> = acc.into_iter().map(|v| Complex64::new(0.0, -2.0) * v).collect();
        let total: f64 = values.iter().map(|v| v.norm()).sum();
        let boundary: f64 = (-w..=w)
            .flat_map(|a| (-w..=w).flat_map(move |b| (-w..=w).map(move |c| (a, b, c))))
            .filter(|(a, b, c)| a.abs() == w || b.abs() == w || c.abs() == w)
            .map(|(a, b, c)| values[Self::index_of(w, a, b, c)].norm())
            .sum();
        Ok(Self {
            z,
            window: w,
            values,
            tail: if total > 0.0 { boundary / total } else { 0.0 },
        })
    }

    fn index_of(w: i64, j1: i64, j2: i64, j3: i64) -> usize {
        let side = 2 * w + 1;
        (((j1 + w) * side + (j2 + w)) * side + (j3 + w)) as usize
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn window(&self) -> usize {
        self.window as usize
    }

    /// Share of the total coefficient magnitude carried by index triples on
    /// the window boundary; a proxy for what truncation throws away.
    pub fn tail_estimate(&self) -> f64 {
        self.tail
    }

    pub fn get(&self, j1: i64, j2: i64, j3: i64) -> Option<Complex64> {
        let w = self.window;
        (j1.abs() <= w && j2.abs() <= w && j3.abs() <= w).then(|| self.values[Self::index_of(w, j1, j2, j3)])
    }
}
