//! WDM transmitter and receiver chain on a periodic grid.
//!
//! A frame of `J` symbols per channel is laid out on the window `[0, J)` with
//! `sps` samples per symbol, so DFT bins are spaced `1 / J` apart and a
//! channel is a contiguous run of bins. Pulses are defined by their spectra,
//! which makes the shifted pulses orthonormal over the window.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::codebook::SchemeTag;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;
use crate::spectral::{self, FftPair};

/// Symbols `a_{k,j}` for channels `k` in `[-M, M]` and consecutive indices
/// `j` starting at `j_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    m_half: usize,
    j_start: i64,
    rows: Vec<Vec<Complex64>>,
    tags: Vec<Option<SchemeTag>>,
}

impl SymbolFrame {
    pub fn new(m_half: usize, j_start: i64, rows: Vec<Vec<Complex64>>) -> Result<Self> {
        if rows.len() != 2 * m_half + 1 {
            return Err(Error::invalid(
                "rows",
                format!("expected {} channels, got {}", 2 * m_half + 1, rows.len()),
            ));
        }
        let len = rows[0].len();
        if len == 0 || rows.iter().any(|r| r.len() != len) {
            return Err(Error::invalid("rows", "channels must hold the same nonzero number of symbols"));
        }
        if rows.iter().flatten().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("rows", "non-finite symbol"));
        }
        let tags = vec![None; rows.len()];
        Ok(Self {
            m_half,
            j_start,
            rows,
            tags,
        })
    }

    pub fn with_tags(mut self, tags: Vec<Option<SchemeTag>>) -> Result<Self> {
        if tags.len() != self.rows.len() {
            return Err(Error::invalid("tags", "one tag per channel"));
        }
        self.tags = tags;
        Ok(self)
    }

    pub fn m_half(&self) -> usize {
        self.m_half
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Inclusive range of `j`.
    pub fn j_bounds(&self) -> (i64, i64) {
        (self.j_start, self.j_start + self.len() as i64 - 1)
    }

    pub fn row(&self, k: i64) -> Option<&[Complex64]> {
        let i = k + self.m_half as i64;
        (0..self.rows.len() as i64)
            .contains(&i)
            .then(|| self.rows[i as usize].as_slice())
    }

    pub fn tag(&self, k: i64) -> Option<SchemeTag> {
        let i = k + self.m_half as i64;
        self.tags.get(usize::try_from(i).ok()?).copied().flatten()
    }

    pub fn get(&self, k: i64, j: i64) -> Option<Complex64> {
        let row = self.row(k)?;
        usize::try_from(j - self.j_start)
            .ok()
            .and_then(|i| row.get(i))
            .copied()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.rows.iter_mut().flatten().for_each(|a| *a *= factor);
        out
    }

    pub fn energy(&self) -> f64 {
        self.rows.iter().flatten().map(|a| a.norm_sqr()).sum()
    }
}

/// Transmit pulse, specified through its spectrum in units of the symbol rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape {
    Sinc,
    RootRaisedCosine { rolloff: f64 },
}

impl PulseShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PulseShape::Sinc => Ok(()),
            PulseShape::RootRaisedCosine { rolloff } if (0.0..=0.25).contains(&rolloff) => Ok(()),
            PulseShape::RootRaisedCosine { rolloff } => {
                Err(Error::invalid("rolloff", format!("must lie in [0, 0.25], got {rolloff}")))
            }
        }
    }

    pub fn rolloff(&self) -> f64 {
        match *self {
            PulseShape::Sinc => 0.0,
            PulseShape::RootRaisedCosine { rolloff } => rolloff,
        }
    }

    /// One-sided bandwidth.
    pub fn half_bandwidth(&self) -> f64 {
        0.5 * (1.0 + self.rolloff())
    }

    /// Spectrum `P(f)` of the unit-energy pulse centred at `t = 0`.
    pub fn spectrum(&self, f: f64) -> f64 {
        let a = f.abs();
        match *self {
            PulseShape::Sinc => {
                if a < 0.5 {
                    1.0
                } else if a == 0.5 {
                    std::f64::consts::FRAC_1_SQRT_2
                } else {
                    0.0
                }
            }
            PulseShape::RootRaisedCosine { rolloff: b } => {
                let lo = 0.5 * (1.0 - b);
                let hi = 0.5 * (1.0 + b);
                if a <= lo {
                    1.0
                } else if a >= hi {
                    0.0
                } else {
                    (0.5 * (1.0 + (PI / b * (a - lo)).cos())).sqrt()
                }
            }
        }
    }
}

/// Grid and channel layout shared by transmitter and receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    m_half: usize,
    symbols: usize,
    sps: usize,
    spacing_bins: usize,
    pulse: PulseShape,
}

impl ChannelPlan {
    /// `spacing` is the channel spacing in units of the symbol rate; it is
    /// rounded to the nearest multiple of the bin width `1 / symbols`.
    pub fn new(m_half: usize, symbols: usize, sps: usize, spacing: f64, pulse: PulseShape) -> Result<Self> {
        pulse.validate()?;
        if symbols < 2 {
            return Err(Error::invalid("symbols", "need at least two symbols per channel"));
        }
        if sps < 2 {
            return Err(Error::invalid("sps", "need at least two samples per symbol"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::invalid("spacing", format!("must be positive, got {spacing}")));
        }
        let spacing_bins = (spacing * symbols as f64).round() as usize;
        let plan = Self {
            m_half,
            symbols,
            sps,
            spacing_bins,
            pulse,
        };
        if plan.spacing() < 2.0 * pulse.half_bandwidth() - 1e-12 {
            return Err(Error::invalid(
                "spacing",
                format!("{:.4} is narrower than the pulse bandwidth {:.4}", plan.spacing(), 2.0 * pulse.half_bandwidth()),
            ));
        }
        // Neighbouring channels must not share a bin, which rules out an
        // even symbol count for sinc pulses at unit spacing.
        let widest = plan.pulse_bins().map(|(m, _)| m.unsigned_abs()).max().unwrap_or(0);
        if m_half > 0 && 2 * widest as usize >= spacing_bins {
            return Err(Error::invalid(
                "symbols",
                format!("adjacent channel spectra overlap on the {symbols}-bin grid; use an odd symbol count or wider spacing"),
            ));
        }
        let edge = m_half as f64 * plan.spacing() + pulse.half_bandwidth();
        let nyquist = 0.5 * sps as f64;
        if edge >= nyquist {
            return Err(Error::Aliasing {
                what: "multiplex band edge",
                required: edge,
                available: nyquist,
            });
        }
        Ok(plan)
    }

    pub fn m_half(&self) -> usize {
        self.m_half
    }

    pub fn channels(&self) -> usize {
        2 * self.m_half + 1
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn sps(&self) -> usize {
        self.sps
    }

    pub fn pulse(&self) -> PulseShape {
        self.pulse
    }

    pub fn len(&self) -> usize {
        self.symbols * self.sps
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sps as f64
    }

    /// Effective spacing after rounding to the bin grid.
    pub fn spacing(&self) -> f64 {
        self.spacing_bins as f64 / self.symbols as f64
    }

    pub fn spacing_bins(&self) -> usize {
        self.spacing_bins
    }

    pub fn center_bin(&self, k: i64) -> i64 {
        k * self.spacing_bins as i64
    }

    /// Signed bins `m` relative to a channel centre where the pulse spectrum
    /// is nonzero.
    fn pulse_bins(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let j = self.symbols as i64;
        let reach = (self.pulse.half_bandwidth() * j as f64).floor() as i64;
        (-reach..=reach).filter_map(move |m| {
            let p = self.pulse.spectrum(m as f64 / j as f64);
            (p != 0.0).then_some((m, p))
        })
    }
}

/// Launch field `q(0, t) = sum_k sum_j a_{k,j} p(t - j) e^{i 2 pi f_k t}` on
/// the periodic window, symbol `j` of the frame sitting at `t = j - j_start`.
pub fn modulate(frame: &SymbolFrame, plan: &ChannelPlan) -> Result<SampledSignal> {
    if frame.m_half() != plan.m_half() || frame.len() != plan.symbols() {
        return Err(Error::SupportMismatch(format!(
            "frame has {} channels x {} symbols, plan expects {} x {}",
            2 * frame.m_half() + 1,
            frame.len(),
            plan.channels(),
            plan.symbols()
        )));
    }
    let n = plan.len();
    let j = plan.symbols();
    let mut spec = vec![Complex64::default(); n];
    let mut fj = FftPair::new(j);
    let m = plan.m_half() as i64;
    for k in -m..=m {
        let mut a = frame.row(k).expect("in range").to_vec();
        fj.forward(&mut a);
        let c = plan.center_bin(k);
        for (b, p) in plan.pulse_bins() {
            spec[spectral::bin_index(c + b, n)] += p * a[spectral::bin_index(b, j)];
        }
    }
    FftPair::new(n).inverse(&mut spec);
    let scale = plan.sps() as f64;
    spec.iter_mut().for_each(|x| *x *= scale);
    SampledSignal::periodic(spec, plan.dt(), 0.0)
}

/// Location of a channel inside a sampled field: `center` is its centre
/// frequency in the field's own coordinates and `carrier` the absolute
/// frequency of the field's zero frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub center_bin: i64,
    pub carrier: f64,
}

impl Band {
    /// Channel `k` of the full multiplex.
    pub fn full(plan: &ChannelPlan, k: i64) -> Self {
        Self {
            center_bin: plan.center_bin(k),
            carrier: 0.0,
        }
    }
}

/// Output of [`channel_select`]: a baseband field plus its carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub signal: SampledSignal,
    pub band: Band,
}

fn check_window(s: &SampledSignal, plan: &ChannelPlan) -> Result<()> {
    let dur = s.duration();
    if (dur - plan.symbols() as f64).abs() > 1e-9 * dur {
        return Err(Error::SupportMismatch(format!(
            "signal window {dur} does not match the {}-symbol frame",
            plan.symbols()
        )));
    }
    Ok(())
}

/// Ideal brick-wall filter of one channel spacing around channel `k`,
/// shifted to baseband and resampled to `out_sps` samples per symbol.
pub fn channel_select(s: &SampledSignal, plan: &ChannelPlan, k: i64, out_sps: usize) -> Result<Selected> {
    check_window(s, plan)?;
    if k.unsigned_abs() as usize > plan.m_half() {
        return Err(Error::invalid("k", format!("channel {k} outside the plan")));
    }
    let n = s.len();
    let n_out = plan.symbols() * out_sps;
    let w = plan.spacing_bins() as i64;
    let (lo, hi) = (-(w / 2), (w - 1) / 2);
    if 2 * hi.max(-lo) + 1 > n_out as i64 {
        return Err(Error::Aliasing {
            what: "selected channel bandwidth",
            required: plan.spacing(),
            available: out_sps as f64,
        });
    }
    let spec = s.spectrum();
    let c = plan.center_bin(k);
    let mut out = vec![Complex64::default(); n_out];
    for b in lo..=hi {
        out[spectral::bin_index(b, n_out)] = spec[spectral::bin_index(c + b, n)];
    }
    FftPair::new(n_out).inverse(&mut out);
    let scale = n_out as f64 / n as f64;
    out.iter_mut().for_each(|x| *x *= scale);
    Ok(Selected {
        signal: SampledSignal::new(out, 1.0 / out_sps as f64, s.t0(), s.boundary())?,
        band: Band {
            center_bin: 0,
            carrier: c as f64 / plan.symbols() as f64,
        },
    })
}

/// Correlates the field with the transmit pulse dispersed over `z` for every
/// symbol slot; `z = 0` is the plain pulse matched filter.
pub fn matched_filter_detect(
    s: &SampledSignal,
    z: f64,
    plan: &ChannelPlan,
    band: Band,
) -> Result<Vec<Complex64>> {
    check_window(s, plan)?;
    let n = s.len();
    let j = plan.symbols();
    let spec = s.spectrum();
    let mut y = vec![Complex64::default(); j];
    let df = 1.0 / j as f64;
    for (b, p) in plan.pulse_bins() {
        let bin = band.center_bin + b;
        if bin.unsigned_abs() as usize > (n - 1) / 2 {
            return Err(Error::Aliasing {
                what: "matched filter band",
                required: bin.abs() as f64 * df,
                available: 0.5 / s.dt(),
            });
        }
        let w = 2.0 * PI * (bin as f64 * df + band.carrier);
        let undo = Complex64::cis(-w * w * z);
        y[spectral::bin_index(b, j)] += spec[spectral::bin_index(bin, n)] * p * undo;
    }
    FftPair::new(j).inverse(&mut y);
    let dt = s.dt();
    Ok(y.into_iter().map(|v| v * dt).collect())
}

/// Removes the average residual phase `mean_j arg(Y_j X_j^*)` with one
/// common rotation.
pub fn mean_phase_correct(x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
    check_lengths(x, y)?;
    let pairs = || x.iter().zip(y).filter(|(a, b)| a.norm_sqr() > 0.0 && b.norm_sqr() > 0.0);
    // Residuals are taken about the correlation phase so that a common
    // rotation near +-pi does not wrap.
    let centre: Complex64 = pairs().map(|(a, b)| b * a.conj()).sum();
    if centre.norm_sqr() == 0.0 {
        return Ok(y.to_vec());
    }
    let c = Complex64::cis(-centre.arg());
    let n = pairs().count();
    let mean = centre.arg() + pairs().map(|(a, b)| (b * a.conj() * c).arg()).sum::<f64>() / n as f64;
    let rot = Complex64::cis(-mean);
    Ok(y.iter().map(|v| v * rot).collect())
}

/// Genie-aided phase search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpsConfig {
    pub half_window: usize,
    pub enabled: bool,
    /// Number of test phases for the grid search; `None` uses the exact
    /// minimizer.
    pub grid_phases: Option<usize>,
}

impl Default for BpsConfig {
    fn default() -> Self {
        Self {
            half_window: 10,
            enabled: true,
            grid_phases: None,
        }
    }
}

impl BpsConfig {
    pub fn window(&self) -> usize {
        2 * self.half_window + 1
    }
}

fn check_lengths(x: &[Complex64], y: &[Complex64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::SupportMismatch(format!(
            "sent and detected sequences differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Per-symbol rotation minimizing `sum_{|i-j|<=N} |X_i - Y_i e^{i theta}|^2`,
/// the window truncated at the sequence edges.
pub fn bps_genie(x: &[Complex64], y: &[Complex64], cfg: &BpsConfig) -> Result<Vec<Complex64>> {
    check_lengths(x, y)?;
    if !cfg.enabled {
        return Ok(y.to_vec());
    }
    let n = x.len();
    let h = cfg.half_window;
    let corr = |j: usize| -> Complex64 {
        let lo = j.saturating_sub(h);
        let hi = (j + h + 1).min(n);
        x[lo..hi].iter().zip(&y[lo..hi]).map(|(a, b)| a * b.conj()).sum()
    };
    match cfg.grid_phases {
        None => Ok((0..n)
            .map(|j| {
                let c = corr(j);
                let theta = if c.norm_sqr() > 0.0 { c.arg() } else { 0.0 };
                y[j] * Complex64::cis(theta)
            })
            .collect()),
        Some(0) => Err(Error::invalid("grid_phases", "must be positive")),
        Some(p) => {
            let phases: Vec<Complex64> = (0..p)
                .map(|i| Complex64::cis(-PI + 2.0 * PI * i as f64 / p as f64))
                .collect();
            Ok((0..n)
                .map(|j| {
                    // Minimizing the windowed error is maximizing Re(e^{i theta} c^*).
                    let c = corr(j);
                    let best = phases
                        .iter()
                        .max_by(|a, b| (*a * c.conj()).re.total_cmp(&(*b * c.conj()).re))
                        .expect("nonempty grid");
                    y[j] * best
                })
                .collect())
        }
    }
}

/// Reported SNR when the error power is negligible.
pub const SNR_CAP_DB: f64 = 120.0;
/// Symbols dropped at each end of a sequence before averaging.
pub const EDGE_EXCLUSION: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    pub snr_db: f64,
    pub n_symbols: usize,
    pub signal_power: f64,
    pub error_power: f64,
}

/// `E|X|^2 / E|Y - X|^2` over all symbols except `exclude` at each end.
pub fn snr_estimate(x: &[Complex64], y: &[Complex64], exclude: usize) -> Result<SnrReport> {
    check_lengths(x, y)?;
    if x.len() <= 2 * exclude {
        return Err(Error::invalid("exclude", "no symbols left after edge exclusion"));
    }
    let range = exclude..x.len() - exclude;
    let n = range.len();
    let sig = x[range.clone()].iter().map(|a| a.norm_sqr()).sum::<f64>() / n as f64;
    let err = x[range.clone()]
        .iter()
        .zip(&y[range])
        .map(|(a, b)| (b - a).norm_sqr())
        .sum::<f64>()
        / n as f64;
    let snr_db = if err <= 1e-12 * sig {
        SNR_CAP_DB
    } else {
        10.0 * (sig / err).log10()
    };
    Ok(SnrReport {
        snr_db,
        n_symbols: n,
        signal_power: sig,
        error_power: err,
    })
}

/// Pools several reports as total signal over total error.
pub fn pool_snr(reports: &[SnrReport]) -> Option<SnrReport> {
    let n: usize = reports.iter().map(|r| r.n_symbols).sum();
    if n == 0 {
        return None;
    }
    let sig = reports.iter().map(|r| r.signal_power * r.n_symbols as f64).sum::<f64>() / n as f64;
    let err = reports.iter().map(|r| r.error_power * r.n_symbols as f64).sum::<f64>() / n as f64;
    let snr_db = if err <= 1e-12 * sig {
        SNR_CAP_DB
    } else {
        10.0 * (sig / err).log10()
    };
    Some(SnrReport {
        snr_db,
        n_symbols: n,
        signal_power: sig,
        error_power: err,
    })
}

/// Writes `j, re_x, im_x, re_y, im_y` rows.
pub fn write_detected_csv(w: impl Write, j_start: i64, x: &[Complex64], y: &[Complex64]) -> Result<()> {
    check_lengths(x, y)?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "re_x", "im_x", "re_y", "im_y"])?;
    for (i, (a, b)) in x.iter().zip(y).enumerate() {
        wr.serialize((j_start + i as i64, a.re, a.im, b.re, b.im))?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::disperse;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::SplitMix64;

    fn random_frame(m_half: usize, len: usize, seed: u64) -> SymbolFrame {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let rows = (0..2 * m_half + 1)
            .map(|_| {
                (0..len)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        SymbolFrame::new(m_half, 0, rows).unwrap()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn frame_indexing() {
        let f = random_frame(1, 5, 1);
        assert_eq!(f.j_bounds(), (0, 4));
        assert!(f.get(2, 0).is_none());
        assert!(f.get(0, 5).is_none());
        assert_eq!(f.get(-1, 2), Some(f.row(-1).unwrap()[2]));
        assert!(SymbolFrame::new(1, 0, vec![vec![Complex64::default()]; 2]).is_err());
    }

    #[test]
    fn rrc_energy_and_nyquist() {
        let p = PulseShape::RootRaisedCosine { rolloff: 0.06 };
        let n = 200_000;
        let e: f64 = (0..n)
            .map(|i| {
                let f = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
                p.spectrum(f).powi(2) * 2.0 / n as f64
            })
            .sum();
        assert!((e - 1.0).abs() < 1e-6);
        // Folded power spectrum is flat.
        for f in [0.0, 0.2, 0.46, 0.49, 0.5] {
            let s = p.spectrum(f).powi(2) + p.spectrum(f - 1.0).powi(2);
            assert!((s - 1.0).abs() < 1e-12, "{f}: {s}");
        }
        assert!(PulseShape::RootRaisedCosine { rolloff: 0.3 }.validate().is_err());
    }

    #[test]
    fn single_sinc_symbol() {
        let plan = ChannelPlan::new(0, 33, 8, 1.0, PulseShape::Sinc).unwrap();
        let mut rows = vec![vec![Complex64::default(); 33]];
        rows[0][0] = Complex64::new(1.0, 0.0);
        let q = modulate(&SymbolFrame::new(0, 0, rows).unwrap(), &plan).unwrap();
        // Periodic sinc (Dirichlet kernel) on the window.
        for (i, v) in q.samples().iter().enumerate() {
            let t = q.time(i);
            let expect = if i == 0 {
                1.0
            } else {
                (PI * t).sin() / (33.0 * (PI * t / 33.0).sin())
            };
            assert!((v.re - expect).abs() < 1e-12 && v.im.abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn parseval_and_spectrum_location() {
        let plan = ChannelPlan::new(2, 41, 16, 1.0, PulseShape::Sinc).unwrap();
        let f = random_frame(2, 41, 3);
        let q = modulate(&f, &plan).unwrap();
        assert!((q.energy() - f.energy()).abs() < 1e-9 * f.energy());

        let mut rows = vec![vec![Complex64::default(); 41]; 5];
        rows[3][0] = Complex64::new(1.0, 0.0);
        let q = modulate(&SymbolFrame::new(2, 0, rows).unwrap(), &plan).unwrap();
        let spec = q.spectrum();
        let freqs = q.frequencies();
        for (x, f) in spec.iter().zip(freqs) {
            if x.norm() > 1e-9 {
                assert!((f - 1.0).abs() < 0.5, "{f}");
            }
        }
    }

    #[test]
    fn grid_guards() {
        assert!(matches!(
            ChannelPlan::new(4, 41, 8, 1.0, PulseShape::Sinc),
            Err(Error::Aliasing { .. })
        ));
        assert!(ChannelPlan::new(1, 41, 8, 0.9, PulseShape::Sinc).is_err());
        assert!(ChannelPlan::new(1, 42, 8, 1.0, PulseShape::Sinc).is_err());
        assert!(ChannelPlan::new(0, 42, 8, 1.0, PulseShape::Sinc).is_ok());
    }

    #[test]
    fn loopback_all_channels() {
        for pulse in [PulseShape::Sinc, PulseShape::RootRaisedCosine { rolloff: 0.06 }] {
            // Channel centres sit on whole bins, so round the spacing up.
            let spacing = ((1.0 + pulse.rolloff()) * 171.0).ceil() / 171.0;
            let plan = ChannelPlan::new(2, 171, 16, spacing, pulse).unwrap();
            let f = random_frame(2, 171, 9);
            let q = modulate(&f, &plan).unwrap();
            let z = 3.7;
            let qz = disperse(&q, z).unwrap();
            for k in -2..=2 {
                let full = matched_filter_detect(&qz, z, &plan, Band::full(&plan, k)).unwrap();
                assert!(max_err(&full, f.row(k).unwrap()) < 1e-9);
                let sel = channel_select(&qz, &plan, k, 4).unwrap();
                let a = matched_filter_detect(&sel.signal, z, &plan, sel.band).unwrap();
                assert!(max_err(&a, f.row(k).unwrap()) < 1e-9);
            }
            let a = matched_filter_detect(&q, 0.0, &plan, Band::full(&plan, 0)).unwrap();
            assert!(max_err(&a, f.row(0).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn channel_select_projection() {
        let plan = ChannelPlan::new(2, 65, 16, 1.0, PulseShape::Sinc).unwrap();
        let f = random_frame(2, 65, 4);
        let q = modulate(&f, &plan).unwrap();
        let mut only = f.clone();
        for k in [-2, -1, 0, 2] {
            only.rows[(k + 2) as usize].iter_mut().for_each(|a| *a = Complex64::default());
        }
        let single = modulate(&only, &plan).unwrap();
        let a = channel_select(&q, &plan, 1, 16).unwrap();
        let b = channel_select(&single, &plan, 1, 16).unwrap();
        assert!(a.signal.relative_distance(&b.signal).unwrap() < 1e-9);
        assert!(a.signal.energy() <= q.energy());
        // Single channel at baseband is unchanged.
        let base = channel_select(&single, &plan, 1, 16).unwrap().signal.modulated(1.0);
        assert!(base.relative_distance(&single).unwrap() < 1e-9);
    }

    #[test]
    fn phase_tools() {
        let mut rng = SplitMix64::seed_from_u64(5);
        let x: Vec<Complex64> = (0..500)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let y: Vec<Complex64> = x.iter().map(|a| a * Complex64::cis(0.7)).collect();
        assert!(max_err(&mean_phase_correct(&x, &y).unwrap(), &x) < 1e-12);
        assert!(max_err(&bps_genie(&x, &y, &BpsConfig::default()).unwrap(), &x) < 1e-12);

        let noisy: Vec<Complex64> = x
            .iter()
            .map(|a| a * Complex64::cis(rng.random_range(-0.3..0.3)) + Complex64::new(0.01, 0.0))
            .collect();
        let flipped: Vec<Complex64> = noisy.iter().map(|v| v * Complex64::cis(PI - 0.05)).collect();
        let back = mean_phase_correct(&x, &flipped).unwrap();
        assert!(max_err(&back, &mean_phase_correct(&x, &noisy).unwrap()) < 1e-9);
        let c = mean_phase_correct(&x, &noisy).unwrap();
        let mean: f64 = x.iter().zip(&c).map(|(a, b)| (b * a.conj()).arg()).sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 1e-12);

        let n0 = BpsConfig {
            half_window: 0,
            ..Default::default()
        };
        let z = bps_genie(&x, &noisy, &n0).unwrap();
        for (a, b) in x.iter().zip(&z) {
            assert!((b * a.conj()).arg().abs() < 1e-12);
        }

        // Slow phase drift is tracked up to its variation within a window.
        let drift: Vec<Complex64> = x
            .iter()
            .enumerate()
            .map(|(j, a)| a * Complex64::cis(0.002 * j as f64))
            .collect();
        let out = bps_genie(&x, &drift, &BpsConfig::default()).unwrap();
        for (a, b) in x.iter().zip(&out).skip(10).take(480) {
            assert!((b * a.conj()).arg().abs() < 0.002 * 10.0);
        }
        let grid = BpsConfig {
            grid_phases: Some(64),
            ..Default::default()
        };
        let g = bps_genie(&x, &y, &grid).unwrap();
        for (a, b) in x.iter().zip(&g) {
            assert!((b * a.conj()).arg().abs() <= PI / 64.0 + 1e-12);
        }
    }

    #[test]
    fn snr_arithmetic() {
        let x = vec![Complex64::new(1.0, 0.0); 200];
        assert_eq!(snr_estimate(&x, &x, EDGE_EXCLUSION).unwrap().snr_db, SNR_CAP_DB);
        let y: Vec<Complex64> = x.iter().map(|a| a + 0.1f64.sqrt()).collect();
        assert!((snr_estimate(&x, &y, 0).unwrap().snr_db - 10.0).abs() < 1e-9);
        let r = Complex64::cis(1.1);
        let xr: Vec<Complex64> = x.iter().map(|a| a * r).collect();
        let yr: Vec<Complex64> = y.iter().map(|a| a * r).collect();
        assert!((snr_estimate(&xr, &yr, 0).unwrap().snr_db - 10.0).abs() < 1e-9);
        assert!(snr_estimate(&x[..60], &y[..60], 32).is_err());
    }

    #[test]
    fn detected_csv() {
        let x = vec![Complex64::new(1.0, -1.0)];
        let mut buf = Vec::new();
        write_detected_csv(&mut buf, 7, &x, &x).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "j,re_x,im_x,re_y,im_y\n7,1.0,-1.0,1.0,-1.0\n");
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(32))]
        #[test]
        fn common_rotation_is_undone(seed: u64, theta in -3.1f64..3.1, half in 0usize..12) {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let x: Vec<Complex64> = (0..64)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let y: Vec<Complex64> = x.iter().map(|a| a * Complex64::cis(theta)).collect();
            proptest::prop_assert!(max_err(&mean_phase_correct(&x, &y).unwrap(), &x) < 1e-9);
            let cfg = BpsConfig { half_window: half, ..Default::default() };
            proptest::prop_assert!(max_err(&bps_genie(&x, &y, &cfg).unwrap(), &x) < 1e-9);
        }
    }
}
