//! Symmetric split-step Fourier solver for
//! `dq/dz = -i d2q/dt2 - 2i |q|^2 q - (alpha / 2) q` with lumped amplifiers.
//!
//! Each step is half a dispersion step, one exact nonlinear-and-loss step and
//! another half dispersion step. Consecutive half steps are merged, so a step
//! costs one FFT pair. The step length bounds the peak nonlinear phase.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::signal::SampledSignal;
use crate::spectral::{self, FftPair};
use crate::units::NormalizationMap;

/// Planck constant, J s.
const PLANCK: f64 = 6.626_070_15e-34;
/// Optical carrier frequency, Hz (1550 nm).
pub const CARRIER_HZ: f64 = 193.4e12;

/// Lumped amplification at the end of every span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Amplifier {
    None,
    Edfa {
        gain_db: f64,
        noise_figure_db: f64,
        ase_on: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub total_length: f64,
    pub span_length: f64,
    /// dB/km.
    pub loss: f64,
    pub amp: Amplifier,
    pub map: NormalizationMap,
}

impl LinkSpec {
    /// Lossless, unamplified fiber.
    pub fn ideal(total_length: f64, map: NormalizationMap) -> Self {
        Self {
            total_length,
            span_length: total_length,
            loss: 0.0,
            amp: Amplifier::None,
            map,
        }
    }

    /// Lossy spans, each followed by an EDFA whose gain equals the span loss.
    pub fn amplified(
        total_length: f64,
        span_length: f64,
        loss: f64,
        noise_figure_db: f64,
        ase_on: bool,
        map: NormalizationMap,
    ) -> Self {
        Self {
            total_length,
            span_length,
            loss,
            amp: Amplifier::Edfa {
                gain_db: loss * span_length,
                noise_figure_db,
                ase_on,
            },
            map,
        }
    }

    pub fn with_length(&self, total_length: f64) -> Self {
        Self {
            total_length,
            span_length: if self.amp == Amplifier::None && self.loss == 0.0 {
                total_length
            } else {
                self.span_length
            },
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_length >= 0.0) || !self.total_length.is_finite() {
            return Err(Error::invalid("total_length", "must be finite and non-negative"));
        }
        if !(self.loss >= 0.0) || !self.loss.is_finite() {
            return Err(Error::invalid("loss", "must be finite and non-negative"));
        }
        if let Amplifier::Edfa { gain_db, noise_figure_db, .. } = self.amp {
            if !(self.span_length > 0.0) {
                return Err(Error::invalid("span_length", "must be positive for amplified links"));
            }
            let spans = self.total_length / self.span_length;
            if (spans - spans.round()).abs() > 1e-9 * spans.max(1.0) {
                return Err(Error::invalid(
                    "span_length",
                    format!("{} km does not divide the {} km link", self.span_length, self.total_length),
                ));
            }
            if !(gain_db >= 0.0) || !(noise_figure_db >= 0.0) {
                return Err(Error::invalid("amp", "gain and noise figure must be non-negative dB"));
            }
        }
        Ok(())
    }

    fn spans(&self) -> usize {
        match self.amp {
            Amplifier::None => 0,
            Amplifier::Edfa { .. } => (self.total_length / self.span_length).round() as usize,
        }
    }
}

/// Adaptive step rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    /// Peak nonlinear phase per step, radians.
    pub max_nonlinear_phase: f64,
    /// km.
    pub min_step: f64,
    /// km.
    pub max_step: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            max_nonlinear_phase: 2e-3,
            min_step: 1e-4,
            max_step: 1.0,
        }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_nonlinear_phase > 0.0 && self.max_nonlinear_phase <= 0.1) {
            return Err(Error::invalid(
                "max_nonlinear_phase",
                format!("must lie in (0, 0.1], got {}", self.max_nonlinear_phase),
            ));
        }
        if !(self.min_step > 0.0) || !(self.max_step >= self.min_step) {
            return Err(Error::invalid("step", "need 0 < min_step <= max_step"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PropagationStats {
    pub steps: usize,
}

/// Sorted event positions: the end of every span, every snapshot and the
/// end of the link, in km.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    Snapshot(usize),
    Amplifier(usize),
}

struct Engine {
    fft: FftPair,
    omega2: Vec<f64>,
    time: Vec<Complex64>,
    /// Pending dispersion distance in normalized units.
    pending: f64,
    peak: f64,
}

impl Engine {
    fn new(s: &SampledSignal, carrier: f64) -> Self {
        let omega2 = spectral::frequencies(s.len(), s.dt())
            .into_iter()
            .map(|f| (2.0 * PI * (f + carrier)).powi(2))
            .collect();
        let time = s.samples().to_vec();
        let peak = time.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
        Self {
            fft: FftPair::new(s.len()),
            omega2,
            time,
            pending: 0.0,
            peak,
        }
    }

    fn flush(&mut self) {
        if self.pending != 0.0 {
            self.fft.forward(&mut self.time);
            let d = self.pending;
            for (x, o) in self.time.iter_mut().zip(&self.omega2) {
                *x *= Complex64::cis(o * d);
            }
            self.fft.inverse(&mut self.time);
            self.pending = 0.0;
        }
    }

    /// Exact solution of `dq/dz = -2i s |q|^2 q - (alpha/2) q` over `h`, with
    /// `s = +1` forward and `s = -1` for the inverse substep.
    fn nonlinear(&mut self, h: f64, alpha: f64, forward: bool) {
        let (decay, leff) = if alpha > 0.0 {
            ((-alpha * h).exp(), (-(-alpha * h).exp_m1()) / alpha)
        } else {
            (1.0, h)
        };
        let mut peak: f64 = 0.0;
        if forward {
            let amp = decay.sqrt();
            for x in &mut self.time {
                let p = x.norm_sqr();
                *x *= amp * Complex64::cis(-2.0 * p * leff);
                peak = peak.max(p * decay);
            }
        } else {
            let amp = 1.0 / decay.sqrt();
            for x in &mut self.time {
                let p = x.norm_sqr() / decay;
                *x *= amp * Complex64::cis(2.0 * p * leff);
                peak = peak.max(p);
            }
        }
        self.peak = peak;
    }

    fn scale(&mut self, factor: f64) {
        self.time.iter_mut().for_each(|x| *x *= factor);
        self.peak *= factor * factor;
    }
}

fn ase_variance(link: &LinkSpec, dt: f64) -> f64 {
    match link.amp {
        Amplifier::Edfa {
            gain_db,
            noise_figure_db,
            ase_on: true,
        } if gain_db > 0.0 => {
            let g = 10f64.powf(gain_db / 10.0);
            let nf = 10f64.powf(noise_figure_db / 10.0);
            let n_sp = (nf * g - 1.0) / (2.0 * (g - 1.0));
            let bandwidth = 1.0 / (dt * link.map.t0);
            n_sp * PLANCK * CARRIER_HZ * (g - 1.0) * bandwidth / link.map.p0
        }
        _ => 0.0,
    }
}

fn check_grid(s: &SampledSignal) -> Result<()> {
    // Only the periodic model is consistent with the FFT split-step.
    if s.boundary() != crate::signal::Boundary::Periodic {
        log::debug!("propagating an isolated signal on a cyclic grid");
    }
    Ok(())
}

/// Field at the end of the link.
pub fn propagate(s: &SampledSignal, link: &LinkSpec, policy: &StepPolicy, seed: u64) -> Result<SampledSignal> {
    let mut out = propagate_with_snapshots(s, link, policy, seed, &[link.total_length])?;
    Ok(out.0.pop().expect("one snapshot"))
}

/// Fields at each length in `lengths_km` (ascending, within the link) from a
/// single run. A snapshot at a span end is taken after the amplifier.
pub fn propagate_with_snapshots(
    s: &SampledSignal,
    link: &LinkSpec,
    policy: &StepPolicy,
    seed: u64,
    lengths_km: &[f64],
) -> Result<(Vec<SampledSignal>, PropagationStats)> {
    link.validate()?;
    policy.validate()?;
    check_grid(s)?;
    if lengths_km.windows(2).any(|w| w[1] < w[0])
        || lengths_km.iter().any(|&l| !(0.0..=link.total_length * (1.0 + 1e-12)).contains(&l))
    {
        return Err(Error::invalid("lengths_km", "snapshots must be ascending and inside the link"));
    }
    let map = &link.map;
    let alpha = map.loss_to_alpha(link.loss);
    let mut events: Vec<(f64, Event)> = lengths_km
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, Event::Snapshot(i)))
        .chain((1..=link.spans()).map(|i| (i as f64 * link.span_length, Event::Amplifier(i))))
        .collect();
    // Amplifiers before snapshots at the same position.
    events.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| match (a.1, b.1) {
            (Event::Amplifier(_), Event::Snapshot(_)) => std::cmp::Ordering::Less,
            (Event::Snapshot(_), Event::Amplifier(_)) => std::cmp::Ordering::Greater,
            _ => std::cmp::Ordering::Equal,
        })
    });
    let sigma2 = ase_variance(link, s.dt());
    let gain = match link.amp {
        Amplifier::Edfa { gain_db, .. } => 10f64.powf(gain_db / 20.0),
        Amplifier::None => 1.0,
    };

    let mut eng = Engine::new(s, 0.0);
    let mut stats = PropagationStats::default();
    let mut snaps = vec![None; lengths_km.len()];
    let mut pos_km = 0.0;
    for (at_km, ev) in events {
        march(&mut eng, &mut pos_km, at_km, alpha, map, policy, true, &mut stats)?;
        eng.flush();
        match ev {
            Event::Snapshot(i) => snaps[i] = Some(s.with_samples(eng.time.clone())),
            Event::Amplifier(i) => {
                eng.scale(gain);
                if sigma2 > 0.0 {
                    let mut r = rng::stream(seed, &[i as u64]);
                    let sd = (sigma2 / 2.0).sqrt();
                    for x in &mut eng.time {
                        let re: f64 = r.sample(StandardNormal);
                        let im: f64 = r.sample(StandardNormal);
                        *x += Complex64::new(re, im) * sd;
                    }
                    eng.peak = eng.time.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
                }
            }
        }
    }
    log::debug!("split-step run: {} steps over {} km", stats.steps, link.total_length);
    Ok((snaps.into_iter().map(|x| x.expect("every snapshot visited")).collect(), stats))
}

#[allow(clippy::too_many_arguments)]
fn march(
    eng: &mut Engine,
    pos_km: &mut f64,
    to_km: f64,
    alpha: f64,
    map: &NormalizationMap,
    policy: &StepPolicy,
    forward: bool,
    stats: &mut PropagationStats,
) -> Result<()> {
    let sign = if forward { 1.0 } else { -1.0 };
    while to_km - *pos_km > 1e-12 * to_km.max(1.0) {
        let remaining = to_km - *pos_km;
        let adaptive = if eng.peak > 0.0 {
            map.z_to_length(policy.max_nonlinear_phase / (2.0 * eng.peak))
        } else {
            f64::INFINITY
        };
        let wanted = adaptive.min(policy.max_step);
        if wanted < policy.min_step && remaining > policy.min_step {
            return Err(Error::StepTooSmall {
                position_km: *pos_km,
                required: wanted,
                min: policy.min_step,
            });
        }
        let h_km = wanted.min(remaining);
        let h = map.length_to_z(h_km);
        eng.pending += sign * h / 2.0;
        eng.flush();
        eng.nonlinear(h, alpha, forward);
        eng.pending += sign * h / 2.0;
        *pos_km += h_km;
        stats.steps += 1;
    }
    *pos_km = to_km;
    Ok(())
}

/// Digital back-propagation of a field whose zero frequency sits at absolute
/// frequency `carrier`: the link is traversed in reverse with the inverse of
/// every substep and amplifier gain, and without noise.
pub fn back_propagate_band(
    s: &SampledSignal,
    carrier: f64,
    link: &LinkSpec,
    policy: &StepPolicy,
) -> Result<SampledSignal> {
    link.validate()?;
    policy.validate()?;
    check_grid(s)?;
    let map = &link.map;
    let alpha = map.loss_to_alpha(link.loss);
    let gain = match link.amp {
        Amplifier::Edfa { gain_db, .. } => 10f64.powf(gain_db / 20.0),
        Amplifier::None => 1.0,
    };
    let spans = link.spans();
    // Boundaries in remaining-distance order: the span starts, walking back.
    let mut marks: Vec<f64> = (0..spans).map(|i| i as f64 * link.span_length).collect();
    if marks.is_empty() {
        marks.push(0.0);
    }
    let mut eng = Engine::new(s, carrier);
    let mut stats = PropagationStats::default();
    // Walk in "distance travelled backwards" coordinates.
    let mut back_km = 0.0;
    for (idx, start) in marks.iter().rev().enumerate() {
        if spans > 0 {
            eng.flush();
            eng.scale(1.0 / gain);
        }
        let target = link.total_length - start;
        debug_assert!(idx < marks.len());
        march(&mut eng, &mut back_km, target, alpha, map, policy, false, &mut stats)?;
    }
    eng.flush();
    log::debug!("back-propagation: {} steps over {} km", stats.steps, link.total_length);
    Ok(s.with_samples(eng.time))
}

pub fn back_propagate(s: &SampledSignal, link: &LinkSpec, policy: &StepPolicy) -> Result<SampledSignal> {
    back_propagate_band(s, 0.0, link, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::disperse;
    use crate::units::{normalize, PhysicalParams};
    use rand::SeedableRng;
    use rand_xoshiro::SplitMix64;

    fn map() -> NormalizationMap {
        normalize(&PhysicalParams::from_engineering(-21.7, 1.3, 50.0)).unwrap()
    }

    fn random_signal(n: usize, amp: f64, seed: u64) -> SampledSignal {
        let mut r = SplitMix64::seed_from_u64(seed);
        // Band-limited noise: random spectrum on the lowest quarter of bins.
        let mut spec = vec![Complex64::default(); n];
        for (m, s) in spec.iter_mut().enumerate() {
            if spectral::signed_bin(m, n).unsigned_abs() < (n / 8) as u64 {
                *s = Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal));
            }
        }
        spectral::ifft(&mut spec);
        let rms = (spec.iter().map(|x| x.norm_sqr()).sum::<f64>() / n as f64).sqrt();
        spec.iter_mut().for_each(|x| *x *= amp / rms);
        SampledSignal::periodic(spec, 0.125, 0.0).unwrap()
    }

    #[test]
    fn zero_input_and_linear_limit() {
        let m = map();
        let link = LinkSpec::ideal(500.0, m);
        let pol = StepPolicy::default();
        let zero = SampledSignal::periodic(vec![Complex64::default(); 256], 0.125, 0.0).unwrap();
        assert_eq!(propagate(&zero, &link, &pol, 0).unwrap().energy(), 0.0);

        let s = random_signal(512, 1e-4, 1);
        let lin = disperse(&s, m.length_to_z(500.0)).unwrap();
        let out = propagate(&s, &link, &pol, 0).unwrap();
        assert!(out.relative_distance(&lin).unwrap() < 1e-4);
    }

    #[test]
    fn lossless_energy_and_inverse() {
        let m = map();
        let link = LinkSpec::ideal(300.0, m);
        let pol = StepPolicy::default();
        let s = random_signal(512, 0.3, 2);
        let out = propagate(&s, &link, &pol, 0).unwrap();
        assert!((out.energy() - s.energy()).abs() < 1e-9 * s.energy());
        // Step sequences are chosen from the local peak, so the round trip
        // is exact only up to the splitting error, which must converge.
        let back = back_propagate(&out, &link, &pol).unwrap();
        let coarse = back.relative_distance(&s).unwrap();
        let fine = StepPolicy { max_nonlinear_phase: 5e-4, ..pol };
        let out_fine = propagate(&s, &link, &fine, 0).unwrap();
        let back_fine = back_propagate(&out_fine, &link, &fine).unwrap();
        let refined = back_fine.relative_distance(&s).unwrap();
        assert!(coarse < 1e-5, "round trip {coarse}");
        assert!(refined < coarse / 8.0, "round trip {coarse} -> {refined}");
        let zero_len = LinkSpec::ideal(0.0, m);
        assert_eq!(back_propagate(&s, &zero_len, &pol).unwrap(), s);
    }

    #[test]
    fn amplified_inverse_and_gain() {
        let m = map();
        let link = LinkSpec::amplified(200.0, 50.0, 0.2, 5.0, false, m);
        let pol = StepPolicy::default();
        let s = random_signal(512, 0.2, 3);
        let out = propagate(&s, &link, &pol, 0).unwrap();
        // Gain restores the launch energy up to the nonlinear energy exchange,
        // which is zero for the scalar equation.
        assert!((out.energy() - s.energy()).abs() < 1e-9 * s.energy());
        let back = back_propagate(&out, &link, &pol).unwrap();
        // After loss the step is capped by max_step rather than the phase,
        // so the round trip is only as good as the dispersion splitting.
        let err = back.relative_distance(&s).unwrap();
        assert!(err < 2e-3, "round trip {err}");
        let fine = StepPolicy { max_nonlinear_phase: 1.25e-4, max_step: 0.01, ..pol };
        let out_fine = propagate(&s, &link, &fine, 0).unwrap();
        let err_fine = back_propagate(&out_fine, &link, &fine).unwrap().relative_distance(&s).unwrap();
        assert!(err_fine < 1e-8, "round trip {err_fine}");
    }

    #[test]
    fn ase_statistics_and_determinism() {
        let m = map();
        let link = LinkSpec::amplified(100.0, 50.0, 0.2, 5.0, true, m);
        let pol = StepPolicy::default();
        let zero = SampledSignal::periodic(vec![Complex64::default(); 4096], 0.125, 0.0).unwrap();
        let a = propagate(&zero, &link, &pol, 11).unwrap();
        let b = propagate(&zero, &link, &pol, 11).unwrap();
        assert_eq!(a, b);
        let sigma2 = ase_variance(&link, 0.125);
        // Two amplifiers; the first one's noise is attenuated and re-amplified.
        let measured = a.samples().iter().map(|x| x.norm_sqr()).sum::<f64>() / 4096.0;
        assert!((measured / (2.0 * sigma2) - 1.0).abs() < 0.1, "{measured} vs {}", 2.0 * sigma2);
        assert_ne!(propagate(&zero, &link, &pol, 12).unwrap(), a);
    }

    #[test]
    fn snapshots_match_separate_runs() {
        let m = map();
        let link = LinkSpec::ideal(400.0, m);
        let pol = StepPolicy::default();
        let s = random_signal(256, 0.2, 4);
        let (snaps, stats) = propagate_with_snapshots(&s, &link, &pol, 0, &[100.0, 400.0]).unwrap();
        assert!(stats.steps > 0);
        let direct = propagate(&s, &link.with_length(100.0), &pol, 0).unwrap();
        assert!(snaps[0].relative_distance(&direct).unwrap() < 1e-6);
        assert!(propagate_with_snapshots(&s, &link, &pol, 0, &[300.0, 100.0]).is_err());
    }

    #[test]
    fn policy_guards() {
        let bad = StepPolicy {
            max_nonlinear_phase: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let m = map();
        let tight = StepPolicy {
            min_step: 0.5,
            ..Default::default()
        };
        let s = random_signal(256, 5.0, 5);
        assert!(matches!(
            propagate(&s, &LinkSpec::ideal(10.0, m), &tight, 0),
            Err(Error::StepTooSmall { .. })
        ));
        let mut link = LinkSpec::amplified(120.0, 50.0, 0.2, 5.0, false, m);
        assert!(link.validate().is_err());
        link.total_length = 100.0;
        assert!(link.validate().is_ok());
    }
}
