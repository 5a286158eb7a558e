//! Constellations, constant-composition (CC) codes and IUD symbol sources.

use std::f64::consts::LOG2_E;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SplitMix64};

/// A finite set of distinct constellation points.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    points: Vec<Complex64>,
    label: String,
}

impl Alphabet {
    pub fn new(points: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("points", "alphabet must be nonempty"));
        }
        for (i, a) in points.iter().enumerate() {
            if points[..i].iter().any(|b| (a - b).norm() < 1e-12) {
                return Err(Error::invalid("points", format!("duplicate point {a}")));
            }
        }
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// Rescales to unit mean energy.
    pub fn normalized(mut self) -> Self {
        let s = 1.0 / self.mean_energy().sqrt();
        self.points.iter_mut().for_each(|p| *p *= s);
        self
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }
}

/// Square `m`-QAM with unit mean energy, points ordered by (Re, Im).
pub fn qam(m: usize) -> Result<Alphabet> {
    let side = (m as f64).sqrt().round() as usize;
    if side * side != m || side < 2 || !side.is_multiple_of(2) {
        return Err(Error::invalid(
            "m",
            format!("{m} is not the square of an even integer"),
        ));
    }
    let levels: Vec<f64> = (0..side).map(|i| (2 * i) as f64 - (side - 1) as f64).collect();
    let points = levels
        .iter()
        .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re, im)))
        .collect();
    Ok(Alphabet::new(points, format!("qam{m}"))?.normalized())
}

/// The `n` lowest-energy points of `a`, renormalized to unit mean energy.
///
/// Points of equal energy (within 1e-9 relative) are taken in lexicographic
/// (Re, Im) order.
pub fn lowest_energy_subset(a: &Alphabet, n: usize) -> Result<Alphabet> {
    if n == 0 || n > a.len() {
        return Err(Error::invalid(
            "n",
            format!("need 1 <= n <= {}, got {n}", a.len()),
        ));
    }
    let mut pts = a.points.clone();
    pts.sort_by(|x, y| x.norm_sqr().total_cmp(&y.norm_sqr()));
    let max_e = pts.last().map(|p| p.norm_sqr()).unwrap_or(0.0).max(f64::MIN_POSITIVE);
    // Regroup near-equal energies into shells, then order each shell.
    let mut shells: Vec<Vec<Complex64>> = Vec::new();
    for p in pts {
        match shells.last_mut() {
            Some(shell) if (p.norm_sqr() - shell[0].norm_sqr()).abs() <= 1e-9 * max_e => shell.push(p),
            _ => shells.push(vec![p]),
        }
    }
    let ordered: Vec<Complex64> = shells
        .into_iter()
        .flat_map(|mut shell| {
            shell.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
            shell
        })
        .take(n)
        .collect();
    Ok(Alphabet::new(ordered, format!("{}-low{n}", a.label))?.normalized())
}

/// Occurrence counts `(w_1, ..., w_m)` of each alphabet letter in a word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    counts: Vec<u64>,
}

impl Composition {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::invalid("counts", "composition over an empty alphabet"));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::invalid("counts", "composition of an empty word"));
        }
        Ok(Self { counts })
    }

    /// The all-ones type (every letter exactly once).
    pub fn uniform(m: usize) -> Self {
        Self { counts: vec![1; m] }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeTag {
    Cc,
    Iud,
}

/// A word over an alphabet, stored as letter indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodewordFrame {
    pub indices: Vec<usize>,
    pub alphabet_size: usize,
    pub scheme: SchemeTag,
}

impl CodewordFrame {
    pub fn new(indices: Vec<usize>, alphabet_size: usize, scheme: SchemeTag) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= alphabet_size) {
            return Err(Error::invalid(
                "indices",
                format!("letter {bad} outside alphabet of size {alphabet_size}"),
            ));
        }
        Ok(Self {
            indices,
            alphabet_size,
            scheme,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn symbols(&self, a: &Alphabet) -> Vec<Complex64> {
        self.indices.iter().map(|&i| a.point(i)).collect()
    }

    /// `sum |a_i|^2`.
    pub fn energy(&self, a: &Alphabet) -> f64 {
        self.indices.iter().map(|&i| a.point(i).norm_sqr()).sum()
    }

    /// CSV with columns `j,re,im`.
    pub fn write_csv(&self, a: &Alphabet, mut w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(&mut w);
        out.write_record(["j", "re", "im"])?;
        for (j, s) in self.symbols(a).iter().enumerate() {
            out.write_record([j.to_string(), format!("{:.17e}", s.re), format!("{:.17e}", s.im)])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn type_of(v: &CodewordFrame) -> Composition {
    let mut counts = vec![0u64; v.alphabet_size];
    for &i in &v.indices {
        counts[i] += 1;
    }
    Composition { counts }
}

/// `log2(n!)` summed term by term.
fn log2_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).log2()).sum()
}

/// Rate `(1/n) log2(n! / (w_1! ... w_m!))` of the full-permutation CC code.
pub fn cc_rate(c: &Composition) -> f64 {
    let n = c.n();
    let denom: f64 = c.counts.iter().map(|&w| log2_factorial(w)).sum();
    (log2_factorial(n) - denom) / n as f64
}

/// `log2 m - (1/m) log2 m!`, the rate lost by a CC code of length `m` over
/// IUD signalling with the same alphabet size.
pub fn rate_gap(m: usize) -> f64 {
    (m as f64).log2() - cc_rate(&Composition::uniform(m))
}

/// Limit of [`rate_gap`] as `m` grows.
pub const RATE_GAP_LIMIT: f64 = LOG2_E;

/// Infinite stream of uniformly random permutations of `base`.
#[derive(Debug, Clone)]
pub struct CcFrames {
    base: CodewordFrame,
    rng: SplitMix64,
}

impl Iterator for CcFrames {
    type Item = CodewordFrame;

    fn next(&mut self) -> Option<CodewordFrame> {
        let mut word = self.base.clone();
        word.scheme = SchemeTag::Cc;
        rng::shuffle(&mut self.rng, &mut word.indices);
        Some(word)
    }
}

pub fn cc_frames(u: &CodewordFrame, seed: u64) -> CcFrames {
    CcFrames {
        base: u.clone(),
        rng: rng::stream(seed, &[]),
    }
}

/// Infinite stream of length-`n` words with independent uniform letters.
#[derive(Debug, Clone)]
pub struct IudFrames {
    m: usize,
    n: usize,
    rng: SplitMix64,
}

impl Iterator for IudFrames {
    type Item = CodewordFrame;

    fn next(&mut self) -> Option<CodewordFrame> {
        let indices = (0..self.n)
            .map(|_| rng::below(&mut self.rng, self.m as u64) as usize)
            .collect();
        Some(CodewordFrame {
            indices,
            alphabet_size: self.m,
            scheme: SchemeTag::Iud,
        })
    }
}

pub fn iud_frames(a: &Alphabet, n: usize, seed: u64) -> IudFrames {
    IudFrames {
        m: a.len(),
        n,
        rng: rng::stream(seed, &[]),
    }
}

/// A transmission scheme for one WDM channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// Every codeword is a permutation of the full alphabet (all-ones type).
    ConstantComposition { alphabet: Alphabet },
    Iud { alphabet: Alphabet },
}

impl Scheme {
    /// CC code over the `size` lowest-energy points of square `base_qam`-QAM.
    pub fn cc(size: usize, base_qam: usize) -> Result<Self> {
        let alphabet = lowest_energy_subset(&qam(base_qam)?, size)?;
        Ok(Scheme::ConstantComposition { alphabet })
    }

    pub fn iud(qam_size: usize) -> Result<Self> {
        Ok(Scheme::Iud {
            alphabet: qam(qam_size)?,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        match self {
            Scheme::ConstantComposition { alphabet } | Scheme::Iud { alphabet } => alphabet,
        }
    }

    /// Codeword length (1 for IUD).
    pub fn block_length(&self) -> usize {
        match self {
            Scheme::ConstantComposition { alphabet } => alphabet.len(),
            Scheme::Iud { .. } => 1,
        }
    }

    pub fn tag(&self) -> SchemeTag {
        match self {
            Scheme::ConstantComposition { .. } => SchemeTag::Cc,
            Scheme::Iud { .. } => SchemeTag::Iud,
        }
    }

    /// `n` consecutive symbols; for CC `n` must be a multiple of the block length.
    pub fn symbols(&self, n: usize, seed: u64) -> Result<Vec<Complex64>> {
        match self {
            Scheme::ConstantComposition { alphabet } => {
                let m = alphabet.len();
                if !n.is_multiple_of(m) {
                    return Err(Error::invalid(
                        "n",
                        format!("{n} symbols is not a whole number of length-{m} codewords"),
                    ));
                }
                let base = CodewordFrame::new((0..m).collect(), m, SchemeTag::Cc)?;
                Ok(cc_frames(&base, seed)
                    .take(n / m)
                    .flat_map(|w| w.symbols(alphabet))
                    .collect())
            }
            Scheme::Iud { alphabet } => Ok(iud_frames(alphabet, n, seed)
                .next()
                .expect("infinite stream")
                .symbols(alphabet)),
        }
    }
}
