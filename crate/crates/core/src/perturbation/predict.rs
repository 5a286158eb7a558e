//! Perturbation predictors for the detected symbol `a_{0,0}`.

use num_complex::Complex64;

use super::bruteforce::SpmCoefficients;
use super::chi::PerturbTable;
use crate::error::{Error, Result};
use crate::txrx::SymbolFrame;

/// Components of the first-order perturbation of the symbol of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NliPrediction {
    pub delta_total: Complex64,
    pub delta_spm: Complex64,
    pub delta_xpm: Complex64,
    /// Coupling parameter of the expansion (1 for the physical channel).
    pub epsilon: f64,
}

impl NliPrediction {
    pub fn dominant(delta_spm: Complex64, delta_xpm: Complex64) -> Self {
        Self {
            delta_total: delta_spm + delta_xpm,
            delta_spm,
            delta_xpm,
            epsilon: 1.0,
        }
    }
}

/// Closed-form count of nonzero `C` classes for `2M + 1` channels: triples
/// `(k1, k2, k3)` in `[-M, M]^3` with `|k1 - k2 + k3| <= 1`.
pub fn count_nonzero_c(m_half: u64) -> u64 {
    9 * m_half * m_half + 9 * m_half + 1
}

/// Exhaustive count of the same triples.
pub fn enumerate_nonzero_c(m_half: u64) -> u64 {
    let m = m_half as i64;
    let mut n = 0;
    for k1 in -m..=m {
        for k2 in -m..=m {
            for k3 in -m..=m {
                if (k1 - k2 + k3).abs() <= 1 {
                    n += 1;
                }
            }
        }
    }
    n
}

/// Whether the low-pass selection rule allows a nonzero coefficient.
pub fn selection_rule_allows(k1: i64, k2: i64, k3: i64) -> bool {
    (k1 - k2 + k3).abs() <= 1
}

/// Tail share above which an SPM window counts as truncated.
pub const SPM_TAIL_TOLERANCE: f64 = 0.05;

/// `sum a_{0,j1} a*_{0,j2} a_{0,j3} C(0, j1, 0, j2, 0, j3, z)` over the
/// coefficient window.
pub fn delta_spm(frame: &SymbolFrame, coeffs: &SpmCoefficients) -> Result<Complex64> {
    if coeffs.tail_estimate() > SPM_TAIL_TOLERANCE {
        return Err(Error::SupportMismatch(format!(
            "SPM window {} truncates {:.1}% of the coefficient mass",
            coeffs.window(),
            100.0 * coeffs.tail_estimate()
        )));
    }
    let w = coeffs.window() as i64;
    let a = |j: i64| frame.get(0, j).unwrap_or_default();
    let mut sum = Complex64::default();
    for j1 in -w..=w {
        let a1 = a(j1);
        if a1 == Complex64::default() {
            continue;
        }
        for j2 in -w..=w {
            let a12 = a1 * a(j2).conj();
            if a12 == Complex64::default() {
                continue;
            }
            for j3 in -w..=w {
                let c = coeffs.get(j1, j2, j3).expect("inside window");
                sum += a12 * a(j3) * c;
            }
        }
    }
    Ok(sum)
}

fn check_support(frame: &SymbolFrame, table: &PerturbTable) -> Result<()> {
    let (lo, hi) = frame.j_bounds();
    let range = table.j_range();
    if frame.m_half() > table.m_half() || lo < *range.start() || hi > *range.end() {
        return Err(Error::SupportMismatch(format!(
            "frame spans k <= {}, j in [{lo}, {hi}] but the table covers k <= {}, j in {range:?}",
            frame.m_half(),
            table.m_half()
        )));
    }
    Ok(())
}

/// `2 a_{0,0} sum_{k != 0} sum_j |a_{k,j}|^2 chi_{k,j}(z)`.
pub fn delta_xpm_dominant(frame: &SymbolFrame, table: &PerturbTable) -> Result<Complex64> {
    check_support(frame, table)?;
    let a00 = frame.get(0, 0).ok_or_else(|| Error::SupportMismatch("frame lacks a_{0,0}".into()))?;
    let m = frame.m_half() as i64;
    let (lo, hi) = frame.j_bounds();
    let mut sum = Complex64::default();
    for k in (-m..=m).filter(|&k| k != 0) {
        for j in lo..=hi {
            let e = frame.get(k, j).expect("in range").norm_sqr();
            sum += e * table.get(k, j).expect("support checked");
        }
    }
    Ok(2.0 * a00 * sum)
}

/// XPM split into the near-collision window and a deterministic block part
/// that depends only on the common codeword energy.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockwiseXpm {
    /// `2 a00 E sum_{k != 0} (sum_{l >= 1} + sum_{l <= -2}) chi_{k, l m}`.
    pub deterministic: Complex64,
    /// Symbols `j` in this window stay random (`[-m, m - 1]`).
    pub random_window: std::ops::RangeInclusive<i64>,
    /// Number of blocks per side included from the table.
    pub blocks_per_side: i64,
    /// Largest `|chi_{k, lm + i} - chi_{k, lm}| / |chi_{k, lm}|` over the used
    /// blocks; large values mean the blocklength is too long for the
    /// approximation.
    pub max_block_variation: f64,
}

/// Variation above which the blockwise approximation is reported as doubtful.
pub const BLOCK_VARIATION_WARNING: f64 = 0.05;

pub fn delta_xpm_blockwise(
    a00: Complex64,
    codeword_energy: f64,
    block_length: usize,
    table: &PerturbTable,
) -> Result<BlockwiseXpm> {
    if block_length == 0 {
        return Err(Error::invalid("block_length", "must be positive"));
    }
    let m = block_length as i64;
    let range = table.j_range();
    let m_half = table.m_half() as i64;
    if *range.start() > -m || *range.end() < m - 1 {
        return Err(Error::SupportMismatch(format!(
            "table range {range:?} does not cover the collision window [{}, {}]",
            -m,
            m - 1
        )));
    }
    // Blocks [l m, l m + m - 1] fully inside the table, l >= 1 and l <= -2.
    let pos = (*range.end() + 1) / m - 1;
    let neg = (-*range.start()) / m - 1;
    let blocks = pos.min(neg).max(0);
    let mut sum = Complex64::default();
    let mut variation: f64 = 0.0;
    for k in (-m_half..=m_half).filter(|&k| k != 0) {
        let ls = (1..=blocks).chain(-(blocks + 1)..=-2);
        for l in ls {
            let head = table.get(k, l * m).expect("inside table");
            sum += head;
            if head.norm() > 0.0 {
                for i in 1..m {
                    let c = table.get(k, l * m + i).expect("inside table");
                    variation = variation.max((c - head).norm() / head.norm());
                }
            }
        }
    }
    if variation > BLOCK_VARIATION_WARNING {
        log::warn!(
            "blocklength {block_length}: chi varies by {:.1}% within a block; the blockwise XPM split is approximate",
            100.0 * variation
        );
    }
    Ok(BlockwiseXpm {
        deterministic: 2.0 * a00 * codeword_energy * sum,
        random_window: -m..=m - 1,
        blocks_per_side: blocks,
        max_block_variation: variation,
    })
}

impl BlockwiseXpm {
    /// Adds the random near-collision part for a concrete frame.
    pub fn total(&self, frame: &SymbolFrame, table: &PerturbTable) -> Result<Complex64> {
        let a00 = frame.get(0, 0).ok_or_else(|| Error::SupportMismatch("frame lacks a_{0,0}".into()))?;
        let m_half = frame.m_half() as i64;
        let mut sum = Complex64::default();
        for k in (-m_half..=m_half).filter(|&k| k != 0) {
            for j in self.random_window.clone() {
                let a = frame
                    .get(k, j)
                    .ok_or_else(|| Error::SupportMismatch(format!("frame lacks a_{{{k},{j}}}")))?;
                let c = table
                    .get(k, j)
                    .ok_or_else(|| Error::SupportMismatch(format!("table lacks chi_{{{k},{j}}}")))?;
                sum += a.norm_sqr() * c;
            }
        }
        Ok(2.0 * a00 * sum + self.deterministic)
    }
}

/// Matched-filter output to first order, `a00 + epsilon * delta`.
pub fn predict_rx_symbol(a00: Complex64, delta: Complex64, epsilon: f64) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid("epsilon", format!("must lie in [0, 1], got {epsilon}")));
    }
    Ok(a00 + epsilon * delta)
}

/// Dominant-term prediction (SPM window plus dominant XPM).
pub fn predict_dominant(
    frame: &SymbolFrame,
    spm: &SpmCoefficients,
    table: &PerturbTable,
    epsilon: f64,
) -> Result<(NliPrediction, Complex64)> {
    let p = NliPrediction {
        epsilon,
        ..NliPrediction::dominant(delta_spm(frame, spm)?, delta_xpm_dominant(frame, table)?)
    };
    let a00 = frame.get(0, 0).ok_or_else(|| Error::SupportMismatch("frame lacks a_{0,0}".into()))?;
    Ok((p, predict_rx_symbol(a00, p.delta_total, epsilon)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(m_half: usize, j_start: i64, len: usize, f: impl Fn(i64, i64) -> Complex64) -> SymbolFrame {
        let m = m_half as i64;
        let rows = (-m..=m)
            .map(|k| (0..len as i64).map(|i| f(k, j_start + i)).collect())
            .collect();
        SymbolFrame::new(m_half, j_start, rows).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(count_nonzero_c(0), 1);
        assert_eq!(count_nonzero_c(1), 19);
        assert_eq!(count_nonzero_c(2), 55);
        for m in 0..=6 {
            assert_eq!(count_nonzero_c(m), enumerate_nonzero_c(m));
        }
    }

    #[test]
    fn xpm_dominant_properties() {
        let table = PerturbTable::build(1.0, 1, -4, 4).unwrap();
        let zero = frame(1, -4, 9, |k, j| if k == 0 && j == 0 { Complex64::default() } else { Complex64::new(1.0, 0.5) });
        assert_eq!(delta_xpm_dominant(&zero, &table).unwrap(), Complex64::default());

        let a00 = Complex64::new(0.3, -0.7);
        let f = frame(1, -4, 9, |k, j| if k == 0 && j == 0 { a00 } else { Complex64::new(0.0, 2f64.sqrt()) });
        let d = delta_xpm_dominant(&f, &table).unwrap();
        let sum: Complex64 = table.iter().filter(|e| e.0 != 0).map(|e| e.2).sum();
        assert!((d - 2.0 * a00 * 2.0 * sum).norm() < 1e-12 * d.norm());
        // Pure rotation: delta / a00 is imaginary.
        assert!((d / a00).re.abs() < 1e-12 * d.norm());

        let wide = frame(1, -6, 13, |_, _| Complex64::new(1.0, 0.0));
        assert!(matches!(delta_xpm_dominant(&wide, &table), Err(Error::SupportMismatch(_))));
    }

    #[test]
    fn blockwise_limits() {
        let table = PerturbTable::build(1.0, 1, -12, 12).unwrap();
        // m = 1: every "codeword" is one symbol of energy E, all deterministic
        // except the window [-1, 0].
        let e = 1.7;
        let b = delta_xpm_blockwise(Complex64::new(1.0, 0.0), e, 1, &table).unwrap();
        assert_eq!(b.random_window, -1..=0);
        let f = frame(1, -12, 25, |k, j| if k == 0 && j == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(e.sqrt(), 0.0) });
        let exact = delta_xpm_dominant(&f, &table).unwrap();
        // Blocks cover j in [1, 11] and [-12, -2]; only j = 12 falls outside.
        let missing = 2.0 * e * (table.get(1, 12).unwrap() + table.get(-1, 12).unwrap());
        let total = b.total(&f, &table).unwrap();
        assert!((total + missing - exact).norm() < 1e-12 * exact.norm());
        assert!(delta_xpm_blockwise(Complex64::new(1.0, 0.0), 1.0, 13, &table).is_err());
    }

    #[test]
    fn prediction() {
        let a = Complex64::new(0.5, 0.5);
        assert_eq!(predict_rx_symbol(a, Complex64::new(3.0, 1.0), 0.0).unwrap(), a);
        assert!(predict_rx_symbol(a, a, 1.5).is_err());
    }
}
