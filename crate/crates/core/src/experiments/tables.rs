//! Coefficient tables and rate curves.

use std::fs;
use std::io::Write;

use super::config::{ChiTableConfig, RateCurveConfig};
use crate::codebook::{cc_rate, Composition};
use crate::error::{Error, Result};
use crate::perturbation::PerturbTable;

/// Builds `chi_{k,j}` for `|k| <= M`, `|j| <= j_max` at the configured length.
pub fn emit_chi_table(cfg: &ChiTableConfig) -> Result<PerturbTable> {
    cfg.validate()?;
    let table = PerturbTable::build(cfg.z()?, cfg.channels_m, -cfg.j_max, cfg.j_max)?;
    let f = fs::File::create(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    table.write_csv(f)?;
    Ok(table)
}

/// One point of the rate curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RatePoint {
    pub m: usize,
    pub cc_rate: f64,
    pub iud_rate: f64,
    pub gap: f64,
}

/// Rates of the all-ones-composition CC code of length `m` and of IUD
/// signalling over `m` points, for `m = 1..=m_max`.
pub fn rate_curve(m_max: usize) -> Vec<RatePoint> {
    (1..=m_max)
        .map(|m| {
            let cc = cc_rate(&Composition::uniform(m));
            let iud = (m as f64).log2();
            RatePoint {
                m,
                cc_rate: cc,
                iud_rate: iud,
                gap: iud - cc,
            }
        })
        .collect()
}

pub fn write_rate_curve(points: &[RatePoint], w: impl Write) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for p in points {
        wr.serialize(p)?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn emit_rate_curve(cfg: &RateCurveConfig) -> Result<Vec<RatePoint>> {
    if cfg.m_max == 0 {
        return Err(Error::config("m_max", "must be positive"));
    }
    let points = rate_curve(cfg.m_max);
    let f = fs::File::create(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    write_rate_curve(&points, f)?;
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::RATE_GAP_LIMIT;

    #[test]
    fn rate_points() {
        let c = rate_curve(1024);
        assert_eq!(c[0].cc_rate, 0.0);
        assert_eq!(c[63].iud_rate, 6.0);
        assert!((c[170].cc_rate - 6.0).abs() < 0.01);
        assert!((c[1023].gap - RATE_GAP_LIMIT).abs() < 0.01);
        // The gap grows towards its limit.
        assert!(c.windows(2).all(|w| w[1].gap >= w[0].gap));
        let mut buf = Vec::new();
        write_rate_curve(&c[..2], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("m,cc_rate,iud_rate,gap\n1,0.0,0.0,0.0\n"));
    }

    #[test]
    fn chi_table_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ChiTableConfig {
            j_max: 3,
            channels_m: 1,
            output: dir.path().join("chi.csv"),
            ..ChiTableConfig::fig1()
        };
        let t = emit_chi_table(&cfg).unwrap();
        let back = PerturbTable::read_csv(fs::File::open(&cfg.output).unwrap(), t.z()).unwrap();
        assert_eq!(back, t);
    }
}
