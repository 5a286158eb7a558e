//! Dominant XPM coefficients `chi_{k,j}(z) = C(k, j, k, j, 0, 0, z)` in closed
//! form: an outer frequency quadrature over `[k-1, k+1]` of the
//! spatial integral, which itself reduces to sine integrals.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::special::{sinc, sincsq_antiderivative};

/// Below this slope the spatial integrand is treated as constant.
const DEGENERATE_SLOPE: f64 = 1e-12;
/// Below this total argument sweep `|a| z` a short Gauss rule replaces the
/// antiderivative difference, which would cancel catastrophically.
const SMALL_SWEEP: f64 = 1e-3;

/// `s(j, k, z, f) = int_0^z sinc^2((j - 4 pi f z') (1 - |f - k|)) dz'`.
pub fn spatial_integral(j: f64, k: f64, z: f64, f: f64) -> f64 {
    let w = 1.0 - (f - k).abs();
    if w <= 0.0 {
        return 0.0;
    }
    let a = -4.0 * PI * f * w;
    let b = j * w;
    if a.abs() < DEGENERATE_SLOPE {
        let s = sinc(b);
        return z * s * s;
    }
    if (a * z).abs() < SMALL_SWEEP {
        // The argument moves by less than 1e-3 over the whole interval.
        const X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        return X
            .iter()
            .zip(W)
            .map(|(x, w)| {
                let s = sinc(a * 0.5 * z * (x + 1.0) + b);
                w * s * s
            })
            .sum::<f64>()
            * 0.5
            * z;
    }
    let hi = sincsq_antiderivative(a, b, z).expect("nonzero slope");
    let lo = sincsq_antiderivative(a, b, 0.0).expect("nonzero slope");
    hi - lo
}

/// Quadrature tolerance used for the outer frequency integral.
pub fn default_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-10,
        rel: 1e-12,
        max_intervals: 50_000,
    }
}

/// `chi_{k,j}(z) = -2i int_{k-1}^{k+1} (1 - |f-k|)^2 s(j, k, z, f) df`.
///
/// Evaluated on the canonical representative of `{(k, j), (-k, -j)}` so
/// the symmetry `chi_{k,j} = chi_{-k,-j}` holds bit for bit.
pub fn chi(k: i64, j: i64, z: f64) -> Result<Complex64> {
    chi_with(k, j, z, default_tolerance())
}

pub fn chi_with(k: i64, j: i64, z: f64, tol: Tolerance) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::invalid("z", "must be finite"));
    }
    let (k, j) = canonical(k, j);
    let (kf, jf) = (k as f64, j as f64);
    let mut breaks = vec![kf, 0.0];
    if z != 0.0 {
        // Where the collision point j = 4 pi f z' reaches the fiber end.
        breaks.push(jf / (4.0 * PI * z));
    }
    let est = quad::integrate(
        |f| {
            let w = 1.0 - (f - kf).abs();
            w * w * spatial_integral(jf, kf, z, f)
        },
        kf - 1.0,
        kf + 1.0,
        &breaks,
        tol,
    )?;
    Ok(Complex64::new(0.0, -2.0 * est.value))
}

/// Representative with `k > 0`, or `k == 0` and `j >= 0`.
pub fn canonical(k: i64, j: i64) -> (i64, i64) {
    if k < 0 || (k == 0 && j < 0) {
        (-k, -j)
    } else {
        (k, j)
    }
}

/// `chi_{k,j}(z)` for `k in [-M, M]` and `j in [j_min, j_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbTable {
    z: f64,
    m_half: i64,
    j_min: i64,
    j_max: i64,
    /// Imaginary parts, row-major in `(k + M, j - j_min)`.
    im: Vec<f64>,
}

impl PerturbTable {
    /// Evaluates every entry (in parallel, output order fixed).
    pub fn build(z: f64, m_half: usize, j_min: i64, j_max: i64) -> Result<Self> {
        if j_min > j_max {
            return Err(Error::invalid("j_range", format!("empty range {j_min}..={j_max}")));
        }
        let m = m_half as i64;
        let mut keys: Vec<(i64, i64)> = (-m..=m)
            .flat_map(|k| (j_min..=j_max).map(move |j| canonical(k, j)))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let values: Vec<((i64, i64), f64)> = keys
            .par_iter()
            .map(|&(k, j)| chi(k, j, z).map(|c| ((k, j), c.im)))
            .collect::<Result<_>>()?;
        let lookup: HashMap<(i64, i64), f64> = values.into_iter().collect();
        let im = (-m..=m)
            .flat_map(|k| (j_min..=j_max).map(move |j| (k, j)))
            .map(|(k, j)| lookup[&canonical(k, j)])
            .collect();
        Ok(Self {
            z,
            m_half: m,
            j_min,
            j_max,
            im,
        })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn m_half(&self) -> usize {
        self.m_half as usize
    }

    pub fn j_range(&self) -> std::ops::RangeInclusive<i64> {
        self.j_min..=self.j_max
    }

    pub fn contains(&self, k: i64, j: i64) -> bool {
        k.abs() <= self.m_half && (self.j_min..=self.j_max).contains(&j)
    }

    fn offset(&self, k: i64, j: i64) -> usize {
        let width = (self.j_max - self.j_min + 1) as usize;
        (k + self.m_half) as usize * width + (j - self.j_min) as usize
    }

    pub fn get(&self, k: i64, j: i64) -> Option<Complex64> {
        self.contains(k, j)
            .then(|| Complex64::new(0.0, self.im[self.offset(k, j)]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let m = self.m_half;
        (-m..=m)
            .flat_map(move |k| (self.j_min..=self.j_max).map(move |j| (k, j)))
            .map(move |(k, j)| (k, j, Complex64::new(0.0, self.im[self.offset(k, j)])))
    }

    /// CSV with columns `k,j,im_chi`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "j", "im_chi"])?;
        for (k, j, c) in self.iter() {
            out.write_record([k.to_string(), j.to_string(), format!("{:.17e}", c.im)])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads a table written by [`PerturbTable::write_csv`]; `z` is not
    /// stored in the file.
    pub fn read_csv(r: impl Read, z: f64) -> Result<Self> {
        let mut rows: Vec<(i64, i64, f64)> = Vec::new();
        for rec in csv::Reader::from_reader(r).records() {
            let rec = rec?;
            let parse_err = |field: &str| Error::config(field.to_string(), "unparsable value in chi table");
            let k: i64 = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("k"))?;
            let j: i64 = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("j"))?;
            let v: f64 = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("im_chi"))?;
            rows.push((k, j, v));
        }
        if rows.is_empty() {
            return Err(Error::config("chi table", "no rows"));
        }
        let m = rows.iter().map(|r| r.0.abs()).max().unwrap_or(0);
        let j_min = rows.iter().map(|r| r.1).min().unwrap_or(0);
        let j_max = rows.iter().map(|r| r.1).max().unwrap_or(0);
        let mut table = Self {
            z,
            m_half: m,
            j_min,
            j_max,
            im: vec![f64::NAN; ((2 * m + 1) * (j_max - j_min + 1)) as usize],
        };
        for (k, j, v) in rows {
            let o = table.offset(k, j);
            table.im[o] = v;
        }
        if table.im.iter().any(|v| v.is_nan()) {
            return Err(Error::config("chi table", "table is not a full (k, j) rectangle"));
        }
        Ok(table)
    }
}
