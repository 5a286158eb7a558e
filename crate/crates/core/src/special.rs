//! Sine integral and the closed-form antiderivative of `sinc^2`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Normalized sinc, `sin(pi u) / (pi u)`.
#[inline]
pub fn sinc(u: f64) -> f64 {
    let x = PI * u;
    if x.abs() < 1e-5 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Sine integral `Si(x) = int_0^x sin(t)/t dt`.
///
/// Power series for `|x| <= 4`; beyond that the auxiliary functions
/// `f`, `g` with `Si = pi/2 - f cos x - g sin x`, taken from the continued
/// fraction of `e^{ix} E1(ix) = g - i f` (or their asymptotic series once
/// `|x| >= 40`, where the truncation error is below 1e-15).
pub fn si(x: f64) -> f64 {
    if x < 0.0 {
        return -si(-x);
    }
    if x <= 4.0 {
        return si_series(x);
    }
    let (f, g) = if x >= 40.0 {
        aux_asymptotic(x)
    } else {
        aux_continued_fraction(x)
    };
    let (s, c) = x.sin_cos();
    FRAC_PI_2 - f * c - g * s
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x; // x^(2n+1) / (2n+1)!
    let mut sum = x;
    // |x| <= 4 needs at most ~25 terms.
    for n in 1..60 {
        let k = (2 * n) as f64;
        term *= -x2 / (k * (k + 1.0));
        let add = term / (k + 1.0);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn aux_asymptotic(x: f64) -> (f64, f64) {
    let y = 1.0 / (x * x);
    // f ~ (1/x)(1 - 2!/x^2 + 4!/x^4 - ...), g ~ (1/x^2)(1 - 3!/x^2 + 5!/x^4 - ...)
    let mut f = 0.0;
    let mut g = 0.0;
    let mut tf = 1.0;
    let mut tg = 1.0;
    for k in 0..10 {
        f += tf;
        g += tg;
        let n = 2 * k as u32 + 2;
        tf *= -(((n - 1) * n) as f64) * y;
        tg *= -((n * (n + 1)) as f64) * y;
    }
    (f / x, g * y)
}

fn aux_continued_fraction(x: f64) -> (f64, f64) {
    // Modified Lentz evaluation of 1/(1+ix - 1/(3+ix - 4/(5+ix - ...))).
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..1000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-15 {
            break;
        }
    }
    (-h.im, h.re)
}

/// `int sinc^2(a x + b) dx = Si(2 pi u) / (a pi) - (u / a) sinc^2(u)`, `u = a x + b`.
pub fn sincsq_antiderivative(a: f64, b: f64, x: f64) -> Result<f64> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::invalid("a", "antiderivative needs finite nonzero slope"));
    }
    let u = a * x + b;
    let s = sinc(u);
    Ok(si(2.0 * PI * u) / (a * PI) - u / a * s * s)
}
