//! Bessel functions `J0, J1, Y0, Y1` and Hankel functions `H0^(1), H1^(1)` of
//! real argument.
//!
//! Ascending series up to `x = 12`, Hankel asymptotic expansions (truncated at
//! the smallest term) beyond. Both regimes are accurate to about `1e-12`
//! absolute near the seam.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Switchover between the ascending series and the asymptotic expansion.
pub const SERIES_LIMIT: f64 = 12.0;

pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("bessel_j needs x >= 0, got {x}")));
    }
    match order {
        0 => Ok(j0(x)),
        1 => Ok(j1(x)),
        _ => Err(Error::Domain(format!("unsupported Bessel order {order}"))),
    }
}

pub fn bessel_y(order: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("bessel_y needs x > 0, got {x}")));
    }
    match order {
        0 => Ok(y0(x)),
        1 => Ok(y1(x)),
        _ => Err(Error::Domain(format!("unsupported Bessel order {order}"))),
    }
}

/// Outgoing Hankel function `H_order^(1)(x) = J_order(x) + i Y_order(x)`.
pub fn hankel1(order: u32, x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("hankel1 needs x > 0, got {x}")));
    }
    match order {
        0 => Ok(h0(x)),
        1 => Ok(h1(x)),
        _ => Err(Error::Domain(format!("unsupported Hankel order {order}"))),
    }
}

/// `J0(x)` for `x >= 0`; negative input is reflected (`J0` is even).
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        j0_series(x)
    } else {
        asymptotic(0, x).0
    }
}

/// `J1(x)`; odd in `x`.
pub fn j1(x: f64) -> f64 {
    if x < 0.0 {
        return -j1(-x);
    }
    if x <= SERIES_LIMIT {
        j1_series(x)
    } else {
        asymptotic(1, x).0
    }
}

/// `Y0(x)` for `x > 0`.
pub fn y0(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        y0_series(x)
    } else {
        asymptotic(0, x).1
    }
}

/// `Y1(x)` for `x > 0`.
pub fn y1(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        y1_series(x)
    } else {
        asymptotic(1, x).1
    }
}

pub fn h0(x: f64) -> Complex64 {
    if x <= SERIES_LIMIT {
        Complex64::new(j0_series(x), y0_series(x))
    } else {
        let (j, y) = asymptotic(0, x);
        Complex64::new(j, y)
    }
}

pub fn h1(x: f64) -> Complex64 {
    if x <= SERIES_LIMIT {
        Complex64::new(j1_series(x), y1_series(x))
    } else {
        let (j, y) = asymptotic(1, x);
        Complex64::new(j, y)
    }
}

const SERIES_TERMS: usize = 80;

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..SERIES_TERMS {
        let kf = k as f64;
        term *= -q / (kf * kf);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn j1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..SERIES_TERMS {
        let kf = k as f64;
        term *= -q / (kf * (kf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

// Y0(x) = (2/pi) [ (ln(x/2) + gamma) J0(x) + sum_{k>=1} (-1)^{k+1} H_k (x^2/4)^k / (k!)^2 ]
fn y0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..SERIES_TERMS {
        let kf = k as f64;
        term *= -q / (kf * kf);
        harmonic += 1.0 / kf;
        let t = -term * harmonic;
        sum += t;
        if t.abs() < 1e-17 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0_series(x) + sum)
}

// Y1(x) = -2/(pi x) + (2/pi) ln(x/2) J1(x)
//         - (1/pi) sum_{k>=0} (-1)^k [psi(k+1) + psi(k+2)] (x/2)^{2k+1} / (k! (k+1)!)
fn y1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    // psi(1) + psi(2) = -2 gamma + 1
    let mut harmonic_k = 0.0;
    let mut harmonic_k1 = 1.0;
    let mut sum = term * (harmonic_k + harmonic_k1 - 2.0 * EULER_GAMMA);
    for k in 1..SERIES_TERMS {
        let kf = k as f64;
        term *= -q / (kf * (kf + 1.0));
        harmonic_k += 1.0 / kf;
        harmonic_k1 += 1.0 / (kf + 1.0);
        let t = term * (harmonic_k + harmonic_k1 - 2.0 * EULER_GAMMA);
        sum += t;
        if t.abs() < 1e-17 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    -2.0 / (PI * x) + 2.0 / PI * (0.5 * x).ln() * j1_series(x) - sum / PI
}

/// Hankel asymptotic expansion, returning `(J_order(x), Y_order(x))`.
fn asymptotic(order: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (order * order) as f64;
    let mut a = 1.0_f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut smallest = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() >= smallest {
            break;
        }
        smallest = a.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            // k = 1, 3, 5, ... -> +, -, +, ...
            let s = if ((k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            q += s * a;
        } else {
            p += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * order as f64) * PI - FRAC_PI_4;
    let amp = (2.0 / (PI * x)).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}
