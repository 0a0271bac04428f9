//! Outgoing resolvent `R_k = (Δ + k^2 + i0)^{-1}` on the periodic grid.
//!
//! The kernel `-(i/4) H0^(1)(k|x|)` is truncated to `|x| <= rho`. Its Fourier
//! transform is known in closed form,
//!
//! ```text
//! sigma(s) = [1 + (i pi rho / 2)(s J1(s rho) H0(k rho) - k J0(s rho) H1(k rho))] / (k^2 - s^2),
//! ```
//!
//! so `R_k f` is computed as `to_phys(sigma * to_freq(f))`. For `f` supported in
//! `B(0, a)` the result is exact (up to aliasing of `f`) on `|x| <= rho - a`.
//!
//! The numerator only depends on `k` through `H0(k rho)` and `H1(k rho)`, so
//! [`SymbolBasis`] tabulates `J0(|xi| rho)` and `|xi| J1(|xi| rho)` once per
//! grid and every symbol after that costs two Hankel evaluations.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Space, Transform};
use crate::specfun;

/// Default truncation radius: the half-width of the experiment domain.
pub const DEFAULT_TRUNCATION: f64 = 2.1;

/// Relative distance `| |xi| - k |` below which the Taylor branch is used.
pub const RESONANCE_WINDOW: f64 = 1e-6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Closed-form symbol at `|xi| = s`, switching to the Taylor expansion around
/// `s = k` where the generic formula is `0/0`.
pub fn symbol_value(s: f64, k: f64, rho: f64) -> Complex64 {
    let z = k * rho;
    let (h0, h1) = (specfun::h0(z), specfun::h1(z));
    let sr = s * rho;
    generic_or_taylor(s, specfun::j0(sr), s * specfun::j1(sr), k, rho, h0, h1)
}

fn generic_or_taylor(
    s: f64,
    j0_sr: f64,
    s_j1_sr: f64,
    k: f64,
    rho: f64,
    h0: Complex64,
    h1: Complex64,
) -> Complex64 {
    let delta = s - k;
    if delta.abs() < RESONANCE_WINDOW * k.max(1.0) {
        taylor_symbol(delta, k, rho, h0, h1)
    } else {
        generic_symbol(s, j0_sr, s_j1_sr, k, rho, h0, h1)
    }
}

fn generic_symbol(
    s: f64,
    j0_sr: f64,
    s_j1_sr: f64,
    k: f64,
    rho: f64,
    h0: Complex64,
    h1: Complex64,
) -> Complex64 {
    let numerator = 1.0 + I * (0.5 * PI * rho) * (s_j1_sr * h0 - k * j0_sr * h1);
    numerator / ((k - s) * (k + s))
}

/// Symbol at `s = k + delta` from the third-order expansion of the numerator.
pub(crate) fn taylor_symbol(delta: f64, k: f64, rho: f64, h0: Complex64, h1: Complex64) -> Complex64 {
    let z = k * rho;
    let (j0, j1) = (specfun::j0(z), specfun::j1(z));
    // g = N' / (i pi rho / 2) and its first two derivatives, at s = k.
    let g0 = z * (j0 * h0 + j1 * h1);
    let g1 = rho * (j0 - z * j1) * h0 + k * rho * rho * (j0 - j1 / z) * h1;
    let g2 = rho * rho * (-j1 - z * j0) * h0
        + k * rho.powi(3) * (-j1 - j0 / z + 2.0 * j1 / (z * z)) * h1;
    let series = g0 + g1 * (0.5 * delta) + g2 * (delta * delta / 6.0);
    -I * (0.5 * PI * rho) * series / (2.0 * k + delta)
}

/// `k`-independent Bessel tables for one grid and truncation radius.
#[derive(Debug, Clone)]
pub struct SymbolBasis {
    spec: GridSpec,
    rho: f64,
    radius: Vec<f64>,
    j0_table: Vec<f64>,
    s_j1_table: Vec<f64>,
}

impl SymbolBasis {
    pub fn new(spec: GridSpec, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 2.0 * spec.half_width()) {
            return Err(Error::Domain(format!(
                "truncation radius must lie in (0, {}], got {rho}",
                2.0 * spec.half_width()
            )));
        }
        let radius: Vec<f64> = spec
            .indices()
            .map(|(i, j)| {
                let xi = spec.freq(i, j);
                xi[0].hypot(xi[1])
            })
            .collect();
        let j0_table = radius.iter().map(|&s| specfun::j0(s * rho)).collect();
        let s_j1_table = radius.iter().map(|&s| s * specfun::j1(s * rho)).collect();
        Ok(Self {
            spec,
            rho,
            radius,
            j0_table,
            s_j1_table,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn symbol(&self, k: f64) -> Result<ResolventSymbol> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
        }
        let z = k * self.rho;
        let (h0, h1) = (specfun::h0(z), specfun::h1(z));
        let values = (0..self.radius.len())
            .map(|idx| {
                generic_or_taylor(
                    self.radius[idx],
                    self.j0_table[idx],
                    self.s_j1_table[idx],
                    k,
                    self.rho,
                    h0,
                    h1,
                )
            })
            .collect();
        Ok(ResolventSymbol {
            spec: self.spec,
            k,
            rho: self.rho,
            values,
        })
    }
}

/// Fourier multiplier of the truncated outgoing resolvent at one wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSymbol {
    spec: GridSpec,
    k: f64,
    rho: f64,
    values: Vec<Complex64>,
}

impl ResolventSymbol {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Multiplier samples in frequency-field index order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        f.expect_space(Space::Physical)?;
        self.spec.ensure_same(f.spec())?;
        let mut data = f.data().to_vec();
        self.apply_in_place(&mut data, &Transform::new(self.spec));
        Field::new(self.spec, Space::Physical, data)
    }

    /// Applies the resolvent to physical samples in place. The checkerboard
    /// phases and quadrature factors of the scaled transforms cancel, leaving
    /// `ifft(sigma * fft(f)) / n^2`.
    pub fn apply_in_place(&self, data: &mut [Complex64], transform: &Transform) {
        debug_assert_eq!(transform.spec(), &self.spec);
        transform.forward_raw(data);
        let norm = 1.0 / self.spec.len() as f64;
        for (z, s) in data.iter_mut().zip(&self.values) {
            *z *= s * norm;
        }
        transform.inverse_raw(data);
    }
}

/// Symbol of the truncated resolvent kernel for wavenumber `k` and radius `rho`.
pub fn kernel_symbol(spec: &GridSpec, k: f64, rho: f64) -> Result<ResolventSymbol> {
    SymbolBasis::new(*spec, rho)?.symbol(k)
}

pub fn apply_resolvent(symbol: &ResolventSymbol, f: &Field) -> Result<Field> {
    symbol.apply(f)
}
