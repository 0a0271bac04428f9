//! Periodic `n x n` grid on `[-L, L]^2` and complex fields sampled on it.
//!
//! Sample `(i, j)` sits at `x = (-L + i h, -L + j h)` with `h = 2L / n`, stored
//! row-major (`data[i * n + j]`). In frequency space the same index carries
//! `xi = (pi / L) * (wrap(i), wrap(j))` with `wrap` mapping `0..n` onto
//! `-n/2..n/2`.
//!
//! The transforms are scaled so that frequency samples approximate the
//! continuous Fourier integral `∫ f(x) e^{-i xi.x} dx`: the forward map carries
//! the quadrature weight `h^2` and the inverse carries the frequency cell
//! `(pi/L)^2 / (2 pi)^2`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

/// Half-width of the computational box used throughout the experiments.
pub const DEFAULT_HALF_WIDTH: f64 = 2.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n must be even and at least 8, got {n}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        Ok(Self { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Spacing of the frequency lattice, `pi / L`.
    pub fn freq_step(&self) -> f64 {
        PI / self.half_width
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest frequency magnitude along an axis, `pi n / (2L)`.
    pub fn nyquist(&self) -> f64 {
        self.freq_step() * (self.n / 2) as f64
    }

    pub fn wrap(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Index of a signed frequency number, inverse of [`GridSpec::wrap`].
    pub fn unwrap(&self, p: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if p < -half || p >= half {
            return None;
        }
        Some(p.rem_euclid(self.n as i64) as usize)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        [self.coord(i), self.coord(j)]
    }

    pub fn freq(&self, i: usize, j: usize) -> Vec2 {
        let s = self.freq_step();
        [s * self.wrap(i) as f64, s * self.wrap(j) as f64]
    }

    /// Index of the frequency `-xi` for the frequency at `(i, j)`.
    pub fn negate_index(&self, i: usize, j: usize) -> (usize, usize) {
        ((self.n - i) % self.n, (self.n - j) % self.n)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Iterator over `(i, j)` in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).map(move |j| (i, j)))
    }

    /// Grid with `factor` times as many points on the same box.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.n * factor, self.half_width)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "n={} L={} vs n={} L={}",
                self.n, self.half_width, other.n, other.half_width
            )));
        }
        Ok(())
    }
}

/// Builds a grid with `n` points per axis on `[-L, L]^2`.
pub fn make_grid(n: usize, half_width: f64) -> Result<GridSpec> {
    GridSpec::new(n, half_width)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Physical,
    Frequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: GridSpec,
    space: Space,
    data: Vec<Complex64>,
}

impl Field {
    pub fn new(spec: GridSpec, space: Space, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} samples, grid needs {}",
                data.len(),
                spec.len()
            )));
        }
        Ok(Self { spec, space, data })
    }

    pub fn zeros(spec: GridSpec, space: Space) -> Self {
        Self {
            spec,
            space,
            data: vec![Complex64::new(0.0, 0.0); spec.len()],
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(spec: GridSpec, f: impl Fn(Vec2) -> Complex64) -> Self {
        let data = spec.indices().map(|(i, j)| f(spec.point(i, j))).collect();
        Self {
            spec,
            space: Space::Physical,
            data,
        }
    }

    pub fn from_real(spec: GridSpec, f: impl Fn(Vec2) -> f64) -> Self {
        Self::from_fn(spec, |x| Complex64::new(f(x), 0.0))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.spec.index(i, j)]
    }

    pub fn expect_space(&self, expected: Space) -> Result<()> {
        if self.space != expected {
            return Err(Error::SpaceMismatch {
                expected,
                found: self.space,
            });
        }
        Ok(())
    }

    pub fn to_freq(&self) -> Result<Field> {
        Transform::new(self.spec).to_freq(self)
    }

    pub fn to_phys(&self) -> Result<Field> {
        Transform::new(self.spec).to_phys(self)
    }

    pub fn scale(&self, a: Complex64) -> Field {
        self.map(|z| z * a)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            spec: self.spec,
            space: self.space,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid and in the same space.
    pub fn zip_with(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        self.spec.ensure_same(&other.spec)?;
        other.expect_space(self.space)?;
        Ok(Field {
            spec: self.spec,
            space: self.space,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Discrete L2 norm. Physical fields use the weight `h^2`, frequency fields
    /// the frequency cell `(pi/L)^2 / (2 pi)^2`, so both represent the same
    /// continuous norm.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        self.cell_weight().sqrt() * sum.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Field of real parts.
    pub fn real_part(&self) -> Field {
        self.map(|z| Complex64::new(z.re, 0.0))
    }

    /// Field of imaginary parts, stored as real values.
    pub fn imag_part(&self) -> Field {
        self.map(|z| Complex64::new(z.im, 0.0))
    }

    fn cell_weight(&self) -> f64 {
        match self.space {
            Space::Physical => self.spec.spacing().powi(2),
            Space::Frequency => 1.0 / (4.0 * self.spec.half_width.powi(2)),
        }
    }

    /// Writes the field as CSV with header `i,j,x1,x2,re,im`. Frequency fields
    /// write `xi` in the coordinate columns.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::with_capacity(self.data.len() * 100);
        out.push_str("i,j,x1,x2,re,im\n");
        for (i, j) in self.spec.indices() {
            let c = match self.space {
                Space::Physical => self.spec.point(i, j),
                Space::Frequency => self.spec.freq(i, j),
            };
            let z = self.get(i, j);
            writeln!(
                out,
                "{i},{j},{},{},{},{}",
                fmt_f64(c[0]),
                fmt_f64(c[1]),
                fmt_f64(z.re),
                fmt_f64(z.im)
            )
            .expect("writing to a String cannot fail");
        }
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(out.as_bytes())?;
        file.flush()?;
        Ok(())
    }

    /// Reads a field written by [`Field::write_csv`]. The grid size comes from
    /// the row count; the half-width and space from the coordinate columns.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Field> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::Missing(path.to_path_buf()));
        }
        let mut reader = csv::Reader::from_path(path)?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if header != ["i", "j", "x1", "x2", "re", "im"] {
            return Err(Error::format(path, format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::format(path, format!("column {k}: {e}")))
            };
            let idx = |k: usize| -> Result<usize> {
                rec[k]
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::format(path, format!("column {k}: {e}")))
            };
            rows.push((idx(0)?, idx(1)?, parse(2)?, parse(3)?, parse(4)?, parse(5)?));
        }
        let n = (rows.len() as f64).sqrt().round() as usize;
        if n * n != rows.len() || n < 8 {
            return Err(Error::format(path, format!("{} rows is not a square grid", rows.len())));
        }
        // Physical files start at (-L, -L); frequency files start at xi = 0.
        let first = rows[0];
        let (space, half_width) = if first.2 < 0.0 {
            (Space::Physical, -first.2)
        } else {
            let step = rows
                .get(n)
                .map(|r| r.2)
                .filter(|s| *s > 0.0)
                .ok_or_else(|| Error::format(path, "cannot infer frequency step"))?;
            (Space::Frequency, PI / step)
        };
        let spec = GridSpec::new(n, half_width)
            .map_err(|e| Error::format(path, e.to_string()))?;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        let mut seen = vec![false; n * n];
        for (i, j, _, _, re, im) in rows {
            if i >= n || j >= n {
                return Err(Error::format(path, format!("index ({i},{j}) out of range")));
            }
            let k = spec.index(i, j);
            if seen[k] {
                return Err(Error::format(path, format!("duplicate index ({i},{j})")));
            }
            seen[k] = true;
            data[k] = Complex64::new(re, im);
        }
        Field::new(spec, space, data)
    }
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reusable 2D FFT plans for one grid size. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct Transform {
    spec: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("spec", &self.spec).finish()
    }
}

impl Transform {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            spec,
            forward: planner.plan_fft_forward(spec.n),
            inverse: planner.plan_fft_inverse(spec.n),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Unnormalized forward 2D DFT in place.
    pub fn forward_raw(&self, data: &mut [Complex64]) {
        self.run_2d(&self.forward, data);
    }

    /// Unnormalized inverse 2D DFT in place.
    pub fn inverse_raw(&self, data: &mut [Complex64]) {
        self.run_2d(&self.inverse, data);
    }

    fn run_2d(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.spec.n;
        debug_assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
    }

    pub fn to_freq(&self, f: &Field) -> Result<Field> {
        f.expect_space(Space::Physical)?;
        self.spec.ensure_same(&f.spec)?;
        let mut data = f.data.clone();
        self.forward_raw(&mut data);
        let h2 = self.spec.spacing().powi(2);
        apply_checkerboard(&mut data, self.spec.n, h2);
        Field::new(self.spec, Space::Frequency, data)
    }

    pub fn to_phys(&self, f: &Field) -> Result<Field> {
        f.expect_space(Space::Frequency)?;
        self.spec.ensure_same(&f.spec)?;
        let mut data = f.data.clone();
        apply_checkerboard(&mut data, self.spec.n, 1.0);
        self.inverse_raw(&mut data);
        let cell = 1.0 / (4.0 * self.spec.half_width.powi(2));
        data.iter_mut().for_each(|z| *z *= cell);
        Field::new(self.spec, Space::Physical, data)
    }
}

/// Multiplies sample `(i, j)` by `scale * (-1)^(i+j)`, the phase of the `-L`
/// origin shift.
fn apply_checkerboard(data: &mut [Complex64], n: usize, scale: f64) {
    for (k, z) in data.iter_mut().enumerate() {
        let (i, j) = (k / n, k % n);
        let s = if (i + j) % 2 == 0 { scale } else { -scale };
        *z *= s;
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Discrete surrogate of the `W^{alpha,2}` norm: `sum <xi>^{2 alpha} |F(xi)|^2`
/// weighted by the frequency cell. Physical fields are transformed first.
pub fn sobolev_norm(f: &Field, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be non-negative, got {alpha}")));
    }
    let freq = match f.space {
        Space::Physical => f.to_freq()?,
        Space::Frequency => f.clone(),
    };
    let spec = freq.spec;
    let sum: f64 = spec
        .indices()
        .map(|(i, j)| {
            let xi = spec.freq(i, j);
            let weight = (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).powf(alpha);
            weight * freq.get(i, j).norm_sqr()
        })
        .sum();
    Ok((sum / (4.0 * spec.half_width.powi(2))).sqrt())
}

/// Plane wave `e^{i k d.x}` on the grid, built from two 1D factors.
pub fn plane_wave(spec: &GridSpec, k: f64, direction: Vec2) -> Vec<Complex64> {
    let n = spec.n;
    let ax: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(1.0, k * direction[0] * spec.coord(i)))
        .collect();
    let ay: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, k * direction[1] * spec.coord(j)))
        .collect();
    let mut out = Vec::with_capacity(n * n);
    for a in &ax {
        out.extend(ay.iter().map(|b| a * b));
    }
    out
}
