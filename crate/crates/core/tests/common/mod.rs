//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use scatlab::grid::{Field, GridSpec};
use scatlab::specfun;
use scatlab::{Complex64, Vec2};

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(points: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(points).expect("positive degree"));
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.iter().map(|&(x, w)| (mid + half * x, half * w)).collect()
}

/// Radial panels `[0, r_max]`, geometrically graded toward the origin where
/// the kernel has its logarithmic singularity.
pub fn graded_panels(r_max: f64, levels: usize, uniform: usize) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0];
    let first = r_max / uniform as f64;
    for l in (0..levels).rev() {
        edges.push(first * 0.5f64.powi(l as i32 + 1));
    }
    for p in 1..=uniform {
        edges.push(first * p as f64);
    }
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Outgoing fundamental solution of `Δ + k²`, the kernel whose Fourier
/// multiplier is `1 / (k² - |ξ|²)`.
pub fn green(k: f64, r: f64) -> Complex64 {
    Complex64::new(0.0, -0.25) * specfun::h0(k * r)
}

/// `∫_{|y| <= rho} G(|y|) f(x - y) dy` by polar quadrature centred at `x`.
/// `reach` bounds the radius beyond which `f(x - y)` vanishes.
pub fn truncated_convolution(f: &dyn Fn(Vec2) -> f64, x: Vec2, k: f64, rho: f64, reach: f64) -> Complex64 {
    let r_max = rho.min(reach);
    let angles = 192;
    let mut total = Complex64::new(0.0, 0.0);
    for (a, b) in graded_panels(r_max, 30, 24) {
        for (r, w) in gauss_legendre(16, a, b) {
            let mut ring = 0.0;
            for t in 0..angles {
                let phi = 2.0 * PI * t as f64 / angles as f64;
                ring += f([x[0] - r * phi.cos(), x[1] - r * phi.sin()]);
            }
            ring *= 2.0 * PI / angles as f64;
            total += green(k, r) * (w * r * ring);
        }
    }
    total
}

/// Fourier transform of the truncated kernel, `2π ∫_0^rho G(r) J0(s r) r dr`.
pub fn symbol_quadrature(s: f64, k: f64, rho: f64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (a, b) in graded_panels(rho, 30, 64) {
        for (r, w) in gauss_legendre(20, a, b) {
            total += green(k, r) * (w * r * specfun::j0(s * r));
        }
    }
    total * (2.0 * PI)
}

/// `C^∞` bump of the given radius and unit height at its centre.
pub fn bump(radius: f64, center: Vec2) -> impl Fn(Vec2) -> f64 {
    move |x: Vec2| {
        let t = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (radius * radius);
        if t >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - t)).exp()
        }
    }
}

/// Dense periodic convolution `h² Σ_z K(y - z) g(z)` with `K` sampled on the grid.
pub fn dense_periodic_convolution(kernel: &Field, g: &[Complex64]) -> Vec<Complex64> {
    let spec = *kernel.spec();
    let n = spec.n();
    let h2 = spec.spacing().powi(2);
    let mut out = vec![Complex64::new(0.0, 0.0); spec.len()];
    for (i, j) in spec.indices() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in spec.indices() {
            let gv = g[spec.index(a, b)];
            if gv.norm_sqr() == 0.0 {
                continue;
            }
            // Grid offsets wrap periodically; the kernel is centred at index n/2.
            let di = (i + n + n / 2 - a) % n;
            let dj = (j + n + n / 2 - b) % n;
            acc += kernel.get(di, dj) * gv;
        }
        out[spec.index(i, j)] = acc * h2;
    }
    out
}

/// Plane wave `e^{i k d.x}` evaluated pointwise, independent of the library helper.
pub fn wave(spec: &GridSpec, k: f64, d: Vec2) -> Vec<Complex64> {
    spec.indices()
        .map(|(i, j)| {
            let x = spec.point(i, j);
            Complex64::from_polar(1.0, k * (d[0] * x[0] + d[1] * x[1]))
        })
        .collect()
}

pub fn rel_diff(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Polynomial bump `(1 - |x - c|^2 / r^2)^p`, `C^{p-1}` across its edge.
pub fn poly_bump(radius: f64, power: i32, center: Vec2) -> impl Fn(Vec2) -> f64 {
    move |x: Vec2| {
        let t = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (radius * radius);
        if t >= 1.0 {
            0.0
        } else {
            (1.0 - t).powi(power)
        }
    }
}
