//! Fixed-angle inverse scattering for the 2D Schrödinger operator.
//!
//! The crate simulates far-field data `u_inf(theta, ±theta0, k)` for a compactly
//! supported potential and recovers the potential with a fixed-point iteration
//! built on a truncated Born series, alongside the older iteration that
//! re-solves the Lippmann-Schwinger equation at every frequency.
//!
//! Modules, bottom-up:
//!
//! * [`grid`]: periodic grid on `[-L, L]^2`, complex fields, quadrature-scaled DFTs.
//! * [`specfun`]: Bessel and Hankel functions of order 0 and 1.
//! * [`resolvent`]: outgoing resolvent of the Laplacian via a truncated kernel.
//! * [`scene`]: test potentials and the smooth cutoff.
//! * [`forward`]: Lippmann-Schwinger solver, far field, dataset generation and IO.
//! * [`inversion`]: Ewald map, Born approximation, Born-series operators and recovery.
//! * [`lab`]: error metric, experiment sweeps, CSV reports and SVG plots.

pub mod error;
pub mod forward;
pub mod grid;
pub mod inversion;
pub mod lab;
pub mod resolvent;
pub mod scene;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Wavenumbers, radii and coordinates are plain `f64`; points and directions are pairs.
pub type Vec2 = [f64; 2];
