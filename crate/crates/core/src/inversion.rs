//! Recovery of the potential from fixed-angle far-field data.
//!
//! Every non-degenerate frequency `xi` is reached by exactly one Ewald circle:
//! `xi = k (theta -/+ theta0)` with the sign chosen by the half-plane of `xi`.
//! Treating the far field as Fourier data gives the Born approximation
//! `q_theta0`. The recovery iterates
//!
//! ```text
//! q_{m,1} = 0,    q_{m,l+1} = T_m(q_{m,l}) = phi (q_theta0 - sum_{j=1..m} Q_j(q_{m,l}))
//! ```
//!
//! where `Q_j(q)` is the degree `j + 1` term of the Born series, evaluated at
//! each frequency with that frequency's own `(k, theta)`. No Lippmann-Schwinger
//! solve is needed; [`bcr_recover`] is the older iteration that does one per
//! frequency and per step, kept as the baseline.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{LsOperator, ScatterRecord, ScatteringDataSet, SolverConfig};
use crate::grid::{plane_wave, Field, GridSpec, Space, Transform};
use crate::resolvent::SymbolBasis;
use crate::scene::Cutoff;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaldPoint {
    pub k: f64,
    pub theta: Vec2,
    pub sign: i8,
}

impl EwaldPoint {
    /// Incident direction `sign * theta0`.
    pub fn incident(&self, theta0: Vec2) -> Vec2 {
        let s = f64::from(self.sign);
        [s * theta0[0], s * theta0[1]]
    }

    /// `k (theta - sign theta0)`, which should give back the frequency.
    pub fn frequency(&self, theta0: Vec2) -> Vec2 {
        let inc = self.incident(theta0);
        [self.k * (self.theta[0] - inc[0]), self.k * (self.theta[1] - inc[1])]
    }
}

/// Wavenumber, scattering direction and incidence sign whose Ewald circle
/// passes through `xi`. Frequencies with `xi . theta0 < 0` use `+theta0`.
pub fn ewald_map(xi: Vec2, theta0: Vec2, eps_deg: f64) -> Result<EwaldPoint> {
    let along = xi[0] * theta0[0] + xi[1] * theta0[1];
    let norm2 = xi[0] * xi[0] + xi[1] * xi[1];
    if norm2 == 0.0 || along.abs() < eps_deg || along == 0.0 {
        return Err(Error::Degenerate { xi1: xi[0], xi2: xi[1] });
    }
    let sign: i8 = if along < 0.0 { 1 } else { -1 };
    let k = norm2 / (2.0 * along.abs());
    let s = f64::from(sign);
    let theta = [xi[0] / k + s * theta0[0], xi[1] / k + s * theta0[1]];
    Ok(EwaldPoint { k, theta, sign })
}

/// Data placed on the frequency grid: `u_inf` at every record, zero elsewhere.
pub fn data_spectrum(d: &ScatteringDataSet) -> Field {
    let spec = d.inverse_spec;
    let mut out = Field::zeros(spec, Space::Frequency);
    let data = out.data_mut();
    for r in &d.records {
        data[spec.index(r.i, r.j)] = r.u_inf;
    }
    out
}

/// Born approximation `q_theta0`, the inverse transform of the data spectrum.
/// Kept complex.
pub fn born_from_data(d: &ScatteringDataSet) -> Result<Field> {
    data_spectrum(d).to_phys()
}

/// Evaluates the Born-series operators `Q_j` on one inverse grid.
///
/// Symbols are rebuilt per record from the shared [`SymbolBasis`]; that costs
/// `O(n^2)` plus two Hankel evaluations, below the two FFTs each resolvent
/// application needs, so nothing is cached per wavenumber.
#[derive(Debug, Clone)]
pub struct BornSeries<'a> {
    data: &'a ScatteringDataSet,
    basis: SymbolBasis,
    transform: Transform,
    parallel: bool,
}

impl<'a> BornSeries<'a> {
    pub fn new(data: &'a ScatteringDataSet, rho: f64) -> Result<Self> {
        let basis = SymbolBasis::new(data.inverse_spec, rho)?;
        Ok(Self::with_basis(data, basis))
    }

    pub fn with_basis(data: &'a ScatteringDataSet, basis: SymbolBasis) -> Self {
        Self {
            data,
            transform: Transform::new(data.inverse_spec),
            basis,
            parallel: true,
        }
    }

    pub fn parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn spec(&self) -> &GridSpec {
        &self.data.inverse_spec
    }

    pub fn basis(&self) -> &SymbolBasis {
        &self.basis
    }

    /// `Q_1(xi), ..., Q_m(xi)` at one record.
    fn record_terms(&self, q: &[Complex64], rec: &ScatterRecord, m: usize) -> Result<Vec<Complex64>> {
        let spec = self.spec();
        let h2 = spec.spacing().powi(2);
        let sigma = self.basis.symbol(rec.k)?;
        let incident = rec.incident(self.data.theta0);
        let mut v: Vec<Complex64> = plane_wave(spec, rec.k, incident)
            .iter()
            .zip(q)
            .map(|(w, qv)| w * qv)
            .collect();
        let outgoing = plane_wave(spec, rec.k, [-rec.theta[0], -rec.theta[1]]);
        let mut terms = Vec::with_capacity(m);
        for _ in 0..m {
            sigma.apply_in_place(&mut v, &self.transform);
            v.iter_mut().zip(q).for_each(|(vv, qv)| *vv *= qv);
            let integral: Complex64 = outgoing.iter().zip(&v).map(|(w, vv)| w * vv).sum();
            terms.push(integral * h2);
        }
        Ok(terms)
    }

    /// `Q_1 .. Q_m` at every record, in record order.
    fn all_terms(&self, q: &Field, m: usize) -> Result<Vec<Vec<Complex64>>> {
        q.expect_space(Space::Physical)?;
        self.spec().ensure_same(q.spec())?;
        let qd = q.data();
        if self.parallel {
            self.data
                .records
                .par_iter()
                .map(|r| self.record_terms(qd, r, m))
                .collect()
        } else {
            self.data.records.iter().map(|r| self.record_terms(qd, r, m)).collect()
        }
    }

    fn assemble(&self, values: impl Iterator<Item = Complex64>) -> Field {
        let spec = *self.spec();
        let mut out = Field::zeros(spec, Space::Frequency);
        let data = out.data_mut();
        for (r, v) in self.data.records.iter().zip(values) {
            data[spec.index(r.i, r.j)] = v;
        }
        out
    }

    /// Spectrum of `Q_j(q)` on the recorded frequencies, zero elsewhere.
    pub fn q_hat(&self, q: &Field, j: usize) -> Result<Field> {
        if j == 0 {
            return Err(Error::Domain("Born series order j must be at least 1".into()));
        }
        let terms = self.all_terms(q, j)?;
        Ok(self.assemble(terms.iter().map(|t| t[j - 1])))
    }

    /// Spectra of `Q_1(q), ..., Q_m(q)` from a single sweep.
    pub fn q_hat_terms(&self, q: &Field, m: usize) -> Result<Vec<Field>> {
        let terms = self.all_terms(q, m)?;
        Ok((0..m).map(|j| self.assemble(terms.iter().map(|t| t[j]))).collect())
    }

    /// Spectrum of `sum_{j=1..m} Q_j(q)`.
    pub fn q_hat_sum(&self, q: &Field, m: usize) -> Result<Field> {
        let terms = self.all_terms(q, m)?;
        Ok(self.assemble(terms.iter().map(|t| t.iter().sum())))
    }

    /// `T_m(q) = phi (born - sum_{j<=m} Q_j(q))`.
    pub fn apply_t_m(&self, q: &Field, born: &Field, m: usize, cutoff: &Cutoff) -> Result<Field> {
        if m == 0 {
            return Err(Error::Domain("Born series depth m must be at least 1".into()));
        }
        let correction = self.q_hat_sum(q, m)?.to_phys()?;
        cutoff.apply(&born.sub(&correction)?)
    }
}

pub fn q_hat_operator(q: &Field, j: usize, d: &ScatteringDataSet, basis: &SymbolBasis) -> Result<Field> {
    BornSeries::with_basis(d, basis.clone()).q_hat(q, j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryParams {
    /// Born-series depth.
    pub m: usize,
    /// Number of iterates `q_{m,1} .. q_{m,l_max}`.
    pub l_max: usize,
    /// Stop once `||q_{l+1} - q_l|| / ||q_{l+1}|| < stop_tol`; zero disables.
    pub stop_tol: f64,
    pub cutoff: Cutoff,
    /// Resolvent truncation radius; the dataset's when `None`.
    pub rho: Option<f64>,
    pub parallel: bool,
}

impl RecoveryParams {
    pub fn new(m: usize, l_max: usize, cutoff: Cutoff) -> Self {
        Self {
            m,
            l_max,
            stop_tol: 0.0,
            cutoff,
            rho: None,
            parallel: true,
        }
    }

    fn validate(&self, spec: &GridSpec) -> Result<()> {
        if self.m < 1 || self.l_max < 1 {
            return Err(Error::Domain(format!(
                "need m >= 1 and l_max >= 1, got m = {}, l_max = {}",
                self.m, self.l_max
            )));
        }
        spec.ensure_same(self.cutoff.raster().spec())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecoveryTrace {
    pub iterates: Vec<Field>,
    /// `||q_{l+1} - q_l||_2`, one entry per step.
    pub cauchy_norms: Vec<f64>,
    /// `||Im q_l||_2`, one entry per iterate.
    pub imag_norms: Vec<f64>,
    /// Wall time of each step, in seconds.
    pub step_seconds: Vec<f64>,
    /// Wall time spent before the first step (Born approximation, tables).
    pub setup_seconds: f64,
    /// Per-step count of records whose forward solve failed (baseline only).
    pub solver_failures: Vec<usize>,
}

impl RecoveryTrace {
    pub fn last(&self) -> Option<&Field> {
        self.iterates.last()
    }

    pub fn mean_step_seconds(&self) -> f64 {
        if self.step_seconds.is_empty() {
            return 0.0;
        }
        self.step_seconds.iter().sum::<f64>() / self.step_seconds.len() as f64
    }

    fn push(&mut self, next: Field, seconds: f64) {
        if let Some(prev) = self.iterates.last() {
            let diff = next.sub(prev).expect("iterates share a grid").l2_norm();
            self.cauchy_norms.push(diff);
            self.step_seconds.push(seconds);
        }
        self.imag_norms.push(next.imag_part().l2_norm());
        self.iterates.push(next);
    }
}

pub fn apply_t_m(
    q: &Field,
    born: &Field,
    params: &RecoveryParams,
    series: &BornSeries<'_>,
) -> Result<Field> {
    series.apply_t_m(q, born, params.m, &params.cutoff)
}

/// Runs the fixed-point iteration `q_{m,l+1} = T_m(q_{m,l})` from `q_{m,1} = 0`.
pub fn recover(d: &ScatteringDataSet, params: &RecoveryParams) -> Result<RecoveryTrace> {
    let spec = d.inverse_spec;
    params.validate(&spec)?;
    let start = Instant::now();
    let series = BornSeries::new(d, params.rho.unwrap_or(d.rho))?.parallel(params.parallel);
    let born = born_from_data(d)?;
    let mut trace = RecoveryTrace {
        setup_seconds: start.elapsed().as_secs_f64(),
        ..RecoveryTrace::default()
    };
    trace.push(Field::zeros(spec, Space::Physical), 0.0);
    while trace.iterates.len() < params.l_max {
        let t = Instant::now();
        let current = trace.iterates.last().expect("at least one iterate");
        let next = series.apply_t_m(current, &born, params.m, &params.cutoff)?;
        trace.push(next, t.elapsed().as_secs_f64());
        if params.stop_tol > 0.0 {
            let step = *trace.cauchy_norms.last().expect("a step was taken");
            let size = trace.iterates.last().expect("just pushed").l2_norm();
            if size > 0.0 && step / size < params.stop_tol {
                break;
            }
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcrParams {
    /// Number of iterates `q_1 .. q_iterations`.
    pub iterations: usize,
    pub cutoff: Cutoff,
    pub solver: SolverConfig,
    pub rho: Option<f64>,
    pub parallel: bool,
}

impl BcrParams {
    pub fn new(iterations: usize, tol: f64, cutoff: Cutoff) -> Self {
        Self {
            iterations,
            cutoff,
            solver: SolverConfig::with_tol(tol),
            rho: None,
            parallel: true,
        }
    }
}

/// Baseline iteration: `q_1 = phi q_theta0` and
/// `q_{n+1}^(xi) = u_inf(xi) - ∫ e^{-i k theta.y} q_n(y) u_s^n(y) dy`, with
/// `u_s^n` the scattered field of `q_n` at the record's `(k, sign theta0)`.
/// The correction uses the scattered direction `theta(xi)` in the exponent.
pub fn bcr_recover(d: &ScatteringDataSet, params: &BcrParams) -> Result<RecoveryTrace> {
    let spec = d.inverse_spec;
    if params.iterations < 1 {
        return Err(Error::Domain("need at least one iteration".into()));
    }
    spec.ensure_same(params.cutoff.raster().spec())?;
    let start = Instant::now();
    let basis = SymbolBasis::new(spec, params.rho.unwrap_or(d.rho))?;
    let transform = Transform::new(spec);
    let born = born_from_data(d)?;
    let mut trace = RecoveryTrace::default();
    trace.push(params.cutoff.apply(&born)?, 0.0);
    trace.setup_seconds = start.elapsed().as_secs_f64();
    let h2 = spec.spacing().powi(2);

    while trace.iterates.len() < params.iterations {
        let t = Instant::now();
        let q = trace.iterates.last().expect("at least one iterate").clone();
        let qd = q.data();
        let record_value = |r: &ScatterRecord| -> Option<Complex64> {
            let sigma = basis.symbol(r.k).ok()?;
            let op = LsOperator::new(qd, &sigma, transform.clone());
            let incident = r.incident(d.theta0);
            let wave = plane_wave(&spec, r.k, incident);
            let mut rhs = vec![Complex64::new(0.0, 0.0); spec.len()];
            op.resolvent_of_product(&wave, &mut rhs);
            let (u_s, _, _) = op.solve(&rhs, &params.solver).ok()?;
            let outgoing = plane_wave(&spec, r.k, [-r.theta[0], -r.theta[1]]);
            let corr: Complex64 = outgoing
                .iter()
                .zip(qd)
                .zip(&u_s)
                .map(|((w, qv), u)| w * qv * u)
                .sum();
            Some(r.u_inf - corr * h2)
        };
        let values: Vec<Option<Complex64>> = if params.parallel {
            d.records.par_iter().map(record_value).collect()
        } else {
            d.records.iter().map(record_value).collect()
        };
        let failures = values.iter().filter(|v| v.is_none()).count();
        let mut spectrum = Field::zeros(spec, Space::Frequency);
        let sd = spectrum.data_mut();
        for (r, v) in d.records.iter().zip(&values) {
            sd[spec.index(r.i, r.j)] = v.unwrap_or(Complex64::new(0.0, 0.0));
        }
        let next = params.cutoff.apply(&spectrum.to_phys()?)?;
        trace.push(next, t.elapsed().as_secs_f64());
        trace.solver_failures.push(failures);
    }
    Ok(trace)
}
