//! Direct problem: scattered fields, far-field patterns and fixed-angle datasets.

pub mod dataset;
pub mod gmres;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{plane_wave, Field, Space, Transform};
use crate::resolvent::ResolventSymbol;
use crate::Vec2;

pub use dataset::{
    generate_dataset, generate_dataset_with, read_dataset, write_dataset, GenerateConfig,
    OmitReason, Omitted, ScatterRecord, ScatteringDataSet,
};
pub use gmres::{GmresConfig, GmresOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    #[default]
    Gmres,
    /// Plain Born-Neumann iteration `u <- b + R_k(q u)`; converges only for weak scatterers.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub gmres: GmresConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Gmres,
            gmres: GmresConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        let mut cfg = Self::default();
        cfg.gmres.tol = tol;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteredField {
    pub field: Field,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Matrix-free `(I - R_k M_q)` on a fixed grid, with the transform plans it needs.
pub(crate) struct LsOperator<'a> {
    q: &'a [Complex64],
    symbol: &'a ResolventSymbol,
    transform: Transform,
}

impl<'a> LsOperator<'a> {
    pub(crate) fn new(q: &'a [Complex64], symbol: &'a ResolventSymbol, transform: Transform) -> Self {
        Self { q, symbol, transform }
    }

    /// `out = R_k(q v)`
    pub(crate) fn resolvent_of_product(&self, v: &[Complex64], out: &mut [Complex64]) {
        for ((o, qv), vv) in out.iter_mut().zip(self.q).zip(v) {
            *o = qv * vv;
        }
        self.symbol.apply_in_place(out, &self.transform);
    }

    /// `out = v - R_k(q v)`
    pub(crate) fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        self.resolvent_of_product(v, out);
        for (o, vv) in out.iter_mut().zip(v) {
            *o = vv - *o;
        }
    }

    /// Solves `u - R_k(q u) = rhs`.
    pub(crate) fn solve(&self, rhs: &[Complex64], cfg: &SolverConfig) -> Result<(Vec<Complex64>, usize, f64)> {
        let n = rhs.len();
        let rhs_norm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if rhs_norm == 0.0 {
            return Ok((vec![Complex64::new(0.0, 0.0); n], 0, 0.0));
        }
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        let (iterations, converged) = match cfg.method {
            SolverMethod::Gmres => {
                let out = gmres::gmres(|v, o| self.apply(v, o), rhs, &mut u, &cfg.gmres);
                (out.iterations, out.converged)
            }
            SolverMethod::Neumann => {
                let mut tmp = vec![Complex64::new(0.0, 0.0); n];
                let mut it = 0;
                let mut ok = false;
                while it < cfg.gmres.max_iter {
                    self.resolvent_of_product(&u, &mut tmp);
                    let mut diff = 0.0;
                    for ((uk, tk), rk) in u.iter_mut().zip(&tmp).zip(rhs) {
                        let next = rk + tk;
                        diff += (next - *uk).norm_sqr();
                        *uk = next;
                    }
                    it += 1;
                    if diff.sqrt() <= cfg.gmres.tol * rhs_norm {
                        ok = true;
                        break;
                    }
                }
                (it, ok)
            }
        };
        let mut res = vec![Complex64::new(0.0, 0.0); n];
        self.apply(&u, &mut res);
        let residual = res
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / rhs_norm;
        if !converged || residual > 10.0 * cfg.gmres.tol {
            return Err(Error::NotConverged {
                iterations,
                residual,
            });
        }
        Ok((u, iterations, residual))
    }
}

/// Scattered field `u_s` solving `u_s = R_k(q u_i) + R_k(q u_s)` for the
/// incident wave `u_i = e^{i k theta_inc . x}`, with solver statistics.
pub fn solve_scattered(
    q: &Field,
    k: f64,
    theta_inc: Vec2,
    symbol: &ResolventSymbol,
    cfg: &SolverConfig,
) -> Result<ScatteredField> {
    q.expect_space(Space::Physical)?;
    symbol.spec().ensure_same(q.spec())?;
    if !(cfg.gmres.tol > 0.0) {
        return Err(Error::Domain(format!("solver tolerance must be positive, got {}", cfg.gmres.tol)));
    }
    if (symbol.k() - k).abs() > 1e-12 * k.abs() {
        return Err(Error::Domain(format!(
            "symbol built for k = {}, solve requested at k = {k}",
            symbol.k()
        )));
    }
    let spec = *q.spec();
    let op = LsOperator::new(q.data(), symbol, Transform::new(spec));
    let incident = plane_wave(&spec, k, theta_inc);
    let mut rhs = vec![Complex64::new(0.0, 0.0); spec.len()];
    op.resolvent_of_product(&incident, &mut rhs);
    let (u, iterations, relative_residual) = op.solve(&rhs, cfg)?;
    Ok(ScatteredField {
        field: Field::new(spec, Space::Physical, u)?,
        iterations,
        relative_residual,
    })
}

pub fn solve_lippmann_schwinger(
    q: &Field,
    k: f64,
    theta_inc: Vec2,
    tol: f64,
    symbol: &ResolventSymbol,
) -> Result<Field> {
    solve_scattered(q, k, theta_inc, symbol, &SolverConfig::with_tol(tol)).map(|s| s.field)
}

/// Far-field value
/// `u_inf = ∫ e^{-i k (theta - theta_inc).y} q(y) dy + ∫ e^{-i k theta.y} q(y) u_s(y) dy`
/// by `h^2`-weighted sums over the grid.
pub fn far_field(q: &Field, u_s: &Field, k: f64, theta: Vec2, theta_inc: Vec2) -> Result<Complex64> {
    q.expect_space(Space::Physical)?;
    u_s.expect_space(Space::Physical)?;
    q.spec().ensure_same(u_s.spec())?;
    let spec = q.spec();
    let h2 = spec.spacing().powi(2);
    let born_dir = [-(theta[0] - theta_inc[0]), -(theta[1] - theta_inc[1])];
    let born_wave = plane_wave(spec, k, born_dir);
    let out_wave = plane_wave(spec, k, [-theta[0], -theta[1]]);
    let mut born = Complex64::new(0.0, 0.0);
    let mut multiple = Complex64::new(0.0, 0.0);
    for ((qv, us), (bw, ow)) in q.data().iter().zip(u_s.data()).zip(born_wave.iter().zip(&out_wave)) {
        born += bw * qv;
        multiple += ow * qv * us;
    }
    Ok((born + multiple) * h2)
}
