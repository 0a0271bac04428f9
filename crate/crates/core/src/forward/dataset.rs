//! Fixed-angle scattering datasets: generation on a refined grid and CSV +
//! JSON manifest storage.

use std::collections::HashSet;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{far_field, solve_scattered, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{fmt_f64, GridSpec};
use crate::inversion::{ewald_map, EwaldPoint};
use crate::resolvent::{SymbolBasis, DEFAULT_TRUNCATION};
use crate::scene::{rasterize, PotentialSpec};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmitReason {
    /// `xi = 0` or `|xi . theta0| < eps_deg`.
    Degenerate,
    /// Ewald wavenumber above `k_max`.
    Capped,
    /// The forward solver failed for this record.
    Solver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Omitted {
    pub i: usize,
    pub j: usize,
    pub reason: OmitReason,
}

/// One far-field measurement, tagged with the inverse-grid frequency it samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterRecord {
    pub i: usize,
    pub j: usize,
    pub xi: Vec2,
    pub k: f64,
    pub theta: Vec2,
    /// `+1` when the record uses incidence `theta0`, `-1` for `-theta0`.
    pub sign: i8,
    pub u_inf: Complex64,
}

impl ScatterRecord {
    pub fn incident(&self, theta0: Vec2) -> Vec2 {
        let s = f64::from(self.sign);
        [s * theta0[0], s * theta0[1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringDataSet {
    pub inverse_spec: GridSpec,
    pub theta0: Vec2,
    pub fine_factor: usize,
    pub k_max: f64,
    pub eps_deg: f64,
    pub potential_id: String,
    pub tol: f64,
    pub rho: f64,
    /// Wavenumber of the forward-direction record sampling `xi = 0`, if any.
    pub forward_k: Option<f64>,
    /// Sorted by `(i, j)`.
    pub records: Vec<ScatterRecord>,
    /// Sorted by `(i, j)`.
    pub omitted: Vec<Omitted>,
}

impl ScatteringDataSet {
    /// Data generated on the inversion grid itself.
    pub fn inverse_crime(&self) -> bool {
        self.fine_factor == 1
    }

    pub fn omitted_fraction(&self) -> f64 {
        self.omitted.len() as f64 / self.inverse_spec.len() as f64
    }

    /// Record-wise linear combination `a * self + b * other` of two datasets
    /// sharing the same sampling.
    pub fn combine(&self, a: Complex64, other: &ScatteringDataSet, b: Complex64) -> Result<Self> {
        if self.records.len() != other.records.len()
            || self.inverse_spec != other.inverse_spec
            || self.theta0 != other.theta0
        {
            return Err(Error::GridMismatch("datasets sample different frequencies".into()));
        }
        let mut out = self.clone();
        for (r, o) in out.records.iter_mut().zip(&other.records) {
            if (r.i, r.j) != (o.i, o.j) {
                return Err(Error::GridMismatch("datasets sample different frequencies".into()));
            }
            r.u_inf = a * r.u_inf + b * o.u_inf;
        }
        Ok(out)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            n: self.inverse_spec.n(),
            half_width: self.inverse_spec.half_width(),
            theta0: self.theta0,
            fine_factor: self.fine_factor,
            k_max: self.k_max,
            eps_deg: self.eps_deg,
            potential_id: self.potential_id.clone(),
            tol: self.tol,
            rho: self.rho,
            forward_k: self.forward_k,
            records: self.records.len(),
            omitted: self.omitted.clone(),
            omitted_fraction: self.omitted_fraction(),
            inverse_crime: self.inverse_crime(),
        }
    }
}

/// Sidecar metadata stored next to the record CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub theta0: Vec2,
    pub fine_factor: usize,
    pub k_max: f64,
    pub eps_deg: f64,
    pub potential_id: String,
    pub tol: f64,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_k: Option<f64>,
    pub records: usize,
    pub omitted: Vec<Omitted>,
    pub omitted_fraction: f64,
    pub inverse_crime: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateConfig {
    pub theta0: Vec2,
    pub fine_factor: usize,
    /// Defaults to the inverse-grid Nyquist `pi n / (2L)`.
    pub k_max: Option<f64>,
    /// Defaults to half a frequency cell, `pi / (2L)`.
    pub eps_deg: Option<f64>,
    pub rho: f64,
    /// Samples `xi = 0` through the forward direction `theta = theta0` at this
    /// wavenumber. Without it the zero frequency is omitted.
    pub forward_k: Option<f64>,
    pub solver: SolverConfig,
    pub parallel: bool,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            theta0: [0.0, 1.0],
            fine_factor: 2,
            k_max: None,
            eps_deg: None,
            rho: DEFAULT_TRUNCATION,
            forward_k: None,
            solver: SolverConfig::default(),
            parallel: true,
        }
    }
}

pub fn default_k_max(spec: &GridSpec) -> f64 {
    spec.nyquist()
}

pub fn default_eps_deg(spec: &GridSpec) -> f64 {
    0.5 * spec.freq_step()
}

pub fn generate_dataset(
    p: &PotentialSpec,
    inverse_spec: &GridSpec,
    theta0: Vec2,
    fine_factor: usize,
    k_max: f64,
    tol: f64,
) -> Result<ScatteringDataSet> {
    let cfg = GenerateConfig {
        theta0,
        fine_factor,
        k_max: Some(k_max),
        solver: SolverConfig::with_tol(tol),
        ..GenerateConfig::default()
    };
    generate_dataset_with(p, inverse_spec, &cfg)
}

enum Outcome {
    Record(ScatterRecord),
    Omit(Omitted),
}

pub fn generate_dataset_with(
    p: &PotentialSpec,
    inverse_spec: &GridSpec,
    cfg: &GenerateConfig,
) -> Result<ScatteringDataSet> {
    let theta0 = cfg.theta0;
    if ((theta0[0].hypot(theta0[1])) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("theta0 must be a unit vector, got {theta0:?}")));
    }
    if cfg.fine_factor < 1 {
        return Err(Error::Domain("fine factor must be at least 1".into()));
    }
    let k_max = cfg.k_max.unwrap_or_else(|| default_k_max(inverse_spec));
    let eps_deg = cfg.eps_deg.unwrap_or_else(|| default_eps_deg(inverse_spec));
    if !(k_max > 0.0) {
        return Err(Error::Domain(format!("k_max must be positive, got {k_max}")));
    }
    if let Some(k) = cfg.forward_k {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("forward wavenumber must be positive, got {k}")));
        }
    }
    let fine = inverse_spec.refined(cfg.fine_factor)?;
    let basis = SymbolBasis::new(fine, cfg.rho)?;
    let q = rasterize(p, &fine);

    let work = |(i, j): (usize, usize)| -> Outcome {
        let xi = inverse_spec.freq(i, j);
        let omit = |reason| Outcome::Omit(Omitted { i, j, reason });
        let ewald = match (ewald_map(xi, theta0, eps_deg), cfg.forward_k) {
            (Ok(e), _) => e,
            (Err(_), Some(k)) if xi == [0.0, 0.0] => EwaldPoint { k, theta: theta0, sign: 1 },
            (Err(_), _) => return omit(OmitReason::Degenerate),
        };
        if ewald.k > k_max && xi != [0.0, 0.0] {
            return omit(OmitReason::Capped);
        }
        let incident = ewald.incident(theta0);
        let solved = basis
            .symbol(ewald.k)
            .and_then(|sigma| solve_scattered(&q, ewald.k, incident, &sigma, &cfg.solver))
            .and_then(|u| far_field(&q, &u.field, ewald.k, ewald.theta, incident));
        match solved {
            Ok(u_inf) => Outcome::Record(ScatterRecord {
                i,
                j,
                xi,
                k: ewald.k,
                theta: ewald.theta,
                sign: ewald.sign,
                u_inf,
            }),
            Err(_) => omit(OmitReason::Solver),
        }
    };

    let indices: Vec<(usize, usize)> = inverse_spec.indices().collect();
    let outcomes: Vec<Outcome> = if cfg.parallel {
        indices.into_par_iter().map(work).collect()
    } else {
        indices.into_iter().map(work).collect()
    };
    let mut records = Vec::new();
    let mut omitted = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Record(r) => records.push(r),
            Outcome::Omit(m) => omitted.push(m),
        }
    }
    Ok(ScatteringDataSet {
        inverse_spec: *inverse_spec,
        theta0,
        fine_factor: cfg.fine_factor,
        k_max,
        eps_deg,
        potential_id: p.id(),
        tol: cfg.solver.gmres.tol,
        rho: cfg.rho,
        forward_k: cfg.forward_k,
        records,
        omitted,
    })
}

/// `(csv, manifest)` paths for a dataset name; a trailing `.csv` is stripped.
pub fn dataset_paths(path: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let path = path.as_ref();
    let base = if path.extension().is_some_and(|e| e == "csv") {
        path.with_extension("")
    } else {
        path.to_path_buf()
    };
    let name = base.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    (
        base.with_file_name(format!("{name}.csv")),
        base.with_file_name(format!("{name}.manifest.json")),
    )
}

const DATASET_HEADER: &str = "i,j,xi1,xi2,k,theta1,theta2,sign,uinf_re,uinf_im";

pub fn write_dataset(d: &ScatteringDataSet, path: impl AsRef<Path>) -> Result<()> {
    let (csv_path, manifest_path) = dataset_paths(path);
    let mut out = String::with_capacity(d.records.len() * 200 + 64);
    out.push_str(DATASET_HEADER);
    out.push('\n');
    for r in &d.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.i,
            r.j,
            fmt_f64(r.xi[0]),
            fmt_f64(r.xi[1]),
            fmt_f64(r.k),
            fmt_f64(r.theta[0]),
            fmt_f64(r.theta[1]),
            r.sign,
            fmt_f64(r.u_inf.re),
            fmt_f64(r.u_inf.im)
        ));
    }
    let mut f = std::fs::File::create(&csv_path)?;
    f.write_all(out.as_bytes())?;
    let manifest = serde_json::to_string_pretty(&d.manifest())?;
    std::fs::write(&manifest_path, manifest + "\n")?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<ScatteringDataSet> {
    let (csv_path, manifest_path) = dataset_paths(path);
    if !manifest_path.exists() {
        return Err(Error::Missing(manifest_path));
    }
    if !csv_path.exists() {
        return Err(Error::Missing(csv_path));
    }
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)
        .map_err(|e| Error::format(&manifest_path, e.to_string()))?;
    let spec = GridSpec::new(manifest.n, manifest.half_width)
        .map_err(|e| Error::format(&manifest_path, e.to_string()))?;

    let mut reader = csv::Reader::from_path(&csv_path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != DATASET_HEADER {
        return Err(Error::format(&csv_path, format!("unexpected header {header:?}")));
    }
    let bad = |msg: String| Error::format(&csv_path, msg);
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 10 {
            return Err(bad(format!("row {line}: expected 10 columns, found {}", rec.len())));
        }
        let f = |k: usize| -> Result<f64> {
            rec[k].trim().parse::<f64>().map_err(|e| bad(format!("row {line}, column {k}: {e}")))
        };
        let u = |k: usize| -> Result<usize> {
            rec[k].trim().parse::<usize>().map_err(|e| bad(format!("row {line}, column {k}: {e}")))
        };
        let (i, j) = (u(0)?, u(1)?);
        if i >= spec.n() || j >= spec.n() {
            return Err(bad(format!("row {line}: index ({i},{j}) outside the {} grid", spec.n())));
        }
        if !seen.insert((i, j)) {
            return Err(bad(format!("duplicate index ({i},{j})")));
        }
        let sign: i8 = rec[7].trim().parse().map_err(|e| bad(format!("row {line}: sign: {e}")))?;
        if sign != 1 && sign != -1 {
            return Err(bad(format!("row {line}: sign must be +1 or -1")));
        }
        let xi = [f(2)?, f(3)?];
        let expect = spec.freq(i, j);
        if (xi[0] - expect[0]).abs() > 1e-9 || (xi[1] - expect[1]).abs() > 1e-9 {
            return Err(bad(format!("row {line}: xi does not match index ({i},{j}) on the manifest grid")));
        }
        records.push(ScatterRecord {
            i,
            j,
            xi,
            k: f(4)?,
            theta: [f(5)?, f(6)?],
            sign,
            u_inf: Complex64::new(f(8)?, f(9)?),
        });
    }
    for m in &manifest.omitted {
        if !seen.insert((m.i, m.j)) {
            return Err(Error::format(
                &manifest_path,
                format!("index ({},{}) is both a record and omitted, or omitted twice", m.i, m.j),
            ));
        }
    }
    if seen.len() != spec.len() || records.len() != manifest.records {
        return Err(Error::format(
            &manifest_path,
            format!(
                "records ({}) and omitted ({}) do not cover the {} grid indices",
                records.len(),
                manifest.omitted.len(),
                spec.len()
            ),
        ));
    }
    records.sort_by_key(|r| (r.i, r.j));
    let mut omitted = manifest.omitted;
    omitted.sort_by_key(|m| (m.i, m.j));
    Ok(ScatteringDataSet {
        inverse_spec: spec,
        theta0: manifest.theta0,
        fine_factor: manifest.fine_factor,
        k_max: manifest.k_max,
        eps_deg: manifest.eps_deg,
        potential_id: manifest.potential_id,
        tol: manifest.tol,
        rho: manifest.rho,
        forward_k: manifest.forward_k,
        records,
        omitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn synthetic() -> ScatteringDataSet {
        let spec = make_grid(8, 2.1).unwrap();
        let theta0 = [0.0, 1.0];
        let eps = default_eps_deg(&spec);
        let mut records = Vec::new();
        let mut omitted = Vec::new();
        for (i, j) in spec.indices() {
            let xi = spec.freq(i, j);
            match ewald_map(xi, theta0, eps) {
                Ok(e) if records.len() < 3 => records.push(ScatterRecord {
                    i,
                    j,
                    xi,
                    k: e.k,
                    theta: e.theta,
                    sign: e.sign,
                    u_inf: Complex64::new(0.1 * i as f64 + 1.0 / 3.0, -(j as f64).sqrt()),
                }),
                Ok(_) => omitted.push(Omitted { i, j, reason: OmitReason::Capped }),
                Err(_) => omitted.push(Omitted { i, j, reason: OmitReason::Degenerate }),
            }
        }
        ScatteringDataSet {
            inverse_spec: spec,
            theta0,
            fine_factor: 2,
            k_max: 1.0 / 7.0,
            eps_deg: eps,
            potential_id: "synthetic".into(),
            tol: 1e-8,
            rho: 2.1,
            forward_k: None,
            records,
            omitted,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let d = synthetic();
        assert_eq!(d.records.len(), 3);
        let path = dir.path().join("set.csv");
        write_dataset(&d, &path).unwrap();
        assert!(dir.path().join("set.manifest.json").exists());
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, d);
        // Name without extension resolves to the same files.
        assert_eq!(read_dataset(dir.path().join("set")).unwrap(), d);
    }

    #[test]
    fn duplicate_index_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let d = synthetic();
        let path = dir.path().join("dup");
        write_dataset(&d, &path).unwrap();
        let (csv_path, _) = dataset_paths(&path);
        let text = std::fs::read_to_string(&csv_path).unwrap();
        let first_row = text.lines().nth(1).unwrap().to_owned();
        std::fs::write(&csv_path, format!("{text}{first_row}\n")).unwrap();
        let err = read_dataset(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn missing_manifest_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lonely");
        write_dataset(&synthetic(), &path).unwrap();
        std::fs::remove_file(dataset_paths(&path).1).unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Missing(_))));
    }

    #[test]
    fn inconsistent_manifest_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = synthetic();
        d.omitted.pop();
        let path = dir.path().join("short");
        write_dataset(&d, &path).unwrap();
        assert!(read_dataset(&path).is_err());
    }
}
