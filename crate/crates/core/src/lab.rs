//! Experiment harness: error metric, sweeps over `(n, m, l)`, report CSV and SVG plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::dataset::{
    dataset_paths, default_eps_deg, default_k_max, generate_dataset_with, read_dataset,
    write_dataset, GenerateConfig,
};
use crate::forward::{ScatteringDataSet, SolverConfig};
use crate::grid::{Field, GridSpec, DEFAULT_HALF_WIDTH};
use crate::inversion::{bcr_recover, born_from_data, recover, BcrParams, RecoveryParams};
use crate::resolvent::DEFAULT_TRUNCATION;
use crate::scene::{make_cutoff, rasterize, PotentialSpec, DEFAULT_CUTOFF_INNER, DEFAULT_CUTOFF_OUTER};
use crate::Vec2;

/// Discrete L2 distance `h sqrt(sum |Re approx - q|^2)` to the sampled truth.
pub fn l2_error(approx: &Field, truth: &PotentialSpec) -> f64 {
    let exact = rasterize(truth, approx.spec());
    let sum: f64 = approx
        .data()
        .iter()
        .zip(exact.data())
        .map(|(a, b)| (a.re - b.re).powi(2))
        .sum();
    approx.spec().spacing() * sum.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    New,
    Bcr,
    Born,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::New => "new",
            Algorithm::Bcr => "bcr",
            Algorithm::Born => "born",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "new" => Ok(Algorithm::New),
            "bcr" => Ok(Algorithm::Bcr),
            "born" => Ok(Algorithm::Born),
            _ => Err(Error::Domain(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// One line of an experiment report. `m` is 0 for the baseline and the raw
/// Born approximation; for the baseline `l` counts its own iterates from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub example: u32,
    pub algorithm: Algorithm,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub l2_error: f64,
    pub log10_error: f64,
    pub wall_seconds: f64,
}

impl ReportRow {
    fn key(&self) -> (u32, Algorithm, usize, usize, usize) {
        (self.example, self.algorithm, self.n, self.m, self.l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Quick,
    Full,
    Paper,
}

impl Tier {
    pub fn grid_sizes(&self) -> Vec<usize> {
        match self {
            Tier::Quick => vec![32],
            Tier::Full => vec![32, 64],
            Tier::Paper => vec![32, 64, 128],
        }
    }
}

impl std::str::FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Tier::Quick),
            "full" => Ok(Tier::Full),
            "paper" => Ok(Tier::Paper),
            _ => Err(Error::Domain(format!("unknown tier {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub half_width: f64,
    pub theta0: Vec2,
    pub fine_factor: usize,
    pub k_max: Option<f64>,
    pub eps_deg: Option<f64>,
    pub forward_k: Option<f64>,
    pub tol: f64,
    pub rho: f64,
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
    /// Amplitude applied to the example potential.
    pub amplitude: f64,
    pub algorithms: Vec<Algorithm>,
    /// Iterates of the baseline; defaults to `l_max`.
    pub bcr_iterations: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub parallel: bool,
    /// Record wall-clock times; when off the report is a pure function of the inputs.
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            half_width: DEFAULT_HALF_WIDTH,
            theta0: [0.0, 1.0],
            fine_factor: 2,
            k_max: None,
            eps_deg: None,
            forward_k: None,
            tol: 1e-8,
            rho: DEFAULT_TRUNCATION,
            cutoff_inner: DEFAULT_CUTOFF_INNER,
            cutoff_outer: DEFAULT_CUTOFF_OUTER,
            amplitude: 1.0,
            algorithms: vec![Algorithm::New],
            bcr_iterations: None,
            cache_dir: None,
            parallel: true,
            timings: true,
        }
    }
}

impl ExperimentConfig {
    pub fn potential(&self, example: u32) -> Result<PotentialSpec> {
        let base = PotentialSpec::example(example)?;
        Ok(if self.amplitude == 1.0 {
            base
        } else {
            base.scaled(self.amplitude)
        })
    }

    pub fn generate_config(&self) -> GenerateConfig {
        GenerateConfig {
            theta0: self.theta0,
            fine_factor: self.fine_factor,
            k_max: self.k_max,
            eps_deg: self.eps_deg,
            rho: self.rho,
            forward_k: self.forward_k,
            solver: SolverConfig::with_tol(self.tol),
            parallel: self.parallel,
        }
    }
}

/// Content hash of everything that determines a generated dataset.
pub fn dataset_key(p: &PotentialSpec, spec: &GridSpec, cfg: &GenerateConfig) -> String {
    let key = serde_json::json!({
        "potential_id": p.id(),
        "n": spec.n(),
        "L": spec.half_width(),
        "theta0": cfg.theta0,
        "fine_factor": cfg.fine_factor,
        "k_max": cfg.k_max.unwrap_or_else(|| default_k_max(spec)),
        "eps_deg": cfg.eps_deg.unwrap_or_else(|| default_eps_deg(spec)),
        "rho": cfg.rho,
        "forward_k": cfg.forward_k,
        "tol": cfg.solver.gmres.tol,
        "restart": cfg.solver.gmres.restart,
        "max_iter": cfg.solver.gmres.max_iter,
        "method": format!("{:?}", cfg.solver.method),
    });
    let digest = Sha256::digest(key.to_string().as_bytes());
    digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

/// Returns the cached dataset for these inputs, generating and storing it on a miss.
pub fn load_or_generate(
    p: &PotentialSpec,
    spec: &GridSpec,
    cfg: &GenerateConfig,
    cache_dir: Option<&Path>,
) -> Result<ScatteringDataSet> {
    let Some(dir) = cache_dir else {
        return generate_dataset_with(p, spec, cfg);
    };
    let name = dir.join(format!("{}-n{}-{}", sanitize(&p.id()), spec.n(), dataset_key(p, spec, cfg)));
    let (csv_path, manifest_path) = dataset_paths(&name);
    if csv_path.exists() || manifest_path.exists() {
        return read_dataset(&name).map_err(|e| {
            Error::format(
                &csv_path,
                format!("cached dataset is unreadable ({e}); delete {} and its manifest to regenerate", csv_path.display()),
            )
        });
    }
    std::fs::create_dir_all(dir)?;
    let d = generate_dataset_with(p, spec, cfg)?;
    write_dataset(&d, &name)?;
    Ok(d)
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect()
}

/// Runs the requested algorithms for every `n` in `n_list` and reports one row
/// per `(n, m, l, algorithm)`. Rows come back sorted.
pub fn run_experiment(
    example: u32,
    n_list: &[usize],
    m_list: &[usize],
    l_max: usize,
    cfg: &ExperimentConfig,
) -> Result<Vec<ReportRow>> {
    let truth = cfg.potential(example)?;
    let gen = cfg.generate_config();
    let mut rows = Vec::new();
    let clock = |s: f64| if cfg.timings { s } else { 0.0 };
    for &n in n_list {
        let spec = GridSpec::new(n, cfg.half_width)?;
        let data = load_or_generate(&truth, &spec, &gen, cfg.cache_dir.as_deref())?;
        let cutoff = make_cutoff(&spec, cfg.cutoff_inner, cfg.cutoff_outer)?;
        let row = |algorithm, m, l, field: &Field, secs: f64| {
            let err = l2_error(field, &truth);
            ReportRow {
                example,
                algorithm,
                n,
                m,
                l,
                l2_error: err,
                log10_error: err.log10(),
                wall_seconds: clock(secs),
            }
        };
        for algorithm in &cfg.algorithms {
            match algorithm {
                Algorithm::New => {
                    for &m in m_list {
                        let mut params = RecoveryParams::new(m, l_max, cutoff.clone());
                        params.parallel = cfg.parallel;
                        let trace = recover(&data, &params)?;
                        let mut elapsed = trace.setup_seconds;
                        for (idx, it) in trace.iterates.iter().enumerate() {
                            if idx > 0 {
                                elapsed += trace.step_seconds[idx - 1];
                            }
                            rows.push(row(Algorithm::New, m, idx + 1, it, elapsed));
                        }
                    }
                }
                Algorithm::Bcr => {
                    let mut params = BcrParams::new(cfg.bcr_iterations.unwrap_or(l_max), cfg.tol, cutoff.clone());
                    params.parallel = cfg.parallel;
                    let trace = bcr_recover(&data, &params)?;
                    let mut elapsed = trace.setup_seconds;
                    for (idx, it) in trace.iterates.iter().enumerate() {
                        if idx > 0 {
                            elapsed += trace.step_seconds[idx - 1];
                        }
                        rows.push(row(Algorithm::Bcr, 0, idx + 1, it, elapsed));
                    }
                }
                Algorithm::Born => {
                    let t = Instant::now();
                    let born = born_from_data(&data)?;
                    rows.push(row(Algorithm::Born, 0, 0, &born, t.elapsed().as_secs_f64()));
                }
            }
        }
    }
    rows.sort_by_key(ReportRow::key);
    Ok(rows)
}

pub const REPORT_HEADER: &str = "example,algorithm,n,m,l,l2_error,log10_error,wall_seconds";

pub fn render_report(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.16e},{:.16e},{:.6e}",
            r.example,
            r.algorithm.as_str(),
            r.n,
            r.m,
            r.l,
            r.l2_error,
            r.log10_error,
            r.wall_seconds
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_report(rows))?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::Missing(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != REPORT_HEADER {
        return Err(Error::format(path, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotAxis {
    /// Error against the iteration index, one series per `(n, m)`.
    L,
    /// Error against the grid size at the final iterate, one series per `m`.
    N,
}

impl std::str::FromStr for PlotAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l" => Ok(PlotAxis::L),
            "n" => Ok(PlotAxis::N),
            _ => Err(Error::Domain(format!("unknown plot axis {s:?}, expected l or n"))),
        }
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn collect_series(rows: &[ReportRow], axis: PlotAxis) -> Vec<Series> {
    let mut groups: BTreeMap<(u32, Algorithm, usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    match axis {
        PlotAxis::L => {
            for r in rows {
                groups
                    .entry((r.example, r.algorithm, r.n, r.m))
                    .or_default()
                    .push((r.l as f64, r.log10_error));
            }
        }
        PlotAxis::N => {
            let mut last_l: BTreeMap<(u32, Algorithm, usize), usize> = BTreeMap::new();
            for r in rows {
                let e = last_l.entry((r.example, r.algorithm, r.m)).or_insert(r.l);
                *e = (*e).max(r.l);
            }
            for r in rows {
                if last_l[&(r.example, r.algorithm, r.m)] == r.l {
                    groups
                        .entry((r.example, r.algorithm, r.m, r.l))
                        .or_default()
                        .push((r.n as f64, r.log10_error));
                }
            }
        }
    }
    groups
        .into_iter()
        .map(|((ex, alg, a, b), mut points)| {
            points.retain(|p| p.1.is_finite());
            points.sort_by(|p, q| p.0.total_cmp(&q.0));
            let label = match (axis, alg) {
                (PlotAxis::L, Algorithm::New) => format!("ex{ex} N={a} m={b}"),
                (PlotAxis::L, _) => format!("ex{ex} N={a} {}", alg.as_str()),
                (PlotAxis::N, Algorithm::New) => format!("ex{ex} q_{{{a},{b}}}"),
                (PlotAxis::N, _) => format!("ex{ex} {} l={b}", alg.as_str()),
            };
            Series { label, points }
        })
        .filter(|s| !s.points.is_empty())
        .collect()
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Standalone SVG with log10 error on the Y axis.
pub fn render_svg(rows: &[ReportRow], axis: PlotAxis) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Domain("nothing to plot: the report has no rows".into()));
    }
    let series = collect_series(rows, axis);
    if series.is_empty() {
        return Err(Error::Domain("nothing to plot: no finite errors".into()));
    }
    let (w, h) = (720.0, 460.0);
    let (left, right, top, bottom) = (80.0, 180.0, 30.0, 60.0);
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let (mut x0, mut x1) = min_max(&xs);
    let (mut y0, mut y1) = min_max(&ys);
    if x1 - x0 < 1e-12 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.1;
        y1 += 0.1;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    // Grid sizes double, so the N axis is logarithmic.
    let xmap = |x: f64| -> f64 {
        let t = match axis {
            PlotAxis::L => (x - x0) / (x1 - x0),
            PlotAxis::N => (x.ln() - x0.ln()) / (x1.ln() - x0.ln()),
        };
        left + t * (w - left - right)
    };
    let ymap = |y: f64| top + (y1 - y) / (y1 - y0) * (h - top - bottom);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    let (ax_l, ax_r, ax_t, ax_b) = (left, w - right, top, h - bottom);
    writeln!(
        svg,
        r#"<path d="M{ax_l},{ax_t} L{ax_l},{ax_b} L{ax_r},{ax_b}" fill="none" stroke="black"/>"#
    )
    .unwrap();

    let mut ticks: Vec<f64> = xs.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in &ticks {
        let x = xmap(*t);
        writeln!(svg, r#"<line x1="{x:.2}" y1="{ax_b}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, ax_b + 5.0).unwrap();
        writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, ax_b + 20.0).unwrap();
    }
    for k in 0..=5 {
        let v = y0 + (y1 - y0) * k as f64 / 5.0;
        let y = ymap(v);
        writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{ax_l}" y2="{y:.2}" stroke="black"/>"#, ax_l - 5.0).unwrap();
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, ax_l - 8.0, y + 4.0).unwrap();
    }
    let xlabel = match axis {
        PlotAxis::L => "iteration l",
        PlotAxis::N => "grid size N",
    };
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
        0.5 * (ax_l + ax_r),
        h - 15.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">log10 L2 error</text>"#,
        0.5 * (ax_t + ax_b),
        0.5 * (ax_t + ax_b)
    )
    .unwrap();

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        if s.points.len() == 1 {
            let (x, y) = s.points[0];
            writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#, xmap(x), ymap(y)).unwrap();
        } else {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", xmap(x), ymap(y)))
                .collect();
            writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            )
            .unwrap();
        }
        let ly = top + 18.0 * idx as f64 + 10.0;
        let lx = ax_r + 15.0;
        writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        )
        .unwrap();
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label)).unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(rows: &[ReportRow], path: impl AsRef<Path>, axis: PlotAxis) -> Result<()> {
    let svg = render_svg(rows, axis)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
