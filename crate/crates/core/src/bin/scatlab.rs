use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use scatlab::forward::dataset::{generate_dataset_with, read_dataset, write_dataset, GenerateConfig};
use scatlab::forward::SolverConfig;
use scatlab::grid::{GridSpec, DEFAULT_HALF_WIDTH};
use scatlab::inversion::{bcr_recover, recover, BcrParams, RecoveryParams, RecoveryTrace};
use scatlab::lab::{emit_plot, read_report, run_experiment, write_report, Algorithm, ExperimentConfig, PlotAxis, Tier};
use scatlab::resolvent::DEFAULT_TRUNCATION;
use scatlab::scene::{make_cutoff, PotentialSpec, DEFAULT_CUTOFF_INNER, DEFAULT_CUTOFF_OUTER};
use scatlab::{Error, Result, Vec2};

#[derive(Parser)]
#[command(name = "scatlab", version, about = "Fixed-angle inverse scattering experiments")]
struct Cli {
    /// JSON file whose keys mirror the long flags; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate far-field data for one of the example potentials.
    Generate {
        #[arg(long)]
        example: Option<u32>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_parser = parse_pair)]
        theta0: Option<Vec2>,
        #[arg(long)]
        fine: Option<usize>,
        #[arg(long)]
        kmax: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Multiplies the example potential.
        #[arg(long)]
        amplitude: Option<f64>,
        /// Sample the zero frequency through the forward direction at this wavenumber.
        #[arg(long)]
        forward_k: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the potential from a dataset.
    Recover {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        algorithm: Option<Algorithm>,
        /// Also write every iterate next to the output.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep over grid sizes, series orders and iterations and write a report.
    Experiment {
        #[arg(long)]
        example: Option<u32>,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<usize>>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        tier: Option<Tier>,
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<Algorithm>>,
        #[arg(long)]
        forward_k: Option<f64>,
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Write zero wall times so reruns give identical reports.
        #[arg(long)]
        no_timings: bool,
        #[arg(long)]
        serial: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Draw a report as an SVG error plot.
    Plot {
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        x: Option<PlotAxis>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    example: Option<u32>,
    n: Option<NList>,
    theta0: Option<Vec2>,
    fine: Option<usize>,
    kmax: Option<f64>,
    tol: Option<f64>,
    amplitude: Option<f64>,
    out: Option<PathBuf>,
    data: Option<PathBuf>,
    m: Option<NList>,
    l: Option<usize>,
    algorithm: Option<Algorithm>,
    algorithms: Option<Vec<Algorithm>>,
    trace: Option<bool>,
    tier: Option<Tier>,
    cache: Option<PathBuf>,
    no_timings: Option<bool>,
    serial: Option<bool>,
    report: Option<PathBuf>,
    x: Option<String>,
    eps_deg: Option<f64>,
    forward_k: Option<f64>,
    rho: Option<f64>,
    cutoff_inner: Option<f64>,
    cutoff_outer: Option<f64>,
    half_width: Option<f64>,
}

/// A single integer or a list; `"n": 32` and `"n": [32, 64]` are both accepted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NList {
    One(usize),
    Many(Vec<usize>),
}

impl NList {
    fn list(&self) -> Vec<usize> {
        match self {
            NList::One(v) => vec![*v],
            NList::Many(v) => v.clone(),
        }
    }

    fn single(&self, key: &str) -> Result<usize> {
        match self {
            NList::One(v) => Ok(*v),
            NList::Many(v) if v.len() == 1 => Ok(v[0]),
            NList::Many(_) => Err(Error::Domain(format!("config key {key:?} must be a single integer here"))),
        }
    }
}

fn parse_pair(s: &str) -> std::result::Result<Vec2, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected X,Y, got {s:?}"));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([x, y])
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    if !path.exists() {
        return Err(Error::Missing(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Domain(format!("missing --{flag} (give it on the command line or in --config)")))
}

fn normalize(theta: Vec2) -> Result<Vec2> {
    let r = theta[0].hypot(theta[1]);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain("theta0 must be a nonzero direction".into()));
    }
    Ok([theta[0] / r, theta[1] / r])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = load_config(cli.config.as_deref())?;
    let half_width = file.half_width.unwrap_or(DEFAULT_HALF_WIDTH);
    let rho = file.rho.unwrap_or(DEFAULT_TRUNCATION);
    let cutoff_inner = file.cutoff_inner.unwrap_or(DEFAULT_CUTOFF_INNER);
    let cutoff_outer = file.cutoff_outer.unwrap_or(DEFAULT_CUTOFF_OUTER);

    match cli.command {
        Command::Generate { example, n, theta0, fine, kmax, tol, amplitude, forward_k, out } => {
            let example = required(example.or(file.example), "example")?;
            let n = match n {
                Some(n) => n,
                None => required(file.n.as_ref(), "n")?.single("n")?,
            };
            let out = required(out.or(file.out), "out")?;
            let amplitude = amplitude.or(file.amplitude).unwrap_or(1.0);
            let mut potential = PotentialSpec::example(example)?;
            if amplitude != 1.0 {
                potential = potential.scaled(amplitude);
            }
            let spec = GridSpec::new(n, half_width)?;
            let cfg = GenerateConfig {
                theta0: normalize(theta0.or(file.theta0).unwrap_or([0.0, 1.0]))?,
                fine_factor: fine.or(file.fine).unwrap_or(2),
                k_max: kmax.or(file.kmax),
                eps_deg: file.eps_deg,
                rho,
                forward_k: forward_k.or(file.forward_k),
                solver: SolverConfig::with_tol(tol.or(file.tol).unwrap_or(1e-8)),
                parallel: !file.serial.unwrap_or(false),
            };
            let t = Instant::now();
            let d = generate_dataset_with(&potential, &spec, &cfg)?;
            write_dataset(&d, &out)?;
            eprintln!(
                "generated {} records ({} omitted) in {:.1}s",
                d.records.len(),
                d.omitted.len(),
                t.elapsed().as_secs_f64()
            );
        }
        Command::Recover { data, m, l, algorithm, trace, out } => {
            let data = required(data.or(file.data), "data")?;
            let l = required(l.or(file.l), "l")?;
            let out = required(out.or(file.out), "out")?;
            let algorithm = algorithm.or(file.algorithm).unwrap_or(Algorithm::New);
            let trace_all = trace || file.trace.unwrap_or(false);
            let parallel = !file.serial.unwrap_or(false);
            let d = read_dataset(&data)?;
            let cutoff = make_cutoff(&d.inverse_spec, cutoff_inner, cutoff_outer)?;
            let (m, result) = match algorithm {
                Algorithm::New => {
                    let m = match m {
                        Some(m) => m,
                        None => required(file.m.as_ref(), "m")?.single("m")?,
                    };
                    let mut params = RecoveryParams::new(m, l, cutoff);
                    params.rho = Some(rho);
                    params.parallel = parallel;
                    (m, recover(&d, &params)?)
                }
                Algorithm::Bcr => {
                    let mut params = BcrParams::new(l, file.tol.unwrap_or(1e-8), cutoff);
                    params.rho = Some(rho);
                    params.parallel = parallel;
                    (0, bcr_recover(&d, &params)?)
                }
                Algorithm::Born => {
                    return Err(Error::Domain("recover supports --algorithm new or bcr".into()));
                }
            };
            write_recovery(&result, &out, m, l, algorithm, d.omitted_fraction(), trace_all)?;
        }
        Command::Experiment { example, n, m, l, tier, algorithms, forward_k, cache, no_timings, serial, report } => {
            let example = required(example.or(file.example), "example")?;
            let tier = tier.or(file.tier).unwrap_or(Tier::Quick);
            let n_list = n.or_else(|| file.n.as_ref().map(NList::list)).unwrap_or_else(|| tier.grid_sizes());
            let m_list = m.or_else(|| file.m.as_ref().map(NList::list)).unwrap_or_else(|| vec![1, 2, 3, 4]);
            let l = required(l.or(file.l), "l")?;
            let report = required(report.or(file.report), "report")?;
            let defaults = ExperimentConfig::default();
            let cfg = ExperimentConfig {
                half_width,
                theta0: normalize(file.theta0.unwrap_or(defaults.theta0))?,
                fine_factor: file.fine.unwrap_or(defaults.fine_factor),
                k_max: file.kmax,
                eps_deg: file.eps_deg,
                forward_k: forward_k.or(file.forward_k),
                tol: file.tol.unwrap_or(defaults.tol),
                rho,
                cutoff_inner,
                cutoff_outer,
                amplitude: file.amplitude.unwrap_or(1.0),
                algorithms: algorithms.or(file.algorithms).unwrap_or(defaults.algorithms),
                bcr_iterations: None,
                cache_dir: Some(cache.or(file.cache).unwrap_or_else(|| PathBuf::from(".scatlab-cache"))),
                parallel: !(serial || file.serial.unwrap_or(false)),
                timings: !(no_timings || file.no_timings.unwrap_or(false)),
            };
            let rows = run_experiment(example, &n_list, &m_list, l, &cfg)?;
            write_report(&rows, &report)?;
            eprintln!("wrote {} rows to {}", rows.len(), report.display());
        }
        Command::Plot { report, x, out } => {
            let report = required(report.or(file.report), "report")?;
            let out = required(out.or(file.out), "out")?;
            let axis = match x {
                Some(a) => a,
                None => required(file.x.as_deref(), "x")?.parse()?,
            };
            let rows = read_report(&report)?;
            emit_plot(&rows, &out, axis)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Timings {
    setup_seconds: f64,
    step_seconds: Vec<f64>,
    mean_step_seconds: f64,
}

#[derive(Serialize)]
struct RecoveryMeta {
    algorithm: Algorithm,
    m: usize,
    l_max: usize,
    timings: Timings,
    cauchy_norms: Vec<f64>,
    imag_norms: Vec<f64>,
    omitted_fraction: f64,
    solver_failures: Vec<usize>,
}

fn write_recovery(
    trace: &RecoveryTrace,
    out: &Path,
    m: usize,
    l_max: usize,
    algorithm: Algorithm,
    omitted_fraction: f64,
    all: bool,
) -> Result<()> {
    let last = trace
        .last()
        .ok_or_else(|| Error::Domain("recovery produced no iterates".into()))?;
    last.write_csv(out)?;
    let stem = out.with_extension("");
    if all {
        for (idx, it) in trace.iterates.iter().enumerate() {
            it.write_csv(format!("{}.iter{}.csv", stem.display(), idx + 1))?;
        }
    }
    let meta = RecoveryMeta {
        algorithm,
        m,
        l_max,
        timings: Timings {
            setup_seconds: trace.setup_seconds,
            step_seconds: trace.step_seconds.clone(),
            mean_step_seconds: trace.mean_step_seconds(),
        },
        cauchy_norms: trace.cauchy_norms.clone(),
        imag_norms: trace.imag_norms.clone(),
        omitted_fraction,
        solver_failures: trace.solver_failures.clone(),
    };
    std::fs::write(format!("{}.json", stem.display()), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
