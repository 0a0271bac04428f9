mod common;

use common::{poly_bump, rel_diff, truncated_convolution};
use proptest::prelude::*;
use scatlab::forward::{generate_dataset, generate_dataset_with, GenerateConfig, ScatteringDataSet};
use scatlab::grid::{make_grid, Field, GridSpec, Space};
use scatlab::inversion::{
    bcr_recover, born_from_data, data_spectrum, ewald_map, recover, BcrParams, BornSeries,
    RecoveryParams,
};
use scatlab::lab::l2_error;
use scatlab::scene::{make_cutoff, rasterize, Cutoff, PotentialSpec};
use scatlab::{Complex64, Error};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cutoff(spec: &GridSpec) -> Cutoff {
    make_cutoff(spec, 1.45, 2.0).unwrap()
}

/// Full sampling pattern with all-zero far fields; no solves happen.
fn zero_data(n: usize) -> ScatteringDataSet {
    let spec = make_grid(n, 2.1).unwrap();
    generate_dataset(&PotentialSpec::Example1.scaled(0.0), &spec, [0.0, 1.0], 1, spec.nyquist(), 1e-8).unwrap()
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn born_series_terms_are_homogeneous() {
    let d = zero_data(16);
    let spec = d.inverse_spec;
    let series = BornSeries::new(&d, 2.1).unwrap();
    let q = rasterize(&PotentialSpec::Example2, &spec);
    let base = series.q_hat_terms(&q, 4).unwrap();
    for lambda in [2.0, -0.5] {
        let scaled = series.q_hat_terms(&q.scale(c(lambda)), 4).unwrap();
        for (j, (s, b)) in scaled.iter().zip(&base).enumerate() {
            let factor = lambda.powi(j as i32 + 2);
            for (x, y) in s.data().iter().zip(b.data()) {
                if x.norm() > 0.0 {
                    assert!((x - y * factor).norm() <= 1e-12 * x.norm(), "j={} lambda={lambda}", j + 1);
                }
            }
        }
    }
    let zero = Field::zeros(spec, Space::Physical);
    assert!(series.q_hat_terms(&zero, 3).unwrap().iter().all(|f| f.max_abs() == 0.0));
    let fused = series.q_hat_sum(&q, 4).unwrap();
    let summed = base.iter().skip(1).fold(base[0].clone(), |acc, f| acc.add(f).unwrap());
    assert!(max_diff(&fused, &summed) <= 1e-14 * summed.max_abs());
}

/// `Q_1` against direct quadrature:
/// `∫ e^{-ik theta.y} q(y) ∫_{|y-z|<=rho} G(y-z) q(z) e^{ik inc.z} dz dy`,
/// the inner integral in polar coordinates around each node `y`.
#[test]
fn first_term_matches_double_quadrature() {
    let d = zero_data(32);
    let spec = d.inverse_spec;
    let (radius, center) = (0.9, [0.1, 0.05]);
    let bump = poly_bump(radius, 10, center);
    let q = Field::from_real(spec, &bump);
    let fast = BornSeries::new(&d, 2.1).unwrap().q_hat(&q, 1).unwrap();
    let h2 = spec.spacing().powi(2);
    let mut checked = 0;
    let low: Vec<_> = d.records.iter().filter(|r| r.k < 3.0).collect();
    for r in low.iter().step_by(low.len() / 5) {
        let inc = r.incident(d.theta0);
        let phase = |z: [f64; 2]| r.k * (inc[0] * z[0] + inc[1] * z[1]);
        let re = |z: [f64; 2]| bump(z) * phase(z).cos();
        let im = |z: [f64; 2]| bump(z) * phase(z).sin();
        let mut total = Complex64::new(0.0, 0.0);
        for (i, j) in spec.indices() {
            let y = spec.point(i, j);
            let qy = bump(y);
            if qy == 0.0 {
                continue;
            }
            let reach = (y[0] - center[0]).hypot(y[1] - center[1]) + radius;
            let inner = truncated_convolution(&re, y, r.k, 2.1, reach)
                + Complex64::i() * truncated_convolution(&im, y, r.k, 2.1, reach);
            let out = Complex64::from_polar(1.0, -r.k * (r.theta[0] * y[0] + r.theta[1] * y[1]));
            total += out * qy * inner;
        }
        total *= h2;
        let got = fast.get(r.i, r.j);
        assert!(rel_diff(got, total) <= 1e-6, "xi={:?} k={:.3}: {got} vs {total}", r.xi, r.k);
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn manufactured_data_gives_back_the_raster() {
    let mut d = zero_data(32);
    let spec = d.inverse_spec;
    let q = rasterize(&PotentialSpec::Example2, &spec);
    let spectrum = q.to_freq().unwrap();
    for r in &mut d.records {
        r.u_inf = spectrum.get(r.i, r.j);
    }
    let born = born_from_data(&d).unwrap();
    let back = born.to_freq().unwrap();
    let scale = spectrum.max_abs();
    for r in &d.records {
        assert!((back.get(r.i, r.j) - spectrum.get(r.i, r.j)).norm() <= 1e-10 * scale);
    }
    for o in &d.omitted {
        assert!(back.get(o.i, o.j).norm() <= 1e-10 * scale);
    }
    // Born is the raster band-limited to the recorded frequencies.
    let mut masked = Field::zeros(spec, Space::Frequency);
    for r in &d.records {
        masked.data_mut()[spec.index(r.i, r.j)] = spectrum.get(r.i, r.j);
    }
    assert!(max_diff(&born, &masked.to_phys().unwrap()) <= 1e-10 * q.max_abs());
}

#[test]
fn born_is_linear_in_the_data() {
    let spec = make_grid(16, 2.1).unwrap();
    let a = generate_dataset(&PotentialSpec::Example1.scaled(0.3), &spec, [0.0, 1.0], 2, 6.0, 1e-10).unwrap();
    let b = generate_dataset(&PotentialSpec::Example2.scaled(0.2), &spec, [0.0, 1.0], 2, 6.0, 1e-10).unwrap();
    let (x, y) = (Complex64::new(1.5, -0.5), c(-2.0));
    let combined = born_from_data(&a.combine(x, &b, y).unwrap()).unwrap();
    let expected = born_from_data(&a).unwrap().scale(x).add(&born_from_data(&b).unwrap().scale(y)).unwrap();
    assert!(max_diff(&combined, &expected) <= 1e-13 * expected.max_abs());
    assert_eq!(born_from_data(&zero_data(16)).unwrap().max_abs(), 0.0);
}

fn example_data(p: &PotentialSpec, n: usize) -> ScatteringDataSet {
    let spec = make_grid(n, 2.1).unwrap();
    generate_dataset_with(p, &spec, &GenerateConfig::default()).unwrap()
}

#[test]
fn fixed_point_map_structure() {
    let d = example_data(&PotentialSpec::Example2.scaled(0.3), 16);
    let spec = d.inverse_spec;
    let phi = cutoff(&spec);
    let born = born_from_data(&d).unwrap();
    let series = BornSeries::new(&d, 2.1).unwrap();
    let zero = Field::zeros(spec, Space::Physical);
    let phi_born = phi.apply(&born).unwrap();
    for m in 1..=3 {
        assert_eq!(series.apply_t_m(&zero, &born, m, &phi).unwrap(), phi_born);
        let trace = recover(&d, &RecoveryParams::new(m, 3, phi.clone())).unwrap();
        assert_eq!(trace.iterates[0], zero);
        assert_eq!(trace.iterates[1], phi_born);
    }
    let q = rasterize(&PotentialSpec::Example2.scaled(0.3), &spec);
    let t = series.apply_t_m(&q, &born, 2, &phi).unwrap();
    for (i, j) in spec.indices() {
        let x = spec.point(i, j);
        if x[0].hypot(x[1]) >= 2.0 {
            assert_eq!(t.get(i, j), c(0.0));
        }
    }
    // Zero data leaves only the series correction.
    let nothing = zero_data(16);
    let series0 = BornSeries::new(&nothing, 2.1).unwrap();
    let empty = born_from_data(&nothing).unwrap();
    let t0 = series0.apply_t_m(&q, &empty, 2, &phi).unwrap();
    let corr = series0.q_hat_sum(&q, 2).unwrap().to_phys().unwrap();
    let expected = phi.apply(&corr.scale(c(-1.0))).unwrap();
    assert!(max_diff(&t0, &expected) <= 1e-14 * expected.max_abs());
    assert!(matches!(series.apply_t_m(&q, &born, 0, &phi), Err(Error::Domain(_))));
}

#[test]
fn zero_data_gives_zero_iterates() {
    let d = zero_data(16);
    let phi = cutoff(&d.inverse_spec);
    let trace = recover(&d, &RecoveryParams::new(2, 4, phi.clone())).unwrap();
    assert_eq!(trace.iterates.len(), 4);
    assert!(trace.iterates.iter().all(|f| f.max_abs() == 0.0));
    let bcr = bcr_recover(&d, &BcrParams::new(3, 1e-8, phi)).unwrap();
    assert_eq!(bcr.iterates.len(), 3);
    assert!(bcr.iterates.iter().all(|f| f.max_abs() == 0.0));
}

#[test]
fn baseline_starts_from_cutoff_born() {
    let d = example_data(&PotentialSpec::Example1.scaled(0.2), 16);
    let phi = cutoff(&d.inverse_spec);
    let bcr = bcr_recover(&d, &BcrParams::new(2, 1e-8, phi.clone())).unwrap();
    assert_eq!(bcr.iterates[0], phi.apply(&born_from_data(&d).unwrap()).unwrap());
    assert_eq!(bcr.solver_failures, vec![0]);
    assert_eq!(bcr.cauchy_norms.len(), 1);
}

#[test]
fn recovery_is_deterministic() {
    let d = example_data(&PotentialSpec::Example2.scaled(0.2), 16);
    let phi = cutoff(&d.inverse_spec);
    let mut params = RecoveryParams::new(3, 4, phi);
    params.parallel = false;
    let a = recover(&d, &params).unwrap();
    let b = recover(&d, &params).unwrap();
    assert_eq!(a.iterates, b.iterates);
    assert_eq!(a.cauchy_norms, b.cauchy_norms);
    params.parallel = true;
    let p = recover(&d, &params).unwrap();
    for (x, y) in a.iterates.iter().zip(&p.iterates) {
        assert!(max_diff(x, y) <= 1e-12 * x.max_abs().max(f64::MIN_POSITIVE));
    }
}

#[test]
fn early_stop_and_trace_lengths() {
    let d = example_data(&PotentialSpec::Example2.scaled(0.1), 16);
    let phi = cutoff(&d.inverse_spec);
    let full = recover(&d, &RecoveryParams::new(2, 8, phi.clone())).unwrap();
    assert_eq!(full.iterates.len(), 8);
    assert_eq!(full.cauchy_norms.len(), 7);
    assert_eq!(full.imag_norms.len(), 8);
    assert_eq!(full.step_seconds.len(), 7);
    let mut params = RecoveryParams::new(2, 8, phi);
    params.stop_tol = 1e-3;
    let short = recover(&d, &params).unwrap();
    assert!(short.iterates.len() < 8);
    let last = short.iterates.len() - 1;
    assert!(short.cauchy_norms[last - 1] < 1e-3 * short.iterates[last].l2_norm());
    assert_eq!(short.iterates[..], full.iterates[..short.iterates.len()]);
    params.m = 0;
    assert!(recover(&d, &params).is_err());
}

/// The imaginary part stays a small fraction of the iterate for both examples.
#[test]
fn imaginary_part_stays_small() {
    for p in [PotentialSpec::Example1, PotentialSpec::Example2] {
        let d = example_data(&p, 32);
        let trace = recover(&d, &RecoveryParams::new(2, 6, cutoff(&d.inverse_spec))).unwrap();
        for (f, im) in trace.iterates.iter().zip(&trace.imag_norms).skip(1) {
            let ratio = im / f.l2_norm();
            assert!(ratio < 0.2, "{}: imaginary fraction {ratio:.3}", p.id());
        }
    }
}

/// On identical data the baseline lands within a factor two of the best
/// fixed-point iterate and every one of its steps costs more.
#[test]
fn baseline_parity() {
    let p = PotentialSpec::Example2.scaled(0.5);
    let d = example_data(&p, 32);
    let phi = cutoff(&d.inverse_spec);
    let new = recover(&d, &RecoveryParams::new(2, 6, phi.clone())).unwrap();
    let bcr = bcr_recover(&d, &BcrParams::new(4, 1e-8, phi)).unwrap();
    let best = new.iterates.iter().map(|f| l2_error(f, &p)).fold(f64::INFINITY, f64::min);
    let last = l2_error(bcr.last().unwrap(), &p);
    assert!(last <= 2.0 * best, "baseline {last:.4} vs best {best:.4}");
    assert!(bcr.mean_step_seconds() > new.mean_step_seconds());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ewald_map_inverts_on_grid(i in 0usize..64, j in 0usize..64, angle in 0.0f64..std::f64::consts::TAU) {
        let spec = make_grid(64, 2.1).unwrap();
        let theta0 = [angle.cos(), angle.sin()];
        let xi = spec.freq(i, j);
        match ewald_map(xi, theta0, 1e-9) {
            Ok(e) => {
                prop_assert!(e.k > 0.0);
                prop_assert!((e.theta[0].hypot(e.theta[1]) - 1.0).abs() <= 1e-12);
                let back = e.frequency(theta0);
                prop_assert!((back[0] - xi[0]).abs() <= 1e-10 && (back[1] - xi[1]).abs() <= 1e-10);
                let along = xi[0] * theta0[0] + xi[1] * theta0[1];
                prop_assert_eq!(e.sign, if along < 0.0 { 1 } else { -1 });
            }
            Err(_) => {
                let along = xi[0] * theta0[0] + xi[1] * theta0[1];
                prop_assert!(xi == [0.0, 0.0] || along.abs() < 1e-9);
            }
        }
    }
}

#[test]
fn data_spectrum_places_records() {
    let d = example_data(&PotentialSpec::Example1.scaled(0.1), 8);
    let s = data_spectrum(&d);
    assert_eq!(s.space(), Space::Frequency);
    for r in &d.records {
        assert_eq!(s.get(r.i, r.j), r.u_inf);
    }
    for o in &d.omitted {
        assert_eq!(s.get(o.i, o.j), c(0.0));
    }
}

/// Distance from the converged `q_m` to a deep-series reference shrinks like
/// `eps^(m+2)`: the dropped Born terms are the only difference between them,
/// while the sampling floor is common to both.
#[test]
fn series_truncation_shrinks_with_amplitude() {
    let converged = |d: &ScatteringDataSet, m: usize| {
        let mut params = RecoveryParams::new(m, 40, cutoff(&d.inverse_spec));
        params.stop_tol = 1e-13;
        recover(d, &params).unwrap().last().unwrap().clone()
    };
    let gaps: Vec<[f64; 2]> = [0.2, 0.1]
        .iter()
        .map(|&eps| {
            let d = example_data(&PotentialSpec::Example2.scaled(eps), 32);
            let reference = converged(&d, 6);
            [1, 2].map(|m| converged(&d, m).sub(&reference).unwrap().l2_norm())
        })
        .collect();
    for (idx, m) in [1usize, 2].into_iter().enumerate() {
        let rate = (gaps[0][idx] / gaps[1][idx]).log2();
        assert!(rate >= m as f64 + 0.5, "m={m}: rate {rate:.3}");
    }
}
