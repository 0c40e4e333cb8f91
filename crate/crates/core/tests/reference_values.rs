//! Documented example values, each checked against an independent oracle.

use std::f64::consts::PI;

use thinfilm::asymptotics::{fit_exponential, fit_extinction, linear_fit, Regime};
use thinfilm::harness::run::{run_experiment, sweep, SweepParameter};
use thinfilm::harness::{make_initial_data, ExperimentConfig};
use thinfilm::oracle::{monotonicity_sweep, quadrature_functional, Functional, Profile, Shape};
use thinfilm::{functionals, FilmState, FlowExponent, Grid, Regularisation, Rheology, Termination};

fn cosine(eps: f64) -> Profile {
    Profile::unit(Shape::Cosine { mean: 1.0, eps, k: 1 })
}

fn fe(a: f64) -> FlowExponent {
    FlowExponent::new(a).unwrap()
}

#[test]
fn energy_of_first_mode() {
    let q = quadrature_functional(&cosine(0.1), Functional::Energy, fe(1.0), Regularisation::NONE).unwrap();
    assert!((q - PI * PI / 400.0).abs() < 1e-12);
    let s = cosine(0.1).sample(Grid::unit(256).unwrap()).unwrap();
    assert!((functionals::energy(&s) - q).abs() < 0.02 * q);
}

#[test]
fn dissipation_of_first_mode_shear_thinning() {
    let q = quadrature_functional(&cosine(0.05), Functional::Dissipation, fe(2.0), Regularisation::NONE).unwrap();
    let s = cosine(0.05).sample(Grid::unit(256).unwrap()).unwrap();
    let d = functionals::dissipation(&s, &Rheology::power_law(2.0).unwrap(), Regularisation::NONE).unwrap();
    assert!((d - q).abs() < 0.05 * q, "{d} vs {q}");
}

#[test]
fn mass_of_cosine_mode() {
    for n in [8, 33, 256] {
        let s = FilmState::from_fn(Grid::unit(n).unwrap(), |x| 1.0 + 0.3 * (PI * x).cos()).unwrap();
        assert!((functionals::mass(&s) - 1.0).abs() <= 1e-12 * n as f64);
    }
}

#[test]
fn h1_distance_of_first_mode() {
    let cfg = ExperimentConfig::preset("newtonian").unwrap();
    let init = make_initial_data(&cfg).unwrap();
    let p = cosine(0.05);
    let grad2 = 2.0 * quadrature_functional(&p, Functional::Energy, fe(1.0), Regularisation::NONE).unwrap();
    let exact = (0.05f64.powi(2) / 2.0 + grad2).sqrt();
    assert!((init.h1_distance - exact).abs() < 0.02 * exact);
}

#[test]
fn monotonicity_sweep_examples() {
    for s in [0.0, 0.1, 0.5] {
        assert_eq!(monotonicity_sweep(fe(1.0), Regularisation::new(s).unwrap(), 1000).unwrap(), 1.0);
    }
    assert!(monotonicity_sweep(fe(0.5), Regularisation::NONE, 10_000).unwrap() >= 0.0);
    assert!(monotonicity_sweep(fe(3.0), Regularisation::new(0.1).unwrap(), 10_000).unwrap() > 0.0);
}

#[test]
fn thickening_energy_power_is_affine() {
    let out = run_experiment(&ExperimentConfig::preset("thickening").unwrap()).unwrap();
    assert!(matches!(out.trajectory.termination, Termination::Extinction(t) if t.is_finite()));
    assert_eq!(out.summary.fit.regime, Regime::FiniteTimeExtinction);
    let fit = fit_extinction(&out.trajectory, fe(0.5)).unwrap();
    assert!(fit.r_squared > 0.999);
}

#[test]
fn thinning_energy_times_t_squared_is_bounded() {
    let mut cfg = ExperimentConfig::preset("thinning2").unwrap();
    cfg.grid.n_cells = 32;
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.trajectory.termination, Termination::ReachedTEnd);
    let tail: Vec<f64> = out
        .trajectory
        .samples
        .iter()
        .filter(|d| d.t >= 1.0)
        .map(|d| d.energy * d.t * d.t)
        .collect();
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    assert!(hi / lo < 2.0, "E t² ranges over [{lo}, {hi}]");
}

#[test]
fn newtonian_rate_is_resolution_stable() {
    let rate = |n| {
        let mut cfg = ExperimentConfig::preset("newtonian").unwrap();
        cfg.grid.n_cells = n;
        let out = run_experiment(&cfg).unwrap();
        let fit = fit_exponential(&out.trajectory).unwrap();
        assert!(fit.r_squared >= 0.999);
        fit.fitted_exponent_or_rate
    };
    let (a, b) = (rate(32), rate(64));
    assert!((a - b).abs() < 0.1 * b);
}

#[test]
fn refinement_sweep_converges() {
    let cfg = ExperimentConfig::preset("newtonian").unwrap();
    let rows = sweep(&cfg, SweepParameter::NCells, &[16.0, 32.0, 64.0], false);
    let rates: Vec<f64> = rows.iter().map(|r| r.fitted_exponent_or_rate.unwrap()).collect();
    assert!(rows.iter().all(|r| r.status == "ok"));
    assert!((rates[2] - rates[1]).abs() < (rates[1] - rates[0]).abs(), "{rates:?}");
}

#[test]
fn least_squares_recovers_a_line() {
    let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
    let fit = linear_fit(&x, &y).unwrap();
    assert!((fit.slope + 0.5).abs() < 1e-14 && (fit.intercept - 3.0).abs() < 1e-13);
    assert!((fit.r_squared - 1.0).abs() < 1e-14);
}
