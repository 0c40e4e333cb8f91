//! Decay-law fits and the inequalities behind them, evaluated on recorded
//! trajectories.
//!
//! Along a solution `dE/dt = -D`. If `D ≥ C E^((α+1)/2)` then
//!
//! * for `α < 1`, `E^((1-α)/2)` falls at least linearly and the film is flat
//!   after a finite time;
//! * for `α = 1`, `E` decays at least exponentially;
//! * for `α > 1`, `E(t) ≤ E₀ / (1 + c̃ t)^(2/(α-1))` with
//!   `c̃ = C (α-1)/2 · E₀^((α-1)/2)`.
//!
//! The fits below measure which of these actually happens; the bounds are
//! checked with the constant `C` measured on the same trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::Diagnostics;
use crate::model::{FlowExponent, Rheology};
use crate::timestep::{Termination, Trajectory};

/// Fewest samples a constant or a fit is computed from.
pub const MIN_SAMPLES: usize = 10;
/// Extinction fits use samples with `E` in `[lo, hi] · E₀`.
pub const EXTINCTION_WINDOW: (f64, f64) = (1e-10, 0.5);
/// Exponential fits need this many decades of energy in the window.
pub const MIN_EXPONENTIAL_DECADES: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    FiniteTimeExtinction,
    Polynomial,
    Exponential,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub regime: Regime,
    /// Slope of `E^((1-α)/2)` for extinction, the log-log slope for
    /// polynomial decay, the rate `λ` of `E ~ e^(-λt)` for exponential decay.
    pub fitted_exponent_or_rate: f64,
    /// Slope `-(1-α)/2 · C`, exponent `-2/(α-1)`, or the rate `C` implied
    /// by the measured constant.
    pub theoretical_value: f64,
    pub relative_gap: f64,
    pub r_squared: f64,
    pub standard_error: f64,
    pub n_points: usize,
    pub window: (f64, f64),
    pub lojasiewicz_c: f64,
    /// Root of the affine fit of `E^((1-α)/2)`.
    pub extinction_time: Option<f64>,
    /// `E₀^((1-α)/2) / ((1-α)/2 · C)`, the latest extinction time the
    /// inequality allows.
    pub extinction_bound: Option<f64>,
    /// Fraction of samples under the polynomial envelope.
    pub envelope_fraction: Option<f64>,
    /// Decades of energy spanned by the fit window.
    pub decades: f64,
    /// Why the regime is undetermined, if it is.
    pub note: Option<String>,
}

impl FitReport {
    fn undetermined(note: String) -> Self {
        FitReport {
            regime: Regime::Undetermined,
            fitted_exponent_or_rate: f64::NAN,
            theoretical_value: f64::NAN,
            relative_gap: f64::NAN,
            r_squared: 0.0,
            standard_error: f64::NAN,
            n_points: 0,
            window: (0.0, 0.0),
            lojasiewicz_c: 0.0,
            extinction_time: None,
            extinction_bound: None,
            envelope_fraction: None,
            decades: 0.0,
            note: Some(note),
        }
    }
}

/// Ordinary least-squares line through `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_standard_error: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::InsufficientData(format!(
            "a line fit needs at least 3 matching points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("abscissae do not vary".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ssr / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_standard_error: (ssr / (nf - 2.0) / sxx).sqrt(),
        n,
    })
}

fn qualifying(traj: &Trajectory) -> impl Iterator<Item = &Diagnostics> {
    let floor = traj.energy_floor;
    traj.samples.iter().filter(move |d| d.energy > floor && d.energy > 0.0)
}

/// `min D / E^((α+1)/2)` over samples above the steady-state threshold.
pub fn lojasiewicz_constant(traj: &Trajectory, alpha: FlowExponent) -> Result<f64> {
    let p = 0.5 * (alpha.value() + 1.0);
    let ratios: Vec<f64> = qualifying(traj)
        .map(|d| d.dissipation / d.energy.powf(p))
        .collect();
    if ratios.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples above the steady-state threshold, need {MIN_SAMPLES}",
            ratios.len()
        )));
    }
    Ok(ratios.into_iter().fold(f64::INFINITY, f64::min))
}

fn energy_decades(samples: &[&Diagnostics]) -> f64 {
    let hi = samples.iter().map(|d| d.energy).fold(0.0, f64::max);
    let lo = samples.iter().map(|d| d.energy).fold(f64::INFINITY, f64::min);
    (hi / lo).log10()
}

/// Affine fit of `E^((1-α)/2)` against `t` for `α < 1`.
pub fn fit_extinction(traj: &Trajectory, alpha: FlowExponent) -> Result<FitReport> {
    let a = alpha.value();
    if a >= 1.0 {
        return Err(Error::WrongRegime(format!(
            "finite-time extinction needs α < 1, got α = {a}"
        )));
    }
    let e0 = traj.initial().energy;
    let q = 0.5 * (1.0 - a);
    let (lo, hi) = EXTINCTION_WINDOW;
    let window: Vec<&Diagnostics> = traj
        .samples
        .iter()
        .filter(|d| d.energy >= lo * e0 && d.energy <= hi * e0)
        .collect();
    if window.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples with E in [{lo:e}, {hi}]·E₀, need {MIN_SAMPLES}",
            window.len()
        )));
    }
    let t: Vec<f64> = window.iter().map(|d| d.t).collect();
    let y: Vec<f64> = window.iter().map(|d| d.energy.powf(q)).collect();
    let fit = linear_fit(&t, &y)?;
    if !(fit.slope < 0.0) {
        return Err(Error::WrongRegime(format!(
            "E^((1-α)/2) does not decrease (slope {})",
            fit.slope
        )));
    }
    let c = lojasiewicz_constant(traj, alpha).unwrap_or(0.0);
    let c_alpha = q * c;
    let theoretical = -c_alpha;
    Ok(FitReport {
        regime: Regime::FiniteTimeExtinction,
        fitted_exponent_or_rate: fit.slope,
        theoretical_value: theoretical,
        relative_gap: relative_gap(fit.slope, theoretical),
        r_squared: fit.r_squared,
        standard_error: fit.slope_standard_error,
        n_points: fit.n,
        window: (t[0], t[t.len() - 1]),
        lojasiewicz_c: c,
        extinction_time: Some(-fit.intercept / fit.slope),
        extinction_bound: (c_alpha > 0.0).then(|| e0.powf(q) / c_alpha),
        envelope_fraction: None,
        decades: energy_decades(&window),
        note: None,
    })
}

fn relative_gap(fitted: f64, theoretical: f64) -> f64 {
    if theoretical == 0.0 {
        f64::NAN
    } else {
        ((fitted - theoretical) / theoretical).abs()
    }
}

/// Samples in the final decade of time, `[T/10, T]`.
fn final_decade(traj: &Trajectory) -> Vec<&Diagnostics> {
    let t_last = traj.last().t;
    qualifying(traj).filter(|d| d.t >= 0.1 * t_last).collect()
}

/// Fraction of samples with `E(t) ≤ E₀ / (1 + c̃ t)^(2/(α-1))`.
pub fn envelope_fraction(traj: &Trajectory, alpha: FlowExponent, c: f64) -> f64 {
    let a = alpha.value();
    let e0 = traj.initial().energy;
    let c_tilde = c * 0.5 * (a - 1.0) * e0.powf(0.5 * (a - 1.0));
    let p = 2.0 / (a - 1.0);
    let inside = traj
        .samples
        .iter()
        .filter(|d| d.energy <= e0 / (1.0 + c_tilde * d.t).powf(p) * (1.0 + 1e-12))
        .count();
    inside as f64 / traj.samples.len() as f64
}

/// Log-log fit of `E` against `1 + c̃t` over the final decade, for `α > 1`.
pub fn fit_polynomial(traj: &Trajectory, alpha: FlowExponent) -> Result<FitReport> {
    let a = alpha.value();
    if a <= 1.0 {
        return Err(Error::WrongRegime(format!(
            "polynomial decay needs α > 1, got α = {a}"
        )));
    }
    let c = lojasiewicz_constant(traj, alpha)?;
    let e0 = traj.initial().energy;
    let c_tilde = c * 0.5 * (a - 1.0) * e0.powf(0.5 * (a - 1.0));
    let window = final_decade(traj);
    let t_last = traj.last().t;
    if c_tilde * 0.1 * t_last < 1.0 {
        return Err(Error::InsufficientData(format!(
            "the final decade starts at c̃t = {:.3}, still in the transient",
            c_tilde * 0.1 * t_last
        )));
    }
    if window.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in the final decade, need {MIN_SAMPLES}",
            window.len()
        )));
    }
    // log(1 + c̃t) rather than log t: same tail slope, no transient bias
    let x: Vec<f64> = window.iter().map(|d| c_tilde.mul_add(d.t, 1.0).ln()).collect();
    let y: Vec<f64> = window.iter().map(|d| d.energy.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    let theoretical = -2.0 / (a - 1.0);
    Ok(FitReport {
        regime: Regime::Polynomial,
        fitted_exponent_or_rate: fit.slope,
        theoretical_value: theoretical,
        relative_gap: relative_gap(fit.slope, theoretical),
        r_squared: fit.r_squared,
        standard_error: fit.slope_standard_error,
        n_points: fit.n,
        window: (window[0].t, t_last),
        lojasiewicz_c: c,
        extinction_time: None,
        extinction_bound: None,
        envelope_fraction: Some(envelope_fraction(traj, alpha, c)),
        decades: energy_decades(&window),
        note: None,
    })
}

/// Fit of `log E` against `t` over the final decade of time.
pub fn fit_exponential(traj: &Trajectory) -> Result<FitReport> {
    let window = final_decade(traj);
    if window.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in the final decade, need {MIN_SAMPLES}",
            window.len()
        )));
    }
    let decades = energy_decades(&window);
    if decades < MIN_EXPONENTIAL_DECADES {
        return Err(Error::InsufficientData(format!(
            "energy spans {decades:.2} decades in the final decade of time, need {MIN_EXPONENTIAL_DECADES}"
        )));
    }
    let t: Vec<f64> = window.iter().map(|d| d.t).collect();
    let y: Vec<f64> = window.iter().map(|d| d.energy.ln()).collect();
    let fit = linear_fit(&t, &y)?;
    let rate = -fit.slope;
    if !(rate > 0.0) {
        return Err(Error::WrongRegime(format!("energy does not decay (rate {rate})")));
    }
    let c = lojasiewicz_constant(traj, FlowExponent::NEWTONIAN).unwrap_or(0.0);
    Ok(FitReport {
        regime: Regime::Exponential,
        fitted_exponent_or_rate: rate,
        theoretical_value: c,
        relative_gap: relative_gap(rate, c),
        r_squared: fit.r_squared,
        standard_error: fit.slope_standard_error,
        n_points: fit.n,
        window: (t[0], t[t.len() - 1]),
        lojasiewicz_c: c,
        extinction_time: None,
        extinction_bound: None,
        envelope_fraction: None,
        decades,
        note: None,
    })
}

/// Trapezoidal `∫_a^b` of one sampled field, interpolating linearly at the ends.
fn integrate_field(samples: &[Diagnostics], a: f64, b: f64, field: fn(&Diagnostics) -> f64) -> f64 {
    let value_at = |t: f64| -> f64 {
        let k = samples.partition_point(|d| d.t < t);
        if k == 0 {
            return field(&samples[0]);
        }
        let (p, q) = (&samples[k - 1], &samples[k.min(samples.len() - 1)]);
        if q.t == p.t {
            return field(q);
        }
        let s = (t - p.t) / (q.t - p.t);
        field(p) + s * (field(q) - field(p))
    };
    let mut pts: Vec<(f64, f64)> = vec![(a, value_at(a))];
    pts.extend(
        samples
            .iter()
            .filter(|d| d.t > a && d.t < b)
            .map(|d| (d.t, field(d))),
    );
    pts.push((b, value_at(b)));
    pts.windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// `∫_{t/2}^t D ds / ((1/t) ∫_{t/4}^{t/2} E ds)`.
pub fn l1_dissipation_check(traj: &Trajectory, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let s = &traj.samples;
    if s[0].t > 0.25 * t || traj.last().t < t {
        return Err(Error::InsufficientData(format!(
            "samples cover [{}, {}], need [{}, {t}]",
            s[0].t,
            traj.last().t,
            0.25 * t
        )));
    }
    let dissipated = integrate_field(s, 0.5 * t, t, |d| d.dissipation);
    let energy = integrate_field(s, 0.25 * t, 0.5 * t, |d| d.energy) / t;
    if energy == 0.0 {
        return if dissipated == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::UndefinedQuotient(
                "dissipation without energy in the earlier window".into(),
            ))
        };
    }
    Ok(dissipated / energy)
}

/// Runs the fit the theory predicts for `rheo`; failures become `Undetermined`.
pub fn classify(traj: &Trajectory, rheo: &Rheology) -> FitReport {
    let alpha = rheo.decay_exponent();
    let fit = match rheo {
        Rheology::PowerLaw { alpha } if alpha.value() < 1.0 => fit_extinction(traj, *alpha),
        Rheology::PowerLaw { alpha } if alpha.value() > 1.0 => fit_polynomial(traj, *alpha),
        _ => fit_exponential(traj),
    };
    match fit {
        Ok(report) => report,
        Err(e) => {
            let mut report = FitReport::undetermined(e.to_string());
            report.lojasiewicz_c = lojasiewicz_constant(traj, alpha).unwrap_or(0.0);
            if let (Some(first), Some(last)) = (traj.samples.first(), traj.samples.last()) {
                report.window = (first.t, last.t);
            }
            if let Termination::Extinction(t) = traj.termination {
                report.note = Some(format!("{e}; integrator reported extinction at t = {t}"));
            }
            report
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{FilmState, Grid};

    /// Trajectory whose samples are `(t, E(t), D(t))`.
    fn synthetic(points: impl Iterator<Item = (f64, f64, f64)>, floor: f64) -> Trajectory {
        let samples: Vec<Diagnostics> = points
            .map(|(t, energy, dissipation)| Diagnostics {
                t,
                energy,
                dissipation,
                mass: 1.0,
                min_height: 1.0,
                max_height: 1.0,
                h1_dist: energy.sqrt(),
            })
            .collect();
        Trajectory {
            samples,
            snapshots: Vec::new(),
            termination: Termination::ReachedTEnd,
            final_state: FilmState::constant(Grid::unit(4).unwrap(), 1.0).unwrap(),
            energy_floor: floor,
            min_height_seen: 1.0,
            max_height_seen: 1.0,
            accepted_steps: 0,
            rejected_steps: 0,
        }
    }

    fn grid(t0: f64, t1: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..=n).map(move |k| t0 + (t1 - t0) * k as f64 / n as f64)
    }

    #[test]
    fn line_fit_recovers_line() {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 - 0.7 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-14);
        assert!((f.intercept - 2.5).abs() < 1e-14);
        assert_eq!(f.r_squared, 1.0);
        assert!(linear_fit(&x[..2], &y[..2]).is_err());
    }

    #[test]
    fn lojasiewicz_constant_of_exact_power_law() {
        for alpha in [0.5, 1.0, 2.0, 3.0] {
            let a = FlowExponent::new(alpha).unwrap();
            let c = 3.7;
            let traj = synthetic(
                grid(0.0, 1.0, 40).map(|t| {
                    let e = (-t).exp();
                    (t, e, c * e.powf(0.5 * (alpha + 1.0)))
                }),
                0.0,
            );
            let got = lojasiewicz_constant(&traj, a).unwrap();
            assert!(((got - c) / c).abs() < 1e-12, "alpha={alpha}");
        }
    }

    #[test]
    fn lojasiewicz_constant_needs_samples_above_floor() {
        let traj = synthetic(grid(0.0, 1.0, 40).map(|t| (t, 0.0, 0.0)), 0.0);
        assert!(matches!(
            lojasiewicz_constant(&traj, FlowExponent::NEWTONIAN),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn extinction_fit_on_exact_model() {
        let alpha = 0.5;
        let q = 0.5 * (1.0 - alpha);
        let (e0, c): (f64, f64) = (1e-2, 0.4);
        let t_star = e0.powf(q) / c;
        let traj = synthetic(
            grid(0.0, 0.999 * t_star, 200).map(|t| {
                let e = (e0.powf(q) - c * t).powf(1.0 / q);
                // dE/dt = -(1/q) (E^q)^(1/q - 1) c
                (t, e, c / q * e.powf(1.0 - q))
            }),
            0.0,
        );
        let r = fit_extinction(&traj, FlowExponent::new(alpha).unwrap()).unwrap();
        assert_eq!(r.regime, Regime::FiniteTimeExtinction);
        assert!((r.fitted_exponent_or_rate + c).abs() < 1e-8);
        assert!(r.r_squared > 1.0 - 1e-12);
        assert!((r.extinction_time.unwrap() - t_star).abs() < 1e-8 * t_star);
        assert!(r.window.0 >= 0.0 && r.window.1 <= 0.999 * t_star);
    }

    #[test]
    fn extinction_fit_rejects_thinning() {
        let traj = synthetic(grid(0.0, 1.0, 40).map(|t| (t, (-t).exp(), (-t).exp())), 0.0);
        assert!(matches!(
            fit_extinction(&traj, FlowExponent::new(2.0).unwrap()),
            Err(Error::WrongRegime(_))
        ));
    }

    #[test]
    fn polynomial_fit_on_exact_model() {
        for alpha in [2.0, 3.0, 1.5] {
            let p = 2.0 / (alpha - 1.0);
            // E = (1+t)^-p, D = p (1+t)^(-p-1) = p E^((α+1)/2)
            let traj = synthetic(
                (0..=400).map(|k| {
                    let t = 10f64.powf(-2.0 + 5.0 * k as f64 / 400.0) - 0.01;
                    let e = (1.0 + t).powf(-p);
                    (t, e, p * (1.0 + t).powf(-p - 1.0))
                }),
                0.0,
            );
            let a = FlowExponent::new(alpha).unwrap();
            let r = fit_polynomial(&traj, a).unwrap();
            assert!((r.lojasiewicz_c - p).abs() < 1e-10, "alpha={alpha}");
            // the exact solution is the envelope itself
            assert_eq!(r.envelope_fraction, Some(1.0));
            assert!((r.fitted_exponent_or_rate + p).abs() < 1e-6 * p, "alpha={alpha}: {r:?}");
            assert!(r.r_squared > 0.999999);
        }
    }

    #[test]
    fn envelope_detects_violations() {
        let alpha = FlowExponent::new(2.0).unwrap();
        let traj = synthetic(grid(0.0, 10.0, 100).map(|t| (t, 1.0 / (1.0 + t), 1.0)), 0.0);
        // the envelope is 1/(1 + c t/2)²: below 1/(1+t) for c = 4, above it for c = 0.1
        assert!(envelope_fraction(&traj, alpha, 4.0) < 0.05);
        assert_eq!(envelope_fraction(&traj, alpha, 0.1), 1.0);
    }

    #[test]
    fn polynomial_fit_needs_long_tail() {
        let traj = synthetic(
            grid(0.0, 0.01, 50).map(|t| (t, (1.0 + t).powi(-2), 2.0 * (1.0 + t).powi(-3))),
            0.0,
        );
        assert!(matches!(
            fit_polynomial(&traj, FlowExponent::new(2.0).unwrap()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn exponential_fit_on_exact_model() {
        let traj = synthetic(grid(0.0, 5.0, 500).map(|t| (t, (-3.0 * t).exp(), 3.0 * (-3.0 * t).exp())), 0.0);
        let r = fit_exponential(&traj).unwrap();
        assert_eq!(r.regime, Regime::Exponential);
        assert!((r.fitted_exponent_or_rate - 3.0).abs() < 1e-8);
        assert!(r.r_squared > 1.0 - 1e-12);
        assert!((r.lojasiewicz_c - 3.0).abs() < 1e-10);
        assert!(r.decades > 5.0);
    }

    #[test]
    fn exponential_fit_needs_four_decades() {
        let traj = synthetic(grid(0.0, 1.0, 100).map(|t| (t, (-t).exp(), (-t).exp())), 0.0);
        assert!(matches!(fit_exponential(&traj), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn l1_ratio_closed_form_for_exponential() {
        let traj = synthetic(grid(0.0, 10.0, 20_000).map(|t| (t, (-t).exp(), (-t).exp())), 0.0);
        for t in [1.0f64, 2.0, 4.0, 8.0] {
            let expect = t * ((-t / 2.0).exp() - (-t).exp()) / ((-t / 4.0).exp() - (-t / 2.0).exp());
            let got = l1_dissipation_check(&traj, t).unwrap();
            assert!(((got - expect) / expect).abs() < 1e-6, "t={t}: {got} vs {expect}");
        }
    }

    #[test]
    fn l1_ratio_zero_without_dissipation() {
        let traj = synthetic(grid(0.0, 10.0, 100).map(|t| (t, 0.0, 0.0)), 0.0);
        assert_eq!(l1_dissipation_check(&traj, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn l1_ratio_needs_coverage() {
        let traj = synthetic(grid(0.0, 3.0, 100).map(|t| (t, (-t).exp(), (-t).exp())), 0.0);
        assert!(matches!(l1_dissipation_check(&traj, 4.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn l1_ratio_for_power_decay_is_time_independent() {
        // E = t^-2: ratio = (2^p - 1)(p - 1) / (4^(p-1) - 2^(p-1)) = 1.5 for p = 2
        let traj = synthetic(
            (0..=20_000).map(|k| {
                let t = 0.1 + 20.0 * k as f64 / 20_000.0;
                (t, t.powi(-2), 2.0 * t.powi(-3))
            }),
            0.0,
        );
        for t in [1.0, 2.0, 4.0, 8.0] {
            let got = l1_dissipation_check(&traj, t).unwrap();
            assert!((got - 1.5).abs() < 1e-5, "t={t}: {got}");
        }
    }

    #[test]
    fn classify_constant_is_undetermined() {
        let traj = synthetic(grid(0.0, 1.0, 20).map(|t| (t, 0.0, 0.0)), 0.0);
        for rheo in [
            Rheology::Newtonian,
            Rheology::power_law(0.5).unwrap(),
            Rheology::power_law(2.0).unwrap(),
            Rheology::ellis(1.5, 1.0, 1.0).unwrap(),
        ] {
            let r = classify(&traj, &rheo);
            assert_eq!(r.regime, Regime::Undetermined);
            assert!(r.note.is_some());
        }
    }
}
