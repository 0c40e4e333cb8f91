//! Adaptive explicit time stepping with a positivity guard and
//! steady-state / extinction detection.
//!
//! The default stepper is the Bogacki–Shampine 3(2) pair with
//! first-same-as-last stages and a PI step-size controller, with the step
//! also held inside the pair's real stability interval. For strongly stiff
//! runs a second-order Runge–Kutta–Chebyshev method is available: its
//! stability interval grows with the square of the stage count, so the `h⁴`
//! restriction costs `O(h⁻²)` right-hand sides per unit time instead of
//! `O(h⁻⁴)`. Both are linear combinations of conservative right-hand
//! sides, so the discrete mass is preserved up to round-off.
//!
//! Local errors are measured against `abs_tol + rel_tol · max_i |u_i - ū|`,
//! the size of the perturbation, so the relative accuracy of the decaying
//! part does not degrade as the film flattens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{energy_of, h1_distance_to_mean, mass, Diagnostics};
use crate::model::{Regularisation, Rheology};
use crate::spatial::{FilmState, FluxOperator, Grid};

pub const DEFAULT_C_STAB: f64 = 0.5;
pub const DEFAULT_PSI_PRIME_CAP: f64 = 1e8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    BogackiShampine,
    Chebyshev,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` picks a fraction of [`stable_dt_estimate`].
    pub dt_init: Option<f64>,
    pub dt_min: f64,
    /// Stages dipping below this fraction of `min u₀` are rejected.
    pub positivity_floor: f64,
    /// Steady state once `E ≤ steady_energy_fraction · E₀`.
    pub steady_energy_fraction: f64,
    pub sample_stride: usize,
    /// Number of evenly spaced state snapshots to keep (0 = none).
    pub snapshots: usize,
    pub c_stab: f64,
    pub psi_prime_cap: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::BogackiShampine,
            t_end: 1.0,
            rel_tol: 1e-6,
            abs_tol: 1e-12,
            dt_init: None,
            dt_min: 1e-20,
            positivity_floor: 1e-3,
            steady_energy_fraction: 1e-14,
            sample_stride: 100,
            snapshots: 0,
            c_stab: DEFAULT_C_STAB,
            psi_prime_cap: DEFAULT_PSI_PRIME_CAP,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.dt_min > 0.0) {
            return bad(format!("dt_min must be positive, got {}", self.dt_min));
        }
        if let Some(dt) = self.dt_init {
            if !(dt > self.dt_min && dt <= self.t_end) {
                return bad(format!("need dt_min < dt_init <= t_end, got dt_init = {dt}"));
            }
        } else if self.dt_min >= self.t_end {
            return bad(format!("dt_min must be below t_end, got {}", self.dt_min));
        }
        if !(self.positivity_floor > 0.0 && self.positivity_floor < 1.0) {
            return bad(format!(
                "positivity_floor must lie in (0, 1), got {}",
                self.positivity_floor
            ));
        }
        if !(self.steady_energy_fraction >= 0.0 && self.steady_energy_fraction < 1.0) {
            return bad(format!(
                "steady_energy_fraction must lie in [0, 1), got {}",
                self.steady_energy_fraction
            ));
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be at least 1".into());
        }
        if !(self.c_stab > 0.0 && self.psi_prime_cap >= 1.0) {
            return bad("c_stab must be positive and psi_prime_cap at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t", rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    SteadyState(f64),
    Extinction(f64),
    PositivityBreach(f64),
    StepUnderflow(f64),
}

impl Termination {
    pub fn is_numerical_failure(&self) -> bool {
        matches!(self, Termination::PositivityBreach(_) | Termination::StepUnderflow(_))
    }

    pub fn extinction_time(&self) -> Option<f64> {
        match *self {
            Termination::Extinction(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub state: FilmState,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Diagnostics>,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub final_state: FilmState,
    /// Energy below which the run counts as steady.
    pub energy_floor: f64,
    /// Extremes of the film height over every accepted step.
    pub min_height_seen: f64,
    pub max_height_seen: f64,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

impl Trajectory {
    pub fn initial(&self) -> &Diagnostics {
        &self.samples[0]
    }

    pub fn last(&self) -> &Diagnostics {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|d| d.t)
    }

    /// Largest relative deviation of the sampled mass from the initial mass.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.initial().mass;
        self.samples
            .iter()
            .map(|d| ((d.mass - m0) / m0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest increase `E(t_{k+1}) - E(t_k)` between consecutive samples.
    pub fn max_energy_increase(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|p| p[1].energy - p[0].energy)
            .fold(0.0, f64::max)
    }

    /// `|E(t_b) - E(t_a) + ∫ D dt|` over the whole run, trapezoidal in time.
    pub fn energy_identity_residual(&self) -> f64 {
        let integral: f64 = self
            .samples
            .windows(2)
            .map(|p| 0.5 * (p[1].t - p[0].t) * (p[0].dissipation + p[1].dissipation))
            .sum();
        (self.last().energy - self.initial().energy + integral).abs()
    }

    /// Whether every accepted step stayed in `[ū/2, 2ū]`.
    pub fn stays_in_corridor(&self, mean: f64) -> bool {
        self.min_height_seen >= 0.5 * mean && self.max_height_seen <= 2.0 * mean
    }
}

/// `c_stab h⁴ / max_f (m(u_f) ψ′(w_f))` with the default constants.
pub fn stable_dt_estimate(state: &FilmState, rheo: &Rheology, reg: Regularisation) -> Result<f64> {
    let mut op = FluxOperator::new(*state.grid(), rheo, reg)?;
    Ok(op.stable_dt(state.values(), DEFAULT_C_STAB, DEFAULT_PSI_PRIME_CAP))
}

// Bogacki–Shampine 3(2)
const A21: f64 = 0.5;
const A32: f64 = 0.75;
const B1: f64 = 2.0 / 9.0;
const B2: f64 = 1.0 / 3.0;
const B3: f64 = 4.0 / 9.0;
const E1: f64 = 2.0 / 9.0 - 7.0 / 24.0;
const E2: f64 = 1.0 / 3.0 - 1.0 / 4.0;
const E3: f64 = 4.0 / 9.0 - 1.0 / 3.0;
const E4: f64 = -1.0 / 8.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
// PI gains for an order-3 local error estimate (both pairs)
const K_I: f64 = 0.7 / 3.0;
const K_P: f64 = 0.4 / 3.0;
// The frozen-coefficient operator has spectral radius at most 16 max(∂F/∂w) / h⁴
// and BS3(2) is stable on [-2.51, 0]. Staying inside keeps the stiff modes damped.
const STABLE_FRACTION: f64 = 0.9 * 2.51 / 16.0;
// Chebyshev damping and stage limit for the stabilised method
const RKC_DAMPING: f64 = 2.0 / 13.0;
const RKC_MAX_STAGES: usize = 20_000;
const RKC_RADIUS_SAFETY: f64 = 1.2;

/// Integrates the semidiscrete thin-film flow from `state0` up to `cfg.t_end`.
pub fn integrate(
    state0: &FilmState,
    rheo: &Rheology,
    reg: Regularisation,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = *state0.grid();
    let n = grid.n_cells();
    let h = grid.h();
    let mut op = FluxOperator::new(grid, rheo, reg)?;

    // the unknown is the deviation from the initial mean height
    let base = state0.values().iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = state0.values().iter().map(|u| u - base).collect();
    let mut f0 = vec![0.0; n];
    let stiffness = op.apply_offset::<true>(&y, base, &mut f0, cfg.psi_prime_cap);
    let d0 = op.last_dissipation();
    if !d0.is_finite() || f0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: 0.0 });
    }

    let e0 = energy_of(&y, h);
    let mut run = Run {
        cfg,
        n,
        h,
        h4: h * h * h * h,
        base,
        v_floor: cfg.positivity_floor * state0.min() - base,
        energy_floor: cfg.steady_energy_fraction * e0,
        extinguishes: matches!(rheo, Rheology::PowerLaw { alpha } if alpha.value() < 1.0),
        rec: Recorder::new(grid, base, cfg),
        t: 0.0,
        y,
        f0,
        e_cur: e0,
        d_cur: d0,
        stiffness,
        err_prev: 1.0,
        last_rejected: false,
    };
    run.rec.sample(0.0, &run.y, e0, d0)?;
    run.rec.maybe_snapshot(0.0, &run.y)?;
    if e0 <= run.energy_floor {
        return run.finish(Termination::SteadyState(0.0));
    }

    let dt = match cfg.dt_init {
        Some(dt) => dt,
        None => 0.1 * run.dt_stable(),
    }
    .min(cfg.t_end)
    .max(cfg.dt_min);
    match cfg.method {
        Method::BogackiShampine => run.bogacki_shampine(&mut op, dt),
        Method::Chebyshev => run.chebyshev(&mut op, dt),
    }
}

/// Mutable state of one integration shared by both steppers.
struct Run<'a> {
    cfg: &'a IntegratorConfig,
    n: usize,
    h: f64,
    h4: f64,
    base: f64,
    /// Stages with `v_i ≤ v_floor` fall below the positivity floor.
    v_floor: f64,
    energy_floor: f64,
    extinguishes: bool,
    rec: Recorder,
    t: f64,
    y: Vec<f64>,
    /// Right-hand side at `y`.
    f0: Vec<f64>,
    e_cur: f64,
    d_cur: f64,
    /// `max_f ∂F/∂w` at `y`.
    stiffness: f64,
    err_prev: f64,
    last_rejected: bool,
}

enum Next {
    Continue(f64),
    Stop(Termination),
}

impl Run<'_> {
    fn dt_stable(&self) -> f64 {
        STABLE_FRACTION * self.h4 / self.stiffness
    }

    fn spectral_radius(&self) -> f64 {
        RKC_RADIUS_SAFETY * 16.0 * self.stiffness / self.h4
    }

    fn positive(&self, v: &[f64]) -> bool {
        v.iter().all(|&x| x > self.v_floor)
    }

    /// Error weight: the tolerance is relative to the size of the perturbation.
    fn error_scale(&self, y_new: &[f64]) -> f64 {
        let dev = self
            .y
            .iter()
            .chain(y_new)
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        self.cfg.abs_tol + self.cfg.rel_tol * dev
    }

    /// Clips the proposed step so the run lands on `t_end` without a sliver.
    fn clip(&self, dt: f64) -> (f64, bool) {
        let remaining = self.cfg.t_end - self.t;
        if dt >= remaining || remaining - dt < 0.01 * dt {
            (remaining, true)
        } else {
            (dt, false)
        }
    }

    fn finish(self, termination: Termination) -> Result<Trajectory> {
        let Run {
            rec,
            t,
            y,
            e_cur,
            d_cur,
            energy_floor,
            ..
        } = self;
        rec.finish(termination, t, &y, e_cur, d_cur, energy_floor)
    }

    /// Positivity breach: halve the step or give up.
    fn breach(&mut self, dt_step: f64) -> Next {
        self.rec.rejected += 1;
        self.last_rejected = true;
        let dt = 0.5 * dt_step;
        if dt < self.cfg.dt_min {
            Next::Stop(Termination::PositivityBreach(self.t))
        } else {
            Next::Continue(dt)
        }
    }

    /// Installs `y_new` (with right-hand side `f_new`) and proposes the next step.
    fn accept(
        &mut self,
        op: &FluxOperator,
        y_new: &mut Vec<f64>,
        f_new: &mut Vec<f64>,
        stiffness_new: f64,
        dt_step: f64,
        lands: bool,
        err: f64,
    ) -> Result<Next> {
        self.t = if lands { self.cfg.t_end } else { self.t + dt_step };
        std::mem::swap(&mut self.y, y_new);
        std::mem::swap(&mut self.f0, f_new);
        self.d_cur = op.last_dissipation();
        self.stiffness = stiffness_new;
        self.e_cur = energy_of(&self.y, self.h);
        self.rec.accepted += 1;
        self.rec.track_extremes(&self.y);

        if self.e_cur <= self.energy_floor {
            return Ok(Next::Stop(if self.extinguishes {
                Termination::Extinction(self.t)
            } else {
                Termination::SteadyState(self.t)
            }));
        }
        if self.rec.accepted.is_multiple_of(self.cfg.sample_stride as u64) {
            self.rec.sample(self.t, &self.y, self.e_cur, self.d_cur)?;
        }
        self.rec.maybe_snapshot(self.t, &self.y)?;
        if lands {
            return Ok(Next::Stop(Termination::ReachedTEnd));
        }

        let mut fac = SAFETY * err.max(1e-10).powf(-K_I) * self.err_prev.powf(K_P);
        if self.last_rejected {
            fac = fac.min(1.0);
        }
        self.err_prev = err.max(1e-4);
        self.last_rejected = false;
        Ok(Next::Continue(dt_step * fac.clamp(FAC_MIN, FAC_MAX)))
    }

    fn reject(&mut self, dt_step: f64, err: f64) -> f64 {
        self.rec.rejected += 1;
        self.last_rejected = true;
        let fac = if err.is_finite() {
            (SAFETY * err.powf(-1.0 / 3.0)).max(FAC_MIN)
        } else {
            FAC_MIN
        };
        dt_step * fac.min(0.9)
    }

    fn underflow(&self, dt: f64) -> Option<Termination> {
        (dt < self.cfg.dt_min).then_some(Termination::StepUnderflow(self.t))
    }

    fn check_finite(&self, v: &[f64]) -> Result<()> {
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { t: self.t })
        }
    }

    fn bogacki_shampine(mut self, op: &mut FluxOperator, mut dt: f64) -> Result<Trajectory> {
        let n = self.n;
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut stage = vec![0.0; n];
        let mut y_new = vec![0.0; n];

        loop {
            let (dt_step, lands) = self.clip(dt);
            let (y, k1) = (&self.y, &self.f0);

            for i in 0..n {
                stage[i] = y[i] + dt_step * A21 * k1[i];
            }
            let mut ok = self.positive(&stage);
            if ok {
                op.apply_offset::<false>(&stage, self.base, &mut k2, f64::INFINITY);
                for i in 0..n {
                    stage[i] = y[i] + dt_step * A32 * k2[i];
                }
                ok = self.positive(&stage);
            }
            if ok {
                op.apply_offset::<false>(&stage, self.base, &mut k3, f64::INFINITY);
                for i in 0..n {
                    y_new[i] = y[i] + dt_step * (B1 * k1[i] + B2 * k2[i] + B3 * k3[i]);
                }
                ok = self.positive(&y_new);
            }
            if !ok {
                match self.breach(dt_step) {
                    Next::Continue(d) => dt = d,
                    Next::Stop(term) => return self.finish(term),
                }
                continue;
            }

            let stiffness_new =
                op.apply_offset::<true>(&y_new, self.base, &mut k4, self.cfg.psi_prime_cap);
            let scale = self.error_scale(&y_new);
            let mut err = 0.0f64;
            for i in 0..n {
                let e = dt_step * (E1 * k1[i] + E2 * k2[i] + E3 * k3[i] + E4 * k4[i]);
                err = err.max(e.abs());
            }
            err /= scale;
            if !err.is_finite() {
                self.check_finite(&y_new)?;
                err = f64::INFINITY;
            }

            if err <= 1.0 {
                let next = self.accept(op, &mut y_new, &mut k4, stiffness_new, dt_step, lands, err)?;
                match next {
                    Next::Continue(d) => dt = d.min(self.dt_stable()),
                    Next::Stop(term) => return self.finish(term),
                }
            } else {
                dt = self.reject(dt_step, err);
            }
            if let Some(term) = self.underflow(dt) {
                return self.finish(term);
            }
        }
    }

    /// Second-order Runge–Kutta–Chebyshev with the damped three-term recursion.
    fn chebyshev(mut self, op: &mut FluxOperator, mut dt: f64) -> Result<Trajectory> {
        let n = self.n;
        let mut y_prev2 = vec![0.0; n];
        let mut y_prev = vec![0.0; n];
        let mut y_cur = vec![0.0; n];
        let mut f_stage = vec![0.0; n];
        let s_max = RKC_MAX_STAGES as f64;
        // largest dt·ρ the stage cap can stabilise
        let z_max = ((s_max - 1.0).powi(2) - 1.0) / 1.54;

        'steps: loop {
            dt = dt.min(z_max / self.spectral_radius());
            let (dt_step, lands) = self.clip(dt);
            let stages = 1 + (1.0 + 1.54 * dt_step * self.spectral_radius()).sqrt() as usize;
            let c = RkcCoefficients::new(stages.clamp(2, RKC_MAX_STAGES));

            let (y, f0) = (&self.y, &self.f0);
            y_prev2.copy_from_slice(y);
            for i in 0..n {
                y_prev[i] = y[i] + c.mu_t[1] * dt_step * f0[i];
            }
            for j in 2..=c.stages {
                if !self.positive(&y_prev) {
                    match self.breach(dt_step) {
                        Next::Continue(d) => dt = d,
                        Next::Stop(term) => return self.finish(term),
                    }
                    continue 'steps;
                }
                op.apply_offset::<false>(&y_prev, self.base, &mut f_stage, f64::INFINITY);
                let (mu, nu) = (c.mu[j], c.nu[j]);
                let (mu_t, gamma_t) = (c.mu_t[j] * dt_step, c.gamma_t[j] * dt_step);
                let keep = 1.0 - mu - nu;
                for i in 0..n {
                    y_cur[i] = keep * y[i] + mu * y_prev[i] + nu * y_prev2[i]
                        + mu_t * f_stage[i]
                        + gamma_t * f0[i];
                }
                std::mem::swap(&mut y_prev2, &mut y_prev);
                std::mem::swap(&mut y_prev, &mut y_cur);
            }
            // y_prev now holds the step result
            if !self.positive(&y_prev) {
                match self.breach(dt_step) {
                    Next::Continue(d) => dt = d,
                    Next::Stop(term) => return self.finish(term),
                }
                continue;
            }
            let stiffness_new =
                op.apply_offset::<true>(&y_prev, self.base, &mut f_stage, self.cfg.psi_prime_cap);
            let scale = self.error_scale(&y_prev);
            let mut err = 0.0f64;
            for i in 0..n {
                let e = 0.8 * (y[i] - y_prev[i]) + 0.4 * dt_step * (f0[i] + f_stage[i]);
                err = err.max(e.abs());
            }
            err /= scale;
            if !err.is_finite() {
                self.check_finite(&y_prev)?;
                err = f64::INFINITY;
            }

            if err <= 1.0 {
                let next =
                    self.accept(op, &mut y_prev, &mut f_stage, stiffness_new, dt_step, lands, err)?;
                match next {
                    Next::Continue(d) => dt = d,
                    Next::Stop(term) => return self.finish(term),
                }
            } else {
                dt = self.reject(dt_step, err);
            }
            if let Some(term) = self.underflow(dt) {
                return self.finish(term);
            }
        }
    }
}

/// Coefficients of the `s`-stage damped Chebyshev recursion of second order.
struct RkcCoefficients {
    stages: usize,
    mu: Vec<f64>,
    nu: Vec<f64>,
    mu_t: Vec<f64>,
    gamma_t: Vec<f64>,
}

impl RkcCoefficients {
    fn new(s: usize) -> Self {
        debug_assert!(s >= 2);
        let w0 = 1.0 + RKC_DAMPING / (s * s) as f64;
        // T_j(w0), T_j'(w0), T_j''(w0)
        let mut t = vec![0.0; s + 1];
        let mut tp = vec![0.0; s + 1];
        let mut tpp = vec![0.0; s + 1];
        t[0] = 1.0;
        t[1] = w0;
        tp[1] = 1.0;
        for j in 2..=s {
            t[j] = 2.0 * w0 * t[j - 1] - t[j - 2];
            tp[j] = 2.0 * t[j - 1] + 2.0 * w0 * tp[j - 1] - tp[j - 2];
            tpp[j] = 4.0 * tp[j - 1] + 2.0 * w0 * tpp[j - 1] - tpp[j - 2];
        }
        let w1 = tp[s] / tpp[s];
        let mut b = vec![0.0; s + 1];
        for j in 2..=s {
            b[j] = tpp[j] / (tp[j] * tp[j]);
        }
        b[0] = b[2];
        b[1] = b[2];
        let a: Vec<f64> = (0..=s).map(|j| 1.0 - b[j] * t[j]).collect();

        let mut mu = vec![0.0; s + 1];
        let mut nu = vec![0.0; s + 1];
        let mut mu_t = vec![0.0; s + 1];
        let mut gamma_t = vec![0.0; s + 1];
        mu_t[1] = b[1] * w1;
        for j in 2..=s {
            mu[j] = 2.0 * b[j] * w0 / b[j - 1];
            nu[j] = -b[j] / b[j - 2];
            mu_t[j] = 2.0 * b[j] * w1 / b[j - 1];
            gamma_t[j] = -a[j - 1] * mu_t[j];
        }
        RkcCoefficients {
            stages: s,
            mu,
            nu,
            mu_t,
            gamma_t,
        }
    }

    /// `R(z) = a_s + b_s T_s(w0 + w1 z)`, the stability polynomial.
    #[cfg(test)]
    fn stability(s: usize, z: f64) -> f64 {
        let c = RkcCoefficients::new(s);
        // run the recursion on y' = z y with y0 = 1 and dt = 1
        let (mut y2, mut y1) = (1.0, 1.0 + c.mu_t[1] * z);
        for j in 2..=s {
            let y = (1.0 - c.mu[j] - c.nu[j]) + c.mu[j] * y1 + c.nu[j] * y2 + c.mu_t[j] * z * y1
                + c.gamma_t[j] * z;
            y2 = y1;
            y1 = y;
        }
        y1
    }
}

/// Samples and snapshots; states arrive as deviations from `base`.
struct Recorder {
    grid: Grid,
    base: f64,
    samples: Vec<Diagnostics>,
    snapshots: Vec<Snapshot>,
    snapshot_times: Vec<f64>,
    min_seen: f64,
    max_seen: f64,
    accepted: u64,
    rejected: u64,
}

impl Recorder {
    fn new(grid: Grid, base: f64, cfg: &IntegratorConfig) -> Self {
        let snapshot_times = if cfg.snapshots == 0 {
            Vec::new()
        } else if cfg.snapshots == 1 {
            vec![0.0]
        } else {
            let m = cfg.snapshots - 1;
            (0..=m).map(|j| cfg.t_end * j as f64 / m as f64).collect()
        };
        Recorder {
            grid,
            base,
            samples: Vec::new(),
            snapshots: Vec::new(),
            snapshot_times,
            min_seen: f64::INFINITY,
            max_seen: f64::NEG_INFINITY,
            accepted: 0,
            rejected: 0,
        }
    }

    fn state(&self, v: &[f64]) -> Result<FilmState> {
        FilmState::new(self.grid, v.iter().map(|x| self.base + x).collect())
    }

    fn track_extremes(&mut self, u: &[f64]) {
        for &v in u {
            self.min_seen = self.min_seen.min(self.base + v);
            self.max_seen = self.max_seen.max(self.base + v);
        }
    }

    fn sample(&mut self, t: f64, u: &[f64], energy: f64, dissipation: f64) -> Result<()> {
        if self.samples.is_empty() {
            self.track_extremes(u);
        }
        let state = self.state(u)?;
        self.samples.push(Diagnostics {
            t,
            energy,
            dissipation,
            mass: mass(&state),
            min_height: state.min(),
            max_height: state.max(),
            h1_dist: h1_distance_to_mean(&state),
        });
        Ok(())
    }

    fn maybe_snapshot(&mut self, t: f64, u: &[f64]) -> Result<()> {
        let next = self.snapshots.len();
        if next < self.snapshot_times.len() && t >= self.snapshot_times[next] {
            let state = self.state(u)?;
            self.snapshots.push(Snapshot { t, state });
        }
        Ok(())
    }

    fn finish(
        mut self,
        termination: Termination,
        t: f64,
        u: &[f64],
        energy: f64,
        dissipation: f64,
        energy_floor: f64,
    ) -> Result<Trajectory> {
        if self.samples.last().is_none_or(|d| t > d.t) {
            self.sample(t, u, energy, dissipation)?;
        }
        let final_state = self.state(u)?;
        if self.snapshots.len() < self.snapshot_times.len()
            && self.snapshots.last().is_none_or(|s| s.t < t)
        {
            self.snapshots.push(Snapshot {
                t,
                state: final_state.clone(),
            });
        }
        Ok(Trajectory {
            samples: self.samples,
            snapshots: self.snapshots,
            termination,
            final_state,
            energy_floor,
            min_height_seen: self.min_seen,
            max_height_seen: self.max_seen,
            accepted_steps: self.accepted,
            rejected_steps: self.rejected,
        })
    }
}
