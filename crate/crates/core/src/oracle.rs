//! Slow, independent cross-checks for the primary discretisation.
//!
//! Nothing here calls into [`crate::spatial`] or [`crate::functionals`]:
//! continuum functionals are computed by adaptive quadrature of closed-form
//! profiles, and the reference trajectory uses its own ghost-cell stencil,
//! its own constitutive formulas and a fixed-step classical Runge–Kutta
//! method on a grid twice as fine.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::Diagnostics;
use crate::model::{psi_sigma, FlowExponent, Regularisation, Rheology};
use crate::spatial::{FilmState, Grid};
use crate::timestep::{Termination, Trajectory};

/// Relative agreement required between successive quadrature refinements.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Largest grid the reference integrator accepts.
pub const REFERENCE_MAX_CELLS: usize = 128;
const MAX_LEVEL: u32 = 14;

/// Closed-form film profiles with known derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Constant { c: f64 },
    /// `c0 + slope (x - x_left)`.
    Affine { c0: f64, slope: f64 },
    /// `mean + eps cos(kπ (x - x_left) / L)`.
    Cosine { mean: f64, eps: f64, k: u32 },
    /// `mean + amp (2s³ - 3s²)` with `s = (x - x_left) / L`; flat at both ends.
    Cubic { mean: f64, amp: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub shape: Shape,
    pub x_left: f64,
    pub x_right: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functional {
    Energy,
    Dissipation,
    Mass,
    LpNormThirdDerivative,
}

impl Profile {
    pub fn new(shape: Shape, x_left: f64, x_right: f64) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite() && x_left < x_right) {
            return Err(Error::Domain(format!("bad interval ({x_left}, {x_right})")));
        }
        Ok(Profile {
            shape,
            x_left,
            x_right,
        })
    }

    pub fn unit(shape: Shape) -> Self {
        Profile {
            shape,
            x_left: 0.0,
            x_right: 1.0,
        }
    }

    fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    /// `(u, u_x, u_xxx)` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let l = self.length();
        let s = (x - self.x_left) / l;
        match self.shape {
            Shape::Constant { c } => (c, 0.0, 0.0),
            Shape::Affine { c0, slope } => (c0 + slope * (x - self.x_left), slope, 0.0),
            Shape::Cosine { mean, eps, k } => {
                let q = k as f64 * PI / l;
                let (sin, cos) = (q * (x - self.x_left)).sin_cos();
                (mean + eps * cos, -eps * q * sin, eps * q * q * q * sin)
            }
            Shape::Cubic { mean, amp } => (
                mean + amp * (2.0 * s * s * s - 3.0 * s * s),
                amp * 6.0 * s * (s - 1.0) / l,
                12.0 * amp / (l * l * l),
            ),
        }
    }

    /// Cell-centre samples on `grid`.
    pub fn sample(&self, grid: Grid) -> Result<FilmState> {
        FilmState::from_fn(grid, |x| self.eval(x).0)
    }

    /// `u_x = 0` at both ends.
    pub fn is_flat_at_walls(&self) -> bool {
        !matches!(self.shape, Shape::Affine { slope, .. } if slope != 0.0)
    }

    /// `u_x = u_xxx = 0` at both ends.
    pub fn has_no_flux_at_walls(&self) -> bool {
        match self.shape {
            Shape::Constant { .. } | Shape::Cosine { .. } => true,
            Shape::Affine { slope, .. } => slope == 0.0,
            Shape::Cubic { amp, .. } => amp == 0.0,
        }
    }

    /// Whether the discrete functional approximates this profile's integral
    /// to second order. The discrete operators build `u_x = 0` (energy) and
    /// additionally `u_xxx = 0` (dissipation, third-derivative norm) into the
    /// walls; a profile violating them differs by `O(h)` boundary terms.
    pub fn second_order_for(&self, functional: Functional) -> bool {
        match functional {
            Functional::Mass => true,
            Functional::Energy => self.is_flat_at_walls(),
            Functional::Dissipation | Functional::LpNormThirdDerivative => self.has_no_flux_at_walls(),
        }
    }

    /// Points where `u_xxx` vanishes inside the interval, plus the ends.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![self.x_left];
        if let Shape::Cosine { k, .. } = self.shape {
            pts.extend((1..k).map(|j| self.x_left + self.length() * j as f64 / k as f64));
        }
        pts.push(self.x_right);
        pts
    }
}

/// Power-law constitutive law written out independently of [`crate::model`].
fn power_law_dissipation_density(u: f64, w: f64, alpha: f64, sigma: f64) -> f64 {
    let m = u.powf(alpha + 2.0);
    if sigma == 0.0 {
        m * w.abs().powf(alpha + 1.0)
    } else {
        m * (w * w + sigma * sigma).powf(0.5 * (alpha - 1.0)) * w * w
    }
}

/// Tanh–sinh quadrature of `f` over `[a, b]`. Nodes near the ends are placed
/// from the complementary distance, so endpoint singularities are resolved
/// without cancellation. Successive halvings of the step must agree to
/// `QUADRATURE_TOL`.
fn tanh_sinh(a: f64, b: f64, f: &dyn Fn(f64) -> f64) -> Result<f64> {
    let half = 0.5 * (b - a);
    let t_max = 4.0;
    let term = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        // 1 - tanh(|u|) without cancellation
        let gap = 2.0 / (1.0 + (2.0 * u.abs()).exp());
        let weight = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        if weight == 0.0 || gap == 0.0 {
            return 0.0;
        }
        let x = if u >= 0.0 { b - half * gap } else { a + half * gap };
        weight * f(x)
    };
    let mut step = 1.0;
    let mut sum = term(0.0);
    let mut k = 1;
    while k as f64 * step <= t_max {
        sum += term(k as f64 * step) + term(-(k as f64) * step);
        k += 1;
    }
    let mut prev = half * step * sum;
    for _ in 0..MAX_LEVEL {
        step *= 0.5;
        // new nodes are the odd multiples of the halved step
        let mut k = 1;
        while k as f64 * step <= t_max {
            sum += term(k as f64 * step) + term(-(k as f64) * step);
            k += 2;
        }
        let next = half * step * sum;
        if !next.is_finite() {
            return Err(Error::Oracle(format!("non-finite integrand on [{a}, {b}]")));
        }
        let scale = next.abs().max(prev.abs());
        if (next - prev).abs() <= QUADRATURE_TOL * scale || scale < 1e-300 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Oracle(format!(
        "quadrature on [{a}, {b}] did not settle to {QUADRATURE_TOL:e}"
    )))
}

/// Continuum value of `functional` for `profile` under power-law rheology.
pub fn quadrature_functional(
    profile: &Profile,
    functional: Functional,
    alpha: FlowExponent,
    reg: Regularisation,
) -> Result<f64> {
    let a = alpha.value();
    let sigma = reg.sigma();
    let density = |x: f64| -> f64 {
        let (u, ux, uxxx) = profile.eval(x);
        match functional {
            Functional::Mass => u,
            Functional::Energy => 0.5 * ux * ux,
            Functional::Dissipation => power_law_dissipation_density(u, uxxx, a, sigma),
            Functional::LpNormThirdDerivative => uxxx.abs().powf(a + 1.0),
        }
    };
    let pts = profile.breakpoints();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += tanh_sinh(w[0], w[1], &density)?;
    }
    Ok(total)
}

/// Multiplier of `h²` bounding `|discrete - continuum|` for a profile that is
/// second order for `functional`.
pub const AGREEMENT_CONSTANT: f64 = 5.0;

/// Scale of the `O(h²)` discretisation error: `|Q| q² p`, with `q` the
/// profile's wavenumber (`kπ/L` for cosines, `π/L` otherwise) and `p` the
/// power of the differenced quantity in the integrand.
pub fn agreement_scale(profile: &Profile, functional: Functional, alpha: FlowExponent, value: f64) -> f64 {
    let k = match profile.shape {
        Shape::Cosine { k, .. } => k.max(1) as f64,
        _ => 1.0,
    };
    let q = k * PI / profile.length();
    let p = match functional {
        Functional::Mass => 1.0,
        Functional::Energy => 2.0,
        Functional::Dissipation | Functional::LpNormThirdDerivative => alpha.value() + 1.0,
    };
    value.abs() * q * q * p
}

/// Whether a discrete value lies within `AGREEMENT_CONSTANT h² scale` of
/// the continuum value.
pub fn agrees(discrete: f64, continuum: f64, h: f64, scale: f64) -> bool {
    (discrete - continuum).abs() <= AGREEMENT_CONSTANT * h * h * scale + 1e-12 * continuum.abs()
}

/// Independent ghost-cell right-hand side on a uniform grid.
struct ReferenceOperator {
    rheo: Rheology,
    sigma: f64,
    h: f64,
    ghost: Vec<f64>,
    flux: Vec<f64>,
    w: Vec<f64>,
}

impl ReferenceOperator {
    fn new(n: usize, h: f64, rheo: Rheology, reg: Regularisation) -> Self {
        ReferenceOperator {
            rheo,
            sigma: reg.sigma(),
            h,
            ghost: vec![0.0; n + 2],
            flux: vec![0.0; n + 1],
            w: vec![0.0; n + 1],
        }
    }

    fn flux_density(&self, u: f64, w: f64) -> f64 {
        match self.rheo {
            Rheology::Newtonian => u * u * u * w,
            Rheology::PowerLaw { alpha } => {
                let a = alpha.value();
                let shear = if self.sigma == 0.0 {
                    if w == 0.0 {
                        0.0
                    } else {
                        w.abs().powf(a - 1.0) * w
                    }
                } else {
                    (w * w + self.sigma * self.sigma).powf(0.5 * (a - 1.0)) * w
                };
                u.powf(a + 2.0) * shear
            }
            Rheology::Ellis { alpha, a, b } => {
                let g = if u * w == 0.0 {
                    if alpha.value() == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (u * w).abs().powf(alpha.value() - 1.0)
                };
                a * u * u * u * (1.0 + b * g) * w
            }
        }
    }

    /// Fills `out` with `du/dt` and returns the dissipation `h Σ F w`.
    fn eval(&mut self, u: &[f64], out: &mut [f64]) -> f64 {
        let n = u.len();
        // ghost layout: index j + 1 holds cell j, mirrored at both walls
        self.ghost[1..=n].copy_from_slice(u);
        self.ghost[0] = u[0];
        self.ghost[n + 1] = u[n - 1];
        let g = &self.ghost;
        let h3 = self.h * self.h * self.h;
        let mut dissipation = 0.0;
        self.flux[0] = 0.0;
        self.flux[n] = 0.0;
        for f in 1..n {
            // cells f-2, f-1 | f, f+1 around face f
            let w = (g[f + 2] - 3.0 * g[f + 1] + 3.0 * g[f] - g[f - 1]) / h3;
            let uf = 0.5 * (g[f] + g[f + 1]);
            let flux = self.flux_density(uf, w);
            self.flux[f] = flux;
            self.w[f] = w;
            dissipation += flux * w;
        }
        for i in 0..n {
            out[i] = (self.flux[i] - self.flux[i + 1]) / self.h;
        }
        self.h * dissipation
    }

    /// `max_f m ψ′` with `ψ′` capped, as in the stable step estimate.
    fn stiffness(&self, u: &[f64], cap: f64) -> f64 {
        let n = u.len();
        let mut worst: f64 = 0.0;
        for f in 1..n {
            let uf = 0.5 * (u[f - 1] + u[f]);
            let (m0, m1) = (u[f.saturating_sub(2)], u[(f + 1).min(n - 1)]);
            let w = (m1 - 3.0 * u[f] + 3.0 * u[f - 1] - m0) / (self.h * self.h * self.h);
            let eps = 1e-6 * w.abs().max(1e-3);
            let slope = (self.flux_density(uf, w + eps) - self.flux_density(uf, w - eps)) / (2.0 * eps);
            worst = worst.max(slope.min(cap * uf.powf(self.rheo.alpha().value() + 2.0)));
        }
        worst
    }
}

/// Cosine-series prolongation to the doubled grid. Each mode is divided by
/// the damping that pair averaging applies to it, so `restrict(prolong(u))`
/// returns `u` and the data stay smooth (no kinks for the fourth-order
/// operator to amplify).
fn prolong(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let nf = n as f64;
    let coeffs: Vec<f64> = (0..n)
        .map(|k| {
            let c: f64 = u
                .iter()
                .enumerate()
                .map(|(i, &v)| v * (k as f64 * PI * (i as f64 + 0.5) / nf).cos())
                .sum();
            let norm = if k == 0 { 1.0 / nf } else { 2.0 / nf };
            norm * c / (k as f64 * PI / (4.0 * nf)).cos()
        })
        .collect();
    (0..2 * n)
        .map(|j| {
            let x = (j as f64 + 0.5) / (2.0 * nf);
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * (k as f64 * PI * x).cos())
                .sum()
        })
        .collect()
}

fn restrict(fine: &[f64]) -> Vec<f64> {
    fine.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Fixed-step classical Runge–Kutta on the doubled grid, with
/// `dt = c_stab h_fine⁴ / max(m ψ′) / 16`, restricted back to the caller's grid.
pub fn reference_integrate(
    state0: &FilmState,
    rheo: &Rheology,
    reg: Regularisation,
    t_end: f64,
) -> Result<Trajectory> {
    let grid = *state0.grid();
    let n = grid.n_cells();
    if n > REFERENCE_MAX_CELLS {
        return Err(Error::Domain(format!(
            "reference integration is limited to {REFERENCE_MAX_CELLS} cells, got {n}"
        )));
    }
    if n < 4 {
        return Err(Error::Size { n, min: 4 });
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Domain(format!("t_end must be positive, got {t_end}")));
    }
    let h_fine = grid.h() / 2.0;
    let mut fine_op = ReferenceOperator::new(2 * n, h_fine, *rheo, reg);
    let mut coarse_op = ReferenceOperator::new(n, grid.h(), *rheo, reg);
    let mut u = prolong(state0.values());
    let u_floor = 1e-3 * state0.min();

    let stiffness = fine_op.stiffness(&u, crate::timestep::DEFAULT_PSI_PRIME_CAP);
    let dt_target = if stiffness > 0.0 {
        crate::timestep::DEFAULT_C_STAB * h_fine.powi(4) / stiffness / 16.0
    } else {
        t_end
    };
    let steps = (t_end / dt_target).ceil().max(1.0) as u64;
    let dt = t_end / steps as f64;
    let stride = (steps / 400).max(1);

    let mut samples = Vec::new();
    let mut scratch = vec![0.0; n];
    let mut record = |t: f64, fine: &[f64], samples: &mut Vec<Diagnostics>| {
        let coarse = restrict(fine);
        let h = grid.h();
        let energy: f64 = coarse.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum::<f64>() / (2.0 * h);
        let mass: f64 = h * coarse.iter().sum::<f64>();
        let mean = mass / grid.length();
        let l2: f64 = h * coarse.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let dissipation = coarse_op.eval(&coarse, &mut scratch);
        samples.push(Diagnostics {
            t,
            energy,
            dissipation,
            mass,
            min_height: coarse.iter().copied().fold(f64::INFINITY, f64::min),
            max_height: coarse.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            h1_dist: (l2 + 2.0 * energy).sqrt(),
        });
    };

    let m = 2 * n;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut stage = vec![0.0; m];
    let mut min_seen = f64::INFINITY;
    let mut max_seen = f64::NEG_INFINITY;
    record(0.0, &u, &mut samples);
    let mut termination = Termination::ReachedTEnd;
    for step in 1..=steps {
        fine_op.eval(&u, &mut k1);
        for i in 0..m {
            stage[i] = u[i] + 0.5 * dt * k1[i];
        }
        fine_op.eval(&stage, &mut k2);
        for i in 0..m {
            stage[i] = u[i] + 0.5 * dt * k2[i];
        }
        fine_op.eval(&stage, &mut k3);
        for i in 0..m {
            stage[i] = u[i] + dt * k3[i];
        }
        fine_op.eval(&stage, &mut k4);
        for i in 0..m {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = dt * step as f64;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Oracle(format!("reference run blew up at t = {t}")));
        }
        let coarse = restrict(&u);
        for &v in &coarse {
            min_seen = min_seen.min(v);
            max_seen = max_seen.max(v);
        }
        if u.iter().any(|&v| v <= u_floor) {
            termination = Termination::PositivityBreach(t);
            record(t, &u, &mut samples);
            break;
        }
        if step % stride == 0 || step == steps {
            record(t, &u, &mut samples);
        }
    }
    let final_state = FilmState::new(grid, restrict(&u))?;
    Ok(Trajectory {
        samples,
        snapshots: Vec::new(),
        termination,
        final_state,
        energy_floor: 0.0,
        min_height_seen: min_seen.min(state0.min()),
        max_height_seen: max_seen.max(state0.max()),
        accepted_steps: steps,
        rejected_steps: 0,
    })
}

/// `min (ψ_σ(v) - ψ_σ(w)) / (v - w)` over random pairs with log-uniform
/// magnitudes in `[10⁻³, 10³]` and random signs. Nonnegative exactly when
/// `ψ_σ` is monotone on the samples; equals 1 for `α = 1`.
pub fn monotonicity_sweep(alpha: FlowExponent, reg: Regularisation, n_samples: usize) -> Result<f64> {
    if n_samples < 1000 {
        return Err(Error::Domain(format!(
            "monotonicity sweep needs at least 1000 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f4d_1e00);
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        let mag = 10f64.powf(rng.gen_range(-3.0..=3.0));
        if rng.gen::<bool>() {
            mag
        } else {
            -mag
        }
    };
    let mut worst = f64::INFINITY;
    for _ in 0..n_samples {
        let v = draw(&mut rng);
        let w = draw(&mut rng);
        if v == w {
            continue;
        }
        let q = (psi_sigma(v, alpha, reg)? - psi_sigma(w, alpha, reg)?) / (v - w);
        worst = worst.min(q);
    }
    Ok(worst)
}
