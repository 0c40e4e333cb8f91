//! Fast invariant suite run by `thinfilm selfcheck`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::functionals::{dissipation, energy, mass, third_derivative_lp};
use crate::model::{FlowExponent, Regularisation, Rheology};
use crate::oracle::{agreement_scale, agrees, monotonicity_sweep, quadrature_functional, Functional, Profile, Shape};
use crate::spatial::{energy_gradient, rhs, FilmState, Grid};
use crate::timestep::{integrate, IntegratorConfig, Method};

/// Relative tolerance on `Σ h rhs_i`.
pub const MASS_IDENTITY_TOL: f64 = 1e-12;
/// Relative tolerance on `⟨∇E, rhs⟩ + D`.
pub const ENERGY_IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub checks: Vec<CheckResult>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Test hooks that deliberately break the discretisation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Mutation {
    /// Reverse the sign of every face flux before the identity checks.
    pub flip_flux_sign: bool,
}

pub fn rheologies() -> Vec<Rheology> {
    vec![
        Rheology::Newtonian,
        Rheology::power_law(0.5).unwrap(),
        Rheology::power_law(2.0).unwrap(),
        Rheology::power_law(3.0).unwrap(),
        Rheology::ellis(1.5, 1.0, 1.0).unwrap(),
    ]
}

pub fn registered_profiles() -> Vec<Profile> {
    vec![
        Profile::unit(Shape::Constant { c: 1.2 }),
        Profile::unit(Shape::Affine { c0: 1.0, slope: 0.5 }),
        Profile::unit(Shape::Cosine {
            mean: 1.0,
            eps: 0.1,
            k: 1,
        }),
        Profile::unit(Shape::Cosine {
            mean: 1.0,
            eps: 0.3,
            k: 3,
        }),
        Profile::new(
            Shape::Cosine {
                mean: 2.0,
                eps: 0.5,
                k: 2,
            },
            -1.0,
            2.0,
        )
        .unwrap(),
        Profile::unit(Shape::Cubic { mean: 1.5, amp: 0.4 }),
    ]
}

/// Positive state with values in `[0.5, 1.5]` times a random level.
pub fn random_state(grid: Grid, rng: &mut ChaCha8Rng) -> FilmState {
    let level: f64 = rng.gen_range(0.2..5.0);
    let values = (0..grid.n_cells())
        .map(|_| level * rng.gen_range(0.5..1.5))
        .collect();
    FilmState::new(grid, values).unwrap()
}

/// Worst relative mass and energy-identity defects of `rhs` on `state`.
pub fn identity_defects(state: &FilmState, rheo: &Rheology, reg: Regularisation, mutation: Mutation) -> (f64, f64) {
    let mut r = rhs(state, rheo, reg).unwrap();
    if mutation.flip_flux_sign {
        r.iter_mut().for_each(|v| *v = -*v);
    }
    let h = state.grid().h();
    let g = energy_gradient(state);
    let d = dissipation(state, rheo, reg).unwrap();
    let mass_rate: f64 = h * r.iter().sum::<f64>();
    let mass_scale: f64 = h * r.iter().map(|v| v.abs()).sum::<f64>();
    let power: f64 = g.iter().zip(&r).map(|(a, b)| a * b).sum();
    let power_scale: f64 = g.iter().zip(&r).map(|(a, b)| (a * b).abs()).sum::<f64>() + d.abs();
    let rel = |v: f64, s: f64| if s > 0.0 { v.abs() / s } else { v.abs() };
    (rel(mass_rate, mass_scale), rel(power + d, power_scale))
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail,
    }
}

pub fn selfcheck() -> SelfCheckReport {
    selfcheck_with(Mutation::default())
}

pub fn selfcheck_with(mutation: Mutation) -> SelfCheckReport {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let sigmas = [0.0, 1e-2, 1e-1];

    let (mut worst_mass, mut worst_energy) = (0.0f64, 0.0f64);
    for n in [8, 16, 32] {
        let grid = Grid::unit(n).unwrap();
        for rheo in rheologies() {
            for &s in &sigmas {
                let reg = Regularisation::new(s).unwrap();
                for _ in 0..10 {
                    let state = random_state(grid, &mut rng);
                    let (m, e) = identity_defects(&state, &rheo, reg, mutation);
                    worst_mass = worst_mass.max(m);
                    worst_energy = worst_energy.max(e);
                }
            }
        }
    }
    checks.push(check(
        "mass_identity",
        worst_mass <= MASS_IDENTITY_TOL,
        format!("worst relative defect {worst_mass:.3e}"),
    ));
    checks.push(check(
        "energy_identity",
        worst_energy <= ENERGY_IDENTITY_TOL,
        format!("worst relative defect {worst_energy:.3e}"),
    ));

    let mut steady_ok = true;
    for n in [8, 32] {
        for rheo in rheologies() {
            for &s in &sigmas {
                let state = FilmState::constant(Grid::unit(n).unwrap(), 1.3).unwrap();
                let r = rhs(&state, &rheo, Regularisation::new(s).unwrap()).unwrap();
                steady_ok &= r.iter().all(|&v| v == 0.0);
            }
        }
    }
    checks.push(check("constant_states_are_steady", steady_ok, "rhs of constant states".into()));

    let mut worst_mono = f64::INFINITY;
    for alpha in [0.5, 1.0, 2.0, 3.0] {
        for &s in &sigmas {
            let q = monotonicity_sweep(FlowExponent::new(alpha).unwrap(), Regularisation::new(s).unwrap(), 2000)
                .unwrap_or(f64::NAN);
            worst_mono = worst_mono.min(q);
        }
    }
    checks.push(check(
        "psi_monotonicity",
        worst_mono >= 0.0,
        format!("smallest difference quotient {worst_mono:.3e}"),
    ));

    let mut worst_ratio = 0.0f64;
    let mut oracle_error = None;
    for profile in registered_profiles() {
        for alpha in [0.5, 1.0, 2.0, 3.0] {
            let a = FlowExponent::new(alpha).unwrap();
            for functional in [
                Functional::Mass,
                Functional::Energy,
                Functional::Dissipation,
                Functional::LpNormThirdDerivative,
            ] {
                if !profile.second_order_for(functional) {
                    continue;
                }
                let q = match quadrature_functional(&profile, functional, a, Regularisation::NONE) {
                    Ok(q) => q,
                    Err(e) => {
                        oracle_error = Some(e.to_string());
                        continue;
                    }
                };
                for n in [8, 16, 32] {
                    let grid = Grid::new(profile.x_left, profile.x_right, n).unwrap();
                    let state = profile.sample(grid).unwrap();
                    let p = primary_functional(&state, functional, a);
                    let scale = agreement_scale(&profile, functional, a, q);
                    if !agrees(p, q, grid.h(), scale) {
                        oracle_error.get_or_insert(format!(
                            "{:?} {functional:?} alpha={alpha} n={n}: primary {p} vs oracle {q}",
                            profile.shape
                        ));
                    }
                    if scale > 0.0 {
                        worst_ratio = worst_ratio.max((p - q).abs() / (grid.h() * grid.h() * scale));
                    }
                }
            }
        }
    }
    checks.push(check(
        "oracle_functionals",
        oracle_error.is_none(),
        oracle_error.unwrap_or_else(|| format!("worst |primary - oracle| / (h² scale) = {worst_ratio:.3}")),
    ));

    let state = FilmState::from_fn(Grid::unit(8).unwrap(), |x| 1.0 + 0.1 * (std::f64::consts::PI * x).cos()).unwrap();
    let cfg = IntegratorConfig {
        method: Method::BogackiShampine,
        t_end: 1e-3,
        sample_stride: 1,
        ..IntegratorConfig::default()
    };
    let detail = match integrate(&state, &Rheology::power_law(2.0).unwrap(), Regularisation::NONE, &cfg) {
        Ok(t) => {
            let e0 = t.initial().energy;
            let ok = t.mass_drift() <= 1e-12 && t.max_energy_increase() <= 10.0 * cfg.rel_tol * e0;
            (ok, format!("mass drift {:.2e}, largest energy increase {:.2e} E0", t.mass_drift(), t.max_energy_increase() / e0))
        }
        Err(e) => (false, e.to_string()),
    };
    checks.push(check("short_run_n8", detail.0, detail.1));

    let failures: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    SelfCheckReport {
        passed: failures.is_empty(),
        checks,
        failures,
    }
}

/// Discrete counterpart of `functional` from the primary code path.
pub fn primary_functional(state: &FilmState, functional: Functional, alpha: FlowExponent) -> f64 {
    match functional {
        Functional::Mass => mass(state),
        Functional::Energy => energy(state),
        Functional::Dissipation => dissipation(state, &Rheology::PowerLaw { alpha }, Regularisation::NONE).unwrap(),
        Functional::LpNormThirdDerivative => third_derivative_lp(state, alpha).unwrap(),
    }
}
