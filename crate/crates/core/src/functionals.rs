//! Discrete energy, dissipation, mass and distance to equilibrium.
//!
//! The energy uses two-point differences across interior faces and the
//! dissipation uses the face fluxes of [`crate::spatial`], which is what makes
//! `dE_h/dt = -D_h` hold exactly for the semidiscrete flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlowExponent, Regularisation, Rheology};
use crate::pow::Pow;
use crate::spatial::{third_differences, FilmState, FluxOperator};

/// One sampled point of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub mass: f64,
    pub min_height: f64,
    pub max_height: f64,
    pub h1_dist: f64,
}

/// `E_h = ½ Σ_faces h ((u_{i+1} - u_i)/h)²`.
pub fn energy(state: &FilmState) -> f64 {
    energy_of(state.values(), state.grid().h())
}

pub(crate) fn energy_of(u: &[f64], h: f64) -> f64 {
    let s: f64 = u.windows(2).map(|p| (p[1] - p[0]) * (p[1] - p[0])).sum();
    0.5 * s / h
}

pub fn dissipation(state: &FilmState, rheo: &Rheology, reg: Regularisation) -> Result<f64> {
    let mut op = FluxOperator::new(*state.grid(), rheo, reg)?;
    let mut scratch = vec![0.0; state.len()];
    op.apply(state.values(), &mut scratch);
    Ok(op.last_dissipation())
}

pub fn mass(state: &FilmState) -> f64 {
    state.grid().h() * state.values().iter().sum::<f64>()
}

pub fn mean_height(state: &FilmState) -> f64 {
    mass(state) / state.grid().length()
}

/// `‖u - ū‖_{H¹}` with the discrete L² part plus `2 E_h`.
pub fn h1_distance_to_mean(state: &FilmState) -> f64 {
    let mean = mean_height(state);
    let h = state.grid().h();
    let l2: f64 = state.values().iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() * h;
    (l2 + 2.0 * energy(state)).sqrt()
}

/// `‖u - v‖_{H¹}` between two states on the same grid.
pub fn h1_distance(a: &FilmState, b: &FilmState) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::Domain("states live on different grids".into()));
    }
    let h = a.grid().h();
    let diff: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    let l2: f64 = diff.iter().map(|v| v * v).sum::<f64>() * h;
    Ok((l2 + 2.0 * energy_of(&diff, h)).sqrt())
}

/// `h Σ_faces |w_f|^(α+1)`, the discrete `‖u_xxx‖^(α+1)_{L_{α+1}}`.
pub fn third_derivative_lp(state: &FilmState, alpha: FlowExponent) -> Result<f64> {
    let u = state.values();
    let n = u.len();
    if n < crate::spatial::MIN_STENCIL_CELLS {
        return Err(Error::Size {
            n,
            min: crate::spatial::MIN_STENCIL_CELLS,
        });
    }
    let mut d = vec![0.0; n];
    let mut w = vec![0.0; n + 1];
    let h = state.grid().h();
    third_differences(u, h, &mut d, &mut w);
    let p = Pow::new(alpha.value() + 1.0);
    Ok(h * w.iter().map(|x| p.apply(x.abs())).sum::<f64>())
}

/// `E_h[v] / ‖v_xxx‖²_{L_{α+1}}` for the deviation `v = u - ū`.
pub fn poincare_quotient(state: &FilmState, alpha: FlowExponent) -> Result<f64> {
    let e = energy(state);
    let lp = third_derivative_lp(state, alpha)?;
    if e == 0.0 || lp == 0.0 {
        return Err(Error::UndefinedQuotient(
            "deviation from the mean has no energy or no third derivative".into(),
        ));
    }
    Ok(e / lp.powf(2.0 / (alpha.value() + 1.0)))
}

pub fn diagnostics(
    state: &FilmState,
    t: f64,
    rheo: &Rheology,
    reg: Regularisation,
) -> Result<Diagnostics> {
    Ok(Diagnostics {
        t,
        energy: energy(state),
        dissipation: dissipation(state, rheo, reg)?,
        mass: mass(state),
        min_height: state.min(),
        max_height: state.max(),
        h1_dist: h1_distance_to_mean(state),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::Grid;
    use std::f64::consts::PI;

    #[test]
    fn energy_examples() {
        let g = Grid::unit(32).unwrap();
        assert_eq!(energy(&FilmState::constant(g, 1.7).unwrap()), 0.0);

        let ramp = FilmState::from_fn(g, |x| x).unwrap();
        let h = g.h();
        assert!((energy(&ramp) - 0.5 * (1.0 - h)).abs() < 1e-14);

        let g = Grid::unit(256).unwrap();
        let s = FilmState::from_fn(g, |x| 1.0 + 0.1 * (PI * x).cos()).unwrap();
        let exact = PI * PI / 400.0;
        assert!((energy(&s) - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn dissipation_single_face() {
        // second differences (1,1,1,1,-1,-1,-1,-1)/128 jump once, at face 4
        let g = Grid::unit(8).unwrap();
        let steps = [10.0, 11.0, 13.0, 16.0, 20.0, 23.0, 25.0, 26.0];
        let s = FilmState::new(g, steps.iter().map(|k| 1.0 + k / 128.0).collect()).unwrap();
        let w = crate::spatial::face_third_difference(&s).unwrap();
        let w0 = w[4];
        assert_eq!(w0, -2.0 / 128.0 / g.h().powi(3));
        assert!(w.iter().enumerate().all(|(f, &x)| f == 4 || x == 0.0));
        let uf: f64 = 0.5 * (s.values()[3] + s.values()[4]);
        for alpha in [0.5, 2.0, 3.0] {
            let r = Rheology::power_law(alpha).unwrap();
            let expect = g.h() * uf.powf(alpha + 2.0) * w0.abs().powf(alpha + 1.0);
            let got = dissipation(&s, &r, Regularisation::NONE).unwrap();
            assert!(((got - expect) / expect).abs() < 1e-13, "alpha={alpha}");
        }
    }

    #[test]
    fn dissipation_is_flux_times_w_sum() {
        let g = Grid::unit(8).unwrap();
        let s = FilmState::new(g, vec![1.0, 1.2, 0.9, 1.1, 1.3, 1.0, 0.8, 1.05]).unwrap();
        let r = Rheology::power_law(2.0).unwrap();
        let w = crate::spatial::face_third_difference(&s).unwrap();
        let m = crate::spatial::face_height(&s);
        let expect: f64 = (1..8)
            .map(|f| g.h() * m[f].powi(4) * w[f].abs().powi(3))
            .sum();
        let got = dissipation(&s, &r, Regularisation::NONE).unwrap();
        assert!(((got - expect) / expect).abs() < 1e-13);
    }

    #[test]
    fn newtonian_dissipation_closed_form() {
        let g = Grid::unit(12).unwrap();
        let s = FilmState::from_fn(g, |x| 1.0 + 0.2 * (3.0 * x).sin()).unwrap();
        let w = crate::spatial::face_third_difference(&s).unwrap();
        let m = crate::spatial::face_height(&s);
        let expect: f64 = g.h() * (1..12).map(|f| m[f].powi(3) * w[f] * w[f]).sum::<f64>();
        let got = dissipation(&s, &Rheology::Newtonian, Regularisation::NONE).unwrap();
        assert!(((got - expect) / expect).abs() < 1e-14);
    }

    #[test]
    fn mass_examples() {
        let g = Grid::unit(10).unwrap();
        assert!((mass(&FilmState::constant(g, 1.0).unwrap()) - 1.0).abs() < 1e-15);
        let g = Grid::new(-0.5, 2.5, 7).unwrap();
        assert!((mass(&FilmState::constant(g, 1.5).unwrap()) - 4.5).abs() < 1e-14);
    }

    #[test]
    fn mass_of_cosine_mode_is_exact() {
        for n in [8, 31, 64, 257] {
            let g = Grid::unit(n).unwrap();
            let s = FilmState::from_fn(g, |x| 1.0 + 0.3 * (PI * x).cos()).unwrap();
            // brute-force summation of the same midpoint values in a different order
            let brute: f64 = (0..n).rev().map(|i| s.values()[i]).sum::<f64>() / n as f64;
            assert!((mass(&s) - 1.0).abs() < 1e-12 * n as f64);
            assert!((mass(&s) - brute).abs() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn h1_distance_examples() {
        let g = Grid::unit(64).unwrap();
        assert_eq!(h1_distance_to_mean(&FilmState::constant(g, 2.0).unwrap()), 0.0);
        let g = Grid::unit(256).unwrap();
        let eps = 0.05;
        let s = FilmState::from_fn(g, |x| 1.0 + eps * (2.0 * PI * x).cos()).unwrap();
        // ‖v‖² = ε²/2, ‖v_x‖² = ε²(2π)²/2
        let exact = (eps * eps / 2.0 + eps * eps * 4.0 * PI * PI / 2.0).sqrt();
        assert!((h1_distance_to_mean(&s) - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn poincare_quotient_scale_invariant() {
        let g = Grid::unit(32).unwrap();
        let v = |x: f64| (PI * x).cos() + 0.3 * (3.0 * PI * x).cos();
        for alpha in [0.5, 1.0, 2.0] {
            let a = FlowExponent::new(alpha).unwrap();
            let base = poincare_quotient(&FilmState::from_fn(g, |x| 5.0 + v(x)).unwrap(), a).unwrap();
            for lambda in [0.1, 2.0, 10.0] {
                let s = FilmState::from_fn(g, |x| 50.0 + lambda * v(x)).unwrap();
                let q = poincare_quotient(&s, a).unwrap();
                assert!(((q - base) / base).abs() < 1e-10, "alpha={alpha} lambda={lambda}");
            }
        }
    }

    #[test]
    fn poincare_quotient_decreases_with_mode_number() {
        let g = Grid::unit(128).unwrap();
        for alpha in [0.5, 1.0, 2.0, 3.0] {
            let a = FlowExponent::new(alpha).unwrap();
            let q: Vec<f64> = (1..=8)
                .map(|k| {
                    let s = FilmState::from_fn(g, |x| 2.0 + (k as f64 * PI * x).cos()).unwrap();
                    poincare_quotient(&s, a).unwrap()
                })
                .collect();
            assert!(q.windows(2).all(|p| p[1] < p[0]), "alpha={alpha}: {q:?}");
        }
    }

    #[test]
    fn poincare_quotient_undefined_for_constants() {
        let s = FilmState::constant(Grid::unit(16).unwrap(), 1.0).unwrap();
        assert!(matches!(
            poincare_quotient(&s, FlowExponent::NEWTONIAN),
            Err(Error::UndefinedQuotient(_))
        ));
    }
}
