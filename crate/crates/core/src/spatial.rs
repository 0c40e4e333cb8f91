//! Cell-centred grid, mirror-extension stencils and the conservative
//! semidiscrete right-hand side.
//!
//! Cells `0..n` have centres `x_left + (i + ½) h`; face `f ∈ 0..=n` sits at
//! `x_left + f h`, between cells `f - 1` and `f`. Faces `0` and `n` are the
//! walls. Ghost values `u_{-1} = u_0`, `u_n = u_{n-1}` give `u_x = 0`, and the
//! flux through both walls is zero, which gives `u_xxx = 0` and no flux.
//!
//! With `d_i = u_{i+1} - 2u_i + u_{i-1}` (mirror ghosts) the face third
//! difference is `w_f = (d_f - d_{f-1}) / h³` and the energy gradient is
//! `-d_i / h`. Summing by parts twice then gives
//! `⟨∇E_h, rhs⟩ = -h Σ_f F_f w_f = -D_h` for every state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FluxLaw, Regularisation, Rheology};

/// Smallest grid the four-point stencil accepts.
pub const MIN_STENCIL_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
    h: f64,
}

impl Grid {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite() && x_left < x_right) {
            return Err(Error::Domain(format!(
                "need finite x_left < x_right, got ({x_left}, {x_right})"
            )));
        }
        if n_cells < 2 {
            return Err(Error::Size { n: n_cells, min: 2 });
        }
        Ok(Grid {
            x_left,
            x_right,
            n_cells,
            h: (x_right - x_left) / n_cells as f64,
        })
    }

    /// `(0, 1)` with `n_cells` cells.
    pub fn unit(n_cells: usize) -> Result<Self> {
        Grid::new(0.0, 1.0, n_cells)
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn cell_centre(&self, i: usize) -> f64 {
        self.x_left + (i as f64 + 0.5) * self.h
    }

    pub fn face(&self, f: usize) -> f64 {
        self.x_left + f as f64 * self.h
    }

    pub fn cell_centres(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|i| self.cell_centre(i))
    }

    /// Same interval with twice as many cells.
    pub fn refined(&self) -> Grid {
        Grid {
            n_cells: 2 * self.n_cells,
            h: self.length() / (2 * self.n_cells) as f64,
            ..*self
        }
    }
}

/// Positive cell-centred film heights on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FilmState {
    grid: Grid,
    u: Vec<f64>,
}

impl FilmState {
    pub fn new(grid: Grid, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.n_cells() {
            return Err(Error::Domain(format!(
                "state has {} values for a grid of {} cells",
                u.len(),
                grid.n_cells()
            )));
        }
        if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let _ = value;
            return Err(Error::Domain(format!("non-finite height at cell {index}")));
        }
        if let Some((index, &value)) = u.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(Error::Degenerate { index, value });
        }
        Ok(FilmState { grid, u })
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        FilmState::new(grid, vec![c; grid.n_cells()])
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        FilmState::new(grid, grid.cell_centres().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn into_values(self) -> Vec<f64> {
        self.u
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mirror image `x ↦ x_left + x_right - x`.
    pub fn reflected(&self) -> FilmState {
        let mut u = self.u.clone();
        u.reverse();
        FilmState { grid: self.grid, u }
    }
}

/// Second differences `d_i = u_{i+1} - 2u_i + u_{i-1}` with mirror ghosts.
#[inline]
pub(crate) fn mirror_second_differences(u: &[f64], d: &mut [f64]) {
    let n = u.len();
    debug_assert_eq!(d.len(), n);
    d[0] = u[1] - u[0];
    for i in 1..n - 1 {
        d[i] = u[i + 1] - 2.0 * u[i] + u[i - 1];
    }
    d[n - 1] = u[n - 2] - u[n - 1];
}

fn require_stencil(n: usize) -> Result<()> {
    if n < MIN_STENCIL_CELLS {
        Err(Error::Size {
            n,
            min: MIN_STENCIL_CELLS,
        })
    } else {
        Ok(())
    }
}

/// Third differences at all `n + 1` faces; zero on the walls.
pub fn face_third_difference(state: &FilmState) -> Result<Vec<f64>> {
    let n = state.len();
    require_stencil(n)?;
    let mut d = vec![0.0; n];
    let mut w = vec![0.0; n + 1];
    third_differences(state.values(), state.grid().h(), &mut d, &mut w);
    Ok(w)
}

pub(crate) fn third_differences(u: &[f64], h: f64, d: &mut [f64], w: &mut [f64]) {
    let n = u.len();
    let inv_h3 = 1.0 / (h * h * h);
    mirror_second_differences(u, d);
    w[0] = 0.0;
    for f in 1..n {
        w[f] = (d[f] - d[f - 1]) * inv_h3;
    }
    w[n] = 0.0;
}

/// Film height at all `n + 1` faces: arithmetic mean inside, adjacent cell on the walls.
pub fn face_height(state: &FilmState) -> Vec<f64> {
    let u = state.values();
    let n = u.len();
    let mut m = Vec::with_capacity(n + 1);
    m.push(u[0]);
    m.extend(u.windows(2).map(|p| 0.5 * (p[0] + p[1])));
    m.push(u[n - 1]);
    m
}

/// `du/dt = -(F_{f+1} - F_f) / h` with `F = flux_density(face_height, w)`.
pub fn rhs(state: &FilmState, rheo: &Rheology, reg: Regularisation) -> Result<Vec<f64>> {
    let mut op = FluxOperator::new(*state.grid(), rheo, reg)?;
    let mut out = vec![0.0; state.len()];
    op.apply(state.values(), &mut out);
    Ok(out)
}

/// `∂E_h/∂u_i = -d_i / h`.
pub fn energy_gradient(state: &FilmState) -> Vec<f64> {
    let mut d = vec![0.0; state.len()];
    mirror_second_differences(state.values(), &mut d);
    let inv_h = 1.0 / state.grid().h();
    d.iter().map(|&di| -di * inv_h).collect()
}

/// Reusable buffers for repeated right-hand-side evaluations on one grid.
///
/// After [`FluxOperator::apply`] the face heights, third differences and
/// fluxes of the last argument stay available, so the dissipation of an
/// accepted stage costs one extra pass over the faces.
#[derive(Clone, Debug)]
pub struct FluxOperator {
    grid: Grid,
    law: FluxLaw,
    d: Vec<f64>,
    w: Vec<f64>,
    flux: Vec<f64>,
}

impl FluxOperator {
    pub fn new(grid: Grid, rheo: &Rheology, reg: Regularisation) -> Result<Self> {
        let n = grid.n_cells();
        require_stencil(n)?;
        Ok(FluxOperator {
            grid,
            law: FluxLaw::new(rheo, reg),
            d: vec![0.0; n],
            w: vec![0.0; n + 1],
            flux: vec![0.0; n + 1],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Writes the right-hand side at `u` into `out`. `u` must be positive.
    pub fn apply(&mut self, u: &[f64], out: &mut [f64]) {
        self.apply_offset::<false>(u, 0.0, out, f64::INFINITY);
    }

    /// Like [`FluxOperator::apply`], and returns `max_f ∂F/∂w` over interior faces.
    pub fn apply_with_stiffness(&mut self, u: &[f64], out: &mut [f64], cap: f64) -> f64 {
        self.apply_offset::<true>(u, 0.0, out, cap)
    }

    /// Right-hand side at `u = base + v`. Differences are taken on `v`, so
    /// round-off scales with the perturbation rather than the film height.
    #[inline]
    pub(crate) fn apply_offset<const STIFF: bool>(
        &mut self,
        v: &[f64],
        base: f64,
        out: &mut [f64],
        cap: f64,
    ) -> f64 {
        let n = self.grid.n_cells();
        debug_assert_eq!(v.len(), n);
        debug_assert_eq!(out.len(), n);
        let h = self.grid.h();
        third_differences(v, h, &mut self.d, &mut self.w);
        self.flux[0] = 0.0;
        let mut worst = 0.0f64;
        for f in 1..n {
            let uf = base + 0.5 * (v[f - 1] + v[f]);
            if STIFF {
                let (flux, slope) = self.law.flux_and_slope(uf, self.w[f], cap);
                self.flux[f] = flux;
                worst = worst.max(slope);
            } else {
                self.flux[f] = self.law.flux(uf, self.w[f]);
            }
        }
        self.flux[n] = 0.0;
        let inv_h = 1.0 / h;
        for i in 0..n {
            out[i] = -(self.flux[i + 1] - self.flux[i]) * inv_h;
        }
        worst
    }

    /// `h Σ_f F_f w_f` for the last state passed to [`FluxOperator::apply`].
    pub fn last_dissipation(&self) -> f64 {
        let n = self.grid.n_cells();
        let s: f64 = (1..n).map(|f| self.flux[f] * self.w[f]).sum();
        self.grid.h() * s
    }

    pub fn last_fluxes(&self) -> &[f64] {
        &self.flux
    }

    pub fn last_third_differences(&self) -> &[f64] {
        &self.w
    }

    /// `c_stab h⁴ / max_f (m_f ψ′(w_f))` over interior faces, with `ψ′` clamped to `[1/cap, cap]`.
    pub fn stable_dt(&mut self, u: &[f64], c_stab: f64, cap: f64) -> f64 {
        let n = self.grid.n_cells();
        let h = self.grid.h();
        third_differences(u, h, &mut self.d, &mut self.w);
        let mut worst = 0.0f64;
        for f in 1..n {
            let uf = 0.5 * (u[f - 1] + u[f]);
            worst = worst.max(self.law.flux_slope(uf, self.w[f], cap));
        }
        c_stab * h.powi(4) / worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(u: Vec<f64>) -> FilmState {
        let n = u.len();
        FilmState::new(Grid::unit(n).unwrap(), u).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = Grid::new(-1.0, 2.0, 12).unwrap();
        assert!((g.h() * 12.0 - 3.0).abs() < 1e-15);
        assert!(Grid::new(1.0, 1.0, 8).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        assert_eq!(g.refined().n_cells(), 24);
    }

    #[test]
    fn film_state_rejects_bad_heights() {
        let g = Grid::unit(4).unwrap();
        assert!(matches!(
            FilmState::new(g, vec![1.0, 0.0, 1.0, 1.0]),
            Err(Error::Degenerate { index: 1, .. })
        ));
        assert!(FilmState::new(g, vec![1.0, f64::NAN, 1.0, 1.0]).is_err());
        assert!(FilmState::new(g, vec![1.0; 3]).is_err());
    }

    #[test]
    fn third_difference_constant_is_zero() {
        let s = FilmState::constant(Grid::unit(9).unwrap(), 2.5).unwrap();
        assert!(face_third_difference(&s).unwrap().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn third_difference_is_exact_on_cubics() {
        let g = Grid::unit(8).unwrap();
        let s = FilmState::from_fn(g, |x| x * x * x).unwrap();
        let w = face_third_difference(&s).unwrap();
        // faces whose stencil stays clear of the ghosts
        for f in 2..=6 {
            assert_eq!(w[f], 6.0, "face {f}");
        }
        assert_eq!(w[0], 0.0);
        assert_eq!(w[8], 0.0);
    }

    #[test]
    fn third_difference_needs_four_cells() {
        let s = state(vec![1.0, 2.0, 1.5]);
        assert!(matches!(face_third_difference(&s), Err(Error::Size { n: 3, min: 4 })));
    }

    #[test]
    fn third_difference_converges_at_second_order() {
        let err = |n: usize| {
            let g = Grid::unit(n).unwrap();
            let s = FilmState::from_fn(g, |x| 2.0 + (std::f64::consts::PI * x).cos()).unwrap();
            let w = face_third_difference(&s).unwrap();
            let pi3 = std::f64::consts::PI.powi(3);
            (1..n)
                .map(|f| (w[f] - pi3 * (std::f64::consts::PI * g.face(f)).sin()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.05, "observed order {order}");
    }

    #[test]
    fn face_height_examples() {
        let s = FilmState::constant(Grid::unit(5).unwrap(), 0.7).unwrap();
        assert!(face_height(&s).iter().all(|&m| m == 0.7));
        let s = FilmState::new(Grid::unit(2).unwrap(), vec![1.0, 3.0]).unwrap();
        assert_eq!(face_height(&s), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rhs_vanishes_on_constants() {
        let rheos = [
            Rheology::Newtonian,
            Rheology::power_law(0.5).unwrap(),
            Rheology::power_law(3.0).unwrap(),
            Rheology::ellis(1.5, 1.0, 1.0).unwrap(),
        ];
        let s = FilmState::constant(Grid::unit(16).unwrap(), 1.3).unwrap();
        for r in &rheos {
            for sg in [0.0, 0.1] {
                let rhs = rhs(&s, r, Regularisation::new(sg).unwrap()).unwrap();
                assert!(rhs.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn energy_gradient_of_constant_and_shift() {
        let s = FilmState::constant(Grid::unit(10).unwrap(), 3.0).unwrap();
        assert!(energy_gradient(&s).iter().all(|&g| g == 0.0));
        let g = Grid::unit(8).unwrap();
        let a = FilmState::new(g, vec![1.0, 1.5, 1.25, 2.0, 1.75, 1.0, 1.5, 1.25]).unwrap();
        let b = FilmState::new(g, a.values().iter().map(|v| v + 4.0).collect()).unwrap();
        assert_eq!(energy_gradient(&a), energy_gradient(&b));
    }

    #[test]
    fn stable_dt_examples() {
        let g = Grid::unit(16).unwrap();
        let h4 = g.h().powi(4);
        let ones = vec![1.0; 16];
        let mut op = FluxOperator::new(g, &Rheology::Newtonian, Regularisation::NONE).unwrap();
        assert_eq!(op.stable_dt(&ones, 0.5, 1e8), 0.5 * h4);
        let mut op =
            FluxOperator::new(g, &Rheology::power_law(0.5).unwrap(), Regularisation::NONE).unwrap();
        assert_eq!(op.stable_dt(&ones, 0.5, 1e8), 0.5 * h4 / 1e8);
    }
}
