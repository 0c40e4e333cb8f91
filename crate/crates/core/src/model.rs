//! Constitutive nonlinearities of the thin-film flux.
//!
//! The power-law film moves with flux `u^(α+2) ψ(u_xxx)` where
//! `ψ(s) = |s|^(α-1) s`; the Ellis film with `a u³ (1 + b |u u_xxx|^(α-1)) u_xxx`.
//! Replacing `ψ` by `ψ_σ(s) = (s² + σ²)^((α-1)/2) s` removes the degeneracy
//! in the third derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pow::Pow;

/// Flow-behaviour exponent α. Shear-thickening below 1, shear-thinning above.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FlowExponent(f64);

impl FlowExponent {
    pub const NEWTONIAN: FlowExponent = FlowExponent(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(FlowExponent(alpha))
        } else {
            Err(Error::Domain(format!("flow exponent must be positive and finite, got {alpha}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FlowExponent {
    type Error = Error;
    fn try_from(alpha: f64) -> Result<Self> {
        FlowExponent::new(alpha)
    }
}

impl From<FlowExponent> for f64 {
    fn from(alpha: FlowExponent) -> f64 {
        alpha.0
    }
}

/// Regularisation parameter σ ∈ [0, 1). Zero selects the degenerate `ψ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Regularisation(f64);

impl Regularisation {
    pub const NONE: Regularisation = Regularisation(0.0);

    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && (0.0..1.0).contains(&sigma) {
            Ok(Regularisation(sigma))
        } else {
            Err(Error::Domain(format!("regularisation must lie in [0, 1), got {sigma}")))
        }
    }

    #[inline]
    pub fn sigma(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Regularisation {
    type Error = Error;
    fn try_from(sigma: f64) -> Result<Self> {
        Regularisation::new(sigma)
    }
}

impl From<Regularisation> for f64 {
    fn from(reg: Regularisation) -> f64 {
        reg.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rheology {
    Newtonian,
    PowerLaw { alpha: FlowExponent },
    Ellis { alpha: FlowExponent, a: f64, b: f64 },
}

impl Rheology {
    pub fn power_law(alpha: f64) -> Result<Self> {
        Ok(Rheology::PowerLaw {
            alpha: FlowExponent::new(alpha)?,
        })
    }

    /// Ellis law; needs `α ≥ 1` (α = 1 is Newtonian up to the factor `a(1+b)`).
    pub fn ellis(alpha: f64, a: f64, b: f64) -> Result<Self> {
        let alpha = FlowExponent::new(alpha)?;
        if alpha.value() < 1.0 {
            return Err(Error::Domain(format!(
                "Ellis law needs alpha >= 1, got {}",
                alpha.value()
            )));
        }
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
            return Err(Error::Domain(format!("Ellis constants must be positive, got a={a}, b={b}")));
        }
        Ok(Rheology::Ellis { alpha, a, b })
    }

    pub fn alpha(&self) -> FlowExponent {
        match *self {
            Rheology::Newtonian => FlowExponent::NEWTONIAN,
            Rheology::PowerLaw { alpha } | Rheology::Ellis { alpha, .. } => alpha,
        }
    }

    /// Exponent in `D ≥ C E^((α+1)/2)` governing the long-time decay.
    ///
    /// Ellis films dissipate at least as fast as their Newtonian part, so the
    /// relevant inequality is the linear one.
    pub fn decay_exponent(&self) -> FlowExponent {
        match *self {
            Rheology::PowerLaw { alpha } => alpha,
            Rheology::Newtonian | Rheology::Ellis { .. } => FlowExponent::NEWTONIAN,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Rheology::Newtonian => "newtonian",
            Rheology::PowerLaw { .. } => "power_law",
            Rheology::Ellis { .. } => "ellis",
        }
    }
}

/// `ψ(s) = |s|^(α-1) s`, extended by 0 at the origin.
pub fn psi(s: f64, alpha: FlowExponent) -> Result<f64> {
    check_finite(s)?;
    Ok(psi_raw(s, Pow::new(alpha.value() - 1.0)))
}

/// `ψ_σ(s) = (s² + σ²)^((α-1)/2) s`; equals [`psi`] at σ = 0.
pub fn psi_sigma(s: f64, alpha: FlowExponent, reg: Regularisation) -> Result<f64> {
    check_finite(s)?;
    let law = FluxLaw::new(&Rheology::PowerLaw { alpha }, reg);
    Ok(law.psi(s))
}

/// Derivative of [`psi_sigma`] in `s`.
pub fn psi_sigma_prime(s: f64, alpha: FlowExponent, reg: Regularisation) -> Result<f64> {
    check_finite(s)?;
    let a = alpha.value();
    let sigma = reg.sigma();
    if sigma == 0.0 {
        if s == 0.0 {
            return match a {
                a if a > 1.0 => Ok(0.0),
                1.0 => Ok(1.0),
                _ => Err(Error::Singular(format!(
                    "psi'(0) is unbounded for alpha = {a} without regularisation"
                ))),
            };
        }
        return Ok(a * Pow::new(a - 1.0).apply(s.abs()));
    }
    let q = s * s + sigma * sigma;
    Ok(a * Pow::new(0.5 * (a - 1.0)).apply(q)
        - sigma * sigma * (a - 1.0) * Pow::new(0.5 * (a - 3.0)).apply(q))
}

/// Flux density at film height `u` and third derivative `w`.
///
/// The sign of the result is the sign of `w`; the Ellis law ignores `reg`.
pub fn flux_density(u: f64, w: f64, rheo: &Rheology, reg: Regularisation) -> Result<f64> {
    check_finite(w)?;
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Degenerate { index: 0, value: u });
    }
    Ok(FluxLaw::new(rheo, reg).flux(u, w))
}

fn check_finite(s: f64) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite argument {s}")))
    }
}

#[inline(always)]
fn psi_raw(s: f64, abs_pow: Pow) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        abs_pow.apply(s.abs()) * s
    }
}

/// Constitutive law with its exponents resolved once, shared by the public
/// scalar functions and the face-flux kernel so both use identical arithmetic.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FluxLaw {
    kind: LawKind,
    alpha: f64,
    sigma: f64,
    mobility: Pow,
    /// `|s|^(α-1)` when σ = 0, `(s²+σ²)^((α-1)/2)` otherwise.
    shear: Pow,
    /// `(s²+σ²)^((α-3)/2)`, only for ψ′_σ.
    shear_prime: Pow,
}

#[derive(Clone, Copy, Debug)]
enum LawKind {
    Newtonian,
    PowerLaw,
    Ellis { a: f64, b: f64 },
}

impl FluxLaw {
    pub(crate) fn new(rheo: &Rheology, reg: Regularisation) -> Self {
        let alpha = rheo.alpha().value();
        let sigma = reg.sigma();
        let (kind, mobility, shear) = match *rheo {
            Rheology::Newtonian => (LawKind::Newtonian, Pow::Int(3), Pow::Int(0)),
            Rheology::PowerLaw { .. } => {
                let shear = if sigma == 0.0 {
                    Pow::new(alpha - 1.0)
                } else {
                    Pow::new(0.5 * (alpha - 1.0))
                };
                (LawKind::PowerLaw, Pow::new(alpha + 2.0), shear)
            }
            Rheology::Ellis { a, b, .. } => (LawKind::Ellis { a, b }, Pow::Int(3), Pow::new(alpha - 1.0)),
        };
        FluxLaw {
            kind,
            alpha,
            sigma,
            mobility,
            shear,
            shear_prime: Pow::new(0.5 * (alpha - 3.0)),
        }
    }

    #[inline(always)]
    pub(crate) fn psi(&self, s: f64) -> f64 {
        if self.sigma == 0.0 {
            psi_raw(s, self.shear)
        } else {
            self.shear.apply(s * s + self.sigma * self.sigma) * s
        }
    }

    #[inline(always)]
    pub(crate) fn flux(&self, u: f64, w: f64) -> f64 {
        let m = self.mobility.apply(u);
        match self.kind {
            LawKind::Newtonian => m * w,
            LawKind::PowerLaw => m * self.psi(w),
            LawKind::Ellis { a, b } => {
                let g = self.shear.apply((u * w).abs());
                a * (m * w) * (1.0 + b * g)
            }
        }
    }

    /// `F(u, w)` together with `∂F/∂w` (shear factor clamped to `[1/cap, cap]`),
    /// reusing the powers already needed for the flux.
    #[inline(always)]
    pub(crate) fn flux_and_slope(&self, u: f64, w: f64, cap: f64) -> (f64, f64) {
        let m = self.mobility.apply(u);
        match self.kind {
            LawKind::Newtonian => (m * w, m),
            LawKind::PowerLaw => {
                if w == 0.0 {
                    return (0.0, self.flux_slope(u, w, cap));
                }
                let p = self.psi(w);
                let secant = p / w;
                let d = if self.sigma == 0.0 {
                    self.alpha * secant
                } else {
                    let s2 = self.sigma * self.sigma;
                    secant * (self.alpha * w * w + s2) / (w * w + s2)
                };
                (m * p, m * d.clamp(1.0 / cap, cap))
            }
            LawKind::Ellis { a, b } => {
                let g = self.shear.apply((u * w).abs());
                let f = a * (m * w) * (1.0 + b * g);
                (f, m * (a * (1.0 + b * self.alpha * g)).min(cap))
            }
        }
    }

    /// `∂F/∂w` with the shear factor capped at `cap`.
    pub(crate) fn flux_slope(&self, u: f64, w: f64, cap: f64) -> f64 {
        let m = self.mobility.apply(u);
        match self.kind {
            LawKind::Newtonian => m,
            LawKind::PowerLaw => {
                let d = if self.alpha == 1.0 {
                    1.0
                } else if self.sigma == 0.0 {
                    if w == 0.0 {
                        if self.alpha < 1.0 {
                            f64::INFINITY
                        } else {
                            0.0
                        }
                    } else {
                        self.alpha * self.shear.apply(w.abs())
                    }
                } else {
                    let q = w * w + self.sigma * self.sigma;
                    self.alpha * self.shear.apply(q)
                        - self.sigma * self.sigma * (self.alpha - 1.0) * self.shear_prime.apply(q)
                };
                m * d.clamp(1.0 / cap, cap)
            }
            LawKind::Ellis { a, b } => {
                let g = self.shear.apply((u * w).abs());
                let d = (a * (1.0 + b * self.alpha * g)).min(cap);
                m * d
            }
        }
    }
}
