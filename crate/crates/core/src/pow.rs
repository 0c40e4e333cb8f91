//! Fast real powers for the exponents that show up in the presets.
//!
//! The flux kernel evaluates `u^(α+2)`, `|w|^(α-1)` and `(w²+σ²)^((α-1)/2)`
//! on every face of every Runge–Kutta stage. For α a multiple of 1/2 all of
//! these exponents are multiples of 1/4, which reduce to `powi` and square
//! roots. Everything else falls back to `powf`.

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Pow {
    Int(i32),
    /// `x^(n + r/4)` with `r ∈ {1, 2, 3}`.
    Quarter(i32, u8),
    General(f64),
}

impl Pow {
    pub(crate) fn new(p: f64) -> Self {
        let q = p * 4.0;
        if q.fract() == 0.0 && q.abs() < 4096.0 {
            let q = q as i32;
            let n = q.div_euclid(4);
            match q.rem_euclid(4) {
                0 => Pow::Int(n),
                r => Pow::Quarter(n, r as u8),
            }
        } else {
            Pow::General(p)
        }
    }

    /// `x^p` for `x ≥ 0`. Negative exponents at `x = 0` are the caller's problem.
    #[inline(always)]
    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            Pow::Int(n) => x.powi(n),
            Pow::Quarter(n, r) => {
                let s = x.sqrt();
                let frac = match r {
                    1 => s.sqrt(),
                    2 => s,
                    _ => s * s.sqrt(),
                };
                if n == 0 {
                    frac
                } else {
                    x.powi(n) * frac
                }
            }
            Pow::General(p) => x.powf(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_exponents() {
        assert_eq!(Pow::new(3.0), Pow::Int(3));
        assert_eq!(Pow::new(0.0), Pow::Int(0));
        assert_eq!(Pow::new(2.5), Pow::Quarter(2, 2));
        assert_eq!(Pow::new(-0.25), Pow::Quarter(-1, 3));
        assert_eq!(Pow::new(-0.5), Pow::Quarter(-1, 2));
        assert!(matches!(Pow::new(0.3), Pow::General(_)));
    }

    #[test]
    fn matches_powf() {
        for p in [-1.5, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0, 1.25, 2.5, 3.0, 4.75, 0.3, 1.7] {
            for x in [1e-6, 0.01, 0.7, 1.0, 2.3, 150.0] {
                let fast = Pow::new(p).apply(x);
                let slow = f64::powf(x, p);
                assert!(((fast - slow) / slow).abs() < 1e-14, "p={p} x={x}");
            }
        }
    }

    #[test]
    fn zero_base_nonnegative_exponent() {
        assert_eq!(Pow::new(0.5).apply(0.0), 0.0);
        assert_eq!(Pow::new(0.0).apply(0.0), 1.0);
        assert_eq!(Pow::new(1.25).apply(0.0), 0.0);
    }
}
