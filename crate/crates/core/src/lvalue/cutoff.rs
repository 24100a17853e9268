use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::integrate_complex;

/// A smooth bump supported on `[1/2, 5/2]`, equal to 1 on `[1, 2]`.
///
/// The ramps are the smoothstep `S(t) = psi(t) / (psi(t) + psi(1 - t))`
/// with `psi(t) = exp(-shape / t)` for `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothCutoff {
    pub shape: f64,
}

impl Default for SmoothCutoff {
    fn default() -> Self {
        Self { shape: 1.0 }
    }
}

impl SmoothCutoff {
    pub fn new(shape: f64) -> Self {
        assert!(shape > 0.0, "shape must be positive");
        Self { shape }
    }

    fn psi(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-self.shape / t).exp()
        }
    }

    fn smoothstep(&self, t: f64) -> f64 {
        let (a, b) = (self.psi(t), self.psi(1.0 - t));
        if a + b == 0.0 {
            0.0
        } else {
            a / (a + b)
        }
    }

    /// `Phi(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.5 || x >= 2.5 {
            0.0
        } else if x < 1.0 {
            self.smoothstep(2.0 * (x - 0.5))
        } else if x <= 2.0 {
            1.0
        } else {
            self.smoothstep(2.0 * (2.5 - x))
        }
    }

    /// `Phi^(s) = int_0^inf Phi(x) x^s dx` by adaptive quadrature.
    pub fn mellin(&self, s: Complex64) -> Complex64 {
        let f = |x: f64| Complex64::new(x, 0.0).powc(s) * self.eval(x);
        let tol = 1e-13;
        integrate_complex(f, 0.5, 1.0, tol)
            + integrate_complex(f, 1.0, 2.0, tol)
            + integrate_complex(f, 2.0, 2.5, tol)
    }

    /// `Phi^(0)`; the two ramps contribute `1/2` in total by the symmetry
    /// `S(t) + S(1 - t) = 1`.
    pub fn mellin_at_zero(&self) -> f64 {
        1.5
    }
}

/// `Phi^(s)` for the given cutoff.
pub fn phi_mellin(cutoff: &SmoothCutoff, s: Complex64) -> Complex64 {
    cutoff.mellin(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gauss_legendre_composite;
    use proptest::prelude::*;

    #[test]
    fn shape_of_bump() {
        let phi = SmoothCutoff::default();
        for x in [1.0, 1.3, 2.0] {
            assert_eq!(phi.eval(x), 1.0);
        }
        for x in [0.0, 0.5, 2.5, 3.0, -1.0] {
            assert_eq!(phi.eval(x), 0.0);
        }
        assert!((phi.eval(0.75) - 0.5).abs() < 1e-15);
        // all derivatives vanish at the seams: values hug 0 and 1 there
        assert!(phi.eval(0.51) < 1e-20);
        assert!(1.0 - phi.eval(0.99) < 1e-20);
    }

    proptest! {
        #[test]
        fn nonnegative_and_bounded(x in -1.0f64..4.0, shape in 0.2f64..5.0) {
            let v = SmoothCutoff::new(shape).eval(x);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn mellin_at_zero_matches_quadrature() {
        for shape in [0.5, 1.0, 3.0] {
            let phi = SmoothCutoff::new(shape);
            let q = phi.mellin(Complex64::new(0.0, 0.0));
            assert!((q.re - phi.mellin_at_zero()).abs() < 1e-12);
            assert!(q.re > 1.0 && q.re < 2.0);
        }
    }

    #[test]
    fn mellin_two_grids_agree() {
        let phi = SmoothCutoff::default();
        let adaptive = phi.mellin(Complex64::new(1.0, 0.0));
        let f = |x: f64| Complex64::new(x * phi.eval(x), 0.0);
        let fixed = gauss_legendre_composite(f, 0.5, 1.0, 400)
            + gauss_legendre_composite(f, 1.0, 2.0, 10)
            + gauss_legendre_composite(f, 2.0, 2.5, 400);
        assert!((adaptive - fixed).norm() < 1e-10, "{adaptive} vs {fixed}");
        // x Phi(x) integrates to 3 * 3/2 by the symmetry of Phi about 3/2
        assert!((adaptive.re - 2.25).abs() < 1e-10);
    }

    #[test]
    fn mellin_conjugate_symmetry() {
        let phi = SmoothCutoff::default();
        for (a, b) in [(0.3, 1.2), (-0.4, 5.0), (2.0, -0.7)] {
            let s = Complex64::new(a, b);
            assert!((phi.mellin(s.conj()) - phi.mellin(s).conj()).norm() < 1e-12);
        }
    }
}
