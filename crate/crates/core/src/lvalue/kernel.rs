use std::f64::consts::PI;

use num_complex::Complex64;

use crate::arith::factorize;
use crate::curve::CurveModel;
use crate::discriminants::TwistClass;
use crate::error::{Error, Result};
use crate::numerics::{gamma, integrate_complex};

/// Local data at one prime `p | N0`: `a(p)` (normalized) and `chi_d(p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct LocalFactor {
    p: u64,
    a_p: f64,
    chi: f64,
    bad: bool,
}

impl LocalFactor {
    /// Normalized `a(p^k) chi_d(p)^k` for `k = 0..=k_max`.
    fn powers(&self, k_max: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        for k in 1..=k_max {
            let v = if self.bad {
                out[k - 1] * self.a_p
            } else {
                let prev2 = if k >= 2 { out[k - 2] } else { 0.0 };
                // a(p^k) = a(p) a(p^{k-1}) - a(p^{k-2}) with chi(p)^2 = 1
                self.a_p * out[k - 1] - prev2
            };
            out.push(v);
        }
        out.into_iter()
            .enumerate()
            .map(|(k, v)| v * self.chi.powi(k as i32))
            .collect()
    }

    fn inverse_factor(&self, s: Complex64) -> Complex64 {
        let x = Complex64::new(self.p as f64, 0.0).powc(-s);
        let one = Complex64::new(1.0, 0.0);
        if self.bad {
            one - x * (self.a_p * self.chi)
        } else {
            one - x * (self.a_p * self.chi) + x * x
        }
    }
}

/// The kernel `W(xi)` of one twist class, from its `N0`-smooth Dirichlet series.
#[derive(Clone, Debug)]
pub struct CutoffKernel {
    sqrt_n: f64,
    eps: f64,
    locals: Vec<LocalFactor>,
    /// `(n, a(n) chi_d(n) / sqrt(n))` for `N0`-smooth `n`, sorted by `n`.
    terms: Vec<(f64, f64)>,
    rankin_constant: f64,
}

/// Exponent in the Rankin-type tail majorant.
const RANKIN_DELTA: f64 = 0.25;

impl CutoffKernel {
    pub fn new(curve: &CurveModel, class: &TwistClass, eps: f64) -> Result<Self> {
        let mut locals = Vec::new();
        for (p, _) in factorize(curve.n0()) {
            let chi = class.chi_at(p).expect("class carries every p | N0") as f64;
            let a_p = curve.trace(p)? as f64 / (p as f64).sqrt();
            locals.push(LocalFactor {
                p,
                a_p,
                chi,
                bad: curve.conductor % p == 0,
            });
        }
        // sum_{n smooth} d(n) n^{-1/2 + delta} = prod_p (1 - p^{-(1/2 - delta)})^{-2}
        let rankin_constant = locals
            .iter()
            .map(|l| (1.0 - (l.p as f64).powf(-(0.5 - RANKIN_DELTA))).powi(-2))
            .product();
        let mut kernel = Self {
            sqrt_n: (curve.conductor as f64).sqrt(),
            eps,
            locals,
            terms: Vec::new(),
            rankin_constant,
        };
        kernel.terms = kernel.smooth_terms(1e60, 0.5);
        Ok(kernel)
    }

    /// `(n, a(n) chi_d(n) n^{-s})` for smooth `n <= limit`, real `s`.
    fn smooth_terms(&self, limit: f64, s: f64) -> Vec<(f64, f64)> {
        let mut out = vec![(1.0, 1.0)];
        for l in &self.locals {
            let p = l.p as f64;
            let k_max = (limit.ln() / p.ln()).floor() as usize;
            let pw = l.powers(k_max);
            let mut next = Vec::with_capacity(out.len() * (k_max + 1));
            for &(n, c) in &out {
                let mut m = n;
                for &coef in &pw {
                    if m > limit {
                        break;
                    }
                    next.push((m, c * coef * (m / n).powf(-s)));
                    m *= p;
                }
            }
            out = next;
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Majorant for `sum_{n > m, smooth} |a(n) chi(n)| n^{-1/2} e^{-2 pi xi n / sqrt N}`.
    pub fn tail_bound(&self, xi: f64, m: f64) -> f64 {
        (-2.0 * PI * xi * m / self.sqrt_n).exp() * m.powf(-RANKIN_DELTA) * self.rankin_constant
    }

    /// `W(xi)`, truncated where [`tail_bound`](Self::tail_bound) drops below `eps`.
    pub fn w(&self, xi: f64) -> Result<f64> {
        if xi <= 0.0 || !xi.is_finite() {
            return Err(Error::Precondition(format!("W needs xi > 0, got {xi}")));
        }
        let rate = 2.0 * PI * xi / self.sqrt_n;
        let mut acc = 0.0;
        for &(n, c) in &self.terms {
            if self.tail_bound(xi, n) < self.eps * 1e-3 {
                break;
            }
            acc += c * (-rate * n).exp();
        }
        Ok(acc)
    }

    /// `L_a(s) = prod_{p | N0}` of the local factors.
    pub fn l_a(&self, s: Complex64) -> Result<Complex64> {
        if s.re <= 0.0 {
            return Err(Error::OutsideConvergence(format!(
                "L_a needs Re(s) > 0, got {s}"
            )));
        }
        Ok(self
            .locals
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, l| acc / l.inverse_factor(s)))
    }

    /// `L_a(1/2)`.
    pub fn l_a_half(&self) -> f64 {
        self.l_a(Complex64::new(0.5, 0.0)).expect("in region").re
    }

    /// `L_a(s)` by direct summation of the smooth series up to `limit`.
    pub fn l_a_series(&self, s: Complex64, limit: f64) -> Complex64 {
        self.smooth_terms(limit, 0.0)
            .into_iter()
            .map(|(n, c)| Complex64::new(n, 0.0).powc(-s) * c)
            .sum()
    }

    /// `(1/2 pi) int L_a(c + it + 1/2) Gamma(c + it) (sqrt N / (2 pi xi))^{c + it} dt`.
    pub fn w_contour(&self, xi: f64, c: f64, t_max: f64, tol: f64) -> Complex64 {
        let base = Complex64::new(self.sqrt_n / (2.0 * PI * xi), 0.0);
        let f = |t: f64| {
            let s = Complex64::new(c, t);
            self.l_a(s + 0.5).expect("Re > 0") * gamma(s) * base.powc(s)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        let step = 2.0;
        let mut a = -t_max;
        while a < t_max {
            acc += integrate_complex(f, a, a + step, tol);
            a += step;
        }
        acc / (2.0 * PI)
    }

    /// Number of smooth terms held.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn congruent() -> (CurveModel, TwistClass) {
        let e = CurveModel::congruent_number_curve();
        let c = TwistClass::new(1, 17, &e).unwrap();
        (e, c)
    }

    fn eleven() -> Vec<(CurveModel, TwistClass)> {
        let e = CurveModel::conductor_11_curve();
        crate::discriminants::admissible_classes(&e)
            .into_iter()
            .map(|c| (e.clone(), c))
            .collect()
    }

    #[test]
    fn trivial_kernel_when_only_bad_prime_has_zero_trace() {
        let (e, c) = congruent();
        let k = CutoffKernel::new(&e, &c, 1e-12).unwrap();
        for s in [Complex64::new(0.5, 0.0), Complex64::new(0.3, 4.0)] {
            assert!((k.l_a(s).unwrap() - 1.0).norm() < 1e-15);
        }
        let xi = 1e-3;
        assert!((k.w(xi).unwrap() - (-2.0 * PI * xi / 32f64.sqrt()).exp()).abs() < 1e-15);
    }

    #[test]
    fn l_a_half_matches_series() {
        for (e, c) in eleven() {
            let k = CutoffKernel::new(&e, &c, 1e-12).unwrap();
            let s = Complex64::new(0.5, 0.0);
            let prod = k.l_a(s).unwrap();
            assert!(prod.re > 0.0 && prod.im.abs() < 1e-15);
            assert!((prod - k.l_a_series(s, 1e40)).norm() < 1e-10);
        }
    }

    #[test]
    fn euler_product_equals_series_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (e, c) = eleven().swap_remove(0);
        let k = CutoffKernel::new(&e, &c, 1e-12).unwrap();
        for _ in 0..20 {
            let s = Complex64::new(rng.gen_range(0.3..2.0), rng.gen_range(-20.0..20.0));
            let prod = k.l_a(s).unwrap();
            let series = k.l_a_series(s, 1e60);
            assert!((prod - series).norm() < 1e-10, "s={s}: {prod} vs {series}");
            assert!((k.l_a(s.conj()).unwrap() - prod.conj()).norm() < 1e-14);
        }
        assert!(k.l_a(Complex64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn w_tends_to_l_a_half() {
        for (e, c) in eleven() {
            let k = CutoffKernel::new(&e, &c, 1e-12).unwrap();
            let target = k.l_a_half();
            let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6]
                .iter()
                .map(|&xi| (k.w(xi).unwrap() - target).abs())
                .collect();
            assert!(gaps[2] < 1e-2, "{gaps:?}");
            assert!(gaps[2] < gaps[0]);
        }
    }

    #[test]
    fn w_decays() {
        for (e, c) in eleven() {
            let k = CutoffKernel::new(&e, &c, 1e-12).unwrap();
            let sqrt_n = (e.conductor as f64).sqrt();
            let bound = (-2.0 * PI * 50.0 / sqrt_n).exp() * 1e3;
            assert!(k.w(50.0).unwrap().abs() < bound);
            // log|W| + 2 pi xi / sqrt N stays below a fixed constant
            for i in 0..=59 {
                let xi = 1.0 + i as f64;
                let v = k.w(xi).unwrap().abs().ln() + 2.0 * PI * xi / sqrt_n;
                assert!(v < 1.0, "xi={xi}: {v}");
            }
        }
        assert!(CutoffKernel::new(&congruent().0, &congruent().1, 1e-12)
            .unwrap()
            .w(0.0)
            .is_err());
    }

    #[test]
    fn w_matches_contour_integral() {
        for (e, c) in eleven() {
            let k = CutoffKernel::new(&e, &c, 1e-12).unwrap();
            let direct = k.w(1.0).unwrap();
            let contour = k.w_contour(1.0, 1.0, 80.0, 1e-12);
            assert!(contour.im.abs() < 1e-8);
            assert!((direct - contour.re).abs() < 1e-6, "{direct} vs {contour}");
        }
    }
}
