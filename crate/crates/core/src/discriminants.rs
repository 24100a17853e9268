//! Fundamental discriminants in a residue/sign class, quadratic characters
//! and twist root numbers.

use serde::{Deserialize, Serialize};

use crate::arith::{factorize, gcd, is_prime, isqrt, jacobi, primes_up_to};
use crate::curve::CurveModel;
use crate::error::{Error, Result};

/// Block length of the segmented squarefree sieve.
pub const SIEVE_BLOCK: u64 = 1 << 20;

/// Kronecker symbol `(d / n)` for `n >= 1`.
pub fn kronecker(d: i64, n: u64) -> i8 {
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let twos = n.trailing_zeros();
    let odd = n >> twos;
    let mut sign = 1i8;
    if twos > 0 {
        if d % 2 == 0 {
            return 0;
        }
        let r = d.rem_euclid(8);
        if (r == 3 || r == 5) && twos % 2 == 1 {
            sign = -1;
        }
    }
    sign * jacobi(d, odd)
}

/// `eps_E * chi_d(-N)`.
pub fn twist_root_number(curve: &CurveModel, d: i64) -> Result<i8> {
    if d == 0 || gcd(d.unsigned_abs(), 2 * curve.conductor) != 1 {
        return Err(Error::InvalidDiscriminant(
            d,
            format!("must be coprime to 2N = {}", 2 * curve.conductor),
        ));
    }
    let chi_minus_one: i8 = if d > 0 { 1 } else { -1 };
    Ok(curve.root_number * chi_minus_one * kronecker(d, curve.conductor))
}

fn class_root_number(curve: &CurveModel, kappa: i8, a: u64) -> i8 {
    // any representative of the class; the value depends only on d mod N0 and sign
    let n0 = curve.n0() as i64;
    let rep = if kappa > 0 { a as i64 } else { a as i64 - n0 };
    curve.root_number * kappa * kronecker(rep, curve.conductor)
}

/// The class `{ d : kappa d > 0, d = a (mod N0) }` of squarefree discriminants
/// with twist root number `+1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistClass {
    pub kappa: i8,
    pub a: u64,
    pub n0: u64,
    /// `chi_d(p)` for each prime `p | N0`, constant on the class.
    pub chi_at_bad_primes: Vec<(u64, i8)>,
}

impl TwistClass {
    pub fn new(kappa: i8, a: i64, curve: &CurveModel) -> Result<Self> {
        let n0 = curve.n0();
        if kappa != 1 && kappa != -1 {
            return Err(Error::InvalidClass(format!(
                "sign must be +1 or -1, got {kappa}"
            )));
        }
        let a = a.rem_euclid(n0 as i64) as u64;
        if a % 8 != 1 && a % 8 != 5 {
            return Err(Error::InvalidClass(format!("a = {a} is not 1 or 5 mod 8")));
        }
        if gcd(a, n0) != 1 {
            return Err(Error::InvalidClass(format!(
                "gcd(a, N0) > 1 for a = {a}, N0 = {n0}"
            )));
        }
        if class_root_number(curve, kappa, a) != 1 {
            return Err(Error::InvalidClass(format!(
                "class ({kappa}, {a}) has twist root number -1"
            )));
        }
        let rep = if kappa > 0 {
            a as i64
        } else {
            a as i64 - n0 as i64
        };
        let chi_at_bad_primes = factorize(n0)
            .into_iter()
            .map(|(p, _)| (p, kronecker(rep, p)))
            .collect();
        Ok(Self {
            kappa,
            a,
            n0,
            chi_at_bad_primes,
        })
    }

    /// `chi_d(p)` for `p | N0`.
    pub fn chi_at(&self, p: u64) -> Option<i8> {
        self.chi_at_bad_primes
            .iter()
            .find(|&&(q, _)| q == p)
            .map(|&(_, c)| c)
    }

    pub fn contains(&self, d: i64) -> bool {
        d != 0 && (d > 0) == (self.kappa > 0) && d.rem_euclid(self.n0 as i64) as u64 == self.a
    }

    /// Residue of `|d|` modulo `N0` for members of the class.
    fn abs_residue(&self) -> u64 {
        if self.kappa > 0 {
            self.a
        } else {
            (self.n0 - self.a) % self.n0
        }
    }
}

/// Every admissible `(kappa, a)` for the curve, by scanning residues mod `N0`.
pub fn admissible_classes(curve: &CurveModel) -> Vec<TwistClass> {
    let mut out = Vec::new();
    for kappa in [1i8, -1] {
        for a in 1..curve.n0() {
            if let Ok(c) = TwistClass::new(kappa, a as i64, curve) {
                out.push(c);
            }
        }
    }
    out
}

/// Squarefree `d` in a class with `lo <= |d| <= hi`, in increasing `|d|`.
///
/// Segmented: each block of [`SIEVE_BLOCK`] integers is sieved independently.
#[derive(Clone, Debug)]
pub struct DiscriminantStream {
    class: TwistClass,
    prime_only: bool,
    next_lo: u64,
    hi: u64,
    sieve_primes: Vec<u64>,
    buffer: Vec<i64>,
    pos: usize,
}

impl DiscriminantStream {
    pub fn new(class: &TwistClass, lo: u64, hi: u64, prime_only: bool) -> Self {
        Self {
            class: class.clone(),
            prime_only,
            next_lo: lo.max(1),
            hi,
            sieve_primes: primes_up_to(isqrt(hi)),
            buffer: Vec::new(),
            pos: 0,
        }
    }

    /// Sieves and returns the next block, or `None` when exhausted.
    pub fn next_block(&mut self) -> Option<Vec<i64>> {
        if self.next_lo > self.hi {
            return None;
        }
        let lo = self.next_lo;
        let hi = (lo + SIEVE_BLOCK - 1).min(self.hi);
        self.next_lo = hi + 1;
        let mut squarefree = vec![true; (hi - lo + 1) as usize];
        for &p in &self.sieve_primes {
            let p2 = p * p;
            if p2 > hi {
                break;
            }
            let mut m = lo.div_ceil(p2) * p2;
            while m <= hi {
                squarefree[(m - lo) as usize] = false;
                m += p2;
            }
        }
        let n0 = self.class.n0;
        let r = self.class.abs_residue();
        let mut m = lo + (r + n0 - lo % n0) % n0;
        let mut out = Vec::new();
        while m <= hi {
            if squarefree[(m - lo) as usize] && (!self.prime_only || is_prime(m)) {
                out.push(self.class.kappa as i64 * m as i64);
            }
            m += n0;
        }
        Some(out)
    }
}

impl Iterator for DiscriminantStream {
    type Item = i64;

    fn next(&mut self) -> Option<i64> {
        while self.pos >= self.buffer.len() {
            self.buffer = self.next_block()?;
            self.pos = 0;
        }
        self.pos += 1;
        Some(self.buffer[self.pos - 1])
    }
}

/// Discriminants of the class with `0 < kappa d <= x`.
pub fn enumerate(class: &TwistClass, x: u64, prime_only: bool) -> DiscriminantStream {
    DiscriminantStream::new(class, 1, x, prime_only)
}

/// Limiting density `(1/N0) prod_{p not dividing N0} (1 - p^-2)` of a class.
pub fn class_density(n0: u64) -> f64 {
    let mut correction = 1.0;
    for (p, _) in factorize(n0) {
        correction *= 1.0 - 1.0 / (p * p) as f64;
    }
    6.0 / (std::f64::consts::PI.powi(2) * correction * n0 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{is_squarefree, pow_mod};
    use proptest::prelude::*;

    fn legendre_euler(d: i64, p: u64) -> i8 {
        let r = d.rem_euclid(p as i64) as u64;
        if r == 0 {
            return 0;
        }
        if pow_mod(r, (p - 1) / 2, p) == 1 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(17, 2), 1);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(-7, 1), 1);
        assert_eq!(kronecker(6, 4), 0);
        assert_eq!(kronecker(5, 8), -1);
    }

    #[test]
    fn kronecker_matches_euler_criterion() {
        for p in primes_up_to(1000).into_iter().skip(1) {
            for d in -1000i64..=1000 {
                if d != 0 {
                    assert_eq!(kronecker(d, p), legendre_euler(d, p), "d={d} p={p}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn kronecker_multiplicative(d in -5000i64..5000, m in 1u64..3000, n in 1u64..3000) {
            prop_assume!(d != 0);
            prop_assert_eq!(kronecker(d, m * n), kronecker(d, m) * kronecker(d, n));
            prop_assert_eq!(kronecker(d, n) == 0, gcd(d.unsigned_abs(), n) > 1);
        }
    }

    #[test]
    fn root_number_examples() {
        let e = CurveModel::congruent_number_curve();
        assert_eq!(twist_root_number(&e, 17), Ok(1));
        assert_eq!(twist_root_number(&e, 5), Ok(-1));
        assert_eq!(twist_root_number(&e, 1), Ok(1));
        assert!(twist_root_number(&e, 3 * 17).is_ok());
        assert!(twist_root_number(&e, 34).is_err());
    }

    #[test]
    fn class_validation() {
        let e = CurveModel::congruent_number_curve();
        assert!(TwistClass::new(1, 17, &e).is_ok());
        assert!(matches!(
            TwistClass::new(1, 3, &e),
            Err(Error::InvalidClass(_))
        ));
        assert!(matches!(
            TwistClass::new(1, 5, &e),
            Err(Error::InvalidClass(_))
        ));
        let e11 = CurveModel::conductor_11_curve();
        assert!(matches!(
            TwistClass::new(1, 33, &e11),
            Err(Error::InvalidClass(_))
        ));
    }

    #[test]
    fn admissible_classes_of_congruent_curve() {
        let e = CurveModel::congruent_number_curve();
        let got: Vec<(i8, u64)> = admissible_classes(&e)
            .iter()
            .map(|c| (c.kappa, c.a))
            .collect();
        assert_eq!(
            got,
            vec![
                (1, 1),
                (1, 9),
                (1, 17),
                (1, 25),
                (-1, 5),
                (-1, 13),
                (-1, 21),
                (-1, 29)
            ]
        );
    }

    #[test]
    fn enumeration_examples() {
        let e = CurveModel::congruent_number_curve();
        let c = TwistClass::new(1, 17, &e).unwrap();
        assert_eq!(enumerate(&c, 100, false).collect::<Vec<_>>(), vec![17]);
        assert_eq!(enumerate(&c, 100, true).collect::<Vec<_>>(), vec![17]);
        assert_eq!(enumerate(&c, 0, false).count(), 0);
    }

    #[test]
    fn enumeration_matches_direct_scan_across_blocks() {
        let e = CurveModel::conductor_11_curve();
        let x = 3 * SIEVE_BLOCK + 12_345;
        for class in admissible_classes(&e).into_iter().take(3) {
            let got: Vec<i64> = enumerate(&class, x, false).collect();
            let want: Vec<i64> = (1..=x)
                .map(|m| class.kappa as i64 * m as i64)
                .filter(|&d| class.contains(d) && is_squarefree(d.unsigned_abs()))
                .collect();
            assert_eq!(got, want);
            for &d in got.iter().take(2000) {
                assert_eq!(d.rem_euclid(4), 1);
                assert_eq!(twist_root_number(&e, d), Ok(1));
            }
        }
    }

    #[test]
    fn prime_only_stream() {
        let e = CurveModel::congruent_number_curve();
        let c = TwistClass::new(-1, 5, &e).unwrap();
        let got: Vec<i64> = enumerate(&c, 10_000, true).collect();
        assert!(!got.is_empty());
        assert!(got
            .iter()
            .all(|&d| d < 0 && is_prime(d.unsigned_abs()) && c.contains(d)));
        let all = enumerate(&c, 10_000, false)
            .filter(|d| is_prime(d.unsigned_abs()))
            .count();
        assert_eq!(all, got.len());
    }

    #[test]
    fn class_count_approaches_density() {
        let e = CurveModel::congruent_number_curve();
        let c = TwistClass::new(1, 1, &e).unwrap();
        let density = class_density(e.n0());
        let errs: Vec<f64> = [10_000u64, 100_000, 1_000_000]
            .iter()
            .map(|&x| (enumerate(&c, x, false).count() as f64 / x as f64 / density - 1.0).abs())
            .collect();
        assert!(errs[2] < 0.01, "{errs:?}");
        assert!(errs[2] <= errs[0], "{errs:?}");
    }
}
