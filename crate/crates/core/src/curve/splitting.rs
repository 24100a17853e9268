use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::arith::{factorize, is_perfect_square};
use crate::error::{Error, Result};

/// Degree of the splitting field of `f` over the rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplittingDegree {
    One = 1,
    Two = 2,
    Three = 3,
    Six = 6,
}

/// Splitting-field degree with the mean and variance constants of the
/// log-Sha distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingClass {
    pub degree: SplittingDegree,
    pub mu: f64,
    pub sigma2: f64,
}

impl SplittingClass {
    pub fn from_degree(degree: SplittingDegree) -> Self {
        let l2 = LN_2 * LN_2;
        let (mu, sigma2) = match degree {
            SplittingDegree::One => (-0.5 - 2.0 * LN_2, 1.0 + 4.0 * l2),
            SplittingDegree::Two => (-0.5 - 1.5 * LN_2, 1.0 + 2.5 * l2),
            SplittingDegree::Three => (-0.5 - (2.0 / 3.0) * LN_2, 1.0 + (4.0 / 3.0) * l2),
            SplittingDegree::Six => (-0.5 - (5.0 / 6.0) * LN_2, 1.0 + (7.0 / 6.0) * l2),
        };
        Self { degree, mu, sigma2 }
    }
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factorize(n) {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out
}

fn eval(a2: i128, a1: i128, a0: i128, x: i128) -> i128 {
    ((x + a2) * x + a1) * x + a0
}

pub(super) fn classify(a2: i64, a1: i64, a0: i64) -> Result<SplittingClass> {
    let (b, c, d) = (a2 as i128, a1 as i128, a0 as i128);
    let disc = b * b * c * c - 4 * c * c * c - 4 * b * b * b * d - 27 * d * d + 18 * b * c * d;
    if disc == 0 {
        return Err(Error::SingularCubic);
    }
    // Rational roots of a monic integer cubic are integer divisors of a0.
    let root = if d == 0 {
        Some(0)
    } else {
        divisors(d.unsigned_abs() as u64)
            .into_iter()
            .flat_map(|r| [r as i128, -(r as i128)])
            .find(|&r| eval(b, c, d, r) == 0)
    };
    let degree = match root {
        Some(r) => {
            // f = (x - r)(x^2 + (a2 + r) x + (a1 + r (a2 + r)))
            let qb = b + r;
            let qc = c + r * qb;
            if is_perfect_square(qb * qb - 4 * qc) {
                SplittingDegree::One
            } else {
                SplittingDegree::Two
            }
        }
        None if is_perfect_square(disc) => SplittingDegree::Three,
        None => SplittingDegree::Six,
    };
    Ok(SplittingClass::from_degree(degree))
}
