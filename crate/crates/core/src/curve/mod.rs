//! The fixed elliptic curve `y^2 = f(x)` and its arithmetic data.

mod cache;
mod coeffs;
pub(crate) mod pointcount;
mod splitting;
mod symsquare;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use cache::{read_trace_cache, write_trace_cache, TraceCache, TRACE_CACHE_MAGIC};
pub use coeffs::CoefficientTable;
pub use splitting::{SplittingClass, SplittingDegree};
pub use symsquare::{sym2_local_factor_inverse, symmetric_square_l, symmetric_square_l_at};

use crate::arith::{factorize, fnv1a64, lcm};
use crate::error::{Error, Result};
use pointcount::CubicModP;

/// An elliptic curve over the rationals given by `y^2 = x^3 + a2 x^2 + a1 x + a0`.
///
/// The conductor and root number are inputs. Traces at primes where the model
/// is singular (always 2, and every `p | N`) must be supplied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveModel {
    pub a2: i64,
    pub a1: i64,
    pub a0: i64,
    pub conductor: u64,
    pub root_number: i8,
    pub bad_prime_traces: BTreeMap<u64, i64>,
    n0: u64,
}

impl CurveModel {
    pub fn new(
        (a2, a1, a0): (i64, i64, i64),
        conductor: u64,
        root_number: i8,
        bad_prime_traces: BTreeMap<u64, i64>,
    ) -> Result<Self> {
        if conductor == 0 {
            return Err(Error::InvalidCurve("conductor must be positive".into()));
        }
        if root_number != 1 && root_number != -1 {
            return Err(Error::InvalidCurve(format!(
                "root number must be +1 or -1, got {root_number}"
            )));
        }
        let curve = Self {
            a2,
            a1,
            a0,
            conductor,
            root_number,
            bad_prime_traces,
            n0: lcm(8, conductor),
        };
        let disc = curve.discriminant();
        if disc == 0 {
            return Err(Error::SingularCubic);
        }
        for (p, _) in factorize(disc.unsigned_abs() as u64) {
            if p != 2 && conductor % p != 0 && !curve.bad_prime_traces.contains_key(&p) {
                return Err(Error::InvalidCurve(format!(
                    "prime {p} divides disc(f) but not N and has no supplied trace"
                )));
            }
        }
        Ok(curve)
    }

    /// `y^2 = x^3 - x`: conductor 32, root number +1, additive at 2.
    pub fn congruent_number_curve() -> Self {
        Self::new((0, -1, 0), 32, 1, BTreeMap::from([(2, 0)])).expect("valid curve")
    }

    /// A model `y^2 = x^3 - 4x^2 - 160x - 1264` of the conductor-11 curve
    /// (rank 0, split multiplicative at 11, `A(2) = -2`).
    pub fn conductor_11_curve() -> Self {
        Self::new((-4, -160, -1264), 11, 1, BTreeMap::from([(2, -2), (11, 1)]))
            .expect("valid curve")
    }

    /// `lcm(8, N)`.
    pub fn n0(&self) -> u64 {
        self.n0
    }

    /// Discriminant of the cubic `f`.
    pub fn discriminant(&self) -> i128 {
        let (b, c, d) = (self.a2 as i128, self.a1 as i128, self.a0 as i128);
        b * b * c * c - 4 * c * c * c - 4 * b * b * b * d - 27 * d * d + 18 * b * c * d
    }

    /// 64-bit FNV-1a of `(a2, a1, a0, N)` in little-endian bytes.
    pub fn hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(32);
        for v in [self.a2, self.a1, self.a0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&self.conductor.to_le_bytes());
        fnv1a64(&bytes)
    }

    /// Whether the model has good reduction at `p` and no override is needed.
    pub fn is_good_odd_prime(&self, p: u64) -> bool {
        p != 2 && self.conductor % p != 0 && !self.bad_prime_traces.contains_key(&p)
    }

    fn mod_p(&self, p: u64) -> CubicModP {
        CubicModP::new(self.a2, self.a1, self.a0, p)
    }

    /// `A(p) = p + 1 - #E(F_p)` by a full scan of residues.
    pub fn trace_of_frobenius(&self, p: u64) -> Result<i64> {
        if p == 2 || self.conductor % p == 0 {
            return Err(Error::BadPrime(p));
        }
        if !crate::arith::is_prime(p) {
            return Err(Error::Precondition(format!("{p} is not prime")));
        }
        Ok(pointcount::trace_by_scan(&self.mod_p(p)))
    }

    /// Trace at any prime: supplied value if present, group search otherwise.
    pub fn trace(&self, p: u64) -> Result<i64> {
        if let Some(&t) = self.bad_prime_traces.get(&p) {
            return Ok(t);
        }
        if p == 2 || self.conductor % p == 0 {
            return Err(Error::MissingBadTrace(p));
        }
        Ok(pointcount::trace_by_search(&self.mod_p(p)))
    }

    /// `c(p) = 1 + #{x mod p : f(x) = 0}`.
    pub fn tamagawa_root_count(&self, p: u64) -> Result<u32> {
        if p == 2 || self.conductor % p == 0 || self.discriminant() % p as i128 == 0 {
            return Err(Error::ExcludedPrime(p));
        }
        Ok(1 + pointcount::root_count(&self.mod_p(p)))
    }

    pub fn classify_splitting_field(&self) -> Result<SplittingClass> {
        splitting::classify(self.a2, self.a1, self.a0)
    }

    /// Numerical check of the functional equation of the untwisted curve.
    ///
    /// With `g(t) = sum A(n) exp(-2 pi n t / sqrt N)` the newform satisfies
    /// `g(1/t) = eps t^2 g(t)`. Returns `g(1/t) / (t^2 g(t))` for each `t`,
    /// which should equal the configured root number.
    pub fn functional_equation_ratios(
        &self,
        table: &CoefficientTable,
        ts: &[f64],
    ) -> Result<Vec<f64>> {
        let sqrt_n = (self.conductor as f64).sqrt();
        let g = |t: f64| -> Result<f64> {
            let rate = 2.0 * std::f64::consts::PI * t / sqrt_n;
            let n_max = (45.0 / rate).ceil() as u64;
            table.ensure_covers(n_max)?;
            Ok((1..=n_max)
                .map(|n| table.trace(n) as f64 * (-rate * n as f64).exp())
                .sum())
        };
        ts.iter()
            .map(|&t| Ok(g(1.0 / t)? / (t * t * g(t)?)))
            .collect()
    }
}
