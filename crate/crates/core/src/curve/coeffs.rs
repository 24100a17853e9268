use std::path::Path;

use rayon::prelude::*;

use super::cache::{read_trace_cache, write_trace_cache, TraceCache};
use super::CurveModel;
use crate::arith::{least_prime_factors, primes_up_to};
use crate::error::{Error, Result};

/// Hecke eigenvalues `A(n)` for `n <= n_max`, with `a(n) = A(n) / sqrt(n)`.
///
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    n_max: u64,
    traces: Vec<i64>,
    normalized: Vec<f64>,
    lpf: Vec<u32>,
    primes: Vec<u64>,
}

impl CoefficientTable {
    pub fn build(curve: &CurveModel, n_max: u64) -> Result<Self> {
        let primes = primes_up_to(n_max);
        let prime_traces = prime_traces(curve, &primes)?;
        Ok(Self::assemble(curve, n_max, primes, prime_traces))
    }

    /// Like [`build`](Self::build), reusing and refreshing an on-disk trace cache.
    pub fn build_cached(curve: &CurveModel, n_max: u64, cache_path: &Path) -> Result<Self> {
        let primes = primes_up_to(n_max);
        let cached = match read_trace_cache(cache_path) {
            Ok(c) if c.curve_hash == curve.hash() => Some(c),
            _ => None,
        };
        let prime_traces = match cached {
            Some(c) if c.p_max >= n_max => c.traces[..primes.len()].to_vec(),
            _ => {
                let t = prime_traces(curve, &primes)?;
                write_trace_cache(
                    cache_path,
                    &TraceCache {
                        curve_hash: curve.hash(),
                        p_max: n_max,
                        traces: t.clone(),
                    },
                )?;
                t
            }
        };
        Ok(Self::assemble(curve, n_max, primes, prime_traces))
    }

    fn assemble(curve: &CurveModel, n_max: u64, primes: Vec<u64>, prime_traces: Vec<i64>) -> Self {
        let lpf = least_prime_factors(n_max as usize);
        let mut traces = vec![0i64; n_max as usize + 1];
        if n_max >= 1 {
            traces[1] = 1;
        }
        for (&p, &t) in primes.iter().zip(&prime_traces) {
            traces[p as usize] = t;
        }
        for n in 4..=n_max as usize {
            let p = lpf[n] as usize;
            if p == n {
                continue;
            }
            let m = n / p;
            traces[n] = if m % p != 0 || curve.conductor % p as u64 == 0 {
                traces[p] * traces[m]
            } else {
                traces[p] * traces[m] - p as i64 * traces[m / p]
            };
        }
        let normalized = traces
            .iter()
            .enumerate()
            .map(|(n, &a)| {
                if n == 0 {
                    0.0
                } else {
                    a as f64 / (n as f64).sqrt()
                }
            })
            .collect();
        Self {
            n_max,
            traces,
            normalized,
            lpf,
            primes,
        }
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    /// `A(n)`.
    pub fn trace(&self, n: u64) -> i64 {
        self.traces[n as usize]
    }

    /// `a(n) = A(n) / sqrt(n)`.
    pub fn a(&self, n: u64) -> f64 {
        self.normalized[n as usize]
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn least_prime_factor(&self, n: u64) -> u64 {
        self.lpf[n as usize] as u64
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn ensure_covers(&self, n: u64) -> Result<()> {
        if n > self.n_max {
            Err(Error::TableTooShort {
                required: n,
                available: self.n_max,
            })
        } else {
            Ok(())
        }
    }
}

fn prime_traces(curve: &CurveModel, primes: &[u64]) -> Result<Vec<i64>> {
    for &p in primes {
        if (p == 2 || curve.conductor % p == 0) && !curve.bad_prime_traces.contains_key(&p) {
            return Err(Error::MissingBadTrace(p));
        }
    }
    primes.par_iter().map(|&p| curve.trace(p)).collect()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::arith::{divisor_count, gcd};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_examples() {
        let e = CurveModel::congruent_number_curve();
        let t = CoefficientTable::build(&e, 2_000).unwrap();
        assert_eq!(t.trace(1), 1);
        assert_eq!(t.a(1), 1.0);
        assert_eq!(t.trace(15), 0);
        assert_eq!(t.trace(25), -1);
        assert_eq!(t.trace(5), -2);
        // additive at 2
        assert_eq!(t.trace(8), 0);
    }

    #[test]
    fn missing_bad_trace_names_prime() {
        let e = CurveModel::new((0, -1, 0), 32, 1, BTreeMap::new()).unwrap();
        assert_eq!(
            CoefficientTable::build(&e, 10).unwrap_err(),
            Error::MissingBadTrace(2)
        );
        let e11 = CurveModel::new((-4, -160, -1264), 11, 1, BTreeMap::from([(2, -2)])).unwrap();
        assert!(CoefficientTable::build(&e11, 10).is_ok());
        assert_eq!(
            CoefficientTable::build(&e11, 20).unwrap_err(),
            Error::MissingBadTrace(11)
        );
    }

    #[test]
    fn table_invariants() {
        let n_max = 200_000;
        for curve in [
            CurveModel::congruent_number_curve(),
            CurveModel::conductor_11_curve(),
        ] {
            let t = CoefficientTable::build(&curve, n_max).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut checked = 0;
            while checked < 10_000 {
                let m = rng.gen_range(1..=2_000u64);
                let n = rng.gen_range(1..=n_max / m);
                if gcd(m, n) != 1 {
                    continue;
                }
                assert_eq!(t.trace(m * n), t.trace(m) * t.trace(n), "m={m} n={n}");
                checked += 1;
            }
            for &p in t.primes().iter().take_while(|&&p| p <= 10_000) {
                assert!(
                    (t.trace(p) as f64).abs() <= 2.0 * (p as f64).sqrt(),
                    "Hasse at {p}"
                );
            }
            for n in 1..=n_max {
                assert!(
                    t.a(n).abs() <= divisor_count(n) as f64 + 1e-9,
                    "divisor bound at {n}"
                );
            }
        }
    }

    #[test]
    fn hecke_recursion_at_good_and_bad_primes() {
        let e = CurveModel::conductor_11_curve();
        let t = CoefficientTable::build(&e, 20_000).unwrap();
        for p in [3u64, 5, 7, 13] {
            let mut pk = p;
            while pk * p * p <= 20_000 {
                let next = pk * p;
                assert_eq!(
                    t.trace(next * p),
                    t.trace(p) * t.trace(next) - p as i64 * t.trace(pk)
                );
                pk = next;
            }
        }
        assert_eq!(t.trace(121), 1);
        assert_eq!(t.trace(1331), 1);
        assert_eq!(t.trace(4), 2);
    }
}
