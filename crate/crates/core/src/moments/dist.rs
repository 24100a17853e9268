use std::time::Instant;

use libm::erfc;

use super::{round_sig, DistributionReport};
use crate::arith::factorize;
use crate::curve::CurveModel;
use crate::discriminants::DiscriminantStream;
use crate::error::{Error, Result};
use crate::lvalue::{CentralValue, LValueCache, LValueEngine};

/// Central values at or below this are treated as vanishing.
pub const ZERO_THRESHOLD: f64 = 1e-6;

/// Tail thresholds reported by [`logl_distribution`].
pub const V_GRID: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// `int_V^inf e^{-x^2/2} dx / sqrt(2 pi)`.
pub fn gaussian_tail(v: f64) -> f64 {
    0.5 * erfc(v / std::f64::consts::SQRT_2)
}

/// `L(1/2, E_d)` for every class member with `lo <= |d| <= hi`.
pub fn central_values_between(
    engine: &LValueEngine,
    lo: u64,
    hi: u64,
    prime_only: bool,
    cache: Option<&LValueCache>,
) -> Result<Vec<CentralValue>> {
    let ds: Vec<i64> = DiscriminantStream::new(engine.class(), lo, hi, prime_only).collect();
    engine.central_values(&ds, cache)
}

/// `sum_p log c(p)` over good primes `p | d`.
pub fn log_tamagawa(curve: &CurveModel, d: i64) -> Result<f64> {
    let disc = curve.discriminant();
    let mut acc = 0.0;
    for (p, _) in factorize(d.unsigned_abs()) {
        if p == 2 || curve.conductor % p == 0 || disc % p as i128 == 0 {
            continue;
        }
        acc += (curve.tamagawa_root_count(p)? as f64).ln();
    }
    Ok(acc)
}

/// Tail frequencies over members with `X / log X <= |d| <= X`.
///
/// Unadjusted: `(log L + (1/2) log log |d|) / sqrt(log log |d|)`.
/// Adjusted: `(log L - sum_{p | d} log c(p) - mu log log X) / sqrt(sigma^2 log log X)`.
/// Vanishing values map to `-inf`.
pub fn logl_distribution(
    curve: &CurveModel,
    values: &[CentralValue],
    x: u64,
    adjust: bool,
) -> Result<DistributionReport> {
    let start = Instant::now();
    if x < 16 {
        return Err(Error::Precondition(format!(
            "X must be at least 16, got {x}"
        )));
    }
    let xf = x as f64;
    let lo = xf / xf.ln();
    let split = curve.classify_splitting_field()?;
    let llx = xf.ln().ln();
    let mut stats = Vec::new();
    let mut zeros = 0usize;
    for cv in values.iter().filter(|cv| {
        let a = cv.d.unsigned_abs() as f64;
        a >= lo && a <= xf
    }) {
        if cv.value <= ZERO_THRESHOLD {
            zeros += 1;
            stats.push(f64::NEG_INFINITY);
            continue;
        }
        let s = if adjust {
            (cv.value.ln() - log_tamagawa(curve, cv.d)? - split.mu * llx)
                / (split.sigma2 * llx).sqrt()
        } else {
            let lld = (cv.d.unsigned_abs() as f64).ln().ln();
            (cv.value.ln() + 0.5 * lld) / lld.sqrt()
        };
        stats.push(s);
    }
    let n = stats.len();
    let empirical_tail = V_GRID
        .iter()
        .map(|&v| {
            if n == 0 {
                0.0
            } else {
                round_sig(stats.iter().filter(|&&s| s >= v).count() as f64 / n as f64)
            }
        })
        .collect();
    Ok(DistributionReport {
        label: if adjust {
            "log L adjusted".into()
        } else {
            "log L".into()
        },
        x: xf,
        adjust,
        v_grid: V_GRID.to_vec(),
        empirical_tail,
        gaussian_tail: V_GRID
            .iter()
            .map(|&v| round_sig(gaussian_tail(v)))
            .collect(),
        sample_size: n,
        zero_count: zeros,
        runtime_s: round_sig(start.elapsed().as_secs_f64()),
    })
}

/// `sum_{|d| <= X} L(1/2, E_d)^k / (X (log X)^{k(k-1)/2})` at each grid point.
///
/// `values` must hold every member with `|d| <= covered`.
pub fn fractional_moment_ratio(
    values: &[CentralValue],
    covered: u64,
    grid: &[u64],
    k: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::Precondition(format!(
            "k must lie in [0, 1], got {k}"
        )));
    }
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        if x > covered {
            return Err(Error::Precondition(format!(
                "grid point {x} exceeds computed range {covered}"
            )));
        }
        if x < 2 {
            return Err(Error::Precondition("grid points must be at least 2".into()));
        }
        let xf = x as f64;
        let sum: f64 = values
            .iter()
            .filter(|cv| cv.d.unsigned_abs() <= x)
            .map(|cv| cv.value.max(0.0).powf(k))
            .sum();
        out.push(round_sig(sum / (xf * xf.ln().powf(k * (k - 1.0) / 2.0))));
    }
    Ok(out)
}
