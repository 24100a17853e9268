use std::f64::consts::PI;
use std::time::Instant;

use super::MomentReport;
use crate::arith::{gcd, is_perfect_square, is_squarefree, prime_divisors};
use crate::discriminants::{kronecker, TwistClass};
use crate::error::{Error, Result};
use crate::lvalue::{weighted_discriminants, SmoothCutoff};

/// Exponent in the size condition `v sqrt(n) <= X^{1/2 - 0.05}`.
pub const CHARSUM_EXPONENT: f64 = 0.45;

/// `prod_{p not dividing N0} (1 - p^-2)`.
pub fn coprime_density(n0: u64) -> f64 {
    let local: f64 = prime_divisors(n0)
        .into_iter()
        .map(|p| 1.0 - 1.0 / (p * p) as f64)
        .product();
    6.0 / (PI * PI * local)
}

/// `prod_{p | m} (1 + 1/p)^{-1}`.
pub fn inverse_sigma_factor(m: u64) -> f64 {
    prime_divisors(m)
        .into_iter()
        .map(|p| p as f64 / (p as f64 + 1.0))
        .product()
}

/// `Phi_check(0) X / (v N0) prod_{p | nv} (1 + 1/p)^{-1} prod_{p not dividing N0} (1 - p^-2)`,
/// or zero when `n` is not a square.
pub fn charsum_main_term(cutoff: &SmoothCutoff, n0: u64, n: u64, v: u64, x: f64) -> f64 {
    if !is_perfect_square(n as i128) {
        return 0.0;
    }
    cutoff.mellin_at_zero() * x / (v * n0) as f64
        * inverse_sigma_factor(n * v)
        * coprime_density(n0)
}

pub(crate) fn check_uv(n0: u64, u: u64, v: u64) -> Result<()> {
    if u == 0 || v == 0 {
        return Err(Error::Precondition("u and v must be positive".into()));
    }
    if gcd(u, v) != 1 {
        return Err(Error::Precondition(format!("gcd({u}, {v}) must be 1")));
    }
    if gcd(u * v, n0) != 1 {
        return Err(Error::Precondition(format!(
            "{u} and {v} must be coprime to N0 = {n0}"
        )));
    }
    if !is_squarefree(v) {
        return Err(Error::Precondition(format!("v = {v} must be squarefree")));
    }
    Ok(())
}

/// `sum_{d in class, v | d} chi_d(n) Phi(kappa d / X)` against its main term.
pub fn charsum_average(
    class: &TwistClass,
    cutoff: &SmoothCutoff,
    n: u64,
    v: u64,
    x: u64,
) -> Result<MomentReport> {
    let start = Instant::now();
    check_uv(class.n0, n, v)?;
    let xf = x as f64;
    if v as f64 * (n as f64).sqrt() > xf.powf(CHARSUM_EXPONENT) {
        return Err(Error::Precondition(format!(
            "v sqrt(n) = {} exceeds X^{CHARSUM_EXPONENT}",
            v as f64 * (n as f64).sqrt()
        )));
    }
    let empirical: f64 = weighted_discriminants(class, x, cutoff, false)
        .into_iter()
        .filter(|&(d, _)| d.unsigned_abs() % v == 0)
        .map(|(d, w)| kronecker(d, n) as f64 * w)
        .sum();
    let oracle = charsum_main_term(cutoff, class.n0, n, v, xf);
    let bound = xf.powf(0.55) * (n as f64).sqrt();
    Ok(MomentReport::new(
        format!("charsum n={n} v={v}"),
        xf,
        0.0,
        empirical,
        oracle,
        start.elapsed().as_secs_f64(),
    )
    .with_detail("n", n as f64)
    .with_detail("v", v as f64)
    .with_detail("nonsquare_bound", bound))
}
