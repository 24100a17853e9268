use super::{CoefficientTable, CurveModel};
use crate::error::{Error, Result};

/// Inverse local factor of `L(s, sym^2 E)` at `p`, as a polynomial in `x = p^{-s}`.
///
/// Good `p`: `(1 - alpha^2 x)(1 - x)(1 - beta^2 x) = (1 - x)(1 - (a^2 - 2) x + x^2)`.
/// Bad `p` uses the degree-one factor `1 - a(p)^2 x`.
pub fn sym2_local_factor_inverse(curve: &CurveModel, a_p: f64, p: u64, x: f64) -> f64 {
    if curve.conductor % p == 0 {
        1.0 - a_p * a_p * x
    } else {
        (1.0 - x) * (1.0 - (a_p * a_p - 2.0) * x + x * x)
    }
}

/// Truncated Euler product for `L(1, sym^2 E)` over `p <= prime_cutoff`.
pub fn symmetric_square_l(
    curve: &CurveModel,
    table: &CoefficientTable,
    prime_cutoff: u64,
) -> Result<f64> {
    symmetric_square_l_at(curve, table, 1.0, prime_cutoff)
}

/// Truncated Euler product for `L(s, sym^2 E)` at real `s`.
pub fn symmetric_square_l_at(
    curve: &CurveModel,
    table: &CoefficientTable,
    s: f64,
    prime_cutoff: u64,
) -> Result<f64> {
    if prime_cutoff < 2 {
        return Err(Error::Precondition(
            "symmetric-square prime cutoff must be at least 2".into(),
        ));
    }
    table.ensure_covers(prime_cutoff)?;
    let mut log_sum = 0.0;
    for &p in table.primes().iter().take_while(|&&p| p <= prime_cutoff) {
        let x = (p as f64).powf(-s);
        log_sum -= sym2_local_factor_inverse(curve, table.a(p), p, x).ln();
    }
    Ok(log_sum.exp())
}
