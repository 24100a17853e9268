use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MomentReport;
use crate::arith::{gcd, is_squarefree, primes_up_to};
use crate::curve::{CoefficientTable, CurveModel};
use crate::discriminants::{kronecker, TwistClass};
use crate::error::{Error, Result};
use crate::lvalue::{weighted_discriminants, SmoothCutoff};

/// `M_k = k! / (2^{k/2} (k/2)!)` for even `k`, zero for odd `k`.
pub fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(|j| j as f64).product()
}

/// `z = X^{1 / (log log X)^2}`.
pub fn prime_cutoff(x: f64) -> f64 {
    x.powf(1.0 / x.ln().ln().powi(2))
}

/// Primes `p <= z` with `p` coprime to `N0`.
pub fn prime_set(x: f64, n0: u64) -> Vec<u64> {
    primes_up_to(prime_cutoff(x).floor() as u64)
        .into_iter()
        .filter(|&p| n0 % p != 0)
        .collect()
}

/// `P(d) = sum_{p in P} a(p) p^{-1/2} chi_d(p)`.
pub fn prime_polynomial(table: &CoefficientTable, primes: &[u64], d: i64) -> f64 {
    primes
        .iter()
        .map(|&p| table.a(p) / (p as f64).sqrt() * kronecker(d, p) as f64)
        .sum()
}

/// `sum_{p_1..p_k in primes, p_1...p_k = square} prod a(p_i) p_i^{-1/2} prod_{p | p_1...p_k} (1 + 1/p)^{-1}`,
/// as `k! [t^k] prod_q (1 + (q/(q+1)) sum_{m >= 1} (a(q)^2/q)^m t^{2m} / (2m)!)`.
pub fn square_diagonal(table: &CoefficientTable, primes: &[u64], k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let k = k as usize;
    let mut poly = vec![0.0; k + 1];
    poly[0] = 1.0;
    for &q in primes {
        let w = table.a(q).powi(2) / q as f64;
        let damp = q as f64 / (q as f64 + 1.0);
        let mut local = vec![0.0; k + 1];
        local[0] = 1.0;
        let mut fact = 1.0;
        for m in 1..=k / 2 {
            fact *= ((2 * m - 1) * 2 * m) as f64;
            local[2 * m] = damp * w.powi(m as i32) / fact;
        }
        let mut next = vec![0.0; k + 1];
        for (i, &a) in poly.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in local.iter().enumerate().take(k + 1 - i) {
                next[i + j] += a * b;
            }
        }
        poly = next;
    }
    (1..=k).map(|j| j as f64).product::<f64>() * poly[k]
}

/// `M_k sum_{distinct q_1..q_{k/2}} prod a(q_i)^2 / (q_i + 1)`, the all-distinct part of the diagonal.
pub fn distinct_diagonal(table: &CoefficientTable, primes: &[u64], k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let s = (k / 2) as usize;
    // elementary symmetric sums e_0..e_s
    let mut e = vec![0.0; s + 1];
    e[0] = 1.0;
    for &q in primes {
        let w = table.a(q).powi(2) / (q as f64 + 1.0);
        for j in (1..=s).rev() {
            e[j] += e[j - 1] * w;
        }
    }
    let s_fact: f64 = (1..=s).map(|j| j as f64).product();
    gaussian_moment(k) * s_fact * e[s]
}

fn check_v(n0: u64, v: u64, x: f64) -> Result<()> {
    if v == 0 || gcd(v, n0) != 1 || !is_squarefree(v) {
        return Err(Error::Precondition(format!(
            "v = {v} must be squarefree and coprime to N0"
        )));
    }
    if v as f64 > x.powf(0.45) {
        return Err(Error::Precondition(format!("v = {v} exceeds X^0.45")));
    }
    Ok(())
}

/// `sum_{d, v | d} P(d)^k Phi(kappa d / X)` against the exact square diagonal.
///
/// The oracle is `(sum_{v | d} Phi) * square_diagonal`. Details carry the
/// all-distinct part, the remaining correction and the normalized value
/// `empirical / (count (log log X)^{k/2})`.
pub fn pd_moments(
    table: &CoefficientTable,
    class: &TwistClass,
    cutoff: &SmoothCutoff,
    k: u32,
    x: u64,
    v: u64,
) -> Result<MomentReport> {
    let start = Instant::now();
    let xf = x as f64;
    if x < 16 {
        return Err(Error::Precondition(format!(
            "X must be at least 16, got {x}"
        )));
    }
    check_v(class.n0, v, xf)?;
    let primes: Vec<u64> = prime_set(xf, class.n0)
        .into_iter()
        .filter(|&p| v % p != 0)
        .collect();
    table.ensure_covers(primes.last().copied().unwrap_or(1))?;
    let members: Vec<(i64, f64)> = weighted_discriminants(class, x, cutoff, false)
        .into_iter()
        .filter(|&(d, _)| d.unsigned_abs() % v == 0)
        .collect();
    let (count, empirical) = members
        .par_iter()
        .map(|&(d, w)| (w, prime_polynomial(table, &primes, d).powi(k as i32) * w))
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let oracle = count * square_diagonal(table, &primes, k);
    let distinct = count * distinct_diagonal(table, &primes, k);
    let scale = count * xf.ln().ln().powf(k as f64 / 2.0);
    Ok(MomentReport::new(
        format!("pd_moment k={k} v={v}"),
        xf,
        k as f64,
        empirical,
        oracle,
        start.elapsed().as_secs_f64(),
    )
    .with_detail("count", count)
    .with_detail("primes", primes.len() as f64)
    .with_detail("distinct_oracle", distinct)
    .with_detail("repeated_correction", oracle - distinct)
    .with_detail("normalized", empirical / scale))
}

/// The prime range `[lo, hi]` of the Tamagawa statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TamagawaWindow {
    pub lo: f64,
    pub hi: f64,
}

impl TamagawaWindow {
    /// `[log X, X^{1/(log log X)^2}]`.
    pub fn for_x(x: f64) -> Self {
        Self {
            lo: x.ln(),
            hi: prime_cutoff(x),
        }
    }
}

/// `(p, log c(p))` for primes in the window where `c(p)` is defined.
pub fn tamagawa_terms(curve: &CurveModel, window: TamagawaWindow) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::new();
    if window.hi < window.lo || window.hi < 2.0 {
        return Ok(out);
    }
    for p in primes_up_to(window.hi.floor() as u64) {
        if (p as f64) < window.lo || curve.n0() % p == 0 || curve.discriminant() % p as i128 == 0 {
            continue;
        }
        out.push((p, (curve.tamagawa_root_count(p)? as f64).ln()));
    }
    Ok(out)
}

/// `C(d) = sum_p C_p(d)` with `C_p(d) = p/(p+1) log c(p)` if `p | d`, else `-log c(p)/(p+1)`.
pub fn tamagawa_statistic(terms: &[(u64, f64)], d: i64) -> f64 {
    terms
        .iter()
        .map(|&(p, lc)| {
            let pf = p as f64;
            if d.unsigned_abs() % p == 0 {
                pf / (pf + 1.0) * lc
            } else {
                -lc / (pf + 1.0)
            }
        })
        .sum()
}

/// `sum (P(d) - C(d))^k Phi / (count (sigma^2 log log X)^{k/2})` against `M_k`.
#[allow(clippy::too_many_arguments)]
pub fn pc_moments(
    curve: &CurveModel,
    table: &CoefficientTable,
    class: &TwistClass,
    cutoff: &SmoothCutoff,
    k: u32,
    x: u64,
    window: Option<TamagawaWindow>,
) -> Result<MomentReport> {
    let start = Instant::now();
    if k > 6 {
        return Err(Error::Precondition(format!("k = {k} exceeds 6")));
    }
    if x < 16 {
        return Err(Error::Precondition(format!(
            "X must be at least 16, got {x}"
        )));
    }
    let xf = x as f64;
    let sigma2 = curve.classify_splitting_field()?.sigma2;
    let window = window.unwrap_or_else(|| TamagawaWindow::for_x(xf));
    let terms = tamagawa_terms(curve, window)?;
    let primes = prime_set(xf, class.n0);
    table.ensure_covers(primes.last().copied().unwrap_or(1))?;
    let members = weighted_discriminants(class, x, cutoff, false);
    let (count, sum) = members
        .par_iter()
        .map(|&(d, w)| {
            let y = prime_polynomial(table, &primes, d) - tamagawa_statistic(&terms, d);
            (w, y.powi(k as i32) * w)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let normalized = sum / (count * (sigma2 * xf.ln().ln()).powf(k as f64 / 2.0));
    Ok(MomentReport::new(
        format!("pc_moment k={k}"),
        xf,
        k as f64,
        normalized,
        gaussian_moment(k),
        start.elapsed().as_secs_f64(),
    )
    .with_detail("window_lo", window.lo)
    .with_detail("window_hi", window.hi)
    .with_detail("window_primes", terms.len() as f64)
    .with_detail("p_primes", primes.len() as f64)
    .with_detail("sigma2", sigma2))
}
