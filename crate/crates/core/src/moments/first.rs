use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::charsum::check_uv;
use super::MomentReport;
use crate::arith::{factorize, gcd};
use crate::curve::{sym2_local_factor_inverse, symmetric_square_l, CoefficientTable, CurveModel};
use crate::discriminants::kronecker;
use crate::error::Result;
use crate::lvalue::{LValueCache, LValueEngine, SmoothCutoff};

/// Squarefree part `u1` of `u = u1 u2^2`.
pub fn squarefree_part(u: u64) -> u64 {
    factorize(u)
        .into_iter()
        .filter(|&(_, e)| e % 2 == 1)
        .map(|(p, _)| p)
        .product()
}

/// Which local factor of `G(1; u, v)` applies at `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GLocalCase {
    Level,
    DividesU1,
    DividesUv,
    Generic,
}

pub fn g_local_case(n0: u64, u: u64, v: u64, p: u64) -> GLocalCase {
    if n0 % p == 0 {
        GLocalCase::Level
    } else if squarefree_part(u) % p == 0 {
        GLocalCase::DividesU1
    } else if (u * v) % p == 0 {
        GLocalCase::DividesUv
    } else {
        GLocalCase::Generic
    }
}

/// `G_p(1; u, v)` for normalized `a_p = a(p)`.
pub fn g_local(curve: &CurveModel, case: GLocalCase, p: u64, a_p: f64) -> f64 {
    let x = 1.0 / p as f64;
    match case {
        GLocalCase::Level => sym2_local_factor_inverse(curve, a_p, p, x),
        GLocalCase::DividesU1 => (1.0 - x) * (1.0 - x),
        GLocalCase::DividesUv => (1.0 - x) * (1.0 - x * x),
        // (1 - alpha^2 x)(1 - beta^2 x) = 1 - (a^2 - 2) x + x^2
        GLocalCase::Generic => {
            (1.0 - x) * (1.0 - x) * (1.0 + x * (1.0 - (a_p * a_p - 2.0) * x + x * x) + x)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GValue {
    pub value: f64,
    pub prime_cutoff: u64,
    /// Bound on `|log|` of the omitted factors, from `|G_p - 1| <= 5.5 / p^2`.
    pub tail_estimate: f64,
}

/// `G(1; u, v) = prod_p G_p(1; u, v)` over `p <= prime_cutoff`.
pub fn g_euler(
    curve: &CurveModel,
    table: &CoefficientTable,
    u: u64,
    v: u64,
    prime_cutoff: u64,
) -> Result<GValue> {
    let n0 = curve.n0();
    check_uv(n0, u, v)?;
    table.ensure_covers(prime_cutoff.max(2))?;
    let mut log_sum = 0.0;
    for &p in table.primes().iter().take_while(|&&p| p <= prime_cutoff) {
        log_sum += g_local(curve, g_local_case(n0, u, v, p), p, table.a(p)).ln();
    }
    // primes dividing uv beyond the cutoff still carry their factor
    for (p, _) in factorize(u * v) {
        if p > prime_cutoff {
            let generic = g_local(
                curve,
                GLocalCase::Generic,
                p,
                curve.trace(p)? as f64 / (p as f64).sqrt(),
            );
            log_sum += (g_local(curve, g_local_case(n0, u, v, p), p, 0.0) / generic).ln();
        }
    }
    let pc = prime_cutoff.max(2) as f64;
    Ok(GValue {
        value: log_sum.exp(),
        prime_cutoff,
        tail_estimate: 5.5 / (pc * pc.ln()),
    })
}

/// Settings shared by first-moment runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstMomentSettings {
    /// Euler-product cutoff for `L(1, sym^2 E)` and `G`.
    pub euler_cutoff: u64,
}

impl Default for FirstMomentSettings {
    fn default() -> Self {
        Self {
            euler_cutoff: 1_000_000,
        }
    }
}

/// `2 X a(u1) / (v sqrt(u1) N0) Phi_check(0) L_a(1/2) L(1, sym^2 E) G(1; u, v)`.
pub fn first_moment_main_term(
    engine: &LValueEngine,
    cutoff: &SmoothCutoff,
    u: u64,
    v: u64,
    x: f64,
    settings: &FirstMomentSettings,
) -> Result<f64> {
    let curve = engine.curve();
    let table = engine.table();
    let u1 = squarefree_part(u);
    let g = g_euler(curve, table, u, v, settings.euler_cutoff)?;
    let sym2 = symmetric_square_l(curve, table, settings.euler_cutoff)?;
    let a_u1 = if u1 <= table.n_max() {
        table.a(u1)
    } else {
        factorize(u1)
            .into_iter()
            .map(|(p, _)| curve.trace(p).map(|t| t as f64 / (p as f64).sqrt()))
            .product::<Result<f64>>()?
    };
    Ok(
        2.0 * x * a_u1 / (v as f64 * (u1 as f64).sqrt() * curve.n0() as f64)
            * cutoff.mellin_at_zero()
            * engine.kernel().l_a_half()
            * sym2
            * g.value,
    )
}

/// `sum_{d in class, v | d} L(1/2, E_d) chi_d(u) Phi(kappa d / X)` against its main term.
pub fn first_moment(
    engine: &LValueEngine,
    cutoff: &SmoothCutoff,
    u: u64,
    v: u64,
    x: u64,
    settings: &FirstMomentSettings,
    cache: Option<&LValueCache>,
) -> Result<MomentReport> {
    let start = Instant::now();
    check_uv(engine.curve().n0(), u, v)?;
    let values = engine.batch_central_values(x, cutoff, false, cache)?;
    let mut empirical = 0.0;
    let mut count = 0usize;
    for w in values.iter().filter(|w| w.d.unsigned_abs() % v == 0) {
        empirical += w.value * kronecker(w.d, u) as f64 * w.weight;
        count += 1;
    }
    let oracle = first_moment_main_term(engine, cutoff, u, v, x as f64, settings)?;
    Ok(MomentReport::new(
        format!("first_moment u={u} v={v}"),
        x as f64,
        1.0,
        empirical,
        oracle,
        start.elapsed().as_secs_f64(),
    )
    .with_detail("u", u as f64)
    .with_detail("v", v as f64)
    .with_detail("sample", count as f64)
    .with_detail("l_a_half", engine.kernel().l_a_half()))
}

/// `G(1; u, 1) G(1; 1, v) / G(1; 1, 1) / G(1; u, v) - 1`.
pub fn g_factorization_defect(
    curve: &CurveModel,
    table: &CoefficientTable,
    u: u64,
    v: u64,
    cutoff: u64,
) -> Result<f64> {
    let guv = g_euler(curve, table, u, v, cutoff)?.value;
    let gu = g_euler(curve, table, u, 1, cutoff)?.value;
    let gv = g_euler(curve, table, 1, v, cutoff)?.value;
    let g1 = g_euler(curve, table, 1, 1, cutoff)?.value;
    Ok(gu * gv / g1 / guv - 1.0)
}

/// Coprime pairs `(u, v)` with `v` squarefree, both coprime to `N0`, drawn in order.
pub fn coprime_pairs(n0: u64, count: usize) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    'outer: for u in 1u64.. {
        for v in 1..=u + 2 {
            if out.len() == count {
                break 'outer;
            }
            if gcd(u, v) == 1 && gcd(u * v, n0) == 1 && crate::arith::is_squarefree(v) && u * v > 1
            {
                out.push((u, v));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Normalized `a(p^k)` for `k = 0..=k_max` at a good prime.
    fn prime_power_coeffs(a_p: f64, k_max: usize) -> Vec<f64> {
        let mut out = vec![1.0, a_p];
        for k in 2..=k_max {
            out.push(a_p * out[k - 1] - out[k - 2]);
        }
        out
    }

    /// Local factor at `p` of
    /// `prod_{p not dividing N0} (1 - p^-2) sum_{(n, N0) = 1, nu = square} a(n) n^{-1/2} prod_{p | uvn} (1 + 1/p)^{-1}`
    /// divided by `a(p^{ord_p u1}) / p^{ord_p u1 / 2}`.
    fn local_series(n0: u64, u: u64, v: u64, p: u64, a_p: f64) -> f64 {
        if n0 % p == 0 {
            return 1.0;
        }
        let pf = p as f64;
        let coeffs = prime_power_coeffs(a_p, 400);
        let odd = squarefree_part(u) % p == 0;
        let in_uv = (u * v) % p == 0;
        let mut acc = 0.0;
        for (k, &c) in coeffs.iter().enumerate() {
            if (k % 2 == 1) != odd {
                continue;
            }
            let sigma = if in_uv || k > 0 { pf / (pf + 1.0) } else { 1.0 };
            acc += c / pf.powf(k as f64 / 2.0) * sigma;
        }
        let norm = if odd { a_p / pf.sqrt() } else { 1.0 };
        (1.0 - 1.0 / (pf * pf)) * acc / norm
    }

    #[test]
    fn local_factors_match_local_series() {
        let e = CurveModel::conductor_11_curve();
        let t = CoefficientTable::build(&e, 200).unwrap();
        let n0 = e.n0();
        for (u, v) in [(1u64, 1u64), (3, 1), (9, 1), (27, 5), (1, 15), (45, 7)] {
            for &p in t.primes().iter().take_while(|&&p| p < 60) {
                let a_p = t.a(p);
                if squarefree_part(u) % p == 0 && a_p == 0.0 {
                    continue;
                }
                let case = g_local_case(n0, u, v, p);
                let lhs = g_local(&e, case, p, a_p)
                    / sym2_local_factor_inverse(&e, a_p, p, 1.0 / p as f64);
                let rhs = local_series(n0, u, v, p, a_p);
                assert!(
                    (lhs - rhs).abs() < 1e-12,
                    "u={u} v={v} p={p} {case:?}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn generic_factor_with_vanishing_trace() {
        let e = CurveModel::congruent_number_curve();
        for p in [3u64, 7, 11, 19] {
            let x = 1.0 / p as f64;
            let want = (1.0 - x).powi(2) * (1.0 + x * (1.0 + 2.0 * x + x * x) + x);
            assert!((g_local(&e, GLocalCase::Generic, p, 0.0) - want).abs() < 1e-15);
        }
        assert!((g_local(&e, GLocalCase::DividesU1, 3, 0.0) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn g_converges_and_factorizes() {
        let e = CurveModel::congruent_number_curve();
        let t = CoefficientTable::build(&e, 200_000).unwrap();
        let a = g_euler(&e, &t, 1, 1, 100_000).unwrap();
        let b = g_euler(&e, &t, 1, 1, 200_000).unwrap();
        assert!((a.value - b.value).abs() < 1e-3);
        assert!(a.tail_estimate < 1e-5);
        for (u, v) in coprime_pairs(e.n0(), 20) {
            assert!(
                g_factorization_defect(&e, &t, u, v, 10_000).unwrap().abs() < 1e-8,
                "u={u} v={v}"
            );
        }
        // v = 3 scales G by h(3) = G_3(1; 1, 3) / G_3(1; 1, 1)
        let g3 = g_euler(&e, &t, 1, 3, 10_000).unwrap().value;
        let g1 = g_euler(&e, &t, 1, 1, 10_000).unwrap().value;
        let h3 =
            g_local(&e, GLocalCase::DividesUv, 3, 0.0) / g_local(&e, GLocalCase::Generic, 3, 0.0);
        assert!((g3 / g1 - h3).abs() < 1e-12);
        assert!(g_euler(&e, &t, 3, 3, 100).is_err());
        assert!(g_euler(&e, &t, 2, 1, 100).is_err());
    }

    #[test]
    fn pairs_are_admissible() {
        let pairs = coprime_pairs(32, 20);
        assert_eq!(pairs.len(), 20);
        for (u, v) in pairs {
            assert!(check_uv(32, u, v).is_ok());
        }
        assert_eq!(squarefree_part(75), 3);
        assert_eq!(squarefree_part(49), 1);
    }
}
