//! Truncated exponentials, prime partitions and the short Dirichlet
//! polynomials built on them, with the key inequality.

use std::collections::BTreeMap;
use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, gcd, primes_up_to};
use crate::curve::CoefficientTable;
use crate::discriminants::kronecker;
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// `E_l(x) = sum_{j <= l} x^j / j!`, summed with compensation.
pub fn truncated_exp(l: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = CompensatedSum::new();
    sum.add(term);
    for j in 1..=l {
        term *= x / j as f64;
        sum.add(term);
    }
    sum.value()
}

/// Ordered disjoint prime sets `P_1, ..., P_R` with even lengths `l_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimePartition {
    pub x: f64,
    pub c: f64,
    pub threshold: u32,
    pub lengths: Vec<u32>,
    pub sets: Vec<Vec<u64>>,
    /// Whether the construction fell back to a single set.
    pub fallback: bool,
    /// `l_j > l_{j+1}^2` for consecutive lengths (diagnostic only).
    pub squares_condition: bool,
}

fn length_sequence(x: f64, c: f64, threshold: u32) -> (Vec<u32>, bool) {
    let even_ceil = |v: f64| 2 * v.ceil().max(1.0) as u32;
    let mut seq = vec![even_ceil(c * x.ln().ln())];
    loop {
        let last = *seq.last().expect("non-empty");
        let next = even_ceil(c * (last as f64).ln());
        if next >= last || next <= threshold {
            let stalled = next >= last && seq.len() == 1 && last > threshold;
            return (seq, stalled);
        }
        seq.push(next);
    }
}

impl PrimePartition {
    /// `l_1 = 2 ceil(c log log X)`, `l_{j+1} = 2 ceil(c log l_j)`; `R` is the
    /// last index with `l_R > threshold`. `P_1` holds the primes up to
    /// `X^{1/l_1^2}` and `P_j` those in `(X^{1/l_{j-1}^2}, X^{1/l_j^2}]`,
    /// all coprime to `N0`. Falls back to `R = 1` when no length exceeds
    /// the threshold or the sequence stops decreasing above it.
    pub fn build(x: f64, c: f64, threshold: u32, n0: u64) -> Result<Self> {
        if !(x >= 16.0) {
            return Err(Error::Precondition(format!(
                "partition needs X >= 16, got {x}"
            )));
        }
        if !(c > 0.0) {
            return Err(Error::Precondition(format!(
                "partition constant must be positive, got {c}"
            )));
        }
        let (seq, stalled) = length_sequence(x, c, threshold);
        let usable: Vec<u32> = seq.iter().copied().take_while(|&l| l > threshold).collect();
        let (lengths, fallback) = if usable.is_empty() || stalled {
            (vec![seq[0]], true)
        } else {
            (usable, false)
        };
        let bounds: Vec<f64> = lengths
            .iter()
            .map(|&l| x.powf(1.0 / (l as f64 * l as f64)))
            .collect();
        Ok(Self::from_bounds(
            x, c, threshold, lengths, &bounds, n0, fallback,
        ))
    }

    /// Partition with explicit upper bounds: `P_j` = primes in `(bound_{j-1}, bound_j]`.
    pub fn from_cuts(x: f64, lengths: Vec<u32>, bounds: &[f64], n0: u64) -> Result<Self> {
        if lengths.len() != bounds.len() || lengths.iter().any(|&l| l == 0 || l % 2 == 1) {
            return Err(Error::Precondition(
                "lengths must be positive even and match the cut list".into(),
            ));
        }
        Ok(Self::from_bounds(x, 0.0, 0, lengths, bounds, n0, false))
    }

    fn from_bounds(
        x: f64,
        c: f64,
        threshold: u32,
        lengths: Vec<u32>,
        bounds: &[f64],
        n0: u64,
        fallback: bool,
    ) -> Self {
        let top = bounds.iter().copied().fold(0.0, f64::max).floor() as u64;
        let primes = primes_up_to(top);
        let mut sets = Vec::with_capacity(bounds.len());
        let mut lower = 0.0;
        for &b in bounds {
            sets.push(
                primes
                    .iter()
                    .copied()
                    .filter(|&p| (p as f64) > lower && (p as f64) <= b && gcd(p, n0) == 1)
                    .collect(),
            );
            lower = lower.max(b);
        }
        let squares_condition = lengths
            .windows(2)
            .all(|w| (w[0] as u64) > (w[1] as u64).pow(2));
        Self {
            x,
            c,
            threshold,
            lengths,
            sets,
            fallback,
            squares_condition,
        }
    }

    pub fn r(&self) -> usize {
        self.lengths.len()
    }
}

/// `sum_{p in P} a(p) p^{-1/2} chi_d(p)`.
pub fn prime_sum(table: &CoefficientTable, primes: &[u64], d: i64) -> f64 {
    primes
        .iter()
        .map(|&p| table.a(p) / (p as f64).sqrt() * kronecker(d, p) as f64)
        .sum()
}

/// `P_j(d)` for every set of the partition.
pub fn prime_sums(table: &CoefficientTable, partition: &PrimePartition, d: i64) -> Vec<f64> {
    partition
        .sets
        .iter()
        .map(|s| prime_sum(table, s, d))
        .collect()
}

fn check_k(k: f64) -> Result<()> {
    if (0.0..=1.0).contains(&k) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "k must lie in [0, 1], got {k}"
        )))
    }
}

/// `A_j(d) = E_{l_j}((k - 1) P_j(d))`.
pub fn a_term(l: u32, p_j: f64, k: f64) -> Result<f64> {
    check_k(k)?;
    Ok(truncated_exp(l, (k - 1.0) * p_j))
}

/// `B_j(d) = E_{l_j}(k P_j(d))`.
pub fn b_term(l: u32, p_j: f64, k: f64) -> Result<f64> {
    check_k(k)?;
    Ok(truncated_exp(l, k * p_j))
}

/// The right-hand side of the key inequality for `y^k`.
pub fn key_inequality_rhs(y: f64, xs: &[f64], ls: &[u32], k: f64) -> Result<f64> {
    check_k(k)?;
    if xs.len() != ls.len() {
        return Err(Error::Precondition(
            "xs and ls must have equal length".into(),
        ));
    }
    if let Some(&l) = ls.iter().find(|&&l| l == 0 || l % 2 == 1) {
        return Err(Error::Precondition(format!(
            "lengths must be positive and even, got {l}"
        )));
    }
    let c = (ls.iter().map(|&l| (-(l as f64)).exp()).sum::<f64>() / 16.0).exp();
    let a: Vec<f64> = xs
        .iter()
        .zip(ls)
        .map(|(&x, &l)| truncated_exp(l, (k - 1.0) * x))
        .collect();
    let b: Vec<f64> = xs
        .iter()
        .zip(ls)
        .map(|(&x, &l)| truncated_exp(l, k * x))
        .collect();
    let head = c * k * y * a.iter().product::<f64>() + c * (1.0 - k) * b.iter().product::<f64>();
    let mut tail = CompensatedSum::new();
    for r in 0..xs.len() {
        let pa: f64 = a[..r].iter().product();
        let pb: f64 = b[..r].iter().product();
        let l = ls[r];
        let bump = (E * E * xs[r] / l as f64).powi(l as i32);
        tail.add((c * k * y * pa + c * (1.0 - k) * pb) * bump);
    }
    Ok(head + tail.value())
}

/// `RHS - y^k` for the key inequality; non-negative in exact arithmetic.
pub fn key_inequality_gap(y: f64, xs: &[f64], ls: &[u32], k: f64) -> Result<f64> {
    if y < 0.0 {
        return Err(Error::Precondition(format!(
            "y must be non-negative, got {y}"
        )));
    }
    Ok(key_inequality_rhs(y, xs, ls, k)? - y.powf(k))
}

/// One observed inequality: `slack = (lhs - rhs) / max(1, |rhs|)`, which
/// should be `>= -tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub slack: f64,
}

fn normalized(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / rhs.abs().max(1.0)
}

/// Randomized checks of the truncated exponential: positivity,
/// convexity, `E_l(x) >= e^x` for `x <= 0` and `e^x <= (1 + e^{-l}/16) E_l(x)`
/// for `x <= l / e^2`. Returns the worst slack per property.
pub fn truncated_exp_suite(trials: usize, seed: u64) -> Vec<InequalityCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [f64::INFINITY; 4];
    for _ in 0..trials {
        let l = 2 * rng.gen_range(0..=20u32);
        let x: f64 = rng.gen_range(-40.0..40.0);
        let ex = truncated_exp(l, x);
        worst[0] = worst[0].min(if ex > 0.0 {
            ex / ex.abs().max(1.0)
        } else {
            -1.0
        });
        let h = 0.05;
        let second = truncated_exp(l, x - h) + truncated_exp(l, x + h) - 2.0 * ex;
        worst[1] = worst[1].min(normalized(second, 0.0) / ex.abs().max(1.0));
        let xn = -x.abs();
        worst[2] = worst[2].min(normalized(truncated_exp(l, xn), xn.exp()));
        if l > 0 {
            let cap = l as f64 / (E * E);
            let xc = rng.gen_range(-40.0..=cap);
            let lhs = (1.0 + (-(l as f64)).exp() / 16.0) * truncated_exp(l, xc);
            worst[3] = worst[3].min(normalized(lhs, xc.exp()));
        }
    }
    [
        "positivity",
        "convexity",
        "dominates exp on x <= 0",
        "exp bound below l/e^2",
    ]
    .iter()
    .zip(worst)
    .map(|(n, s)| InequalityCheck {
        name: n.to_string(),
        slack: s,
    })
    .collect()
}

/// Randomized key-inequality instances: `y in [0, 1000]`, `x_j in [-20, 20]`,
/// `R <= 4`, `l_j in {2, ..., 12}` even, `k in [0, 1]`. Returns the worst slack.
pub fn key_inequality_suite(trials: usize, seed: u64) -> InequalityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for i in 0..trials {
        let r = rng.gen_range(1..=4usize);
        let ls: Vec<u32> = (0..r).map(|_| 2 * rng.gen_range(1..=6u32)).collect();
        let xs: Vec<f64> = (0..r).map(|_| rng.gen_range(-20.0..20.0)).collect();
        // include the boundary cases y = 0 and k in {0, 1}
        let y = if i % 50 == 0 {
            0.0
        } else {
            rng.gen_range(0.0..1000.0)
        };
        let k = match i % 97 {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..=1.0),
        };
        let rhs = key_inequality_rhs(y, &xs, &ls, k).expect("valid instance");
        worst = worst.min(normalized(rhs, y.powf(k)));
    }
    InequalityCheck {
        name: "key inequality".into(),
        slack: worst,
    }
}

/// `w(n) = prod alpha_p!` for `n = prod p^alpha_p`.
pub fn w(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .map(|(_, a)| (1..=a as u64).product::<u64>())
        .product()
}

/// Number of prime factors with multiplicity.
pub fn big_omega(n: u64) -> u32 {
    factorize(n).into_iter().map(|(_, a)| a).sum()
}

/// Completely multiplicative `a~(n)` with `a~(p) = a(p)`.
pub fn a_tilde(table: &CoefficientTable, n: u64) -> f64 {
    factorize(n)
        .into_iter()
        .map(|(p, e)| table.a(p).powi(e as i32))
        .product()
}

fn supported_on(n: u64, set: &[u64]) -> bool {
    factorize(n)
        .into_iter()
        .all(|(p, _)| set.binary_search(&p).is_ok())
}

/// `b_j(n)`: `n` has at most `l_j` prime factors, all in `P_j`.
pub fn b_flag(n: u64, set: &[u64], l: u32) -> bool {
    big_omega(n) <= l && supported_on(n, set)
}

/// `p_j(n)`: `n` has exactly `l_j` prime factors, all in `P_j`.
pub fn p_flag(n: u64, set: &[u64], l: u32) -> bool {
    big_omega(n) == l && supported_on(n, set)
}

/// Formal Dirichlet polynomial `n -> coefficient` with the character left symbolic.
pub type DirichletPoly = BTreeMap<u64, f64>;

fn multiply(a: &DirichletPoly, b: &DirichletPoly) -> DirichletPoly {
    let mut out = DirichletPoly::new();
    for (&m, &x) in a {
        for (&n, &y) in b {
            *out.entry(m * n).or_insert(0.0) += x * y;
        }
    }
    out
}

/// `E_l(t * P)` expanded, where `P = sum_{p in set} a(p) p^{-1/2} [p]`:
/// the coefficient of `n` is `t^Omega(n) a~(n) / (sqrt(n) w(n))` when `b(n) = 1`.
pub fn expand_truncated_exp(
    table: &CoefficientTable,
    set: &[u64],
    l: u32,
    t: f64,
) -> DirichletPoly {
    let mut out = DirichletPoly::new();
    let mut frontier: Vec<(u64, usize)> = vec![(1, 0)];
    while let Some((n, start)) = frontier.pop() {
        out.insert(
            n,
            t.powi(big_omega(n) as i32) * a_tilde(table, n) / ((n as f64).sqrt() * w(n) as f64),
        );
        if big_omega(n) < l {
            for (i, &p) in set.iter().enumerate().skip(start) {
                frontier.push((n * p, i));
            }
        }
    }
    out
}

/// `P^l` expanded: coefficient `l! a~(n) / (sqrt(n) w(n))` when `p(n) = 1`.
pub fn expand_power(table: &CoefficientTable, set: &[u64], l: u32) -> DirichletPoly {
    let mut poly = DirichletPoly::from([(1, 1.0)]);
    let base: DirichletPoly = set
        .iter()
        .map(|&p| (p, table.a(p) / (p as f64).sqrt()))
        .collect();
    for _ in 0..l {
        poly = multiply(&poly, &base);
    }
    poly
}

/// Evaluates a formal polynomial at `chi_d`.
pub fn evaluate(poly: &DirichletPoly, d: i64) -> f64 {
    poly.iter().map(|(&n, &c)| c * kronecker(d, n) as f64).sum()
}

/// `prod_j B_j` and, for each `r`, `prod_{j <= r} A_j * P_{r+1}^{l_{r+1}}`,
/// expanded; returns the largest `n` in each support with its bound `X^{sum 1/l_j}`.
pub fn dirichlet_lengths(
    table: &CoefficientTable,
    partition: &PrimePartition,
    k: f64,
) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut b_prod = DirichletPoly::from([(1, 1.0)]);
    let mut a_prod = DirichletPoly::from([(1, 1.0)]);
    let mut exponent = 0.0;
    for (j, set) in partition.sets.iter().enumerate() {
        let l = partition.lengths[j];
        let with_power = multiply(&a_prod, &expand_power(table, set, l));
        exponent += 1.0 / l as f64;
        let bound = partition.x.powf(exponent);
        out.push((with_power.keys().copied().max().unwrap_or(1), bound));
        b_prod = multiply(&b_prod, &expand_truncated_exp(table, set, l, k));
        a_prod = multiply(&a_prod, &expand_truncated_exp(table, set, l, k - 1.0));
    }
    out.push((
        b_prod.keys().copied().max().unwrap_or(1),
        partition.x.powf(exponent),
    ));
    out
}
