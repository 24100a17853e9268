//! Frobenius traces of `y^2 = x^3 + a2 x^2 + a1 x + a0` over prime fields.
//!
//! Two independent routes are provided: a full residue scan, which sums the
//! quadratic character of `f(x)` over every residue, and a baby-step
//! giant-step search in the Hasse interval driven by random points on the
//! curve and on its quadratic twist. The scan is the reference; the search is
//! what builds large tables.

use std::collections::HashMap;

use crate::arith::{mul_mod, pow_mod};

/// Below this bound the scan is cheaper than the group search.
const SCAN_CUTOFF: u64 = 1_000;
const MAX_SEARCH_POINTS: usize = 48;

/// Cubic reduced modulo an odd prime.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CubicModP {
    pub p: u64,
    pub a2: u64,
    pub a1: u64,
    pub a0: u64,
}

impl CubicModP {
    pub fn new(a2: i64, a1: i64, a0: i64, p: u64) -> Self {
        let r = |c: i64| c.rem_euclid(p as i64) as u64;
        Self {
            p,
            a2: r(a2),
            a1: r(a1),
            a0: r(a0),
        }
    }

    pub fn eval(&self, x: u64) -> u64 {
        let p = self.p;
        let mut v = (x + self.a2) % p;
        v = (mul_mod(v, x, p) + self.a1) % p;
        (mul_mod(v, x, p) + self.a0) % p
    }

    /// Quadratic twist by `g`: `y^2 = x^3 + a2 g x^2 + a1 g^2 x + a0 g^3`.
    fn twist(&self, g: u64) -> Self {
        let p = self.p;
        let g2 = mul_mod(g, g, p);
        Self {
            p,
            a2: mul_mod(self.a2, g, p),
            a1: mul_mod(self.a1, g2, p),
            a0: mul_mod(self.a0, mul_mod(g2, g, p), p),
        }
    }
}

/// `A(p) = -sum_x (f(x)/p)`, by a full scan of residues with a table of squares.
pub(crate) fn trace_by_scan(f: &CubicModP) -> i64 {
    let p = f.p as usize;
    let mut is_square = vec![false; p];
    for x in 1..p {
        is_square[(x * x) % p] = true;
    }
    let mut sum = 0i64;
    for x in 0..f.p {
        let v = f.eval(x) as usize;
        if v != 0 {
            sum += if is_square[v] { 1 } else { -1 };
        }
    }
    -sum
}

/// Number of roots of the cubic in `F_p`, by scan. Test oracle for the gcd route.
#[cfg(test)]
pub(crate) fn root_count_by_scan(f: &CubicModP) -> u32 {
    (0..f.p).filter(|&x| f.eval(x) == 0).count() as u32
}

type Point = Option<(u64, u64)>;

fn inv(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (a as i64, p as i64);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1);
    s0.rem_euclid(p as i64) as u64
}

struct Group {
    f: CubicModP,
}

impl Group {
    fn neg(&self, pt: Point) -> Point {
        pt.map(|(x, y)| (x, (self.f.p - y) % self.f.p))
    }

    fn add(&self, a: Point, b: Point) -> Point {
        let p = self.f.p;
        let (x1, y1) = match a {
            None => return b,
            Some(v) => v,
        };
        let (x2, y2) = match b {
            None => return a,
            Some(v) => v,
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % p == 0 {
                return None;
            }
            // (3x^2 + 2 a2 x + a1) / 2y
            let num =
                (mul_mod(3 * x1 % p, x1, p) + mul_mod(2 * self.f.a2 % p, x1, p) + self.f.a1) % p;
            mul_mod(num, inv(2 * y1 % p, p), p)
        } else {
            let num = (y2 + p - y1) % p;
            mul_mod(num, inv((x2 + p - x1) % p, p), p)
        };
        let x3 = (mul_mod(lambda, lambda, p) + 3 * p - self.f.a2 - x1 - x2) % p;
        let y3 = (mul_mod(lambda, (x1 + p - x3) % p, p) + p - y1) % p;
        Some((x3, y3))
    }

    fn mul(&self, pt: Point, k: i64) -> Point {
        let mut base = if k < 0 { self.neg(pt) } else { pt };
        let mut k = k.unsigned_abs();
        let mut acc = None;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    /// All `s` in `[-t_max, t_max]` with `(p+1) P = s P`, or `None` when `P`
    /// has order so small that it carries no information.
    fn hasse_matches(&self, pt: Point, t_max: i64) -> Option<Vec<i64>> {
        let p = self.f.p as i64;
        let m = (((2 * t_max + 1) as f64).sqrt().ceil() as i64).max(1);
        let mut baby: HashMap<u64, Vec<(i64, u64)>> = HashMap::with_capacity(m as usize + 1);
        let mut cur = pt;
        for j in 1..=m {
            match cur {
                None => return None,
                Some((x, y)) => baby.entry(x).or_default().push((j, y)),
            }
            cur = self.add(cur, pt);
        }
        let q = self.mul(pt, p + 1);
        let step = self.mul(pt, 2 * m + 1);
        let neg_step = self.neg(step);
        let mut centre = -t_max + m;
        let mut r = self.add(q, self.neg(self.mul(pt, centre)));
        let mut out = Vec::new();
        while centre - m <= t_max {
            match r {
                None => out.push(centre),
                Some((x, y)) => {
                    if let Some(hits) = baby.get(&x) {
                        for &(j, yj) in hits {
                            if yj == y {
                                out.push(centre + j);
                            }
                            if (yj + y) % self.f.p == 0 {
                                out.push(centre - j);
                            }
                        }
                    }
                }
            }
            r = self.add(r, neg_step);
            centre += 2 * m + 1;
        }
        out.retain(|s| s.abs() <= t_max);
        out.sort_unstable();
        out.dedup();
        Some(out)
    }
}

/// Square root modulo an odd prime (Tonelli-Shanks). `a` must be a square.
fn sqrt_mod(a: u64, p: u64) -> u64 {
    if a == 0 {
        return 0;
    }
    if p % 4 == 3 {
        return pow_mod(a, (p + 1) / 4, p);
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    r
}

fn is_qr(a: u64, p: u64) -> bool {
    a != 0 && pow_mod(a, (p - 1) / 2, p) == 1
}

/// Trace of Frobenius by group search, falling back to the scan for small
/// primes or if the search fails to pin down a unique value.
pub(crate) fn trace_by_search(f: &CubicModP) -> i64 {
    let p = f.p;
    if p < SCAN_CUTOFF {
        return trace_by_scan(f);
    }
    let t_max = (2.0 * (p as f64).sqrt()).floor() as i64;
    let mut nonresidue = 2;
    while is_qr(nonresidue, p) {
        nonresidue += 1;
    }
    let curves = [
        Group { f: *f },
        Group {
            f: f.twist(nonresidue),
        },
    ];
    let mut candidates: Option<Vec<i64>> = None;
    let mut seed = p.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    for attempt in 0..MAX_SEARCH_POINTS {
        let which = attempt % 2;
        let g = &curves[which];
        let pt = loop {
            seed = seed
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            let x = (seed >> 17) % p;
            let v = g.f.eval(x);
            if is_qr(v, p) {
                break Some((x, sqrt_mod(v, p)));
            }
        };
        let Some(found) = g.hasse_matches(pt, t_max) else {
            continue;
        };
        // On the twist the group order is p + 1 + t.
        let mut found: Vec<i64> = if which == 0 {
            found
        } else {
            found.into_iter().map(|s| -s).collect()
        };
        found.sort_unstable();
        let next: Vec<i64> = match candidates {
            None => found,
            Some(prev) => prev
                .into_iter()
                .filter(|t| found.binary_search(t).is_ok())
                .collect(),
        };
        if next.len() == 1 {
            return next[0];
        }
        candidates = Some(next);
    }
    trace_by_scan(f)
}

/// Roots of the cubic in `F_p`, as the degree of `gcd(f, x^p - x)`.
/// Valid when the cubic is squarefree modulo `p`.
pub(crate) fn root_count(f: &CubicModP) -> u32 {
    let p = f.p;
    // Polynomials of degree <= 2 as [c0, c1, c2] modulo the monic cubic.
    let reduce_mul = |a: [u64; 3], b: [u64; 3]| -> [u64; 3] {
        let mut prod = [0u64; 5];
        for i in 0..3 {
            for j in 0..3 {
                prod[i + j] = (prod[i + j] + mul_mod(a[i], b[j], p)) % p;
            }
        }
        // x^3 = -(a2 x^2 + a1 x + a0)
        for deg in (3..5).rev() {
            let c = prod[deg];
            if c == 0 {
                continue;
            }
            prod[deg] = 0;
            prod[deg - 1] = (prod[deg - 1] + p - mul_mod(c, f.a2, p)) % p;
            prod[deg - 2] = (prod[deg - 2] + p - mul_mod(c, f.a1, p)) % p;
            prod[deg - 3] = (prod[deg - 3] + p - mul_mod(c, f.a0, p)) % p;
        }
        [prod[0], prod[1], prod[2]]
    };
    let mut result = [1u64, 0, 0];
    let mut base = [0u64, 1, 0];
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            result = reduce_mul(result, base);
        }
        base = reduce_mul(base, base);
        e >>= 1;
    }
    // h = x^p - x mod f
    result[1] = (result[1] + p - 1) % p;
    let cubic = vec![f.a0, f.a1, f.a2, 1];
    poly_gcd_degree(cubic, result.to_vec(), p)
}

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> u32 {
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        // a mod b
        let lead_inv = inv(*b.last().unwrap(), p);
        while a.len() >= b.len() {
            let c = mul_mod(*a.last().unwrap(), lead_inv, p);
            let shift = a.len() - b.len();
            for (i, &bi) in b.iter().enumerate() {
                a[shift + i] = (a[shift + i] + p - mul_mod(c, bi, p)) % p;
            }
            trim(&mut a);
            if a.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    (a.len() as u32).saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::primes_up_to;

    #[test]
    fn search_matches_scan() {
        let curves = [
            (0, -1, 0),
            (0, 0, -2),
            (-4, -160, -1264),
            (1, -3, 7),
            (0, 0, 1),
        ];
        for p in primes_up_to(30_000)
            .into_iter()
            .filter(|&p| p > 3 && p % 97 < 40)
        {
            for &(a2, a1, a0) in &curves {
                let f = CubicModP::new(a2, a1, a0, p);
                let disc = {
                    let (b, c, d) = (a2 as i128, a1 as i128, a0 as i128);
                    b * b * c * c - 4 * c * c * c - 4 * b * b * b * d - 27 * d * d + 18 * b * c * d
                };
                if disc % p as i128 == 0 {
                    continue;
                }
                let t = trace_by_search(&f);
                assert_eq!(t, trace_by_scan(&f), "curve {:?} p={}", (a2, a1, a0), p);
            }
        }
    }

    #[test]
    fn gcd_root_count_matches_scan() {
        for p in primes_up_to(2_000).into_iter().skip(1) {
            for &(a2, a1, a0) in &[(0, -1, 0), (0, 0, -2), (0, 0, -1), (2, -5, 3)] {
                let f = CubicModP::new(a2, a1, a0, p);
                let scan = root_count_by_scan(&f);
                // gcd route counts distinct roots; skip primes with repeated roots
                let b = (a2 as i128, a1 as i128, a0 as i128);
                let disc =
                    b.0 * b.0 * b.1 * b.1 - 4 * b.1.pow(3) - 4 * b.0.pow(3) * b.2 - 27 * b.2 * b.2
                        + 18 * b.0 * b.1 * b.2;
                if disc % p as i128 == 0 {
                    continue;
                }
                assert_eq!(root_count(&f), scan, "p={p}");
            }
        }
    }

    #[test]
    fn sqrt_mod_roundtrip() {
        for p in [13u64, 17, 41, 97, 1_000_003] {
            for a in 1..200 {
                let a = a % p;
                if is_qr(a, p) {
                    let r = sqrt_mod(a, p);
                    assert_eq!(mul_mod(r, r, p), a);
                }
            }
        }
    }
}
