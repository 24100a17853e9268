//! Quadratic Gauss-type sums `G_k(n)`, `tau_k(n)` and the twisted Poisson
//! summation identity.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{euler_phi, factorize, gcd, inv_mod, jacobi};
use crate::error::{Error, Result};

/// An exact value `coeff * sqrt(radicand)` with squarefree `radicand`.
///
/// Every `G_k(n)` has this shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussExact {
    pub coeff: i64,
    pub radicand: u64,
}

impl GaussExact {
    pub const ONE: Self = Self {
        coeff: 1,
        radicand: 1,
    };
    pub const ZERO: Self = Self {
        coeff: 0,
        radicand: 1,
    };

    pub fn to_f64(self) -> f64 {
        self.coeff as f64 * (self.radicand as f64).sqrt()
    }

    /// Product of values over coprime moduli, whose radicands are coprime.
    pub fn mul(self, other: Self) -> Self {
        if self.coeff == 0 || other.coeff == 0 {
            return Self::ZERO;
        }
        Self {
            coeff: self.coeff * other.coeff,
            radicand: self.radicand * other.radicand,
        }
    }

    /// Whether a floating complex number equals this value: `Re^2` rounds to
    /// `coeff^2 * radicand`, the sign of `Re` matches and `Im` vanishes.
    pub fn matches(self, z: Complex64, tol: f64) -> bool {
        if z.im.abs() > tol {
            return false;
        }
        let sq = (self.coeff as i128).pow(2) * self.radicand as i128;
        let got = (z.re * z.re).round() as i128;
        let sign_ok = match self.coeff.signum() {
            0 => z.re.abs() <= tol,
            s => z.re.signum() as i64 == s,
        };
        got == sq && sign_ok && (z.re - self.to_f64()).abs() <= tol
    }
}

fn check_odd(n: u64) -> Result<()> {
    if n % 2 == 0 || n == 0 {
        Err(Error::EvenModulus(n))
    } else {
        Ok(())
    }
}

/// `e(x) = exp(2 pi i x)` with the argument reduced mod 1.
pub fn e(x: f64) -> Complex64 {
    let t = x - x.floor();
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

fn chi_minus_one(n: u64) -> i8 {
    if n % 4 == 1 {
        1
    } else {
        -1
    }
}

fn prime_power(k: i64, p: u64, beta: u32) -> GaussExact {
    let alpha = if k == 0 {
        u32::MAX
    } else {
        let mut a = 0;
        let mut m = k.unsigned_abs();
        while m % p == 0 {
            m /= p;
            a += 1;
        }
        a
    };
    let p_beta = p.pow(beta);
    if beta <= alpha {
        if beta % 2 == 1 {
            GaussExact::ZERO
        } else {
            GaussExact {
                coeff: euler_phi(p_beta) as i64,
                radicand: 1,
            }
        }
    } else if beta == alpha + 1 {
        let p_alpha = p.pow(alpha) as i64;
        if beta % 2 == 0 {
            GaussExact {
                coeff: -p_alpha,
                radicand: 1,
            }
        } else {
            let unit = k / p_alpha;
            GaussExact {
                coeff: jacobi(unit, p) as i64 * p_alpha,
                radicand: p,
            }
        }
    } else {
        GaussExact::ZERO
    }
}

/// `G_k(n)` in exact form, multiplicatively from the prime-power table.
pub fn gauss_g_exact(k: i64, n: u64) -> Result<GaussExact> {
    check_odd(n)?;
    Ok(factorize(n)
        .into_iter()
        .fold(GaussExact::ONE, |acc, (p, b)| acc.mul(prime_power(k, p, b))))
}

/// `G_k(n)` from the closed form.
pub fn gauss_g_closed(k: i64, n: u64) -> Result<Complex64> {
    Ok(Complex64::new(gauss_g_exact(k, n)?.to_f64(), 0.0))
}

fn g_prefactor(n: u64) -> Complex64 {
    let s = chi_minus_one(n) as f64;
    Complex64::new(0.5, -0.5) + Complex64::new(0.5, 0.5) * s
}

fn tau_prefactor(n: u64) -> Complex64 {
    let s = chi_minus_one(n) as f64;
    Complex64::new(0.5, 0.5) + Complex64::new(0.5, -0.5) * s
}

/// `sum_{a mod n} (a/n) e(ak/n)` by direct summation.
pub fn tau_bruteforce(k: i64, n: u64) -> Result<Complex64> {
    check_odd(n)?;
    let chars: Vec<i8> = (0..n).map(|a| jacobi(a as i64, n)).collect();
    let roots: Vec<Complex64> = (0..n).map(|j| e(j as f64 / n as f64)).collect();
    Ok(character_sum(&chars, &roots, k))
}

fn character_sum(chars: &[i8], roots: &[Complex64], k: i64) -> Complex64 {
    let n = chars.len() as u64;
    let step = k.rem_euclid(n as i64) as u64;
    let mut idx = 0u64;
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in chars {
        match c {
            1 => acc += roots[idx as usize],
            -1 => acc -= roots[idx as usize],
            _ => {}
        }
        idx += step;
        if idx >= n {
            idx -= n;
        }
    }
    acc
}

/// `G_k(n)` by literal summation of its defining display.
pub fn gauss_g_bruteforce(k: i64, n: u64) -> Result<Complex64> {
    Ok(g_prefactor(n) * tau_bruteforce(k, n)?)
}

/// `tau_k(n) = ((1+i)/2 + (-1/n)(1-i)/2) G_k(n)` from the closed form of `G_k`.
pub fn tau(k: i64, n: u64) -> Result<Complex64> {
    Ok(tau_prefactor(n) * gauss_g_closed(k, n)?)
}

/// Brute-force `G_k(n)` for a range of `k` at one modulus, sharing tables.
struct BruteTables {
    n: u64,
    chars: Vec<i8>,
    roots: Vec<Complex64>,
}

impl BruteTables {
    fn new(n: u64) -> Self {
        Self {
            n,
            chars: (0..n).map(|a| jacobi(a as i64, n)).collect(),
            roots: (0..n).map(|j| e(j as f64 / n as f64)).collect(),
        }
    }

    fn from_coprime(m: &BruteTables, n: &BruteTables) -> Self {
        let mn = m.n * n.n;
        Self {
            n: mn,
            chars: (0..mn)
                .map(|a| m.chars[(a % m.n) as usize] * n.chars[(a % n.n) as usize])
                .collect(),
            roots: (0..mn).map(|j| e(j as f64 / mn as f64)).collect(),
        }
    }

    fn g(&self, k: i64) -> Complex64 {
        g_prefactor(self.n) * character_sum(&self.chars, &self.roots, k)
    }
}

/// Closed form vs brute force for odd `n <= n_max`, `|k| <= k_max`, plus
/// the `tau`/`G` relation on the same grid. Returns the mismatches.
pub fn verify_closed_form(n_max: u64, k_max: i64, tol: f64) -> Vec<String> {
    let mut bad = Vec::new();
    for n in (1..=n_max).step_by(2) {
        let t = BruteTables::new(n);
        for k in -k_max..=k_max {
            let exact = gauss_g_exact(k, n).expect("odd modulus");
            let brute_tau = character_sum(&t.chars, &t.roots, k);
            let brute = g_prefactor(n) * brute_tau;
            if !exact.matches(brute, tol) {
                bad.push(format!(
                    "G_{k}({n}): closed {} vs brute {brute}",
                    exact.to_f64()
                ));
            }
            let rel = tau(k, n).expect("odd modulus");
            if (rel - brute_tau).norm() > tol {
                bad.push(format!("tau_{k}({n}): relation {rel} vs brute {brute_tau}"));
            }
        }
    }
    bad
}

/// Brute-force check of `G_k(mn) = G_k(m) G_k(n)` for coprime odd `m < n <= limit`.
pub fn verify_multiplicativity(limit: u64, k_max: i64, tol: f64) -> Vec<String> {
    let tables: Vec<BruteTables> = (1..=limit).step_by(2).map(BruteTables::new).collect();
    let mut bad = Vec::new();
    for (i, tm) in tables.iter().enumerate() {
        for tn in &tables[i + 1..] {
            if gcd(tm.n, tn.n) != 1 {
                continue;
            }
            let tmn = BruteTables::from_coprime(tm, tn);
            for k in -k_max..=k_max {
                let lhs = tmn.g(k);
                let rhs = tm.g(k) * tn.g(k);
                if (lhs - rhs).norm() > tol * (1.0 + rhs.norm()) {
                    bad.push(format!("G_{k}({}*{}): {lhs} vs {rhs}", tm.n, tn.n));
                }
            }
        }
    }
    bad
}

/// A Gaussian test function `F(x) = exp(-(x - center)^2 / (2 width^2))`
/// with Fourier transform `F^(xi) = int F(x) e(-x xi) dx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianWindow {
    pub center: f64,
    pub width: f64,
}

impl GaussianWindow {
    pub fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        (-0.5 * z * z).exp()
    }

    pub fn fourier(&self, xi: f64) -> Complex64 {
        let amp = self.width
            * (2.0 * PI).sqrt()
            * (-2.0 * PI * PI * self.width * self.width * xi * xi).exp();
        amp * e(-self.center * xi)
    }

    /// Half-width beyond which `F` is below `1e-300`.
    fn reach(&self) -> f64 {
        38.0 * self.width
    }
}

/// `|LHS - RHS_K|` for
/// `sum_{d = r mod q} (d/n) F(d) = (1/(qn)) (q/n) sum_{|k| <= K} F^(k/(nq)) e(k r nbar / q) tau_k(n)`.
pub fn poisson_identity_residual(
    f: &GaussianWindow,
    r: i64,
    q: u64,
    n: u64,
    truncation: u64,
) -> Result<f64> {
    check_odd(n)?;
    if q == 0 || gcd(n, q) != 1 {
        return Err(Error::Precondition(format!(
            "gcd(n = {n}, q = {q}) must be 1"
        )));
    }
    let r = r.rem_euclid(q as i64);
    let lo = (f.center - f.reach()).floor() as i64;
    let hi = (f.center + f.reach()).ceil() as i64;
    let first = lo + (r - lo).rem_euclid(q as i64);
    let mut lhs = 0.0;
    let mut d = first;
    while d <= hi {
        let c = jacobi(d, n);
        if c != 0 {
            lhs += c as f64 * f.eval(d as f64);
        }
        d += q as i64;
    }
    let n_bar = if q == 1 {
        0
    } else {
        inv_mod(n as i64, q as i64).expect("coprime")
    };
    let nq = (n * q) as f64;
    let tables = BruteTables::new(n);
    let mut rhs = Complex64::new(0.0, 0.0);
    let k_max = truncation as i64;
    for k in -k_max..=k_max {
        let phase =
            e(((k * r).rem_euclid(q as i64) * n_bar).rem_euclid(q as i64) as f64 / q as f64);
        let tau_k = character_sum(&tables.chars, &tables.roots, k);
        rhs += f.fourier(k as f64 / nq) * phase * tau_k;
    }
    rhs *= jacobi(q as i64, n) as f64 / nq;
    Ok((Complex64::new(lhs, 0.0) - rhs).norm())
}

/// Window of width `gamma n q` centred at `center`, with `gamma` chosen so that
/// `F^(k / (nq))` at `k = 64` is `e^{-30}` of its peak.
pub fn poisson_window(center: f64, n: u64, q: u64) -> GaussianWindow {
    let gamma = (30.0 / (2.0 * PI * PI)).sqrt() / 64.0;
    GaussianWindow {
        center,
        width: gamma * (n * q) as f64,
    }
}

/// Residuals of one randomized Poisson trial at each truncation in `ks`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonTrial {
    pub q: u64,
    pub n: u64,
    pub r: i64,
    pub center: f64,
    pub residuals: Vec<(u64, f64)>,
}

impl PoissonTrial {
    pub fn strictly_decreasing(&self) -> bool {
        self.residuals.windows(2).all(|w| w[1].1 < w[0].1)
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().map_or(f64::INFINITY, |&(_, r)| r)
    }
}

/// Random `(q <= 20, odd n <= 99, r)` with the window centred near a
/// class member `d0 = r (mod q)` coprime to `n`.
pub fn poisson_trials(count: usize, seed: u64, ks: &[u64]) -> Vec<PoissonTrial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let q = rng.gen_range(1..=20u64);
        let n = 2 * rng.gen_range(0..50u64) + 1;
        if gcd(n, q) != 1 {
            continue;
        }
        let r = rng.gen_range(0..q as i64);
        let d0 = loop {
            let d = r + q as i64 * rng.gen_range(10..200i64);
            if gcd(d as u64, n) == 1 {
                break d;
            }
        };
        let width = poisson_window(0.0, n, q).width;
        let center = d0 as f64 + rng.gen_range(-0.5..0.5) * width;
        let f = poisson_window(center, n, q);
        let residuals = ks
            .iter()
            .map(|&k| {
                (
                    k,
                    poisson_identity_residual(&f, r, q, n, k).expect("coprime, odd"),
                )
            })
            .collect();
        out.push(PoissonTrial {
            q,
            n,
            r,
            center,
            residuals,
        });
    }
    out
}
