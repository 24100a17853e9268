use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::LValueCache;
use super::{CutoffKernel, SmoothCutoff};
use crate::arith::{factorize, gcd};
use crate::curve::{CoefficientTable, CurveModel};
use crate::discriminants::{twist_root_number, DiscriminantStream, TwistClass};
use crate::error::{Error, Result};

/// Default target for the truncation error of the exponential tail.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Values below `-NONNEGATIVITY_TOL` contradict `L(1/2, E_d) >= 0`.
pub const NONNEGATIVITY_TOL: f64 = 1e-6;

/// Renormalise the running exponential every this many steps.
const EXP_REFRESH: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralValue {
    pub d: i64,
    pub value: f64,
    pub n_max: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedValue {
    pub d: i64,
    pub value: f64,
    pub weight: f64,
    pub n_max: u64,
}

/// `chi_d(n) = (n / |d|)` for `d = 1 (mod 4)`, tabulated over one period.
pub fn character_table(d: i64) -> Vec<i8> {
    let m = d.unsigned_abs();
    let primes: Vec<u64> = factorize(m).into_iter().map(|(p, _)| p).collect();
    let legendre: Vec<Vec<i8>> = primes
        .iter()
        .map(|&p| {
            let mut t = vec![-1i8; p as usize];
            t[0] = 0;
            for x in 1..p {
                t[((x * x) % p) as usize] = 1;
            }
            t
        })
        .collect();
    let mut out = vec![0i8; m as usize];
    let mut residues = vec![0usize; primes.len()];
    for slot in out.iter_mut() {
        let mut v = 1i8;
        for (i, t) in legendre.iter().enumerate() {
            v *= t[residues[i]];
        }
        *slot = v;
        for (i, &p) in primes.iter().enumerate() {
            residues[i] += 1;
            if residues[i] == p as usize {
                residues[i] = 0;
            }
        }
    }
    out
}

/// Central values `L(1/2, E_d)` for one twist class.
#[derive(Clone, Debug)]
pub struct LValueEngine {
    curve: CurveModel,
    class: TwistClass,
    table: Arc<CoefficientTable>,
    /// `A(n) / n`, i.e. `a(n) / sqrt(n)`.
    weights: Arc<Vec<f64>>,
    kernel: CutoffKernel,
    eps: f64,
    trunc_scale: f64,
}

impl LValueEngine {
    pub fn new(
        curve: &CurveModel,
        class: &TwistClass,
        table: Arc<CoefficientTable>,
        eps: f64,
    ) -> Result<Self> {
        if class.n0 != curve.n0() {
            return Err(Error::InvalidClass(
                "class modulus does not match the curve".into(),
            ));
        }
        let weights: Vec<f64> = table
            .normalized()
            .iter()
            .enumerate()
            .map(|(n, &a)| if n == 0 { 0.0 } else { a / (n as f64).sqrt() })
            .collect();
        Ok(Self {
            curve: curve.clone(),
            class: class.clone(),
            kernel: CutoffKernel::new(curve, class, eps)?,
            table,
            weights: Arc::new(weights),
            eps,
            trunc_scale: 1.0,
        })
    }

    /// Multiplies the truncation constant (2.0 doubles it).
    pub fn with_truncation_scale(mut self, scale: f64) -> Self {
        self.trunc_scale = scale;
        self
    }

    pub fn class(&self) -> &TwistClass {
        &self.class
    }

    pub fn curve(&self) -> &CurveModel {
        &self.curve
    }

    pub fn kernel(&self) -> &CutoffKernel {
        &self.kernel
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn truncation_scale(&self) -> f64 {
        self.trunc_scale
    }

    /// `C_trunc(d) = (sqrt N / 2 pi) (log(1/eps) + 4 log log(3 + |d|))`.
    pub fn c_trunc(&self, d: i64) -> f64 {
        let l = (1.0 / self.eps).ln() + 4.0 * (3.0 + d.unsigned_abs() as f64).ln().ln();
        self.trunc_scale * (self.curve.conductor as f64).sqrt() / (2.0 * PI) * l
    }

    /// `n_max(d) = ceil(C_trunc |d|)`.
    pub fn n_max_for(&self, d: i64) -> u64 {
        (self.c_trunc(d) * d.unsigned_abs() as f64).ceil() as u64
    }

    /// Largest `n_max(d)` over `|d| <= x`.
    pub fn required_table_size(curve: &CurveModel, x: u64, eps: f64, scale: f64) -> u64 {
        let l = (1.0 / eps).ln() + 4.0 * (3.0 + x as f64).ln().ln();
        (scale * (curve.conductor as f64).sqrt() / (2.0 * PI) * l * x as f64).ceil() as u64
    }

    fn check_member(&self, d: i64) -> Result<()> {
        let root = twist_root_number(&self.curve, d)?;
        if root != 1 {
            return Err(Error::OddFunctionalEquation(d));
        }
        if !self.class.contains(d) {
            return Err(Error::InvalidDiscriminant(
                d,
                format!("not in class ({}, {})", self.class.kappa, self.class.a),
            ));
        }
        if !crate::arith::is_squarefree(d.unsigned_abs()) {
            return Err(Error::InvalidDiscriminant(d, "not squarefree".into()));
        }
        Ok(())
    }

    /// `L(1/2, E_d) = 2 sum_n a(n) chi_d(n) n^{-1/2} exp(-2 pi n / (sqrt N |d|))`,
    /// the approximate functional equation with `W` expanded into its series.
    pub fn central_value(&self, d: i64) -> Result<CentralValue> {
        self.check_member(d)?;
        let n_max = self.n_max_for(d);
        self.table.ensure_covers(n_max)?;
        let chi = character_table(d);
        let period = chi.len();
        let rate = 2.0 * PI / ((self.curve.conductor as f64).sqrt() * d.unsigned_abs() as f64);
        let step = (-rate).exp();
        let w = &self.weights[..=n_max as usize];
        let mut acc = 0.0;
        let mut idx = 1 % period;
        let mut start = 1usize;
        while start <= n_max as usize {
            let end = (start + EXP_REFRESH).min(n_max as usize + 1);
            let mut damp = (-rate * start as f64).exp();
            let mut block = 0.0;
            for &wn in &w[start..end] {
                let c = chi[idx];
                if c != 0 {
                    block += wn * c as f64 * damp;
                }
                damp *= step;
                idx += 1;
                if idx == period {
                    idx = 0;
                }
            }
            acc += block;
            start = end;
        }
        Ok(CentralValue {
            d,
            value: 2.0 * acc,
            n_max,
        })
    }

    /// The approximate functional equation read literally:
    /// `2 sum_{(n, N0) = 1} a(n) chi_d(n) n^{-1/2} W(n / |d|)` with `W` from the kernel.
    pub fn central_value_literal(&self, d: i64) -> Result<CentralValue> {
        self.check_member(d)?;
        let n_max = self.n_max_for(d);
        self.table.ensure_covers(n_max)?;
        let chi = character_table(d);
        let n0 = self.curve.n0();
        let abs_d = d.unsigned_abs() as f64;
        let mut acc = 0.0;
        for n in 1..=n_max {
            if gcd(n, n0) != 1 {
                continue;
            }
            let c = chi[(n % chi.len() as u64) as usize];
            if c == 0 || self.weights[n as usize] == 0.0 {
                continue;
            }
            acc += self.weights[n as usize] * c as f64 * self.kernel.w(n as f64 / abs_d)?;
        }
        Ok(CentralValue {
            d,
            value: 2.0 * acc,
            n_max,
        })
    }

    /// Central values for a list of discriminants, in input order.
    pub fn central_values(
        &self,
        ds: &[i64],
        cache: Option<&LValueCache>,
    ) -> Result<Vec<CentralValue>> {
        let mut out: Vec<Option<CentralValue>> = match cache {
            Some(c) => ds.iter().map(|&d| c.get(d)).collect(),
            None => vec![None; ds.len()],
        };
        let missing: Vec<usize> = (0..ds.len()).filter(|&i| out[i].is_none()).collect();
        let computed: Vec<Result<CentralValue>> = missing
            .par_iter()
            .map(|&i| self.central_value(ds[i]))
            .collect();
        let mut fresh = Vec::with_capacity(computed.len());
        for (i, v) in missing.into_iter().zip(computed) {
            let v = v?;
            fresh.push(v);
            out[i] = Some(v);
        }
        if let Some(c) = cache {
            if !fresh.is_empty() {
                c.insert_and_flush(&fresh)?;
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }

    /// `(d, L(1/2, E_d), Phi(kappa d / X))` for every class member with positive weight.
    pub fn batch_central_values(
        &self,
        x: u64,
        cutoff: &SmoothCutoff,
        prime_only: bool,
        cache: Option<&LValueCache>,
    ) -> Result<Vec<WeightedValue>> {
        if x < 10 {
            return Err(Error::Precondition(format!(
                "X must be at least 10, got {x}"
            )));
        }
        let ds: Vec<i64> = weighted_discriminants(&self.class, x, cutoff, prime_only)
            .into_iter()
            .map(|(d, _)| d)
            .collect();
        let values = self.central_values(&ds, cache)?;
        Ok(values
            .into_iter()
            .map(|v| WeightedValue {
                d: v.d,
                value: v.value,
                weight: cutoff.eval((self.class.kappa as i64 * v.d) as f64 / x as f64),
                n_max: v.n_max,
            })
            .collect())
    }
}

/// Class members `d` with `Phi(kappa d / X) > 0`, paired with the weight.
pub fn weighted_discriminants(
    class: &TwistClass,
    x: u64,
    cutoff: &SmoothCutoff,
    prime_only: bool,
) -> Vec<(i64, f64)> {
    let lo = x / 2;
    let hi = (5 * x).div_ceil(2);
    DiscriminantStream::new(class, lo, hi, prime_only)
        .map(|d| (d, cutoff.eval((class.kappa as i64 * d) as f64 / x as f64)))
        .filter(|&(_, w)| w > 0.0)
        .collect()
}
