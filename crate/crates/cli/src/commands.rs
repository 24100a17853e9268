use std::fs;
use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use twistlab_core::discriminants::enumerate;
use twistlab_core::gauss::{poisson_trials, verify_closed_form, verify_multiplicativity};
use twistlab_core::lvalue::{LValueCache, LValueEngine, SmoothCutoff, NONNEGATIVITY_TOL};
use twistlab_core::mollifier::{
    key_inequality_gap, key_inequality_suite, prime_sums, truncated_exp_suite, PrimePartition,
};
use twistlab_core::moments::{
    central_values_between, charsum_average, first_moment, logl_distribution, pc_moments,
    pd_moments, round_sig, FirstMomentSettings, MomentReport, TamagawaWindow,
};
use twistlab_core::{CoefficientTable, TwistClass};

use crate::config::Resolved;
use crate::CliError;

/// Slack allowed on every verified inequality or identity.
const VERIFY_TOL: f64 = 1e-10;

/// Formats a float with at most 12 significant digits.
pub fn num(v: f64) -> String {
    let r = round_sig(v);
    if r == 0.0 || !r.is_finite() || (1e-4..1e15).contains(&r.abs()) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(out)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

impl Resolved {
    /// Coefficient table covering `n_max`, through the trace cache when enabled.
    pub fn table(&self, n_max: u64) -> Result<Arc<CoefficientTable>, CliError> {
        let table = match self.config.cache_dir() {
            Some(dir) => {
                fs::create_dir_all(&dir)
                    .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
                let path = dir.join(format!("traces-{:016x}.bin", self.curve.hash()));
                CoefficientTable::build_cached(&self.curve, n_max, &path)?
            }
            None => CoefficientTable::build(&self.curve, n_max)?,
        };
        Ok(Arc::new(table))
    }

    /// Table size needed for central values with `|d| <= x`.
    pub fn table_for(&self, x: u64) -> Result<Arc<CoefficientTable>, CliError> {
        let n = LValueEngine::required_table_size(
            &self.curve,
            x,
            self.config.eps,
            self.config.truncation_scale,
        );
        self.table(n.max(1000))
    }

    pub fn engine(
        &self,
        class: &TwistClass,
        table: Arc<CoefficientTable>,
    ) -> Result<LValueEngine, CliError> {
        Ok(
            LValueEngine::new(&self.curve, class, table, self.config.eps)?
                .with_truncation_scale(self.config.truncation_scale),
        )
    }

    pub fn lvalue_cache(&self) -> Result<Option<LValueCache>, CliError> {
        match self.config.cache_dir() {
            Some(dir) => {
                fs::create_dir_all(&dir)
                    .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
                let cache = LValueCache::open(
                    &dir,
                    self.curve.hash(),
                    self.config.eps,
                    self.config.truncation_scale,
                )?;
                Ok(Some(cache))
            }
            None => Ok(None),
        }
    }
}

pub fn coeffs(r: &Resolved, pmax: u64, out: &mut dyn Write) -> Result<(), CliError> {
    if pmax < 2 {
        return Err(CliError::Config(format!(
            "--pmax must be at least 2, got {pmax}"
        )));
    }
    let table = r.table(pmax)?;
    let mut w = csv_writer(out);
    w.write_record(["p", "A_p", "a_p"]).map_err(csv_err)?;
    for &p in table.primes() {
        w.write_record([p.to_string(), table.trace(p).to_string(), num(table.a(p))])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn enumerate_cmd(r: &Resolved, out: &mut dyn Write) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record(["kappa", "a", "d"]).map_err(csv_err)?;
    for x in r.config.xs(10_000) {
        for class in &r.classes {
            for d in enumerate(class, x, r.config.prime_only) {
                w.write_record([class.kappa.to_string(), class.a.to_string(), d.to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn lvalues(r: &Resolved, out: &mut dyn Write) -> Result<(), CliError> {
    let cutoff = SmoothCutoff::default();
    let cache = r.lvalue_cache()?;
    let xs = r.config.xs(10_000);
    let top = xs.iter().max().copied().unwrap_or(10);
    let table = r.table_for((5 * top).div_ceil(2))?;
    let mut violations = Vec::new();
    let mut w = csv_writer(out);
    w.write_record(["d", "L_half", "phi_weight", "n_max_used"])
        .map_err(csv_err)?;
    for x in xs {
        for class in &r.classes {
            let engine = r.engine(class, table.clone())?;
            for v in engine.batch_central_values(x, &cutoff, r.config.prime_only, cache.as_ref())? {
                if v.value < -NONNEGATIVITY_TOL {
                    violations.push(format!("L(1/2, E_{}) = {} is negative", v.d, num(v.value)));
                }
                w.write_record([
                    v.d.to_string(),
                    num(v.value),
                    num(v.weight),
                    v.n_max.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    CliError::check(violations)
}

/// Which moment `moments` computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MomentKind {
    /// Smoothed first moment of central values twisted by `chi_d(u)` on `v | d`.
    First,
    /// Moments of the short prime sum.
    Prime,
    /// Moments of the prime sum minus its Tamagawa correction.
    PrimeMinusTamagawa,
}

pub struct MomentArgs {
    pub kind: MomentKind,
    pub u: u64,
    pub v: u64,
    pub window: Option<TamagawaWindow>,
    pub max_rel_err: Option<f64>,
    pub euler_cutoff: u64,
}

#[derive(Serialize)]
struct ClassReport {
    class: (i8, u64),
    #[serde(flatten)]
    report: MomentReport,
}

fn moment_order(k: f64) -> Result<u32, CliError> {
    if k >= 1.0 && k.fract() == 0.0 && k <= 64.0 {
        Ok(k as u32)
    } else {
        Err(CliError::Config(format!(
            "prime-sum moments need a positive integer k, got {k}"
        )))
    }
}

pub fn moments(r: &Resolved, args: &MomentArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cutoff = SmoothCutoff::default();
    let xs = r.config.xs(20_000);
    let ks = r.config.ks(&[1.0]);
    let mut reports = Vec::new();
    match args.kind {
        MomentKind::First => {
            if let Some(&k) = ks.iter().find(|&&k| k != 1.0) {
                return Err(CliError::Config(format!(
                    "the first moment has k = 1, got {k}"
                )));
            }
            let cache = r.lvalue_cache()?;
            let top = xs.iter().max().copied().unwrap_or(10);
            let table = r.table_for((5 * top).div_ceil(2))?;
            let big = if table.n_max() >= args.euler_cutoff {
                table.clone()
            } else {
                r.table(args.euler_cutoff)?
            };
            let settings = FirstMomentSettings {
                euler_cutoff: args.euler_cutoff,
            };
            for &x in &xs {
                for class in &r.classes {
                    let engine = r.engine(class, big.clone())?;
                    let report = first_moment(
                        &engine,
                        &cutoff,
                        args.u,
                        args.v,
                        x,
                        &settings,
                        cache.as_ref(),
                    )?;
                    reports.push(ClassReport {
                        class: (class.kappa, class.a),
                        report,
                    });
                }
            }
        }
        MomentKind::Prime | MomentKind::PrimeMinusTamagawa => {
            let orders = ks
                .iter()
                .map(|&k| moment_order(k))
                .collect::<Result<Vec<_>, _>>()?;
            let top = xs.iter().max().copied().unwrap_or(10) as f64;
            let table = r.table(top.sqrt().ceil() as u64 + 1000)?;
            for &x in &xs {
                for class in &r.classes {
                    for &k in &orders {
                        let report = if args.kind == MomentKind::Prime {
                            pd_moments(&table, class, &cutoff, k, x, args.v)?
                        } else {
                            pc_moments(&r.curve, &table, class, &cutoff, k, x, args.window)?
                        };
                        reports.push(ClassReport {
                            class: (class.kappa, class.a),
                            report,
                        });
                    }
                }
            }
        }
    }
    let mut violations = Vec::new();
    for cr in &reports {
        let rep = &cr.report;
        if !rep.empirical.is_finite() || !rep.oracle.is_finite() {
            violations.push(format!(
                "class {:?} X={}: non-finite result",
                cr.class, rep.x
            ));
        }
        if let (Some(max), Some(e)) = (args.max_rel_err, rep.rel_err) {
            if e > max {
                violations.push(format!(
                    "class {:?} X={}: rel_err {} exceeds {max}",
                    cr.class,
                    num(rep.x),
                    num(e)
                ));
            }
        }
    }
    let text = serde_json::to_string_pretty(&reports).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::Io(e.to_string()))?;
    CliError::check(violations)
}

pub fn dist(r: &Resolved, adjust: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let cache = r.lvalue_cache()?;
    let xs = r.config.xs(10_000);
    let table = r.table_for(xs.iter().max().copied().unwrap_or(16))?;
    let mut w = csv_writer(out);
    w.write_record([
        "X",
        "V",
        "empirical_tail",
        "gaussian_tail",
        "sample_size",
        "zero_count",
    ])
    .map_err(csv_err)?;
    for x in xs {
        let lo = (x as f64 / (x as f64).ln()).ceil() as u64;
        let mut values = Vec::new();
        for class in &r.classes {
            let engine = r.engine(class, table.clone())?;
            values.extend(central_values_between(
                &engine,
                lo,
                x,
                r.config.prime_only,
                cache.as_ref(),
            )?);
        }
        let rep = logl_distribution(&r.curve, &values, x, adjust)?;
        for i in 0..rep.v_grid.len() {
            w.write_record([
                x.to_string(),
                num(rep.v_grid[i]),
                num(rep.empirical_tail[i]),
                num(rep.gaussian_tail[i]),
                rep.sample_size.to_string(),
                rep.zero_count.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Check {
    Gauss,
    Poisson,
    KeyInequality,
    Lemma1,
    Afe,
    Charsum,
}

pub struct VerifyArgs {
    pub check: Check,
    pub n_max: u64,
    pub trials: usize,
}

pub fn verify(r: &Resolved, args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let seed = r.config.seed;
    let mut lines = Vec::new();
    let mut violations = Vec::new();
    match args.check {
        Check::Gauss => {
            let closed = verify_closed_form(args.n_max, 60, VERIFY_TOL);
            let mult = verify_multiplicativity(args.n_max.min(200), 60, VERIFY_TOL);
            lines.push(format!(
                "closed form vs brute force, odd n <= {}, |k| <= 60: {} mismatches",
                args.n_max,
                closed.len()
            ));
            lines.push(format!(
                "multiplicativity, coprime odd m, n <= {}: {} mismatches",
                args.n_max.min(200),
                mult.len()
            ));
            violations.extend(closed);
            violations.extend(mult);
        }
        Check::Poisson => {
            let ks = [0, 16, 32, 48, 64];
            let trials = poisson_trials(args.trials, seed, &ks);
            let mut stalled = 0;
            for t in &trials {
                let first = t.residuals[0].1;
                let last = t.final_residual();
                if last >= 1e-9 || last >= first {
                    violations.push(format!(
                        "q={} n={} r={}: residual {} at K=0, {} at K=64",
                        t.q,
                        t.n,
                        t.r,
                        num(first),
                        num(last)
                    ));
                }
                if !t.strictly_decreasing() {
                    stalled += 1;
                }
            }
            let worst = trials
                .iter()
                .map(|t| t.final_residual())
                .fold(0.0, f64::max);
            lines.push(format!(
                "{} trials, max residual at K=64: {}",
                trials.len(),
                num(worst)
            ));
            lines.push(format!(
                "trials not strictly decreasing across K in {ks:?}: {stalled}"
            ));
        }
        Check::Lemma1 => {
            for c in truncated_exp_suite(args.trials, seed) {
                lines.push(format!("{}: worst slack {}", c.name, num(c.slack)));
                if c.slack < -VERIFY_TOL {
                    violations.push(format!("{}: slack {}", c.name, num(c.slack)));
                }
            }
        }
        Check::KeyInequality => {
            let c = key_inequality_suite(args.trials, seed);
            lines.push(format!(
                "{} random instances: worst slack {}",
                args.trials,
                num(c.slack)
            ));
            if c.slack < -VERIFY_TOL {
                violations.push(format!("{}: slack {}", c.name, num(c.slack)));
            }
            realized_key_inequality(r, &mut lines, &mut violations)?;
        }
        Check::Afe => {
            let x = r.config.xs(10_000).into_iter().max().unwrap_or(10_000);
            let table = r.table(
                LValueEngine::required_table_size(
                    &r.curve,
                    x,
                    r.config.eps,
                    2.0 * r.config.truncation_scale,
                )
                .max(1000),
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            let mut min = f64::INFINITY;
            let mut count = 0;
            for class in &r.classes {
                let ds: Vec<i64> = enumerate(class, x, r.config.prime_only).collect();
                let sample: Vec<i64> = ds
                    .choose_multiple(&mut rng, 100.min(ds.len()))
                    .copied()
                    .collect();
                let base = r.engine(class, table.clone())?;
                let doubled = r
                    .engine(class, table.clone())?
                    .with_truncation_scale(2.0 * r.config.truncation_scale);
                let a = base.central_values(&sample, None)?;
                let b = doubled.central_values(&sample, None)?;
                for (p, q) in a.iter().zip(&b) {
                    let drift = (p.value - q.value).abs();
                    worst = worst.max(drift);
                    min = min.min(p.value);
                    if drift >= 1e-8 {
                        violations.push(format!(
                            "d={}: doubling truncation moved L by {}",
                            p.d,
                            num(drift)
                        ));
                    }
                    if p.value < -NONNEGATIVITY_TOL {
                        violations.push(format!("d={}: L = {} is negative", p.d, num(p.value)));
                    }
                }
                count += a.len();
            }
            lines.push(format!(
                "{count} sampled d with |d| <= {x}: max doubling drift {}, min value {}",
                num(worst),
                num(min)
            ));
        }
        Check::Charsum => {
            let x = r
                .config
                .xs(1_000_000)
                .into_iter()
                .max()
                .unwrap_or(1_000_000);
            let cutoff = SmoothCutoff::default();
            for class in &r.classes {
                for (n, v) in [(1u64, 1u64), (1, 3), (9, 1), (3, 1), (5, 1), (5, 3)] {
                    let rep = charsum_average(class, &cutoff, n, v, x)?;
                    let tag = format!("class ({}, {}) n={n} v={v}", class.kappa, class.a);
                    match rep.rel_err {
                        Some(e) if n == 1 || n == 9 => {
                            lines.push(format!("{tag}: rel_err {}", num(e)));
                            if e >= 0.05 {
                                violations.push(format!("{tag}: rel_err {} >= 0.05", num(e)));
                            }
                        }
                        _ => {
                            let bound = rep.details["nonsquare_bound"];
                            lines.push(format!(
                                "{tag}: |sum| {} <= {}",
                                num(rep.empirical.abs()),
                                num(bound)
                            ));
                            if rep.empirical.abs() > bound {
                                violations.push(format!(
                                    "{tag}: |sum| {} exceeds {}",
                                    num(rep.empirical.abs()),
                                    num(bound)
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    for l in lines {
        writeln!(out, "{l}").map_err(|e| CliError::Io(e.to_string()))?;
    }
    CliError::check(violations)
}

/// The key inequality at realized data: `y = L(1/2, E_d)` and `x_j = P_j(d)`
/// over the configured partition, for sampled `d` and each `k` in `[0, 1]`.
fn realized_key_inequality(
    r: &Resolved,
    lines: &mut Vec<String>,
    violations: &mut Vec<String>,
) -> Result<(), CliError> {
    let x = r.config.xs(10_000).into_iter().max().unwrap_or(10_000);
    let ks: Vec<f64> = r
        .config
        .ks(&[0.25, 0.5, 0.75, 1.0])
        .into_iter()
        .filter(|k| (0.0..=1.0).contains(k))
        .collect();
    let spec = &r.config.partition;
    let partition = PrimePartition::build(x as f64, spec.c, spec.threshold, r.curve.n0())?;
    let table = r.table_for(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.config.seed);
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for class in &r.classes {
        let ds: Vec<i64> = enumerate(class, x, r.config.prime_only).collect();
        let sample: Vec<i64> = ds
            .choose_multiple(&mut rng, 25.min(ds.len()))
            .copied()
            .collect();
        let engine = r.engine(class, table.clone())?;
        for cv in engine.central_values(&sample, None)? {
            let y = cv.value.max(0.0);
            let xs = prime_sums(&table, &partition, cv.d);
            for &k in &ks {
                let gap = key_inequality_gap(y, &xs, &partition.lengths, k)?;
                let slack = gap / y.powf(k).max(1.0);
                worst = worst.min(slack);
                count += 1;
                if slack < -VERIFY_TOL {
                    violations.push(format!("d={} k={k}: slack {}", cv.d, num(slack)));
                }
            }
        }
    }
    lines.push(format!(
        "partition X={x} c={} threshold={}: lengths {:?}{}",
        spec.c,
        spec.threshold,
        partition.lengths,
        if partition.fallback {
            " (single-set fallback)"
        } else {
            ""
        }
    ));
    lines.push(format!(
        "{count} realized instances: worst slack {}",
        num(worst)
    ));
    Ok(())
}
