//! Experiment configuration: a TOML file plus command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twistlab_core::lvalue::{default_cache_dir, DEFAULT_EPS};
use twistlab_core::{CurveModel, TwistClass};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    /// `(a2, a1, a0)` for `y^2 = x^3 + a2 x^2 + a1 x + a0`.
    pub coefficients: [i64; 3],
    pub conductor: u64,
    pub root_number: i8,
    /// `A(p)` at 2 and at every other prime where the model is singular.
    #[serde(default)]
    pub bad_traces: BTreeMap<String, i64>,
}

impl Default for CurveSpec {
    fn default() -> Self {
        Self {
            coefficients: [0, -1, 0],
            conductor: 32,
            root_number: 1,
            bad_traces: BTreeMap::from([("2".into(), 0)]),
        }
    }
}

impl CurveSpec {
    pub fn build(&self) -> Result<CurveModel, CliError> {
        let mut traces = BTreeMap::new();
        for (p, &t) in &self.bad_traces {
            let p: u64 = p
                .parse()
                .map_err(|_| CliError::Config(format!("bad_traces key {p:?} is not a prime")))?;
            traces.insert(p, t);
        }
        let [a2, a1, a0] = self.coefficients;
        Ok(CurveModel::new(
            (a2, a1, a0),
            self.conductor,
            self.root_number,
            traces,
        )?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionSpec {
    pub c: f64,
    pub threshold: u32,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self {
            c: 1.0,
            threshold: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Report destination; stdout when absent.
    pub path: Option<PathBuf>,
    /// Trace and L-value caches; `$TWISTLAB_CACHE_DIR` or the home cache when absent.
    pub cache_dir: Option<PathBuf>,
    /// Skip all on-disk caches.
    pub no_cache: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub curve: CurveSpec,
    /// `(kappa, a)` pairs; every admissible class when empty.
    pub classes: Vec<(i8, i64)>,
    pub x: Option<u64>,
    pub x_grid: Vec<u64>,
    pub k: Vec<f64>,
    pub truncation_scale: f64,
    pub eps: f64,
    pub partition: PartitionSpec,
    pub prime_only: bool,
    pub output: OutputSpec,
    /// Worker threads; all cores when absent.
    pub workers: Option<usize>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            curve: CurveSpec::default(),
            classes: Vec::new(),
            x: None,
            x_grid: Vec::new(),
            k: Vec::new(),
            truncation_scale: 1.0,
            eps: DEFAULT_EPS,
            partition: PartitionSpec::default(),
            prime_only: false,
            output: OutputSpec::default(),
            workers: None,
            seed: 1,
        }
    }
}

/// A validated configuration with the curve and classes built.
#[derive(Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub curve: CurveModel,
    pub classes: Vec<TwistClass>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))
    }

    /// Single `X` if set, else the grid, else `fallback`.
    pub fn xs(&self, fallback: u64) -> Vec<u64> {
        match self.x {
            Some(x) => vec![x],
            None if !self.x_grid.is_empty() => self.x_grid.clone(),
            None => vec![fallback],
        }
    }

    pub fn ks(&self, fallback: &[f64]) -> Vec<f64> {
        if self.k.is_empty() {
            fallback.to_vec()
        } else {
            self.k.clone()
        }
    }

    pub fn cache_dir(&self) -> Option<PathBuf> {
        if self.output.no_cache {
            None
        } else {
            Some(
                self.output
                    .cache_dir
                    .clone()
                    .unwrap_or_else(default_cache_dir),
            )
        }
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        if !self.x_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Config(format!(
                "x_grid must be strictly increasing, got {:?}",
                self.x_grid
            )));
        }
        if !(self.truncation_scale > 0.0 && self.truncation_scale.is_finite()) {
            return Err(CliError::Config(format!(
                "truncation_scale must be positive, got {}",
                self.truncation_scale
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(CliError::Config(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if self.partition.c <= 0.0 {
            return Err(CliError::Config(format!(
                "partition.c must be positive, got {}",
                self.partition.c
            )));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        let curve = self.curve.build()?;
        let classes = if self.classes.is_empty() {
            twistlab_core::discriminants::admissible_classes(&curve)
        } else {
            self.classes
                .iter()
                .map(|&(kappa, a)| TwistClass::new(kappa, a, &curve))
                .collect::<Result<_, _>>()?
        };
        if classes.is_empty() {
            return Err(CliError::Config(
                "curve has no admissible twist class".into(),
            ));
        }
        Ok(Resolved {
            config: self,
            curve,
            classes,
        })
    }
}

/// Parses `kappa,a` as given to `--class`.
pub fn parse_class(s: &str) -> Result<(i8, i64), String> {
    let (k, a) = s
        .split_once(',')
        .ok_or_else(|| format!("expected KAPPA,A, got {s:?}"))?;
    let k = k.trim().parse().map_err(|_| format!("bad sign {k:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("bad residue {a:?}"))?;
    Ok((k, a))
}
