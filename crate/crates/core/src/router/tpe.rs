use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::RouterError;
use crate::hashing::derive_rng;

pub type Config = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DimensionKind {
    Categorical {
        values: Vec<Value>,
    },
    /// `[low, high]`, optionally in log space; `grid` restricts to that many
    /// evenly spaced points (in the sampling space).
    Numeric {
        low: f64,
        high: f64,
        #[serde(default)]
        log: bool,
        #[serde(default)]
        grid: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    #[serde(flatten)]
    pub kind: DimensionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<Dimension>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config: Config,
    pub objective: f64,
}

/// Round-trip friendly number: integral values stay integers.
fn num(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Value::from(x as i64)
    } else {
        Value::from(x)
    }
}

impl Dimension {
    fn to_unit(&self, x: f64) -> f64 {
        match self.kind {
            DimensionKind::Numeric { log: true, .. } => x.ln(),
            _ => x,
        }
    }

    fn from_unit(&self, u: f64) -> f64 {
        match self.kind {
            DimensionKind::Numeric { log: true, .. } => u.exp(),
            _ => u,
        }
    }

    /// Sampling-space bounds of a numeric dimension.
    fn bounds(&self) -> (f64, f64) {
        match self.kind {
            DimensionKind::Numeric { low, high, .. } => (self.to_unit(low), self.to_unit(high)),
            DimensionKind::Categorical { .. } => (0.0, 0.0),
        }
    }

    /// Clamp into range and snap to the grid; returns the config value.
    fn snap(&self, u: f64) -> Value {
        let DimensionKind::Numeric { grid, .. } = self.kind else { unreachable!() };
        let (lo, hi) = self.bounds();
        let u = u.clamp(lo, hi);
        match grid {
            Some(g) if g >= 2 => {
                let k = ((u - lo) / (hi - lo) * (g - 1) as f64).round();
                num(self.from_unit(lo + k * (hi - lo) / (g - 1) as f64))
            }
            Some(_) => num(self.from_unit(lo)),
            None => Value::from(self.from_unit(u)),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match &self.kind {
            DimensionKind::Categorical { values } => values.contains(v),
            DimensionKind::Numeric { low, high, grid, .. } => match v.as_f64() {
                Some(x) => {
                    let in_range = *low - 1e-12 * low.abs() <= x && x <= *high + 1e-12 * high.abs();
                    in_range && grid.is_none_or(|_| self.snap(self.to_unit(x)).as_f64() == Some(x))
                }
                None => false,
            },
        }
    }

    /// Finite value list, if any.
    pub fn levels(&self) -> Option<Vec<Value>> {
        match &self.kind {
            DimensionKind::Categorical { values } => Some(values.clone()),
            DimensionKind::Numeric { grid: Some(g), .. } => {
                let (lo, hi) = self.bounds();
                let g = *g;
                Some(if g < 2 {
                    vec![self.snap(lo)]
                } else {
                    (0..g).map(|k| self.snap(lo + k as f64 * (hi - lo) / (g - 1) as f64)).collect()
                })
            }
            DimensionKind::Numeric { .. } => None,
        }
    }

    fn sample_uniform(&self, rng: &mut ChaCha8Rng) -> Value {
        match &self.kind {
            DimensionKind::Categorical { values } => values[rng.random_range(0..values.len())].clone(),
            DimensionKind::Numeric { .. } => {
                let (lo, hi) = self.bounds();
                self.snap(if hi > lo { rng.random_range(lo..=hi) } else { lo })
            }
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), RouterError> {
        if self.dims.is_empty() {
            return Err(RouterError::EmptySpace("no dimensions".into()));
        }
        let mut names = BTreeSet::new();
        for d in &self.dims {
            if !names.insert(&d.name) {
                return Err(RouterError::EmptySpace(format!("duplicate dimension `{}`", d.name)));
            }
            let ok = match &d.kind {
                DimensionKind::Categorical { values } => !values.is_empty(),
                DimensionKind::Numeric { low, high, log, grid } => {
                    low.is_finite() && high.is_finite() && low <= high && (!log || *low > 0.0) && *grid != Some(0)
                }
            };
            if !ok {
                return Err(RouterError::EmptySpace(format!("dimension `{}` is empty or malformed", d.name)));
            }
        }
        Ok(())
    }

    pub fn contains(&self, c: &Config) -> bool {
        c.len() == self.dims.len() && self.dims.iter().all(|d| c.get(&d.name).is_some_and(|v| d.contains(v)))
    }

    /// Number of configurations when every dimension is finite.
    pub fn size(&self) -> Option<u128> {
        self.dims
            .iter()
            .try_fold(1u128, |acc, d| d.levels().map(|l| acc.saturating_mul(l.len() as u128)))
    }

    /// All configurations of a finite space in lexicographic dimension order.
    pub fn enumerate(&self) -> Option<Vec<Config>> {
        let levels: Vec<Vec<Value>> = self.dims.iter().map(|d| d.levels()).collect::<Option<_>>()?;
        let mut out = vec![Config::new()];
        for (d, ls) in self.dims.iter().zip(&levels) {
            out = out
                .into_iter()
                .flat_map(|c| {
                    ls.iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert(d.name.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        Some(out)
    }

    /// Keep only the given values of a categorical dimension.
    pub fn restrict(&self, dim: &str, keep: &[Value]) -> Result<SearchSpace, RouterError> {
        let mut out = self.clone();
        let d = out
            .dims
            .iter_mut()
            .find(|d| d.name == dim)
            .ok_or_else(|| RouterError::EmptySpace(format!("no dimension `{dim}`")))?;
        let DimensionKind::Categorical { values } = &mut d.kind else {
            return Err(RouterError::EmptySpace(format!("dimension `{dim}` is not categorical")));
        };
        values.retain(|v| keep.contains(v));
        if values.is_empty() {
            return Err(RouterError::EmptySpace(format!("restriction of `{dim}` leaves no values")));
        }
        Ok(out)
    }

    pub fn sample_uniform(&self, rng: &mut ChaCha8Rng) -> Config {
        self.dims.iter().map(|d| (d.name.clone(), d.sample_uniform(rng))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpeConfig {
    pub gamma: f64,
    pub candidates: usize,
    pub min_history: usize,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self { gamma: 0.25, candidates: 24, min_history: 5 }
    }
}

/// Per-dimension Parzen density over one side of the split.
enum Parzen {
    Categorical(Vec<f64>),
    Kde { centers: Vec<f64>, bw: f64 },
}

impl Parzen {
    fn fit(dim: &Dimension, values: &[&Value]) -> Self {
        match &dim.kind {
            DimensionKind::Categorical { values: levels } => {
                let k = levels.len() as f64;
                let n = values.len() as f64;
                Parzen::Categorical(
                    levels
                        .iter()
                        .map(|l| (values.iter().filter(|v| **v == l).count() as f64 + 1.0) / (n + k))
                        .collect(),
                )
            }
            DimensionKind::Numeric { .. } => {
                let centers: Vec<f64> = values.iter().filter_map(|v| v.as_f64()).map(|x| dim.to_unit(x)).collect();
                let n = centers.len() as f64;
                let m = centers.iter().sum::<f64>() / n;
                let sd = (centers.iter().map(|c| (c - m).powi(2)).sum::<f64>() / n).sqrt();
                let (lo, hi) = dim.bounds();
                // floor keeps single-point and constant sides usable
                let floor = ((hi - lo) / 100.0).max(1e-12);
                Parzen::Kde { centers, bw: (1.06 * sd * n.powf(-0.2)).max(floor) }
            }
        }
    }

    fn log_density(&self, dim: &Dimension, v: &Value) -> f64 {
        match (self, &dim.kind) {
            (Parzen::Categorical(p), DimensionKind::Categorical { values }) => {
                values.iter().position(|l| l == v).map_or(f64::NEG_INFINITY, |i| p[i].ln())
            }
            (Parzen::Kde { centers, bw }, _) => {
                let u = dim.to_unit(v.as_f64().unwrap_or(f64::NAN));
                let s: f64 = centers.iter().map(|c| (-0.5 * ((u - c) / bw).powi(2)).exp()).sum();
                (s / (centers.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt())).ln()
            }
            _ => unreachable!(),
        }
    }

    fn sample(&self, dim: &Dimension, rng: &mut ChaCha8Rng) -> Value {
        match (self, &dim.kind) {
            (Parzen::Categorical(p), DimensionKind::Categorical { values }) => {
                let mut r = rng.random::<f64>();
                for (i, w) in p.iter().enumerate() {
                    if r < *w {
                        return values[i].clone();
                    }
                    r -= w;
                }
                values[values.len() - 1].clone()
            }
            (Parzen::Kde { centers, bw }, _) => {
                let c = centers[rng.random_range(0..centers.len())];
                let u = Normal::new(c, *bw).expect("positive bandwidth").sample(rng);
                dim.snap(u)
            }
            _ => unreachable!(),
        }
    }
}

/// Scored TPE candidates, best first. Uniform draws (score 0) when the
/// history is shorter than `min_history`.
pub fn tpe_candidates(
    space: &SearchSpace,
    history: &[Trial],
    higher_is_better: bool,
    cfg: &TpeConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<(Config, f64)> {
    if history.len() < cfg.min_history.max(2) {
        return (0..cfg.candidates.max(1)).map(|_| (space.sample_uniform(rng), 0.0)).collect();
    }
    let mut order: Vec<usize> = (0..history.len()).collect();
    let key = |i: usize| if higher_is_better { -history[i].objective } else { history[i].objective };
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    let n_good = ((cfg.gamma * history.len() as f64).ceil() as usize).clamp(1, history.len() - 1);
    let (good, bad) = order.split_at(n_good);
    let side = |idx: &[usize], d: &Dimension| {
        let vals: Vec<&Value> = idx.iter().filter_map(|&i| history[i].config.get(&d.name)).collect();
        Parzen::fit(d, &vals)
    };
    let models: Vec<(Parzen, Parzen)> = space.dims.iter().map(|d| (side(good, d), side(bad, d))).collect();
    let mut out: Vec<(Config, f64)> = (0..cfg.candidates.max(1))
        .map(|_| {
            let c: Config = space
                .dims
                .iter()
                .zip(&models)
                .map(|(d, (l, _))| (d.name.clone(), l.sample(d, rng)))
                .collect();
            let score = space
                .dims
                .iter()
                .zip(&models)
                .map(|(d, (l, g))| l.log_density(d, &c[&d.name]) - g.log_density(d, &c[&d.name]))
                .sum::<f64>();
            (c, score)
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

/// Top-`n` distinct configurations by density ratio (uniform when history
/// is short); deterministic per seed.
pub fn suggest_tpe(
    space: &SearchSpace,
    history: &[Trial],
    n: usize,
    higher_is_better: bool,
    cfg: &TpeConfig,
    seed: u64,
) -> Vec<Config> {
    let mut rng = derive_rng(seed, &[history.len() as u64, 0x7e5]);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (c, _) in tpe_candidates(space, history, higher_is_better, cfg, &mut rng) {
        if out.len() == n {
            break;
        }
        if seen.insert(serde_json::to_string(&c).expect("config serializes")) {
            out.push(c);
        }
    }
    out
}
