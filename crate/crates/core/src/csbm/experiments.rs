use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{sample, CsbmSpec, MetapathSpec, CSBM_STREAM};
use super::scores::{estimate_gamma, linear_scores, map_scores, misclass_on, misclass_rate};
use super::CsbmError;
use crate::hashing::derive_rng;

pub const MIN_SEEDS: usize = 10;

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// Per-seed misclassification of true-gate MAP scores against linear scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub spec: CsbmSpec,
    pub gated: Vec<f64>,
    pub linear: Vec<f64>,
    pub gated_mean: f64,
    /// Sample std over seeds.
    pub gated_std: f64,
    pub linear_mean: f64,
    pub linear_std: f64,
}

/// Runs seeds `spec.seed .. spec.seed + seeds` in parallel.
pub fn compare(spec: &CsbmSpec, seeds: usize) -> Result<Comparison, CsbmError> {
    let gammas = spec.gammas()?;
    let runs: Vec<(f64, f64)> = (0..seeds as u64)
        .into_par_iter()
        .map(|k| {
            let inst = sample(&CsbmSpec { seed: spec.seed + k, ..spec.clone() })?;
            let g = misclass_rate(&map_scores(&inst, &gammas, spec.pi)?, &inst.labels)?;
            let l = misclass_rate(&linear_scores(&inst, spec.pi)?, &inst.labels)?;
            Ok((g, l))
        })
        .collect::<Result<_, CsbmError>>()?;
    let gated: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let linear: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let (gated_mean, gated_std) = mean_std(&gated);
    let (linear_mean, linear_std) = mean_std(&linear);
    Ok(Comparison { spec: spec.clone(), gated, linear, gated_mean, gated_std, linear_mean, linear_std })
}

/// The three regimes compared by [`gating_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingSetup {
    pub strong: CsbmSpec,
    pub mixed: CsbmSpec,
    pub zero_info: CsbmSpec,
}

/// Gate used for the strong-homophily regime and its feature gap.
pub const STRONG_GAMMA: f64 = 2.0;
pub const STRONG_DELTA: f64 = 1.0;

impl GatingSetup {
    /// Derive the other regimes from a sign-mixed spec: strong homophily keeps
    /// the degrees with every gate at [`STRONG_GAMMA`] and Δ = [`STRONG_DELTA`];
    /// zero-info appends a γ = 0 metapath of mean degree.
    pub fn from_mixed(mixed: CsbmSpec) -> Result<Self, CsbmError> {
        let degrees = mixed.degrees()?;
        if degrees.is_empty() {
            return Err(CsbmError::InvalidSpec("at least one metapath required".into()));
        }
        let strong = CsbmSpec {
            delta: STRONG_DELTA,
            metapaths: degrees.iter().map(|&degree| MetapathSpec::Homophily { gamma: STRONG_GAMMA, degree }).collect(),
            ..mixed.clone()
        };
        let mut zero_info = mixed.clone();
        let mean_degree = degrees.iter().sum::<f64>() / degrees.len() as f64;
        zero_info.metapaths.push(MetapathSpec::Homophily { gamma: 0.0, degree: mean_degree });
        Ok(Self { strong, mixed, zero_info })
    }
}

impl Default for GatingSetup {
    fn default() -> Self {
        Self::from_mixed(CsbmSpec::from_gammas(2000, 0.5, 2.0, &[1.2, -1.2], &[8.0, 8.0], 0))
            .expect("default spec is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingReport {
    pub seeds: usize,
    pub strong: Comparison,
    pub mixed: Comparison,
    pub zero_info: Comparison,
    /// `linear − gated` mean error under sign mixing.
    pub mixed_advantage: f64,
    /// `|gated − linear|` mean error under strong homophily.
    pub strong_gap: f64,
    /// Mean gated error change from the extra γ = 0 metapath.
    pub zero_info_gated_shift: f64,
    /// Mean linear error change from the extra γ = 0 metapath.
    pub zero_info_linear_shift: f64,
}

pub fn gating_experiment(setup: &GatingSetup, seeds: usize) -> Result<GatingReport, CsbmError> {
    if seeds < MIN_SEEDS {
        return Err(CsbmError::TooFewSeeds(seeds));
    }
    let strong = compare(&setup.strong, seeds)?;
    let mixed = compare(&setup.mixed, seeds)?;
    let zero_info = compare(&setup.zero_info, seeds)?;
    Ok(GatingReport {
        seeds,
        mixed_advantage: mixed.linear_mean - mixed.gated_mean,
        strong_gap: (strong.gated_mean - strong.linear_mean).abs(),
        zero_info_gated_shift: zero_info.gated_mean - mixed.gated_mean,
        zero_info_linear_shift: zero_info.linear_mean - mixed.linear_mean,
        strong,
        mixed,
        zero_info,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverOptions {
    pub grid: Vec<usize>,
    pub seeds: usize,
    pub train_pool: usize,
    pub test_pool: usize,
}

impl Default for CrossoverOptions {
    fn default() -> Self {
        Self { grid: vec![10, 30, 100, 300, 1000], seeds: 30, train_pool: 1000, test_pool: 1000 }
    }
}

/// Partially canceling configuration: a near-deterministic homophilous
/// metapath offset by a sparse heterophilous one, weak features. Linear
/// aggregation beats the gate-off model here, which a small-N crossover
/// needs; total degree stays low so ten labels rarely span an edge.
pub fn crossover_spec() -> CsbmSpec {
    CsbmSpec::from_gammas(2000, 0.5, 0.8, &[4.0, -2.0], &[4.0, 1.0], 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCurve {
    pub seed: u64,
    pub linear: f64,
    /// Gated test error per grid size, gates estimated from the revealed labels.
    pub gated: Vec<f64>,
    pub true_gated: f64,
    pub gamma_hat: Vec<Vec<f64>>,
    /// Linear wins at the smallest N and gated wins at the largest.
    pub detected: bool,
    /// Smallest N where gated beats linear.
    pub crossover: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub spec: CsbmSpec,
    pub options: CrossoverOptions,
    pub linear_mean: f64,
    pub gated_mean: Vec<f64>,
    pub true_gated_mean: f64,
    /// Smallest N where the mean gated error falls below the mean linear error.
    pub mean_crossover: Option<usize>,
    pub detection_rate: f64,
    pub curves: Vec<SeedCurve>,
}

impl CrossoverReport {
    /// `n,gated_mean,linear_mean` rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,gated_mean,linear_mean\n");
        for (n, g) in self.options.grid.iter().zip(&self.gated_mean) {
            out.push_str(&format!("{n},{g},{}\n", self.linear_mean));
        }
        out
    }
}

pub fn crossover_experiment(spec: &CsbmSpec, opts: &CrossoverOptions) -> Result<CrossoverReport, CsbmError> {
    if opts.seeds < MIN_SEEDS {
        return Err(CsbmError::TooFewSeeds(opts.seeds));
    }
    let grid = &opts.grid;
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CsbmError::InvalidGrid("grid must be non-empty and strictly increasing".into()));
    }
    if grid[grid.len() - 1] > opts.train_pool || opts.train_pool + opts.test_pool > spec.n || opts.test_pool == 0 {
        return Err(CsbmError::InvalidGrid(format!(
            "pools {}+{} and grid max {} do not fit n = {}",
            opts.train_pool,
            opts.test_pool,
            grid[grid.len() - 1],
            spec.n
        )));
    }
    let gammas = spec.gammas()?;
    let curves: Vec<SeedCurve> = (0..opts.seeds as u64)
        .into_par_iter()
        .map(|k| {
            let seed = spec.seed + k;
            let inst = sample(&CsbmSpec { seed, ..spec.clone() })?;
            let mut order: Vec<usize> = (0..spec.n).collect();
            order.shuffle(&mut derive_rng(seed, &[CSBM_STREAM, 3]));
            let (train, rest) = order.split_at(opts.train_pool);
            let test = &rest[..opts.test_pool];
            let linear = misclass_on(&linear_scores(&inst, spec.pi)?, &inst.labels, test);
            let true_gated = misclass_on(&map_scores(&inst, &gammas, spec.pi)?, &inst.labels, test);
            let mut gated = Vec::with_capacity(grid.len());
            let mut gamma_hat = Vec::with_capacity(grid.len());
            for &n in grid {
                let g = estimate_gamma(&inst, &train[..n]);
                gated.push(misclass_on(&map_scores(&inst, &g, spec.pi)?, &inst.labels, test));
                gamma_hat.push(g);
            }
            let detected = gated[0] > linear && gated[gated.len() - 1] < linear;
            let crossover = grid.iter().zip(&gated).find(|&(_, &e)| e < linear).map(|(&n, _)| n);
            Ok(SeedCurve { seed, linear, gated, true_gated, gamma_hat, detected, crossover })
        })
        .collect::<Result<_, CsbmError>>()?;
    let s = curves.len() as f64;
    let linear_mean = curves.iter().map(|c| c.linear).sum::<f64>() / s;
    let gated_mean: Vec<f64> = (0..grid.len()).map(|i| curves.iter().map(|c| c.gated[i]).sum::<f64>() / s).collect();
    Ok(CrossoverReport {
        spec: spec.clone(),
        options: opts.clone(),
        linear_mean,
        true_gated_mean: curves.iter().map(|c| c.true_gated).sum::<f64>() / s,
        mean_crossover: grid.iter().zip(&gated_mean).find(|&(_, &e)| e < linear_mean).map(|(&n, _)| n),
        detection_rate: curves.iter().filter(|c| c.detected).count() as f64 / s,
        gated_mean,
        curves,
    })
}
