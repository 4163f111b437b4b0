use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::tpe::{tpe_candidates, Config, SearchSpace, TpeConfig, Trial};
use super::RouterError;
use crate::bank::BankRecord;
use crate::hashing::derive_rng;
use crate::landscape::{post_select, Candidate, LandscapeMetrics, PostSelection};
use crate::Family;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub val: f64,
    pub test: Option<f64>,
    pub family: Option<Family>,
    pub landscape: Option<LandscapeMetrics>,
    /// Config actually evaluated when the evaluator snapped the request.
    pub resolved: Option<Config>,
}

pub trait Evaluator {
    fn evaluate(&self, config: &Config) -> Option<Outcome>;
}

impl<F: Fn(&Config) -> Option<Outcome>> Evaluator for F {
    fn evaluate(&self, config: &Config) -> Option<Outcome> {
        self(config)
    }
}

/// Dimension name carrying the model family in bank-derived spaces.
pub const FAMILY_DIM: &str = "family";

/// Replays trials of one task from a bank: among records of the requested
/// family (any family when the request has none), the one whose config
/// differs from the request in the fewest keys answers, first in bank
/// order on ties.
pub struct BankEvaluator {
    records: Vec<BankRecord>,
}

impl BankEvaluator {
    pub fn new(records: &[BankRecord], task: &str) -> Result<Self, RouterError> {
        let records: Vec<BankRecord> = records.iter().filter(|r| r.task == task).cloned().collect();
        if records.is_empty() {
            return Err(RouterError::EmptySpace(format!("no bank records for task `{task}`")));
        }
        Ok(Self { records })
    }

    pub fn higher_is_better(&self) -> bool {
        self.records[0].higher_is_better
    }

    fn full_config(r: &BankRecord) -> Config {
        let mut c = r.config.clone();
        c.insert(FAMILY_DIM.into(), Value::from(r.family.as_str()));
        c
    }

    /// Categorical space over every observed value of every config key.
    pub fn space(&self) -> SearchSpace {
        Self::space_of(self.records.iter())
    }

    /// Space spanned by one family's records; `None` when it has none.
    pub fn space_for(&self, family: Family) -> Option<SearchSpace> {
        let mut rows = self.records.iter().filter(|r| r.family == family).peekable();
        rows.peek()?;
        Some(Self::space_of(rows))
    }

    fn space_of<'a>(records: impl Iterator<Item = &'a BankRecord>) -> SearchSpace {
        let mut keys: std::collections::BTreeMap<String, Vec<Value>> = Default::default();
        for r in records {
            for (k, v) in Self::full_config(r) {
                let vals = keys.entry(k).or_default();
                if !vals.contains(&v) {
                    vals.push(v);
                }
            }
        }
        SearchSpace {
            dims: keys
                .into_iter()
                .map(|(name, values)| super::tpe::Dimension {
                    name,
                    kind: super::tpe::DimensionKind::Categorical { values },
                })
                .collect(),
        }
    }
}

impl Evaluator for BankEvaluator {
    fn evaluate(&self, config: &Config) -> Option<Outcome> {
        let dist = |r: &BankRecord| {
            let full = Self::full_config(r);
            let keys: BTreeSet<&String> = full.keys().chain(config.keys()).collect();
            keys.into_iter().filter(|k| full.get(*k) != config.get(*k)).count()
        };
        let family = config.get(FAMILY_DIM).and_then(Value::as_str);
        let best = self
            .records
            .iter()
            .filter(|r| family.is_none_or(|f| r.family.as_str() == f))
            .min_by_key(|r| dist(r))?;
        Some(Outcome {
            val: best.val_score,
            test: Some(best.test_score),
            family: Some(best.family),
            landscape: None,
            resolved: Some(Self::full_config(best)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Random,
    Tpe,
}

impl FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Generator::Random),
            "tpe" => Ok(Generator::Tpe),
            other => Err(format!("unknown generator `{other}` (expected random|tpe)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpoOptions {
    pub budget: usize,
    pub generator: Generator,
    pub seed: u64,
    pub higher_is_better: bool,
    /// Restrict the `family` dimension to this value before searching.
    pub family: Option<Family>,
    pub post_select: bool,
    pub tpe: TpeConfig,
}

impl HpoOptions {
    pub fn new(budget: usize, generator: Generator, seed: u64, higher_is_better: bool) -> Self {
        Self { budget, generator, seed, higher_is_better, family: None, post_select: true, tpe: TpeConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub config: Config,
    pub outcome: Outcome,
    pub best_val_so_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpoResult {
    pub trajectory: Vec<TrialRecord>,
    /// Index into `trajectory` of the selected trial.
    pub selected: usize,
    pub best_val_index: usize,
    pub val_score: f64,
    pub test_score: Option<f64>,
    pub post_selection: Option<PostSelection>,
    pub exhausted: bool,
}

impl HpoResult {
    pub fn best_config(&self) -> &Config {
        &self.trajectory[self.selected].config
    }
}

fn key(c: &Config) -> String {
    serde_json::to_string(c).expect("config serializes")
}

/// Budgeted replay search. Finite spaces are searched without replacement
/// (TPE skips already-tried candidates, falling back to a uniform unseen
/// config); the best validation trial is selected, and when the top three
/// by validation all carry landscape metrics and share a family they are
/// post-selected by hard vote.
pub fn replay_hpo(evaluator: &dyn Evaluator, space: &SearchSpace, opts: &HpoOptions) -> Result<HpoResult, RouterError> {
    if opts.budget == 0 {
        return Err(RouterError::InvalidConfig("budget must be at least 1".into()));
    }
    let space = match opts.family {
        Some(f) => space.restrict(FAMILY_DIM, &[Value::from(f.as_str())])?,
        None => space.clone(),
    };
    space.validate()?;
    // enumerate finite spaces up to a size that keeps memory bounded
    let finite = space.size().filter(|&s| s <= 1_000_000).and_then(|_| space.enumerate());
    let mut rng = derive_rng(opts.seed, &[0x4790]);
    let mut unseen: Vec<Config> = finite.clone().unwrap_or_default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut history: Vec<Trial> = Vec::new();
    let mut trajectory: Vec<TrialRecord> = Vec::new();
    let sign = if opts.higher_is_better { 1.0 } else { -1.0 };
    let mut exhausted = false;

    while trajectory.len() < opts.budget {
        if finite.is_some() && unseen.is_empty() {
            exhausted = true;
            break;
        }
        let config = match opts.generator {
            Generator::Random => match &finite {
                Some(_) => {
                    use rand::Rng;
                    let k = rng.random_range(0..unseen.len());
                    unseen.swap_remove(k)
                }
                None => space.sample_uniform(&mut rng),
            },
            Generator::Tpe => {
                let cands = tpe_candidates(&space, &history, opts.higher_is_better, &opts.tpe, &mut rng);
                let pick = cands.into_iter().map(|(c, _)| c).find(|c| !seen.contains(&key(c)));
                match (pick, &finite) {
                    (Some(c), _) => {
                        if finite.is_some() {
                            let k = key(&c);
                            unseen.retain(|u| key(u) != k);
                        }
                        c
                    }
                    (None, Some(_)) => {
                        use rand::Rng;
                        let k = rng.random_range(0..unseen.len());
                        unseen.swap_remove(k)
                    }
                    (None, None) => space.sample_uniform(&mut rng),
                }
            }
        };
        seen.insert(key(&config));
        let outcome = evaluator.evaluate(&config).ok_or(RouterError::EvaluationFailed)?;
        if !outcome.val.is_finite() {
            return Err(RouterError::EvaluationFailed);
        }
        let best_val_so_far = trajectory
            .iter()
            .map(|t| t.outcome.val)
            .chain([outcome.val])
            .max_by(|a, b| (sign * a).total_cmp(&(sign * b)))
            .unwrap();
        history.push(Trial { config: config.clone(), objective: outcome.val });
        trajectory.push(TrialRecord { index: trajectory.len(), config, outcome, best_val_so_far });
    }

    // stable order: better val first, earlier trial on ties
    let mut ranked: Vec<usize> = (0..trajectory.len()).collect();
    ranked.sort_by(|&a, &b| {
        (sign * trajectory[b].outcome.val)
            .total_cmp(&(sign * trajectory[a].outcome.val))
            .then(a.cmp(&b))
    });
    let best_val_index = ranked[0];
    let mut selected = best_val_index;
    let mut post_selection = None;
    if opts.post_select {
        // indicators only compare within a family
        let fam = trajectory[best_val_index].outcome.family;
        let top: Vec<usize> = ranked
            .iter()
            .copied()
            .filter(|&i| trajectory[i].outcome.family == fam)
            .take(3)
            .collect();
        let cands: Option<Vec<Candidate>> = top
            .iter()
            .map(|&i| {
                let t = &trajectory[i];
                Some(Candidate {
                    id: i.to_string(),
                    val_score: t.outcome.val,
                    higher_is_better: opts.higher_is_better,
                    family: t.outcome.family.unwrap_or(Family::Rdl),
                    metrics: t.outcome.landscape.clone()?,
                })
            })
            .collect();
        if let Some(cands) = cands.filter(|c| c.len() > 1) {
            if let Ok(sel) = post_select(&cands) {
                selected = top[sel.chosen_index];
                post_selection = Some(sel);
            }
        }
    }
    let chosen = &trajectory[selected];
    Ok(HpoResult {
        val_score: chosen.outcome.val,
        test_score: chosen.outcome.test,
        selected,
        best_val_index,
        post_selection,
        exhausted,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetWinner {
    pub task: String,
    pub budget: usize,
    pub family: Family,
    /// Mean selected test score per family over the replay seeds.
    pub rdl_score: f64,
    pub dfs_score: f64,
    /// Signed relative gap, positive favoring rdl.
    pub margin: f64,
}

/// Winner of a task when each family gets `budget` replayed trials: the
/// family whose selected configs score the better mean test score over
/// `seeds` replays (rdl on ties).
pub fn budget_winners(
    records: &[BankRecord],
    task: &str,
    budgets: &[usize],
    seeds: u64,
    generator: Generator,
) -> Result<Vec<BudgetWinner>, RouterError> {
    if seeds == 0 {
        return Err(RouterError::InvalidConfig("need at least one replay seed".into()));
    }
    let ev = BankEvaluator::new(records, task)?;
    let hib = ev.higher_is_better();
    let sign = if hib { 1.0 } else { -1.0 };
    budgets
        .iter()
        .map(|&budget| {
            let mean_for = |family: Family| -> Result<f64, RouterError> {
                let space = ev
                    .space_for(family)
                    .ok_or_else(|| RouterError::EmptySpace(format!("task `{task}` has no {family} records")))?;
                let mut total = 0.0;
                for seed in 0..seeds {
                    let mut opts = HpoOptions::new(budget, generator, seed, hib);
                    opts.family = Some(family);
                    total += replay_hpo(&ev, &space, &opts)?.test_score.ok_or(RouterError::EvaluationFailed)?;
                }
                Ok(total / seeds as f64)
            };
            let (rdl, dfs) = (mean_for(Family::Rdl)?, mean_for(Family::Dfs)?);
            let gap = sign * (rdl - dfs);
            Ok(BudgetWinner {
                task: task.to_string(),
                budget,
                family: if gap >= 0.0 { Family::Rdl } else { Family::Dfs },
                rdl_score: rdl,
                dfs_score: dfs,
                margin: if dfs != 0.0 { gap / dfs.abs() } else { gap },
            })
        })
        .collect()
}

/// Budget-augmented training samples, one per (task, budget).
pub fn budget_samples(
    records: &[BankRecord],
    embeddings: &[super::TaskEmbedding],
    budgets: &[usize],
    seeds: u64,
    generator: Generator,
) -> (Vec<super::MetaSample>, std::collections::BTreeMap<String, String>) {
    let mut out = Vec::new();
    let mut skipped = std::collections::BTreeMap::new();
    for e in embeddings {
        match budget_winners(records, &e.task, budgets, seeds, generator) {
            Ok(ws) => out.extend(ws.into_iter().map(|w| super::MetaSample {
                embedding: e.with_budget(w.budget as f64),
                winner: w.family,
                margin: w.margin,
            })),
            Err(err) => {
                skipped.insert(e.task.clone(), err.to_string());
            }
        }
    }
    (out, skipped)
}
