use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::CsbmError;
use crate::hashing::derive_rng;

/// RNG stream tag for everything the lab draws.
pub(crate) const CSBM_STREAM: u64 = 0xC5B3;

/// One metapath, either by raw edge probabilities or by gate and expected
/// degree (converted against the spec's `n` and prior).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetapathSpec {
    Probabilities { p: f64, q: f64 },
    Homophily { gamma: f64, degree: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsbmSpec {
    pub n: usize,
    pub pi: f64,
    /// Mean gap of the class-conditional scores: ψ | Y=±1 ~ N(±Δ/2, 1).
    pub delta: f64,
    pub metapaths: Vec<MetapathSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl CsbmSpec {
    pub fn from_gammas(n: usize, pi: f64, delta: f64, gammas: &[f64], degrees: &[f64], seed: u64) -> Self {
        let metapaths =
            gammas.iter().zip(degrees).map(|(&gamma, &degree)| MetapathSpec::Homophily { gamma, degree }).collect();
        Self { n, pi, delta, metapaths, seed }
    }

    /// Probability that two i.i.d. labels agree.
    pub fn same_label_mass(&self) -> f64 {
        self.pi * self.pi + (1.0 - self.pi) * (1.0 - self.pi)
    }

    /// Edge probabilities `(p_m, q_m)` per metapath. The degree form solves
    /// `d = (n−1)(s·p + (1−s)·q)` with `p = q·e^γ`.
    pub fn resolved(&self) -> Result<Vec<(f64, f64)>, CsbmError> {
        if self.n == 0 {
            return Err(CsbmError::InvalidSpec("n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.pi) {
            return Err(CsbmError::InvalidSpec(format!("prior {} outside [0, 1]", self.pi)));
        }
        if !self.delta.is_finite() {
            return Err(CsbmError::InvalidSpec("delta must be finite".into()));
        }
        let s = self.same_label_mass();
        self.metapaths
            .iter()
            .enumerate()
            .map(|(m, mp)| {
                let (p, q) = match *mp {
                    MetapathSpec::Probabilities { p, q } => (p, q),
                    MetapathSpec::Homophily { gamma, degree } => {
                        if !gamma.is_finite() || !(degree >= 0.0) || self.n < 2 {
                            return Err(CsbmError::InvalidSpec(format!("metapath {m}: bad gamma/degree")));
                        }
                        let q = degree / ((self.n - 1) as f64 * (s * gamma.exp() + 1.0 - s));
                        (q * gamma.exp(), q)
                    }
                };
                if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
                    return Err(CsbmError::InvalidSpec(format!("metapath {m}: p={p}, q={q} outside [0, 1]")));
                }
                Ok((p, q))
            })
            .collect()
    }

    /// Expected degree per metapath.
    pub fn degrees(&self) -> Result<Vec<f64>, CsbmError> {
        let s = self.same_label_mass();
        let n1 = self.n.saturating_sub(1) as f64;
        Ok(self.resolved()?.into_iter().map(|(p, q)| n1 * (s * p + (1.0 - s) * q)).collect())
    }

    /// True gates `ln(p/q)`; requires `p, q ∈ (0, 1)`.
    pub fn gammas(&self) -> Result<Vec<f64>, CsbmError> {
        self.resolved()?.into_iter().map(|(p, q)| super::gamma_alpha(p, q).map(|g| g.gamma)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsbmInstance {
    /// ±1 per node.
    pub labels: Vec<i8>,
    pub scores: Vec<f64>,
    /// Per metapath, sorted neighbor lists of a symmetric 0/1 adjacency
    /// without self-loops.
    pub adjacency: Vec<Vec<Vec<u32>>>,
}

impl CsbmInstance {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self, m: usize) -> usize {
        self.adjacency[m].iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.adjacency.iter().all(|adj| {
            adj.iter().enumerate().all(|(v, nb)| {
                nb.iter().all(|&u| u as usize != v && adj[u as usize].binary_search(&(v as u32)).is_ok())
            })
        })
    }
}

/// Calls `f` on each index of `0..total` independently with probability
/// `prob`, jumping between hits by geometric gaps.
fn bernoulli_indices(total: u64, prob: f64, rng: &mut ChaCha8Rng, mut f: impl FnMut(u64)) {
    if prob <= 0.0 || total == 0 {
        return;
    }
    if prob >= 1.0 {
        (0..total).for_each(f);
        return;
    }
    let log_q = (1.0 - prob).ln();
    let mut k: u64 = 0;
    loop {
        let u: f64 = rng.random();
        let gap = ((1.0 - u).ln() / log_q).floor();
        if gap >= (total - k) as f64 {
            return;
        }
        k += gap as u64;
        f(k);
        k += 1;
        if k >= total {
            return;
        }
    }
}

/// Position `k` in the strict lower triangle, row-major: `(i, j)` with `j < i`.
fn triangle_pair(k: u64) -> (u64, u64) {
    let mut i = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0) as u64;
    while i * (i - 1) / 2 > k {
        i -= 1;
    }
    while (i + 1) * i / 2 <= k {
        i += 1;
    }
    (i, k - i * (i - 1) / 2)
}

/// Draw an instance. Labels, scores and each metapath's edges come from
/// separate streams, so appending a metapath leaves earlier draws unchanged.
pub fn sample(spec: &CsbmSpec) -> Result<CsbmInstance, CsbmError> {
    let probs = spec.resolved()?;
    let n = spec.n;
    let mut rng = derive_rng(spec.seed, &[CSBM_STREAM, 0]);
    let labels: Vec<i8> = (0..n).map(|_| if rng.random::<f64>() < spec.pi { 1 } else { -1 }).collect();
    let mut rng = derive_rng(spec.seed, &[CSBM_STREAM, 1]);
    let scores: Vec<f64> = labels
        .iter()
        .map(|&y| {
            let z: f64 = StandardNormal.sample(&mut rng);
            y as f64 * spec.delta / 2.0 + z
        })
        .collect();

    let pos: Vec<u32> = (0..n as u32).filter(|&v| labels[v as usize] > 0).collect();
    let neg: Vec<u32> = (0..n as u32).filter(|&v| labels[v as usize] < 0).collect();
    let adjacency = probs
        .iter()
        .enumerate()
        .map(|(m, &(p, q))| {
            let mut rng = derive_rng(spec.seed, &[CSBM_STREAM, 2, m as u64]);
            let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
            let mut add = |a: u32, b: u32| {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            };
            for group in [&pos, &neg] {
                let g = group.len() as u64;
                bernoulli_indices(g * g.saturating_sub(1) / 2, p, &mut rng, |k| {
                    let (i, j) = triangle_pair(k);
                    add(group[i as usize], group[j as usize]);
                });
            }
            let b = neg.len() as u64;
            bernoulli_indices(pos.len() as u64 * b, q, &mut rng, |k| add(pos[(k / b) as usize], neg[(k % b) as usize]));
            adj.iter_mut().for_each(|nb| nb.sort_unstable());
            adj
        })
        .collect();
    Ok(CsbmInstance { labels, scores, adjacency })
}
