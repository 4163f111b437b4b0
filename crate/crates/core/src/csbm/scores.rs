use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::{CsbmInstance, CsbmSpec, CSBM_STREAM};
use super::CsbmError;
use crate::hashing::derive_rng;

/// Per-neighbor MAP message: `clip(s, −γ, γ)`, sign-flipped for γ < 0.
pub fn phi_max(s: f64, gamma: f64) -> f64 {
    let g = gamma.abs();
    gamma.signum() * s.clamp(-g, g)
}

fn log_prior(pi: f64) -> Result<f64, CsbmError> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(CsbmError::InvalidSpec(format!("scoring needs a prior in (0, 1), got {pi}")));
    }
    Ok((pi / (1.0 - pi)).ln())
}

fn aggregate(inst: &CsbmInstance, pi: f64, messages: impl Fn(usize, f64) -> f64) -> Result<Vec<f64>, CsbmError> {
    let prior = log_prior(pi)?;
    let mut z: Vec<f64> = inst.scores.iter().map(|s| prior + s).collect();
    for (m, adj) in inst.adjacency.iter().enumerate() {
        let msg: Vec<f64> = inst.scores.iter().map(|&s| messages(m, s)).collect();
        for (v, nb) in adj.iter().enumerate() {
            z[v] += nb.iter().map(|&u| msg[u as usize]).sum::<f64>();
        }
    }
    Ok(z)
}

/// Gated score `ln(π/(1−π)) + s + Σ_m A_m φ_max(s; γ_m)`.
pub fn map_scores(inst: &CsbmInstance, gammas: &[f64], pi: f64) -> Result<Vec<f64>, CsbmError> {
    if gammas.len() != inst.adjacency.len() {
        return Err(CsbmError::LengthMismatch { expected: inst.adjacency.len(), got: gammas.len() });
    }
    aggregate(inst, pi, |m, s| phi_max(s, gammas[m]))
}

/// Linear score `ln(π/(1−π)) + s + Σ_m A_m s`.
pub fn linear_scores(inst: &CsbmInstance, pi: f64) -> Result<Vec<f64>, CsbmError> {
    aggregate(inst, pi, |_, s| s)
}

/// sign(0) counts as +1.
pub fn predict(z: f64) -> i8 {
    if z >= 0.0 {
        1
    } else {
        -1
    }
}

pub fn misclass_rate(scores: &[f64], labels: &[i8]) -> Result<f64, CsbmError> {
    if scores.len() != labels.len() {
        return Err(CsbmError::LengthMismatch { expected: labels.len(), got: scores.len() });
    }
    if scores.is_empty() {
        return Ok(0.0);
    }
    let wrong = scores.iter().zip(labels).filter(|&(&z, &y)| predict(z) != y).count();
    Ok(wrong as f64 / scores.len() as f64)
}

/// Error restricted to the nodes in `subset`.
pub fn misclass_on(scores: &[f64], labels: &[i8], subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    subset.iter().filter(|&&v| predict(scores[v]) != labels[v]).count() as f64 / subset.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaAlpha {
    pub gamma: f64,
    pub alpha: f64,
}

/// `γ = ln(p/q)` and `α = (p−q)/(p+q)`; the latter equals `tanh(γ/2)`.
pub fn gamma_alpha(p: f64, q: f64) -> Result<GammaAlpha, CsbmError> {
    if !(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0) {
        return Err(CsbmError::InvalidSpec(format!("edge probabilities must lie in (0, 1): p={p}, q={q}")));
    }
    Ok(GammaAlpha { gamma: (p / q).ln(), alpha: (p - q) / (p + q) })
}

/// `(Σ d·α·δ)² / Σ d·σ²` over `(d, α)` terms (cross-metapath factor 1).
pub fn rho_lin(terms: &[(f64, f64)], delta: f64, sigma2: f64) -> f64 {
    let den: f64 = terms.iter().map(|(d, _)| d * sigma2).sum();
    if den == 0.0 {
        return 0.0;
    }
    let num: f64 = terms.iter().map(|(d, a)| d * a * delta).sum();
    num * num / den
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetapathSnr {
    pub gamma: f64,
    pub alpha: f64,
    pub degree: f64,
    /// Max over classes of Var(φ_max(ψ; γ) | Y), by Monte Carlo.
    pub sigma_tilde2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub rho_lin: f64,
    /// 0 when every gate is 0.
    pub rho_gate: f64,
    pub delta: f64,
    /// Unit class variance of ψ plus δ²/4.
    pub sigma2: f64,
    pub metapaths: Vec<MetapathSnr>,
}

fn variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

pub fn snr(spec: &CsbmSpec, mc_samples: usize, seed: u64) -> Result<SnrReport, CsbmError> {
    if mc_samples < 1000 {
        return Err(CsbmError::TooFewSamples(mc_samples));
    }
    let probs = spec.resolved()?;
    let degrees = spec.degrees()?;
    let delta = spec.delta;
    let sigma2 = 1.0 + delta * delta / 4.0;
    // common noise for both classes and all metapaths
    let mut rng = derive_rng(seed, &[CSBM_STREAM, 4]);
    let noise: Vec<f64> = (0..mc_samples).map(|_| StandardNormal.sample(&mut rng)).collect();
    let metapaths: Vec<MetapathSnr> = probs
        .iter()
        .zip(&degrees)
        .map(|(&(p, q), &degree)| {
            let GammaAlpha { gamma, alpha } = gamma_alpha(p, q)?;
            let sigma_tilde2 = [1.0, -1.0]
                .iter()
                .map(|y| {
                    let v: Vec<f64> = noise.iter().map(|z| phi_max(y * delta / 2.0 + z, gamma)).collect();
                    variance(&v)
                })
                .fold(0.0, f64::max);
            Ok(MetapathSnr { gamma, alpha, degree, sigma_tilde2 })
        })
        .collect::<Result<_, CsbmError>>()?;
    let terms: Vec<(f64, f64)> = metapaths.iter().map(|m| (m.degree, m.alpha)).collect();
    let num: f64 = metapaths.iter().map(|m| m.degree * m.alpha * m.gamma).sum();
    let den: f64 = metapaths.iter().map(|m| m.degree * m.sigma_tilde2).sum();
    let rho_gate = if metapaths.iter().all(|m| m.gamma == 0.0) || den == 0.0 { 0.0 } else { num * num / den };
    Ok(SnrReport { rho_lin: rho_lin(&terms, delta, sigma2), rho_gate, delta, sigma2, metapaths })
}

/// Gate estimates from the labels of `labeled` nodes: add-one smoothed
/// same-label and cross-label edge rates over labeled pairs, `ln(p̂/q̂)`.
/// A metapath with no labeled edge gets γ̂ = 0.
pub fn estimate_gamma(inst: &CsbmInstance, labeled: &[usize]) -> Vec<f64> {
    let mut mask = vec![false; inst.n()];
    labeled.iter().for_each(|&v| mask[v] = true);
    let npos = mask.iter().zip(&inst.labels).filter(|&(&m, &y)| m && y > 0).count() as f64;
    let nneg = mask.iter().filter(|&&m| m).count() as f64 - npos;
    let same_pairs = npos * (npos - 1.0) / 2.0 + nneg * (nneg - 1.0) / 2.0;
    let diff_pairs = npos * nneg;
    inst.adjacency
        .iter()
        .map(|adj| {
            let (mut same, mut diff) = (0.0, 0.0);
            for (v, nb) in adj.iter().enumerate().filter(|(v, _)| mask[*v]) {
                for &u in nb.iter().filter(|&&u| u as usize > v && mask[u as usize]) {
                    if inst.labels[u as usize] == inst.labels[v] {
                        same += 1.0;
                    } else {
                        diff += 1.0;
                    }
                }
            }
            if same + diff == 0.0 {
                return 0.0;
            }
            (((same + 1.0) / (same_pairs + 2.0)) / ((diff + 1.0) / (diff_pairs + 2.0))).ln()
        })
        .collect()
}
