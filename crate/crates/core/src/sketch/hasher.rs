use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::typed::TypedGraph;
use crate::hashing::derive_rng;

const HASHER_TAG: u64 = 0x7361_6765;

/// Per-type mean of incoming neighbor vectors, one block per incoming
/// token, appended after the node's own vector. Empty neighborhoods
/// contribute zeros.
pub fn mean_aggregate(graph: &TypedGraph, h: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let plan = InputPlan::new(graph, h);
    (0..graph.num_nodes())
        .into_par_iter()
        .map(|v| plan.input(graph, h, v))
        .collect()
}

/// For each node type: which tokens feed it and at which offset.
struct InputPlan {
    dims: Vec<usize>,
    blocks: Vec<Vec<(u32, usize)>>,
    fan_in: Vec<usize>,
}

impl InputPlan {
    fn new(graph: &TypedGraph, h: &[Vec<f64>]) -> Self {
        let nt = graph.num_node_types();
        let dims: Vec<usize> = (0..nt)
            .map(|t| {
                let c = graph.type_count(t);
                if c == 0 {
                    0
                } else {
                    h[graph.type_offset(t)].len()
                }
            })
            .collect();
        let mut blocks = vec![Vec::new(); nt];
        let mut fan_in = dims.clone();
        for (id, tok) in graph.tokens().iter().enumerate() {
            blocks[tok.head].push((id as u32, fan_in[tok.head]));
            fan_in[tok.head] += dims[tok.tail];
        }
        Self { dims, blocks, fan_in }
    }

    fn input(&self, graph: &TypedGraph, h: &[Vec<f64>], v: usize) -> Vec<f64> {
        let t = graph.node_type(v);
        let mut x = vec![0.0; self.fan_in[t]];
        x[..self.dims[t]].copy_from_slice(&h[v]);
        for &(tok, off) in &self.blocks[t] {
            let tail_dim = self.dims[graph.token(tok).tail];
            let mut count = 0usize;
            for &(u, tu) in graph.in_edges(v) {
                if tu != tok {
                    continue;
                }
                count += 1;
                for (a, b) in x[off..off + tail_dim].iter_mut().zip(&h[u as usize]) {
                    *a += b;
                }
            }
            if count > 0 {
                x[off..off + tail_dim].iter_mut().for_each(|a| *a /= count as f64);
            }
        }
        x
    }
}

/// Frozen random message passing: per layer, concatenate each node's vector
/// with per-token neighbor means, multiply by a fixed Gaussian matrix
/// (scaled `1/√fan_in`, one per layer and node type) and apply `max(0, ·)`.
/// `layers = 0` returns the input unchanged.
pub fn random_mp_hasher(
    graph: &TypedGraph,
    features: &[Vec<f64>],
    layers: usize,
    width: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut h = features.to_vec();
    for layer in 0..layers {
        let plan = InputPlan::new(graph, &h);
        let weights: Vec<Vec<f64>> = (0..graph.num_node_types())
            .map(|t| {
                let fan = plan.fan_in[t];
                let mut rng = derive_rng(seed, &[HASHER_TAG, layer as u64, t as u64]);
                let scale = if fan > 0 { 1.0 / (fan as f64).sqrt() } else { 0.0 };
                (0..width * fan)
                    .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
                    .collect()
            })
            .collect();
        h = (0..graph.num_nodes())
            .into_par_iter()
            .map(|v| {
                let x = plan.input(graph, &h, v);
                let w = &weights[graph.node_type(v)];
                let fan = x.len();
                (0..width)
                    .map(|o| {
                        let row = &w[o * fan..(o + 1) * fan];
                        row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().max(0.0)
                    })
                    .collect()
            })
            .collect();
    }
    h
}
