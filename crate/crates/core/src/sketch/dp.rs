use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::typed::TypedGraph;
use super::SketchError;
use crate::hashing;

const DENSE_SIGN: u64 = 0x6465_6e73;
const TS_BUCKET: u64 = 0x7473_6275;
const TS_SIGN: u64 = 0x7473_7367;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchMode {
    Dense,
    Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub width: usize,
    pub horizon: usize,
    /// `a_ℓ` for `ℓ = 1..=horizon`; empty means all ones.
    #[serde(default)]
    pub length_weights: Vec<f64>,
    /// Restrict the endpoint weight `β` to nodes of this type.
    #[serde(default)]
    pub endpoint_type: Option<usize>,
    pub mode: SketchMode,
    pub seed: u64,
}

impl SketchConfig {
    pub fn new(mode: SketchMode, width: usize, horizon: usize, seed: u64) -> Self {
        Self {
            width,
            horizon,
            length_weights: Vec::new(),
            endpoint_type: None,
            mode,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SketchError> {
        if self.width == 0 || self.horizon == 0 {
            return Err(SketchError::InvalidConfig("width and horizon must be positive".into()));
        }
        if !self.length_weights.is_empty() && self.length_weights.len() != self.horizon {
            return Err(SketchError::InvalidConfig("one length weight per layer".into()));
        }
        if self.length_weights.iter().any(|a| !a.is_finite()) {
            return Err(SketchError::InvalidConfig("length weights must be finite".into()));
        }
        Ok(())
    }

    /// `a_ℓ`, 1-based.
    pub fn length_weight(&self, layer: usize) -> f64 {
        self.length_weights.get(layer - 1).copied().unwrap_or(1.0)
    }

    pub fn beta(&self, graph: &TypedGraph, v: usize) -> f64 {
        match self.endpoint_type {
            Some(t) if graph.node_type(v) != t => 0.0,
            _ => 1.0,
        }
    }

    /// Stable hex digest of every field that affects the output.
    pub fn fingerprint(&self) -> String {
        let mut words = vec![
            matches!(self.mode, SketchMode::Tensor) as u64,
            self.width as u64,
            self.horizon as u64,
            self.endpoint_type.map_or(u64::MAX, |t| t as u64),
            self.seed,
        ];
        words.extend((1..=self.horizon).map(|l| self.length_weight(l).to_bits()));
        format!("{:016x}", hashing::mix(&words))
    }
}

/// Rademacher code `r_k^{(ℓ)}(τ)`, keyed on `(seed, k, ℓ, τ)`.
#[inline]
pub fn dense_sign(seed: u64, k: usize, layer: usize, token: usize) -> f64 {
    hashing::sign(&[seed, DENSE_SIGN, k as u64, layer as u64, token as u64])
}

/// TensorSketch bucket `h^{(ℓ)}(τ) ∈ [0, d)`.
#[inline]
pub fn tensor_bucket(seed: u64, width: usize, layer: usize, token: usize) -> usize {
    hashing::bucket(&[seed, TS_BUCKET, layer as u64, token as u64], width)
}

/// TensorSketch sign `s^{(ℓ)}(τ)`.
#[inline]
pub fn tensor_sign(seed: u64, layer: usize, token: usize) -> f64 {
    hashing::sign(&[seed, TS_SIGN, layer as u64, token as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathFeatureMatrix {
    pub sources: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
    pub fingerprint: String,
}

impl PathFeatureMatrix {
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// Per-layer lookup of the `d` values a token contributes: signs for the
/// dense code, or (bucket shift, sign) for TensorSketch.
enum LayerCode {
    Dense(Vec<Vec<f64>>),
    Tensor(Vec<(usize, f64)>),
}

fn layer_codes(graph: &TypedGraph, cfg: &SketchConfig) -> Vec<LayerCode> {
    let d = cfg.width;
    (1..=cfg.horizon)
        .map(|l| match cfg.mode {
            SketchMode::Dense => LayerCode::Dense(
                (0..graph.num_tokens())
                    .map(|t| (0..d).map(|k| dense_sign(cfg.seed, k, l, t)).collect())
                    .collect(),
            ),
            SketchMode::Tensor => LayerCode::Tensor(
                (0..graph.num_tokens())
                    .map(|t| (tensor_bucket(cfg.seed, d, l, t), tensor_sign(cfg.seed, l, t)))
                    .collect(),
            ),
        })
        .collect()
}

/// Reusable per-thread DP state: dense `n × d` buffers with touched lists.
struct Workspace {
    cur: Vec<f64>,
    next: Vec<f64>,
    cur_nodes: Vec<usize>,
    next_nodes: Vec<usize>,
    in_next: Vec<bool>,
}

impl Workspace {
    fn new(n: usize, d: usize) -> Self {
        Self {
            cur: vec![0.0; n * d],
            next: vec![0.0; n * d],
            cur_nodes: Vec::new(),
            next_nodes: Vec::new(),
            in_next: vec![false; n],
        }
    }
}

fn sketch_one(graph: &TypedGraph, cfg: &SketchConfig, codes: &[LayerCode], s: usize, ws: &mut Workspace) -> Vec<f64> {
    let d = cfg.width;
    let mut z = vec![0.0; d];
    for &u in &ws.cur_nodes {
        ws.cur[u * d..(u + 1) * d].iter_mut().for_each(|x| *x = 0.0);
    }
    ws.cur_nodes.clear();
    match cfg.mode {
        // h^0(v) = 1{v = s} in every coordinate
        SketchMode::Dense => ws.cur[s * d..(s + 1) * d].iter_mut().for_each(|x| *x = 1.0),
        // h^0 = e_0 at the source: bucket offset 0, sign +1
        SketchMode::Tensor => ws.cur[s * d] = 1.0,
    }
    ws.cur_nodes.push(s);

    for (li, code) in codes.iter().enumerate() {
        for &u in &ws.cur_nodes {
            let hu = &ws.cur[u * d..(u + 1) * d];
            for &(v, tok) in graph.out_edges(u) {
                let v = v as usize;
                if !ws.in_next[v] {
                    ws.in_next[v] = true;
                    ws.next_nodes.push(v);
                }
                let hv = &mut ws.next[v * d..(v + 1) * d];
                match code {
                    LayerCode::Dense(signs) => {
                        for ((x, &h), &r) in hv.iter_mut().zip(hu).zip(&signs[tok as usize]) {
                            *x += r * h;
                        }
                    }
                    LayerCode::Tensor(hs) => {
                        let (shift, sign) = hs[tok as usize];
                        for (j, &h) in hu.iter().enumerate() {
                            let t = if j + shift >= d { j + shift - d } else { j + shift };
                            hv[t] += sign * h;
                        }
                    }
                }
            }
        }
        for &u in &ws.cur_nodes {
            ws.cur[u * d..(u + 1) * d].iter_mut().for_each(|x| *x = 0.0);
        }
        std::mem::swap(&mut ws.cur, &mut ws.next);
        std::mem::swap(&mut ws.cur_nodes, &mut ws.next_nodes);
        ws.next_nodes.clear();
        ws.cur_nodes.sort_unstable();
        let a = cfg.length_weight(li + 1);
        for &v in &ws.cur_nodes {
            ws.in_next[v] = false;
            let b = cfg.beta(graph, v);
            if b != 0.0 {
                for (zk, &h) in z.iter_mut().zip(&ws.cur[v * d..(v + 1) * d]) {
                    *zk += a * b * h;
                }
            }
        }
    }
    z
}

fn run(graph: &TypedGraph, cfg: &SketchConfig, sources: &[usize]) -> Result<PathFeatureMatrix, SketchError> {
    cfg.validate()?;
    if let Some(&bad) = sources.iter().find(|&&s| s >= graph.num_nodes()) {
        return Err(SketchError::UnknownSource(bad));
    }
    let codes = layer_codes(graph, cfg);
    let n = graph.num_nodes();
    let rows = sources
        .par_iter()
        .map_init(
            || Workspace::new(n, cfg.width),
            |ws, &s| sketch_one(graph, cfg, &codes, s, ws),
        )
        .collect();
    Ok(PathFeatureMatrix {
        sources: sources.to_vec(),
        rows,
        fingerprint: cfg.fingerprint(),
    })
}

/// Dense Rademacher sketch: `z_k(s) = Σ_ℓ a_ℓ Σ_v β(v) h^{(ℓ)}(v)` with
/// `h^{(ℓ)}(v) = Σ_{u→v} r_k^{(ℓ)}(τ) h^{(ℓ−1)}(u)`.
pub fn dense_sketch(graph: &TypedGraph, cfg: &SketchConfig, sources: &[usize]) -> Result<PathFeatureMatrix, SketchError> {
    if cfg.mode != SketchMode::Dense {
        return Err(SketchError::InvalidConfig("dense_sketch requires mode = dense".into()));
    }
    run(graph, cfg, sources)
}

/// TensorSketch of the typed-path bag, computed by shifting the bucket
/// offset and multiplying the sign at every layer.
pub fn tensor_sketch(graph: &TypedGraph, cfg: &SketchConfig, sources: &[usize]) -> Result<PathFeatureMatrix, SketchError> {
    if cfg.mode != SketchMode::Tensor {
        return Err(SketchError::InvalidConfig("tensor_sketch requires mode = tensor".into()));
    }
    run(graph, cfg, sources)
}

pub fn sketch(graph: &TypedGraph, cfg: &SketchConfig, sources: &[usize]) -> Result<PathFeatureMatrix, SketchError> {
    run(graph, cfg, sources)
}

/// `Ψ_s`: token sequence → `a_{|σ|}` × β-weighted walk count.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PathBag {
    pub weights: BTreeMap<Vec<u32>, f64>,
}

impl PathBag {
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn inner(&self, other: &PathBag) -> f64 {
        self.weights
            .iter()
            .filter_map(|(k, w)| other.weights.get(k).map(|v| w * v))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum()
    }
}

pub const DEFAULT_ORACLE_CAP: usize = 1_000_000;

/// Exact typed-path bag from `source` by layer-wise expansion of
/// `(node, sequence)` states. Fails once the number of enumerated walks
/// exceeds `cap`.
pub fn path_bag_oracle(
    graph: &TypedGraph,
    source: usize,
    cfg: &SketchConfig,
    cap: usize,
) -> Result<PathBag, SketchError> {
    cfg.validate()?;
    let mut frontier: BTreeMap<(usize, Vec<u32>), f64> = BTreeMap::new();
    frontier.insert((source, Vec::new()), 1.0);
    let mut bag = BTreeMap::new();
    let mut walks = 0usize;
    for layer in 1..=cfg.horizon {
        let mut next: BTreeMap<(usize, Vec<u32>), f64> = BTreeMap::new();
        for ((u, seq), count) in &frontier {
            for &(v, tok) in graph.out_edges(*u) {
                walks += *count as usize;
                if walks > cap {
                    return Err(SketchError::OracleTooLarge { cap });
                }
                let mut s = seq.clone();
                s.push(tok);
                *next.entry((v as usize, s)).or_insert(0.0) += count;
            }
        }
        let a = cfg.length_weight(layer);
        for ((v, seq), count) in &next {
            let w = a * cfg.beta(graph, *v) * count;
            if w != 0.0 {
                *bag.entry(seq.clone()).or_insert(0.0) += w;
            }
        }
        frontier = next;
    }
    bag.retain(|_, w: &mut f64| *w != 0.0);
    Ok(PathBag { weights: bag })
}

/// `(1/d) z(s)·z(s')`.
pub fn kernel_estimate(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> TypedGraph {
        // s=0 -τ1-> v=1 -τ2-> w=2
        TypedGraph::from_edges(vec![0, 1, 2], &[(0, 1, 0), (1, 2, 1)])
    }

    #[test]
    fn edgeless_graph_gives_zero() {
        let g = TypedGraph::from_edges(vec![0, 0], &[]);
        let cfg = SketchConfig::new(SketchMode::Dense, 8, 3, 1);
        let z = dense_sketch(&g, &cfg, &[0]).unwrap();
        assert!(z.rows[0].iter().all(|&x| x == 0.0));
        assert!(path_bag_oracle(&g, 0, &cfg, 10).unwrap().is_empty());
        let t = tensor_sketch(&g, &SketchConfig::new(SketchMode::Tensor, 8, 3, 1), &[0]).unwrap();
        assert!(t.rows[0].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn chain_bag_and_symbolic_expansion() {
        let g = chain();
        let cfg = SketchConfig::new(SketchMode::Dense, 16, 2, 42);
        let bag = path_bag_oracle(&g, 0, &cfg, 100).unwrap();
        let expect: BTreeMap<Vec<u32>, f64> = [(vec![0], 1.0), (vec![0, 1], 1.0)].into_iter().collect();
        assert_eq!(bag.weights, expect);
        let z = dense_sketch(&g, &cfg, &[0]).unwrap();
        for k in 0..16 {
            let r1 = dense_sign(42, k, 1, 0);
            let r2 = dense_sign(42, k, 2, 1);
            assert_eq!(z.rows[0][k], r1 + r1 * r2);
        }
    }

    #[test]
    fn parallel_edges_multiply() {
        let g = TypedGraph::from_edges(vec![0, 1], &[(0, 1, 0), (0, 1, 0)]);
        let cfg = SketchConfig::new(SketchMode::Dense, 4, 1, 0);
        let bag = path_bag_oracle(&g, 0, &cfg, 100).unwrap();
        assert_eq!(bag.weights.get(&vec![0]), Some(&2.0));
    }

    #[test]
    fn single_sequence_hits_one_bucket() {
        let g = TypedGraph::from_edges(vec![0, 1], &[(0, 1, 0), (0, 1, 0), (0, 1, 0)]);
        let cfg = SketchConfig::new(SketchMode::Tensor, 32, 1, 9);
        let y = tensor_sketch(&g, &cfg, &[0]).unwrap();
        let nz: Vec<f64> = y.rows[0].iter().copied().filter(|&x| x != 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(nz[0].abs(), 3.0);
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let g = TypedGraph::from_edges(vec![0, 0], &[(0, 1, 0), (1, 0, 0)]);
        let cfg = SketchConfig::new(SketchMode::Dense, 4, 3, 0);
        assert!(matches!(path_bag_oracle(&g, 0, &cfg, 2), Err(SketchError::OracleTooLarge { .. })));
    }

    #[test]
    fn endpoint_type_restriction() {
        let g = chain();
        let mut cfg = SketchConfig::new(SketchMode::Dense, 4, 2, 0);
        cfg.endpoint_type = Some(2);
        let bag = path_bag_oracle(&g, 0, &cfg, 100).unwrap();
        assert_eq!(bag.weights.len(), 1);
        assert!(bag.weights.contains_key(&vec![0, 1]));
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let cfg = SketchConfig::new(SketchMode::Tensor, 4, 1, 0);
        assert!(dense_sketch(&chain(), &cfg, &[0]).is_err());
        assert!(dense_sketch(&chain(), &SketchConfig::new(SketchMode::Dense, 4, 1, 0), &[7]).is_err());
    }
}
