use std::collections::BTreeMap;

/// Directed typed edge `(src, dst, token)`.
pub type Edge = (usize, usize, usize);

/// Bag of token sequences of all walks of length `1..=t` starting at
/// `source`, each weighted by `a[len - 1] * beta[end]`. Enumerated
/// recursively, one walk at a time.
pub fn path_bag(edges: &[Edge], source: usize, t: usize, a: &[f64], beta: &[f64]) -> BTreeMap<Vec<usize>, f64> {
    fn walk(
        edges: &[Edge],
        at: usize,
        seq: &mut Vec<usize>,
        t: usize,
        a: &[f64],
        beta: &[f64],
        bag: &mut BTreeMap<Vec<usize>, f64>,
    ) {
        if seq.len() == t {
            return;
        }
        for &(u, v, tok) in edges {
            if u != at {
                continue;
            }
            seq.push(tok);
            *bag.entry(seq.clone()).or_insert(0.0) += a[seq.len() - 1] * beta[v];
            walk(edges, v, seq, t, a, beta, bag);
            seq.pop();
        }
    }
    let mut bag = BTreeMap::new();
    walk(edges, source, &mut Vec::new(), t, a, beta, &mut bag);
    bag.retain(|_, w| *w != 0.0);
    bag
}

pub fn inner(x: &BTreeMap<Vec<usize>, f64>, y: &BTreeMap<Vec<usize>, f64>) -> f64 {
    x.iter().filter_map(|(k, w)| y.get(k).map(|v| w * v)).sum()
}

/// `Σ_σ Ψ[σ] Π_ℓ r(ℓ, σ_ℓ)` for a caller-supplied sign function with
/// 1-based layer index.
pub fn signed_expansion(bag: &BTreeMap<Vec<usize>, f64>, r: impl Fn(usize, usize) -> f64) -> f64 {
    bag.iter()
        .map(|(seq, w)| w * seq.iter().enumerate().map(|(l, &tok)| r(l + 1, tok)).product::<f64>())
        .sum()
}
