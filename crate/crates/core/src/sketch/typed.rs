use std::collections::HashMap;

use serde::Serialize;

use crate::rdb::RelGraph;

/// `(tail node type, edge type, head node type)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeToken {
    pub tail: usize,
    pub edge_type: usize,
    pub head: usize,
}

/// Homogeneous view of a typed graph: global node ids, per-node type, and
/// outgoing `(head, token id)` lists. Token ids are dense and assigned in
/// first-seen order over edge types.
#[derive(Debug, Clone)]
pub struct TypedGraph {
    node_type: Vec<usize>,
    /// First global id of every node type (length = types + 1).
    type_offsets: Vec<usize>,
    tokens: Vec<EdgeToken>,
    offsets: Vec<usize>,
    out: Vec<(u32, u32)>,
    in_offsets: Vec<usize>,
    incoming: Vec<(u32, u32)>,
}

impl TypedGraph {
    /// `node_type[v]` gives each global node's type; edges are
    /// `(tail, head, edge type)`.
    pub fn from_edges(node_type: Vec<usize>, edges: &[(usize, usize, usize)]) -> Self {
        let n_types = node_type.iter().copied().max().map_or(0, |m| m + 1);
        Self::build(n_types, node_type, edges)
    }

    fn build(n_types: usize, node_type: Vec<usize>, edges: &[(usize, usize, usize)]) -> Self {
        let mut type_offsets = vec![0; n_types + 1];
        for &t in &node_type {
            type_offsets[t + 1] += 1;
        }
        for t in 0..n_types {
            type_offsets[t + 1] += type_offsets[t];
        }
        let mut intern: HashMap<EdgeToken, u32> = HashMap::new();
        let mut tokens = Vec::new();
        let mut triples = Vec::with_capacity(edges.len());
        for &(u, v, et) in edges {
            let tok = EdgeToken {
                tail: node_type[u],
                edge_type: et,
                head: node_type[v],
            };
            let id = *intern.entry(tok).or_insert_with(|| {
                tokens.push(tok);
                (tokens.len() - 1) as u32
            });
            triples.push((u as u32, v as u32, id));
        }
        let n = node_type.len();
        let (offsets, out) = csr(n, triples.iter().map(|&(u, v, t)| (u, v, t)));
        let (in_offsets, incoming) = csr(n, triples.iter().map(|&(u, v, t)| (v, u, t)));
        Self {
            node_type,
            type_offsets,
            tokens,
            offsets,
            out,
            in_offsets,
            incoming,
        }
    }

    /// Flatten a relational graph; node type `t` row `r` gets global id
    /// `type_offset(t) + r`.
    pub fn from_rel(graph: &RelGraph) -> Self {
        let mut node_type = Vec::with_capacity(graph.total_nodes());
        let mut base = Vec::with_capacity(graph.node_types.len());
        for (t, nt) in graph.node_types.iter().enumerate() {
            base.push(node_type.len());
            node_type.extend(std::iter::repeat_n(t, nt.count));
        }
        let mut edges = Vec::with_capacity(graph.total_edges());
        for (et, (meta, adj)) in graph.edge_types.iter().zip(&graph.adjacency).enumerate() {
            for (u, v) in adj.pairs() {
                edges.push((base[meta.src] + u as usize, base[meta.dst] + v as usize, et));
            }
        }
        Self::build(graph.node_types.len(), node_type, &edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.node_type.len()
    }

    pub fn num_edges(&self) -> usize {
        self.out.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn num_node_types(&self) -> usize {
        self.type_offsets.len() - 1
    }

    pub fn token(&self, id: u32) -> EdgeToken {
        self.tokens[id as usize]
    }

    pub fn node_type(&self, v: usize) -> usize {
        self.node_type[v]
    }

    pub fn type_offset(&self, t: usize) -> usize {
        self.type_offsets[t]
    }

    pub fn type_count(&self, t: usize) -> usize {
        self.type_offsets[t + 1] - self.type_offsets[t]
    }

    /// `(head, token)` pairs leaving `u`, sorted.
    pub fn out_edges(&self, u: usize) -> &[(u32, u32)] {
        &self.out[self.offsets[u]..self.offsets[u + 1]]
    }

    /// `(tail, token)` pairs entering `v`, sorted.
    pub fn in_edges(&self, v: usize) -> &[(u32, u32)] {
        &self.incoming[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    /// All edges as `(tail, head, token)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.num_nodes())
            .flat_map(move |u| self.out_edges(u).iter().map(move |&(v, t)| (u, v as usize, t as usize)))
    }

    /// Node type of each token's tail and head, and its edge type.
    pub fn tokens(&self) -> &[EdgeToken] {
        &self.tokens
    }
}

fn csr(n: usize, items: impl Iterator<Item = (u32, u32, u32)>) -> (Vec<usize>, Vec<(u32, u32)>) {
    let mut items: Vec<_> = items.collect();
    items.sort_unstable();
    let mut offsets = vec![0; n + 1];
    for &(u, _, _) in &items {
        offsets[u as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, items.into_iter().map(|(_, v, t)| (v, t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_injective() {
        let g = TypedGraph::from_edges(vec![0, 0, 1], &[(0, 2, 0), (1, 2, 0), (2, 0, 1), (0, 1, 2)]);
        assert_eq!(g.num_tokens(), 3);
        let t0 = g.out_edges(0)[1].1;
        let t1 = g.out_edges(1)[0].1;
        assert_eq!(t0, t1);
        assert_eq!(g.token(t0), EdgeToken { tail: 0, edge_type: 0, head: 1 });
        assert_eq!(g.in_edges(2).len(), 2);
        assert_eq!(g.type_offset(1), 2);
    }
}
