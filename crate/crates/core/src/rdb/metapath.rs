use std::collections::BTreeMap;

use serde::Serialize;

use super::graph::RelGraph;
use super::RdbError;

/// A self-looped typed relation sequence starting and ending at the labeled
/// node type. `legs` are edge-type indices into the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Metapath {
    pub id: usize,
    pub legs: Vec<usize>,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetapathOptions {
    /// Maximum number of legs. The default of 2 allows one intermediate
    /// node type (`F -> X -> F`); larger values enable multi-hop metapaths.
    pub max_legs: usize,
}

impl Default for MetapathOptions {
    fn default() -> Self {
        Self { max_legs: 2 }
    }
}

fn metapath_name(graph: &RelGraph, legs: &[usize]) -> String {
    let mut name = graph.node_types[graph.edge_types[legs[0]].src].name.clone();
    for &leg in legs {
        let et = &graph.edge_types[leg];
        name.push_str(&format!(" -[{}]-> {}", et.name, graph.node_types[et.dst].name));
    }
    name
}

pub fn enumerate_metapaths(graph: &RelGraph, labeled_type: &str) -> Result<Vec<Metapath>, RdbError> {
    enumerate_metapaths_with(graph, labeled_type, MetapathOptions::default())
}

/// All leg sequences of length `1..=max_legs` that leave and return to the
/// labeled type, ordered by name.
pub fn enumerate_metapaths_with(
    graph: &RelGraph,
    labeled_type: &str,
    opts: MetapathOptions,
) -> Result<Vec<Metapath>, RdbError> {
    let f = graph
        .node_type_index(labeled_type)
        .ok_or_else(|| RdbError::UnknownTable(labeled_type.to_string()))?;
    let mut found: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut stack: Vec<Vec<usize>> = graph.outgoing(f).map(|e| vec![e]).collect();
    while let Some(legs) = stack.pop() {
        let end = graph.edge_types[*legs.last().unwrap()].dst;
        if end == f {
            found.insert(metapath_name(graph, &legs), legs.clone());
        }
        if legs.len() < opts.max_legs {
            for e in graph.outgoing(end) {
                let mut next = legs.clone();
                next.push(e);
                stack.push(next);
            }
        }
    }
    Ok(found
        .into_iter()
        .enumerate()
        .map(|(id, (name, legs))| Metapath { id, legs, name })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ProjectedEdge {
    pub u: u32,
    pub v: u32,
    /// Number of distinct witness node sequences linking `u` and `v`.
    pub weight: u32,
}

/// Entity-entity edges induced by a metapath on the labeled type. Both
/// orientations of every pair are stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectedEdges {
    pub metapath: usize,
    pub num_nodes: usize,
    pub edges: Vec<ProjectedEdge>,
}

impl ProjectedEdges {
    /// Number of directed entries (twice the number of unordered pairs).
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn num_pairs(&self) -> usize {
        self.edges.len() / 2
    }

    /// Build from an arbitrary list of `(u, v, weight)` entries, applying
    /// self-pair removal, deduplication (max weight) and symmetric closure.
    pub fn from_entries(
        metapath: usize,
        num_nodes: usize,
        entries: impl IntoIterator<Item = (u32, u32, u32)>,
    ) -> Self {
        let mut map: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for (u, v, w) in entries {
            if u == v || w == 0 {
                continue;
            }
            for key in [(u, v), (v, u)] {
                let slot = map.entry(key).or_insert(0);
                *slot = (*slot).max(w);
            }
        }
        let edges = map
            .into_iter()
            .map(|((u, v), weight)| ProjectedEdge { u, v, weight })
            .collect();
        Self {
            metapath,
            num_nodes,
            edges,
        }
    }
}

/// Project a metapath onto its labeled type. Witnesses are counted on the
/// deduplicated (simple) version of every leg.
pub fn project_metapath(graph: &RelGraph, metapath: &Metapath) -> ProjectedEdges {
    let legs = &metapath.legs;
    let f = graph.edge_types[legs[0]].src;
    let n = graph.node_types[f].count;
    let mut counts: Vec<Vec<u32>> = legs
        .iter()
        .map(|&l| vec![0u32; graph.node_types[graph.edge_types[l].dst].count])
        .collect();
    let mut touched: Vec<Vec<u32>> = vec![Vec::new(); legs.len()];
    let mut entries = Vec::new();

    for u in 0..n {
        let mut frontier: Vec<(u32, u32)> = vec![(u as u32, 1)];
        for (li, &leg) in legs.iter().enumerate() {
            let adj = &graph.adjacency[leg];
            for &(x, c) in &frontier {
                let mut prev = u32::MAX;
                for &y in adj.neighbors(x as usize) {
                    if y == prev {
                        continue;
                    }
                    prev = y;
                    if counts[li][y as usize] == 0 {
                        touched[li].push(y);
                    }
                    counts[li][y as usize] += c;
                }
            }
            frontier.clear();
            touched[li].sort_unstable();
            for &y in &touched[li] {
                frontier.push((y, counts[li][y as usize]));
                counts[li][y as usize] = 0;
            }
            touched[li].clear();
        }
        for (v, w) in frontier {
            entries.push((u as u32, v, w));
        }
    }
    ProjectedEdges::from_entries(metapath.id, n, entries)
}
