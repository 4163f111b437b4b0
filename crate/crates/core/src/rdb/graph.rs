use serde::Serialize;

use super::database::Database;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeType {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeOrigin {
    Fk,
    FkReverse,
    FkPair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeTypeMeta {
    pub name: String,
    pub src: usize,
    pub dst: usize,
    pub origin: EdgeOrigin,
    /// Table that owns the FK column(s).
    pub table: String,
    /// One column for FK edges, `[from, to]` for FK-pair edges.
    pub columns: Vec<String>,
    /// Relation id shared by an edge type and its reverse.
    pub relation: usize,
    /// Index of the reverse edge type.
    pub reverse: usize,
}

/// Compressed sparse adjacency from source-type nodes to target-type nodes.
/// Neighbor lists are sorted; parallel edges are kept.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    pub fn from_pairs(n_src: usize, mut pairs: Vec<(u32, u32)>) -> Self {
        pairs.sort_unstable();
        let mut offsets = vec![0usize; n_src + 1];
        for &(u, _) in &pairs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n_src {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.into_iter().map(|(_, v)| v).collect();
        Csr { offsets, targets }
    }

    pub fn num_sources(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.num_sources())
            .flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u as u32, v)))
    }

    pub fn transpose(&self, n_dst: usize) -> Csr {
        Csr::from_pairs(n_dst, self.pairs().map(|(u, v)| (v, u)).collect())
    }
}

/// Typed entity graph of a relational database: one node type per table,
/// one node per row, directed typed adjacency per edge type.
#[derive(Debug, Clone)]
pub struct RelGraph {
    pub node_types: Vec<NodeType>,
    pub edge_types: Vec<EdgeTypeMeta>,
    pub adjacency: Vec<Csr>,
    pub num_relations: usize,
}

impl RelGraph {
    pub fn node_type_index(&self, name: &str) -> Option<usize> {
        self.node_types.iter().position(|t| t.name == name)
    }

    pub fn edge_type_index(&self, name: &str) -> Option<usize> {
        self.edge_types.iter().position(|t| t.name == name)
    }

    /// Edge types whose source is `node_type`.
    pub fn outgoing(&self, node_type: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.edge_types.len()).filter(move |&e| self.edge_types[e].src == node_type)
    }

    pub fn incident_edge_types(&self, node_type: usize) -> usize {
        self.edge_types
            .iter()
            .filter(|e| e.src == node_type || e.dst == node_type)
            .count()
    }

    pub fn total_nodes(&self) -> usize {
        self.node_types.iter().map(|t| t.count).sum()
    }

    pub fn total_edges(&self) -> usize {
        self.adjacency.iter().map(Csr::num_edges).sum()
    }

    /// Forward FK edges `(table, column) -> [(row, referenced row)]`, in
    /// edge-type order.
    pub fn fk_edges(&self) -> Vec<((String, String), Vec<(u32, u32)>)> {
        self.edge_types
            .iter()
            .zip(&self.adjacency)
            .filter(|(m, _)| m.origin == EdgeOrigin::Fk)
            .map(|(m, a)| ((m.table.clone(), m.columns[0].clone()), a.pairs().collect()))
            .collect()
    }

    fn push_relation(
        &mut self,
        forward: EdgeTypeMeta,
        backward: EdgeTypeMeta,
        pairs: Vec<(u32, u32)>,
    ) {
        let fwd_idx = self.edge_types.len();
        let n_src = self.node_types[forward.src].count;
        let n_dst = self.node_types[forward.dst].count;
        let adj = Csr::from_pairs(n_src, pairs);
        let rev = adj.transpose(n_dst);
        let relation = self.num_relations;
        self.num_relations += 1;
        self.edge_types.push(EdgeTypeMeta {
            relation,
            reverse: fwd_idx + 1,
            ..forward
        });
        self.edge_types.push(EdgeTypeMeta {
            relation,
            reverse: fwd_idx,
            ..backward
        });
        self.adjacency.push(adj);
        self.adjacency.push(rev);
    }
}

/// One node per row per table; forward and reverse edge types for every FK
/// column. Null and dangling FK cells produce no edge.
pub fn build_graph(db: &Database) -> RelGraph {
    let mut g = RelGraph {
        node_types: db
            .tables
            .iter()
            .map(|t| NodeType {
                name: t.name.clone(),
                count: t.n_rows,
            })
            .collect(),
        edge_types: Vec::new(),
        adjacency: Vec::new(),
        num_relations: 0,
    };
    for (ti, table) in db.tables.iter().enumerate() {
        for link in &table.foreign_keys {
            let pairs: Vec<(u32, u32)> = link
                .targets
                .iter()
                .enumerate()
                .filter_map(|(r, t)| t.map(|t| (r as u32, t as u32)))
                .collect();
            let name = format!("{}.{}", table.name, link.column);
            let fwd = EdgeTypeMeta {
                name: name.clone(),
                src: ti,
                dst: link.target_table,
                origin: EdgeOrigin::Fk,
                table: table.name.clone(),
                columns: vec![link.column.clone()],
                relation: 0,
                reverse: 0,
            };
            let bwd = EdgeTypeMeta {
                name: format!("{name}:rev"),
                src: link.target_table,
                dst: ti,
                origin: EdgeOrigin::FkReverse,
                ..fwd.clone()
            };
            g.push_relation(fwd, bwd, pairs);
        }
    }
    g
}

/// Treat each fact row's FK set as a hyperedge: for every table with at
/// least two FK columns and every unordered column pair, link the two
/// referenced entities (both directions). Rows with a null or dangling
/// value in either column contribute nothing.
pub fn augment_fk_pairs(graph: &RelGraph, db: &Database) -> RelGraph {
    let mut g = graph.clone();
    for table in &db.tables {
        let fks = &table.foreign_keys;
        for i in 0..fks.len() {
            for j in (i + 1)..fks.len() {
                let (a, b) = (&fks[i], &fks[j]);
                let pairs: Vec<(u32, u32)> = a
                    .targets
                    .iter()
                    .zip(&b.targets)
                    .filter_map(|(x, y)| match (x, y) {
                        (Some(x), Some(y)) => Some((*x as u32, *y as u32)),
                        _ => None,
                    })
                    .collect();
                let fwd = EdgeTypeMeta {
                    name: format!("{}.{}~{}", table.name, a.column, b.column),
                    src: a.target_table,
                    dst: b.target_table,
                    origin: EdgeOrigin::FkPair,
                    table: table.name.clone(),
                    columns: vec![a.column.clone(), b.column.clone()],
                    relation: 0,
                    reverse: 0,
                };
                let bwd = EdgeTypeMeta {
                    name: format!("{}.{}~{}", table.name, b.column, a.column),
                    src: b.target_table,
                    dst: a.target_table,
                    columns: vec![b.column.clone(), a.column.clone()],
                    ..fwd.clone()
                };
                g.push_relation(fwd, bwd, pairs);
            }
        }
    }
    g
}
