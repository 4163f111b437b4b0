use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{
    adjusted_homophily_of, aggregation_homophily_of, class_insensitive_homophily_of, class_prior,
    edge_homophily_of, LabelKernel, LabeledEdges, Weighting,
};
use super::HomophilyError;
use crate::rdb::{
    enumerate_metapaths_with, project_metapath, EntityLabelSummary, MetapathOptions, ProjectedEdges,
    RelGraph,
};
use crate::stats::Aggregates;

#[derive(Debug, Clone, Copy, Default)]
pub struct ProfileOptions {
    pub metapaths: MetapathOptions,
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetapathHomophily {
    pub metapath: usize,
    pub name: String,
    /// `|E_m|`, unordered pairs.
    pub num_pairs: usize,
    pub skipped_pairs: usize,
    pub h_edge: f64,
    pub h_adj: Option<f64>,
    pub h_ins: Option<f64>,
    pub h_agg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedMetapath {
    pub metapath: usize,
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomophilyProfile {
    pub labeled_type: String,
    pub kernel: LabelKernel,
    pub weighting: Weighting,
    pub metapaths: Vec<MetapathHomophily>,
    /// Keyed by metric family: `h_edge`, `h_adj`, `h_ins`, `h_agg`, and
    /// `h_adjs_corr` (adjusted for classification, Pearson edge homophily
    /// for regression).
    pub aggregates: BTreeMap<String, Aggregates>,
    pub excluded: Vec<ExcludedMetapath>,
}

impl HomophilyProfile {
    pub fn aggregate(&self, family: &str) -> Option<&Aggregates> {
        self.aggregates.get(family)
    }
}

/// Metrics for one projected metapath. Fails only when edge homophily is
/// undefined; the other metrics are `None` when individually degenerate.
pub fn metapath_metrics(
    edges: &ProjectedEdges,
    name: &str,
    summary: &EntityLabelSummary,
    kernel: LabelKernel,
    prior: &[f64],
    weighting: Weighting,
) -> Result<MetapathHomophily, HomophilyError> {
    let view = LabeledEdges::new(edges, summary, weighting);
    let h_edge = edge_homophily_of(&view, kernel)?;
    let h_adj = if summary.target.is_classification() {
        adjusted_homophily_of(&view, summary).ok()
    } else {
        None
    };
    Ok(MetapathHomophily {
        metapath: edges.metapath,
        name: name.to_string(),
        num_pairs: edges.num_pairs(),
        skipped_pairs: view.skipped / 2,
        h_edge,
        h_adj,
        h_ins: class_insensitive_homophily_of(&view, summary, prior).ok(),
        h_agg: aggregation_homophily_of(&view, kernel).ok(),
    })
}

/// Homophily suite over every self-looped metapath of `labeled_type`.
pub fn profile(
    graph: &RelGraph,
    labeled_type: &str,
    summary: &EntityLabelSummary,
    opts: ProfileOptions,
) -> Result<HomophilyProfile, HomophilyError> {
    let metapaths = enumerate_metapaths_with(graph, labeled_type, opts.metapaths)
        .map_err(|e| HomophilyError::Graph(e.to_string()))?;
    let kernel = LabelKernel::for_summary(summary)?;
    let prior = class_prior(summary);
    let results: Vec<_> = metapaths
        .par_iter()
        .map(|m| {
            let edges = project_metapath(graph, m);
            (m, metapath_metrics(&edges, &m.name, summary, kernel, &prior, opts.weighting))
        })
        .collect();

    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for (m, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => excluded.push(ExcludedMetapath {
                metapath: m.id,
                name: m.name.clone(),
                reason: e.to_string(),
            }),
        }
    }
    if rows.is_empty() {
        return Err(HomophilyError::EmptyProfile);
    }

    let mut aggregates = BTreeMap::new();
    let families: [(&str, fn(&MetapathHomophily) -> Option<f64>); 4] = [
        ("h_edge", |r| Some(r.h_edge)),
        ("h_adj", |r| r.h_adj),
        ("h_ins", |r| r.h_ins),
        ("h_agg", |r| r.h_agg),
    ];
    for (name, get) in families {
        let (vals, ws): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter_map(|r| get(r).map(|v| (v, r.num_pairs as f64)))
            .unzip();
        if let Some(a) = Aggregates::compute(&vals, &ws) {
            aggregates.insert(name.to_string(), a);
        }
    }
    let corr_source = if summary.target.is_classification() { "h_adj" } else { "h_edge" };
    if let Some(a) = aggregates.get(corr_source).cloned() {
        aggregates.insert("h_adjs_corr".to_string(), a);
    }

    Ok(HomophilyProfile {
        labeled_type: labeled_type.to_string(),
        kernel,
        weighting: opts.weighting,
        metapaths: rows,
        aggregates,
        excluded,
    })
}
