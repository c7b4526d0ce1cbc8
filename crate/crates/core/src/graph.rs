//! Community structure and edge classification of atom networks.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{invalid, Error, Result};
use crate::network::{sequence_gap, AtomGraph};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommunityMethod {
    ConnectedComponents,
    GreedyModularity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    pub community_of: Vec<usize>,
    /// Modularity; `None` for an edgeless graph.
    pub q: Option<f64>,
    pub method: CommunityMethod,
}

impl CommunityPartition {
    pub fn count(&self) -> usize {
        self.community_of.iter().max().map_or(0, |m| m + 1)
    }
}

/// Relabels arbitrary group keys to `0..k` in order of each group's lowest node.
fn canonical(keys: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    keys.iter()
        .map(|k| {
            let next = map.len();
            *map.entry(*k).or_insert(next)
        })
        .collect()
}

pub fn connected_components(g: &AtomGraph) -> CommunityPartition {
    let n = g.n_nodes();
    let mut adj = vec![Vec::new(); n];
    for e in &g.edges {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    let mut comp = vec![usize::MAX; n];
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = start;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = start;
                    stack.push(v);
                }
            }
        }
    }
    let community_of = canonical(&comp);
    let q = modularity(g, &community_of).ok();
    CommunityPartition {
        community_of,
        q,
        method: CommunityMethod::ConnectedComponents,
    }
}

/// Weighted Newman modularity of the node labelling `community_of`.
pub fn modularity(g: &AtomGraph, community_of: &[usize]) -> Result<f64> {
    if community_of.len() != g.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.n_nodes(),
            found: community_of.len(),
        });
    }
    let m = g.total_weight();
    if g.edges.is_empty() || !(m > 0.0) {
        return Err(Error::EmptyGraph);
    }
    let two_m = 2.0 * m;
    let mut internal: BTreeMap<usize, f64> = BTreeMap::new();
    let mut degree: BTreeMap<usize, f64> = BTreeMap::new();
    for e in &g.edges {
        if community_of[e.a] == community_of[e.b] {
            *internal.entry(community_of[e.a]).or_default() += e.weight;
        }
    }
    for (node, k) in g.strengths().into_iter().enumerate() {
        *degree.entry(community_of[node]).or_default() += k;
    }
    let q = degree
        .iter()
        .map(|(c, &d)| internal.get(c).copied().unwrap_or(0.0) / m - (d / two_m).powi(2))
        .sum();
    Ok(q)
}

const DELTA_Q_EPS: f64 = 1e-12;

/// Agglomerative modularity maximization in the style of Clauset, Newman and Moore.
///
/// Starting from singletons, the connected pair of communities with the
/// largest modularity gain is merged (ties: lowest community ids) while the
/// gain exceeds `1e-12`.
pub fn greedy_modularity(g: &AtomGraph) -> Result<CommunityPartition> {
    let n = g.n_nodes();
    let m = g.total_weight();
    if g.edges.is_empty() || !(m > 0.0) {
        return Err(Error::EmptyGraph);
    }
    let two_m = 2.0 * m;
    // e[i][j]: fraction of edge ends joining communities i and j (i != j), stored symmetric.
    let mut e: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for edge in &g.edges {
        *e[edge.a].entry(edge.b).or_default() += edge.weight / two_m;
        *e[edge.b].entry(edge.a).or_default() += edge.weight / two_m;
    }
    let mut a: Vec<f64> = g.strengths().into_iter().map(|k| k / two_m).collect();
    let mut owner: Vec<usize> = (0..n).collect();
    let mut alive = vec![true; n];

    let mut q: f64 = -a.iter().map(|x| x * x).sum::<f64>();
    let mut best_q = q;
    let mut best_owner = owner.clone();

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for (&j, &eij) in e[i].range(i + 1..) {
                let dq = 2.0 * (eij - a[i] * a[j]);
                if best.is_none_or(|(bq, _, _)| dq > bq) {
                    best = Some((dq, i, j));
                }
            }
        }
        let Some((dq, i, j)) = best else { break };
        if dq <= DELTA_Q_EPS {
            break;
        }
        // Merge j into i.
        let row_j = std::mem::take(&mut e[j]);
        for (&k, &w) in &row_j {
            if k == i {
                continue;
            }
            *e[i].entry(k).or_default() += w;
            e[k].remove(&j);
            *e[k].entry(i).or_default() += w;
        }
        e[i].remove(&j);
        a[i] += a[j];
        a[j] = 0.0;
        alive[j] = false;
        for o in owner.iter_mut() {
            if *o == j {
                *o = i;
            }
        }
        q += dq;
        if q > best_q {
            best_q = q;
            best_owner.clone_from(&owner);
        }
    }

    let community_of = canonical(&best_owner);
    let q = modularity(g, &community_of)?;
    Ok(CommunityPartition {
        community_of,
        q: Some(q),
        method: CommunityMethod::GreedyModularity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Local,
    LongRange,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Local => "local",
            EdgeKind::LongRange => "long-range",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeClass {
    pub kinds: Vec<EdgeKind>,
    /// Mean Cα-Cα distance over the neuron's frames, per edge (Å).
    pub mean_distance: Vec<f64>,
    pub seq_gap: u32,
    /// Some atoms lacked residue numbers and node index gaps were used instead.
    pub index_gap_fallback: bool,
}

impl EdgeClass {
    pub fn long_range_count(&self) -> usize {
        self.kinds.iter().filter(|&&k| k == EdgeKind::LongRange).count()
    }
}

pub const DEFAULT_LONG_RANGE_GAP: u32 = 10;

/// Labels each edge local or long-range by residue separation and annotates
/// it with the mean spatial distance of its atoms over `frames_used`.
pub fn classify_edges<T: Scalar>(
    g: &AtomGraph,
    seq_gap: u32,
    e: &Ensemble<T>,
    frames_used: &[usize],
) -> Result<EdgeClass> {
    if e.n_atoms() != g.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.n_nodes(),
            found: e.n_atoms(),
        });
    }
    if frames_used.is_empty() || frames_used.iter().any(|&f| f >= e.n_frames()) {
        return Err(invalid("frames_used must be non-empty valid frame indices"));
    }
    let index_gap_fallback = g.labels.iter().any(|l| l.res_seq.is_none());
    if index_gap_fallback {
        log::warn!("atoms without residue numbers; classifying edges by node index gap");
    }
    let mut kinds = Vec::with_capacity(g.edges.len());
    let mut mean_distance = Vec::with_capacity(g.edges.len());
    for edge in &g.edges {
        let gap = if index_gap_fallback {
            edge.a.abs_diff(edge.b) as u64
        } else {
            sequence_gap(&g.labels, edge.a, edge.b)
        };
        kinds.push(if gap > seq_gap as u64 {
            EdgeKind::LongRange
        } else {
            EdgeKind::Local
        });
        let total: f64 = frames_used
            .iter()
            .map(|&f| {
                let (p, q) = (e.atom(f, edge.a), e.atom(f, edge.b));
                (0..3)
                    .map(|k| (p[k] - q[k]).as_f64().powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum();
        mean_distance.push(total / frames_used.len() as f64);
    }
    Ok(EdgeClass {
        kinds,
        mean_distance,
        seq_gap,
        index_gap_fallback,
    })
}

/// Nodes ranked by weighted degree (ties: lowest index), at most `top_k`.
pub fn hub_atoms(g: &AtomGraph, top_k: usize) -> Vec<(usize, f64)> {
    if g.edges.is_empty() {
        return Vec::new();
    }
    let mut ranked: Vec<(usize, f64)> = g.strengths().into_iter().enumerate().collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    ranked.truncate(top_k);
    ranked
}
