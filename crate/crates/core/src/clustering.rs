//! Complete-linkage clustering of neuron prototypes, Mojena's stopping rule,
//! dendrogram cuts and per-cluster representatives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{invalid, Error, Result};
use crate::scalar::{dist, sq_dist, Scalar};
use crate::som::{Assignment, SomMap};

/// One agglomeration step. Leaves are `0..M`; the cluster created by merge `j`
/// has node id `M + j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// `left,right,height` rows with a header line.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["left", "right", "height"]).expect("in-memory write");
        for m in &self.merges {
            w.write_record([m.left.to_string(), m.right.to_string(), m.height.to_string()])
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Complete-linkage agglomerative clustering of the rows of a row-major
/// `points x dim` matrix under the Euclidean metric.
///
/// At each step the closest pair of active clusters merges; ties go to the
/// pair with the lowest smaller node id, then the lowest larger node id.
pub fn complete_linkage<T: Scalar>(points: &[T], dim: usize) -> Result<Dendrogram> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: points.len(),
        });
    }
    let n = points.len() / dim;
    if n < 2 {
        return Err(invalid("complete linkage needs at least 2 points"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linkage input".into()));
    }

    let rows: Vec<&[T]> = points.chunks_exact(dim).collect();
    // Condensed distances indexed by slot; slot s holds node `ids[s]`.
    let mut d: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let rows = &rows;
            (0..n).map(move |j| dist(rows[i], rows[j]).as_f64())
        })
        .collect();
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in a + 1..n {
                if !active[b] {
                    continue;
                }
                let h = d[a * n + b];
                let (lo, hi) = (ids[a].min(ids[b]), ids[a].max(ids[b]));
                let better = match best {
                    None => true,
                    Some((bh, blo, bhi, _, _)) => h < bh || (h == bh && (lo, hi) < (blo, bhi)),
                };
                if better {
                    best = Some((h, lo, hi, a, b));
                }
            }
        }
        let (h, lo, hi, a, b) = best.expect("at least two active clusters");
        merges.push(Merge {
            left: lo,
            right: hi,
            height: h,
            size: sizes[a] + sizes[b],
        });
        // Lance-Williams update for complete linkage: max of the two distances.
        for k in 0..n {
            if active[k] && k != a && k != b {
                let v = d[a * n + k].max(d[b * n + k]);
                d[a * n + k] = v;
                d[k * n + a] = v;
            }
        }
        active[b] = false;
        sizes[a] += sizes[b];
        ids[a] = n + step;
    }
    Ok(Dendrogram { leaves: n, merges })
}

/// Diagnostics of a Mojena cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MojenaCut {
    pub k: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub threshold: f64,
    pub k_const: f64,
    /// The rule never triggered and `k` is the fallback of 2.
    pub fallback: bool,
    /// Fewer than 3 leaves; the rule is undefined and `k` equals the leaf count.
    pub undefined: bool,
}

pub const DEFAULT_MOJENA_K: f64 = 1.25;

/// Mojena's upper-tail rule on the merge heights.
///
/// With heights `α_1..α_{M-1}` in merge order, mean `ᾱ` and sample standard
/// deviation `s` (divisor `M-2`), picks the smallest `j >= 1` with
/// `α_{j+1} > ᾱ + k·s` and returns `M - j` clusters, or 2 when no height exceeds
/// the threshold.
pub fn mojena_cut(d: &Dendrogram, k_const: f64) -> Result<MojenaCut> {
    if !(k_const > 0.0) || !k_const.is_finite() {
        return Err(invalid(format!("Mojena constant must be positive, got {k_const}")));
    }
    let m = d.leaves;
    let heights = d.heights();
    if m < 3 {
        log::warn!("Mojena's rule needs at least 3 leaves; keeping all {m} clusters");
        return Ok(MojenaCut {
            k: m,
            mean: f64::NAN,
            std_dev: f64::NAN,
            threshold: f64::NAN,
            k_const,
            fallback: false,
            undefined: true,
        });
    }
    let count = heights.len() as f64;
    let mean = heights.iter().sum::<f64>() / count;
    let var = heights.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let std_dev = var.sqrt();
    let threshold = mean + k_const * std_dev;
    // heights[j] is α_{j+1} in one-based notation.
    let hit = (1..heights.len()).find(|&j| heights[j] > threshold);
    let (k, fallback) = match hit {
        Some(j) => (m - j, false),
        None => (2, true),
    };
    Ok(MojenaCut {
        k,
        mean,
        std_dev,
        threshold,
        k_const,
        fallback,
        undefined: false,
    })
}

/// Flat clustering of the map's neurons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapPartition {
    pub cluster_of: Vec<usize>,
    pub k: usize,
    pub k_const: f64,
}

impl MapPartition {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.cluster_of.len())
            .filter(|&i| self.cluster_of[i] == cluster)
            .collect()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Undoes the last `k - 1` merges. Cluster ids follow the lowest leaf each cluster contains.
pub fn cut_dendrogram(d: &Dendrogram, k: usize, k_const: f64) -> Result<MapPartition> {
    let m = d.leaves;
    if k < 1 || k > m {
        return Err(invalid(format!("cluster count {k} outside 1..={m}")));
    }
    let total = m + d.merges.len();
    let mut parent: Vec<usize> = (0..total).collect();
    for (j, mg) in d.merges.iter().take(m - k).enumerate() {
        let node = m + j;
        parent[mg.left] = node;
        parent[mg.right] = node;
    }
    let roots: Vec<usize> = (0..m).map(|i| find(&mut parent, i)).collect();
    let mut label_of_root = std::collections::HashMap::new();
    let mut cluster_of = Vec::with_capacity(m);
    for &r in &roots {
        let next = label_of_root.len();
        cluster_of.push(*label_of_root.entry(r).or_insert(next));
    }
    Ok(MapPartition {
        cluster_of,
        k,
        k_const,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary<T> {
    pub cluster: usize,
    pub neurons: Vec<usize>,
    pub centroid: Vec<T>,
    pub representative_frame: usize,
    pub representative_distance: f64,
    pub frames_won: usize,
    /// No frame was won by the cluster, so every frame was searched.
    pub searched_all_frames: bool,
}

/// Centroid (mean member prototype) and centroid-closest won frame of each cluster.
pub fn cluster_summaries<T: Scalar>(
    p: &MapPartition,
    map: &SomMap<T>,
    e: &Ensemble<T>,
    a: &Assignment,
) -> Result<Vec<ClusterSummary<T>>> {
    if p.cluster_of.len() != map.len() {
        return Err(Error::DimensionMismatch {
            expected: map.len(),
            found: p.cluster_of.len(),
        });
    }
    if e.dim() != map.dim() || a.bmu.len() != e.n_frames() {
        return Err(invalid("assignment does not belong to this map and ensemble"));
    }
    let dim = map.dim();
    let mut out = Vec::with_capacity(p.k);
    for c in 0..p.k {
        let neurons = p.members(c);
        let mut centroid = vec![T::zero(); dim];
        for &i in &neurons {
            for (acc, &v) in centroid.iter_mut().zip(map.prototype(i)) {
                *acc = *acc + v;
            }
        }
        let count = T::of(neurons.len() as f64);
        centroid.iter_mut().for_each(|v| *v = *v / count);

        let won: Vec<usize> = (0..e.n_frames())
            .filter(|&f| p.cluster_of[a.bmu[f]] == c)
            .collect();
        let searched_all_frames = won.is_empty();
        let candidates: Box<dyn Iterator<Item = usize>> = if searched_all_frames {
            Box::new(0..e.n_frames())
        } else {
            Box::new(won.iter().copied())
        };
        let mut best = (usize::MAX, T::infinity());
        for f in candidates {
            let d2 = sq_dist(e.frame(f), &centroid);
            if d2 < best.1 {
                best = (f, d2);
            }
        }
        out.push(ClusterSummary {
            cluster: c,
            neurons,
            centroid,
            representative_frame: best.0,
            representative_distance: best.1.as_f64().sqrt(),
            frames_won: won.len(),
            searched_all_frames,
        });
    }
    Ok(out)
}
