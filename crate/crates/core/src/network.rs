//! Per-neuron atom networks: coordinate series of the frames a neuron wins,
//! atom-atom similarity matrices and thresholded graphs.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{AtomLabel, Ensemble};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::similarity::{concat_pearson, cosine_fluct, xyz_avg_abs_corr, PairSimilarity, ScalarMeasure, Xyz};
use crate::som::Assignment;

pub const DEFAULT_MIN_FRAMES: usize = 3;

/// Coordinates of every atom over the frames won by one neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomSeriesSet<T> {
    pub neuron: usize,
    pub frames_used: Vec<usize>,
    pub series: Vec<Xyz<T>>,
}

impl<T> AtomSeriesSet<T> {
    pub fn n_atoms(&self) -> usize {
        self.series.len()
    }

    pub fn n_frames(&self) -> usize {
        self.frames_used.len()
    }
}

pub fn gather_neuron_series<T: Scalar>(
    e: &Ensemble<T>,
    a: &Assignment,
    neuron: usize,
    min_frames: usize,
) -> Result<AtomSeriesSet<T>> {
    if min_frames < 3 {
        return Err(invalid(format!("min_frames must be at least 3, got {min_frames}")));
    }
    if a.bmu.len() != e.n_frames() {
        return Err(invalid("assignment was computed on a different ensemble"));
    }
    if neuron >= a.hits.len() {
        return Err(invalid(format!("neuron {neuron} out of range")));
    }
    let frames_used = a.frames_of(neuron);
    if frames_used.len() < min_frames {
        return Err(Error::InsufficientFrames {
            neuron,
            hits: frames_used.len(),
            min_frames,
        });
    }
    let series = (0..e.n_atoms())
        .map(|atom| {
            let mut xyz: Xyz<T> = [Vec::new(), Vec::new(), Vec::new()];
            for &f in &frames_used {
                let p = e.atom(f, atom);
                for k in 0..3 {
                    xyz[k].push(p[k]);
                }
            }
            xyz
        })
        .collect();
    Ok(AtomSeriesSet {
        neuron,
        frames_used,
        series,
    })
}

/// Atom-atom similarity measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    XyzPearson,
    XyzSpearman,
    XyzBicor,
    Cosine,
    ConcatPearson,
}

/// How per-axis information is combined into one pair value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    /// Mean of absolute per-axis correlations.
    AxisMeanAbs,
    /// One value over the concatenated per-axis centred vectors.
    Concatenated,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::XyzPearson,
        Measure::XyzSpearman,
        Measure::XyzBicor,
        Measure::Cosine,
        Measure::ConcatPearson,
    ];

    pub fn combination(self) -> Combination {
        match self {
            Measure::XyzPearson | Measure::XyzSpearman | Measure::XyzBicor => Combination::AxisMeanAbs,
            Measure::Cosine | Measure::ConcatPearson => Combination::Concatenated,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::XyzPearson => "xyz_pearson",
            Measure::XyzSpearman => "xyz_spearman",
            Measure::XyzBicor => "xyz_bicor",
            Measure::Cosine => "cosine",
            Measure::ConcatPearson => "concat_pearson",
        }
    }

    pub fn pair<T: Scalar>(self, a: &Xyz<T>, b: &Xyz<T>) -> Result<PairSimilarity> {
        match self {
            Measure::XyzPearson => xyz_avg_abs_corr(a, b, ScalarMeasure::Pearson),
            Measure::XyzSpearman => xyz_avg_abs_corr(a, b, ScalarMeasure::Spearman),
            Measure::XyzBicor => xyz_avg_abs_corr(a, b, ScalarMeasure::Bicor),
            Measure::Cosine => cosine_fluct(a, b),
            Measure::ConcatPearson => concat_pearson(a, b),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown measure {s:?}")))
    }
}

/// Symmetric `N x N` similarity matrix with unit diagonal and entries in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    pub n: usize,
    pub values: Vec<f64>,
    /// Signed counterpart of `values` (diagonal 1).
    pub signed: Vec<f64>,
    pub measure: Measure,
    pub combination: Combination,
    /// Pairs `(a, b)`, `a < b`, where a degenerate axis or fallback was hit.
    pub flagged: Vec<(usize, usize)>,
}

impl SimilarityMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.n + b]
    }

    /// Upper-triangle entries in row order.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for a in 0..self.n {
            for b in a + 1..self.n {
                out.push(self.get(a, b));
            }
        }
        out
    }

    /// Full-precision CSV dump, unsigned or signed.
    pub fn to_csv(&self, signed: bool) -> Vec<u8> {
        let src = if signed { &self.signed } else { &self.values };
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in src.chunks_exact(self.n) {
            w.write_record(row.iter().map(|v| v.to_string()))
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Evaluates `measure` on every unordered atom pair.
///
/// Pairs are computed in parallel into fixed slots, so the matrix does not
/// depend on the worker count.
pub fn similarity_matrix<T: Scalar>(s: &AtomSeriesSet<T>, measure: Measure) -> Result<SimilarityMatrix> {
    let n = s.n_atoms();
    if n < 2 {
        return Err(invalid("similarity matrix needs at least 2 atoms"));
    }
    let rows: Vec<Vec<PairSimilarity>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (a + 1..n)
                .map(|b| measure.pair(&s.series[a], &s.series[b]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = vec![1.0; n * n];
    let mut signed = vec![1.0; n * n];
    let mut flagged = Vec::new();
    for (a, row) in rows.iter().enumerate() {
        for (off, p) in row.iter().enumerate() {
            let b = a + 1 + off;
            let v = p.value.clamp(0.0, 1.0);
            values[a * n + b] = v;
            values[b * n + a] = v;
            signed[a * n + b] = p.signed;
            signed[b * n + a] = p.signed;
            if p.degenerate {
                flagged.push((a, b));
            }
        }
    }
    Ok(SimilarityMatrix {
        n,
        values,
        signed,
        measure,
        combination: measure.combination(),
        flagged,
    })
}

/// Linear-interpolation quantile of `values` (the usual `(n-1)·q` rule).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("quantile of an empty set"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid(format!("quantile {q} outside [0, 1]")));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(s[lo] + (h - lo as f64) * (s[hi] - s[lo]))
}

/// Threshold at the `q`-quantile of the off-diagonal similarities, so that
/// roughly a fraction `1 - q` of pairs become edges.
pub fn pick_threshold(s: &SimilarityMatrix, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("quantile must be in (0, 1), got {q}")));
    }
    if s.n < 2 {
        return Err(invalid("need at least 2 atoms"));
    }
    quantile(&s.off_diagonal(), q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// How an [`AtomGraph`] was built from its similarity matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Construction {
    Hard { tau: f64, min_seq_gap: u32 },
    Soft { beta: f64 },
}

/// Atom network of one neuron: nodes are atoms, edges are similar pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomGraph {
    pub labels: Vec<AtomLabel>,
    pub edges: Vec<Edge>,
    pub construction: Construction,
}

impl AtomGraph {
    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Weighted degree of every node.
    pub fn strengths(&self) -> Vec<f64> {
        let mut k = vec![0.0; self.n_nodes()];
        for e in &self.edges {
            k[e.a] += e.weight;
            k[e.b] += e.weight;
        }
        k
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// Separation of two atoms along the sequence. Atoms on different chains are
/// unboundedly far apart; atoms without residue numbers use their index gap.
pub fn sequence_gap(labels: &[AtomLabel], a: usize, b: usize) -> u64 {
    let (la, lb) = (&labels[a], &labels[b]);
    match (la.res_seq, lb.res_seq) {
        (Some(x), Some(y)) if la.chain == lb.chain => (x as i64 - y as i64).unsigned_abs(),
        (Some(_), Some(_)) => u64::MAX,
        _ => a.abs_diff(b) as u64,
    }
}

fn check_labels(s: &SimilarityMatrix, labels: &[AtomLabel]) -> Result<()> {
    if labels.len() != s.n {
        return Err(Error::DimensionMismatch {
            expected: s.n,
            found: labels.len(),
        });
    }
    Ok(())
}

/// Keeps pairs with similarity `>= tau` that are more than `min_seq_gap`
/// residues apart; the similarity is kept as edge weight.
pub fn hard_threshold(
    s: &SimilarityMatrix,
    labels: &[AtomLabel],
    tau: f64,
    min_seq_gap: u32,
) -> Result<AtomGraph> {
    check_labels(s, labels)?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("tau must be in (0, 1), got {tau}")));
    }
    let mut edges = Vec::new();
    for a in 0..s.n {
        for b in a + 1..s.n {
            let w = s.get(a, b);
            if w >= tau && sequence_gap(labels, a, b) > min_seq_gap as u64 {
                edges.push(Edge { a, b, weight: w });
            }
        }
    }
    Ok(AtomGraph {
        labels: labels.to_vec(),
        edges,
        construction: Construction::Hard { tau, min_seq_gap },
    })
}

/// Weighted network with `w = s^beta`; zero weights are dropped.
pub fn soft_threshold(s: &SimilarityMatrix, labels: &[AtomLabel], beta: f64) -> Result<AtomGraph> {
    check_labels(s, labels)?;
    if !(beta >= 1.0) || !beta.is_finite() {
        return Err(invalid(format!("beta must be at least 1, got {beta}")));
    }
    let mut edges = Vec::new();
    for a in 0..s.n {
        for b in a + 1..s.n {
            let w = s.get(a, b).powf(beta);
            if w > 0.0 {
                edges.push(Edge { a, b, weight: w });
            }
        }
    }
    Ok(AtomGraph {
        labels: labels.to_vec(),
        edges,
        construction: Construction::Soft { beta },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, values: Vec<f64>) -> SimilarityMatrix {
        SimilarityMatrix {
            n,
            signed: values.clone(),
            values,
            measure: Measure::XyzPearson,
            combination: Combination::AxisMeanAbs,
            flagged: vec![],
        }
    }

    fn labels(n: usize) -> Vec<AtomLabel> {
        Ensemble::<f64>::synthetic_labels(n)
    }

    fn assignment(bmu: Vec<usize>, neurons: usize) -> Assignment {
        let mut hits = vec![0; neurons];
        bmu.iter().for_each(|&b| hits[b] += 1);
        Assignment { bmu, hits, qe: 0.0 }
    }

    fn two_atom_ensemble(frames: usize) -> Ensemble<f64> {
        let coords = (0..frames * 6).map(|i| (i as f64 * 0.61).sin()).collect();
        Ensemble::new(coords, labels(2), None, "t").unwrap()
    }

    #[test]
    fn insufficient_frames() {
        let e = two_atom_ensemble(6);
        let a = assignment(vec![0, 1, 0, 1, 1, 0], 2);
        let a2 = assignment(vec![0, 1, 2, 1, 1, 2], 3);
        assert!(matches!(
            gather_neuron_series(&e, &a2, 2, 3),
            Err(Error::InsufficientFrames { hits: 2, .. })
        ));
        let s = gather_neuron_series(&e, &a, 0, 3).unwrap();
        assert_eq!(s.frames_used, vec![0, 2, 5]);
        assert_eq!((s.n_atoms(), s.n_frames()), (2, 3));
        assert_eq!(s.series[1][2][1], e.atom(2, 1)[2]);
        assert!(gather_neuron_series(&e, &a, 0, 2).is_err());
    }

    #[test]
    fn neuron_series_partition_the_frames() {
        let e = two_atom_ensemble(20);
        let bmu: Vec<usize> = (0..20).map(|f| (f * 7) % 4).collect();
        let a = assignment(bmu, 4);
        let mut all: Vec<usize> = (0..4)
            .flat_map(|n| gather_neuron_series(&e, &a, n, 3).unwrap().frames_used)
            .collect();
        all.sort();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn identical_atoms_give_all_ones() {
        let series: Xyz<f64> = [vec![1.0, 2.0, 4.0], vec![0.0, 1.0, 0.5], vec![3.0, 1.0, 2.0]];
        let s = AtomSeriesSet {
            neuron: 0,
            frames_used: vec![0, 1, 2],
            series: vec![series.clone(), series],
        };
        for m in Measure::ALL {
            let sm = similarity_matrix(&s, m).unwrap();
            for v in &sm.values {
                assert!((v - 1.0).abs() < 1e-12, "{m}: {v}");
            }
        }
    }

    #[test]
    fn hard_threshold_fixture() {
        let s = matrix(3, vec![1.0, 0.9, 0.1, 0.9, 1.0, 0.2, 0.1, 0.2, 1.0]);
        let g = hard_threshold(&s, &labels(3), 0.8, 0).unwrap();
        assert_eq!(g.edges, vec![Edge { a: 0, b: 1, weight: 0.9 }]);
        let g = hard_threshold(&s, &labels(3), 0.999, 0).unwrap();
        assert!(g.edges.is_empty());
        let g = hard_threshold(&s, &labels(3), 0.8, 1).unwrap();
        assert!(g.edges.is_empty());
        assert!(hard_threshold(&s, &labels(3), 1.0, 0).is_err());
    }

    #[test]
    fn soft_threshold_powers() {
        let s = matrix(2, vec![1.0, 0.5, 0.5, 1.0]);
        assert_eq!(soft_threshold(&s, &labels(2), 1.0).unwrap().edges[0].weight, 0.5);
        assert_eq!(soft_threshold(&s, &labels(2), 6.0).unwrap().edges[0].weight, 0.015625);
        let z = matrix(2, vec![1.0, 0.0, 0.0, 1.0]);
        assert!(soft_threshold(&z, &labels(2), 2.0).unwrap().edges.is_empty());
        assert!(soft_threshold(&s, &labels(2), 0.5).is_err());
    }

    #[test]
    fn quantile_rules() {
        let v: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        assert!((quantile(&v, 0.5).unwrap() - 0.5).abs() < 1e-15);
        let s = matrix(3, vec![1.0, 0.4, 0.4, 0.4, 1.0, 0.4, 0.4, 0.4, 1.0]);
        assert_eq!(pick_threshold(&s, 0.9).unwrap(), 0.4);
        assert!(pick_threshold(&s, 1.0).is_err());
    }

    #[test]
    fn sequence_gap_rules() {
        let mut l = labels(3);
        assert_eq!(sequence_gap(&l, 0, 2), 2);
        l[2].chain = 'B';
        assert_eq!(sequence_gap(&l, 0, 2), u64::MAX);
        l[1].res_seq = None;
        assert_eq!(sequence_gap(&l, 0, 1), 1);
    }

    #[test]
    fn measure_names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("manhattan".parse::<Measure>().is_err());
    }
}
