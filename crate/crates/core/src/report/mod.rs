//! Exports: SVG map rendering, GraphML and DOT networks, and the JSON run report.

mod dot;
mod graphml;
mod svg;

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;
use crate::graph::CommunityMethod;
use crate::network::{Combination, Construction, Measure};
use crate::som::InitMethod;

pub use dot::export_dot;
pub use graphml::export_graphml;
pub use svg::{inner_radius, render_som_svg, HEX_SCALE};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Fixed 12-colour qualitative palette; cluster and community ids cycle through it.
pub const PALETTE: [&str; 12] = [
    "#a6cee3", "#1f78b4", "#b2df8a", "#33a02c", "#fb9a99", "#e31a1c", "#fdbf6f", "#ff7f00",
    "#cab2d6", "#6a3d9a", "#ffff99", "#b15928",
];

pub fn palette_color(id: usize) -> &'static str {
    PALETTE[id % PALETTE.len()]
}

/// Pretty JSON with floats written to 17 significant digits.
struct Canonical<'a>(PrettyFormatter<'a>);

impl Formatter for Canonical<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{v:.8e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with sorted keys and 17-significant-digit floats, newline terminated.
pub fn to_canonical_json<S: Serialize>(value: &S) -> Result<Vec<u8>> {
    // Going through Value sorts object keys.
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Canonical(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleInfo {
    pub source: String,
    pub frames_read: usize,
    pub frames_used: usize,
    pub atoms: usize,
    pub stride: usize,
    pub superposed: bool,
    pub degenerate_frames: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub rows: usize,
    pub cols: usize,
    pub init_used: InitMethod,
    /// Batch epochs or sequential presentations actually run.
    pub steps: usize,
    pub quantization_error: f64,
    pub topographic_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MojenaInfo {
    pub k_const: f64,
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
    pub threshold: Option<f64>,
    pub k: usize,
    pub fallback: bool,
    pub undefined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub cluster: usize,
    pub neurons: Vec<usize>,
    pub centroid: Vec<f64>,
    pub representative_frame: usize,
    pub representative_distance: f64,
    pub frames_won: usize,
    pub searched_all_frames: bool,
    pub pdb: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringInfo {
    pub cluster_of: Vec<usize>,
    pub dendrogram_heights: Vec<f64>,
    pub mojena: MojenaInfo,
    pub clusters: Vec<ClusterInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkInfo {
    pub neuron: usize,
    pub frames: usize,
    pub measure: Measure,
    pub combination: Combination,
    pub construction: Construction,
    pub nodes: usize,
    pub edges: usize,
    pub communities: usize,
    pub community_method: CommunityMethod,
    pub modularity: Option<f64>,
    pub long_range_edges: usize,
    pub flagged_pairs: usize,
    pub hubs: Vec<usize>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedNeuron {
    pub neuron: usize,
    pub hits: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworksInfo {
    pub analyzed: Vec<NetworkInfo>,
    pub skipped: Vec<SkippedNeuron>,
}

/// Machine-readable summary of a run. Stages that did not run are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub config: serde_json::Value,
    pub seed: u64,
    pub ensemble: EnsembleInfo,
    pub training: Option<TrainingInfo>,
    pub bmu: Vec<usize>,
    pub hits: Vec<usize>,
    pub clustering: Option<ClusteringInfo>,
    pub networks: Option<NetworksInfo>,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// Cross-checks the report against itself: hits sum to the frame count and
    /// the cluster count matches the partition.
    pub fn is_consistent(&self) -> bool {
        let hits_ok = self.hits.iter().sum::<usize>() == self.ensemble.frames_used
            && self.bmu.len() == self.ensemble.frames_used;
        let clusters_ok = self.clustering.as_ref().is_none_or(|c| {
            c.clusters.len() == c.mojena.k
                && c.cluster_of.iter().max().map_or(0, |m| m + 1) == c.mojena.k
        });
        hits_ok && clusters_ok
    }
}

pub fn write_report(report: &RunReport) -> Result<Vec<u8>> {
    to_canonical_json(report)
}

pub fn read_report(bytes: &[u8]) -> Result<RunReport> {
    Ok(serde_json::from_slice(bytes)?)
}
