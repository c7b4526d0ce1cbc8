//! End-to-end orchestration: ingest, train, map, cluster, build networks, export.
//!
//! Every stage produces in-memory artifacts keyed by their path relative to the
//! output directory; [`Artifacts::write_to`] puts them on disk. Failures carry
//! the [`Stage`] they happened in so callers can map them to exit codes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_summaries, complete_linkage, cut_dendrogram, mojena_cut, DEFAULT_MOJENA_K};
use crate::ensemble::{read_ensemble, superpose_kabsch, write_pdb, AtomSelection, Ensemble, Format};
use crate::error::{invalid, Error, Result};
use crate::graph::{classify_edges, connected_components, greedy_modularity, hub_atoms, DEFAULT_LONG_RANGE_GAP};
use crate::network::{
    gather_neuron_series, hard_threshold, pick_threshold, similarity_matrix, soft_threshold, Measure,
    DEFAULT_MIN_FRAMES,
};
use crate::report::{
    export_dot, export_graphml, render_som_svg, to_canonical_json, write_report, ClusterInfo, ClusteringInfo,
    EnsembleInfo, MojenaInfo, NetworkInfo, NetworksInfo, RunReport, SkippedNeuron, TrainingInfo,
    REPORT_FORMAT_VERSION,
};
use crate::scalar::Scalar;
use crate::som::{init_map, map_ensemble, topographic_error, train, Assignment, SomMap, TrainMode, TrainingConfig};

/// How similarity matrices become graphs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Threshold {
    /// Hard threshold at this quantile of the off-diagonal similarities.
    Quantile(f64),
    /// Hard threshold at a fixed similarity.
    Tau(f64),
    /// Soft threshold: weights are similarities raised to this power.
    Beta(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub measure: Measure,
    pub threshold: Threshold,
    pub min_frames: usize,
    pub min_seq_gap: u32,
    pub long_range_gap: u32,
    pub hub_count: usize,
    /// Also write every similarity matrix (unsigned and signed) as CSV.
    pub dump_matrices: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            measure: Measure::XyzPearson,
            threshold: Threshold::Quantile(0.9),
            min_frames: DEFAULT_MIN_FRAMES,
            min_seq_gap: 0,
            long_range_gap: DEFAULT_LONG_RANGE_GAP,
            hub_count: 5,
            dump_matrices: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    /// Guessed from the input extension when absent.
    pub format: Option<Format>,
    pub selection: AtomSelection,
    pub stride: usize,
    /// Frame spacing of the input in picoseconds, when known.
    pub timestep_ps: Option<f64>,
    pub superpose: bool,
    pub reference_frame: usize,
    /// `training.seed` is overwritten by the top-level `seed`.
    pub training: TrainingConfig,
    pub mojena_k: f64,
    pub network: NetworkConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            format: None,
            selection: AtomSelection::default(),
            stride: 1,
            timestep_ps: None,
            superpose: false,
            reference_frame: 0,
            training: TrainingConfig::default(),
            mojena_k: DEFAULT_MOJENA_K,
            network: NetworkConfig::default(),
            out_dir: PathBuf::from("confsom-out"),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| invalid(format!("config: {e}")))
    }

    /// Fills derived values and checks every numeric range.
    pub fn resolve(mut self) -> Result<Self> {
        self.training.seed = self.seed;
        if self.format.is_none() {
            self.format = self.input.as_deref().and_then(Format::from_path);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride < 1 {
            return Err(invalid("stride must be at least 1"));
        }
        if let Some(dt) = self.timestep_ps {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid(format!("timestep_ps must be positive, got {dt}")));
            }
        }
        self.training.validate()?;
        if !(self.mojena_k > 0.0 && self.mojena_k.is_finite()) {
            return Err(invalid(format!("mojena_k must be positive, got {}", self.mojena_k)));
        }
        let net = &self.network;
        if net.min_frames < 3 {
            return Err(invalid("network.min_frames must be at least 3"));
        }
        match net.threshold {
            Threshold::Quantile(q) if !(q > 0.0 && q < 1.0) => {
                Err(invalid(format!("quantile must be in (0, 1), got {q}")))
            }
            Threshold::Tau(t) if !(t > 0.0 && t < 1.0) => Err(invalid(format!("tau must be in (0, 1), got {t}"))),
            Threshold::Beta(b) if !(b >= 1.0 && b.is_finite()) => {
                Err(invalid(format!("beta must be at least 1, got {b}")))
            }
            _ => Ok(()),
        }
    }

    /// Configuration as echoed in reports: everything except the output location.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("out_dir");
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Input,
    Training,
    Mapping,
    Clustering,
    Networks,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Input => "input",
            Stage::Training => "training",
            Stage::Mapping => "mapping",
            Stage::Clustering => "clustering",
            Stage::Networks => "networks",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl StageError {
    /// Process exit code: 2 config, 3 input, 5 dimension mismatch, 4 anything else.
    pub fn exit_code(&self) -> i32 {
        match (&self.stage, &self.source) {
            (Stage::Config, _) => 2,
            (Stage::Input, _) => 3,
            (_, Error::DimensionMismatch { .. }) => 5,
            _ => 4,
        }
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

/// Output files keyed by path relative to the output directory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts(pub BTreeMap<String, Vec<u8>>);

impl Artifacts {
    pub fn insert(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.0.insert(path.into(), bytes);
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.0.get(path).map(Vec::as_slice)
    }

    /// Writes every artifact below `dir`, returning the written paths in order.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.0.len());
        for (rel, bytes) in &self.0 {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Ensemble after reading, optional superposition and subsampling.
pub struct Prepared<T> {
    pub ensemble: Ensemble<T>,
    pub info: EnsembleInfo,
    pub warnings: Vec<String>,
}

pub fn load_input<T: Scalar>(cfg: &PipelineConfig) -> StageResult<Ensemble<T>> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| invalid("no input given"))
        .at(Stage::Config)?;
    let format = cfg
        .format
        .or_else(|| Format::from_path(path))
        .ok_or_else(|| invalid(format!("cannot tell the format of {}; pass a format", path.display())))
        .at(Stage::Config)?;
    read_ensemble(path, format, &cfg.selection).at(Stage::Input)
}

pub fn prepare<T: Scalar>(cfg: &PipelineConfig, raw: Ensemble<T>) -> StageResult<Prepared<T>> {
    let mut warnings = Vec::new();
    let frames_read = raw.n_frames();
    let mut e = raw;
    if let Some(dt) = cfg.timestep_ps {
        e = e.with_timestep(0.0, dt).at(Stage::Config)?;
    }
    let mut degenerate = Vec::new();
    if cfg.superpose {
        let s = superpose_kabsch(&e, cfg.reference_frame).at(Stage::Config)?;
        if !s.degenerate_frames.is_empty() {
            warnings.push(format!(
                "{} frames with degenerate geometry were not superposed",
                s.degenerate_frames.len()
            ));
        }
        degenerate = s.degenerate_frames;
        e = s.ensemble;
    }
    let e = e.subsample(cfg.stride).at(Stage::Config)?;
    let info = EnsembleInfo {
        source: e.source().to_string(),
        frames_read,
        frames_used: e.n_frames(),
        atoms: e.n_atoms(),
        stride: cfg.stride,
        superposed: cfg.superpose,
        degenerate_frames: degenerate,
    };
    Ok(Prepared {
        ensemble: e,
        info,
        warnings,
    })
}

pub fn train_map<T: Scalar>(cfg: &PipelineConfig, e: &Ensemble<T>) -> StageResult<(SomMap<T>, Vec<String>)> {
    let mut warnings = Vec::new();
    let init = init_map(e, &cfg.training).at(Stage::Training)?;
    if init.init_used() != cfg.training.init {
        warnings.push("linear initialization fell back to random: fewer than two principal directions".into());
    }
    let map = train(&init, e, &cfg.training).at(Stage::Training)?;
    Ok((map, warnings))
}

/// Which post-training stages to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub clustering: bool,
    pub networks: bool,
}

impl Stages {
    pub const NONE: Stages = Stages {
        clustering: false,
        networks: false,
    };
    pub const ALL: Stages = Stages {
        clustering: true,
        networks: true,
    };
}

fn training_info<T: Scalar>(map: &SomMap<T>, a: &Assignment, te: f64, frames: usize) -> TrainingInfo {
    let cfg = map.config();
    TrainingInfo {
        rows: map.grid().rows,
        cols: map.grid().cols,
        init_used: map.init_used(),
        steps: match cfg.mode {
            TrainMode::Batch => cfg.train_len,
            TrainMode::Sequential => cfg.train_len * frames,
        },
        quantization_error: a.qe,
        topographic_error: te,
    }
}

fn clustering_stage<T: Scalar>(
    cfg: &PipelineConfig,
    map: &SomMap<T>,
    e: &Ensemble<T>,
    a: &Assignment,
    out: &mut Artifacts,
    warnings: &mut Vec<String>,
) -> Result<ClusteringInfo> {
    let dendrogram = complete_linkage(map.prototypes(), map.dim())?;
    let cut = mojena_cut(&dendrogram, cfg.mojena_k)?;
    if cut.fallback {
        warnings.push("Mojena's rule never triggered; using the fallback of 2 clusters".into());
    }
    if cut.undefined {
        warnings.push("Mojena's rule undefined for fewer than 3 neurons".into());
    }
    let partition = cut_dendrogram(&dendrogram, cut.k, cfg.mojena_k)?;
    let summaries = cluster_summaries(&partition, map, e, a)?;
    out.insert("dendrogram.csv", dendrogram.to_csv());
    out.insert("som.svg", render_som_svg(map, a, &partition)?);

    let mut clusters = Vec::with_capacity(summaries.len());
    for s in summaries {
        if s.searched_all_frames {
            warnings.push(format!(
                "cluster {} won no frames; its representative was searched over all frames",
                s.cluster
            ));
        }
        let name = format!("representatives/cluster_{:03}.pdb", s.cluster);
        let pdb = match write_pdb(e, s.representative_frame) {
            Ok(bytes) => {
                out.insert(name.clone(), bytes);
                Some(name)
            }
            Err(err) => {
                warnings.push(format!("cluster {}: representative not written: {err}", s.cluster));
                None
            }
        };
        clusters.push(ClusterInfo {
            cluster: s.cluster,
            neurons: s.neurons,
            centroid: s.centroid.iter().map(|v| v.as_f64()).collect(),
            representative_frame: s.representative_frame,
            representative_distance: s.representative_distance,
            frames_won: s.frames_won,
            searched_all_frames: s.searched_all_frames,
            pdb,
        });
    }
    let finite = |v: f64| v.is_finite().then_some(v);
    Ok(ClusteringInfo {
        cluster_of: partition.cluster_of,
        dendrogram_heights: dendrogram.heights(),
        mojena: MojenaInfo {
            k_const: cut.k_const,
            mean: finite(cut.mean),
            std_dev: finite(cut.std_dev),
            threshold: finite(cut.threshold),
            k: cut.k,
            fallback: cut.fallback,
            undefined: cut.undefined,
        },
        clusters,
    })
}

struct NeuronOutput {
    info: NetworkInfo,
    files: Vec<(String, Vec<u8>)>,
    warning: Option<String>,
}

fn neuron_network<T: Scalar>(
    net: &crate::pipeline::NetworkConfig,
    e: &Ensemble<T>,
    a: &Assignment,
    neuron: usize,
) -> Result<std::result::Result<NeuronOutput, SkippedNeuron>> {
    let series = match gather_neuron_series(e, a, neuron, net.min_frames) {
        Ok(s) => s,
        Err(Error::InsufficientFrames { hits, .. }) => {
            return Ok(Err(SkippedNeuron {
                neuron,
                hits,
                reason: "insufficient frames".into(),
            }))
        }
        Err(err) => return Err(err),
    };
    let sim = similarity_matrix(&series, net.measure)?;
    let graph = match net.threshold {
        Threshold::Quantile(q) => {
            let tau = pick_threshold(&sim, q)?;
            if tau > 0.0 && tau < 1.0 {
                hard_threshold(&sim, e.labels(), tau, net.min_seq_gap)?
            } else {
                // Saturated similarities; the quantile cannot separate pairs.
                return Ok(Err(SkippedNeuron {
                    neuron,
                    hits: series.n_frames(),
                    reason: format!("quantile threshold {tau} outside (0, 1)"),
                }));
            }
        }
        Threshold::Tau(tau) => hard_threshold(&sim, e.labels(), tau, net.min_seq_gap)?,
        Threshold::Beta(beta) => soft_threshold(&sim, e.labels(), beta)?,
    };
    let communities = if graph.edges.is_empty() {
        connected_components(&graph)
    } else {
        greedy_modularity(&graph)?
    };
    let classes = classify_edges(&graph, net.long_range_gap, e, &series.frames_used)?;
    let hubs = hub_atoms(&graph, net.hub_count).into_iter().map(|(i, _)| i).collect();

    let id = format!("neuron_{neuron:03}");
    let mut files = vec![
        (
            format!("networks/{id}.graphml"),
            export_graphml(&graph, &communities, Some(&classes), &id)?,
        ),
        (
            format!("networks/{id}.dot"),
            export_dot(&graph, &communities, Some(&classes), &id)?,
        ),
    ];
    if net.dump_matrices {
        files.push((format!("networks/{id}_similarity.csv"), sim.to_csv(false)));
        files.push((format!("networks/{id}_similarity_signed.csv"), sim.to_csv(true)));
    }
    let warning = classes
        .index_gap_fallback
        .then(|| format!("neuron {neuron}: residue numbers missing, edges classified by atom index gap"));
    Ok(Ok(NeuronOutput {
        info: NetworkInfo {
            neuron,
            frames: series.n_frames(),
            measure: sim.measure,
            combination: sim.combination,
            construction: graph.construction,
            nodes: graph.n_nodes(),
            edges: graph.edges.len(),
            communities: communities.count(),
            community_method: communities.method,
            modularity: communities.q,
            long_range_edges: classes.long_range_count(),
            flagged_pairs: sim.flagged.len(),
            hubs,
            files: files.iter().map(|(p, _)| p.clone()).collect(),
        },
        files,
        warning,
    }))
}

fn networks_stage<T: Scalar>(
    cfg: &PipelineConfig,
    e: &Ensemble<T>,
    a: &Assignment,
    out: &mut Artifacts,
    warnings: &mut Vec<String>,
) -> Result<NetworksInfo> {
    let results: Vec<_> = (0..a.hits.len())
        .into_par_iter()
        .map(|n| neuron_network(&cfg.network, e, a, n))
        .collect::<Result<Vec<_>>>()?;
    let mut analyzed = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(n) => {
                for (path, bytes) in n.files {
                    out.insert(path, bytes);
                }
                warnings.extend(n.warning);
                analyzed.push(n.info);
            }
            Err(s) => skipped.push(s),
        }
    }
    Ok(NetworksInfo { analyzed, skipped })
}

/// Everything a run produced.
pub struct RunOutput<T> {
    pub map: SomMap<T>,
    pub assignment: Assignment,
    pub report: RunReport,
    pub artifacts: Artifacts,
}

/// Runs training (unless `map` is given) and the selected analysis stages.
pub fn run<T: Scalar>(
    cfg: &PipelineConfig,
    raw: Ensemble<T>,
    map: Option<SomMap<T>>,
    stages: Stages,
) -> StageResult<RunOutput<T>> {
    cfg.validate().at(Stage::Config)?;
    let prepared = prepare(cfg, raw)?;
    let e = &prepared.ensemble;
    let mut warnings = prepared.warnings.clone();
    let mut artifacts = Artifacts::default();

    let (map, trained_now) = match map {
        Some(m) => (m, false),
        None => {
            let (m, w) = train_map(cfg, e)?;
            warnings.extend(w);
            (m, true)
        }
    };
    let assignment = map_ensemble(&map, e).at(Stage::Mapping)?;
    let te = if map.len() >= 2 {
        topographic_error(&map, e).at(Stage::Mapping)?
    } else {
        0.0
    };
    if trained_now {
        artifacts.insert("som.json", map.to_json().at(Stage::Output)?);
    }

    let clustering = if stages.clustering {
        Some(clustering_stage(cfg, &map, e, &assignment, &mut artifacts, &mut warnings).at(Stage::Clustering)?)
    } else {
        None
    };
    let networks = if stages.networks {
        Some(networks_stage(cfg, e, &assignment, &mut artifacts, &mut warnings).at(Stage::Networks)?)
    } else {
        None
    };

    let report = RunReport {
        format_version: REPORT_FORMAT_VERSION,
        config: cfg.echo(),
        seed: cfg.seed,
        ensemble: prepared.info,
        training: Some(training_info(&map, &assignment, te, e.n_frames())),
        bmu: assignment.bmu.clone(),
        hits: assignment.hits.clone(),
        clustering,
        networks,
        warnings,
    };
    debug_assert!(report.is_consistent());
    artifacts.insert("report.json", write_report(&report).at(Stage::Output)?);
    Ok(RunOutput {
        map,
        assignment,
        report,
        artifacts,
    })
}

/// Per-frame classification of a (possibly foreign) ensemble on a trained map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub format_version: u32,
    pub source: String,
    pub frames: usize,
    pub bmu: Vec<usize>,
    pub hits: Vec<usize>,
    pub quantization_error: f64,
    pub topographic_error: f64,
}

pub fn classify<T: Scalar>(
    cfg: &PipelineConfig,
    map: &SomMap<T>,
    raw: Ensemble<T>,
) -> StageResult<(Classification, Artifacts)> {
    let prepared = prepare(cfg, raw)?;
    let e = &prepared.ensemble;
    let a = map_ensemble(map, e).at(Stage::Mapping)?;
    let te = if map.len() >= 2 {
        topographic_error(map, e).at(Stage::Mapping)?
    } else {
        0.0
    };
    let c = Classification {
        format_version: REPORT_FORMAT_VERSION,
        source: e.source().to_string(),
        frames: e.n_frames(),
        bmu: a.bmu,
        hits: a.hits,
        quantization_error: a.qe,
        topographic_error: te,
    };
    let mut artifacts = Artifacts::default();
    artifacts.insert("classification.json", to_canonical_json(&c).at(Stage::Output)?);
    Ok((c, artifacts))
}

pub fn load_map<T: Scalar>(path: &Path) -> StageResult<SomMap<T>> {
    let bytes = std::fs::read(path).map_err(Error::from).at(Stage::Input)?;
    SomMap::from_json(&bytes).at(Stage::Input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_json(br#"{"stride": 2, "bogus": 1}"#).is_err());
        assert!(PipelineConfig::from_json(br#"{"training": {"map_sise": 4}}"#).is_err());
        let cfg = PipelineConfig::from_json(br#"{"stride": 2, "network": {"threshold": {"beta": 6}}}"#).unwrap();
        assert_eq!(cfg.stride, 2);
        assert_eq!(cfg.network.threshold, Threshold::Beta(6.0));
        assert_eq!(cfg.training.map_size, 100);
    }

    #[test]
    fn resolve_copies_seed_and_guesses_format() {
        let cfg = PipelineConfig {
            input: Some("traj.pdb".into()),
            seed: 17,
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(cfg.training.seed, 17);
        assert_eq!(cfg.format, Some(Format::Pdb));
    }

    #[test]
    fn invalid_ranges() {
        let bad = [
            PipelineConfig { stride: 0, ..Default::default() },
            PipelineConfig { mojena_k: 0.0, ..Default::default() },
            PipelineConfig {
                network: NetworkConfig { threshold: Threshold::Quantile(1.0), ..Default::default() },
                ..Default::default()
            },
            PipelineConfig {
                network: NetworkConfig { threshold: Threshold::Beta(0.5), ..Default::default() },
                ..Default::default()
            },
            PipelineConfig {
                network: NetworkConfig { min_frames: 2, ..Default::default() },
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn echo_omits_out_dir_and_fills_defaults() {
        let echo = PipelineConfig::default().echo();
        assert!(echo.get("out_dir").is_none());
        assert_eq!(echo["training"]["train_len"], 5000);
        assert_eq!(echo["network"]["threshold"]["quantile"], 0.9);
    }

    #[test]
    fn exit_codes() {
        let e = |stage, source| StageError { stage, source };
        assert_eq!(e(Stage::Config, invalid("x")).exit_code(), 2);
        assert_eq!(e(Stage::Input, Error::NoAtoms).exit_code(), 3);
        assert_eq!(e(Stage::Mapping, Error::DimensionMismatch { expected: 1, found: 2 }).exit_code(), 5);
        assert_eq!(e(Stage::Networks, Error::EmptyGraph).exit_code(), 4);
    }
}
