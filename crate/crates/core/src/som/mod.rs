//! Hexagonal self-organizing maps over conformation vectors.

mod grid;
mod init;
mod train;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{invalid, Error, Result};
use crate::scalar::{dist, sq_dist, sq_dist_bounded, Scalar};

pub use grid::{neighborhood, HexGrid};
pub use init::init_map;
pub use train::{train, train_batch, train_sequential};

pub const MAP_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborFn {
    #[default]
    Gaussian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    #[default]
    Batch,
    Sequential,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    #[default]
    Linear,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub map_size: usize,
    /// Initial neighbourhood radius in lattice units.
    pub radius0: f64,
    pub radius_final: f64,
    /// Epochs in batch mode; `train_len * F` presentations in sequential mode.
    pub train_len: usize,
    pub neighbor_fn: NeighborFn,
    pub mode: TrainMode,
    /// Initial learning rate, sequential mode only.
    pub alpha0: f64,
    pub init: InitMethod,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            map_size: 100,
            radius0: 3.0,
            radius_final: 1.0,
            train_len: 5000,
            neighbor_fn: NeighborFn::Gaussian,
            mode: TrainMode::Batch,
            alpha0: 0.5,
            init: InitMethod::Linear,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.map_size < 4 {
            return Err(invalid(format!("map_size must be at least 4, got {}", self.map_size)));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(invalid(format!("alpha0 must be in (0, 1], got {}", self.alpha0)));
        }
        self.validate_schedule()
    }

    pub(crate) fn validate_schedule(&self) -> Result<()> {
        if self.train_len < 1 {
            return Err(invalid("train_len must be at least 1"));
        }
        if !(self.radius_final > 0.0 && self.radius0 >= self.radius_final && self.radius0.is_finite())
        {
            return Err(invalid(format!(
                "radii must satisfy radius0 >= radius_final > 0, got {} and {}",
                self.radius0, self.radius_final
            )));
        }
        Ok(())
    }

    /// Linear radius schedule; constant when there is a single step.
    pub(crate) fn radius_at(&self, step: usize, steps: usize) -> f64 {
        if steps <= 1 {
            return self.radius0;
        }
        self.radius0 + (self.radius_final - self.radius0) * step as f64 / (steps - 1) as f64
    }
}

/// A lattice of neurons, each holding a prototype vector in conformation space.
#[derive(Clone, Debug, PartialEq)]
pub struct SomMap<T> {
    grid: HexGrid,
    dim: usize,
    prototypes: Vec<T>,
    trained: bool,
    config: TrainingConfig,
    init_used: InitMethod,
}

impl<T: Scalar> SomMap<T> {
    /// Wraps a row-major `M x dim` prototype matrix.
    pub fn from_prototypes(
        grid: HexGrid,
        dim: usize,
        prototypes: Vec<T>,
        config: TrainingConfig,
    ) -> Result<Self> {
        if dim == 0 || prototypes.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * dim,
                found: prototypes.len(),
            });
        }
        if prototypes.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prototype entry".into()));
        }
        let init_used = config.init;
        Ok(SomMap {
            grid,
            dim,
            prototypes,
            trained: false,
            config,
            init_used,
        })
    }

    pub fn grid(&self) -> &HexGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prototype(&self, i: usize) -> &[T] {
        &self.prototypes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn prototypes(&self) -> &[T] {
        &self.prototypes
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    /// Initialization actually applied; differs from the configured one after a fallback.
    pub fn init_used(&self) -> InitMethod {
        self.init_used
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }

    /// Best-matching unit of `x`; ties go to the lowest neuron index.
    pub fn bmu(&self, x: &[T]) -> Result<usize> {
        self.check_dim(x.len())?;
        Ok(self.nearest(x).0)
    }

    pub(crate) fn nearest(&self, x: &[T]) -> (usize, T) {
        self.nearest_from(x, 0)
    }

    /// Nearest prototype, scanning with `hint`'s distance as the initial bound.
    /// The answer is the lowest index at the minimal distance whatever the hint.
    pub(crate) fn nearest_from(&self, x: &[T], hint: usize) -> (usize, T) {
        let mut best = hint;
        let mut best_d = sq_dist(x, self.prototype(hint));
        for (i, m) in self.prototypes.chunks_exact(self.dim).enumerate() {
            if i == hint {
                continue;
            }
            if let Some(d) = sq_dist_bounded(x, m, best_d) {
                if d < best_d || (d == best_d && i < best) {
                    best = i;
                    best_d = d;
                }
            }
        }
        (best, best_d)
    }

    fn nearest_two(&self, x: &[T]) -> (usize, usize) {
        let (mut first, mut second) = (usize::MAX, usize::MAX);
        let (mut d1, mut d2) = (T::infinity(), T::infinity());
        for (i, m) in self.prototypes.chunks_exact(self.dim).enumerate() {
            let d = sq_dist(x, m);
            if d < d1 {
                (second, d2) = (first, d1);
                (first, d1) = (i, d);
            } else if d < d2 {
                (second, d2) = (i, d);
            }
        }
        (first, second)
    }

    /// Winners of every frame, using the previous winners as search hints.
    ///
    /// A neuron `i` farther than twice the hint's distance from the hint's
    /// prototype cannot be closer to `x` than the hint, so it is skipped. The
    /// comparison carries a margin far above rounding error, which keeps the
    /// result identical to an exhaustive search.
    pub(crate) fn update_bmus(&self, e: &Ensemble<T>, bmus: &mut [usize]) {
        let m = self.len();
        let mut between = vec![0.0f64; m * m];
        between.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            for (j, d) in row.iter_mut().enumerate() {
                *d = dist(self.prototype(i), self.prototype(j)).as_f64();
            }
        });
        let margin = 1.0 + 1e-9 + 16.0 * self.dim as f64 * T::epsilon().as_f64();
        e.coords()
            .par_chunks_exact(self.dim)
            .zip(bmus.par_iter_mut())
            .for_each(|(x, b)| {
                let hint = *b;
                let mut best = hint;
                let mut best_d = sq_dist(x, self.prototype(hint));
                let reach = 2.0 * best_d.as_f64().sqrt() * margin;
                let row = &between[hint * m..(hint + 1) * m];
                for (i, p) in self.prototypes.chunks_exact(self.dim).enumerate() {
                    if i == hint || row[i] > reach {
                        continue;
                    }
                    if let Some(d) = sq_dist_bounded(x, p, best_d) {
                        if d < best_d || (d == best_d && i < best) {
                            best = i;
                            best_d = d;
                        }
                    }
                }
                *b = best;
            });
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let doc = MapDocument {
            format_version: MAP_FORMAT_VERSION,
            rows: self.grid.rows,
            cols: self.grid.cols,
            dim: self.dim,
            trained: self.trained,
            init_used: self.init_used,
            config: self.config.clone(),
            prototypes: self
                .prototypes
                .chunks_exact(self.dim)
                .map(|r| r.to_vec())
                .collect(),
        };
        crate::report::to_canonical_json(&doc)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let doc: MapDocument<T> = serde_json::from_slice(bytes)?;
        if doc.format_version != MAP_FORMAT_VERSION {
            return Err(invalid(format!(
                "unsupported map format version {}",
                doc.format_version
            )));
        }
        let grid = HexGrid::new(doc.rows, doc.cols)?;
        if doc.prototypes.len() != grid.len() || doc.prototypes.iter().any(|r| r.len() != doc.dim) {
            return Err(invalid("prototype matrix does not match the grid dimensions"));
        }
        let mut map = SomMap::from_prototypes(
            grid,
            doc.dim,
            doc.prototypes.concat(),
            doc.config,
        )?;
        map.trained = doc.trained;
        map.init_used = doc.init_used;
        Ok(map)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDocument<T> {
    format_version: u32,
    rows: usize,
    cols: usize,
    dim: usize,
    trained: bool,
    init_used: InitMethod,
    config: TrainingConfig,
    prototypes: Vec<Vec<T>>,
}

/// Frame-to-neuron mapping of an ensemble on a map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub bmu: Vec<usize>,
    pub hits: Vec<usize>,
    /// Mean distance between each frame and its best-matching prototype (Å).
    pub qe: f64,
}

impl Assignment {
    /// Frames won by `neuron`, in frame order.
    pub fn frames_of(&self, neuron: usize) -> Vec<usize> {
        (0..self.bmu.len()).filter(|&f| self.bmu[f] == neuron).collect()
    }
}

/// Assigns every frame of `e` to its best-matching neuron.
///
/// Works for any ensemble with the map's dimensionality, including
/// conformations of a related protein that were not used in training.
pub fn map_ensemble<T: Scalar>(map: &SomMap<T>, e: &Ensemble<T>) -> Result<Assignment> {
    map.check_dim(e.dim())?;
    let pairs: Vec<(usize, T)> = e
        .coords()
        .par_chunks_exact(map.dim)
        .map(|x| map.nearest(x))
        .collect();
    let mut hits = vec![0; map.len()];
    let mut total = 0.0;
    for &(b, d2) in &pairs {
        hits[b] += 1;
        total += d2.as_f64().sqrt();
    }
    Ok(Assignment {
        bmu: pairs.into_iter().map(|(b, _)| b).collect(),
        hits,
        qe: total / e.n_frames() as f64,
    })
}

/// Fraction of frames whose two closest prototypes are not lattice neighbours.
pub fn topographic_error<T: Scalar>(map: &SomMap<T>, e: &Ensemble<T>) -> Result<f64> {
    if map.len() < 2 {
        return Err(invalid("topographic error needs at least 2 neurons"));
    }
    map.check_dim(e.dim())?;
    let broken: usize = e
        .coords()
        .par_chunks_exact(map.dim)
        .map(|x| {
            let (a, b) = map.nearest_two(x);
            usize::from(!map.grid.adjacent(a, b))
        })
        .sum();
    Ok(broken as f64 / e.n_frames() as f64)
}
