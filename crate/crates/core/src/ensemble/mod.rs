//! Conformational ensembles: Cα coordinate matrices plus atom and frame metadata.
//!
//! An [`Ensemble`] stores `F` frames of `N` atoms as a row-major `F × 3N`
//! matrix; row `f` is `(x1, y1, z1, ..., xN, yN, zN)` in Ångström. Readers for
//! multi-model PDB, multi-frame XYZ and plain CSV matrices live in the
//! submodules, together with Kabsch superposition.

mod matrix;
mod pdb;
mod superpose;
mod xyz;

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

pub use matrix::{parse_csv_matrix, write_csv_matrix};
pub use pdb::{format_coord, parse_pdb_multimodel, write_pdb, AtomSelection};
pub use superpose::{rmsd, superpose_kabsch, Superposition};
pub use xyz::parse_xyz;

/// Identity of one atom in the ensemble.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomLabel {
    /// Atom name (`CA` for PDB input, the element/label token for XYZ, `A<i>` for CSV).
    pub name: String,
    pub res_name: String,
    pub res_seq: Option<i32>,
    pub chain: char,
}

impl AtomLabel {
    pub fn residue(res_name: &str, res_seq: i32, chain: char) -> Self {
        AtomLabel {
            name: "CA".to_string(),
            res_name: res_name.to_string(),
            res_seq: Some(res_seq),
            chain,
        }
    }
}

impl fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.res_seq {
            Some(seq) if self.chain != ' ' => write!(f, "{}{}:{}", self.res_name, seq, self.chain),
            Some(seq) => write!(f, "{}{}", self.res_name, seq),
            None => f.write_str(&self.name),
        }
    }
}

/// Input file formats understood by [`read_ensemble`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Pdb,
    Xyz,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pdb" => Ok(Format::Pdb),
            "xyz" => Ok(Format::Xyz),
            "csv" => Ok(Format::Csv),
            other => Err(invalid(format!("unknown format {other:?}"))),
        }
    }
}

impl Format {
    /// Guess from a file extension.
    pub fn from_path(path: &Path) -> Option<Format> {
        path.extension()?.to_str()?.parse().ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble<T> {
    atoms: usize,
    coords: Vec<T>,
    labels: Vec<AtomLabel>,
    frame_times: Option<Vec<f64>>,
    source: String,
}

impl<T: Scalar> Ensemble<T> {
    /// Builds an ensemble from a row-major coordinate matrix, checking every invariant.
    pub fn new(
        coords: Vec<T>,
        labels: Vec<AtomLabel>,
        frame_times: Option<Vec<f64>>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let atoms = labels.len();
        if atoms < 2 {
            return Err(invalid(format!("an ensemble needs at least 2 atoms, got {atoms}")));
        }
        let dim = 3 * atoms;
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len(),
            });
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!(
                "coordinate {} of frame {}",
                i % dim,
                i / dim
            )));
        }
        let frames = coords.len() / dim;
        if let Some(times) = &frame_times {
            if times.len() != frames {
                return Err(invalid(format!(
                    "{} frame times for {frames} frames",
                    times.len()
                )));
            }
            if times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid("frame times must be strictly increasing"));
            }
        }
        Ok(Ensemble {
            atoms,
            coords,
            labels,
            frame_times,
            source: source.into(),
        })
    }

    /// Builds an ensemble from per-frame vectors, each of length `3N`.
    pub fn from_frames(frames: &[Vec<T>], labels: Vec<AtomLabel>, source: &str) -> Result<Self> {
        let dim = 3 * labels.len();
        let mut coords = Vec::with_capacity(frames.len() * dim);
        for row in frames {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Ensemble::new(coords, labels, None, source)
    }

    /// Synthetic residue labels `UNK1..UNKN` on chain `A`.
    pub fn synthetic_labels(atoms: usize) -> Vec<AtomLabel> {
        (0..atoms)
            .map(|i| AtomLabel {
                name: format!("A{}", i + 1),
                res_name: "UNK".to_string(),
                res_seq: Some(i as i32 + 1),
                chain: 'A',
            })
            .collect()
    }

    pub fn n_frames(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms
    }

    /// Length of one frame vector, `3N`.
    pub fn dim(&self) -> usize {
        3 * self.atoms
    }

    pub fn frame(&self, f: usize) -> &[T] {
        let d = self.dim();
        &self.coords[f * d..(f + 1) * d]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim())
    }

    pub fn atom(&self, f: usize, a: usize) -> [T; 3] {
        let row = self.frame(f);
        [row[3 * a], row[3 * a + 1], row[3 * a + 2]]
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn labels(&self) -> &[AtomLabel] {
        &self.labels
    }

    pub fn frame_times(&self) -> Option<&[f64]> {
        self.frame_times.as_deref()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Attaches timestamps `t0 + f·dt` (picoseconds).
    pub fn with_timestep(mut self, t0: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("timestep must be positive, got {dt}")));
        }
        self.frame_times = Some((0..self.n_frames()).map(|f| t0 + f as f64 * dt).collect());
        Ok(self)
    }

    /// Keeps frames `0, stride, 2·stride, ...`.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(invalid("stride must be at least 1"));
        }
        let keep: Vec<usize> = (0..self.n_frames()).step_by(stride).collect();
        Ok(self.select_frames(&keep))
    }

    /// New ensemble holding the listed frames, in the given order.
    pub fn select_frames(&self, frames: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(frames.len() * self.dim());
        for &f in frames {
            coords.extend_from_slice(self.frame(f));
        }
        Ensemble {
            atoms: self.atoms,
            coords,
            labels: self.labels.clone(),
            frame_times: self
                .frame_times
                .as_ref()
                .map(|t| frames.iter().map(|&f| t[f]).collect()),
            source: self.source.clone(),
        }
    }

    pub(crate) fn with_coords(&self, coords: Vec<T>) -> Self {
        debug_assert_eq!(coords.len(), self.coords.len());
        Ensemble {
            coords,
            ..self.clone()
        }
    }
}

/// Reads an ensemble from `path`, or from standard input when `path` is `-`.
pub fn read_ensemble<T: Scalar>(
    path: &Path,
    format: Format,
    selection: &AtomSelection,
) -> Result<Ensemble<T>> {
    let mut bytes = Vec::new();
    if path.as_os_str() == "-" {
        std::io::stdin().read_to_end(&mut bytes)?;
    } else {
        bytes = std::fs::read(path)?;
    }
    let mut e = match format {
        Format::Pdb => parse_pdb_multimodel(&bytes, selection)?,
        Format::Xyz => parse_xyz(&bytes)?,
        Format::Csv => parse_csv_matrix(&bytes)?,
    };
    e.source = path.display().to_string();
    Ok(e)
}

pub(crate) fn utf8(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::Parse {
            line,
            msg: "input is not valid UTF-8".into(),
        }
    })
}
