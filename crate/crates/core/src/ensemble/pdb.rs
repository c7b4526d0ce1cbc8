use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{utf8, AtomLabel, Ensemble};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Which ATOM records become ensemble atoms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomSelection {
    pub atom_names: Vec<String>,
    /// Accepted alternate-location codes; `' '` is the blank code.
    pub alt_locs: Vec<char>,
    /// Restrict to these chains; `None` keeps every chain.
    pub chains: Option<Vec<char>>,
}

impl Default for AtomSelection {
    fn default() -> Self {
        AtomSelection {
            atom_names: vec!["CA".to_string()],
            alt_locs: vec![' ', 'A'],
            chains: None,
        }
    }
}

impl AtomSelection {
    fn matches(&self, name: &str, alt_loc: char, chain: char) -> bool {
        self.atom_names.iter().any(|n| n == name)
            && self.alt_locs.contains(&alt_loc)
            && self.chains.as_ref().is_none_or(|c| c.contains(&chain))
    }
}

fn column(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    if start >= end {
        return "";
    }
    line.get(start..end).unwrap_or("")
}

fn column_char(line: &str, at: usize) -> char {
    line.get(at..at + 1)
        .and_then(|s| s.chars().next())
        .unwrap_or(' ')
}

type Frame<T> = Vec<(AtomLabel, [T; 3])>;

/// Parses every MODEL of a PDB file (or the bare ATOM records when there are
/// no MODEL cards) into one frame each.
///
/// Coordinates come from the fixed-width columns 31-54. HETATM records, atoms
/// with an insertion code and atoms outside the selection are skipped.
pub fn parse_pdb_multimodel<T: Scalar>(
    bytes: &[u8],
    selection: &AtomSelection,
) -> Result<Ensemble<T>> {
    let text = utf8(bytes)?;
    let mut frames: Vec<Frame<T>> = Vec::new();
    let mut current: Frame<T> = Vec::new();
    let mut open = false;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let record = column(line, 0, 6);
        match record.trim_end() {
            "MODEL" => {
                if open || !current.is_empty() {
                    frames.push(std::mem::take(&mut current));
                }
                open = true;
            }
            "ENDMDL" => {
                frames.push(std::mem::take(&mut current));
                open = false;
            }
            "ATOM" => {
                let name = column(line, 12, 16).trim();
                let alt_loc = column_char(line, 16);
                let chain = column_char(line, 21);
                let insertion = column_char(line, 26);
                if insertion != ' ' || !selection.matches(name, alt_loc, chain) {
                    continue;
                }
                let res_name = column(line, 17, 20).trim().to_string();
                let res_seq = column(line, 22, 26).trim();
                let res_seq = if res_seq.is_empty() {
                    None
                } else {
                    Some(res_seq.parse::<i32>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("malformed residue number {res_seq:?}"),
                    })?)
                };
                let mut xyz = [T::zero(); 3];
                for (k, slot) in xyz.iter_mut().enumerate() {
                    let start = 30 + 8 * k;
                    let field = line.get(start..start + 8).ok_or_else(|| Error::Parse {
                        line: lineno,
                        msg: "coordinate field truncated".into(),
                    })?;
                    *slot = field.trim().parse::<T>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("malformed coordinate field {field:?}"),
                    })?;
                    if !slot.is_finite() {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("non-finite coordinate {field:?}"),
                        });
                    }
                }
                current.push((
                    AtomLabel {
                        name: name.to_string(),
                        res_name,
                        res_seq,
                        chain,
                    },
                    xyz,
                ));
            }
            _ => {}
        }
    }
    if !current.is_empty() {
        frames.push(current);
    }

    assemble(frames)
}

fn assemble<T: Scalar>(frames: Vec<Frame<T>>) -> Result<Ensemble<T>> {
    let Some(first) = frames.first() else {
        return Err(Error::NoAtoms);
    };
    let atoms = first.len();
    if atoms == 0 {
        return Err(Error::NoAtoms);
    }
    let labels: Vec<AtomLabel> = first.iter().map(|(l, _)| l.clone()).collect();
    let mut coords = Vec::with_capacity(frames.len() * 3 * atoms);
    for (f, frame) in frames.iter().enumerate() {
        if frame.len() != atoms {
            return Err(Error::InconsistentAtomCount {
                frame: f,
                expected: atoms,
                found: frame.len(),
            });
        }
        for (a, (label, xyz)) in frame.iter().enumerate() {
            if label != &labels[a] {
                return Err(Error::InconsistentLabels { frame: f, atom: a });
            }
            coords.extend_from_slice(xyz);
        }
    }
    Ensemble::new(coords, labels, None, "pdb")
}

/// Renders a coordinate as the 8-column, 3-decimal PDB field.
pub fn format_coord<T: Scalar>(v: T) -> Result<String> {
    let s = format!("{:8.3}", v.as_f64());
    if s.len() > 8 {
        return Err(invalid(format!("coordinate {v} does not fit the PDB 8.3 field")));
    }
    Ok(s)
}

/// Writes frame `frame` as a single-model PDB of CA ATOM records.
///
/// Coordinates must lie in (-1000, 10000) Å to fit the fixed-width field.
pub fn write_pdb<T: Scalar>(e: &Ensemble<T>, frame: usize) -> Result<Vec<u8>> {
    if frame >= e.n_frames() {
        return Err(invalid(format!(
            "frame {frame} out of range for {} frames",
            e.n_frames()
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "REMARK   1 FRAME {frame} OF {}", e.source());
    out.push_str("MODEL        1\n");
    for (a, label) in e.labels().iter().enumerate() {
        let [x, y, z] = e.atom(frame, a);
        let res_name: String = label.res_name.chars().take(3).collect();
        let res_seq = label.res_seq.unwrap_or(a as i32 + 1);
        let _ = writeln!(
            out,
            "ATOM  {:>5}  CA  {:>3} {}{:>4}    {}{}{}  1.00  0.00           C",
            (a + 1) % 100_000,
            res_name,
            label.chain,
            res_seq,
            format_coord(x)?,
            format_coord(y)?,
            format_coord(z)?,
        );
    }
    out.push_str("TER\nENDMDL\nEND\n");
    Ok(out.into_bytes())
}
