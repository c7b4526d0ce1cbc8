use super::Ensemble;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parses a numeric matrix with one frame per row and `3N` columns.
///
/// A first row that does not parse as numbers is taken as a header.
pub fn parse_csv_matrix<T: Scalar>(bytes: &[u8]) -> Result<Ensemble<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);

    let mut coords: Vec<T> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(idx + 1, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<T>, _> =
            record.iter().map(|f| f.parse::<T>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if width.is_none() && coords.is_empty() && idx == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    msg: "non-numeric field".into(),
                })
            }
        };
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite value {bad}"),
            });
        }
        match width {
            None => {
                if row.len() % 3 != 0 {
                    return Err(Error::Parse {
                        line,
                        msg: format!("{} columns is not a multiple of 3", row.len()),
                    });
                }
                width = Some(row.len());
            }
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    line,
                    msg: format!("ragged row: {} columns, expected {w}", row.len()),
                });
            }
            Some(_) => {}
        }
        coords.extend(row);
    }
    let Some(width) = width else {
        return Err(Error::NoAtoms);
    };
    Ensemble::new(coords, Ensemble::<T>::synthetic_labels(width / 3), None, "csv")
}

/// Writes the coordinate matrix as CSV using shortest round-trip formatting.
pub fn write_csv_matrix<T: Scalar>(e: &Ensemble<T>, header: bool) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if header {
        let names = (1..=e.n_atoms()).flat_map(|a| [format!("x{a}"), format!("y{a}"), format!("z{a}")]);
        w.write_record(names).expect("in-memory write");
    }
    for row in e.frames() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
