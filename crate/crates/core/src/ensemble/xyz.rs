use super::{utf8, AtomLabel, Ensemble};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parses a multi-frame XYZ file: repeated `count`, comment, `count` atom lines.
///
/// Atom labels come from the first block; later blocks must declare the same count.
pub fn parse_xyz<T: Scalar>(bytes: &[u8]) -> Result<Ensemble<T>> {
    let text = utf8(bytes)?;
    let mut lines = text.lines().enumerate().peekable();
    let mut labels: Vec<AtomLabel> = Vec::new();
    let mut coords: Vec<T> = Vec::new();
    let mut frames = 0usize;

    loop {
        while lines.peek().is_some_and(|(_, l)| l.trim().is_empty()) {
            lines.next();
        }
        let Some((idx, count_line)) = lines.next() else {
            break;
        };
        let count: usize = count_line.trim().parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("expected an atom count, found {:?}", count_line.trim()),
        })?;
        if frames > 0 && count != labels.len() {
            return Err(Error::InconsistentAtomCount {
                frame: frames,
                expected: labels.len(),
                found: count,
            });
        }
        if lines.next().is_none() {
            return Err(Error::Parse {
                line: idx + 2,
                msg: "missing comment line".into(),
            });
        }
        for k in 0..count {
            let Some((idx, line)) = lines.next() else {
                return Err(Error::Parse {
                    line: text.lines().count() + 1,
                    msg: format!("block declares {count} atoms but ends after {k}"),
                });
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 4 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("block declares {count} atoms but atom line {k} is {line:?}"),
                });
            }
            for field in &fields[1..4] {
                let v: T = field.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("non-numeric coordinate {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("non-finite coordinate {field:?}"),
                    });
                }
                coords.push(v);
            }
            if frames == 0 {
                labels.push(AtomLabel {
                    name: fields[0].to_string(),
                    res_name: fields[0].to_string(),
                    res_seq: None,
                    chain: ' ',
                });
            }
        }
        frames += 1;
    }
    if frames == 0 || labels.is_empty() {
        return Err(Error::NoAtoms);
    }
    Ensemble::new(coords, labels, None, "xyz")
}
