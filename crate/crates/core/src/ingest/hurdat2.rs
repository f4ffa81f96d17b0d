//! NOAA HURDAT2 best-track reader.
//!
//! A storm is a header line (`AL092011, IRENE, 39,`) followed by the declared
//! number of data lines (`20110821, 0000,  , TS, 15.0N,  59.0W, ...`).

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{Dataset, IngestError, Trajectory, TrajectoryPoint};
use crate::Scalar;

pub fn load_hurdat2<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_hurdat2(file)
}

/// Parses HURDAT2 text. `x` is signed longitude (east positive), `y` signed
/// latitude (north positive); each point carries its month.
pub fn read_hurdat2<T: Scalar, R: Read>(reader: R) -> Result<Dataset<T>, IngestError> {
    let mut lines = BufReader::new(reader)
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l));
    let mut storms = Vec::new();
    let io_err = |source| IngestError::Io {
        path: "<hurdat2>".into(),
        source,
    };

    let mut pending: Option<(u64, String)> = None;
    loop {
        let (line_no, line) = match pending.take() {
            Some(l) => l,
            None => match lines.next() {
                Some((n, l)) => (n, l.map_err(io_err)?),
                None => break,
            },
        };
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_fields(&line);
        if !is_header(&fields) {
            return Err(IngestError::Malformed {
                line: line_no,
                reason: format!("expected storm header, found {:?}", line.trim()),
            });
        }
        let storm = fields[0].to_string();
        let declared: usize = fields[2].parse().map_err(|_| IngestError::Malformed {
            line: line_no,
            reason: format!("record count {:?} is not an integer", fields[2]),
        })?;

        let mut points = Vec::with_capacity(declared);
        while points.len() < declared {
            let Some((n, l)) = lines.next() else { break };
            let l = l.map_err(io_err)?;
            let f = split_fields(&l);
            if is_header(&f) {
                pending = Some((n, l));
                break;
            }
            points.push(parse_record(&f, n, points.len())?);
        }
        if points.len() != declared {
            return Err(IngestError::RecordCount {
                line: line_no,
                storm,
                declared,
                found: points.len(),
            });
        }
        storms.push(Trajectory { id: storm, points });
    }
    Dataset::new(storms)
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn is_header(fields: &[&str]) -> bool {
    let Some(id) = fields.first() else {
        return false;
    };
    fields.len() >= 3
        && id.len() == 8
        && id[..2].chars().all(|c| c.is_ascii_alphabetic())
        && id[2..].chars().all(|c| c.is_ascii_digit())
}

fn parse_record<T: Scalar>(
    fields: &[&str],
    line: u64,
    seq_index: usize,
) -> Result<TrajectoryPoint<T>, IngestError> {
    let malformed = |reason: String| IngestError::Malformed { line, reason };
    if fields.len() < 6 {
        return Err(malformed(format!("expected at least 6 fields, found {}", fields.len())));
    }
    let date = fields[0];
    if date.len() != 8 || !date.chars().all(|c| c.is_ascii_digit()) {
        return Err(malformed(format!("bad date {date:?}")));
    }
    let month: u8 = date[4..6].parse().unwrap_or(0);
    if !(1..=12).contains(&month) {
        return Err(malformed(format!("bad month in date {date:?}")));
    }
    let lat = parse_coordinate(fields[4]).ok_or_else(|| malformed(format!("bad latitude {:?}", fields[4])))?;
    let lon = parse_coordinate(fields[5]).ok_or_else(|| malformed(format!("bad longitude {:?}", fields[5])))?;
    if !matches!(fields[4].chars().last(), Some('N' | 'S')) || !matches!(fields[5].chars().last(), Some('E' | 'W')) {
        return Err(malformed("latitude/longitude hemisphere letters swapped".into()));
    }
    Ok(TrajectoryPoint {
        seq_index,
        x: T::lit(lon),
        y: T::lit(lat),
        month: Some(month),
    })
}

/// Parses `28.0N` / `94.8W` style tokens into signed degrees.
pub fn parse_coordinate(token: &str) -> Option<f64> {
    let token = token.trim();
    let hemi = token.chars().last()?;
    let sign = match hemi {
        'N' | 'E' => 1.0,
        'S' | 'W' => -1.0,
        _ => return None,
    };
    let value: f64 = token[..token.len() - 1].trim().parse().ok()?;
    value.is_finite().then_some(sign * value)
}
