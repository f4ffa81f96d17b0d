use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, IngestError, Trajectory, TrajectoryPoint};
use crate::Scalar;

const COLUMNS: [&str; 4] = ["trajectory_id", "seq", "x", "y"];

/// Loads a `trajectory_id,seq,x,y` CSV file.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file)
}

/// Parses the canonical point CSV. Points are ordered by `seq` and re-indexed
/// from 0; gaps in `seq` are allowed, duplicates are not.
pub fn read_csv<T: Scalar, R: Read>(reader: R) -> Result<Dataset<T>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let mut col = [0usize; 4];
    for (slot, name) in col.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::Header(format!("expected column {name:?}")))?;
    }

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(u64, u64, T, T)>> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(col[i]).unwrap_or("");
        let malformed = |reason: String| IngestError::Malformed { line, reason };

        let id = field(0).to_string();
        if id.is_empty() {
            return Err(malformed("empty trajectory_id".into()));
        }
        let seq: u64 = field(1)
            .parse()
            .map_err(|_| malformed(format!("seq {:?} is not a non-negative integer", field(1))))?;
        let x = parse_finite(field(2)).ok_or_else(|| malformed(format!("x {:?} is not a finite number", field(2))))?;
        let y = parse_finite(field(3)).ok_or_else(|| malformed(format!("y {:?} is not a finite number", field(3))))?;

        let bucket = rows.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Vec::new()
        });
        if bucket.iter().any(|&(_, s, _, _)| s == seq) {
            return Err(malformed(format!("duplicate seq {seq} for trajectory {id}")));
        }
        bucket.push((line, seq, T::lit(x), T::lit(y)));
    }

    let trajectories = order
        .into_iter()
        .map(|id| {
            let mut pts = rows.remove(&id).unwrap_or_default();
            pts.sort_by_key(|&(_, seq, _, _)| seq);
            let points = pts
                .into_iter()
                .enumerate()
                .map(|(i, (_, _, x, y))| TrajectoryPoint::new(i, x, y))
                .collect();
            Trajectory { id, points }
        })
        .collect();
    Dataset::new(trajectories)
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Writes a dataset in the same schema [`read_csv`] accepts.
pub fn write_csv<T: Scalar, W: Write>(dataset: &Dataset<T>, writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS)?;
    for t in &dataset.trajectories {
        for p in &t.points {
            w.write_record([
                t.id.clone(),
                p.seq_index.to_string(),
                p.x.to_string(),
                p.y.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
