//! Ground-truth CSV in either per-frame or segment form.
//!
//! ```text
//! frame_index,label                       start_frame,end_frame_exclusive,label
//! 0,not_changed                           0,120,not_changed
//! 1,not_changed                           120,360,changed
//! ```

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::label::Label;

pub fn read_ground_truth(path: &Path) -> Result<Vec<Label>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(file).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Per-frame labels from either CSV layout, detected by header.
pub fn parse_ground_truth<R: Read>(reader: R) -> Result<Vec<Label>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    match header.as_slice() {
        ["frame_index", "label"] => per_frame(rdr),
        ["start_frame", "end_frame_exclusive", "label"] => segments(rdr),
        other => Err(Error::Data(format!(
            "unrecognized ground-truth header {other:?}; expected frame_index,label or \
             start_frame,end_frame_exclusive,label"
        ))),
    }
}

fn parse_index(text: &str, line: u64) -> Result<usize> {
    text.parse()
        .map_err(|_| Error::Data(format!("line {line}: {text:?} is not a frame index")))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn per_frame<R: Read>(mut rdr: csv::Reader<R>) -> Result<Vec<Label>> {
    let mut rows: Vec<(usize, Label)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        rows.push((parse_index(&record[0], line)?, record[1].parse()?));
    }
    rows.sort_by_key(|r| r.0);
    for (expected, &(index, _)) in rows.iter().enumerate() {
        if index != expected {
            return Err(Error::Data(format!(
                "frame indices must cover 0..{} exactly once; frame {expected} is {}",
                rows.len(),
                if index > expected {
                    "missing"
                } else {
                    "duplicated"
                }
            )));
        }
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

fn segments<R: Read>(mut rdr: csv::Reader<R>) -> Result<Vec<Label>> {
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let start = parse_index(&record[0], line)?;
        let end = parse_index(&record[1], line)?;
        let label: Label = record[2].parse()?;
        if start != labels.len() {
            return Err(Error::Data(format!(
                "line {line}: segment starts at frame {start} but the previous one ended at {}",
                labels.len()
            )));
        }
        if end <= start {
            return Err(Error::Data(format!(
                "line {line}: empty segment {start}..{end}"
            )));
        }
        labels.resize(end, label);
    }
    Ok(labels)
}
