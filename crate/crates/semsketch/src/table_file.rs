//! Embedding table text format:
//!
//! ```text
//! SEMB 1 <m> <d>
//! <s1> … <sd>
//! <id>\t<label>\t<c1> … <cd>      (m rows, ids 0..m-1)
//! ```
//!
//! Floats are written in shortest round-trip form, so save/load is exact.

use std::fmt::Write as _;
use std::path::Path;

use semsketch_core::EmbeddingTable;

use crate::error::{Error, Result};

const MAGIC: &str = "SEMB";
const VERSION: u32 = 1;

fn join(values: &[f32]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

pub fn write_embedding_table(table: &EmbeddingTable) -> String {
    let mut out = format!("{MAGIC} {VERSION} {} {}\n{}\n", table.len(), table.d(), join(table.scale()));
    for (i, label) in table.labels().iter().enumerate() {
        let coords = table.coords(i as u16).expect("row exists");
        writeln!(out, "{i}\t{label}\t{}", join(coords)).unwrap();
    }
    out
}

fn floats(line: &str, expected: usize, what: &str) -> Result<Vec<f32>> {
    let values = line
        .split_whitespace()
        .map(str::parse::<f32>)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Format(format!("embedding table {what}: {e}")))?;
    if values.len() != expected {
        return Err(Error::Format(format!("embedding table {what}: {} values, expected {expected}", values.len())));
    }
    Ok(values)
}

pub fn parse_embedding_table(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("embedding table is empty".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != MAGIC {
        return Err(Error::Format(format!("bad embedding table header {header:?}")));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad header field {s:?}")));
    let version = parse(fields[1])?;
    if version != VERSION as usize {
        return Err(Error::Format(format!("unsupported embedding table version {version}")));
    }
    let (m, d) = (parse(fields[2])?, parse(fields[3])?);
    if m > usize::from(u16::MAX) + 1 {
        return Err(Error::Format(format!("{m} concepts exceed the 16-bit id space")));
    }
    let scale_line = lines.next().ok_or_else(|| Error::Format("embedding table truncated before scale".into()))?;
    let scale = floats(scale_line, d, "scale")?;
    let mut labels = Vec::with_capacity(m);
    let mut coords = Vec::with_capacity(m * d);
    for i in 0..m {
        let line = lines.next().ok_or_else(|| Error::Format(format!("embedding table truncated: {i} of {m} rows")))?;
        let mut parts = line.splitn(3, '\t');
        let (Some(id), Some(label), Some(values)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Format(format!("embedding table row {i}: expected <id>\\t<label>\\t<coords>")));
        };
        if id.parse::<usize>().ok() != Some(i) {
            return Err(Error::Format(format!("embedding table row {i}: id {id:?} out of order")));
        }
        labels.push(label.to_string());
        coords.extend(floats(values, d, &format!("row {i}"))?);
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(Error::Format(format!("embedding table has more than {m} rows")));
    }
    Ok(EmbeddingTable::from_parts(d, labels, coords, scale)?)
}

pub fn persist_embedding_table(table: &EmbeddingTable, path: &Path) -> Result<()> {
    std::fs::write(path, write_embedding_table(table)).map_err(Error::io(path))
}

pub fn load_embedding_table(path: &Path) -> Result<EmbeddingTable> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_embedding_table(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use semsketch_core::ConceptVocabulary;

    fn small() -> EmbeddingTable {
        let vocab = ConceptVocabulary::from_labels(&["background", "potted plant", "grass"], "t").unwrap();
        EmbeddingTable::build(&vocab, &[0.1, -3.0, 7.25, 1.0 / 3.0, -2.0, 0.0], 2).unwrap()
    }

    #[test]
    fn round_trip_is_identical() {
        let t = small();
        let text = write_embedding_table(&t);
        assert!(text.starts_with("SEMB 1 3 2\n"));
        assert_eq!(parse_embedding_table(&text).unwrap(), t);
    }

    #[test]
    fn short_row_rejected() {
        let text = "SEMB 1 2 2\n1 1\n0\tbackground\t0 1\n1\tsky\t0.5 0.5 0.5\n";
        assert!(parse_embedding_table(text).is_err());
    }

    #[test]
    fn empty_and_truncated_rejected() {
        assert!(parse_embedding_table("").is_err());
        assert!(parse_embedding_table("SEMB 1 3 2\n1 1\n0\tbackground\t0 0\n").is_err());
        assert!(parse_embedding_table("SEMB 2 1 2\n1 1\n0\tbackground\t0 0\n").is_err());
    }

    #[test]
    fn values_outside_unit_range_rejected() {
        assert!(parse_embedding_table("SEMB 1 1 2\n1 1\n0\tbackground\t0 1.5\n").is_err());
    }
}
