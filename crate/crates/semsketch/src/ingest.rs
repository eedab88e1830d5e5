//! Directory ingestion: `<segment_id>[.<source>].slm` files, with files
//! sharing an id pooled into one aggregate.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use semsketch_core::encode::encode_grid;
use semsketch_core::grid::aggregate;
use semsketch_core::{EmbeddingTable, LabelMap, SemanticFeatureVector};

use crate::error::{Error, Result};
use crate::label_map_file::read_label_map_file;
use crate::store::VectorStore;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct IngestSummary {
    /// Segment ids appended, ascending.
    pub ingested: Vec<u64>,
    /// One line per skipped file or segment.
    pub diagnostics: Vec<String>,
}

/// Segment id encoded in a label-map file name, or `None` if the file is
/// not an `.slm` file.
pub fn segment_id_of(path: &Path) -> Option<std::result::Result<u64, String>> {
    let name = path.file_name()?.to_str()?;
    let stem = name.strip_suffix(".slm")?;
    let id = stem.split('.').next().unwrap_or(stem);
    Some(id.parse().map_err(|_| format!("{name}: file name does not start with a segment id")))
}

/// Aggregates and encodes one segment's maps.
pub fn encode_maps(maps: &[LabelMap], n: usize, table: &EmbeddingTable) -> Result<SemanticFeatureVector> {
    let grid = aggregate(maps, n)?;
    Ok(encode_grid(&grid, table)?)
}

/// Ingests every `.slm` file under `dir` into `store`. Unreadable or
/// malformed files are reported and skipped; store I/O errors abort.
pub fn ingest_dir(dir: &Path, table: &EmbeddingTable, store: &mut VectorStore) -> Result<IngestSummary> {
    let mut summary = IngestSummary::default();
    let mut groups: BTreeMap<u64, Vec<PathBuf>> = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(Error::io(dir))?;
    let mut paths: Vec<PathBuf> =
        entries.map(|e| e.map(|e| e.path()).map_err(Error::io(dir))).collect::<Result<_>>()?;
    paths.sort();
    for path in paths {
        match segment_id_of(&path) {
            Some(Ok(id)) => groups.entry(id).or_default().push(path),
            Some(Err(msg)) => summary.diagnostics.push(msg),
            None => {}
        }
    }

    let n = store.config().n;
    let concepts = table.len();
    let encoded: Vec<(u64, Option<SemanticFeatureVector>, Vec<String>)> = groups
        .into_par_iter()
        .map(|(id, files)| {
            let mut notes = Vec::new();
            let mut maps = Vec::new();
            for f in &files {
                match read_label_map_file(f, concepts) {
                    Ok(m) => maps.push(m),
                    Err(e) => notes.push(format!("{}: {e}", f.display())),
                }
            }
            if maps.is_empty() {
                return (id, None, notes);
            }
            match encode_maps(&maps, n, table) {
                Ok(v) => (id, Some(v), notes),
                Err(e) => {
                    notes.push(format!("segment {id}: {e}"));
                    (id, None, notes)
                }
            }
        })
        .collect();

    for (id, vector, notes) in encoded {
        summary.diagnostics.extend(notes);
        let Some(vector) = vector else { continue };
        match store.append(id, &vector) {
            Ok(()) => summary.ingested.push(id),
            Err(Error::DuplicateSegment(id)) => {
                summary.diagnostics.push(format!("segment {id}: already in the store, skipped"))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}
