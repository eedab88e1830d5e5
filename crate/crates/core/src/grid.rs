//! Pixel-wise label maps and their `n × n` majority-vote grids.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vocab::ConceptId;

/// Concept id per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    source: String,
    cells: Vec<ConceptId>,
}

impl LabelMap {
    pub fn new(width: u32, height: u32, source: impl Into<String>, cells: Vec<ConceptId>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!("label map is {width}x{height}")));
        }
        let expected = width as usize * height as usize;
        if cells.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: cells.len() });
        }
        Ok(Self { width, height, source: source.into(), cells })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn cells(&self) -> &[ConceptId] {
        &self.cells
    }

    pub fn get(&self, row: u32, col: u32) -> ConceptId {
        self.cells[row as usize * self.width as usize + col as usize]
    }

    /// Fails if any pixel references a concept `>= concept_count`.
    pub fn check_ids(&self, concept_count: usize) -> Result<()> {
        match self.cells.iter().find(|&&c| usize::from(c) >= concept_count) {
            Some(&c) => Err(Error::UnknownConcept(u32::from(c))),
            None => Ok(()),
        }
    }
}

/// `n × n` grid of concept ids, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridMap {
    n: usize,
    cells: Vec<ConceptId>,
}

impl GridMap {
    pub fn new(n: usize, cells: Vec<ConceptId>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("grid side must be >= 1".into()));
        }
        if cells.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, actual: cells.len() });
        }
        Ok(Self { n, cells })
    }

    pub fn filled(n: usize, id: ConceptId) -> Result<Self> {
        Self::new(n, alloc::vec![id; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[ConceptId] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> ConceptId {
        self.cells[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, id: ConceptId) {
        self.cells[row * self.n + col] = id;
    }

    pub fn check_ids(&self, concept_count: usize) -> Result<()> {
        match self.cells.iter().find(|&&c| usize::from(c) >= concept_count) {
            Some(&c) => Err(Error::UnknownConcept(u32::from(c))),
            None => Ok(()),
        }
    }
}

/// Grid cell index along one axis of length `len` for every pixel position:
/// pixel `p` falls in cell `k` iff `⌊k·len/n⌋ <= p < ⌊(k+1)·len/n⌋`.
fn axis_cells(len: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for k in 0..n {
        let start = k * len / n;
        let end = (k + 1) * len / n;
        out.extend(core::iter::repeat_n(k, end - start));
    }
    out
}

/// Majority-vote down-sampling of one or more label maps to an `n × n`
/// grid.
///
/// Every map is partitioned against its own width and height (no aspect
/// ratio is preserved), and the raw pixel counts of all maps are pooled per
/// cell. The modal id wins; ties go to the smallest id.
pub fn aggregate(maps: &[LabelMap], n: usize) -> Result<GridMap> {
    if maps.is_empty() {
        return Err(Error::InvalidParameter("no label maps to aggregate".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("grid side must be >= 1".into()));
    }
    if let Some(m) = maps.iter().find(|m| (m.width.min(m.height) as usize) < n) {
        return Err(Error::InvalidParameter(format!(
            "grid side {n} exceeds the smaller side of a {}x{} map",
            m.width, m.height
        )));
    }

    // Bucket every pixel id by its cell, then take the mode per bucket.
    let mut buckets: Vec<Vec<ConceptId>> = alloc::vec![Vec::new(); n * n];
    for map in maps {
        let (w, h) = (map.width as usize, map.height as usize);
        let rows = axis_cells(h, n);
        let cols = axis_cells(w, n);
        for (y, &r) in rows.iter().enumerate() {
            let line = &map.cells[y * w..(y + 1) * w];
            for (&id, &c) in line.iter().zip(&cols) {
                buckets[r * n + c].push(id);
            }
        }
    }

    let cells = buckets
        .into_iter()
        .map(|mut ids| {
            ids.sort_unstable();
            modal_sorted(&ids)
        })
        .collect();
    GridMap::new(n, cells)
}

/// Most frequent id of a sorted, non-empty slice; the earliest (smallest)
/// run wins ties.
fn modal_sorted(ids: &[ConceptId]) -> ConceptId {
    let mut best = ids[0];
    let mut best_count = 0;
    let mut i = 0;
    while i < ids.len() {
        let id = ids[i];
        let mut j = i;
        while j < ids.len() && ids[j] == id {
            j += 1;
        }
        if j - i > best_count {
            best = id;
            best_count = j - i;
        }
        i = j;
    }
    best
}
