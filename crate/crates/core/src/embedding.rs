//! Normalized per-concept coordinates.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vocab::{ConceptId, ConceptVocabulary};

/// Concept id → `d` coordinates in `[-1, 1]`.
///
/// Each dimension is divided by its max-abs value over all concepts; the
/// divisor is kept in `scale` so raw coordinates can be recovered.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    d: usize,
    labels: Vec<String>,
    coords: Vec<f32>,
    scale: Vec<f32>,
}

impl EmbeddingTable {
    /// Normalizes raw `m × d` coordinates (row `i` = concept `i`).
    /// All-zero dimensions keep zeros and get scale 1.
    pub fn build(vocab: &ConceptVocabulary, coords: &[f64], d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
        }
        if coords.len() != vocab.len() * d {
            return Err(Error::DimensionMismatch { expected: vocab.len() * d, actual: coords.len() });
        }
        if let Some(v) = coords.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coordinate {v}")));
        }
        let mut scale = alloc::vec![0.0_f64; d];
        for row in coords.chunks_exact(d) {
            for (s, v) in scale.iter_mut().zip(row) {
                *s = s.max(v.abs());
            }
        }
        scale.iter_mut().filter(|s| **s == 0.0).for_each(|s| *s = 1.0);
        let normalized =
            coords.chunks_exact(d).flat_map(|row| row.iter().zip(&scale).map(|(v, s)| (v / s) as f32)).collect();
        Ok(Self {
            d,
            labels: vocab.concepts().iter().map(|c| c.label.clone()).collect(),
            coords: normalized,
            scale: scale.iter().map(|&s| s as f32).collect(),
        })
    }

    /// Reassembles a table from already-normalized parts (e.g. a file).
    pub fn from_parts(d: usize, labels: Vec<String>, coords: Vec<f32>, scale: Vec<f32>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
        }
        if scale.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: scale.len() });
        }
        if coords.len() != labels.len() * d {
            return Err(Error::DimensionMismatch { expected: labels.len() * d, actual: coords.len() });
        }
        if let Some(v) = coords.iter().find(|v| !(v.is_finite() && v.abs() <= 1.0)) {
            return Err(Error::OutOfRange(f64::from(*v)));
        }
        if let Some(s) = scale.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidParameter(format!("scale {s} must be positive")));
        }
        Ok(Self { d, labels, coords, scale })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of concepts.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn scale(&self) -> &[f32] {
        &self.scale
    }

    /// Normalized coordinates of concept `id`, if present.
    pub fn coords(&self, id: ConceptId) -> Option<&[f32]> {
        let i = usize::from(id);
        (i < self.labels.len()).then(|| &self.coords[i * self.d..(i + 1) * self.d])
    }

    /// Row-major `m × d` normalized coordinates.
    pub fn as_matrix(&self) -> &[f32] {
        &self.coords
    }

    /// Undoes the per-dimension normalization for concept `id`.
    pub fn raw_coords(&self, id: ConceptId) -> Option<Vec<f64>> {
        self.coords(id).map(|c| c.iter().zip(&self.scale).map(|(v, s)| f64::from(*v) * f64::from(*s)).collect())
    }
}
