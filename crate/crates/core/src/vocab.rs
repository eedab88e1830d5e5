//! Concept vocabulary and per-concept word vectors.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense concept identifier. Label maps store ids as little-endian `u16`.
pub type ConceptId = u16;

/// Label reserved for concept id 0.
pub const BACKGROUND: &str = "background";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub id: ConceptId,
    pub label: String,
    /// Segmentation dataset the concept comes from (e.g. `ade20k`).
    pub source: String,
}

/// The fixed set of detectable concepts, ids dense from 0 with
/// `background` at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptVocabulary {
    concepts: Vec<Concept>,
}

/// Lowercases a label; interior spaces are kept as-is.
pub fn normalize_label(label: &str) -> String {
    label.trim().to_lowercase()
}

impl ConceptVocabulary {
    /// Validates and wraps `concepts`. Labels are normalized first.
    pub fn new(concepts: Vec<Concept>) -> Result<Self> {
        if concepts.is_empty() {
            return Err(Error::InvalidVocabulary("empty vocabulary".into()));
        }
        if concepts.len() > usize::from(ConceptId::MAX) + 1 {
            return Err(Error::InvalidVocabulary(format!("{} concepts exceed the 16-bit id space", concepts.len())));
        }
        let mut concepts = concepts;
        for (expected, c) in concepts.iter_mut().enumerate() {
            if usize::from(c.id) != expected {
                return Err(Error::InvalidVocabulary(format!(
                    "ids must be dense and ascending from 0: found {} at position {}",
                    c.id, expected
                )));
            }
            c.label = normalize_label(&c.label);
            if c.label.is_empty() {
                return Err(Error::InvalidVocabulary(format!("empty label for id {}", c.id)));
            }
        }
        if concepts[0].label != BACKGROUND {
            return Err(Error::InvalidVocabulary(format!(
                "id 0 must be \"{BACKGROUND}\", found \"{}\"",
                concepts[0].label
            )));
        }
        let mut sorted: Vec<&str> = concepts.iter().map(|c| c.label.as_str()).collect();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidVocabulary(format!("duplicate label \"{}\"", w[0])));
        }
        Ok(Self { concepts })
    }

    /// Convenience constructor assigning ids in order.
    pub fn from_labels<S: AsRef<str>>(labels: &[S], source: &str) -> Result<Self> {
        let concepts = labels
            .iter()
            .enumerate()
            .map(|(i, l)| Concept { id: i as ConceptId, label: l.as_ref().to_string(), source: source.to_string() })
            .collect();
        Self::new(concepts)
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn get(&self, id: ConceptId) -> Option<&Concept> {
        self.concepts.get(usize::from(id))
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        usize::from(id) < self.concepts.len()
    }

    pub fn id_of(&self, label: &str) -> Option<ConceptId> {
        let label = normalize_label(label);
        self.concepts.iter().find(|c| c.label == label).map(|c| c.id)
    }
}

/// Word vectors resolved per concept: row `i` belongs to concept id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    width: usize,
    rows: Vec<f64>,
}

impl WordVectorTable {
    /// Resolves every vocabulary label through `lookup`, which maps a single
    /// token to its vector. Multi-token labels ("potted plant") take the
    /// component-wise mean of their token vectors. All missing tokens are
    /// reported at once.
    pub fn resolve<'a, F>(vocab: &ConceptVocabulary, width: usize, mut lookup: F) -> Result<Self>
    where
        F: FnMut(&str) -> Option<&'a [f64]>,
    {
        if width == 0 {
            return Err(Error::InvalidParameter("word vector width must be positive".into()));
        }
        let mut rows = Vec::with_capacity(vocab.len() * width);
        let mut missing = Vec::new();
        let mut row = alloc::vec![0.0; width];
        for concept in vocab.concepts() {
            row.iter_mut().for_each(|v| *v = 0.0);
            let mut tokens = 0usize;
            for token in concept.label.split_whitespace() {
                match lookup(token) {
                    Some(v) if v.len() == width => {
                        row.iter_mut().zip(v).for_each(|(acc, x)| *acc += x);
                        tokens += 1;
                    }
                    Some(v) => return Err(Error::DimensionMismatch { expected: width, actual: v.len() }),
                    None => {
                        if !missing.iter().any(|m: &String| m == token) {
                            missing.push(token.to_string());
                        }
                    }
                }
            }
            if tokens > 0 {
                rows.extend(row.iter().map(|v| v / tokens as f64));
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingTokens(missing));
        }
        Ok(Self { width, rows })
    }

    /// Builds a table from explicit rows (one per concept, in id order).
    pub fn from_rows(width: usize, rows: Vec<f64>) -> Result<Self> {
        if width == 0 || !rows.len().is_multiple_of(width) {
            return Err(Error::DimensionMismatch { expected: width, actual: rows.len() });
        }
        Ok(Self { width, rows })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, id: ConceptId) -> &[f64] {
        let i = usize::from(id) * self.width;
        &self.rows[i..i + self.width]
    }

    /// Row-major `m × width` matrix.
    pub fn as_matrix(&self) -> &[f64] {
        &self.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn three_concepts_are_dense() {
        let v = ConceptVocabulary::from_labels(&["background", "person", "grass"], "voc").unwrap();
        assert_eq!(v.len(), 3);
        let ids: Vec<_> = v.concepts().iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(v.id_of("Grass"), Some(2));
    }

    #[test]
    fn background_must_be_first() {
        let err = ConceptVocabulary::from_labels(&["person", "background"], "voc").unwrap_err();
        assert!(matches!(err, Error::InvalidVocabulary(_)));
    }

    #[test]
    fn duplicate_labels_rejected_after_normalization() {
        let err = ConceptVocabulary::from_labels(&["background", "person", "Person "], "voc").unwrap_err();
        assert!(matches!(err, Error::InvalidVocabulary(ref m) if m.contains("person")));
    }

    #[test]
    fn non_dense_ids_rejected() {
        let c = |id, l: &str| Concept { id, label: l.into(), source: "x".into() };
        let err = ConceptVocabulary::new(vec![c(0, "background"), c(2, "sky")]).unwrap_err();
        assert!(matches!(err, Error::InvalidVocabulary(_)));
    }

    #[test]
    fn multi_token_labels_average() {
        let vocab = ConceptVocabulary::from_labels(&["background", "potted plant"], "voc").unwrap();
        let bg = [1.0, 1.0];
        let potted = [2.0, 0.0];
        let plant = [4.0, -2.0];
        let t = WordVectorTable::resolve(&vocab, 2, |tok| match tok {
            "background" => Some(&bg[..]),
            "potted" => Some(&potted[..]),
            "plant" => Some(&plant[..]),
            _ => None,
        })
        .unwrap();
        assert_eq!(t.row(1), &[3.0, -1.0]);
    }

    #[test]
    fn missing_tokens_are_listed() {
        let vocab = ConceptVocabulary::from_labels(&["background", "horse", "dark horse"], "x").unwrap();
        let bg = [0.0];
        let err = WordVectorTable::resolve(&vocab, 1, |tok| (tok == "background").then_some(&bg[..])).unwrap_err();
        assert_eq!(err, Error::MissingTokens(vec!["horse".into(), "dark".into()]));
    }
}
