//! Vocabulary (`<id>\t<label>\t<source>`) and word-vector text files.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use semsketch_core::vocab::{Concept, ConceptVocabulary, WordVectorTable};

use crate::error::{Error, Result};

pub fn parse_vocabulary(text: &str) -> Result<ConceptVocabulary> {
    let mut concepts = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(id), Some(label), Some(source), None) = (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::Format(format!("vocabulary line {}: expected <id>\\t<label>\\t<source>", lineno + 1)));
        };
        let id =
            id.trim().parse().map_err(|_| Error::Format(format!("vocabulary line {}: bad id {id:?}", lineno + 1)))?;
        concepts.push(Concept { id, label: label.to_string(), source: source.trim().to_string() });
    }
    Ok(ConceptVocabulary::new(concepts)?)
}

pub fn load_vocabulary(path: &Path) -> Result<ConceptVocabulary> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_vocabulary(&text)
}

/// Reads `<token> <v1> … <vw>` records, keeping only the tokens the
/// vocabulary needs. A leading `<count> <width>` header line (word2vec text
/// export) is skipped.
pub fn read_word_vectors<R: BufRead>(reader: R, vocab: &ConceptVocabulary) -> Result<WordVectorTable> {
    let needed: HashSet<&str> = vocab.concepts().iter().flat_map(|c| c.label.split_whitespace()).collect();
    let mut found: HashMap<String, Vec<f64>> = HashMap::new();
    let mut width = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(format!("word vectors line {}: {e}", lineno + 1)))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        if lineno == 0 {
            let rest: Vec<&str> = line.split_whitespace().collect();
            if rest.len() == 2 && rest.iter().all(|f| f.parse::<u64>().is_ok()) {
                continue;
            }
        }
        if !needed.contains(token) || found.contains_key(token) {
            continue;
        }
        let values = fields
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("word vectors line {}: {e}", lineno + 1)))?;
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Format(format!(
                    "word vectors line {}: {} values, expected {w}",
                    lineno + 1,
                    values.len()
                )))
            }
            _ => {}
        }
        found.insert(token.to_string(), values);
    }
    let width = width.unwrap_or(0).max(1);
    Ok(WordVectorTable::resolve(vocab, width, |t| found.get(t).map(Vec::as_slice))?)
}

pub fn load_word_vectors(path: &Path, vocab: &ConceptVocabulary) -> Result<WordVectorTable> {
    let file = File::open(path).map_err(Error::io(path))?;
    read_word_vectors(BufReader::new(file), vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_line_vocabulary() {
        let v = parse_vocabulary("0\tbackground\tvoc\n1\tperson\tvoc\n2\tgrass\tade20k\n").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.get(2).unwrap().source, "ade20k");
    }

    #[test]
    fn vocabulary_errors() {
        assert!(parse_vocabulary("0\tperson\tvoc\n").is_err());
        assert!(parse_vocabulary("0\tbackground\tvoc\n1\tperson\tvoc\n2\tperson\tade\n").is_err());
        assert!(parse_vocabulary("0\tbackground\tvoc\n2\tperson\tvoc\n").is_err());
        assert!(parse_vocabulary("0 background voc\n").is_err());
        assert!(parse_vocabulary("").is_err());
    }

    #[test]
    fn word_vectors_with_header_and_extra_tokens() {
        let vocab = parse_vocabulary("0\tbackground\tv\n1\tperson\tv\n2\tgrass\tv\n").unwrap();
        let text = "5 4\nthe 9 9 9 9\nbackground 1 0 0 0\nperson 0 1 0 0\ngrass 0 0 1 0\nperson 7 7 7 7\n";
        let t = read_word_vectors(text.as_bytes(), &vocab).unwrap();
        assert_eq!(t.width(), 4);
        assert_eq!(t.len(), 3);
        assert_eq!(t.row(1), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_token_is_named() {
        let vocab = parse_vocabulary("0\tbackground\tv\n1\thorse\tv\n").unwrap();
        let err = read_word_vectors("background 1 2\n".as_bytes(), &vocab).unwrap_err();
        assert!(err.to_string().contains("horse"), "{err}");
    }

    #[test]
    fn ragged_rows_rejected() {
        let vocab = parse_vocabulary("0\tbackground\tv\n1\tsky\tv\n").unwrap();
        assert!(read_word_vectors("background 1 2\nsky 1\n".as_bytes(), &vocab).is_err());
    }
}
