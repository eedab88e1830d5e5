#![allow(dead_code)]

use semsketch::core::{ConceptVocabulary, EmbeddingTable, LabelMap, SeededRng};

pub const LABELS: [&str; 6] = ["background", "grass", "dog", "cat", "sky", "car"];

/// Six concepts with hand-placed 2-D coordinates: dog and cat close
/// together, background far from everything.
pub fn fixture() -> (ConceptVocabulary, EmbeddingTable) {
    let vocab = ConceptVocabulary::from_labels(&LABELS, "fixture").unwrap();
    let coords = vec![
        -1.0, -1.0, // background
        0.75, -0.25, // grass
        0.125, 0.75, // dog
        0.25, 0.75, // cat
        -0.5, 1.0, // sky
        1.0, 0.5, // car
    ];
    let labels = LABELS.iter().map(|s| s.to_string()).collect();
    let table = EmbeddingTable::from_parts(2, labels, coords, vec![1.0, 1.0]).unwrap();
    (vocab, table)
}

pub fn random_map(rng: &mut SeededRng, width: u32, height: u32, m: usize, source: &str) -> LabelMap {
    let cells = (0..width * height).map(|_| rng.below(m as u64) as u16).collect();
    LabelMap::new(width, height, source, cells).unwrap()
}

/// Map whose left half is `left` and right half `right`.
pub fn split_map(width: u32, height: u32, left: u16, right: u16) -> LabelMap {
    let cells = (0..height).flat_map(|_| (0..width).map(move |c| if c < width / 2 { left } else { right })).collect();
    LabelMap::new(width, height, "fixture", cells).unwrap()
}
