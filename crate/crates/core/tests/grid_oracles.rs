use std::collections::HashMap;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use semsketch_core::grid::{aggregate, LabelMap};

/// Row (or column) of the grid cell containing pixel `p`, found by testing
/// the floor bounds of every cell.
fn cell_of(p: usize, len: usize, n: usize) -> usize {
    (0..n).find(|&k| k * len / n <= p && p < (k + 1) * len / n).expect("pixel outside every cell")
}

/// Per-cell histogram with smallest-id tie-break.
pub fn histogram_oracle(maps: &[LabelMap], n: usize) -> Vec<u16> {
    let mut counts: Vec<HashMap<u16, usize>> = vec![HashMap::new(); n * n];
    for m in maps {
        let (w, h) = (m.width() as usize, m.height() as usize);
        for y in 0..h {
            for x in 0..w {
                let cell = cell_of(y, h, n) * n + cell_of(x, w, n);
                *counts[cell].entry(m.get(y as u32, x as u32)).or_default() += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|hist| {
            let best = hist.values().copied().max().unwrap();
            hist.into_iter().filter(|&(_, c)| c == best).map(|(id, _)| id).min().unwrap()
        })
        .collect()
}

fn random_map(rng: &mut StdRng, min_side: u32, max_side: u32, labels: u16) -> LabelMap {
    let w = rng.random_range(min_side..=max_side);
    let h = rng.random_range(min_side..=max_side);
    let cells = (0..w * h).map(|_| rng.random_range(0..labels)).collect();
    LabelMap::new(w, h, "rand", cells).unwrap()
}

#[test]
fn two_hundred_random_maps_match_histograms() {
    let mut rng = StdRng::seed_from_u64(2024);
    for trial in 0..200 {
        let labels = rng.random_range(2..12);
        let map = {
            let cells = (0..256).map(|_| rng.random_range(0..labels)).collect();
            LabelMap::new(16, 16, "rand", cells).unwrap()
        };
        for n in [1, 2, 4, 8] {
            let grid = aggregate(std::slice::from_ref(&map), n).unwrap();
            assert_eq!(grid.cells(), &histogram_oracle(std::slice::from_ref(&map), n)[..], "trial {trial}, n={n}");
        }
    }
}

#[test]
fn multi_source_uneven_maps_match_histograms() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..50 {
        let sources = rng.random_range(1..=3);
        let maps: Vec<_> = (0..sources).map(|_| random_map(&mut rng, 8, 40, 5)).collect();
        for n in [1, 3, 5, 8] {
            assert_eq!(aggregate(&maps, n).unwrap().cells(), &histogram_oracle(&maps, n)[..]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_map_gives_constant_grid(w in 1u32..30, h in 1u32..30, id in 0u16..500, n_frac in 0.0f64..1.0) {
        let side = w.min(h) as usize;
        let n = 1 + ((side - 1) as f64 * n_frac) as usize;
        let m = LabelMap::new(w, h, "c", vec![id; (w * h) as usize]).unwrap();
        let g = aggregate(&[m], n).unwrap();
        prop_assert!(g.cells().iter().all(|&c| c == id));
        prop_assert_eq!(g.cells().len(), n * n);
    }

    #[test]
    fn square_map_at_full_resolution_is_identity(side in 1u32..20, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let cells: Vec<u16> = (0..side * side).map(|_| rng.random_range(0..9)).collect();
        let m = LabelMap::new(side, side, "c", cells.clone()).unwrap();
        let g = aggregate(&[m], side as usize).unwrap();
        prop_assert_eq!(g.cells(), &cells[..]);
    }

    #[test]
    fn source_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let maps: Vec<_> = (0..3).map(|_| random_map(&mut rng, 4, 20, 4)).collect();
        let forward = aggregate(&maps, 4).unwrap();
        let reversed: Vec<_> = maps.iter().rev().cloned().collect();
        prop_assert_eq!(forward.clone(), aggregate(&reversed, 4).unwrap());
        let rotated = vec![maps[1].clone(), maps[2].clone(), maps[0].clone()];
        prop_assert_eq!(forward, aggregate(&rotated, 4).unwrap());
    }
}
