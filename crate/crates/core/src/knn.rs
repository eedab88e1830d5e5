//! Exact top-k selection under the `(distance, segment_id)` total order.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

/// One ranked hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryResult {
    pub segment_id: u64,
    pub distance: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    distance: f64,
    segment_id: u64,
}

impl Candidate {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.distance.total_cmp(&other.distance).then(self.segment_id.cmp(&other.segment_id))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

/// Bounded collector keeping the `k` smallest `(distance, segment_id)`
/// pairs. Partial collectors from disjoint partitions can be merged; the
/// result does not depend on insertion or merge order.
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Candidate>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k.saturating_add(1).min(1 << 16)) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Current admission threshold: candidates at or beyond it cannot enter.
    pub fn worst(&self) -> Option<(f64, u64)> {
        (self.heap.len() == self.k).then(|| self.heap.peek().map(|c| (c.distance, c.segment_id))).flatten()
    }

    pub fn push(&mut self, segment_id: u64, distance: f64) {
        if self.k == 0 {
            return;
        }
        let c = Candidate { distance, segment_id };
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(mut top) = self.heap.peek_mut() {
            if c < *top {
                *top = c;
            }
        }
    }

    pub fn merge(&mut self, other: TopK) {
        for c in other.heap {
            self.push(c.segment_id, c.distance);
        }
    }

    /// Ascending by `(distance, segment_id)`, ranks from 1.
    pub fn into_results(self) -> Vec<QueryResult> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .enumerate()
            .map(|(i, c)| QueryResult { segment_id: c.segment_id, distance: c.distance, rank: i + 1 })
            .collect()
    }
}

impl Extend<(u64, f64)> for TopK {
    fn extend<T: IntoIterator<Item = (u64, f64)>>(&mut self, iter: T) {
        for (id, d) in iter {
            self.push(id, d);
        }
    }
}

/// Top-k over an iterator of `(segment_id, distance)` pairs.
pub fn top_k<I: IntoIterator<Item = (u64, f64)>>(items: I, k: usize) -> Vec<QueryResult> {
    let mut top = TopK::new(k);
    top.extend(items);
    top.into_results()
}
