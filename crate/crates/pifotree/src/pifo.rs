//! A PIFO (push-in, first-out) queue: entries pop in ascending rank order, and
//! entries sharing a rank pop in the order they were pushed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::rat::Rank;

#[derive(Clone, Debug)]
struct Entry<T> {
    elem: T,
    rank: Rank,
    seq: u64,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.seq == other.seq
    }
}

impl<T> Eq for Entry<T> {}

impl<T> Ord for Entry<T> {
    // Reversed so the max-heap surfaces the smallest (rank, seq) pair first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.rank, other.seq).cmp(&(self.rank, self.seq))
    }
}

impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Priority queue with stable FIFO tie-breaking among equal ranks.
#[derive(Clone, Debug)]
pub struct Pifo<T> {
    heap: BinaryHeap<Entry<T>>,
    next_seq: u64,
}

impl<T> Default for Pifo<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> Pifo<T> {
    pub fn new() -> Self {
        Pifo {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn push(&mut self, elem: T, rank: Rank) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { elem, rank, seq });
    }

    /// Removes and returns the entry with the least rank (FIFO among ties).
    pub fn pop(&mut self) -> Option<(T, Rank)> {
        self.heap.pop().map(|e| (e.elem, e.rank))
    }

    pub fn peek(&self) -> Option<(&T, Rank)> {
        self.heap.peek().map(|e| (&e.elem, e.rank))
    }

    /// Entries in pop order (index 0 pops first) without disturbing the queue.
    pub fn iter_sorted(&self) -> impl Iterator<Item = (&T, Rank)> {
        let mut entries: Vec<&Entry<T>> = self.heap.iter().collect();
        entries.sort_by_key(|e| (e.rank, e.seq));
        entries.into_iter().map(|e| (&e.elem, e.rank))
    }

    /// Largest rank currently stored, if any.
    pub fn max_rank(&self) -> Option<Rank> {
        self.heap.iter().map(|e| e.rank).max()
    }

    /// Entry values joined by commas with the next-to-pop entry rightmost,
    /// matching the usual head-on-the-right drawing of scheduler queues.
    pub fn display_head_right(&self) -> String
    where
        T: std::fmt::Display,
    {
        let mut items: Vec<String> = self.iter_sorted().map(|(e, _)| e.to_string()).collect();
        items.reverse();
        items.join(",")
    }

    /// Number of entries equal to `x`.
    pub fn count(&self, x: &T) -> usize
    where
        T: PartialEq,
    {
        self.heap.iter().filter(|e| &e.elem == x).count()
    }
}

impl<T: Clone> Pifo<T> {
    /// All elements in pop order, leaving the queue untouched.
    pub fn flush(&self) -> Vec<T> {
        self.iter_sorted().map(|(e, _)| e.clone()).collect()
    }

    /// Contents in pop order as owned pairs.
    pub fn to_sorted_vec(&self) -> Vec<(T, Rank)> {
        self.iter_sorted().map(|(e, r)| (e.clone(), r)).collect()
    }
}

impl<T: PartialEq> PartialEq for Pifo<T> {
    /// Two queues are equal when they hold the same (element, rank) sequence in
    /// pop order; the internal insertion counters are ignored so a freshly built
    /// queue can equal one that has churned through pushes and pops.
    fn eq(&self, other: &Self) -> bool {
        if self.len() != other.len() {
            return false;
        }
        self.iter_sorted()
            .zip(other.iter_sorted())
            .all(|((a, ra), (b, rb))| ra == rb && a == b)
    }
}

impl<T: Eq> Eq for Pifo<T> {}

impl<T: Clone, const N: usize> From<[(T, Rank); N]> for Pifo<T> {
    fn from(items: [(T, Rank); N]) -> Self {
        let mut p = Pifo::new();
        for (e, r) in items {
            p.push(e, r);
        }
        p
    }
}
