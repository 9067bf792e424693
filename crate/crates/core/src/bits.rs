//! Fixed-capacity bit sets over vertex ids.
//!
//! `VertexSet` is the workhorse set representation for graph algorithms in
//! this crate: membership, unions and intersection counts are word-parallel,
//! and iteration yields ids in ascending order, which keeps every consumer
//! deterministic.

/// A set of `usize` ids drawn from `0..capacity`, stored as packed 64-bit
/// words with a cached population count.
#[derive(Clone, PartialEq, Eq)]
pub struct VertexSet {
    capacity: usize,
    words: Vec<u64>,
    ones: usize,
}

impl VertexSet {
    /// Empty set over `0..capacity`.
    pub fn new(capacity: usize) -> Self {
        VertexSet {
            capacity,
            words: vec![0; capacity.div_ceil(64)],
            ones: 0,
        }
    }

    /// Set containing all of `0..capacity`.
    pub fn full(capacity: usize) -> Self {
        let mut s = VertexSet::new(capacity);
        for w in 0..s.words.len() {
            s.words[w] = !0;
        }
        s.trim_tail();
        s.ones = capacity;
        s
    }

    pub fn from_iter<I: IntoIterator<Item = usize>>(capacity: usize, ids: I) -> Self {
        let mut s = VertexSet::new(capacity);
        for id in ids {
            s.insert(id);
        }
        s
    }

    fn trim_tail(&mut self) {
        let tail = self.capacity % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.ones
    }

    pub fn is_empty(&self) -> bool {
        self.ones == 0
    }

    pub fn contains(&self, id: usize) -> bool {
        debug_assert!(id < self.capacity);
        self.words[id / 64] >> (id % 64) & 1 == 1
    }

    /// Inserts `id`; returns true when the set changed.
    pub fn insert(&mut self, id: usize) -> bool {
        debug_assert!(id < self.capacity);
        let w = &mut self.words[id / 64];
        let mask = 1u64 << (id % 64);
        if *w & mask == 0 {
            *w |= mask;
            self.ones += 1;
            true
        } else {
            false
        }
    }

    /// Removes `id`; returns true when the set changed.
    pub fn remove(&mut self, id: usize) -> bool {
        debug_assert!(id < self.capacity);
        let w = &mut self.words[id / 64];
        let mask = 1u64 << (id % 64);
        if *w & mask != 0 {
            *w &= !mask;
            self.ones -= 1;
            true
        } else {
            false
        }
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
        self.ones = 0;
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        debug_assert_eq!(self.capacity, other.capacity);
        let mut ones = 0;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
            ones += a.count_ones() as usize;
        }
        self.ones = ones;
    }

    pub fn intersect_with(&mut self, other: &VertexSet) {
        debug_assert_eq!(self.capacity, other.capacity);
        let mut ones = 0;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
            ones += a.count_ones() as usize;
        }
        self.ones = ones;
    }

    pub fn difference_with(&mut self, other: &VertexSet) {
        debug_assert_eq!(self.capacity, other.capacity);
        let mut ones = 0;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
            ones += a.count_ones() as usize;
        }
        self.ones = ones;
    }

    /// `|self ∩ other|` without allocating.
    pub fn intersection_len(&self, other: &VertexSet) -> usize {
        debug_assert_eq!(self.capacity, other.capacity);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Smallest member, if any.
    pub fn first(&self) -> Option<usize> {
        for (w, word) in self.words.iter().enumerate() {
            if *word != 0 {
                return Some(w * 64 + word.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, word)| {
            let mut rest = *word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let bit = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(w * 64 + bit)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl std::fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
