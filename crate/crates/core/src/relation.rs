//! Dense binary relations over event ids `0..n`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

const WORD: usize = 64;

/// A binary relation stored as one bit row per source element.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryRelation {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BinaryRelation {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(WORD);
        BinaryRelation {
            n,
            words,
            bits: vec![0; words * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Self::empty(n);
        for i in 0..n {
            r.insert(i, i);
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut r = Self::empty(n);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// Number of elements in the carrier set.
    pub fn universe(&self) -> usize {
        self.n
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    fn row_mut(&mut self, a: usize) -> &mut [u64] {
        &mut self.bits[a * self.words..(a + 1) * self.words]
    }

    /// Returns true if the pair was new.
    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        assert!(
            a < self.n && b < self.n,
            "pair ({a}, {b}) outside 0..{}",
            self.n
        );
        let w = &mut self.bits[a * self.words + b / WORD];
        let mask = 1u64 << (b % WORD);
        let fresh = *w & mask == 0;
        *w |= mask;
        fresh
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.bits[a * self.words + b / WORD] &= !(1u64 << (b % WORD));
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a < self.n && b < self.n && self.bits[a * self.words + b / WORD] >> (b % WORD) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(a).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD + t)
            })
        })
    }

    pub fn predecessors(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&a| self.contains(a, b))
    }

    /// All pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| self.successors(a).map(move |b| (a, b)))
    }

    pub fn union_with(&mut self, other: &BinaryRelation) {
        assert_eq!(self.n, other.n);
        for (x, y) in self.bits.iter_mut().zip(&other.bits) {
            *x |= *y;
        }
    }

    pub fn union(&self, other: &BinaryRelation) -> BinaryRelation {
        let mut r = self.clone();
        r.union_with(other);
        r
    }

    pub fn intersection(&self, other: &BinaryRelation) -> BinaryRelation {
        assert_eq!(self.n, other.n);
        let mut r = self.clone();
        for (x, y) in r.bits.iter_mut().zip(&other.bits) {
            *x &= *y;
        }
        r
    }

    pub fn difference(&self, other: &BinaryRelation) -> BinaryRelation {
        assert_eq!(self.n, other.n);
        let mut r = self.clone();
        for (x, y) in r.bits.iter_mut().zip(&other.bits) {
            *x &= !*y;
        }
        r
    }

    /// Relational composition `self ; other`.
    pub fn compose(&self, other: &BinaryRelation) -> BinaryRelation {
        assert_eq!(self.n, other.n);
        let mut r = Self::empty(self.n);
        for a in 0..self.n {
            let mids: Vec<usize> = self.successors(a).collect();
            for m in mids {
                let (dst, src) = (a * self.words, m * self.words);
                for k in 0..self.words {
                    r.bits[dst + k] |= other.bits[src + k];
                }
            }
        }
        r
    }

    pub fn inverse(&self) -> BinaryRelation {
        let mut r = Self::empty(self.n);
        for (a, b) in self.pairs() {
            r.insert(b, a);
        }
        r
    }

    /// Transitive closure (Warshall over bit rows).
    pub fn transitive_closure(&self) -> BinaryRelation {
        let mut r = self.clone();
        let words = self.words;
        for k in 0..self.n {
            let row_k: Vec<u64> = r.row(k).to_vec();
            for i in 0..self.n {
                if r.contains(i, k) {
                    let ri = r.row_mut(i);
                    for w in 0..words {
                        ri[w] |= row_k[w];
                    }
                }
            }
        }
        r
    }

    /// Keep pairs whose endpoints both satisfy `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> BinaryRelation {
        self.filter(|a, b| keep(a) && keep(b))
    }

    pub fn filter(&self, keep: impl Fn(usize, usize) -> bool) -> BinaryRelation {
        BinaryRelation::from_pairs(self.n, self.pairs().filter(|&(a, b)| keep(a, b)))
    }

    pub fn without_identity(&self) -> BinaryRelation {
        self.filter(|a, b| a != b)
    }

    /// Some `(a, a)` is present.
    pub fn is_reflexive(&self) -> bool {
        (0..self.n).any(|a| self.contains(a, a))
    }

    pub fn is_acyclic(&self) -> bool {
        !self.transitive_closure().is_reflexive()
    }

    /// Same pairs over a carrier of `n >= universe()` elements.
    pub fn widen(&self, n: usize) -> BinaryRelation {
        assert!(n >= self.n);
        BinaryRelation::from_pairs(n, self.pairs())
    }

    /// Renumber elements through `map`, which must be injective into `0..n`.
    pub fn remap(&self, n: usize, map: impl Fn(usize) -> usize) -> BinaryRelation {
        BinaryRelation::from_pairs(n, self.pairs().map(|(a, b)| (map(a), map(b))))
    }

    pub fn is_subset(&self, other: &BinaryRelation) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(x, y)| x & !y == 0)
    }
}

impl fmt::Debug for BinaryRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}
