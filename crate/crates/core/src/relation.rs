//! Binary relations over op-ex indices.

use std::cell::Cell;
use std::fmt;

/// Largest universe an [`OrderRelation`] can hold.
pub const MAX_UNIVERSE: usize = 64;

/// Read access to a relation `a ⟶ b` over op-ex indices `0..len`.
pub trait RelationView {
    fn len(&self) -> usize;
    fn holds(&self, a: usize, b: usize) -> bool;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A boolean adjacency matrix over `0..n`, one bit row per element.
///
/// The representation admits reflexive pairs so that clause evaluation can be
/// tested on arbitrary relations; the checker only produces irreflexive ones.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct OrderRelation {
    n: usize,
    rows: Vec<u64>,
}

impl OrderRelation {
    pub fn new(n: usize) -> Self {
        assert!(n <= MAX_UNIVERSE, "relation universe limited to {MAX_UNIVERSE}");
        OrderRelation { n, rows: vec![0; n] }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rel = Self::new(n);
        for (a, b) in pairs {
            rel.insert(a, b);
        }
        rel
    }

    /// Strict total order given by a sequence: earlier elements precede later ones.
    pub fn from_sequence(n: usize, order: &[usize]) -> Self {
        let mut rel = Self::new(n);
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                rel.insert(a, b);
            }
        }
        rel
    }

    /// Builds a relation from predecessor columns: bit `a` of `cols[b]` means `a ⟶ b`.
    pub fn from_columns(cols: &[u64]) -> Self {
        let n = cols.len();
        let mut rel = Self::new(n);
        for (b, &col) in cols.iter().enumerate() {
            for a in bits(col) {
                rel.insert(a, b);
            }
        }
        rel
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        assert!(a < self.n && b < self.n, "pair ({a}, {b}) outside universe of {}", self.n);
        self.rows[a] |= 1 << b;
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        if a < self.n && b < self.n {
            self.rows[a] &= !(1 << b);
        }
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a < self.n && b < self.n && self.rows[a] >> b & 1 == 1
    }

    pub fn row(&self, a: usize) -> u64 {
        self.rows[a]
    }

    /// Predecessor mask of `b`.
    pub fn column(&self, b: usize) -> u64 {
        let mut col = 0;
        for a in 0..self.n {
            col |= (self.rows[a] >> b & 1) << a;
        }
        col
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in bits(self.rows[a]) {
                out.push((a, b));
            }
        }
        out
    }

    pub fn pair_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    /// Keeps only pairs whose endpoints are both in `mask`.
    pub fn restrict(&self, mask: u64) -> Self {
        let mut rel = self.clone();
        for a in 0..self.n {
            if mask >> a & 1 == 1 {
                rel.rows[a] &= mask;
            } else {
                rel.rows[a] = 0;
            }
        }
        rel
    }

    /// Renames element `i` to `map[i]`.
    pub fn permuted(&self, map: &[usize]) -> Self {
        let mut rel = Self::new(self.n);
        for (a, b) in self.pairs() {
            rel.insert(map[a], map[b]);
        }
        rel
    }
}

impl RelationView for OrderRelation {
    fn len(&self) -> usize {
        self.n
    }

    fn holds(&self, a: usize, b: usize) -> bool {
        self.contains(a, b)
    }
}

impl fmt::Debug for OrderRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrderRelation")
            .field("n", &self.n)
            .field("pairs", &self.pairs())
            .finish()
    }
}

/// Relation stored as predecessor columns, possibly only partly assigned.
///
/// Reads of an unassigned column return `false` and raise the `unknown` flag;
/// every read marks its column as touched. The search uses the touched set as
/// the exact conflict set of a predicate evaluation.
pub(crate) struct Probe<'a> {
    cols: &'a [u64],
    assigned: u64,
    touched: Cell<u64>,
    unknown: Cell<bool>,
}

impl<'a> Probe<'a> {
    pub(crate) fn new(cols: &'a [u64], assigned: u64) -> Self {
        Probe { cols, assigned, touched: Cell::new(0), unknown: Cell::new(false) }
    }

    pub(crate) fn touched(&self) -> u64 {
        self.touched.get()
    }

    pub(crate) fn unknown(&self) -> bool {
        self.unknown.get()
    }
}

impl RelationView for Probe<'_> {
    fn len(&self) -> usize {
        self.cols.len()
    }

    fn holds(&self, a: usize, b: usize) -> bool {
        self.touched.set(self.touched.get() | 1 << b);
        if self.assigned >> b & 1 == 0 {
            self.unknown.set(true);
            return false;
        }
        self.cols[b] >> a & 1 == 1
    }
}

/// Forwards reads to an inner relation and records the columns touched.
pub(crate) struct Recorder<'a> {
    inner: &'a dyn RelationView,
    touched: Cell<u64>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(inner: &'a dyn RelationView) -> Self {
        Recorder { inner, touched: Cell::new(0) }
    }

    pub(crate) fn touched(&self) -> u64 {
        self.touched.get()
    }
}

impl RelationView for Recorder<'_> {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn holds(&self, a: usize, b: usize) -> bool {
        self.touched.set(self.touched.get() | 1 << b);
        self.inner.holds(a, b)
    }
}

/// Strict order induced by positions of a partial sequence; unplaced elements
/// are unrelated.
pub(crate) struct Placement<'a> {
    pub(crate) pos: &'a [usize],
}

pub(crate) const UNPLACED: usize = usize::MAX;

impl RelationView for Placement<'_> {
    fn len(&self) -> usize {
        self.pos.len()
    }

    fn holds(&self, a: usize, b: usize) -> bool {
        let (pa, pb) = (self.pos[a], self.pos[b]);
        pa != UNPLACED && pb != UNPLACED && pa < pb
    }
}

/// Iterates the set bits of a mask in ascending order.
pub fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}
