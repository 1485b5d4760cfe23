//! Finite preorders and the topology of down-closed sets.
//!
//! Worlds are indices `0..n`; names are carried only for reporting. The
//! reading of `le(v, w)` is "v is below w", i.e. `v ∈ ↓w`. Open sets are the
//! down-closed sets, so the closure of `A` is the set of worlds that see a
//! member of `A` below them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use fixedbitset::FixedBitSet;

pub type WorldSet = FixedBitSet;

/// Builds a world set of capacity `n` from a list of members.
pub fn world_set(n: usize, members: impl IntoIterator<Item = usize>) -> WorldSet {
    let mut s = FixedBitSet::with_capacity(n);
    for m in members {
        s.insert(m);
    }
    s
}

pub fn full_set(n: usize) -> WorldSet {
    let mut s = FixedBitSet::with_capacity(n);
    s.insert_range(..);
    s
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PreorderError {
    #[error("world index {0} out of range")]
    UnknownWorld(usize),
    #[error("duplicate world name `{0}`")]
    DuplicateName(String),
}

/// A finite preorder stored as down-set and up-set rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Preorder {
    names: Vec<String>,
    down: Vec<FixedBitSet>,
    up: Vec<FixedBitSet>,
}

/// A binary relation between two finite sets, stored by rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    rows: Vec<FixedBitSet>,
    cols: usize,
}

impl Relation {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Relation {
            rows: (0..rows).map(|_| FixedBitSet::with_capacity(cols)).collect(),
            cols,
        }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Relation {
            rows: (0..rows).map(|_| full_set(cols)).collect(),
            cols,
        }
    }

    pub fn from_pairs(rows: usize, cols: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut r = Relation::empty(rows, cols);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// The graph of a total function.
    pub fn graph(map: &[usize], cols: usize) -> Self {
        Relation::from_pairs(map.len(), cols, map.iter().copied().enumerate())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.rows[a].insert(b);
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.rows[a].set(b, false);
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.rows[a].contains(b)
    }

    pub fn row(&self, a: usize) -> &FixedBitSet {
        &self.rows[a]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.ones().map(move |b| (a, b)))
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_serial(&self) -> Result<(), usize> {
        match self.rows.iter().position(|r| r.is_clear()) {
            Some(a) => Err(a),
            None => Ok(()),
        }
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| a.is_subset(b))
    }
}

/// Why a map fails to be monotone: `v ≼ w` but `f(v) ⋠ f(w)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapWitness {
    pub lower: usize,
    pub upper: usize,
}

/// Why a relation fails to be continuous: `w R v` and `w' ≼ w`, but no
/// `v' ≼ v` has `w' R v'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelationWitness {
    pub w: usize,
    pub v: usize,
    pub w_lower: usize,
}

impl Preorder {
    /// The preorder generated by `pairs` (each `(a, b)` meaning `a ≼ b`),
    /// closed reflexively and transitively. Worlds are named `w0, w1, ...`.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self, PreorderError> {
        let names = (0..n).map(|i| format!("w{i}")).collect();
        Preorder::from_named_pairs(names, pairs)
    }

    pub fn from_named_pairs(names: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self, PreorderError> {
        let n = names.len();
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(PreorderError::DuplicateName(a.clone()));
            }
        }
        let mut down: Vec<FixedBitSet> = (0..n).map(|i| world_set(n, [i])).collect();
        for &(a, b) in pairs {
            if a >= n {
                return Err(PreorderError::UnknownWorld(a));
            }
            if b >= n {
                return Err(PreorderError::UnknownWorld(b));
            }
            down[b].insert(a);
        }
        // Warshall: if k ∈ ↓j then ↓k ⊆ ↓j.
        for k in 0..n {
            let row_k = down[k].clone();
            for row in down.iter_mut() {
                if row.contains(k) {
                    row.union_with(&row_k);
                }
            }
        }
        Ok(Preorder::from_down_rows(names, down))
    }

    /// Builds from down-set rows that are already reflexive and transitive.
    pub(crate) fn from_down_rows(names: Vec<String>, down: Vec<FixedBitSet>) -> Self {
        let n = names.len();
        let mut up: Vec<FixedBitSet> = (0..n).map(|_| FixedBitSet::with_capacity(n)).collect();
        for (w, row) in down.iter().enumerate() {
            for v in row.ones() {
                up[v].insert(w);
            }
        }
        Preorder { names, down, up }
    }

    /// The preorder where `le(v, w)` is given by a predicate; the predicate
    /// is closed reflexively and transitively.
    pub fn from_fn(n: usize, le: impl Fn(usize, usize) -> bool) -> Self {
        let mut pairs = Vec::new();
        for v in 0..n {
            for w in 0..n {
                if le(v, w) {
                    pairs.push((v, w));
                }
            }
        }
        Preorder::from_pairs(n, &pairs).expect("indices in range")
    }

    /// `n` pairwise incomparable worlds.
    pub fn discrete(n: usize) -> Self {
        Preorder::from_pairs(n, &[]).expect("no pairs")
    }

    /// A chain `0 ≺ 1 ≺ ... ≺ n-1`.
    pub fn chain(n: usize) -> Self {
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Preorder::from_pairs(n, &pairs).expect("indices in range")
    }

    /// A single cluster of `n` worlds.
    pub fn cluster(n: usize) -> Self {
        Preorder::from_fn(n, |_, _| true)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, w: usize) -> &str {
        &self.names[w]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.len());
        self.names = names;
        self
    }

    pub fn worlds(&self) -> core::ops::Range<usize> {
        0..self.len()
    }

    pub fn empty_set(&self) -> WorldSet {
        FixedBitSet::with_capacity(self.len())
    }

    pub fn full_set(&self) -> WorldSet {
        full_set(self.len())
    }

    /// `v ≼ w`.
    pub fn le(&self, v: usize, w: usize) -> bool {
        self.down[w].contains(v)
    }

    /// `v ≺ w`: below but not in the same cluster.
    pub fn lt(&self, v: usize, w: usize) -> bool {
        self.le(v, w) && !self.le(w, v)
    }

    pub fn same_cluster(&self, v: usize, w: usize) -> bool {
        self.le(v, w) && self.le(w, v)
    }

    /// `↓w`.
    pub fn downset(&self, w: usize) -> &WorldSet {
        &self.down[w]
    }

    /// `↑w`.
    pub fn upset(&self, w: usize) -> &WorldSet {
        &self.up[w]
    }

    pub fn try_downset(&self, w: usize) -> Result<&WorldSet, PreorderError> {
        self.down.get(w).ok_or(PreorderError::UnknownWorld(w))
    }

    /// `[w]`, the cluster of `w`.
    pub fn cluster_of(&self, w: usize) -> WorldSet {
        let mut c = self.down[w].clone();
        c.intersect_with(&self.up[w]);
        c
    }

    /// The least world of each cluster, in increasing order.
    pub fn cluster_reps(&self) -> Vec<usize> {
        self.worlds()
            .filter(|&w| self.cluster_of(w).ones().next() == Some(w))
            .collect()
    }

    pub fn clusters(&self) -> Vec<WorldSet> {
        self.cluster_reps().into_iter().map(|w| self.cluster_of(w)).collect()
    }

    /// Closure of `a`: `{w : ↓w ∩ a ≠ ∅}`.
    pub fn closure(&self, a: &WorldSet) -> WorldSet {
        let mut out = self.empty_set();
        for v in a.ones() {
            out.union_with(&self.up[v]);
        }
        out
    }

    /// Interior of `a`: `{w : ↓w ⊆ a}`.
    pub fn interior(&self, a: &WorldSet) -> WorldSet {
        let mut out = self.empty_set();
        for w in self.worlds() {
            if self.down[w].is_subset(a) {
                out.insert(w);
            }
        }
        out
    }

    /// Open means down-closed.
    pub fn is_open(&self, a: &WorldSet) -> bool {
        a.ones().all(|w| self.down[w].is_subset(a))
    }

    pub fn is_closed(&self, a: &WorldSet) -> bool {
        a.ones().all(|w| self.up[w].is_subset(a))
    }

    /// Continuity of a self-map, i.e. monotonicity.
    pub fn is_continuous_map(&self, f: &[usize]) -> Result<(), MapWitness> {
        for w in self.worlds() {
            for v in self.down[w].ones() {
                if !self.le(f[v], f[w]) {
                    return Err(MapWitness { lower: v, upper: w });
                }
            }
        }
        Ok(())
    }

    /// Continuity of a relation into `target`: whenever `w R v` and
    /// `w' ≼ w` there is `v' ≼ v` with `w' R v'`.
    pub fn is_continuous_relation(&self, target: &Preorder, r: &Relation) -> Result<(), RelationWitness> {
        for (w, v) in r.pairs() {
            for w_lower in self.down[w].ones() {
                if r.row(w_lower).is_disjoint(target.downset(v)) {
                    return Err(RelationWitness { w, v, w_lower });
                }
            }
        }
        Ok(())
    }

    /// The clusters immediately below `w`: clusters strictly below `[w]`
    /// with no cluster strictly between. Returned by least representative.
    pub fn daughters(&self, w: usize) -> Vec<usize> {
        let strict: Vec<usize> = self
            .cluster_reps()
            .into_iter()
            .filter(|&c| self.lt(c, w))
            .collect();
        strict
            .iter()
            .copied()
            .filter(|&c| !strict.iter().any(|&d| self.lt(c, d)))
            .collect()
    }

    /// The largest `N` with a chain `w₀ ≺ w₁ ≺ ... ≺ w_N`; a single
    /// cluster has height 0.
    pub fn height(&self) -> usize {
        // Longest chain ending at each world, computed by increasing size of ↓w.
        let mut order: Vec<usize> = self.worlds().collect();
        order.sort_by_key(|&w| self.down[w].count_ones(..));
        let mut best = alloc::vec![0usize; self.len()];
        for &w in &order {
            let below = self.down[w]
                .ones()
                .filter(|&v| self.lt(v, w))
                .map(|v| best[v])
                .max()
                .unwrap_or(0);
            best[w] = below + 1;
        }
        best.into_iter().max().map_or(0, |h| h - 1)
    }

    /// The largest number of daughters of any world.
    pub fn width(&self) -> usize {
        self.worlds().map(|w| self.daughters(w).len()).max().unwrap_or(0)
    }

    /// The sub-preorder on `keep`, with the map from new to old indices.
    pub fn restrict(&self, keep: &WorldSet) -> (Preorder, Vec<usize>) {
        let old: Vec<usize> = keep.ones().collect();
        let names = old.iter().map(|&w| self.names[w].clone()).collect();
        let down = old
            .iter()
            .map(|&w| world_set(old.len(), (0..old.len()).filter(|&j| self.le(old[j], w))))
            .collect();
        (Preorder::from_down_rows(names, down), old)
    }

    /// Renumbers worlds: new world `i` is old world `order[i]`.
    pub fn permute(&self, order: &[usize]) -> Preorder {
        let n = order.len();
        let names = order.iter().map(|&w| self.names[w].clone()).collect();
        let down = order
            .iter()
            .map(|&w| world_set(n, (0..n).filter(|&j| self.le(order[j], w))))
            .collect();
        Preorder::from_down_rows(names, down)
    }

    /// Tangled closure of a family of sets, as a greatest fixpoint: the
    /// largest `E` with `E ⊆ closure(A ∩ E)` for every `A` in the family.
    pub fn tangled_gfp(&self, family: &[WorldSet]) -> WorldSet {
        let mut e = self.full_set();
        loop {
            let mut next = e.clone();
            for a in family {
                let mut ae = a.clone();
                ae.intersect_with(&e);
                next.intersect_with(&self.closure(&ae));
            }
            if next == e {
                return e;
            }
            e = next;
        }
    }

    /// Tangled closure by clusters: `x` is in it iff some cluster below `x`
    /// meets every member of the family.
    pub fn tangled_cluster(&self, family: &[WorldSet]) -> WorldSet {
        let mut out = self.empty_set();
        for c in self.clusters() {
            if family.iter().all(|a| !a.is_disjoint(&c)) {
                let rep = c.ones().next().expect("clusters are nonempty");
                out.union_with(&self.up[rep]);
            }
        }
        out
    }
}
