//! Finite dynamic models and evaluation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::canon::preorders_up_to_iso;
use crate::preorder::{world_set, MapWitness, Preorder, WorldSet};
use crate::syntax::Formula;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("map has {got} entries but the space has {expected} worlds")]
    MapLength { expected: usize, got: usize },
    #[error("map sends world {from} to unknown world {to}")]
    MapRange { from: usize, to: usize },
    #[error("map is not monotone: world {} is below world {} but their images are not", .0.lower, .0.upper)]
    NotMonotone(MapWitness),
    #[error("valuation of `{0}` mentions a world outside the space")]
    ValuationRange(String),
    #[error("variable `{0}` has no valuation")]
    MissingVariable(String),
    #[error("exhaustive enumeration is capped at {cap} worlds, {requested} requested")]
    CapExceeded { cap: usize, requested: usize },
}

/// A finite preorder with a monotone self-map and a valuation. Variables
/// without an entry in `val` are false everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynModel {
    pub space: Preorder,
    pub map: Vec<usize>,
    pub val: BTreeMap<String, WorldSet>,
}

impl DynModel {
    pub fn new(space: Preorder, map: Vec<usize>, val: BTreeMap<String, WorldSet>) -> Result<Self, ModelError> {
        let n = space.len();
        if map.len() != n {
            return Err(ModelError::MapLength { expected: n, got: map.len() });
        }
        if let Some((from, &to)) = map.iter().enumerate().find(|(_, &t)| t >= n) {
            return Err(ModelError::MapRange { from, to });
        }
        space.is_continuous_map(&map).map_err(ModelError::NotMonotone)?;
        let mut fixed = BTreeMap::new();
        for (k, mut s) in val {
            if s.ones().any(|w| w >= n) {
                return Err(ModelError::ValuationRange(k));
            }
            s.grow(n);
            fixed.insert(k, s);
        }
        Ok(DynModel { space, map, val: fixed })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// `f⁻¹(a)`.
    pub fn preimage(&self, a: &WorldSet) -> WorldSet {
        world_set(self.len(), (0..self.len()).filter(|&w| a.contains(self.map[w])))
    }

    pub fn tangled_gfp(&self, family: &[WorldSet]) -> WorldSet {
        self.space.tangled_gfp(family)
    }

    pub fn tangled_cluster(&self, family: &[WorldSet]) -> WorldSet {
        self.space.tangled_cluster(family)
    }

    /// The extension of a formula.
    pub fn eval(&self, phi: &Formula) -> WorldSet {
        self.eval_inner(phi, &mut |_| Ok(())).expect("lenient evaluation never fails")
    }

    /// Like [`DynModel::eval`] but rejects variables missing from the
    /// valuation.
    pub fn eval_strict(&self, phi: &Formula) -> Result<WorldSet, ModelError> {
        self.eval_inner(phi, &mut |v| {
            if self.val.contains_key(v) {
                Ok(())
            } else {
                Err(ModelError::MissingVariable(v.into()))
            }
        })
    }

    pub fn satisfies(&self, w: usize, phi: &Formula) -> bool {
        self.eval(phi).contains(w)
    }

    pub fn is_valid(&self, phi: &Formula) -> bool {
        self.eval(phi).count_ones(..) == self.len()
    }

    fn eval_inner(
        &self,
        phi: &Formula,
        check: &mut dyn FnMut(&str) -> Result<(), ModelError>,
    ) -> Result<WorldSet, ModelError> {
        let n = self.len();
        Ok(match phi {
            Formula::Var(v) => {
                check(v)?;
                self.val.get(v).cloned().unwrap_or_else(|| self.space.empty_set())
            }
            Formula::Neg(a) => {
                let mut s = self.eval_inner(a, check)?;
                s.toggle_range(..);
                s
            }
            Formula::And(a, b) => {
                let mut s = self.eval_inner(a, check)?;
                s.intersect_with(&self.eval_inner(b, check)?);
                s
            }
            Formula::Next(a) => self.preimage(&self.eval_inner(a, check)?),
            Formula::Hence(a) => self.hence(&self.eval_inner(a, check)?),
            Formula::Tangle(members) => {
                let family = members
                    .iter()
                    .map(|g| self.eval_inner(g, check))
                    .collect::<Result<Vec<_>, _>>()?;
                let out = self.space.tangled_gfp(&family);
                debug_assert_eq!(out.len(), n);
                out
            }
        })
    }

    /// Points whose whole orbit lies in `base`.
    fn hence(&self, base: &WorldSet) -> WorldSet {
        let mut h = base.clone();
        loop {
            let mut next = self.preimage(&h);
            next.intersect_with(base);
            if next == h {
                return h;
            }
            h = next;
        }
    }

    /// The orbit of `x` as a lasso: the distinct points `x, f(x), ...` and
    /// the index where the cycle starts.
    pub fn orbit(&self, x: usize) -> (Vec<usize>, usize) {
        let mut seen = vec![usize::MAX; self.len()];
        let mut out = Vec::new();
        let mut cur = x;
        while seen[cur] == usize::MAX {
            seen[cur] = out.len();
            out.push(cur);
            cur = self.map[cur];
        }
        (out, seen[cur])
    }
}

/// A formula flattened into a DAG with each distinct subformula stored
/// once, for evaluating one large formula on many models.
#[derive(Clone, Debug)]
pub struct CompiledFormula {
    nodes: Vec<Node>,
}

#[derive(Clone, Debug)]
enum Node {
    Var(String),
    Neg(usize),
    And(usize, usize),
    Next(usize),
    Hence(usize),
    Tangle(Vec<usize>),
}

impl CompiledFormula {
    pub fn new(phi: &Formula) -> Self {
        let mut out = CompiledFormula { nodes: Vec::new() };
        let mut ids = BTreeMap::new();
        out.add(phi, &mut ids);
        out
    }

    /// Number of distinct subformulas.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn add<'a>(&mut self, phi: &'a Formula, ids: &mut BTreeMap<&'a Formula, usize>) -> usize {
        if let Some(&i) = ids.get(phi) {
            return i;
        }
        let node = match phi {
            Formula::Var(v) => Node::Var(v.clone()),
            Formula::Neg(a) => Node::Neg(self.add(a, ids)),
            Formula::And(a, b) => {
                let a = self.add(a, ids);
                Node::And(a, self.add(b, ids))
            }
            Formula::Next(a) => Node::Next(self.add(a, ids)),
            Formula::Hence(a) => Node::Hence(self.add(a, ids)),
            Formula::Tangle(ms) => Node::Tangle(ms.iter().map(|g| self.add(g, ids)).collect()),
        };
        self.nodes.push(node);
        ids.insert(phi, self.nodes.len() - 1);
        self.nodes.len() - 1
    }
}

impl DynModel {
    /// Same result as [`DynModel::eval`].
    pub fn eval_compiled(&self, phi: &CompiledFormula) -> WorldSet {
        if self.len() <= 64 {
            let mask = self.eval_masks(phi);
            return world_set(self.len(), (0..self.len()).filter(|&w| mask >> w & 1 == 1));
        }
        let mut ext: Vec<WorldSet> = Vec::with_capacity(phi.nodes.len());
        for node in &phi.nodes {
            let s = match node {
                Node::Var(v) => self.val.get(v).cloned().unwrap_or_else(|| self.space.empty_set()),
                Node::Neg(a) => {
                    let mut s = ext[*a].clone();
                    s.toggle_range(..);
                    s
                }
                Node::And(a, b) => {
                    let mut s = ext[*a].clone();
                    s.intersect_with(&ext[*b]);
                    s
                }
                Node::Next(a) => self.preimage(&ext[*a]),
                Node::Hence(a) => self.hence(&ext[*a]),
                Node::Tangle(ms) => {
                    let family: Vec<WorldSet> = ms.iter().map(|&g| ext[g].clone()).collect();
                    self.space.tangled_gfp(&family)
                }
            };
            ext.push(s);
        }
        ext.pop().unwrap_or_else(|| self.space.empty_set())
    }

    pub fn is_valid_compiled(&self, phi: &CompiledFormula) -> bool {
        if self.len() <= 64 {
            return self.eval_masks(phi) == full_mask(self.len());
        }
        self.eval_compiled(phi).count_ones(..) == self.len()
    }

    /// Evaluation on bit masks, for at most 64 worlds.
    fn eval_masks(&self, phi: &CompiledFormula) -> u64 {
        let n = self.len();
        let full = full_mask(n);
        let to_mask = |s: &WorldSet| s.ones().fold(0u64, |m, w| m | 1 << w);
        let up: Vec<u64> = (0..n).map(|w| to_mask(self.space.upset(w))).collect();
        let closure = |a: u64| {
            let mut out = 0;
            let mut rest = a;
            while rest != 0 {
                out |= up[rest.trailing_zeros() as usize];
                rest &= rest - 1;
            }
            out
        };
        let preimage = |a: u64| (0..n).filter(|&w| a >> self.map[w] & 1 == 1).fold(0u64, |m, w| m | 1 << w);
        let mut ext: Vec<u64> = Vec::with_capacity(phi.nodes.len());
        for node in &phi.nodes {
            let s = match node {
                Node::Var(v) => self.val.get(v).map_or(0, to_mask),
                Node::Neg(a) => !ext[*a] & full,
                Node::And(a, b) => ext[*a] & ext[*b],
                Node::Next(a) => preimage(ext[*a]),
                Node::Hence(a) => {
                    let base = ext[*a];
                    let mut h = base;
                    loop {
                        let next = preimage(h) & base;
                        if next == h {
                            break h;
                        }
                        h = next;
                    }
                }
                Node::Tangle(ms) => {
                    let mut e = full;
                    loop {
                        let next = ms.iter().fold(e, |acc, &g| acc & closure(ext[g] & e));
                        if next == e {
                            break e;
                        }
                        e = next;
                    }
                }
            };
            ext.push(s);
        }
        ext.pop().unwrap_or(0)
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// All monotone self-maps of a preorder, in lexicographic order.
pub fn monotone_maps(p: &Preorder) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(p.len());
    monotone_dfs(p, &mut cur, &mut |m| out.push(m.to_vec()));
    out
}

pub fn count_monotone_maps(p: &Preorder) -> u64 {
    let mut count = 0u64;
    let mut cur = Vec::with_capacity(p.len());
    monotone_dfs(p, &mut cur, &mut |_| count += 1);
    count
}

fn monotone_dfs(p: &Preorder, cur: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    let w = cur.len();
    if w == p.len() {
        emit(cur);
        return;
    }
    for img in 0..p.len() {
        let ok = (0..w).all(|v| {
            (!p.le(v, w) || p.le(cur[v], img)) && (!p.le(w, v) || p.le(img, cur[v]))
        });
        if ok {
            cur.push(img);
            monotone_dfs(p, cur, emit);
            cur.pop();
        }
    }
}

/// Default cap on the number of worlds for exhaustive enumeration.
pub const EXHAUSTIVE_CAP: usize = 5;

fn valuation(n: usize, vars: &[String], code: u64) -> BTreeMap<String, WorldSet> {
    vars.iter()
        .enumerate()
        .map(|(k, v)| {
            let bits = (code >> (k * n)) & ((1u64 << n) - 1);
            (v.clone(), world_set(n, (0..n).filter(|&i| bits & (1 << i) != 0)))
        })
        .collect()
}

/// Every model on at most `n_max` worlds: preorders up to isomorphism,
/// every monotone map and every valuation of `vars`.
pub struct ExhaustiveModels {
    vars: Vec<String>,
    spaces: Vec<Preorder>,
    space_ix: usize,
    maps: Vec<Vec<usize>>,
    map_ix: usize,
    val_code: u64,
}

impl ExhaustiveModels {
    pub fn new(n_max: usize, vars: &[String]) -> Result<Self, ModelError> {
        Self::with_cap(n_max, vars, EXHAUSTIVE_CAP)
    }

    pub fn with_cap(n_max: usize, vars: &[String], cap: usize) -> Result<Self, ModelError> {
        if n_max > cap {
            return Err(ModelError::CapExceeded { cap, requested: n_max });
        }
        let spaces = preorders_up_to_iso(n_max);
        let maps = spaces.first().map(monotone_maps).unwrap_or_default();
        Ok(ExhaustiveModels {
            vars: vars.to_vec(),
            spaces,
            space_ix: 0,
            maps,
            map_ix: 0,
            val_code: 0,
        })
    }
}

impl Iterator for ExhaustiveModels {
    type Item = DynModel;

    fn next(&mut self) -> Option<DynModel> {
        let space = self.spaces.get(self.space_ix)?;
        let n = space.len();
        let model = DynModel {
            space: space.clone(),
            map: self.maps[self.map_ix].clone(),
            val: valuation(n, &self.vars, self.val_code),
        };
        self.val_code += 1;
        if self.val_code == 1u64 << (n * self.vars.len()) {
            self.val_code = 0;
            self.map_ix += 1;
            if self.map_ix == self.maps.len() {
                self.map_ix = 0;
                self.space_ix += 1;
                if let Some(p) = self.spaces.get(self.space_ix) {
                    self.maps = monotone_maps(p);
                }
            }
        }
        Some(model)
    }
}

/// Samples uniformly from the same space [`ExhaustiveModels`] walks,
/// deterministically from a seed.
pub struct RandomModels {
    vars: Vec<String>,
    spaces: Vec<Preorder>,
    cumulative: Vec<u128>,
    rng: ChaCha8Rng,
}

impl RandomModels {
    pub fn new(n_max: usize, vars: &[String], seed: u64) -> Self {
        let spaces = preorders_up_to_iso(n_max);
        let mut total = 0u128;
        let cumulative = spaces
            .iter()
            .map(|p| {
                total += u128::from(count_monotone_maps(p)) << (p.len() * vars.len());
                total
            })
            .collect();
        RandomModels {
            vars: vars.to_vec(),
            spaces,
            cumulative,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Restarts the stream as if built with `seed`, keeping the costly
    /// table of spaces.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn sample(&mut self) -> DynModel {
        let total = *self.cumulative.last().expect("at least one space");
        let pick = self.rng.gen_range(0..total);
        let ix = self.cumulative.partition_point(|&c| c <= pick);
        let space = self.spaces[ix].clone();
        let n = space.len();
        let map = loop {
            let cand: Vec<usize> = (0..n).map(|_| self.rng.gen_range(0..n)).collect();
            if space.is_continuous_map(&cand).is_ok() {
                break cand;
            }
        };
        let bits = n * self.vars.len();
        let code = if bits == 0 { 0 } else { self.rng.gen_range(0..(1u64 << bits)) };
        let val = valuation(n, &self.vars, code);
        DynModel { space, map, val }
    }
}

impl Iterator for RandomModels {
    type Item = DynModel;
    fn next(&mut self) -> Option<DynModel> {
        Some(self.sample())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::random_formula;
    use crate::preorder::Relation;
    use crate::syntax::parse;
    use alloc::string::ToString;
    use proptest::prelude::{any, prop_assert_eq, proptest, ProptestConfig};

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn vars(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    // chain b ≺ a, a = 0, b = 1, f = id
    fn chain_model(p: &[usize]) -> DynModel {
        let space = Preorder::from_pairs(2, &[(1, 0)]).unwrap();
        let mut val = BTreeMap::new();
        val.insert("p".into(), world_set(2, p.iter().copied()));
        DynModel::new(space, vec![0, 1], val).unwrap()
    }

    #[test]
    fn eval_examples() {
        let m = chain_model(&[1]);
        assert_eq!(m.eval(&f("<>p")), world_set(2, [0, 1]));
        assert_eq!(m.eval(&f("G p")), world_set(2, [1]));
        assert_eq!(m.eval(&f("<>{p, ~p}")), world_set(2, []));

        let mut val = BTreeMap::new();
        val.insert("p".into(), world_set(2, [0]));
        val.insert("q".into(), world_set(2, [1]));
        let c = DynModel::new(Preorder::cluster(2), vec![0, 1], val).unwrap();
        assert_eq!(c.eval(&f("<>{p, q}")), world_set(2, [0, 1]));
    }

    #[test]
    fn tangle_on_chain_by_exhaustive_tangled_sets() {
        // ◇{p,¬p} on b ≺ a, p = {b}: no nonempty E has both dense in it
        let m = chain_model(&[1]);
        let p = world_set(2, [1]);
        let np = world_set(2, [0]);
        let mut best = world_set(2, []);
        for code in 0..4u32 {
            let e = world_set(2, (0..2).filter(|&i| code & (1 << i) != 0));
            let dense = |a: &WorldSet| {
                let mut ae = a.clone();
                ae.intersect_with(&e);
                e.is_subset(&m.space.closure(&ae))
            };
            if dense(&p) && dense(&np) {
                best.union_with(&e);
            }
        }
        assert_eq!(m.eval(&f("<>{p, ~p}")), best);
    }

    #[test]
    fn top_is_everything() {
        let m = chain_model(&[]);
        assert_eq!(m.eval(&Formula::top()), world_set(2, [0, 1]));
    }

    #[test]
    fn strict_mode_rejects_missing_variables() {
        let m = chain_model(&[1]);
        assert!(m.eval_strict(&f("p & q")).is_err());
        assert_eq!(m.eval(&f("q")), world_set(2, []));
        assert!(m.eval_strict(&f("<>p")).is_ok());
    }

    #[test]
    fn load_rejects_bad_maps() {
        let space = Preorder::from_pairs(2, &[(1, 0)]).unwrap();
        let e = DynModel::new(space.clone(), vec![1, 0], BTreeMap::new()).unwrap_err();
        assert!(matches!(e, ModelError::NotMonotone(_)));
        assert!(DynModel::new(space.clone(), vec![0], BTreeMap::new()).is_err());
        assert!(DynModel::new(space, vec![0, 7], BTreeMap::new()).is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(ExhaustiveModels::new(1, &vars(&["p"])).unwrap().count(), 2);
        assert!(ExhaustiveModels::new(6, &[]).is_err());
        // b ≺ a has three monotone maps; the 2-antichain has four
        let chain = Preorder::chain(2);
        assert_eq!(monotone_maps(&chain).len(), 3);
        assert_eq!(monotone_maps(&Preorder::discrete(2)).len(), 4);
        assert_eq!(monotone_maps(&Preorder::cluster(2)).len(), 4);
    }

    #[test]
    fn monotone_maps_match_brute_force() {
        for p in preorders_up_to_iso(4) {
            let n = p.len();
            let brute = (0..n.pow(n as u32))
                .filter(|&code| {
                    let m: Vec<usize> = (0..n).map(|i| code / n.pow(i as u32) % n).collect();
                    p.is_continuous_map(&m).is_ok()
                })
                .count();
            assert_eq!(monotone_maps(&p).len(), brute);
        }
    }

    #[test]
    fn random_stream_is_reproducible() {
        let v = vars(&["p", "q"]);
        let a: Vec<DynModel> = RandomModels::new(4, &v, 11).take(20).collect();
        let b: Vec<DynModel> = RandomModels::new(4, &v, 11).take(20).collect();
        assert_eq!(a, b);
        for m in &a {
            assert!(m.space.is_continuous_map(&m.map).is_ok());
        }
    }

    fn subsets(n: usize) -> Vec<WorldSet> {
        (0u32..(1 << n))
            .map(|m| world_set(n, (0..n).filter(|&i| m & (1 << i) != 0)))
            .collect()
    }

    #[test]
    fn gfp_matches_cluster_lemma_up_to_four_worlds() {
        for p in preorders_up_to_iso(4) {
            let all = subsets(p.len());
            for a in &all {
                assert_eq!(p.tangled_gfp(core::slice::from_ref(a)), p.closure(a));
                for b in &all {
                    let fam = [a.clone(), b.clone()];
                    assert_eq!(p.tangled_gfp(&fam), p.tangled_cluster(&fam));
                }
            }
        }
    }

    #[test]
    fn tcont_and_fix_hold_on_sampled_models() {
        let v = vars(&["p", "q"]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in RandomModels::new(4, &v, 5).take(300) {
            let gamma: Vec<Formula> = (0..rng.gen_range(0..3))
                .map(|_| random_formula(&mut rng, &v, 3))
                .collect();
            let tangle = Formula::tangle(gamma.clone());
            let lhs = m.eval(&Formula::tangle(gamma.iter().cloned().map(Formula::next)));
            assert!(lhs.is_subset(&m.preimage(&m.eval(&tangle))));
            let ext = m.eval(&tangle);
            for g in &gamma {
                let mut ge = m.eval(g);
                ge.intersect_with(&ext);
                assert!(ext.is_subset(&m.space.closure(&ge)));
            }
        }
    }

    #[test]
    fn hence_is_intersection_of_preimages() {
        let v = vars(&["p"]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in RandomModels::new(5, &v, 2).take(300) {
            let phi = random_formula(&mut rng, &v, 3);
            let mut acc = m.eval(&phi);
            let mut layer = acc.clone();
            for _ in 0..m.len() {
                layer = m.preimage(&layer);
                acc.intersect_with(&layer);
            }
            assert_eq!(m.eval(&phi.hence()), acc);
        }
    }

    #[test]
    fn graph_of_model_map_is_continuous() {
        for m in ExhaustiveModels::new(3, &[]).unwrap() {
            let g = Relation::graph(&m.map, m.len());
            assert!(m.space.is_continuous_relation(&m.space, &g).is_ok());
        }
    }

    #[test]
    fn compiled_evaluation_beyond_masks() {
        let n = 70;
        let mut val = BTreeMap::new();
        val.insert("p".into(), world_set(n, (0..n).filter(|w| w % 3 == 0)));
        val.insert("q".into(), world_set(n, (0..n).filter(|w| w % 5 == 1)));
        let m = DynModel::new(Preorder::cluster(n), (0..n).map(|w| (w + 1) % n).collect(), val).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let g = random_formula(&mut rng, &vars(&["p", "q"]), 4);
            assert_eq!(m.eval_compiled(&CompiledFormula::new(&g)), m.eval(&g));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn single_member_tangle_is_closure(seed in any::<u64>()) {
            let v = vars(&["p", "q"]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = RandomModels::new(4, &v, seed).sample();
            let g = random_formula(&mut rng, &v, 4);
            prop_assert_eq!(m.eval(&g.clone().diamond()), m.space.closure(&m.eval(&g)));
        }

        #[test]
        fn compiled_evaluation_agrees(seed in any::<u64>()) {
            let v = vars(&["p", "q"]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = RandomModels::new(4, &v, seed).sample();
            let g = random_formula(&mut rng, &v, 5);
            let shared = g.clone().and(g.clone().neg().or(g.clone()));
            prop_assert_eq!(m.eval_compiled(&CompiledFormula::new(&g)), m.eval(&g));
            prop_assert_eq!(m.eval_compiled(&CompiledFormula::new(&shared)), m.eval(&shared));
        }
    }
}
