//! The space of `Φ`-states: enumeration up to isomorphism, temporal
//! successors, efficient paths, consistency oracles, the canonical
//! structure and a witness-producing satisfiability pipeline.
//!
//! Enumeration is capped by world count next to the norm bound; the norm
//! bound alone admits clusters with one world per type. Truncation is
//! always reported.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::canon::preorders_of_size;
use crate::preorder::{Preorder, Relation};
use fixedbitset::FixedBitSet;
use crate::proofkit::{check_proof, ProofObject};
use crate::quasimodel::{is_sensible_pair, realizing_lasso, Path, Quasimodel, QuasimodelViolation};
use crate::semantics::{DynModel, ExhaustiveModels, RandomModels};
use crate::simformula::sim_formula;
use crate::simulation::{greatest_simulation, refine, simulates};
use crate::syntax::{formula_length, Formula, FormulaSet};
use crate::typing::{diamond_count, phi_types, typed_preorder_of_model, State, StateKey, TypeSet, TypedPreorder};

/// Engineering caps on enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub max_worlds: usize,
    pub max_states: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_worlds: 6,
            max_states: 100_000,
        }
    }
}

/// `(K+1)·len(Φ)`.
pub fn norm_bound(phi: &FormulaSet, k: usize) -> usize {
    (k + 1) * formula_length(phi)
}

/// States of `I_K(Φ)` within the caps, with the substate order and the
/// (small) temporal successor relations over them.
#[derive(Clone, Debug)]
pub struct StateSpace {
    pub phi: FormulaSet,
    pub k: usize,
    pub caps: Caps,
    /// Canonical representatives, smaller states first.
    pub states: Vec<State>,
    index: BTreeMap<StateKey, usize>,
    /// `le(i, j)`: state `i` is a substate of state `j`.
    pub le: Relation,
    pub step: Relation,
    pub small_step: Relation,
    /// Some state has the maximum number of worlds, so larger states
    /// within the norm bound may have been cut.
    pub world_cap_reached: bool,
    pub state_cap_reached: bool,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        self.index.get(&s.key()).copied()
    }

    pub fn truncated(&self) -> bool {
        self.world_cap_reached || self.state_cap_reached
    }

    pub fn small_successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.small_step.row(i).ones()
    }
}

struct Enumeration {
    states: Vec<State>,
    index: BTreeMap<StateKey, usize>,
    world_cap_reached: bool,
    state_cap_reached: bool,
}

/// Per-type lists of the tangles and negated tangles it contains.
struct TypeInfo {
    tangles: Vec<Vec<Formula>>,
    neg_tangles: Vec<Vec<Formula>>,
}

fn type_info(t: &TypeSet) -> TypeInfo {
    let mut tangles = Vec::new();
    let mut neg_tangles = Vec::new();
    for f in t.iter() {
        match f {
            Formula::Tangle(g) => tangles.push(g.clone()),
            Formula::Neg(x) => {
                if let Formula::Tangle(g) = x.as_ref() {
                    neg_tangles.push(g.clone());
                }
            }
            _ => {}
        }
    }
    TypeInfo { tangles, neg_tangles }
}

struct Search<'a> {
    types: &'a [TypeSet],
    info: Vec<TypeInfo>,
    root_ok: &'a dyn Fn(&TypeSet) -> bool,
    max_states: usize,
    out: Enumeration,
}

impl Search<'_> {
    /// Both typing clauses at `w`, given types on all of `↓w`.
    fn local_ok(&self, p: &Preorder, clusters: &[Vec<usize>], assign: &[usize], w: usize) -> bool {
        let info = &self.info[assign[w]];
        let has = |v: usize, g: &Formula| clusters[v].iter().any(|&u| self.types[assign[u]].contains(g));
        let all_neg = |v: usize, g: &Formula| {
            let ng = g.negated();
            clusters[v].iter().all(|&u| self.types[assign[u]].contains(&ng))
        };
        for gamma in &info.tangles {
            if !p.downset(w).ones().any(|v| gamma.iter().all(|g| has(v, g))) {
                return false;
            }
        }
        for gamma in &info.neg_tangles {
            if !p.downset(w).ones().all(|v| gamma.iter().any(|g| all_neg(v, g))) {
                return false;
            }
        }
        true
    }

    fn run(&mut self, p: &Preorder) {
        let n = p.len();
        let tops: Vec<usize> = p.worlds().filter(|&w| p.downset(w).count_ones(..) == n).collect();
        if tops.is_empty() {
            return;
        }
        let mut order: Vec<usize> = p.worlds().collect();
        order.sort_by_key(|&w| (p.downset(w).count_ones(..), p.downset(w).ones().next()));
        let clusters: Vec<Vec<usize>> = p.worlds().map(|w| p.cluster_of(w).ones().collect()).collect();
        let mut assign = vec![usize::MAX; n];
        self.dfs(p, &clusters, &order, &tops, 0, &mut assign);
    }

    fn dfs(
        &mut self,
        p: &Preorder,
        clusters: &[Vec<usize>],
        order: &[usize],
        tops: &[usize],
        i: usize,
        assign: &mut Vec<usize>,
    ) {
        if self.out.state_cap_reached {
            return;
        }
        if i == order.len() {
            self.emit(p, tops, assign);
            return;
        }
        let w = order[i];
        let closes_cluster = i + 1 == order.len() || !p.same_cluster(order[i + 1], w);
        for t in 0..self.types.len() {
            if clusters[w].iter().any(|&u| u != w && assign[u] == t) {
                continue;
            }
            assign[w] = t;
            if !closes_cluster || clusters[w].iter().all(|&u| self.local_ok(p, clusters, assign, u)) {
                self.dfs(p, clusters, order, tops, i + 1, assign);
            }
        }
        assign[w] = usize::MAX;
    }

    fn emit(&mut self, p: &Preorder, tops: &[usize], assign: &[usize]) {
        let types: Vec<TypeSet> = assign.iter().map(|&t| self.types[t].clone()).collect();
        for &root in tops {
            if !(self.root_ok)(&types[root]) {
                continue;
            }
            let s = State::new(TypedPreorder::new(p.clone(), types.clone()), root).expect("distinct in clusters");
            let key = s.key();
            if self.out.index.contains_key(&key) {
                continue;
            }
            if self.out.states.len() >= self.max_states {
                self.out.state_cap_reached = true;
                return;
            }
            self.out.index.insert(key, self.out.states.len());
            self.out.states.push(s.canonical());
        }
    }
}

fn enumerate_raw(
    types: &[TypeSet],
    bound: usize,
    caps: Caps,
    root_ok: &dyn Fn(&TypeSet) -> bool,
) -> Enumeration {
    let mut search = Search {
        types,
        info: types.iter().map(type_info).collect(),
        root_ok,
        max_states: caps.max_states,
        out: Enumeration {
            states: Vec::new(),
            index: BTreeMap::new(),
            world_cap_reached: false,
            state_cap_reached: false,
        },
    };
    for n in 1..=caps.max_worlds {
        let before = search.out.states.len();
        for p in preorders_of_size(n) {
            let norm = p.height().max(p.width());
            if norm <= bound {
                search.run(&p);
            }
            if search.out.state_cap_reached {
                return search.out;
            }
        }
        if n == caps.max_worlds && search.out.states.len() > before {
            search.out.world_cap_reached = true;
        }
    }
    search.out
}

/// The `Φ`-states with norm at most `(K+1)·len(Φ)` and at most
/// `caps.max_worlds` worlds, one per isomorphism class, together with the
/// substate order and the temporal successor relations.
pub fn enumerate_states(phi: &FormulaSet, k: usize, caps: Caps) -> StateSpace {
    let types = phi_types(phi);
    let e = enumerate_raw(&types, norm_bound(phi, k), caps, &|_| true);
    let n = e.states.len();
    let mut le = Relation::empty(n, n);
    for (j, s) in e.states.iter().enumerate() {
        for v in s.space().worlds() {
            if let Some(&i) = e.index.get(&s.substate_at(v).0.key()) {
                le.insert(i, j);
            }
        }
    }
    let mut step = Relation::empty(n, n);
    let mut small_step = Relation::empty(n, n);
    for (i, a) in e.states.iter().enumerate() {
        let bound = small_bound(a);
        for (j, b) in e.states.iter().enumerate() {
            if temporal_successor(a, b).is_some() {
                step.insert(i, j);
                if b.norm().nrm <= bound {
                    small_step.insert(i, j);
                }
            }
        }
    }
    StateSpace {
        phi: phi.clone(),
        k,
        caps,
        states: e.states,
        index: e.index,
        le,
        step,
        small_step,
        world_cap_reached: e.world_cap_reached,
        state_cap_reached: e.state_cap_reached,
    }
}

/// The largest relation between the worlds of `a` and `b` that is
/// continuous and relates only sensible pairs of types.
pub fn greatest_sensible_relation(a: &State, b: &State) -> Relation {
    let start = Relation::from_pairs(
        a.len(),
        b.len(),
        a.space().worlds().flat_map(|w| {
            b.space()
                .worlds()
                .filter(move |&v| is_sensible_pair(a.t(w), b.t(v)).is_ok())
                .map(move |v| (w, v))
        }),
    );
    refine(a.space(), b.space(), start)
}

/// `a ↦ b`: a serial, continuous, sensible relation relating the roots.
/// Returns one as certificate.
pub fn temporal_successor(a: &State, b: &State) -> Option<Relation> {
    if is_sensible_pair(a.root_type(), b.root_type()).is_err() {
        return None;
    }
    let g = greatest_sensible_relation(a, b);
    (g.contains(a.root, b.root) && g.is_serial().is_ok()).then_some(g)
}

/// `nrm(a) + #⋃ sub_◇`, the largest norm of a small successor of `a`.
pub fn small_bound(a: &State) -> usize {
    a.norm().nrm + diamond_count(a)
}

/// `a ⊢̇↦ b`: a temporal successor within the small norm bound.
pub fn small_temporal_successor(a: &State, b: &State) -> Option<Relation> {
    if b.norm().nrm > small_bound(a) {
        return None;
    }
    temporal_successor(a, b)
}

/// Re-checks a successor certificate from the definition.
pub fn verify_successor(a: &State, b: &State, g: &Relation) -> bool {
    g.n_rows() == a.len()
        && g.n_cols() == b.len()
        && g.contains(a.root, b.root)
        && g.is_serial().is_ok()
        && a.space().is_continuous_relation(b.space(), g).is_ok()
        && g.pairs().all(|(w, v)| is_sensible_pair(a.t(w), b.t(v)).is_ok())
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReduceError {
    #[error("no state within {0} worlds simulates into the input")]
    NotFoundWithinCaps(usize),
}

/// Some `𝔳 ∈ I_0(Φ)` with `𝔳 ⊴ 𝔴`. Only types of `𝔴` can occur in such
/// a `𝔳`, so the search is restricted to them; smaller states are tried
/// first.
pub fn reduce_state(w: &State, phi: &FormulaSet, max_worlds: usize) -> Result<State, ReduceError> {
    let bound = norm_bound(phi, 0);
    if w.norm().nrm <= bound && w.len() <= max_worlds {
        return Ok(w.clone());
    }
    let range = w.type_range();
    let root_type = w.root_type().clone();
    let caps = Caps {
        max_worlds,
        max_states: usize::MAX,
    };
    let e = enumerate_raw(&range, bound, caps, &|t| *t == root_type);
    e.states
        .into_iter()
        .find(|v| simulates(v, w).is_some())
        .ok_or(ReduceError::NotFoundWithinCaps(max_worlds))
}

/// An extension that was cut because an earlier state simulates into a
/// later one: `states[path[m1]] ⊴ states[path[m2]]`, `m1 < m2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pruning {
    pub path: Vec<usize>,
    pub m1: usize,
    pub m2: usize,
}

/// The outcome of an efficient-path search.
///
/// What a prefix can still become depends only on its last state and on
/// the set `U` of states some member of the prefix simulates into. A
/// configuration `(last, U)` is not expanded when `(last, U')` with
/// `U' ⊆ U` was already entered, since every continuation of the former
/// continues the latter too, nor when every state reachable from `last`
/// outside `U` is already visited. So `visited` is exact and every
/// witness is sound, but paths are not enumerated.
#[derive(Clone, Debug, Default)]
pub struct EfficientPaths {
    /// Some maximal efficient paths: one per configuration where the
    /// search ended.
    pub examples: Vec<Vec<usize>>,
    /// One witness per entered configuration and cut successor.
    pub pruned: Vec<Pruning>,
    /// Every state on some efficient path.
    pub visited: BTreeSet<usize>,
    pub configurations: usize,
    /// The configuration limit was hit.
    pub truncated: bool,
}

/// `⊴` between states of a space, memoized.
#[derive(Default)]
pub struct SimMemo {
    memo: BTreeMap<(usize, usize), bool>,
}

impl SimMemo {
    pub fn new() -> Self {
        SimMemo::default()
    }

    pub fn get(&mut self, space: &StateSpace, a: usize, b: usize) -> bool {
        *self
            .memo
            .entry((a, b))
            .or_insert_with(|| simulates(&space.states[a], &space.states[b]).is_some())
    }
}

struct PathSearch<'a> {
    space: &'a StateSpace,
    allowed: &'a dyn Fn(usize) -> bool,
    /// `up[z]`: the allowed states `z` simulates into.
    up: Vec<Option<FixedBitSet>>,
    entered: BTreeMap<usize, Vec<FixedBitSet>>,
    budget: usize,
    out: EfficientPaths,
}

impl PathSearch<'_> {
    fn up(&mut self, z: usize) -> &FixedBitSet {
        if self.up[z].is_none() {
            let n = self.space.len();
            let mut row = FixedBitSet::with_capacity(n);
            for y in 0..n {
                if (self.allowed)(y) && simulates(&self.space.states[z], &self.space.states[y]).is_some() {
                    row.insert(y);
                }
            }
            self.up[z] = Some(row);
        }
        self.up[z].as_ref().expect("filled above")
    }

    /// Whether some unvisited state is reachable from `last` through
    /// states outside `seen`; if not, no continuation can add to
    /// `visited`.
    fn may_find_new(&self, last: usize, seen: &FixedBitSet) -> bool {
        let mut reached = seen.clone();
        let mut stack = vec![last];
        while let Some(z) = stack.pop() {
            for v in self.space.small_successors(z) {
                if reached.contains(v) || !(self.allowed)(v) {
                    continue;
                }
                if !self.out.visited.contains(&v) {
                    return true;
                }
                reached.insert(v);
                stack.push(v);
            }
        }
        false
    }

    fn run(&mut self, path: &mut Vec<usize>, seen: FixedBitSet) {
        let last = *path.last().expect("nonempty");
        let entered = self.entered.entry(last).or_default();
        if entered.iter().any(|u| u.is_subset(&seen)) {
            return;
        }
        if self.budget == 0 {
            self.out.truncated = true;
            return;
        }
        self.budget -= 1;
        entered.push(seen.clone());
        self.out.configurations += 1;
        self.out.visited.insert(last);
        if !self.may_find_new(last, &seen) {
            return;
        }
        let mut extended = false;
        let next: Vec<usize> = self.space.small_successors(last).filter(|&v| (self.allowed)(v)).collect();
        for v in next {
            if seen.contains(v) {
                let m2 = path.len();
                let m1 = (0..m2)
                    .find(|&i| self.up(path[i]).contains(v))
                    .expect("seen is the union of the prefix's rows");
                let mut cut = path.clone();
                cut.push(v);
                self.out.pruned.push(Pruning { path: cut, m1, m2 });
                continue;
            }
            extended = true;
            let mut grown = seen.clone();
            grown.union_with(self.up(v));
            path.push(v);
            self.run(path, grown);
            path.pop();
        }
        if !extended {
            self.out.examples.push(path.clone());
        }
    }
}

/// Maximal efficient small-step paths from `start`: paths along which no
/// earlier state simulates into a later one. `allowed` restricts the
/// states a path may use; `limit` bounds the configurations explored.
pub fn efficient_paths_within(
    space: &StateSpace,
    start: usize,
    allowed: &dyn Fn(usize) -> bool,
    limit: usize,
) -> EfficientPaths {
    if !allowed(start) {
        return EfficientPaths::default();
    }
    let mut search = PathSearch {
        space,
        allowed,
        up: vec![None; space.len()],
        entered: BTreeMap::new(),
        budget: limit,
        out: EfficientPaths::default(),
    };
    let seen = search.up(start).clone();
    search.run(&mut vec![start], seen);
    search.out
}

pub fn efficient_paths(space: &StateSpace, start: usize) -> EfficientPaths {
    efficient_paths_within(space, start, &|_| true, 10_000_000)
}

/// Re-checks a pruning witness.
pub fn verify_pruning(space: &StateSpace, p: &Pruning) -> bool {
    p.m1 < p.m2
        && p.m2 < p.path.len()
        && simulates(&space.states[p.path[p.m1]], &space.states[p.path[p.m2]]).is_some()
}

/// A finite model and a point in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelWitness {
    pub model: DynModel,
    pub point: usize,
}

/// An oracle's judgement of a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// With a model and point satisfying the state's simulation formula,
    /// when the oracle found one.
    Consistent(Option<ModelWitness>),
    /// With a proof of the negated simulation formula.
    Inconsistent(ProofObject),
    Unknown,
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown)
    }
}

/// Checks a verdict's witness: the model point satisfies `Sim(𝔴)`, or the
/// proof checks and ends in `¬Sim(𝔴)`.
pub fn verify_verdict(s: &State, v: &Verdict) -> bool {
    match v {
        Verdict::Consistent(Some(w)) => match sim_formula(s) {
            Ok(sim) => w.point < w.model.len() && w.model.satisfies(w.point, &sim),
            Err(_) => false,
        },
        Verdict::Consistent(None) | Verdict::Unknown => true,
        Verdict::Inconsistent(p) => match sim_formula(s) {
            Ok(sim) => check_proof(p).is_ok() && p.conclusion() == Some(&sim.neg()),
            Err(_) => false,
        },
    }
}

/// Something that can run out.
pub trait Budget {
    /// Takes one unit; false once exhausted.
    fn spend(&mut self) -> bool;
}

pub struct Unlimited;

impl Budget for Unlimited {
    fn spend(&mut self) -> bool {
        true
    }
}

/// A fixed number of units.
pub struct CountBudget(pub u64);

impl Budget for CountBudget {
    fn spend(&mut self) -> bool {
        if self.0 == 0 {
            false
        } else {
            self.0 -= 1;
            true
        }
    }
}

/// Judges whether `¬Sim(𝔴)` is derivable.
pub trait Oracle {
    fn judge(&mut self, phi: &FormulaSet, s: &State) -> Verdict;
}

/// Everything is consistent.
pub struct TrustingOracle;

impl Oracle for TrustingOracle {
    fn judge(&mut self, _: &FormulaSet, _: &State) -> Verdict {
        Verdict::Consistent(None)
    }
}

/// Searches a pool of finite models for a point the state simulates
/// into. A hit proves consistency by soundness; a miss gives `Unknown`.
pub struct ModelSearchOracle {
    /// All models up to this many worlds are tried first.
    pub exhaustive_worlds: usize,
    /// Then this many random models with up to `random_worlds` worlds.
    pub random_models: usize,
    pub random_worlds: usize,
    pub seed: u64,
    budget: Box<dyn Budget>,
    pool: Option<(FormulaSet, Vec<(DynModel, TypedPreorder)>)>,
    cache: BTreeMap<StateKey, Verdict>,
}

impl ModelSearchOracle {
    pub fn new(seed: u64) -> Self {
        ModelSearchOracle {
            exhaustive_worlds: 3,
            random_models: 2000,
            random_worlds: 5,
            seed,
            budget: Box::new(Unlimited),
            pool: None,
            cache: BTreeMap::new(),
        }
    }

    pub fn with_budget(mut self, budget: Box<dyn Budget>) -> Self {
        self.budget = budget;
        self
    }

    fn ensure_pool(&mut self, phi: &FormulaSet) {
        if matches!(&self.pool, Some((p, _)) if p == phi) {
            return;
        }
        let vars: Vec<String> = phi.vars().into_iter().collect();
        // keep the exhaustive part near ten thousand models
        let exhaustive = if vars.len() <= 2 {
            self.exhaustive_worlds
        } else {
            self.exhaustive_worlds.min(2)
        };
        let mut models: Vec<DynModel> = ExhaustiveModels::with_cap(exhaustive, &vars, exhaustive.max(1))
            .expect("cap matches request")
            .collect();
        models.extend(RandomModels::new(self.random_worlds, &vars, self.seed).take(self.random_models));
        let pool = models
            .into_iter()
            .map(|m| {
                let tp = typed_preorder_of_model(&m, phi);
                (m, tp)
            })
            .collect();
        self.pool = Some((phi.clone(), pool));
        self.cache.clear();
    }
}

impl Oracle for ModelSearchOracle {
    fn judge(&mut self, phi: &FormulaSet, s: &State) -> Verdict {
        self.ensure_pool(phi);
        let key = s.key();
        if let Some(v) = self.cache.get(&key) {
            return v.clone();
        }
        let (_, pool) = self.pool.as_ref().expect("pool built");
        let root_type = s.root_type();
        let mut verdict = Verdict::Unknown;
        let mut exhausted = false;
        for (m, tp) in pool {
            if !self.budget.spend() {
                exhausted = true;
                break;
            }
            if !tp.types.iter().any(|t| t == root_type) {
                continue;
            }
            let g = greatest_simulation(&s.base, tp);
            if let Some(point) = g.row(s.root).ones().next() {
                verdict = Verdict::Consistent(Some(ModelWitness { model: m.clone(), point }));
                break;
            }
        }
        if !exhausted {
            self.cache.insert(key, verdict.clone());
        }
        verdict
    }
}

/// Accepts user-supplied proofs of `¬Sim(𝔴)` and defers everything else.
pub struct ProofWitnessOracle {
    pub proofs: Vec<ProofObject>,
    pub fallback: Box<dyn Oracle>,
}

impl Oracle for ProofWitnessOracle {
    fn judge(&mut self, phi: &FormulaSet, s: &State) -> Verdict {
        if let Ok(sim) = sim_formula(s) {
            let target = sim.neg();
            if let Some(p) = self
                .proofs
                .iter()
                .find(|p| p.conclusion() == Some(&target) && check_proof(p).is_ok())
            {
                return Verdict::Inconsistent(p.clone());
            }
        }
        self.fallback.judge(phi, s)
    }
}

/// What to do with states the oracle cannot decide.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UnknownPolicy {
    #[default]
    Exclude,
    Include,
}

impl UnknownPolicy {
    pub fn admits(self, v: &Verdict) -> bool {
        match v {
            Verdict::Consistent(_) => true,
            Verdict::Unknown => self == UnknownPolicy::Include,
            Verdict::Inconsistent(_) => false,
        }
    }
}

/// Judges every state of the space.
pub fn judge_all(space: &StateSpace, oracle: &mut dyn Oracle) -> Vec<Verdict> {
    space.states.iter().map(|s| oracle.judge(&space.phi, s)).collect()
}

/// `ρ(𝔴)`: the states on efficient small-step paths from `start` that use
/// only admitted states.
pub fn reachable(space: &StateSpace, start: usize, verdicts: &[Verdict], policy: UnknownPolicy) -> BTreeSet<usize> {
    efficient_paths_within(space, start, &|i| policy.admits(&verdicts[i]), 10_000_000).visited
}

/// Whether a flagged failure is a real violation or may be due to states
/// the oracle left undecided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlagKind {
    Violation,
    OracleGap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpennessFlag {
    pub state: usize,
    pub substate: usize,
    pub kind: FlagKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SerialityFlag {
    pub state: usize,
    pub kind: FlagKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealizationFlag {
    pub state: usize,
    pub eventuality: Formula,
}

/// The canonical structure over admitted states, with its checks.
#[derive(Clone, Debug)]
pub struct CanonicalReport {
    /// Admitted states, as indices into the space; world `i` of the
    /// quasimodel is `members[i]`.
    pub members: Vec<usize>,
    pub quasimodel: Quasimodel,
    pub openness: Vec<OpennessFlag>,
    pub seriality: Vec<SerialityFlag>,
    pub realization: Vec<RealizationFlag>,
    pub validation: Result<(), QuasimodelViolation>,
}

impl CanonicalReport {
    /// All checks passed: the structure is a `Φ`-quasimodel.
    pub fn certified(&self) -> bool {
        self.openness.is_empty() && self.seriality.is_empty() && self.realization.is_empty() && self.validation.is_ok()
    }
}

/// Restricts the space to admitted states with `≼` the substate order and
/// `↦` the temporal successor relation, and runs the checks.
pub fn canonical_structure(space: &StateSpace, verdicts: &[Verdict], policy: UnknownPolicy) -> CanonicalReport {
    let members: Vec<usize> = (0..space.len()).filter(|&i| policy.admits(&verdicts[i])).collect();
    let pos: BTreeMap<usize, usize> = members.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut openness = Vec::new();
    let mut seriality = Vec::new();
    let mut realization = Vec::new();
    for &j in &members {
        for i in space.le.pairs().filter(|&(_, b)| b == j).map(|(a, _)| a) {
            if !pos.contains_key(&i) {
                let kind = if verdicts[i].is_unknown() {
                    FlagKind::OracleGap
                } else {
                    FlagKind::Violation
                };
                openness.push(OpennessFlag {
                    state: j,
                    substate: i,
                    kind,
                });
            }
        }
        if !space.small_successors(j).any(|s| pos.contains_key(&s)) {
            let kind = if space.small_successors(j).any(|s| verdicts[s].is_unknown()) {
                FlagKind::OracleGap
            } else {
                FlagKind::Violation
            };
            seriality.push(SerialityFlag { state: j, kind });
        }
        let rho = reachable(space, j, verdicts, policy);
        for (ev, body) in space.states[j].root_type().eventualities() {
            if !rho.iter().any(|&r| space.states[r].root_type().contains(&body)) {
                realization.push(RealizationFlag {
                    state: j,
                    eventuality: ev.clone(),
                });
            }
        }
    }
    let quasimodel = structure_on(space, &members);
    let validation = quasimodel.validate();
    CanonicalReport {
        members,
        quasimodel,
        openness,
        seriality,
        realization,
        validation,
    }
}

fn structure_on(space: &StateSpace, members: &[usize]) -> Quasimodel {
    let n = members.len();
    let order = Preorder::from_fn(n, |a, b| space.le.contains(members[a], members[b]));
    let types = members.iter().map(|&i| space.states[i].root_type().clone()).collect();
    let step = Relation::from_pairs(
        n,
        n,
        (0..n).flat_map(|a| (0..n).filter(move |&b| space.step.contains(members[a], members[b])).map(move |b| (a, b))),
    );
    Quasimodel {
        base: TypedPreorder::new(order, types),
        step,
        phi: Some(space.phi.clone()),
    }
}

/// A quasimodel over states, with a world satisfying the target formula
/// and a realizing lasso from it.
#[derive(Clone, Debug)]
pub struct Fragment {
    pub states: Vec<State>,
    pub quasimodel: Quasimodel,
    pub root: usize,
    pub lasso: Path,
}

/// Builds the structure on a set of states closed under substates, with
/// `≼` the substate order and `↦` certified temporal successors.
fn fragment_on(phi: &FormulaSet, mut states: Vec<State>, root: usize) -> Result<Fragment, QuasimodelViolation> {
    let mut index: BTreeMap<StateKey, usize> = BTreeMap::new();
    let mut dedup = Vec::new();
    let mut root_ix = 0;
    let mut queue: VecDeque<(State, bool)> = states.drain(..).enumerate().map(|(i, s)| (s, i == root)).collect();
    while let Some((s, is_root)) = queue.pop_front() {
        let key = s.key();
        let ix = match index.get(&key) {
            Some(&ix) => ix,
            None => {
                index.insert(key, dedup.len());
                for sub in s.substates() {
                    queue.push_back((sub, false));
                }
                dedup.push(s.canonical());
                dedup.len() - 1
            }
        };
        if is_root {
            root_ix = ix;
        }
    }
    let n = dedup.len();
    let mut le = Relation::empty(n, n);
    for (j, s) in dedup.iter().enumerate() {
        for v in s.space().worlds() {
            le.insert(index[&s.substate_at(v).0.key()], j);
        }
    }
    let order = Preorder::from_fn(n, |a, b| le.contains(a, b));
    let types = dedup.iter().map(|s| s.root_type().clone()).collect();
    let step = Relation::from_pairs(
        n,
        n,
        (0..n).flat_map(|a| {
            let dedup = &dedup;
            (0..n)
                .filter(move |&b| temporal_successor(&dedup[a], &dedup[b]).is_some())
                .map(move |b| (a, b))
        }),
    );
    let q = Quasimodel {
        base: TypedPreorder::new(order, types),
        step,
        phi: Some(phi.clone()),
    };
    q.validate()?;
    let lasso = realizing_lasso(&q, root_ix).ok_or(QuasimodelViolation::Unrealized {
        world: root_ix,
        eventuality: Formula::top(),
    })?;
    Ok(Fragment {
        states: dedup,
        quasimodel: q,
        root: root_ix,
        lasso,
    })
}

/// The fragment a model witness induces: the witness state together with
/// the states of all model points.
pub fn fragment_from_model(phi: &FormulaSet, w: &State, m: &ModelWitness) -> Result<Fragment, QuasimodelViolation> {
    let mut states = vec![w.clone()];
    states.extend((0..m.model.len()).map(|y| State::of_model_point(&m.model, phi, y)));
    fragment_on(phi, states, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatVerdict {
    Satisfiable,
    NoWitnessFound,
}

#[derive(Clone, Debug)]
pub struct SatConfig {
    pub caps: Caps,
    pub policy: UnknownPolicy,
    /// Limit on candidate states handed to the oracle.
    pub max_candidates: usize,
}

impl Default for SatConfig {
    fn default() -> Self {
        SatConfig {
            caps: Caps {
                max_worlds: 3,
                max_states: 20_000,
            },
            policy: UnknownPolicy::Exclude,
            max_candidates: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SatReport {
    pub verdict: SatVerdict,
    pub formula: Formula,
    /// `|W|`: candidate states with the formula in the root type.
    pub candidates: usize,
    pub judged: usize,
    pub unknown: usize,
    pub truncated: bool,
    pub witness_state: Option<State>,
    pub model: Option<ModelWitness>,
    pub fragment: Option<Fragment>,
    pub notes: Vec<String>,
}

/// Looks for a consistent state of `I_0(φ)` whose root type contains `φ`
/// and ships what the oracle and the construction give as witnesses. Never
/// reports unsatisfiability.
pub fn satisfy(phi: &Formula, cfg: &SatConfig, oracle: &mut dyn Oracle) -> SatReport {
    let set = FormulaSet::singleton(phi.clone());
    let types = phi_types(&set);
    let canon = phi.canonical().clone();
    let w = enumerate_raw(&types, norm_bound(&set, 0), cfg.caps, &|t| t.contains(&canon));
    let mut report = SatReport {
        verdict: SatVerdict::NoWitnessFound,
        formula: phi.clone(),
        candidates: w.states.len(),
        judged: 0,
        unknown: 0,
        truncated: w.state_cap_reached || w.world_cap_reached,
        witness_state: None,
        model: None,
        fragment: None,
        notes: Vec::new(),
    };
    if w.states.is_empty() {
        report.notes.push("no candidate state contains the formula".into());
        return report;
    }
    let mut full: Option<Vec<State>> = None;
    for s in w.states.iter().take(cfg.max_candidates) {
        report.judged += 1;
        let verdict = oracle.judge(&set, s);
        if verdict.is_unknown() {
            report.unknown += 1;
        }
        if !cfg.policy.admits(&verdict) {
            continue;
        }
        if let Verdict::Consistent(Some(m)) = &verdict {
            if m.model.satisfies(m.point, phi) {
                match fragment_from_model(&set, s, m) {
                    Ok(f) => report.fragment = Some(f),
                    Err(e) => report.notes.push(alloc::format!("model fragment rejected: {e}")),
                }
                report.model = Some(m.clone());
                report.witness_state = Some(s.clone());
                report.verdict = SatVerdict::Satisfiable;
                return report;
            }
            report.notes.push("oracle witness does not satisfy the formula".into());
            continue;
        }
        // no model: build the generated fragment of the space
        let all = full.get_or_insert_with(|| {
            let e = enumerate_raw(&types, norm_bound(&set, 0), cfg.caps, &|_| true);
            e.states
        });
        match generated_fragment(&set, s, all, oracle, cfg.policy) {
            Ok(f) => {
                report.fragment = Some(f);
                report.witness_state = Some(s.clone());
                report.verdict = SatVerdict::Satisfiable;
                return report;
            }
            Err(e) => report.notes.push(alloc::format!("fragment from a candidate rejected: {e}")),
        }
    }
    report
}

/// The admitted states generated from `s` by substates and successors
/// within `all`, as a fragment.
fn generated_fragment(
    phi: &FormulaSet,
    s: &State,
    all: &[State],
    oracle: &mut dyn Oracle,
    policy: UnknownPolicy,
) -> Result<Fragment, QuasimodelViolation> {
    let mut seen: BTreeSet<StateKey> = BTreeSet::new();
    let mut queue = VecDeque::from([s.clone()]);
    let mut out = Vec::new();
    while let Some(a) = queue.pop_front() {
        if !seen.insert(a.key()) {
            continue;
        }
        for sub in a.substates() {
            queue.push_back(sub);
        }
        for b in all {
            if !seen.contains(&b.key()) && temporal_successor(&a, b).is_some() && policy.admits(&oracle.judge(phi, b)) {
                queue.push_back(b.clone());
            }
        }
        out.push(a);
    }
    fragment_on(phi, out, 0)
}

/// Re-verifies every witness a report ships, independently of how it was
/// found.
pub fn verify_report(report: &SatReport) -> Result<(), String> {
    let phi = &report.formula;
    let set = FormulaSet::singleton(phi.clone());
    if report.verdict == SatVerdict::NoWitnessFound {
        return Ok(());
    }
    let s = report.witness_state.as_ref().ok_or("no witness state")?;
    s.check_phi_state(&set).map_err(|e| alloc::format!("witness state: {e}"))?;
    if !s.root_type().contains(phi.canonical()) {
        return Err("witness state does not contain the formula".into());
    }
    if report.model.is_none() && report.fragment.is_none() {
        return Err("satisfiable without a witness".into());
    }
    if let Some(m) = &report.model {
        if m.point >= m.model.len() || !m.model.satisfies(m.point, phi) {
            return Err("model witness does not satisfy the formula".into());
        }
    }
    if let Some(f) = &report.fragment {
        f.quasimodel.validate().map_err(|e| alloc::format!("fragment: {e}"))?;
        if !f.quasimodel.t(f.root).contains(phi.canonical()) {
            return Err("fragment root does not contain the formula".into());
        }
        if f.lasso.at(0) != Some(f.root) || !f.lasso.is_path_in(&f.quasimodel) || !f.lasso.is_realizing(&f.quasimodel) {
            return Err("lasso is not a realizing path from the root".into());
        }
    }
    Ok(())
}
