//! Types, typed preorders and states.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::canon::{canonical_form, Code};
use crate::preorder::{world_set, Preorder};
use crate::semantics::DynModel;
use crate::syntax::{decision_atoms, q_transform, sub_pm, subformulas, substitute, Formula, FormulaSet, FreshVars};

/// A set of formulas held in canonical form (`¬¬ψ` stored as `ψ`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TypeSet(FormulaSet);

/// The first rule a candidate type breaks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeViolation {
    /// Both `ψ` and `¬ψ` are present.
    Contradiction(Formula),
    /// `ψ ∧ ϑ` is present but the named conjunct is not.
    MissingConjunct { conj: Formula, missing: Formula },
    /// `¬(ψ ∧ ϑ)` is present but neither `¬ψ` nor `¬ϑ` is.
    NoFalseConjunct(Formula),
    /// `[f]ψ` is present but `ψ` is not.
    HenceWithoutBody(Formula),
    /// A formula of `sub(Φ)` is not decided.
    Undecided(Formula),
    /// A member is outside `sub±(Φ)`.
    Outside(Formula),
}

impl fmt::Display for TypeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeViolation::Contradiction(x) => write!(f, "contains both {x} and its negation"),
            TypeViolation::MissingConjunct { conj, missing } => write!(f, "contains {conj} but not {missing}"),
            TypeViolation::NoFalseConjunct(x) => write!(f, "contains {x} but no negated conjunct"),
            TypeViolation::HenceWithoutBody(x) => write!(f, "contains {x} but not its body"),
            TypeViolation::Undecided(x) => write!(f, "does not decide {x}"),
            TypeViolation::Outside(x) => write!(f, "{x} is not in sub±(Φ)"),
        }
    }
}

impl TypeSet {
    pub fn new<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        TypeSet(items.into_iter().map(|f| f.canonical().clone()).collect())
    }

    pub fn empty() -> Self {
        TypeSet(FormulaSet::new())
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.0.contains_canon(f)
    }

    pub fn formulas(&self) -> &FormulaSet {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Formula> + '_ {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, f: Formula) {
        self.0.insert(f.canonical().clone());
    }

    /// `⋀T`, in canonical order; `⊤` when empty.
    pub fn conj(&self) -> Formula {
        Formula::conj(self.0.iter().cloned())
    }

    /// Checks the four weak-type rules.
    pub fn check_weak(&self) -> Result<(), TypeViolation> {
        for f in self.iter() {
            if self.contains(&f.negated()) {
                return Err(TypeViolation::Contradiction(f.clone()));
            }
            match f {
                Formula::And(a, b) => {
                    for x in [a, b] {
                        if !self.contains(x) {
                            return Err(TypeViolation::MissingConjunct {
                                conj: f.clone(),
                                missing: (**x).clone(),
                            });
                        }
                    }
                }
                Formula::Neg(inner) => {
                    if let Formula::And(a, b) = inner.as_ref() {
                        if !self.contains(&a.negated()) && !self.contains(&b.negated()) {
                            return Err(TypeViolation::NoFalseConjunct(f.clone()));
                        }
                    }
                }
                Formula::Hence(body) if !self.contains(body) => {
                    return Err(TypeViolation::HenceWithoutBody(f.clone()));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Checks that this is a `Φ`-type.
    pub fn check_phi_type(&self, phi: &FormulaSet) -> Result<(), TypeViolation> {
        self.check_weak()?;
        let pm = sub_pm(phi);
        if let Some(f) = self.iter().find(|f| !pm.contains(f)) {
            return Err(TypeViolation::Outside(f.clone()));
        }
        for psi in &subformulas(phi) {
            if !self.contains(psi) && !self.contains(&psi.negated()) {
                return Err(TypeViolation::Undecided(psi.clone()));
            }
        }
        Ok(())
    }

    /// `sub_◇(T)`: the tangle formulas among the subformulas of members.
    pub fn diamond_subformulas(&self) -> FormulaSet {
        subformulas(&self.0)
            .into_iter()
            .filter(|f| matches!(f, Formula::Tangle(_)))
            .collect()
    }

    /// The eventualities `⟨f⟩ψ` in this type, with their bodies `ψ`.
    pub fn eventualities(&self) -> impl Iterator<Item = (&Formula, Formula)> + '_ {
        self.iter().filter_map(|f| f.eventuality_body().map(|b| (f, b)))
    }

    pub fn substitute(&self, sigma: &BTreeMap<String, Formula>) -> TypeSet {
        TypeSet::new(self.iter().map(|f| substitute(f, sigma)))
    }

    /// `T⁺`: adds `◯[f]ψ` for the `[f]ψ` selected by `variant`, and `◯⟨f⟩ψ`
    /// for every `⟨f⟩ψ ∈ T` with `ψ ∉ T`.
    pub fn plus(&self, phi: &FormulaSet, variant: PlusVariant) -> TypeSet {
        let mut out = self.clone();
        let hence_source: Vec<&Formula> = match variant {
            PlusVariant::Literal => phi.iter().collect(),
            PlusVariant::OwnType => self.iter().collect(),
        };
        for f in hence_source {
            if let Formula::Hence(_) = f.canonical() {
                out.insert(f.canonical().clone().next());
            }
        }
        for (ev, body) in self.eventualities() {
            if !self.contains(&body) {
                out.insert(ev.clone().next());
            }
        }
        out
    }
}

impl fmt::Display for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromIterator<Formula> for TypeSet {
    fn from_iter<I: IntoIterator<Item = Formula>>(iter: I) -> Self {
        TypeSet::new(iter)
    }
}

/// Which `[f]ψ` contribute `◯[f]ψ` to `T⁺`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PlusVariant {
    /// Every `[f]ψ` that is a member of `Φ` itself.
    #[default]
    Literal,
    /// Every `[f]ψ` in the type being extended.
    OwnType,
}

/// All `Φ`-types.
pub fn phi_types(phi: &FormulaSet) -> Vec<TypeSet> {
    let atoms = decision_atoms(phi);
    let index: BTreeMap<&Formula, usize> = atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let subs = subformulas(phi);
    let mut out = Vec::new();
    let mut value = vec![false; atoms.len()];
    phi_types_dfs(&atoms, &index, &subs, 0, &mut value, &mut out);
    out.sort();
    out
}

fn truth(f: &Formula, index: &BTreeMap<&Formula, usize>, value: &[bool]) -> bool {
    match f {
        Formula::Neg(x) => !truth(x, index, value),
        other => value[index[other]],
    }
}

fn phi_types_dfs(
    atoms: &[Formula],
    index: &BTreeMap<&Formula, usize>,
    subs: &FormulaSet,
    i: usize,
    value: &mut Vec<bool>,
    out: &mut Vec<TypeSet>,
) {
    if i == atoms.len() {
        out.push(TypeSet::new(subs.iter().map(|psi| {
            if truth(psi, index, value) {
                psi.clone()
            } else {
                psi.negated()
            }
        })));
        return;
    }
    let choices: &[bool] = match &atoms[i] {
        Formula::And(a, b) => {
            if truth(a, index, value) && truth(b, index, value) {
                &[true]
            } else {
                &[false]
            }
        }
        Formula::Hence(body) if !truth(body, index, value) => &[false],
        _ => &[false, true],
    };
    for &c in choices {
        value[i] = c;
        phi_types_dfs(atoms, index, subs, i + 1, value, out);
    }
}

/// A clause of the typing-function definition that fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypingViolation {
    /// `t(world)` is not a weak type.
    NotWeakType { world: usize, violation: TypeViolation },
    /// `◇Γ ∈ t(world)` but no cluster below `world` covers `Γ`.
    DiamondUnwitnessed { world: usize, formula: Formula },
    /// `¬◇Γ ∈ t(world)` but the cluster of `below` refutes no `γ ∈ Γ`
    /// throughout.
    NegDiamondViolated { world: usize, below: usize, formula: Formula },
}

impl fmt::Display for TypingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypingViolation::NotWeakType { world, violation } => {
                write!(f, "type of world {world} {violation}")
            }
            TypingViolation::DiamondUnwitnessed { world, formula } => {
                write!(f, "{formula} holds at world {world} but no cluster below it covers the tangle")
            }
            TypingViolation::NegDiamondViolated { world, below, formula } => write!(
                f,
                "{formula} holds at world {world} but the cluster of world {below} refutes no member throughout"
            ),
        }
    }
}

/// A preorder with a type at every world.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedPreorder {
    pub space: Preorder,
    pub types: Vec<TypeSet>,
}

impl TypedPreorder {
    pub fn new(space: Preorder, types: Vec<TypeSet>) -> Self {
        assert_eq!(space.len(), types.len(), "one type per world");
        TypedPreorder { space, types }
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn t(&self, w: usize) -> &TypeSet {
        &self.types[w]
    }

    /// `γ ∈ t(u)` for some `u` in the cluster of `v`.
    fn cluster_has(&self, v: usize, g: &Formula) -> bool {
        self.space.cluster_of(v).ones().any(|u| self.types[u].contains(g))
    }

    /// `γ ∈ t(u)` for every `u` in the cluster of `v`.
    fn cluster_all(&self, v: usize, g: &Formula) -> bool {
        self.space.cluster_of(v).ones().all(|u| self.types[u].contains(g))
    }

    /// Checks that every type is a weak type and both typing clauses.
    pub fn validate_typing(&self) -> Result<(), TypingViolation> {
        for w in self.space.worlds() {
            self.types[w]
                .check_weak()
                .map_err(|violation| TypingViolation::NotWeakType { world: w, violation })?;
            for f in self.types[w].iter() {
                match f {
                    Formula::Tangle(gamma) => {
                        let ok = self
                            .space
                            .downset(w)
                            .ones()
                            .any(|v| gamma.iter().all(|g| self.cluster_has(v, g)));
                        if !ok {
                            return Err(TypingViolation::DiamondUnwitnessed { world: w, formula: f.clone() });
                        }
                    }
                    Formula::Neg(inner) => {
                        if let Formula::Tangle(gamma) = inner.as_ref() {
                            for v in self.space.downset(w).ones() {
                                if !gamma.iter().any(|g| self.cluster_all(v, &g.negated())) {
                                    return Err(TypingViolation::NegDiamondViolated {
                                        world: w,
                                        below: v,
                                        formula: f.clone(),
                                    });
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Checks that every type is a `Φ`-type.
    pub fn check_phi_typed(&self, phi: &FormulaSet) -> Result<(), (usize, TypeViolation)> {
        for (w, t) in self.types.iter().enumerate() {
            t.check_phi_type(phi).map_err(|v| (w, v))?;
        }
        Ok(())
    }
}

/// `{ψ ∈ sub±(Φ) : w ∈ ⟦ψ⟧}`.
pub fn type_of_world(m: &DynModel, phi: &FormulaSet, w: usize) -> TypeSet {
    TypeSet::new(sub_pm(phi).into_iter().filter(|psi| m.satisfies(w, psi)))
}

/// The type of every world, evaluating each formula of `sub±(Φ)` once.
pub fn types_of_model(m: &DynModel, phi: &FormulaSet) -> Vec<TypeSet> {
    let exts: Vec<(Formula, _)> = sub_pm(phi).into_iter().map(|f| {
        let e = m.eval(&f);
        (f, e)
    }).collect();
    (0..m.len())
        .map(|w| TypeSet::new(exts.iter().filter(|(_, e)| e.contains(w)).map(|(f, _)| f.clone())))
        .collect()
}

/// The typed preorder a model induces on `Φ`.
pub fn typed_preorder_of_model(m: &DynModel, phi: &FormulaSet) -> TypedPreorder {
    TypedPreorder::new(m.space.clone(), types_of_model(m, phi))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("world {0} is not below the root")]
    NotBelowRoot(usize),
    #[error("worlds {0} and {1} are in one cluster and have the same type")]
    Indistinguishable(usize, usize),
    #[error("root {0} out of range")]
    BadRoot(usize),
    #[error("types of worlds {0} and {1} differ but no formula separates them")]
    NotDistinctlyTyped(usize, usize),
}

/// A finite typed preorder with a root above every world, in which no two
/// worlds of a cluster share a type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub base: TypedPreorder,
    pub root: usize,
}

/// Canonical key: equal iff the states are isomorphic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateKey {
    pub types: Vec<TypeSet>,
    pub code: Code,
}

/// Height, width and norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Norm {
    pub hgt: usize,
    pub wdt: usize,
    pub nrm: usize,
}

impl State {
    pub fn new(base: TypedPreorder, root: usize) -> Result<Self, StateError> {
        let n = base.len();
        if root >= n {
            return Err(StateError::BadRoot(root));
        }
        if let Some(w) = base.space.worlds().find(|&w| !base.space.le(w, root)) {
            return Err(StateError::NotBelowRoot(w));
        }
        for w in 0..n {
            for v in (w + 1)..n {
                if base.space.same_cluster(w, v) && base.types[w] == base.types[v] {
                    return Err(StateError::Indistinguishable(w, v));
                }
            }
        }
        Ok(State { base, root })
    }

    pub fn single(t: TypeSet) -> Self {
        State::new(TypedPreorder::new(Preorder::discrete(1), vec![t]), 0).expect("one world")
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn space(&self) -> &Preorder {
        &self.base.space
    }

    pub fn t(&self, w: usize) -> &TypeSet {
        &self.base.types[w]
    }

    /// `t(𝔴)`, the type of the root.
    pub fn root_type(&self) -> &TypeSet {
        &self.base.types[self.root]
    }

    pub fn norm(&self) -> Norm {
        let hgt = self.space().height();
        let wdt = self.space().width();
        Norm { hgt, wdt, nrm: hgt.max(wdt) }
    }

    /// Checks that the state is a `Φ`-state: `Φ`-typed and satisfying
    /// both typing clauses.
    pub fn check_phi_state(&self, phi: &FormulaSet) -> Result<(), TypingViolation> {
        self.base
            .check_phi_typed(phi)
            .map_err(|(world, violation)| TypingViolation::NotWeakType { world, violation })?;
        self.base.validate_typing()
    }

    /// The distinct types in sorted order.
    pub fn type_range(&self) -> Vec<TypeSet> {
        self.base.types.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
    }

    fn colors(&self, range: &[TypeSet]) -> Vec<u64> {
        (0..self.len())
            .map(|w| {
                let t = range.binary_search(&self.base.types[w]).expect("type in range") as u64;
                2 * t + u64::from(w == self.root)
            })
            .collect()
    }

    pub fn key(&self) -> StateKey {
        let types = self.type_range();
        let code = canonical_form(self.space(), &self.colors(&types)).0;
        StateKey { types, code }
    }

    /// The isomorphic state with worlds in canonical order.
    pub fn canonical(&self) -> State {
        let types = self.type_range();
        let (_, order) = canonical_form(self.space(), &self.colors(&types));
        let names = (0..order.len()).map(|i| alloc::format!("w{i}")).collect();
        let space = self.space().permute(&order).with_names(names);
        let new_types = order.iter().map(|&w| self.base.types[w].clone()).collect();
        let root = order.iter().position(|&w| w == self.root).expect("root present");
        State {
            base: TypedPreorder::new(space, new_types),
            root,
        }
    }

    /// The substate rooted at `v`, with the map from its worlds to ours.
    pub fn substate_at(&self, v: usize) -> (State, Vec<usize>) {
        let (space, old) = self.space().restrict(self.space().downset(v));
        let types = old.iter().map(|&w| self.base.types[w].clone()).collect();
        let root = old.iter().position(|&w| w == v).expect("v ∈ ↓v");
        let s = State {
            base: TypedPreorder::new(space, types),
            root,
        };
        (s, old)
    }

    /// One substate per world, indexed by world.
    pub fn substates(&self) -> Vec<State> {
        self.space().worlds().map(|v| self.substate_at(v).0).collect()
    }

    /// A pair of differing types with no formula of one negated in the
    /// other, if any.
    pub fn check_distinctly_typed(&self) -> Result<(), StateError> {
        for w in 0..self.len() {
            for v in (w + 1)..self.len() {
                let (a, b) = (self.t(w), self.t(v));
                if a != b && separating_formula(a, b).is_none() {
                    return Err(StateError::NotDistinctlyTyped(w, v));
                }
            }
        }
        Ok(())
    }

    /// `𝔴^p`: each world typed by fresh indicator variables, `p_T` for its
    /// own type and `¬p_S` for every other type in range. Also returns the
    /// substitution `p_T ↦ ⋀T`.
    pub fn state_p(&self) -> (State, BTreeMap<String, Formula>) {
        let range = self.type_range();
        let mut avoid = BTreeSet::new();
        for t in &range {
            avoid.extend(t.formulas().vars());
        }
        let mut fresh = FreshVars::new("p", avoid);
        let names: Vec<String> = range.iter().map(|_| fresh.fresh()).collect();
        let types = self
            .base
            .types
            .iter()
            .map(|t| {
                let me = range.binary_search(t).expect("in range");
                TypeSet::new(names.iter().enumerate().map(|(i, n)| {
                    let v = Formula::var(n.clone());
                    if i == me {
                        v
                    } else {
                        v.neg()
                    }
                }))
            })
            .collect();
        let sigma = names.into_iter().zip(range.iter().map(TypeSet::conj)).collect();
        let s = State {
            base: TypedPreorder::new(self.space().clone(), types),
            root: self.root,
        };
        (s, sigma)
    }

    /// `𝔴^q`: every type mapped through the `q`-transform with a shared
    /// allocator. Returns the inverse substitution `q_δ ↦ [f]δ` as well.
    pub fn state_q(&self) -> Result<(State, BTreeMap<String, Formula>), StateError> {
        let mut avoid = BTreeSet::new();
        for t in &self.base.types {
            avoid.extend(t.formulas().vars());
        }
        let mut fresh = FreshVars::new("q", avoid);
        let types = self
            .base
            .types
            .iter()
            .map(|t| TypeSet::new(t.iter().map(|f| q_transform(f, &mut fresh))))
            .collect();
        let s = State::new(TypedPreorder::new(self.space().clone(), types), self.root)?;
        Ok((s, fresh.inverse()))
    }

    /// `𝔴⁺`: every type replaced by its `⁺`-extension.
    pub fn state_plus(&self, phi: &FormulaSet, variant: PlusVariant) -> State {
        let types = self.base.types.iter().map(|t| t.plus(phi, variant)).collect();
        State {
            base: TypedPreorder::new(self.space().clone(), types),
            root: self.root,
        }
    }

    /// `𝔴[p⃗/ψ⃗]`: every type mapped elementwise through `sigma`.
    pub fn state_subst(&self, sigma: &BTreeMap<String, Formula>) -> Result<State, StateError> {
        let types = self.base.types.iter().map(|t| t.substitute(sigma)).collect();
        State::new(TypedPreorder::new(self.space().clone(), types), self.root)
    }

    /// The state a model point induces: `↓x` typed by `Φ`, with worlds of a
    /// cluster that share a type merged.
    pub fn of_model_point(m: &DynModel, phi: &FormulaSet, x: usize) -> State {
        let types = types_of_model(m, phi);
        State::of_typed_point(&m.space, &types, x)
    }

    /// Like [`State::of_model_point`] with precomputed types.
    pub fn of_typed_point(space: &Preorder, types: &[TypeSet], x: usize) -> State {
        let below: Vec<usize> = space.downset(x).ones().collect();
        // keep the least world of each (cluster, type) class
        let keep: Vec<usize> = below
            .iter()
            .copied()
            .filter(|&w| {
                !below
                    .iter()
                    .any(|&u| u < w && space.same_cluster(u, w) && types[u] == types[w])
            })
            .collect();
        let rep = |w: usize| -> usize {
            *keep
                .iter()
                .find(|&&u| space.same_cluster(u, w) && types[u] == types[w])
                .expect("class has a representative")
        };
        let keep_set = world_set(space.len(), keep.iter().copied());
        let (sub, old) = space.restrict(&keep_set);
        let new_types = old.iter().map(|&w| types[w].clone()).collect();
        let root_old = rep(x);
        let root = old.iter().position(|&w| w == root_old).expect("root kept");
        State::new(TypedPreorder::new(sub, new_types), root).expect("merged classes are distinct")
    }
}

/// Some `ψ ∈ a` with `¬ψ ∈ b`, or `ψ ∈ b` with `¬ψ ∈ a`.
pub fn separating_formula(a: &TypeSet, b: &TypeSet) -> Option<Formula> {
    a.iter()
        .find(|f| b.contains(&f.negated()))
        .or_else(|| b.iter().find(|f| a.contains(&f.negated())))
        .cloned()
}

/// Total size of the union of `sub_◇` over all types of a state.
pub fn diamond_count(s: &State) -> usize {
    let mut all = FormulaSet::new();
    for t in &s.base.types {
        all = all.union(&t.diamond_subformulas());
    }
    all.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::ExhaustiveModels;
    use crate::syntax::parse;
    use alloc::string::ToString;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn ty(items: &[&str]) -> TypeSet {
        items.iter().map(|s| f(s)).collect()
    }

    fn set(items: &[&str]) -> FormulaSet {
        items.iter().map(|s| f(s)).collect()
    }

    fn ba() -> Preorder {
        Preorder::from_pairs(2, &[(1, 0)]).unwrap()
    }

    #[test]
    fn weak_type_rules() {
        assert!(ty(&["p", "~q"]).check_weak().is_ok());
        assert!(matches!(ty(&["p", "~p"]).check_weak(), Err(TypeViolation::Contradiction(_))));
        assert!(matches!(ty(&["p & q", "p"]).check_weak(), Err(TypeViolation::MissingConjunct { .. })));
        assert!(matches!(ty(&["~(p & q)"]).check_weak(), Err(TypeViolation::NoFalseConjunct(_))));
        assert!(ty(&["~(p & q)", "~q"]).check_weak().is_ok());
        assert!(matches!(ty(&["G p"]).check_weak(), Err(TypeViolation::HenceWithoutBody(_))));
        assert!(ty(&["~~p"]).contains(&f("p")));
    }

    #[test]
    fn phi_types_are_exactly_the_phi_types() {
        assert_eq!(phi_types(&set(&["p"])).len(), 2);
        assert_eq!(phi_types(&FormulaSet::new()), vec![TypeSet::empty()]);
        // G p: {Gp,p}, {~Gp,p}, {~Gp,~p}
        assert_eq!(phi_types(&set(&["G p"])).len(), 3);
        // brute force over subsets of sub±
        for phi in [set(&["p & ~q"]), set(&["G (p & X p)", "<>{p, ~p}"]), set(&["~~p", "F ~p"])] {
            let pm: Vec<Formula> = sub_pm(&phi).into_iter().collect();
            let mut brute = Vec::new();
            for code in 0u64..(1 << pm.len()) {
                let t = TypeSet::new((0..pm.len()).filter(|i| code & (1 << i) != 0).map(|i| pm[i].clone()));
                if t.check_phi_type(&phi).is_ok() {
                    brute.push(t);
                }
            }
            brute.sort();
            brute.dedup();
            assert_eq!(phi_types(&phi), brute, "{phi}");
        }
    }

    #[test]
    fn validate_typing_examples() {
        let one = |t: TypeSet| TypedPreorder::new(Preorder::discrete(1), vec![t]);
        assert!(one(ty(&["p", "<>p"])).validate_typing().is_ok());
        assert!(one(ty(&["~p", "<>p"])).validate_typing().is_err());
        let tp = TypedPreorder::new(ba(), vec![ty(&["<>{p, q}", "~p", "~q"]), ty(&["p", "~q"])]);
        assert_eq!(
            tp.validate_typing(),
            Err(TypingViolation::DiamondUnwitnessed { world: 0, formula: f("<>{p, q}") })
        );
        // ¬◇∅ can never be witnessed
        assert!(one(ty(&["~<>{}"])).validate_typing().is_err());
        assert!(one(ty(&["<>{}"])).validate_typing().is_ok());
    }

    #[test]
    fn type_of_world_examples() {
        let mut val = BTreeMap::new();
        val.insert("p".to_string(), world_set(2, [1]));
        let m = DynModel::new(ba(), vec![0, 1], val).unwrap();
        let phi = set(&["<>p"]);
        assert_eq!(type_of_world(&m, &phi, 0), ty(&["<>p", "~p"]));
        assert_eq!(type_of_world(&m, &phi, 1), ty(&["<>p", "p"]));
        assert_eq!(type_of_world(&m, &FormulaSet::new(), 0), TypeSet::empty());
    }

    #[test]
    fn norm_examples() {
        let s = State::single(ty(&["p"]));
        assert_eq!(s.norm(), Norm { hgt: 0, wdt: 0, nrm: 0 });
        let c = State::new(TypedPreorder::new(ba(), vec![ty(&["p"]), ty(&["q"])]), 0).unwrap();
        assert_eq!(c.norm(), Norm { hgt: 1, wdt: 1, nrm: 1 });
        let v = Preorder::from_pairs(3, &[(1, 0), (2, 0)]).unwrap();
        let s = State::new(TypedPreorder::new(v, vec![ty(&["p"]), ty(&["q"]), ty(&["r"])]), 0).unwrap();
        assert_eq!(s.norm(), Norm { hgt: 1, wdt: 2, nrm: 2 });
    }

    #[test]
    fn state_constructor_checks() {
        let c2 = Preorder::cluster(2);
        assert_eq!(
            State::new(TypedPreorder::new(c2.clone(), vec![ty(&["p"]), ty(&["p"])]), 0),
            Err(StateError::Indistinguishable(0, 1))
        );
        assert_eq!(
            State::new(TypedPreorder::new(ba(), vec![ty(&["p"]), ty(&["q"])]), 1),
            Err(StateError::NotBelowRoot(0))
        );
        // same type in different clusters is fine
        assert!(State::new(TypedPreorder::new(ba(), vec![ty(&["p"]), ty(&["p"])]), 0).is_ok());
    }

    #[test]
    fn substates_examples() {
        let s = State::single(ty(&["p"]));
        assert_eq!(s.substates(), vec![s.clone()]);
        let c = State::new(TypedPreorder::new(ba(), vec![ty(&["p"]), ty(&["q"])]), 0).unwrap();
        let subs = c.substates();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0], c);
        assert_eq!(subs[1].key(), State::single(ty(&["q"])).key());
        let cl = State::new(TypedPreorder::new(Preorder::cluster(2), vec![ty(&["p"]), ty(&["q"])]), 0).unwrap();
        let subs = cl.substates();
        assert_eq!(subs[0].len(), 2);
        assert_eq!(subs[1].root, 1);
    }

    #[test]
    fn state_p_examples() {
        let s = State::single(ty(&["p"]));
        let (sp, sigma) = s.state_p();
        assert_eq!(sp.t(0).len(), 1);
        assert_eq!(sigma.len(), 1);
        let c = State::new(TypedPreorder::new(ba(), vec![ty(&["p", "~q"]), ty(&["~p", "q"])]), 0).unwrap();
        let (cp, sigma) = c.state_p();
        assert_eq!(cp.len(), c.len());
        // names avoid p and q; types are {p_T, ¬p_S} and {p_S, ¬p_T}
        let names: Vec<&String> = sigma.keys().collect();
        let (a, b) = (Formula::var(names[0].clone()), Formula::var(names[1].clone()));
        let ta = c.type_range().iter().position(|t| t == c.t(0)).unwrap();
        let (own, other) = if ta == 0 { (a, b) } else { (b, a) };
        assert_eq!(cp.t(0), &TypeSet::new([own.clone(), other.clone().neg()]));
        assert_eq!(cp.t(1), &TypeSet::new([other, own.neg()]));
        assert!(!sigma.contains_key("p") && !sigma.contains_key("q"));
    }

    #[test]
    fn state_plus_examples() {
        let phi = set(&["p"]);
        let s = State::single(ty(&["p"]));
        assert_eq!(s.state_plus(&phi, PlusVariant::Literal), s);
        let phi = set(&["G p"]);
        let s = State::single(ty(&["G p", "p"]));
        assert!(s.state_plus(&phi, PlusVariant::Literal).root_type().contains(&f("X G p")));
        let s = State::single(ty(&["F p", "~p"]));
        assert!(s.state_plus(&set(&["F p"]), PlusVariant::Literal).root_type().contains(&f("X F p")));
        // the literal reading adds ◯[f]p even where [f]p fails
        let s = State::single(ty(&["~G p", "p"]));
        assert!(s.state_plus(&phi, PlusVariant::Literal).root_type().contains(&f("X G p")));
        assert!(!s.state_plus(&phi, PlusVariant::OwnType).root_type().contains(&f("X G p")));
    }

    #[test]
    fn state_subst_examples() {
        let c = State::new(TypedPreorder::new(Preorder::cluster(2), vec![ty(&["p"]), ty(&["q"])]), 0).unwrap();
        assert_eq!(c.state_subst(&BTreeMap::new()).unwrap(), c);
        let mut sigma = BTreeMap::new();
        sigma.insert("q".to_string(), f("p"));
        assert_eq!(c.state_subst(&sigma), Err(StateError::Indistinguishable(0, 1)));
        let s = State::single(ty(&["G p", "p", "X G p"]));
        let (sq, inv) = s.state_q().unwrap();
        assert_eq!(sq.state_subst(&inv).unwrap(), s);
    }

    #[test]
    fn canonical_keys_identify_isomorphic_states() {
        let a = State::new(TypedPreorder::new(ba(), vec![ty(&["p"]), ty(&["~p"])]), 0).unwrap();
        let swapped = Preorder::from_pairs(2, &[(0, 1)]).unwrap();
        let b = State::new(TypedPreorder::new(swapped, vec![ty(&["~p"]), ty(&["p"])]), 1).unwrap();
        assert_eq!(a.key(), b.key());
        assert_eq!(a.canonical(), b.canonical());
        let c = State::new(TypedPreorder::new(ba(), vec![ty(&["~p"]), ty(&["p"])]), 0).unwrap();
        assert_ne!(a.key(), c.key());
    }

    #[test]
    fn induced_typings_pass_validation() {
        let vars = ["p".to_string(), "q".to_string()];
        let pools = [
            set(&["<>{p, q}", "[]p"]),
            set(&["<>{p, ~p}", "X q"]),
            set(&["G (p | <>q)", "F ~p"]),
        ];
        for m in ExhaustiveModels::new(3, &vars).unwrap() {
            for phi in &pools {
                let tp = typed_preorder_of_model(&m, phi);
                tp.check_phi_typed(phi).unwrap();
                tp.validate_typing().unwrap();
                for x in 0..m.len() {
                    let s = State::of_model_point(&m, phi, x);
                    s.check_phi_state(phi).unwrap();
                    s.check_distinctly_typed().unwrap();
                    assert_eq!(s.root_type(), &tp.types[x]);
                }
            }
        }
    }
}
