//! Formulas of the tangled dynamic topological language.
//!
//! Only six constructors are primitive. Disjunction, implication, `□`,
//! `⟨f⟩` and the monadic `◇` are expansions built by the helper
//! constructors on [`Formula`], so two formulas are equal exactly when
//! their expansions are.

mod parse;
mod print;

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use parse::{parse, ParseError};

/// A formula. `Tangle` members are kept sorted and deduplicated, so
/// structural equality on `Tangle` is set equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    Var(String),
    Neg(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// `◯φ`, written `X φ`.
    Next(Box<Formula>),
    /// `[f]φ`, written `G φ`.
    Hence(Box<Formula>),
    /// `◇Γ`. Use [`Formula::tangle`] to build one.
    Tangle(Vec<Formula>),
}

impl Formula {
    pub fn var(name: impl Into<String>) -> Self {
        Formula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        Formula::Neg(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Self {
        self.neg().and(other.neg()).neg()
    }

    pub fn implies(self, other: Formula) -> Self {
        self.and(other.neg()).neg()
    }

    pub fn iff(self, other: Formula) -> Self {
        self.clone()
            .implies(other.clone())
            .and(other.implies(self))
    }

    pub fn next(self) -> Self {
        Formula::Next(Box::new(self))
    }

    pub fn hence(self) -> Self {
        Formula::Hence(Box::new(self))
    }

    /// `⟨f⟩φ := ¬[f]¬φ`.
    pub fn eventually(self) -> Self {
        self.neg().hence().neg()
    }

    pub fn tangle<I: IntoIterator<Item = Formula>>(members: I) -> Self {
        let mut members: Vec<Formula> = members.into_iter().collect();
        members.sort();
        members.dedup();
        Formula::Tangle(members)
    }

    /// Monadic `◇φ := ◇{φ}`.
    pub fn diamond(self) -> Self {
        Formula::Tangle(alloc::vec![self])
    }

    /// `□φ := ¬◇{¬φ}`.
    pub fn boxed(self) -> Self {
        self.neg().diamond().neg()
    }

    /// `◇∅`, which holds everywhere.
    pub fn top() -> Self {
        Formula::Tangle(Vec::new())
    }

    pub fn bottom() -> Self {
        Formula::top().neg()
    }

    /// Conjunction of a sequence, nested to the left. The empty
    /// conjunction is [`Formula::top`].
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or_else(Formula::top)
    }

    /// Disjunction of a sequence. The empty disjunction is
    /// [`Formula::bottom`].
    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or_else(Formula::bottom)
    }

    /// Strips leading double negations: `¬¬ψ` and `ψ` are identified in
    /// types.
    pub fn canonical(&self) -> &Formula {
        let mut cur = self;
        while let Formula::Neg(inner) = cur {
            match inner.as_ref() {
                Formula::Neg(x) => cur = x,
                _ => break,
            }
        }
        cur
    }

    /// Negation modulo double negation: `negated(¬ψ) = ψ`.
    pub fn negated(&self) -> Formula {
        match self.canonical() {
            Formula::Neg(x) => (**x).clone(),
            other => other.clone().neg(),
        }
    }

    /// If this formula is an eventuality `⟨f⟩ψ = ¬[f]χ`, returns `ψ` (the
    /// canonical form of `¬χ`).
    pub fn eventuality_body(&self) -> Option<Formula> {
        match self.canonical() {
            Formula::Neg(inner) => match inner.as_ref() {
                Formula::Hence(chi) => Some(chi.negated()),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_temporal_free(&self) -> bool {
        match self {
            Formula::Var(_) => true,
            Formula::Neg(a) => a.is_temporal_free(),
            Formula::And(a, b) => a.is_temporal_free() && b.is_temporal_free(),
            Formula::Next(_) | Formula::Hence(_) => false,
            Formula::Tangle(m) => m.iter().all(Formula::is_temporal_free),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Var(_) => 0,
            Formula::Neg(a) | Formula::Next(a) | Formula::Hence(a) => 1 + a.depth(),
            Formula::And(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Tangle(m) => 1 + m.iter().map(Formula::depth).max().unwrap_or(0),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Var(_) => 1,
            Formula::Neg(a) | Formula::Next(a) | Formula::Hence(a) => 1 + a.size(),
            Formula::And(a, b) => 1 + a.size() + b.size(),
            Formula::Tangle(m) => 1 + m.iter().map(Formula::size).sum::<usize>(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Var(v) => {
                out.insert(v.clone());
            }
            Formula::Neg(a) | Formula::Next(a) | Formula::Hence(a) => a.collect_vars(out),
            Formula::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Tangle(m) => m.iter().for_each(|g| g.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_subformulas(&self, out: &mut BTreeSet<Formula>) {
        if !out.insert(self.clone()) {
            return;
        }
        match self {
            Formula::Var(_) => {}
            Formula::Neg(a) | Formula::Next(a) | Formula::Hence(a) => a.collect_subformulas(out),
            Formula::And(a, b) => {
                a.collect_subformulas(out);
                b.collect_subformulas(out);
            }
            Formula::Tangle(m) => m.iter().for_each(|g| g.collect_subformulas(out)),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_formula(f, self)
    }
}

/// A finite set of formulas, iterated in canonical order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct FormulaSet(BTreeSet<Formula>);

impl FormulaSet {
    pub fn new() -> Self {
        FormulaSet(BTreeSet::new())
    }

    pub fn singleton(f: Formula) -> Self {
        let mut s = FormulaSet::new();
        s.insert(f);
        s
    }

    pub fn insert(&mut self, f: Formula) -> bool {
        self.0.insert(f)
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.0.contains(f)
    }

    /// Membership identifying `ψ` with `¬¬ψ`; the set is expected to hold
    /// canonical forms only.
    pub fn contains_canon(&self, f: &Formula) -> bool {
        self.0.contains(f.canonical())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Formula> + '_ {
        self.0.iter()
    }

    pub fn union(&self, other: &FormulaSet) -> FormulaSet {
        FormulaSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &FormulaSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in &self.0 {
            f.collect_vars(&mut out);
        }
        out
    }

    pub fn into_inner(self) -> BTreeSet<Formula> {
        self.0
    }
}

impl FromIterator<Formula> for FormulaSet {
    fn from_iter<I: IntoIterator<Item = Formula>>(iter: I) -> Self {
        FormulaSet(iter.into_iter().collect())
    }
}

impl IntoIterator for FormulaSet {
    type Item = Formula;
    type IntoIter = alloc::collections::btree_set::IntoIter<Formula>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a FormulaSet {
    type Item = &'a Formula;
    type IntoIter = alloc::collections::btree_set::Iter<'a, Formula>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for FormulaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("}")
    }
}

/// `sub(Φ)`: every formula of `Φ` and all of their subterms, structurally.
pub fn subformulas(phi: &FormulaSet) -> FormulaSet {
    let mut out = BTreeSet::new();
    for f in phi {
        f.collect_subformulas(&mut out);
    }
    FormulaSet(out)
}

/// `len(Φ) = #sub(Φ)`.
pub fn formula_length(phi: &FormulaSet) -> usize {
    subformulas(phi).len()
}

/// `sub±(Φ)` in canonical form: `sub(Φ)` together with the negation of each
/// member, with `¬¬ψ` identified with `ψ`.
pub fn sub_pm(phi: &FormulaSet) -> FormulaSet {
    let mut out = FormulaSet::new();
    for f in &subformulas(phi) {
        out.insert(f.canonical().clone());
        out.insert(f.negated());
    }
    out
}

/// The formulas a `Φ`-type has to decide: `sub(Φ)` with each pair
/// `ψ`/`¬ψ` represented once by its negation-free core, ordered so that
/// every formula comes after its proper subformulas.
pub fn decision_atoms(phi: &FormulaSet) -> Vec<Formula> {
    fn core(f: &Formula) -> &Formula {
        let mut cur = f;
        while let Formula::Neg(x) = cur {
            cur = x;
        }
        cur
    }
    let mut cores: Vec<Formula> = subformulas(phi)
        .iter()
        .map(|f| core(f).clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    cores.sort_by_key(|f| (f.size(), f.clone()));
    cores
}

/// Simultaneous substitution of variables by formulas.
pub fn substitute(phi: &Formula, sigma: &BTreeMap<String, Formula>) -> Formula {
    match phi {
        Formula::Var(v) => sigma.get(v).cloned().unwrap_or_else(|| phi.clone()),
        Formula::Neg(a) => substitute(a, sigma).neg(),
        Formula::And(a, b) => substitute(a, sigma).and(substitute(b, sigma)),
        Formula::Next(a) => substitute(a, sigma).next(),
        Formula::Hence(a) => substitute(a, sigma).hence(),
        Formula::Tangle(m) => Formula::tangle(m.iter().map(|g| substitute(g, sigma))),
    }
}

/// Allocates variables that do not clash with a given set of names.
///
/// When used for the `q`-transform it also remembers which `[f]δ` each
/// fresh variable stands for, so identical bodies share a variable.
#[derive(Clone, Debug)]
pub struct FreshVars {
    prefix: String,
    used: BTreeSet<String>,
    next: usize,
    by_body: BTreeMap<Formula, String>,
}

impl FreshVars {
    pub fn new(prefix: impl Into<String>, avoid: BTreeSet<String>) -> Self {
        FreshVars {
            prefix: prefix.into(),
            used: avoid,
            next: 0,
            by_body: BTreeMap::new(),
        }
    }

    pub fn fresh(&mut self) -> String {
        loop {
            let name = format!("{}{}", self.prefix, self.next);
            self.next += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    fn for_body(&mut self, body: &Formula) -> String {
        if let Some(name) = self.by_body.get(body) {
            return name.clone();
        }
        let name = self.fresh();
        self.by_body.insert(body.clone(), name.clone());
        name
    }

    /// The substitution `q_δ ↦ [f]δ` undoing every `q`-transform done with
    /// this allocator.
    pub fn inverse(&self) -> BTreeMap<String, Formula> {
        self.by_body
            .iter()
            .map(|(body, name)| (name.clone(), body.clone().hence()))
            .collect()
    }
}

/// Replaces each outermost `[f]δ` by a variable `q_δ`; equal `δ` share a
/// variable through `fresh`.
pub fn q_transform(phi: &Formula, fresh: &mut FreshVars) -> Formula {
    match phi {
        Formula::Var(_) => phi.clone(),
        Formula::Hence(body) => Formula::Var(fresh.for_body(body)),
        Formula::Neg(a) => q_transform(a, fresh).neg(),
        Formula::And(a, b) => q_transform(a, fresh).and(q_transform(b, fresh)),
        Formula::Next(a) => q_transform(a, fresh).next(),
        Formula::Tangle(m) => Formula::tangle(m.iter().map(|g| q_transform(g, fresh))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn p(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn set(items: &[&str]) -> FormulaSet {
        items.iter().map(|s| p(s)).collect()
    }

    #[test]
    fn subformulas_examples() {
        assert_eq!(subformulas(&set(&["X p"])), set(&["X p", "p"]));
        assert_eq!(
            subformulas(&set(&["<>{p, ~q}"])),
            set(&["<>{p, ~q}", "p", "~q", "q"])
        );
        assert_eq!(subformulas(&set(&["G p"])), set(&["G p", "p"]));
    }

    #[test]
    fn sub_pm_examples() {
        assert_eq!(sub_pm(&set(&["p"])), set(&["p", "~p"]));
        assert!(sub_pm(&set(&["p"])).contains_canon(&p("~~p")));
        assert_eq!(sub_pm(&set(&["X p"])), set(&["X p", "~X p", "p", "~p"]));
    }

    #[test]
    fn substitution_examples() {
        let four = p("<><>p -> <>p");
        let mut sigma = BTreeMap::new();
        sigma.insert("p".into(), p("q & r"));
        assert_eq!(substitute(&four, &sigma), p("<><>(q & r) -> <>(q & r)"));
        assert_eq!(substitute(&p("p"), &BTreeMap::new()), p("p"));
        let mut collapse = BTreeMap::new();
        collapse.insert("p".into(), p("q"));
        assert_eq!(substitute(&p("<>{p, q}"), &collapse), p("<>{q}"));
    }

    #[test]
    fn q_transform_examples() {
        let mut fresh = FreshVars::new("q", BTreeSet::new());
        assert_eq!(q_transform(&p("G p"), &mut fresh), Formula::var("q0"));

        let mut fresh = FreshVars::new("q", p("<>{G p, X G p}").vars());
        let out = q_transform(&p("<>{G p, X G p}"), &mut fresh);
        assert_eq!(out, Formula::tangle(vec![Formula::var("q0"), Formula::var("q0").next()]));

        let mut fresh = FreshVars::new("q", BTreeSet::new());
        let out = q_transform(&p("G G p"), &mut fresh);
        assert_eq!(out, Formula::var("q0"));
        assert_eq!(fresh.inverse()[&String::from("q0")], p("G G p"));
    }

    #[test]
    fn q_transform_avoids_existing_names() {
        let phi = p("q0 & G p");
        let mut fresh = FreshVars::new("q", phi.vars());
        let out = q_transform(&phi, &mut fresh);
        assert_eq!(out, p("q0 & q1"));
        assert_eq!(substitute(&out, &fresh.inverse()), phi);
    }

    #[test]
    fn canonical_and_negated() {
        assert_eq!(p("~~~p").canonical(), &p("~p"));
        assert_eq!(p("~~p").negated(), p("~p"));
        assert_eq!(p("~p").negated(), p("p"));
        assert_eq!(p("F p").eventuality_body(), Some(p("p")));
        assert_eq!(p("~G p").eventuality_body(), Some(p("~p")));
        assert_eq!(p("G p").eventuality_body(), None);
    }

    #[test]
    fn length_counts_distinct_subterms() {
        // <>{p, p & p}: the tangle, p, p & p
        assert_eq!(formula_length(&set(&["<>{p, p & p}"])), 3);
        assert_eq!(formula_length(&set(&["p & p"])), 2);
    }

    #[test]
    fn decision_atoms_order_children_first() {
        let atoms = decision_atoms(&set(&["~(p & ~q)"]));
        assert_eq!(atoms, vec![p("p"), p("q"), p("p & ~q")]);
    }
}
