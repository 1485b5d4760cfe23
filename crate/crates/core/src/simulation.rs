//! Greatest typed simulations between finite structures.
//!
//! A simulation from `A` to `B` is a continuous relation whose pairs
//! match: equal types between typed preorders, or type satisfaction when
//! the target is a model. The greatest one is found by deleting pairs
//! that break the back-down condition until nothing changes; each round
//! costs `O(|A|²·|B|²)`.

use crate::preorder::{Preorder, Relation, WorldSet};
use crate::semantics::DynModel;
use crate::typing::{State, TypedPreorder};

/// Largest continuous relation contained in `r`.
pub fn refine(a: &Preorder, b: &Preorder, mut r: Relation) -> Relation {
    loop {
        let mut changed = false;
        for w in a.worlds() {
            let targets: alloc::vec::Vec<usize> = r.row(w).ones().collect();
            for v in targets {
                let broken = a
                    .downset(w)
                    .ones()
                    .any(|w_lower| r.row(w_lower).is_disjoint(b.downset(v)));
                if broken {
                    r.remove(w, v);
                    changed = true;
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

/// Whether `r` is a simulation between typed preorders.
pub fn is_simulation(a: &TypedPreorder, b: &TypedPreorder, r: &Relation) -> bool {
    r.pairs().all(|(w, v)| a.types[w] == b.types[v]) && a.space.is_continuous_relation(&b.space, r).is_ok()
}

/// The greatest simulation from `a` to `b`.
pub fn greatest_simulation(a: &TypedPreorder, b: &TypedPreorder) -> Relation {
    let start = Relation::from_pairs(
        a.len(),
        b.len(),
        a.space
            .worlds()
            .flat_map(|w| b.space.worlds().filter(move |&v| a.types[w] == b.types[v]).map(move |v| (w, v))),
    );
    refine(&a.space, &b.space, start)
}

/// `𝔴 ⊴ 𝔳`: the greatest simulation relates the roots. Returns it as the
/// witness.
pub fn simulates(w: &State, v: &State) -> Option<Relation> {
    let r = greatest_simulation(&w.base, &v.base);
    r.contains(w.root, v.root).then_some(r)
}

/// The greatest simulation from a state into a model, where `w R y`
/// requires `y ⊨ ⋀t(w)`.
pub fn greatest_simulation_into_model(s: &State, m: &DynModel) -> Relation {
    let sat: alloc::vec::Vec<WorldSet> = s.base.types.iter().map(|t| m.eval(&t.conj())).collect();
    let start = Relation::from_pairs(
        s.len(),
        m.len(),
        (0..s.len()).flat_map(|w| sat[w].ones().map(move |y| (w, y))),
    );
    refine(s.space(), &m.space, start)
}

/// `{x : 𝔴 ⊴ ⟨M, x⟩}`.
pub fn simulated_points(s: &State, m: &DynModel) -> WorldSet {
    greatest_simulation_into_model(s, m).row(s.root).clone()
}

pub fn simulates_in_model(s: &State, m: &DynModel, x: usize) -> bool {
    simulated_points(s, m).contains(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::preorders_up_to_iso;
    use crate::syntax::{parse, FormulaSet};
    use crate::typing::{phi_types, TypeSet};
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;
    use alloc::vec;
    use alloc::vec::Vec;

    fn ty(items: &[&str]) -> TypeSet {
        items.iter().map(|s| parse(s).unwrap()).collect()
    }

    fn ba() -> Preorder {
        Preorder::from_pairs(2, &[(1, 0)]).unwrap()
    }

    #[test]
    fn greatest_simulation_examples() {
        let one = TypedPreorder::new(Preorder::discrete(1), vec![ty(&["p"])]);
        assert_eq!(greatest_simulation(&one, &one), Relation::from_pairs(1, 1, [(0, 0)]));

        let chain = TypedPreorder::new(ba(), vec![ty(&["q"]), ty(&["p"])]);
        let single_q = TypedPreorder::new(Preorder::discrete(1), vec![ty(&["q"])]);
        assert!(greatest_simulation(&chain, &single_q).is_empty());
    }

    #[test]
    fn simulates_is_reflexive_and_detects_unmatched_daughters() {
        let chain = State::new(TypedPreorder::new(ba(), vec![ty(&["q"]), ty(&["p"])]), 0).unwrap();
        assert!(simulates(&chain, &chain).is_some());
        let top = State::single(ty(&["q"]));
        assert!(simulates(&chain, &top).is_none());
        assert!(simulates(&top, &chain).is_some());
    }

    #[test]
    fn into_model_examples() {
        let s = State::single(ty(&["p"]));
        let mut val = BTreeMap::new();
        val.insert("p".to_string(), crate::preorder::world_set(1, [0]));
        let m = DynModel::new(Preorder::discrete(1), vec![0], val).unwrap();
        assert!(simulates_in_model(&s, &m, 0));
        let m0 = DynModel::new(Preorder::discrete(1), vec![0], BTreeMap::new()).unwrap();
        assert!(!simulates_in_model(&s, &m0, 0));
    }

    fn typed_structures(n_max: usize, types: &[TypeSet]) -> Vec<TypedPreorder> {
        let mut out = Vec::new();
        for p in preorders_up_to_iso(n_max) {
            let n = p.len();
            let k = types.len();
            for code in 0..k.pow(n as u32) {
                let t = (0..n).map(|i| types[code / k.pow(i as u32) % k].clone()).collect();
                out.push(TypedPreorder::new(p.clone(), t));
            }
        }
        out
    }

    #[test]
    fn greatest_simulation_matches_brute_force() {
        let types = phi_types(&FormulaSet::singleton(parse("p").unwrap()));
        let structs = typed_structures(3, &types);
        for a in structs.iter().step_by(3) {
            for b in structs.iter().step_by(2) {
                let g = greatest_simulation(a, b);
                assert!(is_simulation(a, b, &g));
                let pairs: Vec<(usize, usize)> = a
                    .space
                    .worlds()
                    .flat_map(|w| b.space.worlds().map(move |v| (w, v)))
                    .filter(|&(w, v)| a.types[w] == b.types[v])
                    .collect();
                let mut union = Relation::empty(a.len(), b.len());
                for code in 0u32..(1 << pairs.len()) {
                    let r = Relation::from_pairs(
                        a.len(),
                        b.len(),
                        (0..pairs.len()).filter(|i| code & (1 << i) != 0).map(|i| pairs[i]),
                    );
                    if is_simulation(a, b, &r) {
                        assert!(r.is_subset(&g));
                        for (x, y) in r.pairs() {
                            union.insert(x, y);
                        }
                    }
                }
                assert_eq!(union, g);
            }
        }
    }
}
