//! Formulas defining "simulated by a state".
//!
//! For a world `w` with cluster `c₁..c_k` and daughter clusters
//! represented by `d₁..d_m`,
//!
//! ```text
//! S(w) = ⋀t(w) ∧ ⋀ⱼ ◇S(dⱼ) ∧ ◇{ ⋀t(cᵢ) ∧ ⋀ⱼ ◇S(dⱼ) : i = 1..k }
//! ```
//!
//! The tangle forces a cluster below the point that realises every
//! member of the root cluster, each with access to all daughter patterns.
//! [`sim_formula`] applies this to `𝔴^p` and substitutes each indicator
//! `p_T` by `⋀T`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::preorder::WorldSet;
use crate::semantics::DynModel;
use crate::syntax::Formula;
use crate::syntax::substitute;
use crate::typing::{State, StateError, StateKey};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("state is not distinctly typed: {0}")]
    NotDistinctlyTyped(StateError),
}

/// The construction applied to the state's own types, without the
/// indicator detour.
pub fn raw_sim(s: &State) -> Formula {
    let mut memo: Vec<Option<Formula>> = vec![None; s.len()];
    raw_at(s, s.root, &mut memo)
}

fn raw_at(s: &State, w: usize, memo: &mut Vec<Option<Formula>>) -> Formula {
    if let Some(f) = &memo[w] {
        return f.clone();
    }
    let space = s.space();
    let mut below: Vec<Formula> = space
        .daughters(w)
        .into_iter()
        .map(|d| raw_at(s, d, memo).diamond())
        .collect();
    below.sort();
    below.dedup();
    let cluster = space.cluster_of(w);
    let members = cluster.ones().map(|c| {
        Formula::conj(core::iter::once(s.t(c).conj()).chain(below.iter().cloned()))
    });
    let tangle = Formula::tangle(members.collect::<Vec<_>>());
    let out = Formula::conj(
        core::iter::once(s.t(w).conj())
            .chain(below.iter().cloned())
            .chain(core::iter::once(tangle)),
    );
    memo[w] = Some(out.clone());
    out
}

/// True when the types are indicator types over one set of variables:
/// each type is `{p_T} ∪ {¬p_S : S ≠ T}`, with a distinct positive
/// variable per type.
pub fn is_indicator_typed(s: &State) -> bool {
    let range = s.type_range();
    let mut positives = Vec::new();
    let mut all_vars = None;
    for t in &range {
        let mut pos = Vec::new();
        let mut vars = Vec::new();
        for f in t.iter() {
            match f {
                Formula::Var(v) => {
                    pos.push(v.clone());
                    vars.push(v.clone());
                }
                Formula::Neg(x) => match x.as_ref() {
                    Formula::Var(v) => vars.push(v.clone()),
                    _ => return false,
                },
                _ => return false,
            }
        }
        if pos.len() != 1 {
            return false;
        }
        vars.sort();
        match &all_vars {
            None => all_vars = Some(vars),
            Some(a) if *a == vars => {}
            Some(_) => return false,
        }
        positives.push(pos.pop().expect("one positive"));
    }
    positives.sort();
    positives.dedup();
    positives.len() == range.len() && all_vars.is_none_or(|v| v.len() == range.len())
}

/// `Sim(𝔴)`: on every finite model, its extension is the set of points
/// `x` with `𝔴 ⊴ ⟨M, x⟩`.
pub fn sim_formula(s: &State) -> Result<Formula, SimError> {
    s.check_distinctly_typed().map_err(SimError::NotDistinctlyTyped)?;
    if is_indicator_typed(s) {
        return Ok(raw_sim(s));
    }
    let (sp, sigma) = s.state_p();
    Ok(substitute(&raw_sim(&sp), &sigma))
}

/// Memo of simulation formulas by canonical state key.
#[derive(Default, Debug)]
pub struct SimCache {
    map: BTreeMap<StateKey, Formula>,
}

impl SimCache {
    pub fn new() -> Self {
        SimCache::default()
    }

    pub fn get(&mut self, s: &State) -> Result<Formula, SimError> {
        let key = s.key();
        if let Some(f) = self.map.get(&key) {
            return Ok(f.clone());
        }
        let f = sim_formula(&s.canonical())?;
        self.map.insert(key, f.clone());
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// A model and world refuting a formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Countermodel {
    pub model_index: usize,
    pub world: usize,
}

/// Checks that `phi` holds everywhere in every model of `pool`.
pub fn check_valid_on<'a>(
    phi: &Formula,
    pool: impl IntoIterator<Item = &'a DynModel>,
) -> Result<(), Countermodel> {
    for (model_index, m) in pool.into_iter().enumerate() {
        let ext: WorldSet = m.eval(phi);
        if let Some(world) = (0..m.len()).find(|&w| !ext.contains(w)) {
            return Err(Countermodel { model_index, world });
        }
    }
    Ok(())
}

/// `Sim(𝔴) → ψ`.
pub fn propsub_root(sim_w: &Formula, psi: &Formula) -> Formula {
    sim_w.clone().implies(psi.clone())
}

/// `Sim(𝔴) → Sim(𝔳)`, meant for `𝔳 ⊴ 𝔴`.
pub fn propsub_simulated(sim_w: &Formula, sim_v: &Formula) -> Formula {
    sim_w.clone().implies(sim_v.clone())
}

/// `Sim(𝔴) → ◇Sim(𝔳)`, meant for substates `𝔳` of `𝔴`.
pub fn propsub_substate(sim_w: &Formula, sim_v: &Formula) -> Formula {
    sim_w.clone().implies(sim_v.clone().diamond())
}

/// `ψ → ⋁ Sim(𝔴')` over the given states.
pub fn propsub_cover(psi: &Formula, sims: impl IntoIterator<Item = Formula>) -> Formula {
    psi.clone().implies(Formula::disj(sims))
}

/// `Sim(𝔴) → ◯ ⋁ Sim(𝔳)` over the given successors.
pub fn propsub_successors(sim_w: &Formula, sims: impl IntoIterator<Item = Formula>) -> Formula {
    sim_w.clone().implies(Formula::disj(sims).next())
}
