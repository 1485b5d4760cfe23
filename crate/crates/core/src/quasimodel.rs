//! Sensible relations, quasimodels and paths through them.
//!
//! Infinite paths are lassos: a finite prefix followed by a cycle.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::preorder::{Preorder, Relation, RelationWitness};
use crate::semantics::DynModel;
use crate::syntax::{Formula, FormulaSet};
use crate::typing::{typed_preorder_of_model, TypeSet, TypeViolation, TypedPreorder, TypingViolation};

/// The clause of sensibility a pair of types breaks, with the formula
/// of the first type responsible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SensibleClause {
    Next(Formula),
    NegNext(Formula),
    Hence(Formula),
    Eventuality(Formula),
}

impl fmt::Display for SensibleClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SensibleClause::Next(x) => write!(f, "{x} is not followed by its body"),
            SensibleClause::NegNext(x) => write!(f, "{x} is not followed by the negated body"),
            SensibleClause::Hence(x) => write!(f, "{x} is not carried to the successor"),
            SensibleClause::Eventuality(x) => write!(f, "{x} is neither realized now nor carried forward"),
        }
    }
}

/// Checks the four transfer conditions from `a` to `b`.
pub fn is_sensible_pair(a: &TypeSet, b: &TypeSet) -> Result<(), SensibleClause> {
    for f in a.iter() {
        match f {
            Formula::Next(x) if !b.contains(x) => return Err(SensibleClause::Next(f.clone())),
            Formula::Hence(_) if !b.contains(f) => return Err(SensibleClause::Hence(f.clone())),
            Formula::Neg(inner) => match inner.as_ref() {
                Formula::Next(x) if !b.contains(&x.negated()) => {
                    return Err(SensibleClause::NegNext(f.clone()))
                }
                Formula::Hence(chi) => {
                    let body = chi.negated();
                    if !a.contains(&body) && !b.contains(f) {
                        return Err(SensibleClause::Eventuality(f.clone()));
                    }
                }
                _ => {}
            },
            _ => {}
        }
    }
    Ok(())
}

/// A typed preorder with a temporal relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quasimodel {
    pub base: TypedPreorder,
    pub step: Relation,
    /// When present, every type must be a `Φ`-type for this set.
    pub phi: Option<FormulaSet>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuasimodelViolation {
    NotPhiTyped { world: usize, violation: TypeViolation },
    Typing(TypingViolation),
    NotSerial(usize),
    NotContinuous(RelationWitness),
    NotSensible { w: usize, v: usize, clause: SensibleClause },
    Unrealized { world: usize, eventuality: Formula },
}

impl fmt::Display for QuasimodelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuasimodelViolation::NotPhiTyped { world, violation } => write!(f, "type of world {world} {violation}"),
            QuasimodelViolation::Typing(t) => t.fmt(f),
            QuasimodelViolation::NotSerial(w) => write!(f, "world {w} has no successor"),
            QuasimodelViolation::NotContinuous(x) => write!(
                f,
                "step is not continuous: {} steps to {} and {} is below {} but steps to nothing below {}",
                x.w, x.v, x.w_lower, x.w, x.v
            ),
            QuasimodelViolation::NotSensible { w, v, clause } => write!(f, "pair ({w}, {v}): {clause}"),
            QuasimodelViolation::Unrealized { world, eventuality } => {
                write!(f, "{eventuality} at world {world} is never realized")
            }
        }
    }
}

impl Quasimodel {
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

    /// Every check of the definition, in order: typing, seriality,
    /// continuity, sensibility of pairs, realization of eventualities.
    pub fn validate(&self) -> Result<(), QuasimodelViolation> {
        if let Some(phi) = &self.phi {
            self.base
                .check_phi_typed(phi)
                .map_err(|(world, violation)| QuasimodelViolation::NotPhiTyped { world, violation })?;
        }
        self.base.validate_typing().map_err(QuasimodelViolation::Typing)?;
        self.step.is_serial().map_err(QuasimodelViolation::NotSerial)?;
        self.space()
            .is_continuous_relation(self.space(), &self.step)
            .map_err(QuasimodelViolation::NotContinuous)?;
        for (w, v) in self.step.pairs() {
            is_sensible_pair(self.t(w), self.t(v))
                .map_err(|clause| QuasimodelViolation::NotSensible { w, v, clause })?;
        }
        self.check_omega_sensible()
    }

    /// Every eventuality in every type is realized along some path.
    pub fn check_omega_sensible(&self) -> Result<(), QuasimodelViolation> {
        for w in self.space().worlds() {
            for (ev, body) in self.t(w).eventualities() {
                if self.path_to_realizer(w, &body).is_none() {
                    return Err(QuasimodelViolation::Unrealized {
                        world: w,
                        eventuality: ev.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// A shortest step-path `w = u₀ ↦ ... ↦ u_N` with `body ∈ t(u_N)`.
    /// Breadth-first search over worlds, so `N < |worlds|`; this is well
    /// within the `|worlds|·2^len(Φ)` bound on realization times.
    pub fn path_to_realizer(&self, w: usize, body: &Formula) -> Option<Vec<usize>> {
        let n = self.len();
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        parent[w] = w;
        queue.push_back(w);
        while let Some(u) = queue.pop_front() {
            if self.t(u).contains(body) {
                let mut path = vec![u];
                let mut cur = u;
                while cur != w {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for v in self.step.row(u).ones() {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        None
    }

    /// Every eventuality occurring in some type, sorted.
    fn all_eventualities(&self) -> Vec<(Formula, Formula)> {
        let mut set = BTreeMap::new();
        for t in &self.base.types {
            for (ev, body) in t.eventualities() {
                set.insert(ev.clone(), body);
            }
        }
        set.into_iter().collect()
    }
}

/// The quasimodel a finite model induces: types from evaluation and the
/// graph of the map as the step relation.
pub fn quasimodel_of_model(m: &DynModel, phi: &FormulaSet) -> Quasimodel {
    Quasimodel {
        base: typed_preorder_of_model(m, phi),
        step: Relation::graph(&m.map, m.len()),
        phi: Some(phi.clone()),
    }
}

/// A finite path, or a lasso when `loop_start` is set: after the last
/// element the path continues at `worlds[loop_start]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub worlds: Vec<usize>,
    pub loop_start: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathError {
    /// The start is not below the start of the path being followed.
    NotBelow,
    /// A step of the path being followed is not in the relation.
    NotAPath(usize),
    /// Continuity failed: nothing below the next world is a successor.
    NoLowerSuccessor(usize),
    /// Seriality failed.
    NoSuccessor(usize),
}

impl Path {
    pub fn finite(worlds: Vec<usize>) -> Self {
        Path { worlds, loop_start: None }
    }

    pub fn lasso(worlds: Vec<usize>, loop_start: usize) -> Self {
        assert!(loop_start < worlds.len());
        Path {
            worlds,
            loop_start: Some(loop_start),
        }
    }

    /// The lasso of a point's orbit in a model.
    pub fn orbit(m: &DynModel, x: usize) -> Self {
        let (worlds, start) = m.orbit(x);
        Path::lasso(worlds, start)
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    /// The world at position `n`; lassos unroll indefinitely.
    pub fn at(&self, n: usize) -> Option<usize> {
        if n < self.worlds.len() {
            return Some(self.worlds[n]);
        }
        let l = self.loop_start?;
        let period = self.worlds.len() - l;
        Some(self.worlds[l + (n - l) % period])
    }

    /// The shift: drop the first element.
    pub fn shift(&self) -> Path {
        match self.loop_start {
            None => Path::finite(self.worlds[1..].to_vec()),
            Some(0) => {
                let mut w = self.worlds[1..].to_vec();
                w.push(self.worlds[0]);
                Path::lasso(w, 0)
            }
            Some(l) => Path::lasso(self.worlds[1..].to_vec(), l - 1),
        }
    }

    /// Consecutive pairs (and the closing pair of a lasso) are steps.
    pub fn is_path_in(&self, q: &Quasimodel) -> bool {
        let consecutive = self.worlds.windows(2).all(|p| q.step.contains(p[0], p[1]));
        let closing = match self.loop_start {
            Some(l) => q.step.contains(*self.worlds.last().expect("nonempty"), self.worlds[l]),
            None => true,
        };
        !self.worlds.is_empty() && consecutive && closing
    }

    /// `self ∈ ↓_N(other)`: `self_n ≼ other_n` for every `n ≤ N`.
    pub fn is_below_n(&self, other: &Path, n: usize, space: &Preorder) -> bool {
        (0..=n).all(|i| match (self.at(i), other.at(i)) {
            (Some(a), Some(b)) => space.le(a, b),
            _ => false,
        })
    }

    /// For a lasso: every eventuality at every position is realized at
    /// the same or a later position.
    pub fn is_realizing(&self, q: &Quasimodel) -> bool {
        let Some(l) = self.loop_start else {
            return false;
        };
        let cycle: Vec<usize> = self.worlds[l..].to_vec();
        for (i, &w) in self.worlds.iter().enumerate() {
            for (_, body) in q.t(w).eventualities() {
                let later = if i >= l {
                    &cycle[..]
                } else {
                    &self.worlds[i..]
                };
                let realized = later.iter().any(|&u| q.t(u).contains(&body))
                    || cycle.iter().any(|&u| q.t(u).contains(&body));
                if !realized {
                    return false;
                }
            }
        }
        true
    }
}

/// Follows a finite path from below: given `v₀ ≼ w₀`, builds `v⃗` with
/// `v_n ≼ w_n` for every `n ≤ N`, then extends by successors up to
/// `min_len` elements.
pub fn extend_path_below(q: &Quasimodel, w: &Path, v0: usize, min_len: usize) -> Result<Path, PathError> {
    let space = q.space();
    let w0 = *w.worlds.first().ok_or(PathError::NotAPath(0))?;
    if !space.le(v0, w0) {
        return Err(PathError::NotBelow);
    }
    let mut out = vec![v0];
    for n in 0..w.worlds.len() - 1 {
        let (a, b) = (w.worlds[n], w.worlds[n + 1]);
        if !q.step.contains(a, b) {
            return Err(PathError::NotAPath(n));
        }
        let cur = out[n];
        let next = q
            .step
            .row(cur)
            .ones()
            .find(|&u| space.le(u, b))
            .ok_or(PathError::NoLowerSuccessor(n))?;
        out.push(next);
    }
    while out.len() < min_len {
        let cur = *out.last().expect("nonempty");
        let next = q.step.row(cur).ones().next().ok_or(PathError::NoSuccessor(cur))?;
        out.push(next);
    }
    Ok(Path::finite(out))
}

/// A realizing lasso from `w0`, or `None` if some eventuality cannot be
/// discharged (the quasimodel was not valid).
///
/// Eventualities are targeted round-robin; the walk follows a shortest
/// path to a realizer of the current target and closes into a cycle once
/// a configuration (world, target, pointer) repeats.
pub fn realizing_lasso(q: &Quasimodel, w0: usize) -> Option<Path> {
    let evs = q.all_eventualities();
    let pending = |u: usize| -> Vec<usize> {
        (0..evs.len())
            .filter(|&i| q.t(u).contains(&evs[i].0) && !q.t(u).contains(&evs[i].1))
            .collect()
    };
    let mut seen: BTreeMap<(usize, Option<usize>, usize), usize> = BTreeMap::new();
    let mut walk = Vec::new();
    let mut cur = w0;
    let mut target: Option<usize> = None;
    let mut pointer = 0usize;
    loop {
        if let Some(t) = target {
            if q.t(cur).contains(&evs[t].1) {
                pointer = t + 1;
                target = None;
            }
        }
        if target.is_none() {
            let p = pending(cur);
            target = p
                .iter()
                .copied()
                .find(|&i| i >= pointer)
                .or_else(|| p.first().copied());
        }
        let config = (cur, target, pointer);
        if let Some(&start) = seen.get(&config) {
            return Some(Path::lasso(walk, start));
        }
        seen.insert(config, walk.len());
        walk.push(cur);
        cur = match target {
            Some(t) => {
                let path = q.path_to_realizer(cur, &evs[t].1)?;
                path.get(1).copied().unwrap_or(path[0])
            }
            None => q.step.row(cur).ones().next()?,
        };
    }
}
