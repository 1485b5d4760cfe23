//! Reasoning workbench for dynamic topological logic with the polyadic
//! tangled modality.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches files,
//! clocks or the command line lives in the `dtlstar` companion crate.
//!
//! Module map:
//!
//! * [`syntax`]: formulas, concrete syntax, subformulas, substitution.
//! * [`preorder`]: finite preorders read as down-set topologies.
//! * [`semantics`]: finite dynamic models, evaluation, model enumeration.
//! * [`typing`]: types, typed preorders, states and their transforms.
//! * [`simulation`]: greatest typed simulations.
//! * [`simformula`]: formulas defining "simulated by a state".
//! * [`quasimodel`]: sensible relations, quasimodels, realizing paths.
//! * [`statespace`]: the universal state space, consistency oracles and
//!   the satisfiability pipeline.
//! * [`proofkit`]: axiom schemata, proof checking, soundness harness.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod canon;
pub mod gen;
pub mod preorder;
pub mod proofkit;
pub mod quasimodel;
pub mod semantics;
pub mod simformula;
pub mod simulation;
pub mod statespace;
pub mod syntax;
pub mod typing;

pub use preorder::{Preorder, WorldSet};
pub use semantics::DynModel;
pub use syntax::{Formula, FormulaSet};
pub use typing::{State, TypeSet, TypedPreorder};
