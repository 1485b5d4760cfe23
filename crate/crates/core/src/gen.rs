//! Random formulas for tests and harnesses.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::syntax::Formula;

/// A random formula over `vars` of depth at most `depth`. All primitive
/// constructors are reachable, including empty and multi-member tangles.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, vars: &[String], depth: usize) -> Formula {
    let leaf = |rng: &mut R| Formula::Var(vars[rng.gen_range(0..vars.len())].clone());
    if depth == 0 || rng.gen_bool(0.25) {
        return leaf(rng);
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        0 => random_formula(rng, vars, d).neg(),
        1 => random_formula(rng, vars, d).and(random_formula(rng, vars, d)),
        2 => random_formula(rng, vars, d).next(),
        3 => random_formula(rng, vars, d).hence(),
        4 => random_formula(rng, vars, d).diamond(),
        _ => {
            let k = rng.gen_range(0..4);
            Formula::tangle((0..k).map(|_| random_formula(rng, vars, d)).collect::<Vec<_>>())
        }
    }
}

/// A random formula without `◯` and `[f]`.
pub fn random_static_formula<R: Rng + ?Sized>(rng: &mut R, vars: &[String], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return Formula::Var(vars[rng.gen_range(0..vars.len())].clone());
    }
    let d = depth - 1;
    match rng.gen_range(0..4) {
        0 => random_static_formula(rng, vars, d).neg(),
        1 => random_static_formula(rng, vars, d).and(random_static_formula(rng, vars, d)),
        2 => random_static_formula(rng, vars, d).diamond(),
        _ => {
            let k = rng.gen_range(0..4);
            Formula::tangle((0..k).map(|_| random_static_formula(rng, vars, d)).collect::<Vec<_>>())
        }
    }
}

/// `k` random formulas, used as a tangle argument `Γ`.
pub fn random_gamma<R: Rng + ?Sized>(rng: &mut R, vars: &[String], k: usize, depth: usize) -> Vec<Formula> {
    (0..k).map(|_| random_formula(rng, vars, depth)).collect()
}
