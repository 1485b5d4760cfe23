//! The Hilbert system: axiom schemata, a proof checker and a randomized
//! soundness harness.
//!
//! Step references are 0-based here; the JSON format in the companion
//! crate is 1-based.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen::{random_formula, random_gamma};
use crate::semantics::{DynModel, ExhaustiveModels, RandomModels};
use crate::syntax::{substitute, Formula};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Schema {
    Taut,
    K,
    T,
    Four,
    FixDiamond,
    IndDiamond,
    NegF,
    AndF,
    FixHence,
    IndHence,
    TCont,
}

impl Schema {
    pub const ALL: [Schema; 11] = [
        Schema::Taut,
        Schema::K,
        Schema::T,
        Schema::Four,
        Schema::FixDiamond,
        Schema::IndDiamond,
        Schema::NegF,
        Schema::AndF,
        Schema::FixHence,
        Schema::IndHence,
        Schema::TCont,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Schema::Taut => "Taut",
            Schema::K => "K",
            Schema::T => "T",
            Schema::Four => "4",
            Schema::FixDiamond => "Fix_<>",
            Schema::IndDiamond => "Ind_<>",
            Schema::NegF => "Neg_f",
            Schema::AndF => "And_f",
            Schema::FixHence => "Fix_[f]",
            Schema::IndHence => "Ind_[f]",
            Schema::TCont => "TCont",
        }
    }

    /// Schematic letters the instantiation must supply.
    pub fn letters(self) -> &'static [&'static str] {
        match self {
            Schema::Taut => &["phi"],
            Schema::K | Schema::AndF => &["p", "q"],
            Schema::IndDiamond | Schema::NegF | Schema::FixHence | Schema::IndHence => &["p"],
            Schema::T | Schema::Four | Schema::FixDiamond | Schema::TCont => &[],
        }
    }

    pub fn uses_gamma(self) -> bool {
        matches!(
            self,
            Schema::T | Schema::Four | Schema::FixDiamond | Schema::IndDiamond | Schema::TCont
        )
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown axiom schema {0:?}")]
pub struct UnknownSchema(pub String);

impl FromStr for Schema {
    type Err = UnknownSchema;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Taut" => Schema::Taut,
            "K" => Schema::K,
            "T" => Schema::T,
            "4" | "Four" => Schema::Four,
            "Fix_<>" | "Fix_diamond" | "FixDiamond" => Schema::FixDiamond,
            "Ind_<>" | "Ind_diamond" | "IndDiamond" => Schema::IndDiamond,
            "Neg_f" | "NegF" => Schema::NegF,
            "And_f" | "AndF" => Schema::AndF,
            "Fix_[f]" | "Fix_G" | "FixHence" => Schema::FixHence,
            "Ind_[f]" | "Ind_G" | "IndHence" => Schema::IndHence,
            "TCont" => Schema::TCont,
            _ => return Err(UnknownSchema(s.to_string())),
        })
    }
}

/// Formulas for the schematic letters and, where the schema has one, the
/// set `Γ`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Instantiation {
    pub letters: BTreeMap<String, Formula>,
    pub gamma: Option<Vec<Formula>>,
}

impl Instantiation {
    pub fn new() -> Self {
        Instantiation::default()
    }

    pub fn letter(mut self, name: &str, f: Formula) -> Self {
        self.letters.insert(name.to_string(), f);
        self
    }

    pub fn gamma(mut self, gamma: Vec<Formula>) -> Self {
        self.gamma = Some(gamma);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("{schema} needs a formula for {letter}")]
    MissingLetter { schema: Schema, letter: String },
    #[error("{schema} has no letter {letter}")]
    UnexpectedLetter { schema: Schema, letter: String },
    #[error("{0} needs a set Gamma")]
    MissingGamma(Schema),
    #[error("{0} takes no set Gamma")]
    UnexpectedGamma(Schema),
    #[error("{0} is not a tautology")]
    NotTautology(Formula),
    #[error("too many atoms ({0}) for a truth table")]
    TooManyAtoms(usize),
}

/// Largest number of atoms a truth-table check will enumerate.
pub const MAX_TAUT_ATOMS: usize = 24;

/// The instance of `schema` under `inst`.
pub fn axiom_instance(schema: Schema, inst: &Instantiation) -> Result<Formula, InstanceError> {
    for l in inst.letters.keys() {
        if !schema.letters().contains(&l.as_str()) {
            return Err(InstanceError::UnexpectedLetter {
                schema,
                letter: l.clone(),
            });
        }
    }
    let get = |name: &str| -> Result<Formula, InstanceError> {
        inst.letters.get(name).cloned().ok_or(InstanceError::MissingLetter {
            schema,
            letter: name.to_string(),
        })
    };
    let gamma = match (&inst.gamma, schema.uses_gamma()) {
        (Some(g), true) => g.clone(),
        (None, true) => return Err(InstanceError::MissingGamma(schema)),
        (Some(_), false) => return Err(InstanceError::UnexpectedGamma(schema)),
        (None, false) => Vec::new(),
    };
    let dia = || Formula::tangle(gamma.clone());
    Ok(match schema {
        Schema::Taut => {
            let phi = get("phi")?;
            check_tautology(&phi)?;
            phi
        }
        Schema::K => {
            let (p, q) = (get("p")?, get("q")?);
            p.clone()
                .implies(q.clone())
                .boxed()
                .implies(p.boxed().implies(q.boxed()))
        }
        Schema::T => Formula::conj(gamma.iter().cloned()).implies(dia()),
        Schema::Four => dia().diamond().implies(dia()),
        Schema::FixDiamond => dia().implies(Formula::conj(
            gamma.iter().map(|g| g.clone().and(dia()).diamond()),
        )),
        Schema::IndDiamond => {
            let p = get("p")?;
            let body = Formula::conj(gamma.iter().map(|g| p.clone().and(g.clone()).diamond()));
            p.clone().implies(body).boxed().implies(p.implies(dia()))
        }
        Schema::NegF => {
            let p = get("p")?;
            p.clone().next().neg().iff(p.neg().next())
        }
        Schema::AndF => {
            let (p, q) = (get("p")?, get("q")?);
            p.clone().and(q.clone()).next().iff(p.next().and(q.next()))
        }
        Schema::FixHence => {
            let p = get("p")?;
            p.clone().hence().implies(p.clone().and(p.hence().next()))
        }
        Schema::IndHence => {
            let p = get("p")?;
            p.clone()
                .implies(p.clone().next())
                .hence()
                .implies(p.clone().implies(p.hence()))
        }
        Schema::TCont => Formula::tangle(gamma.iter().map(|g| g.clone().next()).collect::<Vec<_>>())
            .implies(dia().next()),
    })
}

/// The maximal subterms not built from `¬` and `∧`.
pub fn boolean_atoms(phi: &Formula) -> BTreeSet<Formula> {
    fn go(f: &Formula, out: &mut BTreeSet<Formula>) {
        match f {
            Formula::Neg(x) => go(x, out),
            Formula::And(a, b) => {
                go(a, out);
                go(b, out);
            }
            other => {
                out.insert(other.clone());
            }
        }
    }
    let mut out = BTreeSet::new();
    go(phi, &mut out);
    out
}

fn truth(f: &Formula, atoms: &[Formula], assignment: u32) -> bool {
    match f {
        Formula::Neg(x) => !truth(x, atoms, assignment),
        Formula::And(a, b) => truth(a, atoms, assignment) && truth(b, atoms, assignment),
        other => {
            let i = atoms.binary_search(other).expect("atom collected");
            assignment & (1 << i) != 0
        }
    }
}

/// Truth-table check with non-Boolean subterms as atoms.
pub fn check_tautology(phi: &Formula) -> Result<(), InstanceError> {
    let atoms: Vec<Formula> = boolean_atoms(phi).into_iter().collect();
    if atoms.len() > MAX_TAUT_ATOMS {
        return Err(InstanceError::TooManyAtoms(atoms.len()));
    }
    for a in 0u32..(1u32 << atoms.len()) {
        if !truth(phi, &atoms, a) {
            return Err(InstanceError::NotTautology(phi.clone()));
        }
    }
    Ok(())
}

pub fn is_tautology(phi: &Formula) -> bool {
    check_tautology(phi).is_ok()
}

/// How a step is obtained. Indices refer to earlier steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    Axiom(Schema, Instantiation),
    /// Modus ponens from `φ` (first) and `φ → ψ` (second).
    Mp(usize, usize),
    Subs(usize, BTreeMap<String, Formula>),
    NecBox(usize),
    NecNext(usize),
    NecHence(usize),
}

impl Justification {
    pub fn rule_name(&self) -> &'static str {
        match self {
            Justification::Axiom(..) => "Axiom",
            Justification::Mp(..) => "MP",
            Justification::Subs(..) => "Subs",
            Justification::NecBox(_) => "NecBox",
            Justification::NecNext(_) => "NecNext",
            Justification::NecHence(_) => "NecHence",
        }
    }

    fn refs(&self) -> Vec<usize> {
        match self {
            Justification::Axiom(..) => Vec::new(),
            Justification::Mp(i, j) => vec![*i, *j],
            Justification::Subs(i, _)
            | Justification::NecBox(i)
            | Justification::NecNext(i)
            | Justification::NecHence(i) => vec![*i],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub formula: Formula,
    pub justification: Justification,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProofObject {
    pub steps: Vec<Step>,
}

impl ProofObject {
    pub fn new() -> Self {
        ProofObject::default()
    }

    /// Appends a step and returns its index.
    pub fn push(&mut self, formula: Formula, justification: Justification) -> usize {
        self.steps.push(Step { formula, justification });
        self.steps.len() - 1
    }

    /// The last step's formula.
    pub fn conclusion(&self) -> Option<&Formula> {
        self.steps.last().map(|s| &s.formula)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepFault {
    /// A reference to this or a later step.
    ForwardReference(usize),
    Instance(InstanceError),
    /// The axiom instance differs from the stated formula.
    InstanceMismatch(Formula),
    /// The second premise is not `first → formula`.
    MpMismatch,
    /// The rule applied to the premise gives a different formula.
    RuleMismatch(Formula),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("step {}: {fault}", .step + 1)]
pub struct ProofError {
    pub step: usize,
    pub fault: StepFault,
}

impl fmt::Display for StepFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepFault::ForwardReference(i) => write!(f, "refers to step {}, which does not precede it", i + 1),
            StepFault::Instance(e) => e.fmt(f),
            StepFault::InstanceMismatch(x) => write!(f, "the axiom instance is {x}"),
            StepFault::MpMismatch => f.write_str("modus ponens premises do not match"),
            StepFault::RuleMismatch(x) => write!(f, "the rule yields {x}"),
        }
    }
}

/// Checks every step. Returns the first faulty step.
pub fn check_proof(p: &ProofObject) -> Result<(), ProofError> {
    for (k, step) in p.steps.iter().enumerate() {
        check_step(p, k, step).map_err(|fault| ProofError { step: k, fault })?;
    }
    Ok(())
}

fn check_step(p: &ProofObject, k: usize, step: &Step) -> Result<(), StepFault> {
    if let Some(&bad) = step.justification.refs().iter().find(|&&i| i >= k) {
        return Err(StepFault::ForwardReference(bad));
    }
    let f = |i: usize| &p.steps[i].formula;
    let expect = |got: Formula| {
        if got == step.formula {
            Ok(())
        } else {
            Err(StepFault::RuleMismatch(got))
        }
    };
    match &step.justification {
        Justification::Axiom(Schema::Taut, inst) if inst.letters.is_empty() && inst.gamma.is_none() => {
            check_tautology(&step.formula).map_err(StepFault::Instance)
        }
        Justification::Axiom(schema, inst) => {
            let got = axiom_instance(*schema, inst).map_err(StepFault::Instance)?;
            if got == step.formula {
                Ok(())
            } else {
                Err(StepFault::InstanceMismatch(got))
            }
        }
        Justification::Mp(i, j) => {
            if *f(*j) == f(*i).clone().implies(step.formula.clone()) {
                Ok(())
            } else {
                Err(StepFault::MpMismatch)
            }
        }
        Justification::Subs(i, sigma) => expect(substitute(f(*i), sigma)),
        Justification::NecBox(i) => expect(f(*i).clone().boxed()),
        Justification::NecNext(i) => expect(f(*i).clone().next()),
        Justification::NecHence(i) => expect(f(*i).clone().hence()),
    }
}

/// A formula that should be valid but fails somewhere.
#[derive(Clone, Debug)]
pub struct Violation {
    pub trial: usize,
    pub schema: Schema,
    pub formula: Formula,
    pub model: DynModel,
    pub world: usize,
}

#[derive(Clone, Debug)]
pub struct SoundnessReport {
    pub trials: usize,
    pub per_schema: BTreeMap<Schema, usize>,
    pub rule_applications: usize,
    pub violations: Vec<Violation>,
}

impl SoundnessReport {
    /// Appends another report; trials should follow on from this one.
    pub fn merge(&mut self, other: SoundnessReport) {
        self.trials += other.trials;
        for (k, v) in other.per_schema {
            *self.per_schema.entry(k).or_default() += v;
        }
        self.rule_applications += other.rule_applications;
        self.violations.extend(other.violations);
    }
}

#[derive(Clone, Debug)]
pub struct HarnessConfig {
    pub trials: usize,
    pub max_worlds: usize,
    pub max_gamma: usize,
    pub depth: usize,
    pub vars: Vec<String>,
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            trials: 1000,
            max_worlds: 6,
            max_gamma: 3,
            depth: 4,
            vars: vec!["p".to_string(), "q".to_string()],
            seed: 0,
        }
    }
}

/// Per-trial seed derived from the master seed.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut z = master ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A random tautology built from a few propositional templates.
pub fn random_tautology<R: Rng + ?Sized>(rng: &mut R, vars: &[String], depth: usize) -> Formula {
    let mut r = || random_formula(rng, vars, depth.saturating_sub(1));
    let (a, b, c) = (r(), r(), r());
    match rng.gen_range(0..6) {
        0 => a.clone().implies(a),
        1 => a.clone().or(a.neg()),
        2 => a.clone().and(b).implies(a),
        3 => a.clone().implies(b.implies(a)),
        4 => a.clone().neg().neg().iff(a),
        _ => a
            .clone()
            .implies(b.clone().implies(c.clone()))
            .implies(a.clone().implies(b).implies(a.implies(c))),
    }
}

/// A random instance of `schema`.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    schema: Schema,
    vars: &[String],
    depth: usize,
    max_gamma: usize,
) -> Formula {
    let mut inst = Instantiation::new();
    if schema == Schema::Taut {
        inst = inst.letter("phi", random_tautology(rng, vars, depth));
    } else {
        for l in schema.letters() {
            inst = inst.letter(l, random_formula(rng, vars, depth));
        }
    }
    if schema.uses_gamma() {
        let k = rng.gen_range(0..=max_gamma);
        inst = inst.gamma(random_gamma(rng, vars, k, depth));
    }
    axiom_instance(schema, &inst).expect("well-formed random instantiation")
}

/// Applies a random validity-preserving rule: one of the three
/// necessitations, or a substitution of random formulas for variables.
pub fn random_rule<R: Rng + ?Sized>(rng: &mut R, phi: Formula, vars: &[String], depth: usize) -> Formula {
    match rng.gen_range(0..4) {
        0 => phi.boxed(),
        1 => phi.next(),
        2 => phi.hence(),
        _ => {
            let sigma = vars
                .iter()
                .map(|v| (v.clone(), random_formula(rng, vars, depth.min(2))))
                .collect();
            substitute(&phi, &sigma)
        }
    }
}

/// Random axiom instances on random models; every instance must be valid.
/// Roughly a quarter of the trials also apply one rule to the instance.
pub fn soundness_harness(cfg: &HarnessConfig) -> SoundnessReport {
    run_trials(cfg, 0..cfg.trials)
}

/// The trials in `range` only; trial `i` depends on the master seed and
/// `i` alone, so ranges can run separately and be merged.
pub fn run_trials(cfg: &HarnessConfig, range: core::ops::Range<usize>) -> SoundnessReport {
    let mut report = SoundnessReport {
        trials: range.len(),
        per_schema: BTreeMap::new(),
        rule_applications: 0,
        violations: Vec::new(),
    };
    if range.is_empty() {
        return report;
    }
    let mut models = RandomModels::new(cfg.max_worlds, &cfg.vars, 0);
    for trial in range {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, trial));
        let schema = Schema::ALL[rng.gen_range(0..Schema::ALL.len())];
        let mut phi = random_instance(&mut rng, schema, &cfg.vars, cfg.depth, cfg.max_gamma);
        if rng.gen_bool(0.25) {
            phi = random_rule(&mut rng, phi, &cfg.vars, cfg.depth);
            report.rule_applications += 1;
        }
        *report.per_schema.entry(schema).or_default() += 1;
        models.reseed(rng.gen());
        let model = models.sample();
        let ext = model.eval(&phi);
        if let Some(world) = (0..model.len()).find(|&w| !ext.contains(w)) {
            report.violations.push(Violation {
                trial,
                schema,
                formula: phi,
                model,
                world,
            });
        }
    }
    report
}

/// Every schema with distinct variables for its letters and `Γ` of every
/// size up to `max_gamma`, checked on all models with at most
/// `max_worlds` worlds.
pub fn exhaustive_sweep(max_worlds: usize, max_gamma: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    for schema in Schema::ALL {
        let mut instances = Vec::new();
        let sizes = if schema.uses_gamma() { 0..=max_gamma } else { 0..=0 };
        for k in sizes {
            let mut inst = Instantiation::new();
            if schema == Schema::Taut {
                let (p, q) = (Formula::var("p"), Formula::var("q"));
                inst = inst.letter("phi", p.clone().implies(q.clone().implies(p)));
            } else {
                for l in schema.letters() {
                    inst = inst.letter(l, Formula::var(*l));
                }
            }
            if schema.uses_gamma() {
                inst = inst.gamma((0..k).map(|i| Formula::var(alloc::format!("g{i}"))).collect());
            }
            instances.push(axiom_instance(schema, &inst).expect("well-formed"));
        }
        for phi in instances {
            let vars: Vec<String> = phi.vars().into_iter().collect();
            let models = ExhaustiveModels::new(max_worlds, &vars).expect("cap respected");
            for model in models {
                let ext = model.eval(&phi);
                if let Some(world) = (0..model.len()).find(|&w| !ext.contains(w)) {
                    out.push(Violation {
                        trial: 0,
                        schema,
                        formula: phi.clone(),
                        model,
                        world,
                    });
                    break;
                }
            }
        }
    }
    out
}
