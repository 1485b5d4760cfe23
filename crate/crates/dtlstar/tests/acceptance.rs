//! The acceptance gate. Each test prints one line,
//! `criterion N: PASS|FAIL (...)`, and fails on a mismatch or when it
//! runs over its time limit. Run with `--nocapture` to see the lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use dtlstar::formats::{ProofJson, StepJson};
use dtlstar_core::canon::preorders_up_to_iso;
use dtlstar_core::gen::random_formula;
use dtlstar_core::preorder::{world_set, WorldSet};
use dtlstar_core::proofkit::{check_proof, exhaustive_sweep, soundness_harness, HarnessConfig, Justification, Schema};
use dtlstar_core::quasimodel::{extend_path_below, quasimodel_of_model, Path};
use dtlstar_core::semantics::{CompiledFormula, DynModel, ExhaustiveModels, RandomModels};
use dtlstar_core::simformula::{
    propsub_cover, propsub_root, propsub_simulated, propsub_substate, propsub_successors, SimCache,
};
use dtlstar_core::simulation::{simulated_points, simulates};
use dtlstar_core::statespace::{
    efficient_paths, enumerate_states, norm_bound, satisfy, verify_pruning, verify_report, Caps, ModelSearchOracle,
    SatConfig, SatVerdict, StateSpace,
};
use dtlstar_core::syntax::{parse, subformulas, Formula, FormulaSet};
use dtlstar_core::typing::{type_of_world, State};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Prints the verdict line and fails the test on a mismatch or overrun.
fn verdict(n: usize, what: &str, failures: usize, detail: String, start: Instant, limit: Duration) {
    let took = start.elapsed();
    let ok = failures == 0 && took <= limit;
    println!(
        "criterion {n}: {} ({what}; {detail}; {failures} failures; {:.1}s of {}s)",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        limit.as_secs()
    );
    assert_eq!(failures, 0, "criterion {n}: {failures} failures");
    assert!(took <= limit, "criterion {n}: took {took:?}, limit {limit:?}");
}

/// Every set of at most three distinct subsets of the space.
fn families(n: usize) -> Vec<Vec<WorldSet>> {
    let subsets: Vec<WorldSet> = (0u32..1 << n)
        .map(|c| world_set(n, (0..n).filter(|i| c >> i & 1 == 1)))
        .collect();
    let k = subsets.len();
    let mut out = vec![Vec::new()];
    for i in 0..k {
        out.push(vec![subsets[i].clone()]);
        for j in i + 1..k {
            out.push(vec![subsets[i].clone(), subsets[j].clone()]);
            for l in j + 1..k {
                out.push(vec![subsets[i].clone(), subsets[j].clone(), subsets[l].clone()]);
            }
        }
    }
    out
}

#[test]
fn criterion_01_tangle_gfp_matches_cluster_characterization() {
    let start = Instant::now();
    let spaces = preorders_up_to_iso(5);
    let mut checked = 0usize;
    let mut failures = 0usize;
    let mut by_size: BTreeMap<usize, Vec<Vec<WorldSet>>> = BTreeMap::new();
    for p in &spaces {
        let fams = by_size.entry(p.len()).or_insert_with(|| families(p.len()));
        for fam in fams.iter() {
            checked += 1;
            if p.tangled_gfp(fam) != p.tangled_cluster(fam) {
                failures += 1;
            }
        }
    }
    verdict(
        1,
        "tangled gfp = cluster lemma",
        failures,
        format!("{} preorders up to iso, {checked} (space, family) pairs", spaces.len()),
        start,
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_02_single_tangle_is_closure() {
    let start = Instant::now();
    let vs = vars(&["p", "q", "r"]);
    let mut models = RandomModels::new(5, &vs, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for _ in 0..1000 {
        let m = models.sample();
        let g = random_formula(&mut rng, &vs, 4);
        let lhs = m.eval(&Formula::tangle(vec![g.clone()]));
        if lhs != m.space.closure(&m.eval(&g)) {
            failures += 1;
        }
    }
    verdict(
        2,
        "<>{g} = closure",
        failures,
        "1000 random pairs, <= 5 worlds, depth <= 4".into(),
        start,
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_03_soundness() {
    let start = Instant::now();
    let cfg = HarnessConfig {
        trials: 10_000,
        max_worlds: 6,
        seed: 3,
        ..HarnessConfig::default()
    };
    let report = soundness_harness(&cfg);
    let sweep = exhaustive_sweep(3, 2);
    let all_schemas = Schema::ALL.iter().all(|s| report.per_schema.get(s).copied().unwrap_or(0) > 0);
    let failures = report.violations.len() + sweep.len() + usize::from(!all_schemas);
    for v in report.violations.iter().chain(&sweep) {
        println!("violation: {} {}", v.schema, v.formula);
    }
    verdict(
        3,
        "axiom validity",
        failures,
        format!(
            "{} random instances ({} via rules) on <= 6 worlds, exhaustive sweep Gamma <= 2 on <= 3 worlds",
            report.trials, report.rule_applications
        ),
        start,
        Duration::from_secs(300),
    );
}

/// Every preorder with at most four worlds up to isomorphism, the
/// identity map and every valuation of `vs`.
fn static_models(vs: &[String], n_max: usize) -> Vec<DynModel> {
    let mut out = Vec::new();
    for p in preorders_up_to_iso(n_max) {
        let n = p.len();
        for code in 0u64..1 << (n * vs.len()) {
            let val = vs
                .iter()
                .enumerate()
                .map(|(k, v)| (v.clone(), world_set(n, (0..n).filter(|w| code >> (k * n + w) & 1 == 1))))
                .collect();
            out.push(DynModel::new(p.clone(), (0..n).collect(), val).expect("identity is monotone"));
        }
    }
    out
}

/// The least `K` whose norm bound admits every state on `worlds` worlds.
fn k_covering(phi: &FormulaSet, worlds: usize) -> usize {
    let need = worlds - 1;
    (0..).find(|&k| norm_bound(phi, k) >= need).expect("len(Φ) > 0")
}

#[test]
fn criterion_04_sim_formula_defines_simulability() {
    let start = Instant::now();
    let mut failures = 0usize;
    let mut states = 0usize;
    let mut pairs = 0usize;
    for vs in [vars(&["p"]), vars(&["p", "q"])] {
        let phi: FormulaSet = vs.iter().map(Formula::var).collect();
        let caps = Caps {
            max_worlds: 4,
            max_states: 1_000_000,
        };
        let space = enumerate_states(&phi, k_covering(&phi, 4), caps);
        assert!(!space.state_cap_reached);
        let models = static_models(&vs, 4);
        let mut cache = SimCache::new();
        for s in &space.states {
            states += 1;
            let sim = cache.get(s).expect("states are distinctly typed");
            for m in &models {
                pairs += 1;
                if m.eval(&sim) != simulated_points(s, m) {
                    failures += 1;
                }
            }
        }
    }
    verdict(
        4,
        "eval Sim = simulated points",
        failures,
        format!("{states} states <= 4 worlds over {{p}} and {{p,q}}, {pairs} (state, model) pairs"),
        start,
        Duration::from_secs(600),
    );
}

/// A formula valid on every model of the pool, evaluated once per
/// distinct formula.
struct Pool {
    models: Vec<DynModel>,
    seen: BTreeMap<Formula, bool>,
}

impl Pool {
    fn valid(&mut self, f: &Formula) -> bool {
        if let Some(&v) = self.seen.get(f) {
            return v;
        }
        let c = CompiledFormula::new(f);
        let v = self.models.iter().all(|m| m.is_valid_compiled(&c));
        self.seen.insert(f.clone(), v);
        v
    }
}

fn sub_pm(phi: &FormulaSet) -> Vec<Formula> {
    subformulas(phi)
        .iter()
        .flat_map(|f| [f.clone(), f.clone().neg()])
        .collect()
}

#[test]
fn criterion_05_simulation_formula_properties() {
    let start = Instant::now();
    let mut pool = Pool {
        models: ExhaustiveModels::new(4, &vars(&["p"])).unwrap().collect(),
        seen: BTreeMap::new(),
    };
    let phis: Vec<FormulaSet> = ["<>p", "X p", "F p", "G p", "<>{p, ~p}"]
        .iter()
        .map(|t| FormulaSet::singleton(parse(t).unwrap()))
        .collect();
    let caps = Caps {
        max_worlds: 4,
        max_states: 100_000,
    };
    let i0: Vec<StateSpace> = phis.iter().map(|phi| enumerate_states(phi, 0, caps)).collect();
    let i1: Vec<StateSpace> = phis.iter().map(|phi| enumerate_states(phi, 1, caps)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cache = SimCache::new();
    let mut failures = [0usize; 5];
    let mut truncated = 0usize;

    for _ in 0..50 {
        // item 1: root type members
        let sp = &i0[rng.gen_range(0..i0.len())];
        let w = sp.states.choose(&mut rng).unwrap();
        let sim = cache.get(w).unwrap();
        if !pool.valid(&propsub_root(&sim, &w.root_type().conj())) {
            failures[0] += 1;
        }
        // item 2: states simulated by w
        let below: Vec<&State> = sp.states.iter().filter(|v| simulates(v, w).is_some()).collect();
        let v = below.choose(&mut rng).unwrap();
        if !pool.valid(&propsub_simulated(&sim, &cache.get(v).unwrap())) {
            failures[1] += 1;
        }
        // item 3: substates
        let subs = w.substates();
        let v = subs.choose(&mut rng).unwrap();
        if !pool.valid(&propsub_substate(&sim, &cache.get(v).unwrap())) {
            failures[2] += 1;
        }
        // item 4: every ψ is covered by the I_0 states carrying it
        let ix = rng.gen_range(0..phis.len());
        let psi = sub_pm(&phis[ix]).choose(&mut rng).unwrap().clone();
        truncated += usize::from(i0[ix].truncated());
        let sims: Vec<Formula> = i0[ix]
            .states
            .iter()
            .filter(|s| s.root_type().contains(&psi))
            .map(|s| cache.get(s).unwrap())
            .collect();
        if !pool.valid(&propsub_cover(&psi, sims)) {
            failures[3] += 1;
        }
        // item 5: small successors, all inside I_1 for a state of I_0
        let ix = rng.gen_range(0..phis.len());
        let big = &i1[ix];
        truncated += usize::from(big.truncated());
        let w = i0[ix].states.choose(&mut rng).unwrap();
        let wi = big.index_of(w).expect("I_0 is inside I_1");
        let sims: Vec<Formula> = big.small_successors(wi).map(|v| cache.get(&big.states[v]).unwrap()).collect();
        if !pool.valid(&propsub_successors(&cache.get(w).unwrap(), sims)) {
            failures[4] += 1;
        }
    }
    verdict(
        5,
        "simulation formula properties 1-5",
        failures.iter().sum(),
        format!(
            "50 samples per item, {} models <= 4 worlds, per-item failures {failures:?}, {truncated} samples from capped spaces",
            pool.models.len()
        ),
        start,
        Duration::from_secs(600),
    );
}

#[test]
fn criterion_06_models_give_quasimodels() {
    let start = Instant::now();
    let vs = vars(&["p", "q"]);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let formulas: Vec<FormulaSet> = (0..200)
        .map(|_| FormulaSet::singleton(random_formula(&mut rng, &vs, 3)))
        .collect();
    let mut failures = 0usize;
    let mut checked = 0usize;
    for (i, m) in ExhaustiveModels::new(4, &vs).unwrap().enumerate() {
        let phi = &formulas[i % formulas.len()];
        let q = quasimodel_of_model(&m, phi);
        checked += 1;
        if q.validate().is_err() || !(0..m.len()).all(|x| Path::orbit(&m, x).is_realizing(&q)) {
            failures += 1;
        }
    }
    verdict(
        6,
        "model quasimodels validate, orbits realize",
        failures,
        format!("{checked} models <= 4 worlds, Phi cycling through 200 formulas of depth <= 3"),
        start,
        Duration::from_secs(180),
    );
}

#[test]
fn criterion_07_paths_extend_below() {
    let start = Instant::now();
    let vs = vars(&["p", "q"]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut models = RandomModels::new(4, &vs, 7);
    let mut failures = 0usize;
    for _ in 0..1000 {
        let m = models.sample();
        let phi = FormulaSet::singleton(random_formula(&mut rng, &vs, 3));
        let q = quasimodel_of_model(&m, &phi);
        assert!(q.validate().is_ok());
        let x = rng.gen_range(0..m.len());
        let len = rng.gen_range(1..8);
        let orbit = Path::orbit(&m, x);
        let w = Path::finite((0..len).map(|n| orbit.at(n).unwrap()).collect());
        let below: Vec<usize> = m.space.downset(x).ones().collect();
        let v0 = *below.choose(&mut rng).unwrap();
        match extend_path_below(&q, &w, v0, len) {
            Ok(v) if v.at(0) == Some(v0) && v.is_path_in(&q) && v.is_below_n(&w, len - 1, &m.space) => {}
            _ => failures += 1,
        }
    }
    verdict(
        7,
        "extend_path_below",
        failures,
        "1000 random (quasimodel, path, v0) triples".into(),
        start,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_08_efficient_paths_are_finite() {
    let start = Instant::now();
    let vs = vars(&["p"]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = 0usize;
    let mut spaces = 0usize;
    let mut prunings = 0usize;
    let mut largest = 0usize;
    while spaces < 100 {
        let phi = FormulaSet::singleton(random_formula(&mut rng, &vs, 2));
        let space = enumerate_states(
            &phi,
            0,
            Caps {
                max_worlds: 3,
                max_states: 200,
            },
        );
        if space.is_empty() || space.len() > 200 {
            continue;
        }
        spaces += 1;
        largest = largest.max(space.len());
        for s in 0..space.len() {
            let e = efficient_paths(&space, s);
            prunings += e.pruned.len();
            if e.truncated || !e.pruned.iter().all(|p| verify_pruning(&space, p)) {
                failures += 1;
            }
        }
    }
    verdict(
        8,
        "efficient paths terminate, prunings verify",
        failures,
        format!("{spaces} spaces (largest {largest} states), searched from every state, {prunings} prunings"),
        start,
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_09_satisfy_is_sound() {
    let start = Instant::now();
    let vs = vars(&["p", "q"]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut models = RandomModels::new(3, &vs, 9);
    let cfg = SatConfig::default();
    let mut failures = 0usize;
    let mut sat = 0usize;
    for i in 0..100 {
        let m = models.sample();
        let psi = random_formula(&mut rng, &vs, 2);
        let x = rng.gen_range(0..m.len());
        let phi = type_of_world(&m, &FormulaSet::singleton(psi), x).conj();
        let mut oracle = ModelSearchOracle::new(i);
        let report = satisfy(&phi, &cfg, &mut oracle);
        match (report.verdict, verify_report(&report)) {
            (SatVerdict::Satisfiable, Ok(())) => sat += 1,
            (v, r) => {
                println!("not certified: {phi} {v:?} {r:?} {:?}", report.notes);
                failures += 1;
            }
        }
    }
    let empty = ["p & ~p", "q & p & ~q", "(p & ~p) | (q & ~q)", "<>p & ~<>p", "X p & ~X p", "G q & ~q"];
    let mut rejected = 0usize;
    for text in empty {
        let phi = parse(text).unwrap();
        let report = satisfy(&phi, &cfg, &mut ModelSearchOracle::new(0));
        if report.verdict == SatVerdict::NoWitnessFound && report.candidates == 0 {
            rejected += 1;
        } else {
            println!("expected no witness: {text}");
            failures += 1;
        }
    }
    verdict(
        9,
        "satisfy",
        failures,
        format!("{sat}/100 satisfiable-by-construction certified, {rejected}/{} type-empty formulas without witness", empty.len()),
        start,
        Duration::from_secs(600),
    );
}

fn corpus() -> Vec<(String, ProofJson)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus/proofs");
    let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p.file_name().unwrap().to_string_lossy().into_owned(), serde_json::from_str(&text).unwrap())
        })
        .collect()
}

const NEC: [&str; 3] = ["NecBox", "NecNext", "NecHence"];

/// The single-step edits that apply to `s`, the step numbered `number`.
fn mutations(s: &StepJson, number: usize) -> Vec<StepJson> {
    let mut out = Vec::new();
    let mut m = s.clone();
    m.formula = format!("~({})", s.formula);
    out.push(m);
    if let Some(refs) = &s.refs {
        let mut m = s.clone();
        let mut r = refs.clone();
        r[0] = number;
        m.refs = Some(r);
        out.push(m);
        if refs.len() == 2 {
            let mut m = s.clone();
            m.refs = Some(vec![refs[1], refs[0]]);
            out.push(m);
        }
    }
    if let Some(name) = &s.name {
        let schema: Schema = name.parse().unwrap();
        let ix = Schema::ALL.iter().position(|&x| x == schema).unwrap();
        let mut m = s.clone();
        m.name = Some(Schema::ALL[(ix + 1) % Schema::ALL.len()].name().to_string());
        out.push(m);
    }
    if let Some(inst) = &s.inst {
        let mut m = s.clone();
        let mut inst = inst.clone();
        let (k, v) = inst.iter_mut().next().unwrap();
        if k == "Gamma" {
            v.as_array_mut().unwrap().push("r".into());
        } else {
            *v = format!("~({})", v.as_str().unwrap()).into();
        }
        m.inst = Some(inst);
        out.push(m);
    }
    if let Some(sub) = &s.subst {
        let mut m = s.clone();
        let mut sub = sub.clone();
        let v = sub.values_mut().next().unwrap();
        *v = format!("~({v})");
        m.subst = Some(sub);
        out.push(m);
    }
    if let Some(ix) = NEC.iter().position(|&r| r == s.rule) {
        let mut m = s.clone();
        m.rule = NEC[(ix + 1) % 3].to_string();
        out.push(m);
    }
    out
}

fn accepted(p: &ProofJson) -> bool {
    p.to_proof().map(|p| check_proof(&p).is_ok()).unwrap_or(false)
}

#[test]
fn criterion_10_proof_corpus_and_mutations() {
    let start = Instant::now();
    let proofs = corpus();
    let mut failures = 0usize;
    let mut rules = BTreeMap::new();
    let mut schemas = BTreeMap::new();
    for (name, pj) in &proofs {
        let p = pj.to_proof().unwrap();
        if let Err(e) = check_proof(&p) {
            println!("{name} rejected: {e}");
            failures += 1;
        }
        for s in &p.steps {
            *rules.entry(s.justification.rule_name()).or_insert(0) += 1;
            if let Justification::Axiom(schema, _) = &s.justification {
                *schemas.entry(*schema).or_insert(0) += 1;
            }
        }
    }
    let covered = schemas.len() == Schema::ALL.len() && rules.len() == 6;
    failures += usize::from(!covered) + usize::from(proofs.len() != 20);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut rejected = 0usize;
    for _ in 0..200 {
        let (name, pj) = proofs.choose(&mut rng).unwrap();
        let k = rng.gen_range(0..pj.steps.len());
        let options = mutations(&pj.steps[k], k + 1);
        let mut bad = pj.clone();
        bad.steps[k] = options.choose(&mut rng).unwrap().clone();
        if accepted(&bad) {
            println!("mutation of {name} step {} accepted", k + 1);
            failures += 1;
        } else {
            rejected += 1;
        }
    }
    verdict(
        10,
        "proof checker",
        failures,
        format!(
            "{} corpus proofs, {} schemata and {} rules covered, {rejected}/200 mutations rejected",
            proofs.len(),
            schemas.len(),
            rules.len()
        ),
        start,
        Duration::from_secs(10),
    );
}
