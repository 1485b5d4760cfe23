//! The `dtlstar` command line.
//!
//! Results go to stdout as JSON, diagnostics to stderr. Exit status 0 is
//! success, 1 a negative verdict (the JSON then carries the witness), 2 a
//! usage, file or parse error.

use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dtlstar_core::proofkit::{check_proof, exhaustive_sweep, run_trials, HarnessConfig, SoundnessReport, Violation};
use dtlstar_core::quasimodel::realizing_lasso;
use dtlstar_core::semantics::{ExhaustiveModels, ModelError};
use dtlstar_core::simformula::sim_formula;
use dtlstar_core::simulation::{simulated_points, simulates};
use dtlstar_core::statespace::{
    enumerate_states, satisfy, verify_report, Caps, CountBudget, ModelSearchOracle, Oracle, SatConfig, SatVerdict,
    TrustingOracle,
};
use dtlstar_core::syntax::{formula_length, subformulas, Formula, FormulaSet};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::budget::TimeBudget;
use crate::formats::{
    formula, FormatError, ModelJson, ModelWitnessJson, PathJson, ProofJson, QuasimodelJson, SatReportJson, StateJson,
};

#[derive(Parser, Debug)]
#[command(name = "dtlstar", version, about = "Dynamic topological logic with the tangled modality")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Indent the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    /// Worker threads for commands that can split their work.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Largest number of worlds in enumerated states or models.
    #[arg(long, global = true)]
    cap_worlds: Option<usize>,
    /// Wall-clock limit for oracle searches. Output then depends on timing.
    #[arg(long, global = true)]
    budget_ms: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = OracleKind::ModelSearch)]
    oracle: OracleKind,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    ModelSearch,
    Trusting,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a formula and print its normal form.
    Parse { formula: String },
    /// Extension of a formula in a model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Load a model; with formulas, check that they hold everywhere.
    CheckModel {
        model: PathBuf,
        #[arg(long = "valid")]
        valid: Vec<String>,
    },
    /// Does a state simulate into a model point, or into another state?
    Sim {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, conflicts_with = "target", required_unless_present = "target")]
        model: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// The simulation formula of a state.
    Simformula { state: PathBuf },
    /// Validate a quasimodel and give a realizing lasso from each world.
    QuasimodelCheck { quasimodel: PathBuf },
    /// List models or states.
    Enumerate {
        #[command(subcommand)]
        what: Enumerate,
    },
    /// Search for a witness that a formula is satisfiable.
    Satisfy {
        formula: String,
        /// Most candidate states handed to the oracle.
        #[arg(long, default_value_t = 500)]
        max_candidates: usize,
        /// Most model checks the model-search oracle may make.
        #[arg(long)]
        budget_checks: Option<u64>,
    },
    /// Check a proof file.
    CheckProof { proof: PathBuf },
    /// Check random axiom instances, and optionally every schema exhaustively,
    /// on finite models.
    SoundnessTest {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        max_worlds: usize,
        #[arg(long, default_value_t = 3)]
        max_gamma: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Also sweep all schemata with small Γ over all models with at most
        /// this many worlds.
        #[arg(long)]
        exhaustive: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum Enumerate {
    /// All models with at most `--worlds` worlds, up to isomorphism of the space.
    Models {
        #[arg(long, default_value_t = 2)]
        worlds: usize,
        #[arg(long, value_delimiter = ',', default_value = "p")]
        vars: Vec<String>,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// The states of I_K(Φ), one per isomorphism class.
    States {
        /// Members of Φ; repeat the flag for several.
        #[arg(long = "phi", required = true)]
        phi: Vec<String>,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long)]
        limit: Option<usize>,
    },
}

/// What a run produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Usage(String),
    Verdict(Value, String),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Res = Result<Value, Failure>;

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let pretty = cli.global.pretty;
    let render = |v: &Value| {
        let mut s = if pretty {
            serde_json::to_string_pretty(v)
        } else {
            serde_json::to_string(v)
        }
        .expect("JSON values serialize");
        s.push('\n');
        s
    };
    match dispatch(&cli.global, cli.command) {
        Ok(v) => Outcome { code: 0, stdout: render(&v), stderr: String::new() },
        Err(Failure::Verdict(v, msg)) => Outcome { code: 1, stdout: render(&v), stderr: format!("{msg}\n") },
        Err(Failure::Usage(msg)) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {msg}\n") },
    }
}

fn load<T: DeserializeOwned>(path: &FsPath) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("output types serialize")
}

fn sorted_names(names: impl Iterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = names.collect();
    v.sort();
    v
}

fn dispatch(g: &Global, command: Command) -> Res {
    match command {
        Command::Parse { formula: text } => {
            let f = formula(&text)?;
            let set = FormulaSet::singleton(f.clone());
            Ok(json!({
                "formula": f.to_string(),
                "vars": f.vars().into_iter().collect::<Vec<_>>(),
                "length": formula_length(&set),
                "subformulas": subformulas(&set).iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            }))
        }
        Command::Eval { model, formula: text } => {
            let m = load::<ModelJson>(&model)?.to_model()?;
            let f = formula(&text)?;
            let ext = m.eval(&f);
            Ok(json!({
                "formula": f.to_string(),
                "worlds": sorted_names(ext.ones().map(|w| m.space.name(w).to_string())),
            }))
        }
        Command::CheckModel { model, valid } => {
            let json = load::<ModelJson>(&model)?;
            let m = match json.to_model() {
                Ok(m) => m,
                Err(FormatError::Model(ModelError::NotMonotone(w))) => {
                    let (lower, upper) = (&json.worlds[w.lower], &json.worlds[w.upper]);
                    return Err(Failure::Verdict(
                        json!({"well_formed": false, "not_monotone": {"lower": lower, "upper": upper}}),
                        format!("f is not monotone: {lower} is below {upper} but their images are not"),
                    ));
                }
                Err(e) => return Err(e.into()),
            };
            let mut failures = Vec::new();
            for text in &valid {
                let f = formula(text)?;
                let ext = m.eval(&f);
                let refuting = sorted_names(
                    m.space.worlds().filter(|&w| !ext.contains(w)).map(|w| m.space.name(w).to_string()),
                );
                if !refuting.is_empty() {
                    failures.push(json!({"formula": f.to_string(), "refuted_at": refuting}));
                }
            }
            let out = json!({
                "well_formed": true,
                "worlds": m.len(),
                "height": m.space.height(),
                "width": m.space.width(),
                "failures": failures,
            });
            if failures.is_empty() {
                Ok(out)
            } else {
                Err(Failure::Verdict(out, "some formulas are not valid in the model".into()))
            }
        }
        Command::Sim { state, model, target } => {
            let s = load::<StateJson>(&state)?.to_state()?;
            if let Some(model) = model {
                let m = load::<ModelJson>(&model)?.to_model()?;
                let pts = simulated_points(&s, &m);
                let points = sorted_names(pts.ones().map(|w| m.space.name(w).to_string()));
                let out = json!({"points": points});
                if pts.count_ones(..) == 0 {
                    return Err(Failure::Verdict(out, "the state simulates into no point".into()));
                }
                Ok(out)
            } else {
                let t = load::<StateJson>(target.as_deref().expect("clap requires one"))?.to_state()?;
                match simulates(&s, &t) {
                    Some(r) => {
                        let pairs: Vec<(String, String)> = r
                            .pairs()
                            .map(|(a, b)| (s.space().name(a).to_string(), t.space().name(b).to_string()))
                            .collect();
                        Ok(json!({"simulates": true, "relation": pairs}))
                    }
                    None => Err(Failure::Verdict(
                        json!({"simulates": false}),
                        "no simulation relates the roots".into(),
                    )),
                }
            }
        }
        Command::Simformula { state } => {
            let s = load::<StateJson>(&state)?.to_state()?;
            let f = sim_formula(&s).map_err(|e| Failure::Usage(e.to_string()))?;
            Ok(json!({"formula": f.to_string()}))
        }
        Command::QuasimodelCheck { quasimodel } => {
            let q = load::<QuasimodelJson>(&quasimodel)?.to_quasimodel()?;
            if let Err(v) = q.validate() {
                return Err(Failure::Verdict(
                    json!({"valid": false, "violation": v.to_string()}),
                    format!("not a quasimodel: {v}"),
                ));
            }
            let lassos: Vec<Value> = q
                .space()
                .worlds()
                .map(|w| {
                    let path = realizing_lasso(&q, w).map(|p| PathJson::new(&p, q.space()));
                    json!({"from": q.space().name(w), "lasso": path})
                })
                .collect();
            Ok(json!({"valid": true, "lassos": lassos}))
        }
        Command::Enumerate { what } => enumerate(g, what),
        Command::Satisfy {
            formula: text,
            max_candidates,
            budget_checks,
        } => {
            let f = formula(&text)?;
            let mut cfg = SatConfig {
                max_candidates,
                ..SatConfig::default()
            };
            if let Some(w) = g.cap_worlds {
                cfg.caps.max_worlds = w;
            }
            let mut oracle: Box<dyn Oracle> = match g.oracle {
                OracleKind::Trusting => Box::new(TrustingOracle),
                OracleKind::ModelSearch => {
                    let o = ModelSearchOracle::new(g.seed);
                    Box::new(match (g.budget_ms, budget_checks) {
                        (Some(ms), _) => o.with_budget(Box::new(TimeBudget::millis(ms))),
                        (None, Some(n)) => o.with_budget(Box::new(CountBudget(n))),
                        (None, None) => o,
                    })
                }
            };
            let report = satisfy(&f, &cfg, oracle.as_mut());
            let mut out = to_value(&SatReportJson::new(&report));
            out["verified"] = match verify_report(&report) {
                Ok(()) => Value::Bool(true),
                Err(e) => Value::String(e),
            };
            match report.verdict {
                SatVerdict::Satisfiable => Ok(out),
                SatVerdict::NoWitnessFound => Err(Failure::Verdict(out, "no witness found".into())),
            }
        }
        Command::CheckProof { proof } => {
            let p = load::<ProofJson>(&proof)?.to_proof()?;
            match check_proof(&p) {
                Ok(()) => Ok(json!({
                    "valid": true,
                    "steps": p.steps.len(),
                    "conclusion": p.conclusion().map(Formula::to_string),
                })),
                Err(e) => Err(Failure::Verdict(
                    json!({"valid": false, "step": e.step + 1, "error": e.fault.to_string()}),
                    e.to_string(),
                )),
            }
        }
        Command::SoundnessTest {
            trials,
            max_worlds,
            max_gamma,
            depth,
            exhaustive,
        } => {
            let cfg = HarnessConfig {
                trials,
                max_worlds,
                max_gamma,
                depth,
                seed: g.seed,
                ..HarnessConfig::default()
            };
            let report = parallel_trials(&cfg, g.jobs.max(1));
            let sweep = exhaustive.map(|n| exhaustive_sweep(n, 2));
            let mut out = json!({
                "trials": report.trials,
                "seed": cfg.seed,
                "per_schema": report.per_schema.iter().map(|(k, v)| (k.name().to_string(), *v)).collect::<std::collections::BTreeMap<_, _>>(),
                "rule_applications": report.rule_applications,
                "violations": report.violations.iter().map(violation_json).collect::<Vec<_>>(),
            });
            let mut bad = report.violations.len();
            if let Some(v) = &sweep {
                bad += v.len();
                out["exhaustive"] = json!({
                    "max_worlds": exhaustive,
                    "violations": v.iter().map(violation_json).collect::<Vec<_>>(),
                });
            }
            if bad == 0 {
                Ok(out)
            } else {
                Err(Failure::Verdict(out, format!("{bad} violations")))
            }
        }
    }
}

/// Contiguous chunks, merged in order, so the report does not depend on
/// the number of jobs.
fn parallel_trials(cfg: &HarnessConfig, jobs: usize) -> SoundnessReport {
    let chunk = cfg.trials.div_ceil(jobs).max(1);
    let ranges: Vec<_> = (0..cfg.trials).step_by(chunk).map(|a| a..(a + chunk).min(cfg.trials)).collect();
    let parts: Vec<SoundnessReport> = thread::scope(|s| {
        let handles: Vec<_> = ranges.into_iter().map(|r| s.spawn(move || run_trials(cfg, r))).collect();
        handles.into_iter().map(|h| h.join().expect("trial worker panicked")).collect()
    });
    let mut report = run_trials(cfg, 0..0);
    for p in parts {
        report.merge(p);
    }
    report
}

fn violation_json(v: &Violation) -> Value {
    json!({
        "trial": v.trial,
        "schema": v.schema.name(),
        "formula": v.formula.to_string(),
        "counterexample": ModelWitnessJson::new(&dtlstar_core::statespace::ModelWitness {
            model: v.model.clone(),
            point: v.world,
        }),
    })
}

fn enumerate(g: &Global, what: Enumerate) -> Res {
    match what {
        Enumerate::Models { worlds, vars, limit } => {
            let worlds = g.cap_worlds.map_or(worlds, |c| worlds.min(c));
            let models = ExhaustiveModels::new(worlds, &vars).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut count = 0usize;
            let mut out = Vec::new();
            for m in models {
                if limit.is_none_or(|l| out.len() < l) {
                    out.push(to_value(&ModelJson::from_model(&m)));
                }
                count += 1;
            }
            Ok(json!({"count": count, "models": out}))
        }
        Enumerate::States { phi, k, limit } => {
            let set: FormulaSet = phi.iter().map(|t| formula(t)).collect::<Result<_, _>>()?;
            let mut caps = Caps::default();
            if let Some(w) = g.cap_worlds {
                caps.max_worlds = w;
            }
            let space = enumerate_states(&set, k, caps);
            let states: Vec<Value> = space
                .states
                .iter()
                .take(limit.unwrap_or(usize::MAX))
                .map(|s| {
                    let n = s.norm();
                    let mut v = to_value(&StateJson::from_state(s));
                    v["norm"] = json!({"hgt": n.hgt, "wdt": n.wdt, "nrm": n.nrm});
                    v
                })
                .collect();
            Ok(json!({
                "count": space.len(),
                "truncated": space.truncated(),
                "states": states,
            }))
        }
    }
}
