//! JSON file formats for models, states, quasimodels and proofs.
//!
//! Worlds are referred to by id. An `order` pair `[a, b]` means `a ≼ b`;
//! pairs are closed reflexively and transitively on load. Proof references
//! are 1-based.

use std::collections::BTreeMap;

use dtlstar_core::preorder::{world_set, Preorder, PreorderError, Relation};
use dtlstar_core::proofkit::{Instantiation, Justification, ProofObject, Schema, UnknownSchema};
use dtlstar_core::quasimodel::{Path, Quasimodel};
use dtlstar_core::semantics::{DynModel, ModelError};
use dtlstar_core::statespace::{Fragment, ModelWitness, SatReport, SatVerdict};
use dtlstar_core::syntax::{parse, Formula, FormulaSet, ParseError};
use dtlstar_core::typing::{State, StateError, TypeSet, TypedPreorder};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown world {0:?}")]
    UnknownWorld(String),
    #[error("{0}")]
    Preorder(#[from] PreorderError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    State(#[from] StateError),
    #[error("cannot parse {text:?}: {error}")]
    Formula { text: String, error: ParseError },
    #[error("{0}")]
    Schema(#[from] UnknownSchema),
    #[error("f has no image for world {0:?}")]
    MissingImage(String),
    #[error("world {0:?} has no type")]
    MissingType(String),
    #[error("step {step}: {message}")]
    Step { step: usize, message: String },
}

pub fn formula(text: &str) -> Result<Formula, FormatError> {
    parse(text).map_err(|error| FormatError::Formula {
        text: text.to_string(),
        error,
    })
}

fn formulas(texts: &[String]) -> Result<Vec<Formula>, FormatError> {
    texts.iter().map(|t| formula(t)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelJson {
    pub worlds: Vec<String>,
    #[serde(default)]
    pub order: Vec<(String, String)>,
    pub f: BTreeMap<String, String>,
    #[serde(default)]
    pub val: BTreeMap<String, Vec<String>>,
}

fn index_of(worlds: &[String], name: &str) -> Result<usize, FormatError> {
    worlds
        .iter()
        .position(|w| w == name)
        .ok_or_else(|| FormatError::UnknownWorld(name.to_string()))
}

fn preorder(worlds: &[String], le: &[(String, String)]) -> Result<Preorder, FormatError> {
    let pairs = le
        .iter()
        .map(|(a, b)| Ok((index_of(worlds, a)?, index_of(worlds, b)?)))
        .collect::<Result<Vec<_>, FormatError>>()?;
    Ok(Preorder::from_named_pairs(worlds.to_vec(), &pairs)?)
}

/// Every strict pair; reloading closes them back to the same order.
fn order_pairs(p: &Preorder) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for w in p.worlds() {
        for v in p.downset(w).ones() {
            if v != w {
                out.push((p.name(v).to_string(), p.name(w).to_string()));
            }
        }
    }
    out
}

impl ModelJson {
    pub fn to_model(&self) -> Result<DynModel, FormatError> {
        let space = preorder(&self.worlds, &self.order)?;
        for w in self.f.keys() {
            index_of(&self.worlds, w)?;
        }
        let map = self
            .worlds
            .iter()
            .map(|w| {
                let image = self.f.get(w).ok_or_else(|| FormatError::MissingImage(w.clone()))?;
                index_of(&self.worlds, image)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = self.worlds.len();
        let mut val = BTreeMap::new();
        for (var, ws) in &self.val {
            let ix = ws.iter().map(|w| index_of(&self.worlds, w)).collect::<Result<Vec<_>, _>>()?;
            val.insert(var.clone(), world_set(n, ix));
        }
        Ok(DynModel::new(space, map, val)?)
    }

    pub fn from_model(m: &DynModel) -> Self {
        let name = |w: usize| m.space.name(w).to_string();
        ModelJson {
            worlds: m.space.names().to_vec(),
            order: order_pairs(&m.space),
            f: m.map.iter().enumerate().map(|(w, &v)| (name(w), name(v))).collect(),
            val: m
                .val
                .iter()
                .map(|(k, s)| (k.clone(), s.ones().map(name).collect()))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateJson {
    pub worlds: Vec<String>,
    #[serde(default)]
    pub order: Vec<(String, String)>,
    pub types: BTreeMap<String, Vec<String>>,
    pub root: String,
}

fn types_of(worlds: &[String], types: &BTreeMap<String, Vec<String>>) -> Result<Vec<TypeSet>, FormatError> {
    for w in types.keys() {
        index_of(worlds, w)?;
    }
    worlds
        .iter()
        .map(|w| {
            let t = types.get(w).ok_or_else(|| FormatError::MissingType(w.clone()))?;
            Ok(TypeSet::new(formulas(t)?))
        })
        .collect()
}

fn type_map(p: &Preorder, types: &[TypeSet]) -> BTreeMap<String, Vec<String>> {
    types
        .iter()
        .enumerate()
        .map(|(w, t)| (p.name(w).to_string(), type_strings(t)))
        .collect()
}

fn type_strings(t: &TypeSet) -> Vec<String> {
    t.iter().map(|f| f.to_string()).collect()
}

impl StateJson {
    pub fn to_state(&self) -> Result<State, FormatError> {
        let space = preorder(&self.worlds, &self.order)?;
        let types = types_of(&self.worlds, &self.types)?;
        let root = index_of(&self.worlds, &self.root)?;
        Ok(State::new(TypedPreorder::new(space, types), root)?)
    }

    pub fn from_state(s: &State) -> Self {
        StateJson {
            worlds: s.space().names().to_vec(),
            order: order_pairs(s.space()),
            types: type_map(s.space(), &s.base.types),
            root: s.space().name(s.root).to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasimodelJson {
    pub worlds: Vec<String>,
    #[serde(default)]
    pub order: Vec<(String, String)>,
    pub types: BTreeMap<String, Vec<String>>,
    pub step: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<String>>,
}

impl QuasimodelJson {
    pub fn to_quasimodel(&self) -> Result<Quasimodel, FormatError> {
        let space = preorder(&self.worlds, &self.order)?;
        let types = types_of(&self.worlds, &self.types)?;
        let n = self.worlds.len();
        let pairs = self
            .step
            .iter()
            .map(|(a, b)| Ok((index_of(&self.worlds, a)?, index_of(&self.worlds, b)?)))
            .collect::<Result<Vec<_>, FormatError>>()?;
        let phi = match &self.phi {
            Some(texts) => Some(formulas(texts)?.into_iter().collect::<FormulaSet>()),
            None => None,
        };
        Ok(Quasimodel {
            base: TypedPreorder::new(space, types),
            step: Relation::from_pairs(n, n, pairs),
            phi,
        })
    }

    pub fn from_quasimodel(q: &Quasimodel) -> Self {
        let p = q.space();
        QuasimodelJson {
            worlds: p.names().to_vec(),
            order: order_pairs(p),
            types: type_map(p, &q.base.types),
            step: q
                .step
                .pairs()
                .map(|(a, b)| (p.name(a).to_string(), p.name(b).to_string()))
                .collect(),
            phi: q.phi.as_ref().map(|s| s.iter().map(|f| f.to_string()).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepJson {
    pub formula: String,
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Letters map to formula strings; `Gamma` maps to a list of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inst: Option<BTreeMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subst: Option<BTreeMap<String, String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofJson {
    pub steps: Vec<StepJson>,
}

fn step_error(step: usize, message: impl Into<String>) -> FormatError {
    FormatError::Step {
        step,
        message: message.into(),
    }
}

fn instantiation(step: usize, inst: &BTreeMap<String, Value>) -> Result<Instantiation, FormatError> {
    let mut out = Instantiation::new();
    for (k, v) in inst {
        if k == "Gamma" {
            let items = v
                .as_array()
                .ok_or_else(|| step_error(step, "Gamma must be a list of formulas"))?
                .iter()
                .map(|x| x.as_str().map(str::to_string))
                .collect::<Option<Vec<String>>>()
                .ok_or_else(|| step_error(step, "Gamma must be a list of formulas"))?;
            out = out.gamma(formulas(&items)?);
        } else {
            let text = v
                .as_str()
                .ok_or_else(|| step_error(step, format!("letter {k} must be a formula")))?;
            out = out.letter(k, formula(text)?);
        }
    }
    Ok(out)
}

impl ProofJson {
    pub fn to_proof(&self) -> Result<ProofObject, FormatError> {
        let mut p = ProofObject::new();
        for (i, s) in self.steps.iter().enumerate() {
            let number = i + 1;
            let f = formula(&s.formula)?;
            let refs = s.refs.clone().unwrap_or_default();
            let need = |k: usize| -> Result<Vec<usize>, FormatError> {
                if refs.len() != k {
                    return Err(step_error(number, format!("{} needs {k} reference(s)", s.rule)));
                }
                refs.iter()
                    .map(|&r| {
                        if r == 0 {
                            Err(step_error(number, "references are 1-based"))
                        } else {
                            Ok(r - 1)
                        }
                    })
                    .collect()
            };
            let j = match s.rule.as_str() {
                "Axiom" => {
                    let name = s.name.as_deref().ok_or_else(|| step_error(number, "Axiom needs a name"))?;
                    let schema: Schema = name.parse()?;
                    let inst = match &s.inst {
                        Some(m) => instantiation(number, m)?,
                        None => Instantiation::new(),
                    };
                    Justification::Axiom(schema, inst)
                }
                "MP" => {
                    let r = need(2)?;
                    Justification::Mp(r[0], r[1])
                }
                "Subs" => {
                    let r = need(1)?;
                    let sigma = s
                        .subst
                        .as_ref()
                        .ok_or_else(|| step_error(number, "Subs needs a substitution"))?
                        .iter()
                        .map(|(k, v)| Ok((k.clone(), formula(v)?)))
                        .collect::<Result<BTreeMap<_, _>, FormatError>>()?;
                    Justification::Subs(r[0], sigma)
                }
                "NecBox" => Justification::NecBox(need(1)?[0]),
                "NecNext" => Justification::NecNext(need(1)?[0]),
                "NecHence" => Justification::NecHence(need(1)?[0]),
                other => return Err(step_error(number, format!("unknown rule {other:?}"))),
            };
            p.push(f, j);
        }
        Ok(p)
    }

    pub fn from_proof(p: &ProofObject) -> Self {
        let steps = p
            .steps
            .iter()
            .map(|s| {
                let mut out = StepJson {
                    formula: s.formula.to_string(),
                    rule: s.justification.rule_name().to_string(),
                    name: None,
                    inst: None,
                    refs: None,
                    subst: None,
                };
                match &s.justification {
                    Justification::Axiom(schema, inst) => {
                        out.name = Some(schema.name().to_string());
                        let mut m: BTreeMap<String, Value> = inst
                            .letters
                            .iter()
                            .map(|(k, f)| (k.clone(), Value::String(f.to_string())))
                            .collect();
                        if let Some(g) = &inst.gamma {
                            m.insert(
                                "Gamma".into(),
                                Value::Array(g.iter().map(|f| Value::String(f.to_string())).collect()),
                            );
                        }
                        if !m.is_empty() {
                            out.inst = Some(m);
                        }
                    }
                    Justification::Mp(i, j) => out.refs = Some(vec![i + 1, j + 1]),
                    Justification::Subs(i, sigma) => {
                        out.refs = Some(vec![i + 1]);
                        out.subst = Some(sigma.iter().map(|(k, f)| (k.clone(), f.to_string())).collect());
                    }
                    Justification::NecBox(i) | Justification::NecNext(i) | Justification::NecHence(i) => {
                        out.refs = Some(vec![i + 1])
                    }
                }
                out
            })
            .collect();
        ProofJson { steps }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelWitnessJson {
    pub model: ModelJson,
    pub point: String,
}

impl ModelWitnessJson {
    pub fn new(w: &ModelWitness) -> Self {
        ModelWitnessJson {
            model: ModelJson::from_model(&w.model),
            point: w.model.space.name(w.point).to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PathJson {
    pub worlds: Vec<String>,
    pub loop_start: Option<usize>,
}

impl PathJson {
    pub fn new(p: &Path, space: &Preorder) -> Self {
        PathJson {
            worlds: p.worlds.iter().map(|&w| space.name(w).to_string()).collect(),
            loop_start: p.loop_start,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FragmentJson {
    pub quasimodel: QuasimodelJson,
    /// One state per world of the quasimodel, in order.
    pub states: Vec<StateJson>,
    pub root: String,
    pub lasso: PathJson,
}

impl FragmentJson {
    pub fn new(f: &Fragment) -> Self {
        let space = f.quasimodel.space();
        FragmentJson {
            quasimodel: QuasimodelJson::from_quasimodel(&f.quasimodel),
            states: f.states.iter().map(StateJson::from_state).collect(),
            root: space.name(f.root).to_string(),
            lasso: PathJson::new(&f.lasso, space),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SatReportJson {
    pub verdict: &'static str,
    pub formula: String,
    pub candidates: usize,
    pub judged: usize,
    pub unknown: usize,
    pub truncated: bool,
    pub witness_state: Option<StateJson>,
    pub model: Option<ModelWitnessJson>,
    pub fragment: Option<FragmentJson>,
    pub notes: Vec<String>,
}

impl SatReportJson {
    pub fn new(r: &SatReport) -> Self {
        SatReportJson {
            verdict: match r.verdict {
                SatVerdict::Satisfiable => "Satisfiable",
                SatVerdict::NoWitnessFound => "NoWitnessFound",
            },
            formula: r.formula.to_string(),
            candidates: r.candidates,
            judged: r.judged,
            unknown: r.unknown,
            truncated: r.truncated,
            witness_state: r.witness_state.as_ref().map(StateJson::from_state),
            model: r.model.as_ref().map(ModelWitnessJson::new),
            fragment: r.fragment.as_ref().map(FragmentJson::new),
            notes: r.notes.clone(),
        }
    }
}
