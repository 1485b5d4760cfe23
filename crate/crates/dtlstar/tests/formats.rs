use dtlstar::core::quasimodel::quasimodel_of_model;
use dtlstar::core::semantics::ExhaustiveModels;
use dtlstar::core::statespace::{enumerate_states, Caps};
use dtlstar::core::FormulaSet;
use dtlstar::formats::{formula, FormatError, ModelJson, ProofJson, QuasimodelJson, StateJson};
use std::fs;
use std::path::Path;

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[test]
fn example_model_loads() {
    let text = r#"{"worlds":["a","b"],"order":[["b","a"]],"f":{"a":"a","b":"b"},"val":{"p":["b"]}}"#;
    let json: ModelJson = serde_json::from_str(text).unwrap();
    let m = json.to_model().unwrap();
    assert_eq!(m.space.len(), 2);
    let ext = m.eval(&formula("<>p").unwrap());
    assert_eq!(ext.ones().collect::<Vec<_>>(), vec![0, 1]);
    let ext = m.eval(&formula("[]p").unwrap());
    assert_eq!(ext.ones().collect::<Vec<_>>(), vec![1]);
}

#[test]
fn non_monotone_map_is_rejected() {
    let text = r#"{"worlds":["a","b"],"order":[["b","a"]],"f":{"a":"b","b":"a"}}"#;
    let json: ModelJson = serde_json::from_str(text).unwrap();
    assert!(matches!(json.to_model(), Err(FormatError::Model(_))));
}

#[test]
fn missing_and_unknown_worlds_are_named() {
    let missing: ModelJson = serde_json::from_str(r#"{"worlds":["a","b"],"f":{"a":"a"}}"#).unwrap();
    assert!(matches!(missing.to_model(), Err(FormatError::MissingImage(w)) if w == "b"));
    let unknown: ModelJson = serde_json::from_str(r#"{"worlds":["a"],"f":{"a":"c"}}"#).unwrap();
    assert!(matches!(unknown.to_model(), Err(FormatError::UnknownWorld(w)) if w == "c"));
}

#[test]
fn models_round_trip() {
    for m in ExhaustiveModels::new(3, &vars(&["p", "q"])).unwrap().step_by(7) {
        let json = ModelJson::from_model(&m);
        let text = serde_json::to_string(&json).unwrap();
        let back: ModelJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_model().unwrap(), m);
    }
}

#[test]
fn states_round_trip() {
    let phi: FormulaSet = ["<>p", "X p", "F q"].iter().map(|t| formula(t).unwrap()).collect();
    let space = enumerate_states(&phi, 1, Caps { max_worlds: 2, max_states: 400 });
    assert!(!space.is_empty());
    for s in &space.states {
        let json = StateJson::from_state(s);
        let back: StateJson = serde_json::from_str(&serde_json::to_string(&json).unwrap()).unwrap();
        assert_eq!(&back.to_state().unwrap(), s);
    }
}

#[test]
fn quasimodels_round_trip() {
    let phi: FormulaSet = ["<>p", "G p", "p U q"].iter().filter_map(|t| formula(t).ok()).collect();
    for m in ExhaustiveModels::new(2, &vars(&["p", "q"])).unwrap().step_by(5) {
        let q = quasimodel_of_model(&m, &phi);
        let json = QuasimodelJson::from_quasimodel(&q);
        let back: QuasimodelJson = serde_json::from_str(&serde_json::to_string(&json).unwrap()).unwrap();
        assert_eq!(back.to_quasimodel().unwrap(), q);
    }
}

#[test]
fn corpus_proofs_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/proofs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        let json: ProofJson = serde_json::from_str(&text).unwrap();
        let proof = json.to_proof().unwrap();
        assert_eq!(ProofJson::from_proof(&proof).to_proof().unwrap(), proof);
        seen += 1;
    }
    assert_eq!(seen, 20);
}

#[test]
fn bad_step_reports_its_position() {
    let text = r#"{"steps":[{"formula":"p -> p","rule":"Axiom","name":"Taut"},{"formula":"p","rule":"MP","refs":[1]}]}"#;
    let json: ProofJson = serde_json::from_str(text).unwrap();
    assert!(matches!(json.to_proof(), Err(FormatError::Step { step: 2, .. })));
}
