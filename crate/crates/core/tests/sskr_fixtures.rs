mod common;

use common::{fixture, grid, model, rows, MODELS};
use sskr_forge_core::expr::{parse_expr, ParamRef};
use sskr_forge_core::sskr::{load, save, validate, LoadError, Sskr};

pub const BUCKY_MRM: &[&str] = &[
    "beta 0 1 1 1 0 0 0",
    "beta sigma 1 1 1 0 0 0",
    "0 alpha,sigma gamma 0 0 0 0 0",
    "0 alpha,sigma,eta 0 gamma 0 0 0 0",
    "0 alpha,sigma,eta,tau 0 0 gamma 0 0 0",
    "0 0 0 0 gamma tau 0 0",
    "0 0 gamma gamma 0 tau,phi 0 0",
    "0 0 0 0 0 tau,phi 0 0",
];

#[test]
fn bucky_matrix_is_reproduced() {
    let s = model("bucky.sskr.json");
    let ids: Vec<&str> = s.variables.iter().map(|v| v.id.as_str()).collect();
    assert_eq!(ids, ["S", "E", "Ia", "Im", "Ih", "Rh", "R", "D"]);
    assert_eq!(s.mrm.rows.len(), 8);
    assert_eq!(grid(&s), rows(BUCKY_MRM));
}

#[test]
fn bucky_mkm_example() {
    let s = model("bucky.sskr.json");
    assert_eq!(s.mkm.refs[&ParamRef::new(3, 2, 1)], vec![2, 3]);
    assert_eq!(s.mkm.items[2], "α=0.37");
    assert_eq!(s.param_id(ParamRef::new(3, 2, 1)), Some("alpha"));
}

#[test]
fn every_fixture_validates() {
    for name in MODELS {
        let report = validate(&model(name));
        assert!(!report.has_errors(), "{name}:\n{report}");
    }
}

#[test]
fn every_fixture_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    for name in MODELS {
        let s = model(name);
        let path = dir.path().join(name);
        save(&s, &path).unwrap();
        assert_eq!(load(&path).unwrap(), s, "{name}");
    }
}

#[test]
fn mrs_row_one_parses_to_the_stored_tree() {
    let s = model("bucky.sskr.json");
    assert_eq!(s.mrs.rows[0].primary, parse_expr("-p(1,1,1)*v(1)*(v(3)+v(4)+v(5))").unwrap());
}

#[test]
fn reference_into_zero_cell_names_it() {
    let mut s = model("bucky.sskr.json");
    s.mrs.rows[0].primary = parse_expr("-p(1,2,1)*v(1)").unwrap();
    let report = validate(&s);
    let errors: Vec<_> = report.errors().collect();
    assert_eq!(errors.len(), 1, "{report}");
    assert!(errors[0].message.contains("(1,2)"), "{}", errors[0]);
}

#[test]
fn empty_model_warns_only() {
    let report = validate(&Sskr::default());
    assert!(!report.has_errors());
    assert_eq!(report.warnings().map(|w| w.message.as_str()).collect::<Vec<_>>(), ["empty model"]);
}

#[test]
fn propositions() {
    let s = model("bucky.sskr.json");
    let props = s.to_propositions();
    assert_eq!(props.len(), 8);
    assert_eq!(props[2], "dIa/dt is determined by {E via alpha,sigma; Ia via gamma}");
    assert_eq!(props[0], "dS/dt is determined by {S via beta; Ia; Im; Ih}");
}

#[test]
fn misspelled_marker_in_file_is_located() {
    let text = std::fs::read_to_string(fixture("bucky.sskr.json")).unwrap();
    let broken = text.replacen("[0, 0, 0, 0, 0, [\"tau\", \"phi\"], 0, 0]", "[0, 0, 0, 0, 0, [\"tau\", \"phi\"], \"nul\", 0]", 1);
    assert_ne!(broken, text);
    match Sskr::from_json(&broken) {
        Err(LoadError::Schema { pointer, .. }) => assert_eq!(pointer, "/mrm/cells/7/6"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn vj_variant_carries_v_in_tuples() {
    let s = model("bucky_vj.sskr.json");
    assert_eq!(grid(&s)[3][1], "alpha,sigma,eta,v");
    assert_eq!(grid(&s)[4][1], "alpha,sigma,eta,tau,v");
}
