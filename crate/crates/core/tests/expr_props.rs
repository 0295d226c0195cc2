mod common;

use common::{model, MODELS};
use proptest::prelude::*;
use sskr_forge_core::expr::{
    emit_mathml, equivalent, eval, parse_expr, parse_mathml, Domain, Env, EquivError, Expr, Leaf,
};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::sym("x")),
        Just(Expr::sym("y")),
        Just(Expr::var(1)),
        Just(Expr::param(1, 1, 1)),
        (0u32..40).prop_map(|n| Expr::real(n as f64 / 4.0)),
    ]
}

/// Trees that stay real for real bindings.
fn real_tree() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            (inner.clone(), 1u32..4).prop_map(|(a, n)| Expr::pow(a, Expr::real(n as f64))),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::call("sin", vec![a])),
            inner.clone().prop_map(|a| Expr::call("cos", vec![a])),
            inner.clone().prop_map(|a| Expr::call("abs", vec![a])),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::call("H", vec![a, b])),
        ]
    })
}

/// Adds branches that leave the real line.
fn tree() -> impl Strategy<Value = Expr> {
    prop_oneof![
        3 => real_tree(),
        1 => real_tree().prop_map(|a| Expr::call("sqrt", vec![a])),
        1 => real_tree().prop_map(|a| Expr::mul(a, parse_expr("2-3*i").unwrap())),
    ]
}

fn all_leaves(e: &Expr) -> Vec<Leaf> {
    let mut leaves = e.free_symbols();
    leaves.sort();
    leaves
}

fn roundtrip_equivalent(e: &Expr) {
    let back = parse_mathml(&emit_mathml(e).unwrap()).unwrap();
    match equivalent(e, &back, &Domain::default(), 200, 1e-9, 3) {
        Ok(v) => assert!(v.is_equivalent(), "{e} vs {back}: {v:?}"),
        Err(EquivError::ExhaustedSamples { .. }) => {}
        Err(other) => panic!("{e}: {other}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn printing_reaches_a_fixed_point(e in tree()) {
        let once = e.to_string();
        let twice = parse_expr(&once).unwrap().to_string();
        prop_assert_eq!(parse_expr(&twice).unwrap().to_string(), twice.clone());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn mathml_round_trip_is_equivalent(e in tree()) {
        roundtrip_equivalent(&e);
    }

    #[test]
    fn outcome_is_symmetric(a in real_tree(), b in real_tree(), seed in 0u64..1000) {
        // Padding each side with a zero multiple of the other aligns the symbol sets.
        let zero = |e: &Expr| Expr::mul(Expr::real(0.0), e.clone());
        let (a, b) = (Expr::add(a.clone(), zero(&b)), Expr::add(b.clone(), zero(&a)));
        prop_assert_eq!(all_leaves(&a), all_leaves(&b));
        let d = Domain::default();
        let ab = equivalent(&a, &b, &d, 50, 1e-9, seed).map(|v| v.is_equivalent());
        let ba = equivalent(&b, &a, &d, 50, 1e-9, seed).map(|v| v.is_equivalent());
        prop_assert_eq!(ab.is_ok(), ba.is_ok());
        if let (Ok(x), Ok(y)) = (ab, ba) {
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn real_trees_have_negligible_imaginary_part(e in real_tree(), x in -10.0..10.0f64, y in -10.0..10.0f64) {
        let env = Env::new().symbol("x", x).symbol("y", y).var(1, x * 0.5).param(sskr_forge_core::expr::ParamRef::new(1, 1, 1), y * 0.5);
        if let Ok(z) = eval(&e, &env) {
            if z.re.is_finite() {
                prop_assert!(z.im.abs() <= 1e-12 * (1.0 + z.re.abs()), "{} -> {}", e, z);
            }
        }
    }

    #[test]
    fn identical_trees_are_equivalent(e in real_tree(), seed in any::<u64>()) {
        match equivalent(&e, &e, &Domain::default(), 20, 1e-9, seed) {
            Ok(v) => prop_assert!(v.is_equivalent()),
            Err(EquivError::ExhaustedSamples { .. }) => {}
            Err(other) => prop_assert!(false, "{}", other),
        }
    }
}

#[test]
fn mathml_round_trip_on_every_mrs_form() {
    for name in MODELS {
        for row in &model(name).mrs.rows {
            for form in row.forms() {
                roundtrip_equivalent(form);
            }
        }
    }
}

#[test]
fn euler_form_of_sine() {
    let lhs = parse_expr("sin(x)").unwrap();
    let rhs = parse_expr("(e^(i*x)-e^(-i*x))/(2*i)").unwrap();
    let v = equivalent(&lhs, &rhs, &Domain::uniform(-10.0, 10.0), 1000, 1e-9, 1).unwrap();
    assert!(v.is_equivalent());
    let at = Env::new().symbol("x", std::f64::consts::FRAC_PI_2);
    let z = eval(&rhs, &at).unwrap();
    assert!((z.re - 1.0).abs() < 1e-12 && z.im.abs() < 1e-12);

    let off = parse_expr("sin(x)+0.001*x").unwrap();
    let v = equivalent(&lhs, &off, &Domain::default(), 1000, 1e-9, 1).unwrap();
    let w = v.witness().expect("witness");
    assert!((w.left - w.right).norm() > 1e-9 * w.left.norm().max(1.0));
    assert_eq!(equivalent(&lhs, &off, &Domain::default(), 1000, 1e-9, 1).unwrap(), v);
}

#[test]
fn free_symbols_of_row_one() {
    let s = model("bucky.sskr.json");
    let leaves = s.mrs.rows[0].primary.free_symbols();
    let shown: Vec<String> = leaves.iter().map(|l| l.to_string()).collect();
    assert_eq!(shown, ["p(1,1,1)", "v(1)", "v(3)", "v(4)", "v(5)"]);
}
