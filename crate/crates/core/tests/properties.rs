//! Property tests for the symbolic layer and the document round trip.

mod common;

use common::*;
use pdham_kit::symexpr::{diff, normalize, Expr};
use pdham_kit::sysdef::{parse_system, render_model, Format};
use proptest::prelude::*;

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-4i64..=4).prop_map(Expr::int),
        prop_oneof![Just("x"), Just("y"), Just("u"), Just("v")].prop_map(Expr::sym),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Expr::add),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Expr::mul),
            (inner.clone(), 1i64..=3).prop_map(|(e, k)| e.powi(k)),
        ]
    })
}

proptest! {
    #[test]
    fn normalize_is_idempotent(e in arb_expr()) {
        let once = normalize(&e);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn diff_is_linear(a in arb_expr(), b in arb_expr()) {
        let lhs = diff(&a.clone().sub(b.clone().neg()), "x");
        let rhs = diff(&a, "x").sub(diff(&b, "x").neg());
        assert_exact_zero(&lhs.sub(rhs), "linearity");
    }

    #[test]
    fn diff_satisfies_leibniz(a in arb_expr(), b in arb_expr()) {
        let lhs = diff(&Expr::mul(vec![a.clone(), b.clone()]), "x");
        let rhs = Expr::mul(vec![diff(&a, "x"), b.clone()])
            .sub(Expr::mul(vec![a, diff(&b, "x")]).neg());
        assert_exact_zero(&lhs.sub(rhs), "Leibniz rule");
    }

    #[test]
    fn mixed_partials_commute(e in arb_expr()) {
        let xy = diff(&diff(&e, "x"), "y");
        let yx = diff(&diff(&e, "y"), "x");
        assert_exact_zero(&xy.sub(yx), "mixed partials");
    }
}

/// Rendering a parsed document back to text and reparsing it must preserve
/// every declared form, field, current, and constraint up to normalization.
#[test]
fn render_parse_round_trip() {
    for name in [
        "wave.pdh",
        "wave_quad.pdh",
        "wave_bad.pdh",
        "kg.pdh",
        "minimal.pdh",
        "string.pdh",
        "dw.pdh",
        "toy_inconsistent.pdh",
        "maxwell_n2.pdh",
        "maxwell_n3.pdh",
        "maxwell_n4.pdh",
        "maxwell_red_n2.pdh",
        "maxwell_red_n3.pdh",
        "maxwell_red_n4.pdh",
    ] {
        let model = load(name);
        let text = render_model(&model, Format::Text);
        let back = parse_system(&text).unwrap_or_else(|d| panic!("{name} reparse: {d:?}"));
        assert_eq!(model.chart.base, back.chart.base, "{name}: base coordinates");
        assert_eq!(model.chart.fiber, back.chart.fiber, "{name}: fiber coordinates");
        for (label, omega) in &model.forms2 {
            let other = &back.forms2[label];
            assert!(forms2_match(omega, other), "{name}: form {label}");
        }
        for (label, theta) in &model.forms1 {
            let other = &back.forms1[label];
            for i in 0..model.chart.n() {
                for a in 0..model.chart.m() {
                    assert_same(
                        &theta.theta[i][a],
                        &other.theta[i][a],
                        &format!("{name}: form {label} component"),
                    );
                }
            }
            assert_same(&theta.h, &other.h, &format!("{name}: form {label} density"));
        }
        for (label, y) in &model.fields {
            let other = &back.fields[label];
            for a in 0..model.chart.m() {
                assert_same(&y.comps[a], &other.comps[a], &format!("{name}: field {label}"));
            }
        }
        for (label, f) in &model.forms0 {
            let other = &back.forms0[label];
            for i in 0..model.chart.n() {
                assert_same(&f.comps[i], &other.comps[i], &format!("{name}: current {label}"));
            }
        }
        assert_eq!(model.maps.len(), back.maps.len(), "{name}: map count");
        let n_con = |m: &pdham_kit::sysdef::SystemModel| {
            m.constraints.as_ref().map_or(0, |c| c.exprs.len())
        };
        assert_eq!(n_con(&model), n_con(&back), "{name}: constraint count");
    }
}
