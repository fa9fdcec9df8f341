//! Symmetry/current pairs: residuals of the defining condition, the
//! determining system for symmetry ansatzes, the bracket of currents with
//! its cross-check against double insertion, and triviality of currents.
//!
//! Side relations (e.g. a field equation satisfied by an opaque function)
//! are applied by rewriting a designated leading formal partial, together
//! with all its higher partials, before zero testing.

use crate::affcalc::{delta0, insert_vertical, lie_derivative_current, same_chart, AffError};
use crate::symexpr::{
    diff, is_zero, normalize, poly_coefficients, Expr, Verdict,
};
use crate::sysdef::{ChartRef, Form0, Form2, VerticalField};

#[derive(thiserror::Error, Debug, Clone)]
pub enum NoetherError {
    #[error(transparent)]
    Aff(#[from] AffError),
    #[error("invalid relation: {0}")]
    BadRelation(String),
    #[error("bracket requires a verified pair: residual `{0}` is nonzero")]
    NotAPair(String),
}

/// A rewrite `lhs -> rhs` whose left side is one formal partial of an
/// opaque function. Higher partials of the left side rewrite to the
/// corresponding derivatives of the right side.
#[derive(Clone, PartialEq, Debug)]
pub struct Relation {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Relation {
    pub fn new(lhs: Expr, rhs: Expr) -> Result<Relation, NoetherError> {
        match &lhs {
            Expr::App(a) if a.args.iter().all(|g| matches!(g, Expr::Sym(_))) => {
                Ok(Relation { lhs, rhs })
            }
            _ => Err(NoetherError::BadRelation(
                "left side must be a formal partial of an opaque function with symbol arguments"
                    .into(),
            )),
        }
    }
}

fn rewrite(e: &Expr, rels: &[Relation], depth: usize) -> Expr {
    if depth == 0 {
        return e.clone();
    }
    match e {
        Expr::App(a) => {
            for r in rels {
                let l = match &r.lhs {
                    Expr::App(l) => l,
                    _ => continue,
                };
                if l.name != a.name
                    || l.args.len() != a.args.len()
                    || l.deriv.len() != a.deriv.len()
                    || !l.args.iter().zip(&a.args).all(|(x, y)| x == y)
                    || !l.deriv.iter().zip(&a.deriv).all(|(x, y)| x <= y)
                {
                    continue;
                }
                let mut out = r.rhs.clone();
                for (k, (da, dl)) in a.deriv.iter().zip(&l.deriv).enumerate() {
                    let var = match &a.args[k] {
                        Expr::Sym(s) => s.clone(),
                        _ => unreachable!("checked at construction"),
                    };
                    for _ in 0..(da - dl) {
                        out = diff(&out, &var);
                    }
                }
                return rewrite(&out, rels, depth - 1);
            }
            e.clone()
        }
        Expr::Sum(ts) => Expr::add(ts.iter().map(|t| rewrite(t, rels, depth)).collect()),
        Expr::Prod(fs) => Expr::mul(fs.iter().map(|f| rewrite(f, rels, depth)).collect()),
        Expr::Pow(b, r) => rewrite(b, rels, depth).pow(r.clone()),
        Expr::Elem(f, a) => Expr::elem(*f, rewrite(a, rels, depth)),
        _ => e.clone(),
    }
}

/// Rewrites by the relations until no left side occurs, then normalizes.
pub fn apply_relations(e: &Expr, rels: &[Relation]) -> Expr {
    if rels.is_empty() {
        return normalize(e);
    }
    normalize(&rewrite(e, rels, 16))
}

/// Residuals of `i_Y omega = delta f`: the pair is a symmetry/current pair
/// iff every `A^i_b` and `B` vanish (modulo declared relations).
#[derive(Clone, Debug)]
pub struct NoetherResidual {
    pub chart: ChartRef,
    /// indexed `[i][b]`: `2 w^i_ab Y^a - d_b f^i`
    pub a: Vec<Vec<Expr>>,
    /// `w_a Y^a - d_i f^i`
    pub b: Expr,
}

impl NoetherResidual {
    /// Labelled nonzero-literal components.
    pub fn items(&self) -> Vec<(String, Expr)> {
        let mut out = Vec::new();
        for (i, row) in self.a.iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                if !e.is_zero_literal() {
                    out.push((
                        format!("A[{}][{}]", self.chart.base[i], self.chart.fiber[b]),
                        e.clone(),
                    ));
                }
            }
        }
        if !self.b.is_zero_literal() {
            out.push(("B".into(), self.b.clone()));
        }
        out
    }
}

pub fn noether_residual(
    omega: &Form2,
    y: &VerticalField,
    f: &Form0,
) -> Result<NoetherResidual, NoetherError> {
    same_chart(&omega.chart, &f.chart)?;
    let chart = &omega.chart;
    let iv = insert_vertical(y, omega)?;
    let df = delta0(f);
    let a = (0..chart.n())
        .map(|i| {
            (0..chart.m())
                .map(|b| normalize(&iv.theta[i][b].clone().sub(df.theta[i][b].clone())))
                .collect()
        })
        .collect();
    // both H slots carry a minus sign, so their difference flips into
    // w_a Y^a - d_i f^i
    let b = normalize(&df.h.clone().sub(iv.h.clone()));
    Ok(NoetherResidual { chart: chart.clone(), a, b })
}

#[derive(Clone, Debug)]
pub struct PairCheck {
    pub verified: bool,
    /// Residual label, reduced expression and verdict for every component
    /// that did not reduce to a zero literal.
    pub items: Vec<(String, Expr, Verdict)>,
}

pub fn is_noether_pair(
    omega: &Form2,
    y: &VerticalField,
    f: &Form0,
    rels: &[Relation],
) -> Result<PairCheck, NoetherError> {
    let res = noether_residual(omega, y, f)?;
    let mut items = Vec::new();
    let mut verified = true;
    for (label, e) in res.items() {
        let r = apply_relations(&e, rels);
        let v = is_zero(&r);
        if !v.is_zero() {
            verified = false;
        }
        items.push((label, r, v));
    }
    Ok(PairCheck { verified, items })
}

/// The residual components with ansatz unknowns kept formal: the PDE system
/// an exact symmetry/current pair must satisfy. With `split` given and the
/// residuals polynomial in those coordinates, each residual is split into
/// its coefficient equations.
pub fn determining_system(
    omega: &Form2,
    y: &VerticalField,
    f: &Form0,
    split: Option<&[String]>,
) -> Result<Vec<(String, Expr)>, NoetherError> {
    let res = noether_residual(omega, y, f)?;
    let mut out = Vec::new();
    for (label, e) in res.items() {
        let e = normalize(&e);
        if e.is_zero_literal() {
            continue;
        }
        match split {
            None => out.push((label, e)),
            Some(vars) => {
                let coeffs = poly_coefficients(&e, vars).map_err(|err| {
                    NoetherError::BadRelation(format!(
                        "residual `{label}` is not polynomial in the split coordinates: {err}"
                    ))
                })?;
                for (m, c) in coeffs {
                    if c.is_zero_literal() {
                        continue;
                    }
                    let mono = if m.is_empty() {
                        "1".to_string()
                    } else {
                        m.iter()
                            .map(|(v, k)| {
                                if *k == 1 {
                                    v.clone()
                                } else {
                                    format!("{v}^{k}")
                                }
                            })
                            .collect::<Vec<_>>()
                            .join("*")
                    };
                    out.push((format!("{label} | {mono}"), c));
                }
            }
        }
    }
    Ok(out)
}

/// `{f1, f2} := L_{Y1} f2`, cross-checked against the double insertion
/// `2 w^i_ab Y2^a Y1^b d^{n-1}x_i` modulo the relations. The two agree for
/// genuine pairs; disagreement means an input pair was not verified.
pub fn poisson_bracket(
    omega: &Form2,
    p1: (&VerticalField, &Form0),
    p2: (&VerticalField, &Form0),
    rels: &[Relation],
) -> Result<Form0, NoetherError> {
    let (y1, _f1) = p1;
    let (_y2, f2) = p2;
    let lie = lie_derivative_current(y1, f2)?;
    let chart = &omega.chart;
    for i in 0..chart.n() {
        let mut ins = Vec::new();
        for a in 0..chart.m() {
            for b in 0..chart.m() {
                ins.push(Expr::mul(vec![
                    Expr::int(2),
                    omega.w_at(i, a, b),
                    p2.0.comps[a].clone(),
                    y1.comps[b].clone(),
                ]));
            }
        }
        let d = apply_relations(&Expr::add(ins).sub(lie.comps[i].clone()), rels);
        if !is_zero(&d).is_zero() {
            return Err(NoetherError::NotAPair(d.to_text()));
        }
    }
    Ok(lie)
}

#[derive(Clone, Debug)]
pub struct TrivialCheck {
    pub verified: bool,
    pub items: Vec<(String, Expr, Verdict)>,
}

/// A current is trivial when it is pulled back from the base: components
/// free of the fiber coordinates and divergence-free (both modulo the
/// relations).
pub fn is_trivial_current(f: &Form0, rels: &[Relation]) -> TrivialCheck {
    let chart = &f.chart;
    let mut items = Vec::new();
    let mut verified = true;
    let fiber: std::collections::BTreeSet<String> = chart.fiber.iter().cloned().collect();
    let mut reduced = Vec::with_capacity(chart.n());
    for (i, c) in f.comps.iter().enumerate() {
        let r = apply_relations(c, rels);
        if r.mentions_any(&fiber) {
            verified = false;
            items.push((
                format!("f[{}] depends on the fiber", chart.base[i]),
                r.clone(),
                Verdict::Nonzero,
            ));
        }
        reduced.push(r);
    }
    let div = apply_relations(
        &Expr::add(
            reduced.iter().enumerate().map(|(i, c)| diff(c, &chart.base[i])).collect(),
        ),
        rels,
    );
    let v = is_zero(&div);
    if !v.is_zero() {
        verified = false;
    }
    items.push(("divergence".into(), div, v));
    TrivialCheck { verified, items }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysdef::parse_system;

    fn kg_model() -> crate::sysdef::SystemModel {
        parse_system(
            r#"
bundle { base: t, x fiber: u, u1, u2 }
declare U(t,x)
declare W(t,x)
const mu
form omega deg 2 {
  w[t; u1, u] = -1
  w[x; u2, u] = 1
  v[u1] = u1
  v[u2] = -u2
  v[u] = -(mu*u)
}
"#,
        )
        .unwrap()
    }

    fn opaque(name: &str) -> Expr {
        Expr::app(name, vec![Expr::sym("t"), Expr::sym("x")])
    }

    /// Y = U d_u + dU/dt d_u1 + dU/dx d_u2 and f^i = g^ij (u d_j U - u_j U)
    /// for the diag(-1, 1) metric.
    fn kg_pair(chart: &ChartRef, name: &str) -> (VerticalField, Form0) {
        let u = opaque(name);
        let y = VerticalField {
            chart: chart.clone(),
            comps: vec![u.clone(), diff(&u, "t"), diff(&u, "x")],
        };
        let ft = Expr::mul(vec![Expr::sym("u"), diff(&u, "t")])
            .sub(Expr::mul(vec![Expr::sym("u1"), u.clone()]))
            .neg();
        let fx = Expr::mul(vec![Expr::sym("u"), diff(&u, "x")])
            .sub(Expr::mul(vec![Expr::sym("u2"), u.clone()]));
        (y, Form0 { chart: chart.clone(), comps: vec![ft, fx] })
    }

    /// d^2 U/dt^2 = d^2 U/dx^2 + mu U
    fn kg_relation(name: &str) -> Relation {
        let u = opaque(name);
        Relation::new(
            diff(&diff(&u, "t"), "t"),
            diff(&diff(&u, "x"), "x").sub(Expr::mul(vec![Expr::sym("mu"), u]).neg()),
        )
        .unwrap()
    }

    #[test]
    fn kg_pair_verifies_with_relation() {
        let model = kg_model();
        let omega = &model.forms2["omega"];
        let (y, f) = kg_pair(&model.chart, "U");
        let rels = [kg_relation("U")];
        let check = is_noether_pair(omega, &y, &f, &rels).unwrap();
        assert!(check.verified, "{:?}", check.items);
        // without the relation, B survives
        let open = is_noether_pair(omega, &y, &f, &[]).unwrap();
        assert!(!open.verified);
    }

    #[test]
    fn perturbed_current_fails() {
        let model = kg_model();
        let omega = &model.forms2["omega"];
        let (y, mut f) = kg_pair(&model.chart, "U");
        f.comps[0] = f.comps[0].clone().sub(Expr::sym("u").neg());
        let rels = [kg_relation("U")];
        let check = is_noether_pair(omega, &y, &f, &rels).unwrap();
        assert!(!check.verified);
    }

    #[test]
    fn base_closed_current_with_zero_field() {
        let model = kg_model();
        let omega = &model.forms2["omega"];
        let y = VerticalField::zero(&model.chart);
        let f = Form0 {
            chart: model.chart.clone(),
            comps: vec![Expr::sym("x"), Expr::sym("t").neg()],
        };
        let check = is_noether_pair(omega, &y, &f, &[]).unwrap();
        assert!(check.verified, "{:?}", check.items);
        assert!(is_trivial_current(&f, &[]).verified);
    }

    #[test]
    fn bracket_matches_display_and_is_antisymmetric() {
        let model = kg_model();
        let omega = &model.forms2["omega"];
        let (y1, f1) = kg_pair(&model.chart, "U");
        let (y2, f2) = kg_pair(&model.chart, "W");
        let rels = [kg_relation("U"), kg_relation("W")];
        let br = poisson_bracket(omega, (&y1, &f1), (&y2, &f2), &rels).unwrap();
        // g^ij (U d_j W - W d_j U)
        let u = opaque("U");
        let w = opaque("W");
        let want_t = Expr::mul(vec![u.clone(), diff(&w, "t")])
            .sub(Expr::mul(vec![w.clone(), diff(&u, "t")]))
            .neg();
        let want_x = Expr::mul(vec![u.clone(), diff(&w, "x")])
            .sub(Expr::mul(vec![w.clone(), diff(&u, "x")]));
        assert!(is_zero(&br.comps[0].clone().sub(want_t)).is_zero());
        assert!(is_zero(&br.comps[1].clone().sub(want_x)).is_zero());
        let rb = poisson_bracket(omega, (&y2, &f2), (&y1, &f1), &rels).unwrap();
        for i in 0..2 {
            let s = normalize(&br.comps[i].clone().sub(rb.comps[i].clone().neg()));
            assert!(is_zero(&s).is_zero(), "component {i}: {}", s.to_text());
        }
        // and the bracket output is a trivial conservation law
        let t = is_trivial_current(&br, &rels);
        assert!(t.verified, "{:?}", t.items);
    }

    #[test]
    fn bracket_rejects_non_pairs() {
        let model = kg_model();
        let omega = &model.forms2["omega"];
        let (y1, f1) = kg_pair(&model.chart, "U");
        let (y2, mut f2) = kg_pair(&model.chart, "W");
        // poison Y2 so the insertion check cannot match L_{Y1} f2
        let y2 = VerticalField {
            chart: model.chart.clone(),
            comps: vec![y2.comps[0].clone().sub(Expr::sym("u")), y2.comps[1].clone(), y2.comps[2].clone()],
        };
        f2.comps[0] = f2.comps[0].clone();
        let rels = [kg_relation("U"), kg_relation("W")];
        let err = poisson_bracket(omega, (&y1, &f1), (&y2, &f2), &rels);
        assert!(matches!(err, Err(NoetherError::NotAPair(_))));
    }

    #[test]
    fn determining_zero_ansatz_is_empty() {
        let model = kg_model();
        let chart = model.chart.clone();
        let omega = crate::sysdef::Form2::zero(&chart);
        let y = VerticalField::zero(&chart);
        let f = Form0::zero(&chart);
        let sys = determining_system(&omega, &y, &f, None).unwrap();
        assert!(sys.is_empty());
    }

    #[test]
    fn determining_splits_over_coordinates() {
        let model = kg_model();
        let omega = &model.forms2["omega"];
        let (y, f) = kg_pair(&model.chart, "U");
        // without the relation the only surviving residual is B, linear in u
        let sys = determining_system(
            omega,
            &y,
            &f,
            Some(&["u".into(), "u1".into(), "u2".into()]),
        )
        .unwrap();
        assert_eq!(sys.len(), 1, "{sys:?}");
        assert!(sys[0].0.starts_with("B"), "{}", sys[0].0);
        // the coefficient is the U field equation up to sign
        let u = opaque("U");
        let eq = diff(&diff(&u, "x"), "x")
            .sub(diff(&diff(&u, "t"), "t"))
            .sub(Expr::mul(vec![Expr::sym("mu"), u]).neg());
        let c = sys[0].1.clone();
        let hit = is_zero(&c.clone().sub(eq.clone())).is_zero()
            || is_zero(&c.sub(eq.neg())).is_zero();
        assert!(hit, "{}", sys[0].1.to_text());
    }

    #[test]
    fn relations_rewrite_higher_partials() {
        let u = opaque("U");
        let rels = [kg_relation("U")];
        // d^3 U/dt^2 dx should reduce via the t-t rewrite
        let e = diff(&diff(&diff(&u, "t"), "t"), "x");
        let want = diff(&diff(&diff(&u, "x"), "x"), "x")
            .sub(Expr::mul(vec![Expr::sym("mu"), diff(&u, "x")]).neg());
        let r = apply_relations(&e, &rels);
        assert!(is_zero(&r.sub(want)).is_zero());
    }
}
