//! Verification-based reduction: pull a candidate reduced 2-form back along
//! a user-supplied bundle morphism (over the identity on the base) and
//! certify the characterizing identities of the reduction theorem.

use crate::affcalc::{same_chart, AffError};
use crate::pdham::{kernel_full, PdError};
use crate::symexpr::{diff, is_zero, normalize, substitute, Expr, Verdict};
use crate::sysdef::{BundleMap, Form0, Form2};
use std::collections::HashMap;

/// Composition with the map: target fiber coordinates are replaced by the
/// map components; base coordinates pass through unchanged.
fn compose(p: &BundleMap, e: &Expr) -> Expr {
    let bindings: HashMap<String, Expr> = p
        .target
        .fiber
        .iter()
        .cloned()
        .zip(p.comps.iter().cloned())
        .collect();
    substitute(e, &bindings)
}

fn check_bases(p: &BundleMap) -> Result<(), AffError> {
    if p.source.base == p.target.base {
        Ok(())
    } else {
        Err(AffError::ChartMismatch)
    }
}

/// Componentwise composition `f^i = ft^i o p`.
pub fn pullback_form0(p: &BundleMap, ft: &Form0) -> Result<Form0, AffError> {
    same_chart(&ft.chart, &p.target)?;
    check_bases(p)?;
    let comps = ft.comps.iter().map(|e| normalize(&compose(p, e))).collect();
    Ok(Form0 { chart: p.source.clone(), comps })
}

/// Chain rule for the affine 2-form:
/// `(p* wt)^i_ab = (wt^i_AB o p) d_a p^A d_b p^B` and
/// `(p* wt)_a = (wt_A o p) d_a p^A + 2 (wt^i_AB o p) d_a p^A d_i p^B`,
/// with `d_i p^B` the explicit base partial of the map component.
pub fn pullback_form2(p: &BundleMap, wt: &Form2) -> Result<Form2, AffError> {
    same_chart(&wt.chart, &p.target)?;
    check_bases(p)?;
    let src = &p.source;
    let n = src.n();
    let ms = src.m();
    let mt = p.target.m();
    // fiber partials of the map components, indexed [A][a]
    let dfiber: Vec<Vec<Expr>> = (0..mt)
        .map(|cap_a| src.fiber.iter().map(|a| diff(&p.comps[cap_a], a)).collect())
        .collect();
    let dbase: Vec<Vec<Expr>> = (0..mt)
        .map(|cap_a| src.base.iter().map(|i| diff(&p.comps[cap_a], i)).collect())
        .collect();
    let mut out = Form2::zero(src);
    for i in 0..n {
        for a in 0..ms {
            for b in (a + 1)..ms {
                let mut terms = Vec::new();
                for cap_a in 0..mt {
                    for cap_b in 0..mt {
                        terms.push(Expr::mul(vec![
                            compose(p, &wt.w_at(i, cap_a, cap_b)),
                            dfiber[cap_a][a].clone(),
                            dfiber[cap_b][b].clone(),
                        ]));
                    }
                }
                out.add_w(i, a, b, Expr::add(terms));
            }
        }
    }
    for a in 0..ms {
        let mut terms = Vec::new();
        for cap_a in 0..mt {
            terms.push(Expr::mul(vec![
                compose(p, &wt.v[cap_a]),
                dfiber[cap_a][a].clone(),
            ]));
            for i in 0..n {
                for cap_b in 0..mt {
                    terms.push(Expr::mul(vec![
                        Expr::int(2),
                        compose(p, &wt.w_at(i, cap_a, cap_b)),
                        dfiber[cap_a][a].clone(),
                        dbase[cap_b][i].clone(),
                    ]));
                }
            }
        }
        out.v[a] = normalize(&Expr::add(terms));
    }
    Ok(out.normalized())
}

/// The three verdicts of the reduction theorem, with the offending
/// residuals when a check fails.
#[derive(Clone, Debug)]
pub struct ReductionReport {
    /// `p* wt = omega` componentwise.
    pub pullback_matches: bool,
    /// kernel directions of `omega` are vertical for the map.
    pub kernel_projects: bool,
    /// the reduced form has trivial vertical kernel.
    pub target_nondegenerate: bool,
    pub items: Vec<(String, Expr, Verdict)>,
    pub notes: Vec<String>,
}

impl ReductionReport {
    pub fn verified(&self) -> bool {
        self.pullback_matches && self.kernel_projects && self.target_nondegenerate
    }
}

pub fn verify_reduction(
    omega: &Form2,
    p: &BundleMap,
    wt: &Form2,
) -> Result<ReductionReport, PdError> {
    same_chart(&omega.chart, &p.source)?;
    let back = pullback_form2(p, wt)?;
    let chart = &omega.chart;
    let mut items = Vec::new();
    let mut pullback_matches = true;
    for i in 0..chart.n() {
        for a in 0..chart.m() {
            for b in (a + 1)..chart.m() {
                let d = normalize(&back.w_at(i, a, b).sub(omega.w_at(i, a, b)));
                let v = is_zero(&d);
                if !v.is_zero() {
                    pullback_matches = false;
                    items.push((
                        format!(
                            "pullback w[{}; {}, {}]",
                            chart.base[i], chart.fiber[a], chart.fiber[b]
                        ),
                        d,
                        v,
                    ));
                }
            }
        }
    }
    for a in 0..chart.m() {
        let d = normalize(&back.v[a].clone().sub(omega.v[a].clone()));
        let v = is_zero(&d);
        if !v.is_zero() {
            pullback_matches = false;
            items.push((format!("pullback v[{}]", chart.fiber[a]), d, v));
        }
    }
    let kernel = kernel_full(omega, None)?;
    let mut notes = kernel.notes.clone();
    let mut kernel_projects = true;
    for (k, field) in kernel.full.iter().enumerate() {
        for (cap_a, name) in p.target.fiber.iter().enumerate() {
            let push = Expr::add(
                (0..chart.m())
                    .map(|a| {
                        Expr::mul(vec![
                            field.comps[a].clone(),
                            diff(&p.comps[cap_a], &chart.fiber[a]),
                        ])
                    })
                    .collect(),
            );
            let d = normalize(&push);
            let v = is_zero(&d);
            if !v.is_zero() {
                kernel_projects = false;
                items.push((format!("kernel[{k}] moves `{name}`"), d, v));
            }
        }
    }
    let target = kernel_full(wt, None)?;
    notes.extend(target.notes.clone());
    let target_nondegenerate = target.vertical.is_empty();
    if !target_nondegenerate {
        for (k, field) in target.vertical.iter().enumerate() {
            items.push((
                format!("reduced form kernel direction {k}"),
                Expr::add(field.comps.clone()),
                Verdict::Nonzero,
            ));
        }
    }
    Ok(ReductionReport {
        pullback_matches,
        kernel_projects,
        target_nondegenerate,
        items,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysdef::{parse_system, Chart, ChartRef, MapDecl};
    use std::sync::Arc;

    fn wave_model() -> crate::sysdef::SystemModel {
        parse_system(
            r#"
bundle { base: x1, x2 fiber: u, u1, u2 }
declare T(u1,u2)
declare V(u)
form omega deg 2 {
  w[x1; u1, u] = diff(T(u1,u2),u1,u1)
  w[x1; u2, u] = diff(T(u1,u2),u1,u2)
  w[x2; u1, u] = diff(T(u1,u2),u2,u1)
  w[x2; u2, u] = diff(T(u1,u2),u2,u2)
  v[u1] = -(diff(T(u1,u2),u1,u1)*u1 + diff(T(u1,u2),u1,u2)*u2)
  v[u2] = -(diff(T(u1,u2),u2,u1)*u1 + diff(T(u1,u2),u2,u2)*u2)
  v[u]  = -diff(V(u),u)
}
"#,
        )
        .unwrap()
    }

    fn identity_map(chart: &ChartRef) -> BundleMap {
        let decl = MapDecl {
            target_label: "self".into(),
            assigns: chart.fiber.iter().map(|f| (f.clone(), Expr::sym(f))).collect(),
        };
        decl.resolve(chart, chart).unwrap()
    }

    #[test]
    fn identity_pullback_is_identity() {
        let model = wave_model();
        let omega = &model.forms2["omega"];
        let p = identity_map(&model.chart);
        let back = pullback_form2(&p, omega).unwrap();
        for (k, e) in &omega.w {
            let d = normalize(&back.w_at(k.0, k.1, k.2).sub(e.clone()));
            assert!(is_zero(&d).is_zero());
        }
        let report = verify_reduction(omega, &p, omega).unwrap();
        assert!(report.verified(), "{:?}", report.items);
    }

    #[test]
    fn scaling_map_applies_chain_rule() {
        // source (y1, y2) -> target (z1, z2) with z1 = 2 y1, z2 = y2
        let src: ChartRef = Arc::new(Chart {
            base: vec!["x".into()],
            fiber: vec!["y1".into(), "y2".into()],
            ..Default::default()
        });
        let tgt: ChartRef = Arc::new(Chart {
            base: vec!["x".into()],
            fiber: vec!["z1".into(), "z2".into()],
            ..Default::default()
        });
        let p = BundleMap {
            source: src.clone(),
            target: tgt.clone(),
            comps: vec![Expr::mul(vec![Expr::int(2), Expr::sym("y1")]), Expr::sym("y2")],
        };
        let mut wt = Form2::zero(&tgt);
        let g = Expr::mul(vec![Expr::sym("z1"), Expr::sym("z2")]);
        wt.add_w(0, 0, 1, g.clone());
        wt.v[0] = Expr::sym("z2");
        let back = pullback_form2(&p, &wt).unwrap();
        // w picks up the Jacobian product 2*1, v[y1] the factor 2
        let want_w = Expr::mul(vec![
            Expr::int(2),
            Expr::int(2),
            Expr::sym("y1"),
            Expr::sym("y2"),
        ]);
        assert!(is_zero(&back.w_at(0, 0, 1).sub(want_w)).is_zero());
        let want_v = Expr::mul(vec![Expr::int(2), Expr::sym("y2")]);
        assert!(is_zero(&back.v[0].clone().sub(want_v)).is_zero());
        assert!(is_zero(&back.v[1]).is_zero());
    }

    #[test]
    fn base_dependent_map_contributes_to_v() {
        // z = y + x^2 adds the 2 w d_a p d_i p cross term
        let src: ChartRef = Arc::new(Chart {
            base: vec!["x".into()],
            fiber: vec!["y1".into(), "y2".into()],
            ..Default::default()
        });
        let tgt: ChartRef = Arc::new(Chart {
            base: vec!["x".into()],
            fiber: vec!["z1".into(), "z2".into()],
            ..Default::default()
        });
        let p = BundleMap {
            source: src.clone(),
            target: tgt.clone(),
            comps: vec![
                Expr::add(vec![Expr::sym("y1"), Expr::sym("x").powi(2)]),
                Expr::sym("y2"),
            ],
        };
        let mut wt = Form2::zero(&tgt);
        wt.add_w(0, 0, 1, Expr::one());
        let back = pullback_form2(&p, &wt).unwrap();
        // v_b = 2 w_AB d_b p^A d_x p^B: only B = z1 has a base partial 2x,
        // and only A = z2 pairs with it
        let want_v1 = Expr::mul(vec![Expr::int(-2), Expr::int(2), Expr::sym("x")]);
        assert!(is_zero(&back.v[1].clone().sub(want_v1)).is_zero(), "{}", back.v[1].to_text());
        assert!(is_zero(&back.v[0]).is_zero());
    }

    #[test]
    fn wrong_candidate_is_falsified() {
        let model = wave_model();
        let omega = &model.forms2["omega"];
        let p = identity_map(&model.chart);
        let mut wrong = omega.clone();
        wrong.v[0] = wrong.v[0].clone().sub(Expr::one());
        let report = verify_reduction(omega, &p, &wrong).unwrap();
        assert!(!report.pullback_matches);
        assert!(report.items.iter().any(|(l, _, _)| l.starts_with("pullback v")));
    }

    #[test]
    fn constant_current_pulls_back_unchanged() {
        let model = wave_model();
        let p = identity_map(&model.chart);
        let f = Form0 {
            chart: model.chart.clone(),
            comps: vec![Expr::int(3), Expr::sym("x1")],
        };
        let back = pullback_form0(&p, &f).unwrap();
        assert!(is_zero(&back.comps[0].clone().sub(Expr::int(3))).is_zero());
        assert!(is_zero(&back.comps[1].clone().sub(Expr::sym("x1"))).is_zero());
    }
}
