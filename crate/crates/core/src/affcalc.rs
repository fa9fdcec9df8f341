//! Calculus of affine forms in components: the restricted differential
//! `delta`, insertions of vertical fields and connections, Lie derivatives
//! of currents, field brackets, and a fiber-radial homotopy producing local
//! potentials of closed 2-forms.

use crate::symexpr::{
    diff, is_zero, normalize, poly_coefficients, rat_int, Expr, Rational,
};
use crate::sysdef::{ChartRef, Connection, Form0, Form1, Form2, VerticalField};
use num::One;
use std::collections::HashMap;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum AffError {
    #[error("objects live on different charts")]
    ChartMismatch,
    #[error("form is not closed: residual `{0}` is nonzero")]
    NotClosed(String),
    #[error("unsupported class: {0}")]
    Unsupported(String),
}

pub fn same_chart(a: &ChartRef, b: &ChartRef) -> Result<(), AffError> {
    if a == b {
        Ok(())
    } else {
        Err(AffError::ChartMismatch)
    }
}

/// The `c_b dy^b (x) d^n x` output of inserting a connection into a 2-form.
#[derive(Clone, PartialEq, Debug)]
pub struct CoForm {
    pub chart: ChartRef,
    pub comps: Vec<Expr>,
}

/// `delta f` for a horizontal (n-1)-form: theta^i_a = d_a f^i and
/// H = -d_i f^i.
pub fn delta0(f: &Form0) -> Form1 {
    let chart = &f.chart;
    let theta = (0..chart.n())
        .map(|i| {
            chart
                .fiber
                .iter()
                .map(|a| normalize(&diff(&f.comps[i], a)))
                .collect()
        })
        .collect();
    let h = normalize(
        &Expr::add(
            (0..chart.n())
                .map(|i| diff(&f.comps[i], &chart.base[i]))
                .collect(),
        )
        .neg(),
    );
    Form1 { chart: chart.clone(), theta, h }
}

/// `delta theta`: w^i_ab = d_[a theta^i_b] (with the 1/2 skew factor) and
/// w_a = -(d_a H + d_i theta^i_a).
pub fn delta1(theta: &Form1) -> Form2 {
    let chart = &theta.chart;
    let mut out = Form2::zero(chart);
    for i in 0..chart.n() {
        for a in 0..chart.m() {
            for b in (a + 1)..chart.m() {
                let e = Expr::mul(vec![
                    Expr::ratio(1, 2),
                    diff(&theta.theta[i][b], &chart.fiber[a])
                        .sub(diff(&theta.theta[i][a], &chart.fiber[b])),
                ]);
                out.add_w(i, a, b, e);
            }
        }
    }
    for a in 0..chart.m() {
        let div: Expr = Expr::add(
            (0..chart.n())
                .map(|i| diff(&theta.theta[i][a], &chart.base[i]))
                .collect(),
        );
        out.v[a] = normalize(&Expr::add(vec![diff(&theta.h, &chart.fiber[a]), div]).neg());
    }
    out.normalized()
}

/// Closedness residuals: R1^i_abc = d_[a w^i_bc] for a < b < c and
/// R2_ab = d_i w^i_ab + d_[a w_b] for a < b. All zero iff the form is a
/// PD-prehamiltonian system.
pub struct ClosednessResiduals {
    /// labelled `(i, a, b, c)`
    pub r1: Vec<((usize, usize, usize, usize), Expr)>,
    /// labelled `(a, b)`
    pub r2: Vec<((usize, usize), Expr)>,
}

impl ClosednessResiduals {
    pub fn all_zero(&self) -> bool {
        self.r1.iter().map(|(_, e)| e).chain(self.r2.iter().map(|(_, e)| e)).all(|e| {
            is_zero(e).is_zero()
        })
    }
}

pub fn closedness_residuals(omega: &Form2) -> ClosednessResiduals {
    let chart = &omega.chart;
    let m = chart.m();
    let mut r1 = Vec::new();
    for i in 0..chart.n() {
        for a in 0..m {
            for b in (a + 1)..m {
                for c in (b + 1)..m {
                    // cyclic sum is enough: the tensor is already skew, so
                    // the six-term average reduces to one third of it
                    let e = Expr::mul(vec![
                        Expr::ratio(1, 3),
                        Expr::add(vec![
                            diff(&omega.w_at(i, b, c), &chart.fiber[a]),
                            diff(&omega.w_at(i, c, a), &chart.fiber[b]),
                            diff(&omega.w_at(i, a, b), &chart.fiber[c]),
                        ]),
                    ]);
                    let e = normalize(&e);
                    if !e.is_zero_literal() {
                        r1.push(((i, a, b, c), e));
                    }
                }
            }
        }
    }
    let mut r2 = Vec::new();
    for a in 0..m {
        for b in (a + 1)..m {
            let div = Expr::add(
                (0..chart.n()).map(|i| diff(&omega.w_at(i, a, b), &chart.base[i])).collect(),
            );
            let skew = Expr::mul(vec![
                Expr::ratio(1, 2),
                diff(&omega.v[b], &chart.fiber[a]).sub(diff(&omega.v[a], &chart.fiber[b])),
            ]);
            let e = normalize(&Expr::add(vec![div, skew]));
            if !e.is_zero_literal() {
                r2.push(((a, b), e));
            }
        }
    }
    ClosednessResiduals { r1, r2 }
}

/// `i_Y omega = 2 w^i_ab Y^a dy^b d^{n-1}x_i + w_a Y^a d^n x`.
pub fn insert_vertical(y: &VerticalField, omega: &Form2) -> Result<Form1, AffError> {
    same_chart(&y.chart, &omega.chart)?;
    let chart = &omega.chart;
    let theta = (0..chart.n())
        .map(|i| {
            (0..chart.m())
                .map(|b| {
                    normalize(&Expr::add(
                        (0..chart.m())
                            .map(|a| {
                                Expr::mul(vec![
                                    Expr::int(2),
                                    omega.w_at(i, a, b),
                                    y.comps[a].clone(),
                                ])
                            })
                            .collect(),
                    ))
                })
                .collect()
        })
        .collect();
    let h = normalize(
        &Expr::add(
            (0..chart.m())
                .map(|a| Expr::mul(vec![omega.v[a].clone(), y.comps[a].clone()]))
                .collect(),
        )
        .neg(),
    );
    Ok(Form1 { chart: chart.clone(), theta, h })
}

/// Full skew tensor `w^i_ab`, indexed `[i][a][b]`.
pub fn linear_part(omega: &Form2) -> Vec<Vec<Vec<Expr>>> {
    let chart = &omega.chart;
    (0..chart.n())
        .map(|i| {
            (0..chart.m())
                .map(|a| (0..chart.m()).map(|b| omega.w_at(i, a, b)).collect())
                .collect()
        })
        .collect()
}

/// `c_b = w_b - 2 w^i_ab nabla^a_i`; the sign convention is fixed so the
/// insertion commutation identity with `i_Y` holds exactly.
pub fn insert_connection(nabla: &Connection, omega: &Form2) -> Result<CoForm, AffError> {
    same_chart(&nabla.chart, &omega.chart)?;
    let chart = &omega.chart;
    let comps = (0..chart.m())
        .map(|b| {
            let mut terms = vec![omega.v[b].clone()];
            for i in 0..chart.n() {
                for a in 0..chart.m() {
                    terms.push(Expr::mul(vec![
                        Expr::int(-2),
                        omega.w_at(i, a, b),
                        nabla.comps[i][a].clone(),
                    ]));
                }
            }
            normalize(&Expr::add(terms))
        })
        .collect();
    Ok(CoForm { chart: chart.clone(), comps })
}

/// Scalar density `theta^i_a nabla^a_i - H`; with jet placeholders for the
/// connection this is the first-order Lagrangian of `theta`.
pub fn insert_connection1(nabla: &Connection, theta: &Form1) -> Result<Expr, AffError> {
    same_chart(&nabla.chart, &theta.chart)?;
    let chart = &theta.chart;
    let mut terms = Vec::new();
    for i in 0..chart.n() {
        for a in 0..chart.m() {
            terms.push(Expr::mul(vec![
                theta.theta[i][a].clone(),
                nabla.comps[i][a].clone(),
            ]));
        }
    }
    terms.push(theta.h.clone().neg());
    Ok(normalize(&Expr::add(terms)))
}

/// `L_Y f` for vertical `Y` on a horizontal form: components `Y^a d_a f^i`.
pub fn lie_derivative_current(y: &VerticalField, f: &Form0) -> Result<Form0, AffError> {
    same_chart(&y.chart, &f.chart)?;
    let chart = &f.chart;
    let comps = (0..chart.n())
        .map(|i| {
            normalize(&Expr::add(
                (0..chart.m())
                    .map(|a| {
                        Expr::mul(vec![y.comps[a].clone(), diff(&f.comps[i], &chart.fiber[a])])
                    })
                    .collect(),
            ))
        })
        .collect();
    Ok(Form0 { chart: chart.clone(), comps })
}

/// Commutator of vertical fields.
pub fn field_bracket(
    y1: &VerticalField,
    y2: &VerticalField,
) -> Result<VerticalField, AffError> {
    same_chart(&y1.chart, &y2.chart)?;
    let chart = &y1.chart;
    let comps = (0..chart.m())
        .map(|b| {
            normalize(&Expr::add(
                (0..chart.m())
                    .map(|a| {
                        Expr::mul(vec![
                            y1.comps[a].clone(),
                            diff(&y2.comps[b], &chart.fiber[a]),
                        ])
                        .sub(Expr::mul(vec![
                            y2.comps[a].clone(),
                            diff(&y1.comps[b], &chart.fiber[a]),
                        ]))
                    })
                    .collect(),
            ))
        })
        .collect();
    Ok(VerticalField { chart: chart.clone(), comps })
}

const HOMOTOPY_T: &str = "@t";

/// Substitutes `y -> t*y` for every fiber coordinate.
fn fiber_scale(e: &Expr, chart: &ChartRef) -> Expr {
    let t = Expr::sym(HOMOTOPY_T);
    let bindings: HashMap<String, Expr> = chart
        .fiber
        .iter()
        .map(|y| (y.clone(), Expr::mul(vec![t.clone(), Expr::sym(y)])))
        .collect();
    crate::symexpr::substitute_raw(e, &bindings)
}

/// Exact unit-interval integral in the homotopy parameter, for expressions
/// polynomial in it.
fn integrate_unit(e: &Expr) -> Result<Expr, AffError> {
    let coeffs = poly_coefficients(e, &[HOMOTOPY_T.to_string()]).map_err(|_| {
        AffError::Unsupported("components are not polynomial in the fiber coordinates".into())
    })?;
    let mut terms = Vec::new();
    for (m, c) in coeffs {
        let k = m.get(HOMOTOPY_T).copied().unwrap_or(0);
        let factor = Expr::Rat(Rational::one() / rat_int(k as i64 + 1));
        terms.push(Expr::mul(vec![factor, c]));
    }
    Ok(normalize(&Expr::add(terms)))
}

/// Local potential of a closed 2-form by the fiber-radial homotopy based at
/// the fiber origin:
/// `theta^i_b = int_0^1 2 t w^i_ab(x, t y) y^a dt`, then
/// `G_a = -w_a - d_i theta^i_a` and `H = int_0^1 G_a(x, t y) y^a dt`.
pub fn potential(omega: &Form2) -> Result<Form1, AffError> {
    let res = closedness_residuals(omega);
    for (_, e) in &res.r1 {
        if !is_zero(e).is_zero() {
            return Err(AffError::NotClosed(e.to_text()));
        }
    }
    for (_, e) in &res.r2 {
        if !is_zero(e).is_zero() {
            return Err(AffError::NotClosed(e.to_text()));
        }
    }
    let chart = &omega.chart;
    let t = Expr::sym(HOMOTOPY_T);
    let mut theta = Form1::zero(chart);
    for i in 0..chart.n() {
        for b in 0..chart.m() {
            let integrand = Expr::add(
                (0..chart.m())
                    .map(|a| {
                        Expr::mul(vec![
                            Expr::int(2),
                            t.clone(),
                            fiber_scale(&omega.w_at(i, a, b), chart),
                            Expr::sym(&chart.fiber[a]),
                        ])
                    })
                    .collect(),
            );
            theta.theta[i][b] = integrate_unit(&integrand)?;
        }
    }
    let mut h_integrand_terms = Vec::new();
    for a in 0..chart.m() {
        let g_a = Expr::add(
            std::iter::once(omega.v[a].clone().neg())
                .chain((0..chart.n()).map(|i| diff(&theta.theta[i][a], &chart.base[i]).neg()))
                .collect(),
        );
        h_integrand_terms.push(Expr::mul(vec![
            fiber_scale(&g_a, chart),
            Expr::sym(&chart.fiber[a]),
        ]));
    }
    theta.h = integrate_unit(&Expr::add(h_integrand_terms))?;
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysdef::parse_system;

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

    #[test]
    fn wave_form_is_closed() {
        let model = wave_model();
        let res = closedness_residuals(&model.forms2["omega"]);
        assert!(res.all_zero(), "r1={:?} r2={:?}", res.r1, res.r2);
    }

    #[test]
    fn delta_squared_vanishes() {
        let model = wave_model();
        let chart = &model.chart;
        let f = Form0 {
            chart: chart.clone(),
            comps: vec![
                Expr::mul(vec![Expr::sym("u"), Expr::sym("u1").powi(2)]),
                Expr::add(vec![
                    Expr::mul(vec![Expr::sym("x1"), Expr::sym("u2")]),
                    Expr::sym("u").powi(3),
                ]),
            ],
        };
        let dd = delta1(&delta0(&f));
        assert!(dd.w.is_empty(), "{:?}", dd.w);
        assert!(dd.v.iter().all(|e| e.is_zero_literal()), "{:?}", dd.v);
    }

    #[test]
    fn wave_potential_reproduces_omega_from_legendre_form() {
        // theta with theta^j_u = dT/du_j, H = u_j dT/du_j - T + V gives the
        // wave form back under delta
        let model = wave_model();
        let chart = &model.chart;
        let dt1 = diff(&Expr::app("T", vec![Expr::sym("u1"), Expr::sym("u2")]), "u1");
        let dt2 = diff(&Expr::app("T", vec![Expr::sym("u1"), Expr::sym("u2")]), "u2");
        let theta = Form1 {
            chart: chart.clone(),
            theta: vec![
                vec![dt1.clone(), Expr::zero(), Expr::zero()],
                vec![dt2.clone(), Expr::zero(), Expr::zero()],
            ],
            h: Expr::add(vec![
                Expr::mul(vec![Expr::sym("u1"), dt1]),
                Expr::mul(vec![Expr::sym("u2"), dt2]),
                Expr::app("T", vec![Expr::sym("u1"), Expr::sym("u2")]).neg(),
                Expr::app("V", vec![Expr::sym("u")]),
            ]),
        };
        let got = delta1(&theta);
        let want = &model.forms2["omega"];
        for i in 0..chart.n() {
            for a in 0..chart.m() {
                for b in 0..chart.m() {
                    let d = got.w_at(i, a, b).sub(want.w_at(i, a, b));
                    assert!(is_zero(&d).is_zero(), "w mismatch at {i},{a},{b}");
                }
            }
        }
        for a in 0..chart.m() {
            let d = got.v[a].clone().sub(want.v[a].clone());
            assert!(is_zero(&d).is_zero(), "v mismatch at {a}: {}", d.to_text());
        }
    }

    #[test]
    fn insertion_commutation_identity() {
        // contracting i_nabla(omega) with Y equals i_nabla(i_Y(omega)) as
        // scalar densities, for a random-ish polynomial instance
        let model = wave_model();
        let chart = model.chart.clone();
        let omega = &model.forms2["omega"];
        let y = VerticalField {
            chart: chart.clone(),
            comps: vec![
                Expr::mul(vec![Expr::sym("u"), Expr::sym("u2")]),
                Expr::sym("x1"),
                Expr::sym("u1").powi(2),
            ],
        };
        let mut nabla = Connection::zero(&chart);
        nabla.comps[0][0] = Expr::sym("u2");
        nabla.comps[0][2] = Expr::mul(vec![Expr::sym("u"), Expr::sym("x2")]);
        nabla.comps[1][1] = Expr::sym("u").powi(2);
        // inserting nabla into i_Y omega equals contracting the coform
        // i_nabla omega against Y, by skewness of the linear part
        let lhs = insert_connection1(&nabla, &insert_vertical(&y, omega).unwrap()).unwrap();
        let c = insert_connection(&nabla, omega).unwrap();
        let rhs = Expr::add(
            (0..chart.m())
                .map(|b| Expr::mul(vec![c.comps[b].clone(), y.comps[b].clone()]))
                .collect(),
        );
        assert!(is_zero(&lhs.sub(rhs)).is_zero());
    }

    #[test]
    fn potential_round_trip_polynomial() {
        let model = wave_model();
        let chart = model.chart.clone();
        // random-ish polynomial theta, then omega = delta theta
        let theta = Form1 {
            chart: chart.clone(),
            theta: vec![
                vec![
                    Expr::mul(vec![Expr::sym("u"), Expr::sym("u1")]),
                    Expr::sym("x2").powi(2),
                    Expr::sym("u2").powi(3),
                ],
                vec![
                    Expr::sym("u1").powi(2),
                    Expr::mul(vec![Expr::sym("x1"), Expr::sym("u")]),
                    Expr::int(5),
                ],
            ],
            h: Expr::add(vec![
                Expr::mul(vec![Expr::sym("u").powi(2), Expr::sym("u2")]),
                Expr::mul(vec![Expr::sym("x1"), Expr::sym("u1")]),
            ]),
        };
        let omega = delta1(&theta);
        let theta2 = potential(&omega).expect("closed polynomial form");
        let omega2 = delta1(&theta2);
        for i in 0..chart.n() {
            for a in 0..chart.m() {
                for b in 0..chart.m() {
                    let d = omega.w_at(i, a, b).sub(omega2.w_at(i, a, b));
                    assert!(is_zero(&d).is_zero(), "w mismatch at {i},{a},{b}");
                }
            }
        }
        for a in 0..chart.m() {
            let d = omega.v[a].clone().sub(omega2.v[a].clone());
            assert!(is_zero(&d).is_zero(), "v mismatch at {a}: {}", d.to_text());
        }
    }

    #[test]
    fn potential_rejects_nonpolynomial_fiber_dependence() {
        let model = wave_model();
        let chart = model.chart.clone();
        let mut omega = Form2::zero(&chart);
        // closed (the only v-component depends only on its own coordinate)
        // but not polynomial in the fiber
        omega.v[0] = Expr::sym("u").powi(-1);
        let err = potential(&omega).unwrap_err();
        assert!(matches!(err, AffError::Unsupported(_)), "{err:?}");
    }

    #[test]
    fn potential_rejects_non_closed() {
        let model = wave_model();
        let chart = model.chart.clone();
        let mut omega = Form2::zero(&chart);
        // w_a = (u1, -u, 0)-style twist is not delta-closed
        omega.v[0] = Expr::sym("u1");
        let err = potential(&omega).unwrap_err();
        assert!(matches!(err, AffError::NotClosed(_)), "{err:?}");
    }
}
