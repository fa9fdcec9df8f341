//! The structure theory of a closed affine 2-form: first-order evolution
//! residuals, kernel computation with genericity certificates, solving for
//! compatible connections, the constraint recursion, and the passage between
//! the form and its first-order Lagrangian.

pub mod linalg;

pub use linalg::{nullspace, solve_linear, LinError, LinSolution};

use crate::affcalc::{insert_connection, insert_connection1, AffError};
use crate::symexpr::normal::to_ratfunc;
use crate::symexpr::poly::Poly;
use crate::symexpr::{diff, normalize, poly_coefficients, substitute, Expr};
use crate::sysdef::{ChartRef, Connection, ConstraintSet, Form1, Form2, PDSystem, VerticalField};
use std::collections::HashMap;

#[derive(thiserror::Error, Debug, Clone)]
pub enum PdError {
    #[error(transparent)]
    Aff(#[from] AffError),
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error("unsupported class: {0}")]
    Unsupported(String),
}

/// First-order PDE residuals `R_b = 2 w^i_ab D[i][a] - w_b`; a section is a
/// solution iff every residual vanishes along it.
pub fn hamilton_residuals(omega: &Form2) -> PDSystem {
    let chart = &omega.chart;
    let c = insert_connection(&Connection::jets(chart), omega)
        .expect("jet connection lives on the same chart");
    let residuals = c.comps.into_iter().map(|e| normalize(&e.neg())).collect();
    PDSystem { chart: chart.clone(), residuals }
}

/// Linear substitutions extracted from constraints of the shape
/// `c*y + rest = 0` with rational `c` and `rest` free of the fiber
/// coordinate `y`. Constraints outside that shape contribute none and are
/// handled by polynomial reduction instead.
fn constraint_substitutions(c: &ConstraintSet) -> HashMap<String, Expr> {
    let chart = &c.chart;
    let mut subs: HashMap<String, Expr> = HashMap::new();
    for phi in &c.exprs {
        for y in &chart.fiber {
            if subs.contains_key(y) {
                continue;
            }
            let d = normalize(&diff(phi, y));
            let coeff = match &d {
                Expr::Rat(r) => r.clone(),
                _ => continue,
            };
            if coeff == crate::symexpr::rat_int(0) {
                continue;
            }
            let rest = normalize(&phi.clone().sub(Expr::mul(vec![d, Expr::sym(y)])));
            let mut probe = std::collections::BTreeSet::new();
            probe.insert(y.clone());
            if rest.mentions_any(&probe) {
                continue;
            }
            let val = normalize(&Expr::mul(vec![Expr::Rat(-coeff.recip()), rest]));
            subs.insert(y.clone(), val);
            break;
        }
    }
    subs
}

fn subst(e: &Expr, subs: &HashMap<String, Expr>) -> Expr {
    if subs.is_empty() {
        e.clone()
    } else {
        normalize(&substitute(e, subs))
    }
}

/// Numerator polynomials of the constraints, for reduction.
fn constraint_polys(c: &ConstraintSet) -> Vec<Poly> {
    c.exprs
        .iter()
        .filter_map(|phi| to_ratfunc(phi).ok())
        .map(|rf| rf.canonical().num.primitive())
        .filter(|p| !p.is_zero() && p.as_constant().is_none())
        .collect()
}

/// Reduces an expression's numerator modulo the constraint polynomials.
fn reduce_mod(e: &Expr, polys: &[Poly]) -> Expr {
    let rf = match to_ratfunc(e) {
        Ok(rf) => rf.canonical(),
        Err(_) => return e.clone(),
    };
    let mut num = rf.num;
    for _ in 0..4 {
        let before = num.clone();
        for p in polys {
            num = num.rem_by(p);
        }
        if num == before {
            break;
        }
    }
    crate::symexpr::normal::ratfunc_to_expr(
        &crate::symexpr::normal::RatFunc { num, den: rf.den }.canonical(),
    )
}

/// Kernel data of the form at a point, generically over the chart (or over
/// the constraint set, when one is given).
#[derive(Clone, Debug)]
pub struct KernelReport {
    /// Basis of `ker` of the linear part, i.e. vertical fields annihilating
    /// `2 w^i_ab`.
    pub vertical: Vec<VerticalField>,
    /// `w_a V^a` per vertical basis field; the full kernel loses the field
    /// wherever its pairing is nonzero.
    pub pairings: Vec<Expr>,
    /// Basis of the kernel of the full affine form on the generic stratum.
    pub full: Vec<VerticalField>,
    /// Nonconstant pivots: the ranks are valid off their zero loci.
    pub certificate: Vec<Expr>,
    pub notes: Vec<String>,
}

pub fn kernel_full(
    omega: &Form2,
    constraints: Option<&ConstraintSet>,
) -> Result<KernelReport, PdError> {
    let chart = &omega.chart;
    let subs = constraints.map(constraint_substitutions).unwrap_or_default();
    let n = chart.n();
    let m = chart.m();
    let mut rows = Vec::with_capacity(n * m);
    for i in 0..n {
        for b in 0..m {
            rows.push((0..m).map(|a| subst(&omega.w_at(i, a, b), &subs)).collect::<Vec<_>>());
        }
    }
    let (basis, mut certificate, mut notes) = nullspace(&rows)?;
    let vertical: Vec<VerticalField> = basis
        .into_iter()
        .map(|comps| VerticalField { chart: chart.clone(), comps })
        .collect();
    let pairings: Vec<Expr> = vertical
        .iter()
        .map(|y| {
            normalize(&Expr::add(
                (0..m)
                    .map(|a| Expr::mul(vec![subst(&omega.v[a], &subs), y.comps[a].clone()]))
                    .collect(),
            ))
        })
        .collect();
    let full = if vertical.is_empty() {
        Vec::new()
    } else {
        let (combos, pv, nt) = nullspace(&[pairings.clone()])?;
        certificate.extend(pv);
        notes.extend(nt);
        combos
            .into_iter()
            .map(|c| {
                let comps = (0..m)
                    .map(|b| {
                        normalize(&Expr::add(
                            c.iter()
                                .zip(&vertical)
                                .map(|(ck, y)| Expr::mul(vec![ck.clone(), y.comps[b].clone()]))
                                .collect(),
                        ))
                    })
                    .collect();
                VerticalField { chart: chart.clone(), comps }
            })
            .collect()
    };
    Ok(KernelReport { vertical, pairings, full, certificate, notes })
}

/// `true` iff the linear part has trivial kernel on the generic stratum,
/// which makes the evolution equations solvable for all first derivatives.
pub fn is_hamiltonian(
    omega: &Form2,
    constraints: Option<&ConstraintSet>,
) -> Result<(bool, KernelReport), PdError> {
    let report = kernel_full(omega, constraints)?;
    let verdict = report.vertical.is_empty();
    Ok((verdict, report))
}

/// Solution set of `2 w^i_ab nabla^a_i = w_b` for the connection components.
#[derive(Clone, Debug)]
pub struct ConnectionSolution {
    pub particular: Connection,
    /// Homogeneous directions: the solution space is `particular + span`.
    pub homogeneous: Vec<Connection>,
    /// Expressions that must vanish on the relevant locus for a solution to
    /// exist; already reduced modulo the constraints when given.
    pub conditions: Vec<Expr>,
    pub certificate: Vec<Expr>,
    pub notes: Vec<String>,
}

pub fn solve_connection(
    omega: &Form2,
    constraints: Option<&ConstraintSet>,
) -> Result<ConnectionSolution, PdError> {
    let chart = &omega.chart;
    let subs = constraints.map(constraint_substitutions).unwrap_or_default();
    let polys = constraints.map(constraint_polys).unwrap_or_default();
    let n = chart.n();
    let m = chart.m();
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for b in 0..m {
        let mut row = Vec::with_capacity(n * m);
        for i in 0..n {
            for a in 0..m {
                row.push(subst(
                    &Expr::mul(vec![Expr::int(2), omega.w_at(i, a, b)]),
                    &subs,
                ));
            }
        }
        rows.push(row);
        rhs.push(subst(&omega.v[b], &subs));
    }
    let sol = solve_linear(&rows, &rhs)?;
    let unflatten = |flat: &[Expr]| Connection {
        chart: chart.clone(),
        comps: (0..n).map(|i| (0..m).map(|a| flat[i * m + a].clone()).collect()).collect(),
    };
    let particular = unflatten(&sol.particular);
    let homogeneous = sol.nullspace.iter().map(|v| unflatten(v)).collect();
    let conditions = sol
        .conditions
        .iter()
        .map(|c| reduce_mod(c, &polys))
        .filter(|c| !c.is_zero_literal())
        .collect();
    Ok(ConnectionSolution {
        particular,
        homogeneous,
        conditions,
        certificate: sol.pivots,
        notes: sol.notes,
    })
}

/// One step of the constraint recursion: new conditions are (1) solvability
/// residuals of the connection equations modulo the current set, and (2)
/// obstructions to picking a solution tangent to the current set.
pub fn constraint_step(
    omega: &Form2,
    current: &ConstraintSet,
) -> Result<ConstraintSet, PdError> {
    let chart = &omega.chart;
    let sol = solve_connection(omega, Some(current))?;
    let mut exprs = current.exprs.clone();
    let mut polys = constraint_polys(current);
    let push = |e: Expr, exprs: &mut Vec<Expr>, polys: &mut Vec<Poly>| {
        let r = reduce_mod(&e, polys);
        if r.is_zero_literal() {
            return;
        }
        if let Ok(rf) = to_ratfunc(&r) {
            let p = rf.canonical().num.primitive();
            if !p.is_zero() && p.as_constant().is_none() {
                polys.push(p);
            }
        }
        exprs.push(r);
    };
    for c in &sol.conditions {
        push(c.clone(), &mut exprs, &mut polys);
    }
    if !current.exprs.is_empty() {
        // tangency of nabla = particular + sum c_k h_k to every constraint:
        // rows (phi, i) in the unknown coefficients c_k
        let n = chart.n();
        let m = chart.m();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for phi in &current.exprs {
            let grads: Vec<Expr> = chart.fiber.iter().map(|a| diff(phi, a)).collect();
            for i in 0..n {
                let t0 = Expr::add(
                    std::iter::once(diff(phi, &chart.base[i]))
                        .chain((0..m).map(|a| {
                            Expr::mul(vec![
                                sol.particular.comps[i][a].clone(),
                                grads[a].clone(),
                            ])
                        }))
                        .collect(),
                );
                let row: Vec<Expr> = sol
                    .homogeneous
                    .iter()
                    .map(|h| {
                        normalize(&Expr::add(
                            (0..m)
                                .map(|a| {
                                    Expr::mul(vec![h.comps[i][a].clone(), grads[a].clone()])
                                })
                                .collect(),
                        ))
                    })
                    .collect();
                rows.push(row);
                rhs.push(normalize(&t0.neg()));
            }
        }
        let tangency = solve_linear(&rows, &rhs)?;
        for c in &tangency.conditions {
            push(c.clone(), &mut exprs, &mut polys);
        }
    }
    Ok(ConstraintSet { chart: chart.clone(), exprs })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FlowOutcome {
    /// The last stage reproduces itself: the final constraint submanifold.
    FixedPoint,
    /// A stage contains a nonzero constant: no points satisfy it.
    Empty,
    /// Stopped by the step limit without stabilizing.
    MaxSteps,
}

#[derive(Clone, Debug)]
pub struct ConstraintFlow {
    pub stages: Vec<ConstraintSet>,
    pub outcome: FlowOutcome,
}

fn has_contradiction(c: &ConstraintSet) -> bool {
    c.exprs.iter().any(|e| match to_ratfunc(e) {
        Ok(rf) => {
            let rf = rf.canonical();
            rf.num.as_constant().map(|v| v != crate::symexpr::rat_int(0)).unwrap_or(false)
        }
        Err(_) => false,
    })
}

pub fn constraint_algorithm(
    omega: &Form2,
    initial: Option<&ConstraintSet>,
    max_steps: usize,
) -> Result<ConstraintFlow, PdError> {
    let start = initial.cloned().unwrap_or_else(|| ConstraintSet::empty(&omega.chart));
    let mut stages = vec![start];
    for _ in 0..max_steps {
        let last = stages.last().unwrap();
        if has_contradiction(last) {
            return Ok(ConstraintFlow { stages, outcome: FlowOutcome::Empty });
        }
        let next = constraint_step(omega, last)?;
        if next.exprs.len() == last.exprs.len() {
            return Ok(ConstraintFlow { stages, outcome: FlowOutcome::FixedPoint });
        }
        stages.push(next);
    }
    Ok(ConstraintFlow { stages, outcome: FlowOutcome::MaxSteps })
}

/// First-order Lagrangian density of an affine 1-form: contraction with the
/// jet connection, `theta^i_a D[i][a] - H`.
pub fn lagrangian_of(theta: &Form1) -> Expr {
    insert_connection1(&Connection::jets(&theta.chart), theta)
        .expect("jet connection lives on the same chart")
}

/// Variational residuals `d_b L - D_i (dL/dD[i][b])` for a Lagrangian
/// affine in the jets; the total derivative expands over base and fiber.
pub fn euler_lagrange(chart: &ChartRef, l: &Expr) -> Result<PDSystem, PdError> {
    let jets: Vec<String> = chart
        .base
        .iter()
        .flat_map(|i| chart.fiber.iter().map(move |a| Expr::jet(i, a).to_text()))
        .collect();
    let coeffs = poly_coefficients(l, &jets)
        .map_err(|e| PdError::Unsupported(format!("Lagrangian is not affine in the jets: {e}")))?;
    if coeffs.keys().any(|m| m.values().sum::<u32>() > 1) {
        return Err(PdError::Unsupported(
            "Lagrangian is not affine in the jets".into(),
        ));
    }
    let n = chart.n();
    let m = chart.m();
    let residuals = (0..m)
        .map(|b| {
            let mut terms = vec![diff(l, &chart.fiber[b])];
            for i in 0..n {
                let g = diff(l, &Expr::jet(&chart.base[i], &chart.fiber[b]).to_text());
                let mut total = vec![diff(&g, &chart.base[i])];
                for a in 0..m {
                    total.push(Expr::mul(vec![
                        Expr::jet(&chart.base[i], &chart.fiber[a]),
                        diff(&g, &chart.fiber[a]),
                    ]));
                }
                terms.push(Expr::add(total).neg());
            }
            normalize(&Expr::add(terms))
        })
        .collect();
    Ok(PDSystem { chart: chart.clone(), residuals })
}
