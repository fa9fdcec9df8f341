//! Bundle charts, affine forms, fields, currents, maps and constraints,
//! plus the `.pdh` document parser and text/LaTeX/JSON rendering.

mod parse;
mod render;

pub use parse::{parse_expression, parse_simulate_section, parse_system};
pub use render::{latex_expr, render_model, render_system_latex, Format};

use crate::symexpr::{diff, normalize, Expr};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Symmetry {
    None,
    Symmetric,
    Skew,
}

/// One coordinate chart of a fiber bundle: ordered base and fiber
/// coordinate names plus the declared opaque functions and constants every
/// expression may reference.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Chart {
    pub base: Vec<String>,
    pub fiber: Vec<String>,
    pub opaque: BTreeMap<String, Vec<String>>,
    pub consts: BTreeMap<String, Symmetry>,
}

pub type ChartRef = Arc<Chart>;

impl Chart {
    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn m(&self) -> usize {
        self.fiber.len()
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        self.base.iter().position(|b| b == name)
    }

    pub fn fiber_index(&self, name: &str) -> Option<usize> {
        self.fiber.iter().position(|f| f == name)
    }

    /// Canonical atom for an indexed constant, applying the declared
    /// symmetry: symmetric sorts the indices, skew sorts with a sign and
    /// vanishes on repeats.
    pub fn const_atom(&self, name: &str, indices: &[i64]) -> Expr {
        match self.consts.get(name) {
            Some(Symmetry::Symmetric) => {
                let mut ix = indices.to_vec();
                ix.sort_unstable();
                Expr::sym(&indexed_name(name, &ix))
            }
            Some(Symmetry::Skew) => {
                let mut ix: Vec<(i64, usize)> =
                    indices.iter().copied().enumerate().map(|(k, v)| (v, k)).collect();
                ix.sort_unstable();
                if ix.windows(2).any(|w| w[0].0 == w[1].0) {
                    return Expr::zero();
                }
                // parity of the sorting permutation
                let perm: Vec<usize> = ix.iter().map(|(_, k)| *k).collect();
                let mut sign = 1i64;
                for i in 0..perm.len() {
                    for j in i + 1..perm.len() {
                        if perm[i] > perm[j] {
                            sign = -sign;
                        }
                    }
                }
                let sorted: Vec<i64> = ix.iter().map(|(v, _)| *v).collect();
                let atom = Expr::sym(&indexed_name(name, &sorted));
                if sign < 0 {
                    atom.neg()
                } else {
                    atom
                }
            }
            _ => Expr::sym(&indexed_name(name, indices)),
        }
    }
}

pub fn indexed_name(name: &str, indices: &[i64]) -> String {
    let ix: Vec<String> = indices.iter().map(|i| i.to_string()).collect();
    format!("{name}({})", ix.join(","))
}

/// Horizontal (n-1)-form `f = f^i d^{n-1}x_i` (degree-0 affine form and
/// Noether current alike).
#[derive(Clone, PartialEq, Debug)]
pub struct Form0 {
    pub chart: ChartRef,
    pub comps: Vec<Expr>,
}

impl Form0 {
    pub fn zero(chart: &ChartRef) -> Form0 {
        Form0 { chart: chart.clone(), comps: vec![Expr::zero(); chart.n()] }
    }
}

/// Affine 1-form `theta = theta^i_a dy^a d^{n-1}x_i - H d^n x`.
#[derive(Clone, PartialEq, Debug)]
pub struct Form1 {
    pub chart: ChartRef,
    /// indexed `[i][a]`
    pub theta: Vec<Vec<Expr>>,
    pub h: Expr,
}

impl Form1 {
    pub fn zero(chart: &ChartRef) -> Form1 {
        Form1 {
            chart: chart.clone(),
            theta: vec![vec![Expr::zero(); chart.m()]; chart.n()],
            h: Expr::zero(),
        }
    }
}

/// Affine 2-form `omega = w^i_ab dy^a dy^b d^{n-1}x_i + w_a dy^a d^n x`.
/// The tensor `w^i_ab` is skew in (a, b); only slots with a < b are stored
/// and the transpose is reconstructed with a sign.
#[derive(Clone, PartialEq, Debug)]
pub struct Form2 {
    pub chart: ChartRef,
    /// key `(i, a, b)` with `a < b`
    pub w: BTreeMap<(usize, usize, usize), Expr>,
    /// one per fiber coordinate
    pub v: Vec<Expr>,
}

impl Form2 {
    pub fn zero(chart: &ChartRef) -> Form2 {
        Form2 { chart: chart.clone(), w: BTreeMap::new(), v: vec![Expr::zero(); chart.m()] }
    }

    /// Full skew tensor entry.
    pub fn w_at(&self, i: usize, a: usize, b: usize) -> Expr {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Equal => Expr::zero(),
            Less => self.w.get(&(i, a, b)).cloned().unwrap_or_else(Expr::zero),
            Greater => self
                .w
                .get(&(i, b, a))
                .cloned()
                .map(Expr::neg)
                .unwrap_or_else(Expr::zero),
        }
    }

    /// Adds `e` to the skew tensor at (i, a, b): the stored slot picks up
    /// `+-e` depending on orientation.
    pub fn add_w(&mut self, i: usize, a: usize, b: usize, e: Expr) {
        if a == b || e.is_zero_literal() {
            return;
        }
        let (key, val) = if a < b { ((i, a, b), e) } else { ((i, b, a), e.neg()) };
        let slot = self.w.entry(key).or_insert_with(Expr::zero);
        *slot = normalize(&Expr::add(vec![slot.clone(), val]));
        if slot.is_zero_literal() {
            self.w.remove(&key);
        }
    }

    pub fn normalized(&self) -> Form2 {
        let mut w = BTreeMap::new();
        for (k, e) in &self.w {
            let n = normalize(e);
            if !n.is_zero_literal() {
                w.insert(*k, n);
            }
        }
        Form2 {
            chart: self.chart.clone(),
            w,
            v: self.v.iter().map(|e| normalize(e)).collect(),
        }
    }
}

/// Vertical vector field `Y = Y^a \partial_a`.
#[derive(Clone, PartialEq, Debug)]
pub struct VerticalField {
    pub chart: ChartRef,
    pub comps: Vec<Expr>,
}

impl VerticalField {
    pub fn zero(chart: &ChartRef) -> VerticalField {
        VerticalField { chart: chart.clone(), comps: vec![Expr::zero(); chart.m()] }
    }
}

/// Connection data `nabla^a_i`, indexed `[i][a]`.
#[derive(Clone, PartialEq, Debug)]
pub struct Connection {
    pub chart: ChartRef,
    pub comps: Vec<Vec<Expr>>,
}

impl Connection {
    pub fn zero(chart: &ChartRef) -> Connection {
        Connection {
            chart: chart.clone(),
            comps: vec![vec![Expr::zero(); chart.m()]; chart.n()],
        }
    }

    /// Connection whose components are the jet placeholders `D[i][a]`.
    pub fn jets(chart: &ChartRef) -> Connection {
        let comps = chart
            .base
            .iter()
            .map(|i| chart.fiber.iter().map(|a| Expr::jet(i, a)).collect())
            .collect();
        Connection { chart: chart.clone(), comps }
    }
}

/// Bundle morphism over the identity on the base: one expression per target
/// fiber coordinate, written in source chart symbols.
#[derive(Clone, PartialEq, Debug)]
pub struct BundleMap {
    pub source: ChartRef,
    pub target: ChartRef,
    pub comps: Vec<Expr>,
}

/// List of expressions cutting out a submanifold, each read as `expr = 0`.
#[derive(Clone, PartialEq, Debug)]
pub struct ConstraintSet {
    pub chart: ChartRef,
    pub exprs: Vec<Expr>,
}

impl ConstraintSet {
    pub fn empty(chart: &ChartRef) -> ConstraintSet {
        ConstraintSet { chart: chart.clone(), exprs: Vec::new() }
    }
}

/// First-order PDE residuals over chart symbols and jet placeholders
/// `D[i][a]`, one per fiber coordinate.
#[derive(Clone, PartialEq, Debug)]
pub struct PDSystem {
    pub chart: ChartRef,
    pub residuals: Vec<Expr>,
}

/// A `map` item as written in a document; the target chart is only known
/// once the target document is loaded.
#[derive(Clone, PartialEq, Debug)]
pub struct MapDecl {
    pub target_label: String,
    pub assigns: Vec<(String, Expr)>,
}

impl MapDecl {
    /// Resolves the declaration against a target chart, requiring every
    /// target fiber coordinate to be assigned.
    pub fn resolve(
        &self,
        source: &ChartRef,
        target: &ChartRef,
    ) -> Result<BundleMap, String> {
        let mut comps = Vec::with_capacity(target.m());
        for name in &target.fiber {
            match self.assigns.iter().find(|(k, _)| k == name) {
                Some((_, e)) => comps.push(e.clone()),
                None => return Err(format!("target fiber coordinate `{name}` not assigned")),
            }
        }
        for (k, _) in &self.assigns {
            if target.fiber_index(k).is_none() {
                return Err(format!("`{k}` is not a fiber coordinate of the target chart"));
            }
        }
        Ok(BundleMap { source: source.clone(), target: target.clone(), comps })
    }
}

/// Simulation settings as parsed; numeric conversion happens in numsim.
#[derive(Clone, PartialEq, Debug)]
pub struct SimSpec {
    pub entries: BTreeMap<String, Expr>,
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct SystemModel {
    pub chart: ChartRef,
    pub forms0: BTreeMap<String, Form0>,
    pub forms1: BTreeMap<String, Form1>,
    pub forms2: BTreeMap<String, Form2>,
    pub fields: BTreeMap<String, VerticalField>,
    pub maps: BTreeMap<String, MapDecl>,
    pub constraints: Option<ConstraintSet>,
    pub simulate: Option<SimSpec>,
}

impl SystemModel {
    /// The unique degree-2 form of the document, or the named one.
    pub fn main_form2(&self, name: Option<&str>) -> Result<&Form2, String> {
        match name {
            Some(n) => self.forms2.get(n).ok_or_else(|| format!("no form named `{n}`")),
            None => {
                if self.forms2.len() == 1 {
                    Ok(self.forms2.values().next().unwrap())
                } else {
                    Err(format!(
                        "document has {} degree-2 forms; name one explicitly",
                        self.forms2.len()
                    ))
                }
            }
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {} {}", self.line, self.col, self.code, self.message)
    }
}

pub const E_LEX: &str = "E001";
pub const E_SYNTAX: &str = "E002";
pub const E_UNKNOWN: &str = "E003";
pub const E_ARITY: &str = "E004";
pub const E_DUP: &str = "E005";
pub const E_SEMANTIC: &str = "E006";

/// Cross-object checks after a successful parse. The parser already
/// enforces most invariants; this re-validates arities and symbol usage so
/// programmatically built models get the same guarantees.
pub fn validate(model: &SystemModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = model.chart.n();
    let m = model.chart.m();
    let mut check = |ok: bool, msg: String| {
        if !ok {
            out.push(Diagnostic { line: 0, col: 0, code: E_ARITY, message: msg });
        }
    };
    for (name, f) in &model.forms0 {
        check(f.comps.len() == n, format!("current `{name}` must have {n} components"));
    }
    for (name, f) in &model.forms1 {
        check(
            f.theta.len() == n && f.theta.iter().all(|r| r.len() == m),
            format!("form `{name}` theta block must be {n}x{m}"),
        );
    }
    for (name, f) in &model.forms2 {
        check(f.v.len() == m, format!("form `{name}` must have {m} v-components"));
        for (i, a, b) in f.w.keys() {
            check(
                *i < n && *a < *b && *b < m,
                format!("form `{name}` has an out-of-range component index"),
            );
        }
    }
    for (name, f) in &model.fields {
        check(f.comps.len() == m, format!("field `{name}` must have {m} components"));
    }
    out
}

/// Declaration-checked derivative: `v` must be a chart coordinate, declared
/// constant or jet placeholder.
pub fn chart_diff(chart: &Chart, e: &Expr, v: &str) -> Result<Expr, String> {
    let known = chart.base_index(v).is_some()
        || chart.fiber_index(v).is_some()
        || chart.consts.contains_key(v)
        || v.starts_with("D[");
    if !known {
        return Err(format!("`{v}` is not declared in this chart"));
    }
    Ok(diff(e, v))
}
