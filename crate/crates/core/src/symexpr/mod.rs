//! Exact symbolic expressions: rationals, named atoms, opaque function
//! applications with formal partial derivatives, sums, products, rational
//! powers and a few elementary functions. All arithmetic is exact; floating
//! point only appears in [`eval_numeric`] and the probabilistic zero test.

pub mod normal;
pub mod poly;
mod zero;

pub use normal::{normalize, poly_coefficients, NormError};
pub use zero::{is_zero, is_zero_with, set_default_seed, Verdict, ZeroCfg};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

pub type Rational = BigRational;

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Elementary function heads. `sqrt` is not listed: it is rewritten to a
/// rational power at construction time.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum ElemFn {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl ElemFn {
    pub fn name(self) -> &'static str {
        match self {
            ElemFn::Exp => "exp",
            ElemFn::Ln => "ln",
            ElemFn::Sin => "sin",
            ElemFn::Cos => "cos",
        }
    }
}

/// An opaque function application `name(args)` together with a formal
/// derivative multi-index: `deriv[k]` counts derivatives in the k-th
/// argument slot. Mixed partials commute by construction since only the
/// counts are stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OpaqueApp {
    pub name: String,
    pub args: Vec<Expr>,
    pub deriv: Vec<u32>,
}

impl OpaqueApp {
    pub fn new(name: &str, args: Vec<Expr>) -> Self {
        let deriv = vec![0; args.len()];
        OpaqueApp { name: name.into(), args, deriv }
    }

    pub fn order(&self) -> u32 {
        self.deriv.iter().sum()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Expr {
    Rat(Rational),
    /// Coordinate, declared constant or other named scalar. The builtin
    /// constant `pi` is a `Sym` known to the numeric evaluator.
    Sym(String),
    /// First-jet placeholder standing for the derivative of fiber
    /// coordinate `fiber` along base coordinate `base`.
    Jet { base: String, fiber: String },
    App(OpaqueApp),
    Elem(ElemFn, Box<Expr>),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Pow(Box<Expr>, Rational),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Rat(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::Rat(Rational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Rat(rat_int(n))
    }

    pub fn ratio(p: i64, q: i64) -> Expr {
        Expr::Rat(rat(p, q))
    }

    pub fn sym(name: &str) -> Expr {
        Expr::Sym(name.into())
    }

    pub fn jet(base: &str, fiber: &str) -> Expr {
        Expr::Jet { base: base.into(), fiber: fiber.into() }
    }

    pub fn app(name: &str, args: Vec<Expr>) -> Expr {
        Expr::App(OpaqueApp::new(name, args))
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Rat(r) if r.is_zero())
    }

    pub fn is_one_literal(&self) -> bool {
        matches!(self, Expr::Rat(r) if r.is_one())
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut c = Rational::zero();
        for t in terms {
            match t {
                Expr::Rat(r) => c += r,
                Expr::Sum(v) => {
                    for s in v {
                        if let Expr::Rat(r) = s {
                            c += r;
                        } else {
                            flat.push(s);
                        }
                    }
                }
                other => flat.push(other),
            }
        }
        if !c.is_zero() {
            flat.push(Expr::Rat(c));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::Sum(flat),
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut c = Rational::one();
        for f in factors {
            match f {
                Expr::Rat(r) => c *= r,
                Expr::Prod(v) => {
                    for g in v {
                        if let Expr::Rat(r) = g {
                            c *= r;
                        } else {
                            flat.push(g);
                        }
                    }
                }
                other => flat.push(other),
            }
        }
        if c.is_zero() {
            return Expr::zero();
        }
        if flat.is_empty() {
            return Expr::Rat(c);
        }
        if !c.is_one() {
            flat.insert(0, Expr::Rat(c));
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::Prod(flat)
        }
    }

    pub fn neg(self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self])
    }

    pub fn sub(self, other: Expr) -> Expr {
        Expr::add(vec![self, other.neg()])
    }

    pub fn pow(self, e: Rational) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return self;
        }
        if let Expr::Rat(r) = &self {
            if e.is_integer() {
                if let Some(k) = e.to_integer().to_i32() {
                    if r.is_zero() && k < 0 {
                        // leave 0^-k alone; normalization reports it
                    } else {
                        return Expr::Rat(rat_pow(r, k));
                    }
                }
            }
        }
        if let Expr::Pow(b, e0) = self {
            return Expr::Pow(b, e0 * e);
        }
        Expr::Pow(Box::new(self), e)
    }

    pub fn powi(self, k: i64) -> Expr {
        self.pow(rat_int(k))
    }

    pub fn sqrt(self) -> Expr {
        self.pow(rat(1, 2))
    }

    pub fn elem(f: ElemFn, arg: Expr) -> Expr {
        Expr::Elem(f, Box::new(arg))
    }

    /// Collects the free value atoms of the tree: plain symbols, jet
    /// placeholders (rendered `D[i][a]`) and opaque applications keyed by
    /// their rendered text.
    pub fn free_atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk_atoms(&mut out);
        out
    }

    fn walk_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Rat(_) => {}
            Expr::Sym(s) => {
                out.insert(s.clone());
            }
            Expr::Jet { .. } => {
                out.insert(self.to_text());
            }
            Expr::App(a) => {
                out.insert(self.to_text());
                for g in &a.args {
                    g.walk_atoms(out);
                }
            }
            Expr::Elem(_, a) => a.walk_atoms(out),
            Expr::Sum(v) | Expr::Prod(v) => {
                for g in v {
                    g.walk_atoms(out);
                }
            }
            Expr::Pow(b, _) => b.walk_atoms(out),
        }
    }

    /// True when some plain symbol in `names` occurs in the tree (argument
    /// lists of opaque applications included).
    pub fn mentions_any(&self, names: &BTreeSet<String>) -> bool {
        match self {
            Expr::Rat(_) => false,
            Expr::Sym(s) => names.contains(s),
            Expr::Jet { .. } => false,
            Expr::App(a) => a.args.iter().any(|g| g.mentions_any(names)),
            Expr::Elem(_, a) => a.mentions_any(names),
            Expr::Sum(v) | Expr::Prod(v) => v.iter().any(|g| g.mentions_any(names)),
            Expr::Pow(b, _) => b.mentions_any(names),
        }
    }
}

pub fn rat_pow(r: &Rational, k: i32) -> Rational {
    if k >= 0 {
        num::pow::pow(r.clone(), k as usize)
    } else {
        num::pow::pow(r.recip(), (-k) as usize)
    }
}

/// Derivative target: either a named scalar or a jet placeholder.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DiffVar {
    Sym(String),
    Jet { base: String, fiber: String },
}

impl DiffVar {
    /// Accepts `name` or the jet spelling `D[i][a]`.
    pub fn parse(v: &str) -> DiffVar {
        if let Some(rest) = v.strip_prefix("D[") {
            if let Some((base, tail)) = rest.split_once("][") {
                if let Some(fiber) = tail.strip_suffix(']') {
                    return DiffVar::Jet { base: base.into(), fiber: fiber.into() };
                }
            }
        }
        DiffVar::Sym(v.into())
    }
}

/// Exact partial derivative. Opaque applications differentiate by the chain
/// rule through their argument slots, producing formal partial atoms; atoms
/// other than the target differentiate to zero.
pub fn diff(e: &Expr, v: &str) -> Expr {
    diff_var(e, &DiffVar::parse(v))
}

pub fn diff_var(e: &Expr, v: &DiffVar) -> Expr {
    match e {
        Expr::Rat(_) => Expr::zero(),
        Expr::Sym(s) => match v {
            DiffVar::Sym(t) if t == s => Expr::one(),
            _ => Expr::zero(),
        },
        Expr::Jet { base, fiber } => match v {
            DiffVar::Jet { base: b, fiber: f } if b == base && f == fiber => Expr::one(),
            _ => Expr::zero(),
        },
        Expr::App(a) => {
            let mut terms = Vec::new();
            for k in 0..a.args.len() {
                let da = diff_var(&a.args[k], v);
                if da.is_zero_literal() {
                    continue;
                }
                let mut bumped = a.clone();
                bumped.deriv[k] += 1;
                terms.push(Expr::mul(vec![Expr::App(bumped), da]));
            }
            Expr::add(terms)
        }
        Expr::Elem(f, a) => {
            let da = diff_var(a, v);
            if da.is_zero_literal() {
                return Expr::zero();
            }
            let outer = match f {
                ElemFn::Exp => Expr::elem(ElemFn::Exp, (**a).clone()),
                ElemFn::Ln => (**a).clone().powi(-1),
                ElemFn::Sin => Expr::elem(ElemFn::Cos, (**a).clone()),
                ElemFn::Cos => Expr::elem(ElemFn::Sin, (**a).clone()).neg(),
            };
            Expr::mul(vec![outer, da])
        }
        Expr::Sum(ts) => Expr::add(ts.iter().map(|t| diff_var(t, v)).collect()),
        Expr::Prod(fs) => {
            let mut terms = Vec::new();
            for k in 0..fs.len() {
                let dk = diff_var(&fs[k], v);
                if dk.is_zero_literal() {
                    continue;
                }
                let mut factors: Vec<Expr> = Vec::with_capacity(fs.len());
                for (j, f) in fs.iter().enumerate() {
                    if j == k {
                        factors.push(dk.clone());
                    } else {
                        factors.push(f.clone());
                    }
                }
                terms.push(Expr::mul(factors));
            }
            Expr::add(terms)
        }
        Expr::Pow(b, r) => {
            let db = diff_var(b, v);
            if db.is_zero_literal() {
                return Expr::zero();
            }
            let down = (**b).clone().pow(r.clone() - Rational::one());
            Expr::mul(vec![Expr::Rat(r.clone()), down, db])
        }
    }
}

/// Simultaneous substitution of named scalars, then [`normalize`]. Bindings
/// reach into opaque-application argument lists.
pub fn substitute(e: &Expr, bindings: &HashMap<String, Expr>) -> Expr {
    normalize(&substitute_raw(e, bindings))
}

pub fn substitute_raw(e: &Expr, bindings: &HashMap<String, Expr>) -> Expr {
    match e {
        Expr::Rat(_) | Expr::Jet { .. } => e.clone(),
        Expr::Sym(s) => bindings.get(s).cloned().unwrap_or_else(|| e.clone()),
        Expr::App(a) => {
            let args = a.args.iter().map(|g| substitute_raw(g, bindings)).collect();
            Expr::App(OpaqueApp { name: a.name.clone(), args, deriv: a.deriv.clone() })
        }
        Expr::Elem(f, a) => Expr::elem(*f, substitute_raw(a, bindings)),
        Expr::Sum(v) => Expr::add(v.iter().map(|g| substitute_raw(g, bindings)).collect()),
        Expr::Prod(v) => Expr::mul(v.iter().map(|g| substitute_raw(g, bindings)).collect()),
        Expr::Pow(b, r) => substitute_raw(b, bindings).pow(r.clone()),
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound atom `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// IEEE double evaluation. Opaque applications and jet placeholders are
/// looked up by their rendered text; `pi` is built in.
pub fn eval_numeric(e: &Expr, point: &HashMap<String, f64>) -> Result<f64, EvalError> {
    match e {
        Expr::Rat(r) => Ok(rat_to_f64(r)),
        Expr::Sym(s) => point
            .get(s)
            .copied()
            .or_else(|| (s == "pi").then_some(std::f64::consts::PI))
            .ok_or_else(|| EvalError::Unbound(s.clone())),
        Expr::Jet { .. } | Expr::App(_) => {
            let key = e.to_text();
            point.get(&key).copied().ok_or(EvalError::Unbound(key))
        }
        Expr::Elem(f, a) => {
            let x = eval_numeric(a, point)?;
            match f {
                ElemFn::Exp => Ok(x.exp()),
                ElemFn::Ln => {
                    if x <= 0.0 {
                        Err(EvalError::Domain(format!("ln of non-positive value {x}")))
                    } else {
                        Ok(x.ln())
                    }
                }
                ElemFn::Sin => Ok(x.sin()),
                ElemFn::Cos => Ok(x.cos()),
            }
        }
        Expr::Sum(v) => {
            let mut acc = 0.0;
            for g in v {
                acc += eval_numeric(g, point)?;
            }
            Ok(acc)
        }
        Expr::Prod(v) => {
            let mut acc = 1.0;
            for g in v {
                acc *= eval_numeric(g, point)?;
            }
            Ok(acc)
        }
        Expr::Pow(b, r) => {
            let x = eval_numeric(b, point)?;
            if r.is_integer() {
                let k = r.to_integer().to_i32().ok_or_else(|| {
                    EvalError::Domain("exponent out of range".into())
                })?;
                if x == 0.0 && k < 0 {
                    return Err(EvalError::Domain("zero to negative power".into()));
                }
                Ok(x.powi(k))
            } else {
                if x < 0.0 {
                    return Err(EvalError::Domain(format!(
                        "fractional power of negative value {x}"
                    )));
                }
                let p = rat_to_f64(r);
                if x == 0.0 && p < 0.0 {
                    return Err(EvalError::Domain("zero to negative power".into()));
                }
                Ok(x.powf(p))
            }
        }
    }
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

// ---------------------------------------------------------------------------
// rendering

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Sum(_) => 1,
        Expr::Prod(_) => 2,
        Expr::Pow(..) => 3,
        Expr::Rat(r) => {
            if r.is_negative() {
                1
            } else if !r.is_integer() {
                2
            } else {
                4
            }
        }
        _ => 4,
    }
}

fn write_wrapped(out: &mut String, e: &Expr, min_prec: u8) {
    if prec(e) < min_prec {
        out.push('(');
        out.push_str(&e.to_text());
        out.push(')');
    } else {
        out.push_str(&e.to_text());
    }
}

impl Expr {
    /// Deterministic plain-text rendering; re-parseable by the document
    /// parser for expressions over declared symbols.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s);
        s
    }

    fn write_text(&self, out: &mut String) {
        match self {
            Expr::Rat(r) => {
                if r.is_integer() {
                    out.push_str(&r.numer().to_string());
                } else {
                    out.push_str(&format!("{}/{}", r.numer(), r.denom()));
                }
            }
            Expr::Sym(s) => out.push_str(s),
            Expr::Jet { base, fiber } => out.push_str(&format!("D[{base}][{fiber}]")),
            Expr::App(a) => {
                let mut inner = a.name.clone();
                inner.push('(');
                for (k, g) in a.args.iter().enumerate() {
                    if k > 0 {
                        inner.push(',');
                    }
                    inner.push_str(&g.to_text());
                }
                inner.push(')');
                if a.order() == 0 {
                    out.push_str(&inner);
                } else {
                    // formal partials render as a diff(...) call; slots whose
                    // argument is a plain name use that name, otherwise the
                    // positional spelling @k is used
                    out.push_str("diff(");
                    out.push_str(&inner);
                    for (k, cnt) in a.deriv.iter().enumerate() {
                        for _ in 0..*cnt {
                            match &a.args[k] {
                                Expr::Sym(s) => out.push_str(&format!(",{s}")),
                                _ => out.push_str(&format!(",@{k}")),
                            }
                        }
                    }
                    out.push(')');
                }
            }
            Expr::Elem(f, a) => {
                out.push_str(f.name());
                out.push('(');
                out.push_str(&a.to_text());
                out.push(')');
            }
            Expr::Sum(ts) => {
                for (k, t) in ts.iter().enumerate() {
                    let (negated, body) = strip_neg(t);
                    if k == 0 {
                        if negated {
                            out.push('-');
                        }
                    } else {
                        out.push_str(if negated { " - " } else { " + " });
                    }
                    write_wrapped(out, &body, 2);
                }
            }
            Expr::Prod(fs) => {
                for (k, f) in fs.iter().enumerate() {
                    if k > 0 {
                        out.push('*');
                    }
                    write_wrapped(out, f, 3);
                }
            }
            Expr::Pow(b, r) => {
                write_wrapped(out, b, 4);
                out.push('^');
                if r.is_integer() && !r.is_negative() {
                    out.push_str(&r.numer().to_string());
                } else if r.is_integer() {
                    out.push_str(&format!("({})", r.numer()));
                } else {
                    out.push_str(&format!("({}/{})", r.numer(), r.denom()));
                }
            }
        }
    }
}

/// Splits a leading factor -1 or a negative rational off a term for
/// rendering `a - b` instead of `a + -1*b`.
fn strip_neg(e: &Expr) -> (bool, Expr) {
    match e {
        Expr::Rat(r) if r.is_negative() => (true, Expr::Rat(-r.clone())),
        Expr::Prod(fs) => {
            if let Some(Expr::Rat(r)) = fs.first() {
                if r.is_negative() {
                    let mut rest = fs.clone();
                    let flipped = -r.clone();
                    if flipped.is_one() {
                        rest.remove(0);
                    } else {
                        rest[0] = Expr::Rat(flipped);
                    }
                    return (true, Expr::mul(rest));
                }
            }
            (false, e.clone())
        }
        _ => (false, e.clone()),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Sorted multiset of variable exponents; the key type for coefficient
/// splitting.
pub type Mono = BTreeMap<String, u32>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_polynomial() {
        // d/du1 of 1/2*(-u1^2 + u2^2) = -u1
        let e = Expr::mul(vec![
            Expr::ratio(1, 2),
            Expr::add(vec![
                Expr::sym("u1").powi(2).neg(),
                Expr::sym("u2").powi(2),
            ]),
        ]);
        let d = diff(&e, "u1");
        let expect = Expr::sym("u1").neg();
        assert_eq!(normalize(&d.clone().sub(expect)), Expr::zero());
    }

    #[test]
    fn diff_opaque_linear() {
        let e = Expr::mul(vec![
            Expr::app("U", vec![Expr::sym("t"), Expr::sym("x")]),
            Expr::sym("u"),
        ]);
        let d = diff(&e, "u");
        assert_eq!(d, Expr::app("U", vec![Expr::sym("t"), Expr::sym("x")]));
    }

    #[test]
    fn diff_sqrt_matches_finite_differences() {
        // d/du1 sqrt(1 + u1^2 + u2^2) at random rational points
        let e = Expr::add(vec![
            Expr::one(),
            Expr::sym("u1").powi(2),
            Expr::sym("u2").powi(2),
        ])
        .sqrt();
        let d = diff(&e, "u1");
        let pts = [(0.3, 0.7), (1.25, -0.5), (-2.0, 0.125), (0.6, 0.8), (3.5, -1.5)];
        for (a, b) in pts {
            let mut p = HashMap::new();
            p.insert("u1".to_string(), a);
            p.insert("u2".to_string(), b);
            let dv = eval_numeric(&d, &p).unwrap();
            let h = 1e-6;
            let mut ph = p.clone();
            ph.insert("u1".to_string(), a + h);
            let mut pl = p.clone();
            pl.insert("u1".to_string(), a - h);
            let fd = (eval_numeric(&e, &ph).unwrap() - eval_numeric(&e, &pl).unwrap()) / (2.0 * h);
            assert!((dv - fd).abs() / fd.abs().max(1.0) < 1e-6, "{dv} vs {fd}");
        }
    }

    #[test]
    fn jets_differentiate_like_atoms() {
        let e = Expr::mul(vec![Expr::jet("t", "u"), Expr::jet("t", "u")]);
        let d = diff(&e, "D[t][u]");
        let expect = Expr::mul(vec![Expr::int(2), Expr::jet("t", "u")]);
        assert_eq!(normalize(&d.sub(expect)), Expr::zero());
    }

    #[test]
    fn substitute_scales_homogeneously() {
        let e = Expr::mul(vec![Expr::sym("u1"), Expr::sym("u2")]);
        let mut b = HashMap::new();
        b.insert("u1".into(), Expr::mul(vec![Expr::sym("t"), Expr::sym("u1")]));
        b.insert("u2".into(), Expr::mul(vec![Expr::sym("t"), Expr::sym("u2")]));
        let s = substitute(&e, &b);
        let expect = Expr::mul(vec![
            Expr::sym("t").powi(2),
            Expr::sym("u1"),
            Expr::sym("u2"),
        ]);
        assert_eq!(normalize(&s.sub(expect)), Expr::zero());
    }

    #[test]
    fn eval_rational_power() {
        let e = Expr::sym("tau").pow(rat(-1, 2));
        let mut p = HashMap::new();
        p.insert("tau".to_string(), 4.0);
        assert_eq!(eval_numeric(&e, &p).unwrap(), 0.5);
    }

    #[test]
    fn render_round_trip_shapes() {
        let e = Expr::add(vec![
            Expr::sym("u").powi(2),
            Expr::mul(vec![Expr::int(-3), Expr::sym("v")]),
            Expr::ratio(1, 2),
        ]);
        let t = e.to_text();
        assert!(t.contains("u^2"));
        assert!(t.contains("- 3*v") || t.contains("-3*v"));
    }
}
