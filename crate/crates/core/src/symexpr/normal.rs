//! Canonical rational-function form. An expression tree is flattened into a
//! numerator/denominator pair of polynomials whose variables are atom keys:
//! plain symbols, jet placeholders, opaque applications (with formal
//! partials), elementary-function applications and rational-power radicals.
//! Radical atoms `r = base^(1/q)` carry the rewrite `r^q -> base`, which
//! keeps exponent laws like `tau^(1/2)*tau^(-1/2) = 1` exact.

use super::poly::{gcd, Poly};
use super::{Expr, Mono, OpaqueApp, Rational};
use num::{One, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

#[derive(Clone, Debug)]
pub enum AtomKind {
    /// Plain symbol, jet placeholder or opaque application: formally
    /// independent of every other atom.
    Free,
    /// Elementary-function application; zero tests involving it fall back
    /// to numeric sampling.
    Elem,
    /// `key = base^(1/q)`; monomial exponents reduce modulo `q` against
    /// `base_poly`.
    Radical { q: u32, base_poly: Poly },
    /// Fractional power that did not qualify as a reducible radical.
    OpaquePow,
}

#[derive(Clone, Debug)]
pub struct AtomMeta {
    pub expr: Expr,
    pub kind: AtomKind,
}

static REGISTRY: Lazy<Mutex<HashMap<String, AtomMeta>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn register(key: &str, meta: AtomMeta) {
    let mut reg = REGISTRY.lock().unwrap();
    reg.entry(key.to_string()).or_insert(meta);
}

pub fn atom_meta(key: &str) -> Option<AtomMeta> {
    REGISTRY.lock().unwrap().get(key).cloned()
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum NormError {
    #[error("division by an expression that normalizes to zero")]
    DivisionByZero,
    #[error("exponent out of supported range")]
    ExponentRange,
    #[error("non-polynomial dependence on `{0}`")]
    NonPolynomial(String),
}

#[derive(Clone, Debug)]
pub struct RatFunc {
    pub num: Poly,
    pub den: Poly,
}

impl RatFunc {
    pub fn from_poly(p: Poly) -> RatFunc {
        RatFunc { num: p, den: Poly::one() }
    }

    pub fn constant(c: Rational) -> RatFunc {
        RatFunc::from_poly(Poly::constant(c))
    }

    pub fn zero() -> RatFunc {
        RatFunc::constant(Rational::zero())
    }

    pub fn one() -> RatFunc {
        RatFunc::constant(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        RatFunc {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        RatFunc { num: self.num.mul(&other.num), den: self.den.mul(&other.den) }
    }

    pub fn scale(&self, c: &Rational) -> RatFunc {
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn inv(&self) -> Result<RatFunc, NormError> {
        let c = self.clone().canonical();
        if c.num.is_zero() {
            return Err(NormError::DivisionByZero);
        }
        Ok(RatFunc { num: c.den, den: c.num })
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc, NormError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow_int(&self, k: i64) -> Result<RatFunc, NormError> {
        let e = k.unsigned_abs() as u32;
        let base = if k < 0 { self.inv()? } else { self.clone() };
        Ok(RatFunc { num: base.num.pow(e), den: base.den.pow(e) })
    }

    /// Reduces radical exponents, cancels the GCD and scales the
    /// denominator monic. Canonical for the rational-function class.
    pub fn canonical(self) -> RatFunc {
        let num = reduce_radicals(&self.num);
        let den = reduce_radicals(&self.den);
        if num.is_zero() {
            return RatFunc::zero();
        }
        let g = gcd(&num, &den);
        let (mut num, mut den) = match (num.div_exact(&g), den.div_exact(&g)) {
            (Some(n), Some(d)) => (n, d),
            _ => (num, den),
        };
        if let Some((_, lc)) = den.leading() {
            let lc = lc.clone();
            if !lc.is_one() {
                let inv = lc.recip();
                num = num.scale(&inv);
                den = den.scale(&inv);
            }
        }
        RatFunc { num, den }
    }
}

/// Applies `r^q -> base` for every radical atom until all radical
/// exponents are below their index.
fn reduce_radicals(p: &Poly) -> Poly {
    let mut radicals: Vec<(String, u32, Poly)> = Vec::new();
    for v in p.vars() {
        if let Some(AtomMeta { kind: AtomKind::Radical { q, base_poly }, .. }) = atom_meta(&v) {
            radicals.push((v, q, base_poly));
        }
    }
    if radicals.is_empty() {
        return p.clone();
    }
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        let mut factor = Poly::constant(c.clone());
        let mut mono = Mono::new();
        for (v, e) in m {
            if let Some((_, q, base)) = radicals.iter().find(|(rv, _, _)| rv == v) {
                let whole = e / q;
                let rem = e % q;
                if whole > 0 {
                    factor = factor.mul(&base.pow(whole));
                }
                if rem > 0 {
                    mono.insert(v.clone(), rem);
                }
            } else {
                mono.insert(v.clone(), *e);
            }
        }
        let mut t = Poly::zero();
        t.insert_term(mono, Rational::one());
        out = out.add(&factor.mul(&t));
    }
    out
}

/// Canonical rendering of an atom expression used as its registry key.
fn atom_key(e: &Expr) -> String {
    e.to_text()
}

/// Flattens a tree into a rational function over atom keys, registering
/// every atom encountered.
pub fn to_ratfunc(e: &Expr) -> Result<RatFunc, NormError> {
    match e {
        Expr::Rat(r) => Ok(RatFunc::constant(r.clone())),
        Expr::Sym(s) => {
            register(s, AtomMeta { expr: e.clone(), kind: AtomKind::Free });
            Ok(RatFunc::from_poly(Poly::var(s)))
        }
        Expr::Jet { .. } => {
            let key = atom_key(e);
            register(&key, AtomMeta { expr: e.clone(), kind: AtomKind::Free });
            Ok(RatFunc::from_poly(Poly::var(&key)))
        }
        Expr::App(a) => {
            // canonicalize arguments so equal applications share a key
            let mut args = Vec::with_capacity(a.args.len());
            for g in &a.args {
                args.push(canonical_expr(g)?);
            }
            let canon = Expr::App(OpaqueApp { name: a.name.clone(), args, deriv: a.deriv.clone() });
            let key = atom_key(&canon);
            register(&key, AtomMeta { expr: canon, kind: AtomKind::Free });
            Ok(RatFunc::from_poly(Poly::var(&key)))
        }
        Expr::Elem(f, a) => {
            let arg = canonical_expr(a)?;
            let canon = Expr::elem(*f, arg);
            let key = atom_key(&canon);
            register(&key, AtomMeta { expr: canon, kind: AtomKind::Elem });
            Ok(RatFunc::from_poly(Poly::var(&key)))
        }
        Expr::Sum(ts) => {
            let mut acc = RatFunc::zero();
            for t in ts {
                acc = acc.add(&to_ratfunc(t)?);
                // keep intermediate blowup in check
                if acc.den.terms.len() > 64 {
                    acc = acc.canonical();
                }
            }
            Ok(acc)
        }
        Expr::Prod(fs) => {
            let mut acc = RatFunc::one();
            for f in fs {
                acc = acc.mul(&to_ratfunc(f)?);
            }
            Ok(acc)
        }
        Expr::Pow(b, r) => {
            if r.is_integer() {
                let k = r.to_integer().to_i64().ok_or(NormError::ExponentRange)?;
                return to_ratfunc(b)?.pow_int(k);
            }
            let q = r.denom().to_u32().ok_or(NormError::ExponentRange)?;
            let p = r.numer().to_i64().ok_or(NormError::ExponentRange)?;
            let base = canonical_expr(b)?;
            let base_rf = to_ratfunc(&base)?.canonical();
            let reducible = base_rf.den.as_constant().map(|c| c.is_one()).unwrap_or(false)
                && base_rf.num.vars().iter().all(|v| {
                    !matches!(
                        atom_meta(v).map(|m| m.kind),
                        Some(AtomKind::Radical { .. }) | Some(AtomKind::OpaquePow)
                    )
                });
            if reducible {
                let root = Expr::Pow(Box::new(base), Rational::new(1.into(), q.into()));
                let key = atom_key(&root);
                register(
                    &key,
                    AtomMeta { expr: root, kind: AtomKind::Radical { q, base_poly: base_rf.num } },
                );
                RatFunc::from_poly(Poly::var(&key)).pow_int(p)
            } else {
                let node = Expr::Pow(Box::new(base), r.clone());
                let key = atom_key(&node);
                register(&key, AtomMeta { expr: node, kind: AtomKind::OpaquePow });
                Ok(RatFunc::from_poly(Poly::var(&key)))
            }
        }
    }
}

fn atom_expr(key: &str) -> Expr {
    atom_meta(key).map(|m| m.expr).unwrap_or_else(|| Expr::sym(key))
}

fn mono_to_expr(m: &Mono) -> Vec<Expr> {
    let mut factors = Vec::new();
    for (v, e) in m {
        let base = atom_expr(v);
        factors.push(base.pow(Rational::from_integer((*e).into())));
    }
    factors
}

pub fn poly_to_expr(p: &Poly) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    let mut terms: Vec<(&Mono, &Rational)> = p.terms.iter().collect();
    terms.sort_by(|(a, _), (b, _)| super::poly::mono_cmp(b, a));
    let mut out = Vec::with_capacity(terms.len());
    for (m, c) in terms {
        let mut factors = vec![Expr::Rat(c.clone())];
        factors.extend(mono_to_expr(m));
        out.push(Expr::mul(factors));
    }
    Expr::add(out)
}

pub fn ratfunc_to_expr(r: &RatFunc) -> Expr {
    let num = poly_to_expr(&r.num);
    if r.den.as_constant().map(|c| c.is_one()).unwrap_or(false) {
        return num;
    }
    let den = poly_to_expr(&r.den);
    Expr::mul(vec![num, den.powi(-1)])
}

/// Canonical form for the rational-function class; expressions outside the
/// class (division by zero, oversized exponents) are returned unchanged.
pub fn normalize(e: &Expr) -> Expr {
    match canonical_expr(e) {
        Ok(c) => c,
        Err(_) => e.clone(),
    }
}

pub fn canonical_expr(e: &Expr) -> Result<Expr, NormError> {
    Ok(ratfunc_to_expr(&to_ratfunc(e)?.canonical()))
}

/// Splits `e` as a polynomial in the named variables, returning the
/// coefficient of each monomial. Fails when a listed variable occurs inside
/// a denominator, under a radical or inside another atom.
pub fn poly_coefficients(
    e: &Expr,
    vars: &[String],
) -> Result<BTreeMap<Mono, Expr>, NormError> {
    let rf = to_ratfunc(e)?.canonical();
    let var_set: std::collections::BTreeSet<String> = vars.iter().cloned().collect();
    let check_free = |p: &Poly, ctx: &str| -> Result<(), NormError> {
        for v in p.vars() {
            if var_set.contains(&v) && ctx == "den" {
                return Err(NormError::NonPolynomial(v));
            }
            if !var_set.contains(&v) {
                // a non-listed atom must not secretly depend on a listed var
                if let Some(meta) = atom_meta(&v) {
                    if meta.expr.mentions_any(&var_set) {
                        let hit = vars
                            .iter()
                            .find(|n| {
                                let mut one = std::collections::BTreeSet::new();
                                one.insert((*n).clone());
                                meta.expr.mentions_any(&one)
                            })
                            .cloned()
                            .unwrap_or_default();
                        return Err(NormError::NonPolynomial(hit));
                    }
                }
            }
        }
        Ok(())
    };
    check_free(&rf.num, "num")?;
    check_free(&rf.den, "den")?;
    let mut groups: BTreeMap<Mono, Poly> = BTreeMap::new();
    for (m, c) in &rf.num.terms {
        let mut key = Mono::new();
        let mut rest = Mono::new();
        for (v, ex) in m {
            if var_set.contains(v) {
                key.insert(v.clone(), *ex);
            } else {
                rest.insert(v.clone(), *ex);
            }
        }
        groups.entry(key).or_insert_with(Poly::zero).insert_term(rest, c.clone());
    }
    groups.retain(|_, p| !p.is_zero());
    let mut out = BTreeMap::new();
    for (m, p) in groups {
        let coeff = RatFunc { num: p, den: rf.den.clone() }.canonical();
        out.insert(m, ratfunc_to_expr(&coeff));
    }
    Ok(out)
}
