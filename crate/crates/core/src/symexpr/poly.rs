//! Sparse multivariate polynomials over the rationals, used as the
//! canonical carrier for the rational-function class. Variables are atom
//! keys (strings); ordering is graded lexicographic.

use super::{Mono, Rational};
use num::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

pub fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = a.clone();
    for (v, e) in b {
        *out.entry(v.clone()).or_insert(0) += e;
    }
    out
}

pub fn mono_div(a: &Mono, b: &Mono) -> Option<Mono> {
    let mut out = a.clone();
    for (v, e) in b {
        let slot = out.get_mut(v)?;
        if *slot < *e {
            return None;
        }
        *slot -= e;
        if *slot == 0 {
            out.remove(v);
        }
    }
    Some(out)
}

pub fn mono_degree(m: &Mono) -> u32 {
    m.values().sum()
}

/// Graded lexicographic order on monomials.
pub fn mono_cmp(a: &Mono, b: &Mono) -> Ordering {
    mono_degree(a).cmp(&mono_degree(b)).then_with(|| {
        // lex on the sorted variable sequence; higher power of the
        // alphabetically first differing variable wins
        let mut ia = a.iter();
        let mut ib = b.iter();
        loop {
            match (ia.next(), ib.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((va, ea)), Some((vb, eb))) => {
                    match va.cmp(vb) {
                        // an earlier variable name means this monomial has
                        // positive degree there while the other has zero
                        Ordering::Less => return Ordering::Greater,
                        Ordering::Greater => return Ordering::Less,
                        Ordering::Equal => match ea.cmp(eb) {
                            Ordering::Equal => continue,
                            other => return other,
                        },
                    }
                }
            }
        }
    })
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    pub terms: BTreeMap<Mono, Rational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: Rational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Mono::new(), c);
        }
        Poly { terms }
    }

    pub fn one() -> Poly {
        Poly::constant(Rational::one())
    }

    pub fn var(name: &str) -> Poly {
        let mut m = Mono::new();
        m.insert(name.to_string(), 1);
        let mut terms = BTreeMap::new();
        terms.insert(m, Rational::one());
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.len() <= 1 && self.terms.keys().all(|m| m.is_empty())
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(Rational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Mono::new()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn insert_term(&mut self, m: Mono, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().clone() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.insert_term(mono_mul(ma, mb), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k.clone() * c.clone())).collect(),
        }
    }

    pub fn pow(&self, mut k: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for v in m.keys() {
                out.insert(v.clone());
            }
        }
        out
    }

    pub fn degree_in(&self, v: &str) -> u32 {
        self.terms.keys().map(|m| m.get(v).copied().unwrap_or(0)).max().unwrap_or(0)
    }

    pub fn leading(&self) -> Option<(&Mono, &Rational)> {
        self.terms.iter().max_by(|(a, _), (b, _)| mono_cmp(a, b))
    }

    /// View as univariate in `v`: exponent -> coefficient polynomial in the
    /// remaining variables.
    pub fn univariate_in(&self, v: &str) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.get(v).copied().unwrap_or(0);
            let mut rest = m.clone();
            rest.remove(v);
            out.entry(e).or_insert_with(Poly::zero).insert_term(rest, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    pub fn from_univariate(v: &str, coeffs: &BTreeMap<u32, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (e, p) in coeffs {
            for (m, c) in &p.terms {
                let mut m2 = m.clone();
                if *e > 0 {
                    m2.insert(v.to_string(), *e);
                }
                out.insert_term(m2, c.clone());
            }
        }
        out
    }

    /// Exact multivariate division; `None` when the division does not come
    /// out even.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (dlm, dlc) = {
            let (m, c) = divisor.leading().unwrap();
            (m.clone(), c.clone())
        };
        let mut rem = self.clone();
        let mut quo = Poly::zero();
        while !rem.is_zero() {
            let (rlm, rlc) = {
                let (m, c) = rem.leading().unwrap();
                (m.clone(), c.clone())
            };
            let qm = mono_div(&rlm, &dlm)?;
            let qc = rlc / dlc.clone();
            let mut t = Poly::zero();
            t.insert_term(qm, qc);
            quo = quo.add(&t);
            rem = rem.sub(&t.mul(divisor));
        }
        Some(quo)
    }

    /// Remainder of multivariate division by `divisor` (single divisor,
    /// graded-lex leading term). Used for reduction modulo a constraint.
    pub fn rem_by(&self, divisor: &Poly) -> Poly {
        if divisor.is_zero() || divisor.as_constant().is_some() {
            return if divisor.as_constant().map(|c| !c.is_zero()).unwrap_or(false) {
                Poly::zero()
            } else {
                self.clone()
            };
        }
        let (dlm, dlc) = {
            let (m, c) = divisor.leading().unwrap();
            (m.clone(), c.clone())
        };
        let mut rem = self.clone();
        let mut out = Poly::zero();
        let mut guard = 0usize;
        while !rem.is_zero() {
            guard += 1;
            if guard > 200_000 {
                return out.add(&rem);
            }
            let (rlm, rlc) = {
                let (m, c) = rem.leading().unwrap();
                (m.clone(), c.clone())
            };
            match mono_div(&rlm, &dlm) {
                Some(qm) => {
                    let mut t = Poly::zero();
                    t.insert_term(qm, rlc / dlc.clone());
                    rem = rem.sub(&t.mul(divisor));
                }
                None => {
                    let mut t = Poly::zero();
                    t.insert_term(rlm.clone(), rlc.clone());
                    out = out.add(&t);
                    rem = rem.sub(&t);
                }
            }
        }
        out
    }

    /// Substitutes a polynomial for a variable.
    pub fn subst_var(&self, v: &str, val: &Poly) -> Poly {
        let uni = self.univariate_in(v);
        let mut out = Poly::zero();
        for (e, coeff) in uni {
            out = out.add(&coeff.mul(&val.pow(e)));
        }
        out
    }

    /// Clears rational denominators and divides by the integer content; the
    /// leading coefficient is made positive. The result generates the same
    /// ideal.
    pub fn primitive(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut denom_lcm = num::BigInt::one();
        for c in self.terms.values() {
            let d = c.denom();
            denom_lcm = num::integer::lcm(denom_lcm, d.clone());
        }
        let mut scaled: Vec<(Mono, num::BigInt)> = self
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), c.numer() * (&denom_lcm / c.denom())))
            .collect();
        let mut g = num::BigInt::zero();
        for (_, c) in &scaled {
            g = num::integer::gcd(g, c.clone());
        }
        if g.is_zero() {
            g = num::BigInt::one();
        }
        let lead_neg = self.leading().map(|(_, c)| c.is_negative()).unwrap_or(false);
        if lead_neg {
            g = -g;
        }
        for (_, c) in &mut scaled {
            *c = &*c / &g;
        }
        Poly {
            terms: scaled
                .into_iter()
                .map(|(m, c)| (m, Rational::from_integer(c)))
                .collect::<BTreeMap<_, _>>()
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }
}

/// Pseudo-remainder of `a` by `b`, both viewed as univariate in `v`.
fn pseudo_rem(a: &Poly, b: &Poly, v: &str) -> Poly {
    let db = b.degree_in(v);
    let ub = b.univariate_in(v);
    let lb = ub.get(&db).cloned().unwrap_or_else(Poly::zero);
    let mut r = a.clone();
    loop {
        let dr = r.degree_in(v);
        if r.is_zero() || dr < db {
            return r;
        }
        let ur = r.univariate_in(v);
        let lr = ur.get(&dr).cloned().unwrap_or_else(Poly::zero);
        // r := lb*r - lr * v^(dr-db) * b
        let mut shift = Poly::one();
        if dr > db {
            shift = Poly::var(v).pow(dr - db);
        }
        r = r.mul(&lb).sub(&lr.mul(&shift).mul(b));
    }
}

fn content_in(p: &Poly, v: &str) -> Poly {
    let uni = p.univariate_in(v);
    let mut g = Poly::zero();
    for c in uni.values() {
        g = gcd(&g, c);
        if g.as_constant().map(|c| c.is_one()).unwrap_or(false) {
            break;
        }
    }
    g
}

/// Multivariate GCD over the rationals via primitive pseudo-remainder
/// sequences. The result is primitive with positive leading coefficient.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive();
    }
    if b.is_zero() {
        return a.primitive();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    // pick the variable of lowest total occurrence to recurse on
    let vars_a = a.vars();
    let vars_b = b.vars();
    let common: Vec<&String> = vars_a.intersection(&vars_b).collect();
    if common.is_empty() {
        // no shared variable: gcd is the gcd of contents, which for
        // primitive parts in disjoint variables is constant
        return Poly::one();
    }
    let v = common[0].clone();
    let ca = content_in(a, &v);
    let cb = content_in(b, &v);
    let cg = gcd(&ca, &cb);
    let pa = a.div_exact(&ca).unwrap_or_else(|| a.clone());
    let pb = b.div_exact(&cb).unwrap_or_else(|| b.clone());
    let (mut f, mut g) = if pa.degree_in(&v) >= pb.degree_in(&v) {
        (pa, pb)
    } else {
        (pb, pa)
    };
    loop {
        let r = pseudo_rem(&f, &g, &v);
        if r.is_zero() {
            break;
        }
        let rc = content_in(&r, &v);
        let rp = r.div_exact(&rc).unwrap_or(r);
        f = g;
        g = rp;
        if g.degree_in(&v) == 0 {
            g = Poly::one();
            break;
        }
    }
    cg.mul(&g).primitive()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::rat_int;

    fn p_uv(pairs: &[(i64, &[(&str, u32)])]) -> Poly {
        let mut out = Poly::zero();
        for (c, m) in pairs {
            let mono: Mono = m.iter().map(|(v, e)| (v.to_string(), *e)).collect();
            out.insert_term(mono, rat_int(*c));
        }
        out
    }

    #[test]
    fn gcd_cancels_difference_of_squares() {
        // (u^2 - 1) and (u - 1)
        let a = p_uv(&[(1, &[("u", 2)]), (-1, &[])]);
        let b = p_uv(&[(1, &[("u", 1)]), (-1, &[])]);
        let g = gcd(&a, &b);
        assert_eq!(g, b);
        assert_eq!(a.div_exact(&g).unwrap(), p_uv(&[(1, &[("u", 1)]), (1, &[])]));
    }

    #[test]
    fn gcd_multivariate() {
        // (x+y)^2 * x and (x+y) * y
        let s = p_uv(&[(1, &[("x", 1)]), (1, &[("y", 1)])]);
        let a = s.mul(&s).mul(&Poly::var("x"));
        let b = s.mul(&Poly::var("y"));
        let g = gcd(&a, &b);
        assert_eq!(g, s.primitive());
    }

    #[test]
    fn div_exact_detects_failure() {
        let a = p_uv(&[(1, &[("x", 2)]), (1, &[])]);
        let b = p_uv(&[(1, &[("x", 1)]), (1, &[])]);
        assert!(a.div_exact(&b).is_none());
    }

    #[test]
    fn pow_and_subst() {
        let s = p_uv(&[(1, &[("x", 1)]), (1, &[])]); // x + 1
        let sq = s.pow(2);
        assert_eq!(sq, p_uv(&[(1, &[("x", 2)]), (2, &[("x", 1)]), (1, &[])]));
        let at = sq.subst_var("x", &Poly::constant(rat_int(2)));
        assert_eq!(at.as_constant().unwrap(), rat_int(9));
    }

    #[test]
    fn rem_by_reduces_leading_terms() {
        // reduce x^2 modulo x^2 - y -> y
        let f = Poly::var("x").pow(2);
        let c = p_uv(&[(1, &[("x", 2)]), (-1, &[("y", 1)])]);
        assert_eq!(f.rem_by(&c), Poly::var("y"));
    }
}
