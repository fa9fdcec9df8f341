//! `.pdh` document parser. UTF-8 text, `#` line comments, items per the
//! grammar in the module docs; every error carries a line/column location.

use super::*;
use crate::symexpr::{diff, rat, rat_int, Expr, Rational};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Name(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, Diagnostic> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut push = |tok: Tok| out.push(Spanned { tok, line: l0, col: c0 });
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            ' ' | '\t' | '\r' => {
                col += 1;
                i += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '0'..='9' => {
                let mut v: i64 = 0;
                let mut len = 0;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    v = v
                        .checked_mul(10)
                        .and_then(|v| v.checked_add((chars[i] as u8 - b'0') as i64))
                        .ok_or(Diagnostic {
                            line: l0,
                            col: c0,
                            code: E_LEX,
                            message: "integer literal out of range".into(),
                        })?;
                    i += 1;
                    len += 1;
                }
                col += len;
                push(Tok::Int(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut name = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    name.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                push(Tok::Name(name));
            }
            '-' => {
                if i + 1 < chars.len() && chars[i + 1] == '>' {
                    push(Tok::Punct("->"));
                    i += 2;
                    col += 2;
                } else {
                    push(Tok::Punct("-"));
                    i += 1;
                    col += 1;
                }
            }
            '{' | '}' | '[' | ']' | '(' | ')' | ';' | ',' | '=' | '+' | '*' | '/' | '^'
            | ':' => {
                let s: &'static str = match c {
                    '{' => "{",
                    '}' => "}",
                    '[' => "[",
                    ']' => "]",
                    '(' => "(",
                    ')' => ")",
                    ';' => ";",
                    ',' => ",",
                    '=' => "=",
                    '+' => "+",
                    '*' => "*",
                    '/' => "/",
                    '^' => "^",
                    _ => ":",
                };
                push(Tok::Punct(s));
                i += 1;
                col += 1;
            }
            other => {
                return Err(Diagnostic {
                    line: l0,
                    col: c0,
                    code: E_LEX,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    diags: Vec<Diagnostic>,
    chart: Chart,
    chart_ref: Option<ChartRef>,
    /// wedge differentials `d(name)` permitted in the current expression
    wedge_ok: bool,
    /// undeclared names resolve to plain symbols (simulate section)
    lenient: bool,
}

const ITEM_KEYWORDS: &[&str] = &[
    "bundle", "declare", "const", "form", "field", "current", "map", "constraints",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        (self.toks[self.pos].line, self.toks[self.pos].col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&mut self, code: &'static str, message: String) {
        let (line, col) = self.here();
        self.diags.push(Diagnostic { line, col, code, message });
    }

    fn expect_punct(&mut self, p: &'static str) -> bool {
        if self.peek() == &Tok::Punct(p) {
            self.bump();
            true
        } else {
            self.error(E_SYNTAX, format!("expected `{p}`"));
            false
        }
    }

    fn expect_name(&mut self) -> Option<String> {
        if let Tok::Name(n) = self.peek().clone() {
            self.bump();
            Some(n)
        } else {
            self.error(E_SYNTAX, "expected a name".into());
            None
        }
    }

    /// Skips ahead to the next item keyword or closing brace, for recovery.
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Punct("}") => {
                    self.bump();
                    return;
                }
                Tok::Name(n) if ITEM_KEYWORDS.contains(&n.as_str()) => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn chart_ref(&mut self) -> ChartRef {
        if self.chart_ref.is_none() {
            self.chart_ref = Some(Arc::new(self.chart.clone()));
        }
        self.chart_ref.clone().unwrap()
    }

    // ---- expressions -----------------------------------------------------

    fn parse_expr(&mut self) -> Expr {
        self.parse_binary(0)
    }

    fn parse_binary(&mut self, min_prec: u8) -> Expr {
        let mut lhs = self.parse_factor();
        loop {
            let (op, prec): (&str, u8) = match self.peek() {
                Tok::Punct("+") => ("+", 1),
                Tok::Punct("-") => ("-", 1),
                Tok::Punct("*") => ("*", 2),
                Tok::Punct("/") => ("/", 2),
                _ => break,
            };
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.parse_binary(prec + 1);
            lhs = match op {
                "+" => Expr::add(vec![lhs, rhs]),
                "-" => lhs.sub(rhs),
                "*" => Expr::mul(vec![lhs, rhs]),
                _ => Expr::mul(vec![lhs, rhs.pow(rat_int(-1))]),
            };
        }
        lhs
    }

    fn parse_factor(&mut self) -> Expr {
        if self.peek() == &Tok::Punct("-") {
            self.bump();
            return self.parse_factor().neg();
        }
        let mut e = self.parse_primary();
        while self.peek() == &Tok::Punct("^") {
            self.bump();
            let ex = self.parse_exponent();
            e = e.pow(ex);
        }
        e
    }

    fn parse_exponent(&mut self) -> Rational {
        let neg_out = if self.peek() == &Tok::Punct("-") {
            self.bump();
            true
        } else {
            false
        };
        let mag = if self.peek() == &Tok::Punct("(") {
            self.bump();
            let neg_in = if self.peek() == &Tok::Punct("-") {
                self.bump();
                true
            } else {
                false
            };
            let p = match self.bump() {
                Tok::Int(v) => v,
                _ => {
                    self.error(E_SYNTAX, "expected an integer exponent".into());
                    0
                }
            };
            let q = if self.peek() == &Tok::Punct("/") {
                self.bump();
                match self.bump() {
                    Tok::Int(v) if v != 0 => v,
                    _ => {
                        self.error(E_SYNTAX, "expected a nonzero denominator".into());
                        1
                    }
                }
            } else {
                1
            };
            self.expect_punct(")");
            let r = rat(p, q);
            if neg_in {
                -r
            } else {
                r
            }
        } else {
            match self.bump() {
                Tok::Int(v) => rat_int(v),
                _ => {
                    self.error(E_SYNTAX, "expected an integer or (p/q) exponent".into());
                    rat_int(1)
                }
            }
        };
        if neg_out {
            -mag
        } else {
            mag
        }
    }

    fn parse_primary(&mut self) -> Expr {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Expr::int(v)
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.parse_expr();
                self.expect_punct(")");
                e
            }
            Tok::Name(name) => {
                self.bump();
                self.parse_name_use(name)
            }
            _ => {
                self.error(E_SYNTAX, "expected an expression".into());
                self.bump();
                Expr::zero()
            }
        }
    }

    fn parse_name_use(&mut self, name: String) -> Expr {
        // jet placeholder D[i][a]
        if name == "D" && self.peek() == &Tok::Punct("[") {
            self.bump();
            let base = self.expect_name().unwrap_or_default();
            self.expect_punct("]");
            self.expect_punct("[");
            let fiber = self.expect_name().unwrap_or_default();
            self.expect_punct("]");
            if self.chart.base_index(&base).is_none() {
                self.error(E_UNKNOWN, format!("`{base}` is not a base coordinate"));
            }
            if self.chart.fiber_index(&fiber).is_none() {
                self.error(E_UNKNOWN, format!("`{fiber}` is not a fiber coordinate"));
            }
            return Expr::jet(&base, &fiber);
        }
        // wedge differential d(name)
        if name == "d" && self.wedge_ok && self.peek() == &Tok::Punct("(") {
            self.bump();
            let coord = self.expect_name().unwrap_or_default();
            self.expect_punct(")");
            if self.chart.base_index(&coord).is_none() && self.chart.fiber_index(&coord).is_none()
            {
                self.error(E_UNKNOWN, format!("`{coord}` is not a chart coordinate"));
            }
            return Expr::app("@d", vec![Expr::sym(&coord)]);
        }
        let elem = match name.as_str() {
            "sqrt" => Some(None),
            "exp" => Some(Some(crate::symexpr::ElemFn::Exp)),
            "ln" => Some(Some(crate::symexpr::ElemFn::Ln)),
            "sin" => Some(Some(crate::symexpr::ElemFn::Sin)),
            "cos" => Some(Some(crate::symexpr::ElemFn::Cos)),
            _ => None,
        };
        if let Some(f) = elem {
            if self.expect_punct("(") {
                let arg = self.parse_expr();
                self.expect_punct(")");
                return match f {
                    None => arg.sqrt(),
                    Some(f) => Expr::elem(f, arg),
                };
            }
            return Expr::zero();
        }
        if name == "diff" {
            if self.expect_punct("(") {
                let mut e = self.parse_expr();
                while self.peek() == &Tok::Punct(",") {
                    self.bump();
                    match self.expect_name() {
                        Some(v) => {
                            let known = self.chart.base_index(&v).is_some()
                                || self.chart.fiber_index(&v).is_some()
                                || self.chart.consts.contains_key(&v);
                            if !known {
                                self.error(E_UNKNOWN, format!("`{v}` is not declared"));
                            }
                            e = diff(&e, &v);
                        }
                        None => break,
                    }
                }
                self.expect_punct(")");
                return e;
            }
            return Expr::zero();
        }
        // opaque function application
        if let Some(args_decl) = self.chart.opaque.get(&name).cloned() {
            if self.expect_punct("(") {
                let mut args = Vec::new();
                if self.peek() != &Tok::Punct(")") {
                    loop {
                        args.push(self.parse_expr());
                        if self.peek() == &Tok::Punct(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect_punct(")");
                if args.len() != args_decl.len() {
                    self.error(
                        E_ARITY,
                        format!(
                            "`{name}` declared with {} arguments, called with {}",
                            args_decl.len(),
                            args.len()
                        ),
                    );
                }
                return Expr::app(&name, args);
            }
            return Expr::zero();
        }
        // indexed constant
        if self.chart.consts.contains_key(&name) && self.peek() == &Tok::Punct("(") {
            self.bump();
            let mut indices = Vec::new();
            loop {
                match self.bump() {
                    Tok::Int(v) => indices.push(v),
                    _ => {
                        self.error(E_SYNTAX, "constant indices must be integers".into());
                        break;
                    }
                }
                if self.peek() == &Tok::Punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect_punct(")");
            return self.chart.const_atom(&name, &indices);
        }
        let declared = self.chart.base_index(&name).is_some()
            || self.chart.fiber_index(&name).is_some()
            || self.chart.consts.contains_key(&name)
            || name == "pi";
        if !declared && !self.lenient {
            self.error(E_UNKNOWN, format!("`{name}` is not declared"));
        }
        Expr::sym(&name)
    }

    // ---- items -----------------------------------------------------------

    fn parse_bundle(&mut self) {
        if !self.chart.base.is_empty() {
            self.error(E_DUP, "bundle already declared".into());
        }
        self.expect_punct("{");
        let mut base = Vec::new();
        let mut fiber = Vec::new();
        if let Some(k) = self.expect_name() {
            if k != "base" {
                self.error(E_SYNTAX, "expected `base:`".into());
            }
        }
        self.expect_punct(":");
        loop {
            match self.peek().clone() {
                Tok::Name(n) if n == "fiber" => break,
                Tok::Name(n) => {
                    self.bump();
                    base.push(n);
                    if self.peek() == &Tok::Punct(",") {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        if let Some(k) = self.expect_name() {
            if k != "fiber" {
                self.error(E_SYNTAX, "expected `fiber:`".into());
            }
        }
        self.expect_punct(":");
        loop {
            match self.peek().clone() {
                Tok::Name(n) => {
                    self.bump();
                    fiber.push(n);
                    if self.peek() == &Tok::Punct(",") {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        self.expect_punct("}");
        if base.is_empty() {
            self.error(E_SEMANTIC, "n >= 1 required: at least one base coordinate".into());
        }
        if fiber.is_empty() {
            self.error(E_SEMANTIC, "m >= 1 required: at least one fiber coordinate".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in base.iter().chain(fiber.iter()) {
            if !seen.insert(n.clone()) {
                self.error(E_DUP, format!("coordinate `{n}` declared twice"));
            }
        }
        self.chart.base = base;
        self.chart.fiber = fiber;
        self.chart_ref = None;
    }

    fn parse_declare(&mut self) {
        let name = match self.expect_name() {
            Some(n) => n,
            None => return,
        };
        self.expect_punct("(");
        let mut args = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Name(n) => {
                    self.bump();
                    args.push(n);
                    if self.peek() == &Tok::Punct(",") {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        self.expect_punct(")");
        if self.chart.opaque.contains_key(&name) || self.chart.consts.contains_key(&name) {
            self.error(E_DUP, format!("`{name}` already declared"));
        }
        self.chart.opaque.insert(name, args);
        self.chart_ref = None;
    }

    fn parse_const(&mut self) {
        let name = match self.expect_name() {
            Some(n) => n,
            None => return,
        };
        let sym = match self.peek().clone() {
            Tok::Name(n) if n == "symmetric" => {
                self.bump();
                Symmetry::Symmetric
            }
            Tok::Name(n) if n == "skew" => {
                self.bump();
                Symmetry::Skew
            }
            _ => Symmetry::None,
        };
        if self.chart.opaque.contains_key(&name) || self.chart.consts.contains_key(&name) {
            self.error(E_DUP, format!("`{name}` already declared"));
        }
        self.chart.consts.insert(name, sym);
        self.chart_ref = None;
    }

    fn base_slot(&mut self, name: &str) -> Option<usize> {
        match self.chart.base_index(name) {
            Some(i) => Some(i),
            None => {
                self.error(E_UNKNOWN, format!("`{name}` is not a base coordinate"));
                None
            }
        }
    }

    fn fiber_slot(&mut self, name: &str) -> Option<usize> {
        match self.chart.fiber_index(name) {
            Some(a) => Some(a),
            None => {
                self.error(E_UNKNOWN, format!("`{name}` is not a fiber coordinate"));
                None
            }
        }
    }

    fn parse_form(&mut self, model: &mut SystemModel) {
        let name = match self.expect_name() {
            Some(n) => n,
            None => return,
        };
        match self.expect_name() {
            Some(k) if k == "deg" => {}
            _ => self.error(E_SYNTAX, "expected `deg`".into()),
        }
        let deg = match self.bump() {
            Tok::Int(v @ 0..=2) => v,
            _ => {
                self.error(E_SYNTAX, "form degree must be 0, 1 or 2".into());
                2
            }
        };
        self.expect_punct("{");
        let chart = self.chart_ref();
        let mut f0 = Form0::zero(&chart);
        let mut f1 = Form1::zero(&chart);
        let mut f2 = Form2::zero(&chart);
        // ordered w-entries as written, for the mismatch check
        let mut w_given: Vec<(usize, usize, usize, Expr)> = Vec::new();
        loop {
            let key = match self.peek().clone() {
                Tok::Punct("}") => {
                    self.bump();
                    break;
                }
                Tok::Eof => {
                    self.error(E_SYNTAX, "unterminated form block".into());
                    break;
                }
                Tok::Name(n) => {
                    self.bump();
                    n
                }
                _ => {
                    self.error(E_SYNTAX, "expected a component".into());
                    self.recover();
                    return;
                }
            };
            match (key.as_str(), deg) {
                ("f", 0) => {
                    self.expect_punct("[");
                    let i = self.expect_name().and_then(|n| self.base_slot(&n));
                    self.expect_punct("]");
                    self.expect_punct("=");
                    let e = self.parse_expr();
                    if let Some(i) = i {
                        f0.comps[i] = Expr::add(vec![f0.comps[i].clone(), e]);
                    }
                }
                ("th", 1) => {
                    self.expect_punct("[");
                    let i = self.expect_name().and_then(|n| self.base_slot(&n));
                    self.expect_punct(";");
                    let a = self.expect_name().and_then(|n| self.fiber_slot(&n));
                    self.expect_punct("]");
                    self.expect_punct("=");
                    let e = self.parse_expr();
                    if let (Some(i), Some(a)) = (i, a) {
                        f1.theta[i][a] = Expr::add(vec![f1.theta[i][a].clone(), e]);
                    }
                }
                ("h", 1) => {
                    self.expect_punct("=");
                    let e = self.parse_expr();
                    f1.h = Expr::add(vec![f1.h.clone(), e]);
                }
                ("w", 2) => {
                    self.expect_punct("[");
                    let i = self.expect_name().and_then(|n| self.base_slot(&n));
                    self.expect_punct(";");
                    let a = self.expect_name().and_then(|n| self.fiber_slot(&n));
                    self.expect_punct(",");
                    let b = self.expect_name().and_then(|n| self.fiber_slot(&n));
                    self.expect_punct("]");
                    self.expect_punct("=");
                    let e = self.parse_expr();
                    if let (Some(i), Some(a), Some(b)) = (i, a, b) {
                        if a == b {
                            self.error(
                                E_SEMANTIC,
                                "repeated fiber index in skew slot".into(),
                            );
                        } else {
                            // skew part of the written ordered coefficient
                            f2.add_w(i, a, b, Expr::mul(vec![Expr::ratio(1, 2), e.clone()]));
                            w_given.push((i, a, b, e));
                        }
                    }
                }
                ("v", 2) => {
                    self.expect_punct("[");
                    let a = self.expect_name().and_then(|n| self.fiber_slot(&n));
                    self.expect_punct("]");
                    self.expect_punct("=");
                    let e = self.parse_expr();
                    if let Some(a) = a {
                        f2.v[a] = Expr::add(vec![f2.v[a].clone(), e]);
                    }
                }
                ("wedge", _) => {
                    self.expect_punct("=");
                    self.wedge_ok = true;
                    let e = self.parse_expr();
                    self.wedge_ok = false;
                    self.expand_wedge(&e, deg, &mut f0, &mut f1, &mut f2);
                }
                _ => {
                    self.error(
                        E_SYNTAX,
                        format!("component `{key}` is not valid in a degree-{deg} form"),
                    );
                    // skip to next assignment
                    while !matches!(
                        self.peek(),
                        Tok::Punct("}") | Tok::Eof | Tok::Name(_)
                    ) {
                        self.bump();
                    }
                }
            }
        }
        // both orders of a skew slot written: they must be opposite
        for (i, a, b, e) in &w_given {
            if let Some((_, _, _, e2)) = w_given.iter().find(|(i2, a2, b2, _)| i2 == i && a2 == b && b2 == a)
            {
                let s = Expr::add(vec![e.clone(), e2.clone()]);
                if !crate::symexpr::is_zero(&s).is_zero() {
                    self.error(
                        E_SEMANTIC,
                        format!(
                            "components w[{};{},{}] and the transposed slot are not opposite",
                            chart.base[*i], chart.fiber[*a], chart.fiber[*b]
                        ),
                    );
                }
            }
        }
        let dup = model.forms0.contains_key(&name)
            || model.forms1.contains_key(&name)
            || model.forms2.contains_key(&name)
            || model.fields.contains_key(&name);
        if dup {
            self.error(E_DUP, format!("`{name}` already defined"));
            return;
        }
        match deg {
            0 => {
                model.forms0.insert(name, f0);
            }
            1 => {
                model.forms1.insert(name, f1);
            }
            _ => {
                model.forms2.insert(name, f2.normalized());
            }
        }
    }

    /// Expands a wedge-monomial expression into form components. The tree
    /// must be a polynomial combination of scalars and `d(coord)` factors.
    fn expand_wedge(
        &mut self,
        e: &Expr,
        deg: i64,
        f0: &mut Form0,
        f1: &mut Form1,
        f2: &mut Form2,
    ) {
        let monomials = match wedge_monomials(e) {
            Ok(m) => m,
            Err(msg) => {
                self.error(E_SEMANTIC, msg);
                return;
            }
        };
        let n = self.chart.n();
        for (scalar, diffs) in monomials {
            // split differential factors into fiber and base, tracking the
            // sign of the permutation that moves fiber ones to the front
            let mut sign = 1i64;
            let mut fiber_ix = Vec::new();
            let mut base_ix = Vec::new();
            let mut bad = None;
            for name in &diffs {
                if let Some(a) = self.chart.fiber_index(name) {
                    if base_ix.len() % 2 == 1 {
                        sign = -sign;
                    }
                    fiber_ix.push(a);
                } else if let Some(i) = self.chart.base_index(name) {
                    base_ix.push(i);
                } else {
                    bad = Some(name.clone());
                }
            }
            if let Some(name) = bad {
                self.error(E_UNKNOWN, format!("`{name}` is not a chart coordinate"));
                continue;
            }
            // repeated differentials annihilate the monomial
            let mut fs = fiber_ix.clone();
            fs.sort_unstable();
            fs.dedup();
            let mut bs = base_ix.clone();
            bs.sort_unstable();
            bs.dedup();
            if fs.len() != fiber_ix.len() || bs.len() != base_ix.len() {
                continue;
            }
            sign *= permutation_sign(&fiber_ix) * permutation_sign(&base_ix);
            let fiber_sorted = fs;
            let base_sorted = bs;
            let scalar = if sign < 0 { scalar.clone().neg() } else { scalar.clone() };
            let fcount = fiber_sorted.len();
            let bcount = base_sorted.len();
            // base factor: either d^n x or (up to sign) d^{n-1}x_i
            enum BasePart {
                Volume,
                Density(usize),
            }
            let base_part = if bcount == n {
                BasePart::Volume
            } else if bcount + 1 == n {
                let missing = (0..n).find(|i| !base_sorted.contains(i)).unwrap();
                BasePart::Density(missing)
            } else {
                self.error(
                    E_SEMANTIC,
                    format!("wedge monomial has {bcount} base differentials; expected {} or {n}",
                        n - 1),
                );
                continue;
            };
            // ascending product with one index missing equals
            // (-1)^missing * d^{n-1}x_missing
            let scalar = match &base_part {
                BasePart::Density(i) if i % 2 == 1 => scalar.neg(),
                _ => scalar,
            };
            match (deg, fcount, &base_part) {
                (0, 0, BasePart::Density(i)) => {
                    f0.comps[*i] = Expr::add(vec![f0.comps[*i].clone(), scalar]);
                }
                (1, 1, BasePart::Density(i)) => {
                    let a = fiber_sorted[0];
                    f1.theta[*i][a] = Expr::add(vec![f1.theta[*i][a].clone(), scalar]);
                }
                (1, 0, BasePart::Volume) => {
                    f1.h = Expr::add(vec![f1.h.clone(), scalar.neg()]);
                }
                (2, 2, BasePart::Density(i)) => {
                    let (a, b) = (fiber_sorted[0], fiber_sorted[1]);
                    f2.add_w(*i, a, b, Expr::mul(vec![Expr::ratio(1, 2), scalar]));
                }
                (2, 1, BasePart::Volume) => {
                    let a = fiber_sorted[0];
                    f2.v[a] = Expr::add(vec![f2.v[a].clone(), scalar]);
                }
                _ => {
                    self.error(
                        E_SEMANTIC,
                        format!(
                            "wedge monomial with {fcount} fiber differentials does not fit a degree-{deg} form"
                        ),
                    );
                }
            }
        }
    }

    fn parse_assign_block(&mut self) -> Vec<(String, Expr)> {
        self.expect_punct("{");
        let mut out = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Punct("}") => {
                    self.bump();
                    break;
                }
                Tok::Eof => {
                    self.error(E_SYNTAX, "unterminated block".into());
                    break;
                }
                Tok::Name(n) => {
                    self.bump();
                    self.expect_punct("=");
                    let e = self.parse_expr();
                    out.push((n, e));
                }
                _ => {
                    self.error(E_SYNTAX, "expected `name = expr`".into());
                    self.recover();
                    break;
                }
            }
        }
        out
    }

    fn run(&mut self, model: &mut SystemModel) {
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Punct("[") => {
                    self.bump();
                    match self.expect_name() {
                        Some(k) if k == "simulate" => {}
                        _ => self.error(E_SYNTAX, "expected `[simulate]`".into()),
                    }
                    self.expect_punct("]");
                    let mut entries = BTreeMap::new();
                    self.lenient = true;
                    loop {
                        match self.peek().clone() {
                            Tok::Name(n)
                                if !ITEM_KEYWORDS.contains(&n.as_str())
                                    && self.toks[self.pos + 1].tok == Tok::Punct("=") =>
                            {
                                self.bump();
                                self.bump();
                                let e = self.parse_expr();
                                entries.insert(n, e);
                            }
                            _ => break,
                        }
                    }
                    self.lenient = false;
                    model.simulate = Some(SimSpec { entries });
                }
                Tok::Name(kw) => {
                    self.bump();
                    match kw.as_str() {
                        "bundle" => self.parse_bundle(),
                        "declare" => self.parse_declare(),
                        "const" => self.parse_const(),
                        "form" => self.parse_form(model),
                        "field" => {
                            let name = self.expect_name().unwrap_or_default();
                            let assigns = self.parse_assign_block();
                            let chart = self.chart_ref();
                            let mut fld = VerticalField::zero(&chart);
                            for (k, e) in assigns {
                                match self.chart.fiber_index(&k) {
                                    Some(a) => fld.comps[a] = e,
                                    None => self.error(
                                        E_UNKNOWN,
                                        format!("`{k}` is not a fiber coordinate"),
                                    ),
                                }
                            }
                            if model.fields.contains_key(&name) {
                                self.error(E_DUP, format!("`{name}` already defined"));
                            } else {
                                model.fields.insert(name, fld);
                            }
                        }
                        "current" => {
                            let name = self.expect_name().unwrap_or_default();
                            let assigns = self.parse_assign_block();
                            let chart = self.chart_ref();
                            let mut cur = Form0::zero(&chart);
                            for (k, e) in assigns {
                                match self.chart.base_index(&k) {
                                    Some(i) => cur.comps[i] = e,
                                    None => self.error(
                                        E_UNKNOWN,
                                        format!("`{k}` is not a base coordinate"),
                                    ),
                                }
                            }
                            if model.forms0.contains_key(&name) {
                                self.error(E_DUP, format!("`{name}` already defined"));
                            } else {
                                model.forms0.insert(name, cur);
                            }
                        }
                        "map" => {
                            let name = self.expect_name().unwrap_or_default();
                            self.expect_punct("->");
                            let target = self.expect_name().unwrap_or_default();
                            // assignment left sides are target coordinates,
                            // unknown until the target document is loaded
                            self.expect_punct("{");
                            let mut assigns = Vec::new();
                            loop {
                                match self.peek().clone() {
                                    Tok::Punct("}") => {
                                        self.bump();
                                        break;
                                    }
                                    Tok::Eof => {
                                        self.error(E_SYNTAX, "unterminated map block".into());
                                        break;
                                    }
                                    Tok::Name(k) => {
                                        self.bump();
                                        self.expect_punct("=");
                                        let e = self.parse_expr();
                                        assigns.push((k, e));
                                    }
                                    _ => {
                                        self.error(E_SYNTAX, "expected `name = expr`".into());
                                        self.recover();
                                        break;
                                    }
                                }
                            }
                            if model.maps.contains_key(&name) {
                                self.error(E_DUP, format!("`{name}` already defined"));
                            } else {
                                model
                                    .maps
                                    .insert(name, MapDecl { target_label: target, assigns });
                            }
                        }
                        "constraints" => {
                            self.expect_punct("{");
                            let chart = self.chart_ref();
                            let mut exprs = Vec::new();
                            if self.peek() != &Tok::Punct("}") {
                                loop {
                                    exprs.push(self.parse_expr());
                                    if self.peek() == &Tok::Punct(";") {
                                        self.bump();
                                    } else {
                                        break;
                                    }
                                }
                            }
                            self.expect_punct("}");
                            if model.constraints.is_some() {
                                self.error(E_DUP, "constraints already defined".into());
                            } else {
                                model.constraints = Some(ConstraintSet { chart, exprs });
                            }
                        }
                        other => {
                            self.error(E_SYNTAX, format!("unknown item `{other}`"));
                            self.recover();
                        }
                    }
                }
                _ => {
                    self.error(E_SYNTAX, "expected an item".into());
                    self.recover();
                }
            }
        }
    }
}

fn permutation_sign(seq: &[usize]) -> i64 {
    let mut sign = 1i64;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Linearizes an expression over wedge differentials: returns scalar
/// coefficients with their ordered differential factor lists.
fn wedge_monomials(e: &Expr) -> Result<Vec<(Expr, Vec<String>)>, String> {
    fn has_d(e: &Expr) -> bool {
        match e {
            Expr::App(a) if a.name == "@d" => true,
            Expr::App(a) => a.args.iter().any(has_d),
            Expr::Elem(_, a) => has_d(a),
            Expr::Sum(v) | Expr::Prod(v) => v.iter().any(has_d),
            Expr::Pow(b, _) => has_d(b),
            _ => false,
        }
    }
    if !has_d(e) {
        return Ok(vec![(e.clone(), Vec::new())]);
    }
    match e {
        Expr::App(a) if a.name == "@d" => {
            if let Expr::Sym(name) = &a.args[0] {
                Ok(vec![(Expr::one(), vec![name.clone()])])
            } else {
                Err("malformed differential".into())
            }
        }
        Expr::Sum(ts) => {
            let mut out = Vec::new();
            for t in ts {
                out.extend(wedge_monomials(t)?);
            }
            Ok(out)
        }
        Expr::Prod(fs) => {
            let mut acc: Vec<(Expr, Vec<String>)> = vec![(Expr::one(), Vec::new())];
            for f in fs {
                let terms = wedge_monomials(f)?;
                let mut next = Vec::new();
                for (s1, d1) in &acc {
                    for (s2, d2) in &terms {
                        let mut dd = d1.clone();
                        dd.extend(d2.clone());
                        next.push((Expr::mul(vec![s1.clone(), s2.clone()]), dd));
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        Expr::Pow(..) | Expr::Elem(..) | Expr::App(_) => {
            Err("differentials may only appear linearly in products and sums".into())
        }
        _ => Ok(vec![(e.clone(), Vec::new())]),
    }
}

/// Parses a full document.
pub fn parse_system(text: &str) -> Result<SystemModel, Vec<Diagnostic>> {
    let toks = match lex(text) {
        Ok(t) => t,
        Err(d) => return Err(vec![d]),
    };
    let mut p = Parser {
        toks,
        pos: 0,
        diags: Vec::new(),
        chart: Chart::default(),
        chart_ref: None,
        wedge_ok: false,
        lenient: false,
    };
    let mut model = SystemModel::default();
    // the bundle item must come first so later expressions can resolve
    p.run(&mut model);
    if p.chart.base.is_empty() || p.chart.fiber.is_empty() {
        p.diags.push(Diagnostic {
            line: 1,
            col: 1,
            code: E_SEMANTIC,
            message: "document must declare a bundle with n >= 1 and m >= 1".into(),
        });
    }
    if !p.diags.is_empty() {
        return Err(p.diags);
    }
    model.chart = p.chart_ref();
    let more = validate(&model);
    if !more.is_empty() {
        return Err(more);
    }
    Ok(model)
}

/// Parses a standalone `[simulate]` config document against a chart.
pub fn parse_simulate_section(text: &str, chart: &Chart) -> Result<SimSpec, Vec<Diagnostic>> {
    let toks = match lex(text) {
        Ok(t) => t,
        Err(d) => return Err(vec![d]),
    };
    let mut p = Parser {
        toks,
        pos: 0,
        diags: Vec::new(),
        chart: chart.clone(),
        chart_ref: None,
        wedge_ok: false,
        lenient: false,
    };
    let mut model = SystemModel::default();
    p.run(&mut model);
    if !p.diags.is_empty() {
        return Err(p.diags);
    }
    model
        .simulate
        .ok_or_else(|| {
            vec![Diagnostic {
                line: 1,
                col: 1,
                code: E_SYNTAX,
                message: "config file has no [simulate] section".into(),
            }]
        })
}

/// Parses a single expression in the symbols of an existing chart; jet
/// placeholders are allowed.
pub fn parse_expression(text: &str, chart: &Chart) -> Result<Expr, Vec<Diagnostic>> {
    let toks = match lex(text) {
        Ok(t) => t,
        Err(d) => return Err(vec![d]),
    };
    let mut p = Parser {
        toks,
        pos: 0,
        diags: Vec::new(),
        chart: chart.clone(),
        chart_ref: None,
        wedge_ok: false,
        lenient: false,
    };
    let e = p.parse_expr();
    if !matches!(p.peek(), Tok::Eof) {
        p.error(E_SYNTAX, "unexpected trailing input".into());
    }
    if !p.diags.is_empty() {
        return Err(p.diags);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{is_zero, normalize};

    const WAVE_QUADRATIC: &str = r#"
# quadratic-energy scalar field, two base dimensions
bundle { base: x1, x2 fiber: u, u1, u2 }
const g symmetric
declare V(u)

form omega deg 2 {
  w[x1; u1, u] = g(1,1)
  w[x1; u2, u] = g(1,2)
  w[x2; u1, u] = g(2,1)
  w[x2; u2, u] = g(2,2)
  v[u1] = -(g(1,1)*u1 + g(1,2)*u2)
  v[u2] = -(g(2,1)*u1 + g(2,2)*u2)
  v[u]  = -diff(V(u),u)
}
"#;

    #[test]
    fn parses_wave_components() {
        let model = parse_system(WAVE_QUADRATIC).unwrap();
        let f2 = model.forms2.get("omega").unwrap();
        let chart = &model.chart;
        let (iu, iu1) = (
            chart.fiber_index("u").unwrap(),
            chart.fiber_index("u1").unwrap(),
        );
        // stored skew part of g(1,1) du1 du d^1x_1 is half the coefficient
        let w = f2.w_at(0, iu1, iu);
        let expect = Expr::mul(vec![Expr::ratio(1, 2), Expr::sym("g(1,1)")]);
        assert!(is_zero(&w.sub(expect)).is_zero());
        // symmetric constant canonicalizes both index orders to one atom
        let w21 = f2.w_at(1, iu1, iu);
        let expect = Expr::mul(vec![Expr::ratio(1, 2), Expr::sym("g(1,2)")]);
        assert!(is_zero(&w21.sub(expect)).is_zero());
    }

    #[test]
    fn rejects_repeated_skew_index() {
        let text = "bundle { base: t fiber: u }\nform w2 deg 2 { w[t; u, u] = 1 }";
        let err = parse_system(text).unwrap_err();
        assert!(err.iter().any(|d| d.message.contains("repeated fiber index")));
    }

    #[test]
    fn rejects_empty_fiber() {
        let text = "bundle { base: t fiber: }";
        let err = parse_system(text).unwrap_err();
        assert!(err.iter().any(|d| d.message.contains("m >= 1")));
    }

    #[test]
    fn rejects_unknown_symbol_with_location() {
        let text = "bundle { base: t fiber: u }\nfield Y { u = q }";
        let err = parse_system(text).unwrap_err();
        assert_eq!(err[0].code, E_UNKNOWN);
        assert_eq!(err[0].line, 2);
    }

    #[test]
    fn wedge_expansion_matches_components() {
        // u1 du d^1x_1 written as a wedge: base (x1,x2) has
        // d^1x_1 = dx2, so du dx2 = dy-part with +1 orientation
        let text = r#"
bundle { base: x1, x2 fiber: u }
form th deg 1 { wedge = u*d(u)*d(x2) - 3*d(x1)*d(x2) }
"#;
        let model = parse_system(text).unwrap();
        let f1 = model.forms1.get("th").unwrap();
        assert!(is_zero(&f1.theta[0][0].clone().sub(Expr::sym("u"))).is_zero());
        assert!(is_zero(&f1.theta[1][0]).is_zero());
        // -3 d^n x means H = 3
        assert!(is_zero(&f1.h.clone().sub(Expr::int(3))).is_zero());
    }

    #[test]
    fn wedge_signs_two_fiber_factors() {
        // d(u) d(v) d(x1): base (x1,x2): ascending base without x2 is
        // [x1]; d^1x_2 = -dx1, so dx1 = -d^1x_2
        let text = r#"
bundle { base: x1, x2 fiber: u, v }
form w2 deg 2 { wedge = d(u)*d(v)*d(x1) }
"#;
        let model = parse_system(text).unwrap();
        let f2 = model.forms2.get("w2").unwrap();
        // tensor w^{x2}_{uv} = -1/2
        let got = f2.w_at(1, 0, 1);
        assert!(is_zero(&got.sub(Expr::ratio(-1, 2))).is_zero(), "{}", f2.w_at(1, 0, 1));
        assert!(f2.w_at(0, 0, 1).is_zero_literal());
    }

    #[test]
    fn jet_placeholders_parse() {
        let text = "bundle { base: t fiber: u }\nconstraints { D[t][u] - u }";
        let model = parse_system(text).unwrap();
        let c = model.constraints.unwrap();
        let expect = Expr::jet("t", "u").sub(Expr::sym("u"));
        assert_eq!(normalize(&c.exprs[0].clone().sub(expect)), Expr::zero());
    }

    #[test]
    fn simulate_section_parses() {
        let text = r#"
bundle { base: t, x fiber: u, u1, u2 }
[simulate]
L = 1
N = 64
cfl = 1/2
steps = 128
mu = 0
u0 = sin(2*pi*x/L)
v0 = 0
U = 1
"#;
        let model = parse_system(text).unwrap();
        let sim = model.simulate.unwrap();
        assert_eq!(sim.entries.len(), 8);
        assert!(sim.entries.contains_key("u0"));
    }

    #[test]
    fn skew_transpose_mismatch_detected() {
        let text = r#"
bundle { base: t fiber: u, v }
form bad deg 2 { w[t; u, v] = u  w[t; v, u] = u }
"#;
        let err = parse_system(text).unwrap_err();
        assert!(err.iter().any(|d| d.message.contains("not opposite")));
    }

    #[test]
    fn consistent_transpose_entries_store_full_coefficient() {
        let text = r#"
bundle { base: t fiber: u, v }
form w2 deg 2 { w[t; u, v] = 5  w[t; v, u] = -5 }
"#;
        let model = parse_system(text).unwrap();
        let f2 = model.forms2.get("w2").unwrap();
        assert!(is_zero(&f2.w_at(0, 0, 1).sub(Expr::int(5))).is_zero());
    }
}
