//! Shared helpers for the integration suites: corpus loading, seeded
//! random polynomial data, and componentwise form comparison.
#![allow(dead_code)]

use pdham_kit::symexpr::{is_zero, normalize, Expr, Verdict};
use pdham_kit::sysdef::{parse_system, ChartRef, Form1, Form2, SystemModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn corpus(name: &str) -> String {
    format!("{}/corpus/{}", env!("CARGO_MANIFEST_DIR"), name)
}

pub fn load(name: &str) -> SystemModel {
    let text = std::fs::read_to_string(corpus(name)).expect("corpus file");
    parse_system(&text).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pdham")
}

/// Exactly zero, not just numerically plausible.
pub fn assert_exact_zero(e: &Expr, what: &str) {
    assert_eq!(is_zero(e), Verdict::Zero, "{what}: {}", e.to_text());
}

pub fn assert_same(a: &Expr, b: &Expr, what: &str) {
    assert_exact_zero(&a.clone().sub(b.clone()), what);
}

/// Equality up to one global sign, returning the sign that matched.
pub fn same_up_to_sign(a: &Expr, b: &Expr) -> Option<i64> {
    if is_zero(&a.clone().sub(b.clone())) == Verdict::Zero {
        Some(1)
    } else if is_zero(&a.clone().sub(b.clone().neg())) == Verdict::Zero {
        Some(-1)
    } else {
        None
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random polynomial in `vars`, a few terms, total degree at most `max_deg`.
pub fn rand_poly(rng: &mut ChaCha8Rng, vars: &[&str], max_deg: u32) -> Expr {
    let terms = rng.gen_range(1..=3);
    let mut out = Vec::new();
    for _ in 0..terms {
        let mut c = 0i64;
        while c == 0 {
            c = rng.gen_range(-3..=3);
        }
        let mut fs = vec![Expr::int(c)];
        let mut left = max_deg;
        for v in vars {
            if left == 0 {
                break;
            }
            let d = rng.gen_range(0..=left.min(2));
            if d > 0 {
                fs.push(Expr::sym(v).powi(d as i64));
                left -= d;
            }
        }
        out.push(Expr::mul(fs));
    }
    normalize(&Expr::add(out))
}

pub fn rand_form1(rng: &mut ChaCha8Rng, chart: &ChartRef, vars: &[&str]) -> Form1 {
    let mut theta = Form1::zero(chart);
    for i in 0..chart.n() {
        for a in 0..chart.m() {
            theta.theta[i][a] = rand_poly(rng, vars, 3);
        }
    }
    theta.h = rand_poly(rng, vars, 3);
    theta
}

pub fn forms2_match(a: &Form2, b: &Form2) -> bool {
    let chart = &a.chart;
    for i in 0..chart.n() {
        for p in 0..chart.m() {
            for q in 0..chart.m() {
                let d = a.w_at(i, p, q).sub(b.w_at(i, p, q));
                if is_zero(&d) != Verdict::Zero {
                    return false;
                }
            }
        }
    }
    (0..chart.m()).all(|p| is_zero(&a.v[p].clone().sub(b.v[p].clone())) == Verdict::Zero)
}
