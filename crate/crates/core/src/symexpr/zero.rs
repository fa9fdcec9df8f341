//! Zero testing. Expressions in the rational-function class (atoms formally
//! independent: symbols, jets, opaque applications, radicals over
//! polynomial bases) are decided exactly from the canonical numerator.
//! Anything involving elementary functions falls back to evaluation at
//! random rational points with a seeded generator.

use super::normal::{atom_meta, to_ratfunc, AtomKind};
use super::{eval_numeric, Expr};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Zero,
    ZeroProbabilistic,
    Nonzero,
    NonzeroNumeric,
    Unknown,
}

impl Verdict {
    pub fn is_zero(self) -> bool {
        matches!(self, Verdict::Zero | Verdict::ZeroProbabilistic)
    }

    pub fn is_nonzero(self) -> bool {
        matches!(self, Verdict::Nonzero | Verdict::NonzeroNumeric)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Zero => "zero",
            Verdict::ZeroProbabilistic => "zero (probabilistic)",
            Verdict::Nonzero => "nonzero",
            Verdict::NonzeroNumeric => "nonzero (numeric)",
            Verdict::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct ZeroCfg {
    pub points: usize,
    pub zero_tol: f64,
    pub nonzero_tol: f64,
    pub seed: u64,
}

static DEFAULT_SEED: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

/// Process-wide seed for the sampling fallback (CLI `--seed`).
pub fn set_default_seed(seed: u64) {
    DEFAULT_SEED.store(seed, std::sync::atomic::Ordering::Relaxed);
}

impl Default for ZeroCfg {
    fn default() -> Self {
        ZeroCfg {
            points: 16,
            zero_tol: 1e-9,
            nonzero_tol: 1e-6,
            seed: DEFAULT_SEED.load(std::sync::atomic::Ordering::Relaxed),
        }
    }
}

pub fn is_zero(e: &Expr) -> Verdict {
    is_zero_with(e, &ZeroCfg::default())
}

pub fn is_zero_with(e: &Expr, cfg: &ZeroCfg) -> Verdict {
    match to_ratfunc(e) {
        Ok(rf) => {
            let rf = rf.canonical();
            if rf.num.is_zero() {
                return Verdict::Zero;
            }
            let exact = rf.num.vars().iter().chain(rf.den.vars().iter()).all(|v| {
                matches!(
                    atom_meta(v).map(|m| m.kind),
                    Some(AtomKind::Free) | Some(AtomKind::Radical { .. }) | None
                )
            });
            if exact {
                Verdict::Nonzero
            } else {
                sample(e, cfg)
            }
        }
        Err(_) => sample(e, cfg),
    }
}

fn sample(e: &Expr, cfg: &ZeroCfg) -> Verdict {
    let atoms = e.free_atoms();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evaluated = 0usize;
    let mut all_small = true;
    let mut tries = 0usize;
    while evaluated < cfg.points && tries < cfg.points * 8 {
        tries += 1;
        let mut point = HashMap::new();
        for a in &atoms {
            if a == "pi" {
                continue;
            }
            let p: i64 = rng.gen_range(-24..=24);
            let q: i64 = rng.gen_range(1..=8);
            point.insert(a.clone(), p as f64 / q as f64);
        }
        match eval_numeric(e, &point) {
            Ok(v) => {
                if !v.is_finite() {
                    continue;
                }
                evaluated += 1;
                let av = v.abs();
                if av > cfg.nonzero_tol {
                    return Verdict::NonzeroNumeric;
                }
                if av >= cfg.zero_tol {
                    all_small = false;
                }
            }
            Err(_) => continue,
        }
    }
    if evaluated < cfg.points.min(4) {
        return Verdict::Unknown;
    }
    if all_small {
        Verdict::ZeroProbabilistic
    } else {
        Verdict::Unknown
    }
}
