//! Finite-difference integration of `u_tt = u_xx + mu*u` on a periodic
//! interval and numeric verification of charge conservation for the
//! associated currents. Everything is desk-scale: plain leapfrog, plain
//! summation, expressions evaluated through the symbolic layer.

use crate::symexpr::{diff, eval_numeric, Expr};
use crate::sysdef::SimSpec;
use std::collections::HashMap;

#[derive(thiserror::Error, Debug, Clone)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("instability detected at step {step}: amplitude {amp:.3e}")]
    Instability { step: usize, amp: f64 },
    #[error("expression evaluation failed: {0}")]
    Eval(String),
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// spatial extent of the periodic interval
    pub length: f64,
    /// grid cells
    pub n: usize,
    /// ratio dt/dx
    pub cfl: f64,
    /// time steps
    pub steps: usize,
    /// mass parameter in `u_tt = u_xx + mu*u`
    pub mu: f64,
    /// initial profile, expression in `x`
    pub u0: Expr,
    /// initial velocity profile, expression in `x`
    pub v0: Expr,
    /// symmetry profile, expression in `t` and `x`
    pub sym: Expr,
}

impl SimConfig {
    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dt(&self) -> f64 {
        self.cfl * self.dx()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 8 {
            return Err(SimError::BadConfig("N >= 8 required".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SimError::BadConfig("cfl ratio must lie in (0, 1]".into()));
        }
        if self.steps == 0 {
            return Err(SimError::BadConfig("steps >= 1 required".into()));
        }
        if !(self.length > 0.0) {
            return Err(SimError::BadConfig("L > 0 required".into()));
        }
        Ok(())
    }

    /// Same physics at half the spacing: N and steps doubled.
    pub fn refined(&self) -> SimConfig {
        SimConfig { n: self.n * 2, steps: self.steps * 2, ..self.clone() }
    }

    /// Reads the `[simulate]` entries: L, N, cfl, steps, mu (default 0),
    /// u0, v0, U (default 1).
    pub fn from_spec(spec: &SimSpec) -> Result<SimConfig, SimError> {
        let num = |key: &str| -> Result<f64, SimError> {
            let e = spec
                .entries
                .get(key)
                .ok_or_else(|| SimError::BadConfig(format!("missing key `{key}`")))?;
            eval_numeric(e, &HashMap::new())
                .map_err(|err| SimError::Eval(format!("`{key}`: {err}")))
        };
        let expr = |key: &str| -> Result<Expr, SimError> {
            spec.entries
                .get(key)
                .cloned()
                .ok_or_else(|| SimError::BadConfig(format!("missing key `{key}`")))
        };
        let cfg = SimConfig {
            length: num("L")?,
            n: num("N")? as usize,
            cfl: num("cfl")?,
            steps: num("steps")? as usize,
            mu: if spec.entries.contains_key("mu") { num("mu")? } else { 0.0 },
            u0: expr("u0")?,
            v0: expr("v0")?,
            sym: spec.entries.get("U").cloned().unwrap_or_else(Expr::one),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// time slices `u[s][j]`, `steps + 1` of them
    pub slices: Vec<Vec<f64>>,
    pub dx: f64,
    pub dt: f64,
}

fn sample(e: &Expr, point: &mut HashMap<String, f64>) -> Result<f64, SimError> {
    eval_numeric(e, point).map_err(|err| SimError::Eval(err.to_string()))
}

/// Second difference with periodic wrap, divided by dx^2.
fn second_difference(u: &[f64], j: usize, dx: f64) -> f64 {
    let n = u.len();
    let l = u[(j + n - 1) % n];
    let r = u[(j + 1) % n];
    (r - 2.0 * u[j] + l) / (dx * dx)
}

/// One leapfrog step: `next = 2 cur - prev + dt^2 (D2 cur + mu cur)`.
fn step(prev: &[f64], cur: &[f64], dx: f64, dt: f64, mu: f64) -> Vec<f64> {
    (0..cur.len())
        .map(|j| {
            2.0 * cur[j] - prev[j] + dt * dt * (second_difference(cur, j, dx) + mu * cur[j])
        })
        .collect()
}

pub fn simulate_leapfrog(cfg: &SimConfig) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let n = cfg.n;
    let dx = cfg.dx();
    let dt = cfg.dt();
    let mut point = HashMap::new();
    let mut u0 = Vec::with_capacity(n);
    let mut v0 = Vec::with_capacity(n);
    for j in 0..n {
        point.insert("x".to_string(), j as f64 * dx);
        u0.push(sample(&cfg.u0, &mut point)?);
        v0.push(sample(&cfg.v0, &mut point)?);
    }
    // second-order start: Taylor step using the equation for u_tt
    let u1: Vec<f64> = (0..n)
        .map(|j| {
            u0[j]
                + dt * v0[j]
                + 0.5 * dt * dt * (second_difference(&u0, j, dx) + cfg.mu * u0[j])
        })
        .collect();
    let amp0 = u0
        .iter()
        .chain(u1.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    let bound = 1e6 * amp0;
    let mut slices = Vec::with_capacity(cfg.steps + 1);
    slices.push(u0);
    slices.push(u1);
    for s in 2..=cfg.steps {
        let next = step(&slices[s - 2], &slices[s - 1], dx, dt, cfg.mu);
        let amp = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !amp.is_finite() || amp > bound {
            return Err(SimError::Instability { step: s, amp });
        }
        slices.push(next);
    }
    slices.truncate(cfg.steps + 1);
    Ok(Trajectory { slices, dx, dt })
}

/// Time derivative of the trajectory at slice `s`, centered inside and
/// second-order one-sided at the ends.
fn time_derivative(traj: &Trajectory, s: usize, j: usize) -> f64 {
    let u = &traj.slices;
    let dt = traj.dt;
    let last = u.len() - 1;
    if s == 0 {
        (-3.0 * u[0][j] + 4.0 * u[1][j] - u[2][j]) / (2.0 * dt)
    } else if s == last {
        (3.0 * u[last][j] - 4.0 * u[last - 1][j] + u[last - 2][j]) / (2.0 * dt)
    } else {
        (u[s + 1][j] - u[s - 1][j]) / (2.0 * dt)
    }
}

/// `Q(t_s) = dx * sum_j f^t` with `f^t = -(u dU/dt - u_t U)`.
pub fn charge_series(traj: &Trajectory, sym: &Expr) -> Result<Vec<f64>, SimError> {
    if traj.slices.len() < 3 {
        return Err(SimError::BadConfig("trajectory too short for a charge series".into()));
    }
    let sym_t = diff(sym, "t");
    let n = traj.slices[0].len();
    let mut point = HashMap::new();
    let mut out = Vec::with_capacity(traj.slices.len());
    for s in 0..traj.slices.len() {
        point.insert("t".to_string(), s as f64 * traj.dt);
        let mut q = 0.0;
        for j in 0..n {
            point.insert("x".to_string(), j as f64 * traj.dx);
            let u = traj.slices[s][j];
            let ut = time_derivative(traj, s, j);
            let cap_u = sample(sym, &mut point)?;
            let cap_ut = sample(&sym_t, &mut point)?;
            q += -(u * cap_ut - ut * cap_u);
        }
        out.push(q * traj.dx);
    }
    Ok(out)
}

/// `max_s |Q(t_s) - Q(t_0)| / max(|Q(t_0)|, 1)`.
pub fn charge_drift(q: &[f64]) -> f64 {
    let q0 = q[0];
    let scale = q0.abs().max(1.0);
    q.iter().fold(0.0f64, |m, v| m.max((v - q0).abs())) / scale
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Convergence {
    /// both drifts at round-off: nothing to estimate, counts as a pass
    Exact,
    Order(f64),
}

impl Convergence {
    pub fn passes(&self) -> bool {
        match self {
            Convergence::Exact => true,
            Convergence::Order(p) => (1.5..=2.5).contains(p),
        }
    }
}

/// Estimated order from drifts at spacing h and h/2.
pub fn convergence_check(drift_coarse: f64, drift_fine: f64) -> Convergence {
    const FLOOR: f64 = 1e-13;
    if drift_coarse < FLOOR && drift_fine < FLOOR {
        Convergence::Exact
    } else {
        Convergence::Order((drift_coarse / drift_fine.max(f64::MIN_POSITIVE)).log2())
    }
}

/// Oscillation period estimated from sign changes of a series, by linear
/// interpolation of the crossing times.
pub fn zero_crossing_period(series: &[f64], dt: f64) -> Option<f64> {
    let mut crossings = Vec::new();
    for s in 1..series.len() {
        let (a, b) = (series[s - 1], series[s]);
        if a == 0.0 || a.signum() == b.signum() {
            continue;
        }
        let frac = a / (a - b);
        crossings.push(((s - 1) as f64 + frac) * dt);
    }
    if crossings.len() < 2 {
        return None;
    }
    let gaps = crossings.len() - 1;
    let avg = (crossings[crossings.len() - 1] - crossings[0]) / gaps as f64;
    Some(2.0 * avg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::ElemFn;

    fn two_pi_over(length: f64) -> Expr {
        Expr::mul(vec![
            Expr::int(2),
            Expr::sym("pi"),
            Expr::ratio(1, length as i64),
        ])
    }

    fn sin_wave(length: f64) -> Expr {
        Expr::elem(ElemFn::Sin, Expr::mul(vec![two_pi_over(length), Expr::sym("x")]))
    }

    fn base_cfg() -> SimConfig {
        SimConfig {
            length: 1.0,
            n: 32,
            cfl: 0.5,
            steps: 64,
            mu: 0.0,
            u0: sin_wave(1.0),
            v0: Expr::mul(vec![
                two_pi_over(1.0).neg(),
                Expr::elem(ElemFn::Cos, Expr::mul(vec![two_pi_over(1.0), Expr::sym("x")])),
            ]),
            sym: Expr::one(),
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = SimConfig { u0: Expr::zero(), v0: Expr::zero(), ..base_cfg() };
        let traj = simulate_leapfrog(&cfg).unwrap();
        assert!(traj.slices.iter().all(|s| s.iter().all(|v| *v == 0.0)));
        let q = charge_series(&traj, &cfg.sym).unwrap();
        assert!(q.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn traveling_wave_error_is_second_order() {
        let exact = |x: f64, t: f64| (2.0 * std::f64::consts::PI * (x - t)).sin();
        let err_at = |cfg: &SimConfig| -> f64 {
            let traj = simulate_leapfrog(cfg).unwrap();
            let s = traj.slices.len() - 1;
            let t = s as f64 * traj.dt;
            traj.slices[s]
                .iter()
                .enumerate()
                .fold(0.0f64, |m, (j, v)| m.max((v - exact(j as f64 * traj.dx, t)).abs()))
        };
        let coarse = base_cfg();
        let fine = coarse.refined();
        let (e1, e2) = (err_at(&coarse), err_at(&fine));
        let ratio = e1 / e2;
        assert!((3.0..=5.0).contains(&ratio), "e1={e1:.3e} e2={e2:.3e} ratio={ratio:.2}");
    }

    #[test]
    fn momentum_charge_drift_refines_at_second_order() {
        let coarse = base_cfg();
        let fine = coarse.refined();
        let drift = |cfg: &SimConfig| {
            let traj = simulate_leapfrog(cfg).unwrap();
            charge_drift(&charge_series(&traj, &cfg.sym).unwrap())
        };
        let (d1, d2) = (drift(&coarse), drift(&fine));
        let conv = convergence_check(d1, d2);
        assert!(conv.passes(), "d1={d1:.3e} d2={d2:.3e} {conv:?}");
    }

    #[test]
    fn galilean_charge_with_linear_profile() {
        // U = t solves the massless equation; Q = dx*sum(u_t t - u)
        let cfg = SimConfig { sym: Expr::sym("t"), ..base_cfg() };
        let fine = cfg.refined();
        let drift = |cfg: &SimConfig| {
            let traj = simulate_leapfrog(cfg).unwrap();
            charge_drift(&charge_series(&traj, &cfg.sym).unwrap())
        };
        let (d1, d2) = (drift(&cfg), drift(&fine));
        let conv = convergence_check(d1, d2);
        assert!(conv.passes(), "d1={d1:.3e} d2={d2:.3e} {conv:?}");
    }

    #[test]
    fn standing_mode_period_matches_dispersion() {
        // u_tt = u_xx + mu u with mu = -3k^2 gives nu = 2k for the k-mode
        let k = 2.0 * std::f64::consts::PI;
        let cfg = SimConfig {
            mu: -3.0 * k * k,
            n: 128,
            cfl: 0.25,
            steps: 1024,
            u0: sin_wave(1.0),
            v0: Expr::zero(),
            ..base_cfg()
        };
        let traj = simulate_leapfrog(&cfg).unwrap();
        let probe: Vec<f64> = traj.slices.iter().map(|s| s[cfg.n / 4]).collect();
        let period = zero_crossing_period(&probe, traj.dt).unwrap();
        let nu = 2.0 * k;
        let expected = 2.0 * std::f64::consts::PI / nu;
        let rel = (period - expected).abs() / expected;
        assert!(rel < 0.01, "period={period:.5} expected={expected:.5} rel={rel:.4}");
    }

    #[test]
    fn exponential_growth_aborts() {
        let cfg = SimConfig { mu: 400.0, steps: 4000, ..base_cfg() };
        let err = simulate_leapfrog(&cfg).unwrap_err();
        assert!(matches!(err, SimError::Instability { .. }));
    }

    #[test]
    fn constant_data_conserves_exactly() {
        let cfg = SimConfig { u0: Expr::one(), v0: Expr::zero(), ..base_cfg() };
        let drift = |cfg: &SimConfig| {
            let traj = simulate_leapfrog(cfg).unwrap();
            charge_drift(&charge_series(&traj, &cfg.sym).unwrap())
        };
        let conv = convergence_check(drift(&cfg), drift(&cfg.refined()));
        assert_eq!(conv, Convergence::Exact);
    }

    #[test]
    fn leapfrog_is_time_reversible() {
        let cfg = base_cfg();
        let traj = simulate_leapfrog(&cfg).unwrap();
        let last = traj.slices.len() - 1;
        // integrate backwards from the reversed final pair
        let mut prev = traj.slices[last].clone();
        let mut cur = traj.slices[last - 1].clone();
        for _ in 0..(last - 1) {
            let next = step(&prev, &cur, traj.dx, traj.dt, cfg.mu);
            prev = cur;
            cur = next;
        }
        let tol = 1e-10 * cfg.steps as f64;
        for (a, b) in cur.iter().zip(&traj.slices[0]) {
            assert!((a - b).abs() < tol, "{a} vs {b}");
        }
    }

    #[test]
    fn config_invariants_enforced() {
        let mut cfg = base_cfg();
        cfg.n = 4;
        assert!(matches!(cfg.validate(), Err(SimError::BadConfig(_))));
        let mut cfg = base_cfg();
        cfg.cfl = 1.5;
        assert!(matches!(cfg.validate(), Err(SimError::BadConfig(_))));
    }
}
