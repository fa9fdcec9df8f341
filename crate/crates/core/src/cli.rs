//! Command-line front end: one subcommand per operation, deterministic
//! text/LaTeX/JSON output, and exit codes 0 verified, 1 falsified,
//! 2 input error, 3 unsupported class, 4 symbolically undecided.

use crate::affcalc::{closedness_residuals, potential, AffError};
use crate::noether::{
    determining_system, is_noether_pair, is_trivial_current, poisson_bracket, NoetherError,
    Relation,
};
use crate::numsim::{charge_drift, charge_series, convergence_check, Convergence, SimConfig};
use crate::pdham::{
    constraint_algorithm, euler_lagrange, hamilton_residuals, is_hamiltonian, lagrangian_of,
    FlowOutcome, LinError, PdError,
};
use crate::reduce::verify_reduction;
use crate::report::{Report, Status};
use crate::symexpr::{is_zero, set_default_seed, Expr, Verdict};
use crate::sysdef::{
    latex_expr, parse_expression, parse_simulate_section, parse_system, Form2, SystemModel,
};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum OutFormat {
    Text,
    Latex,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "pdham", about = "Symbolic and numeric toolkit for affine field systems")]
pub struct Cli {
    /// output format
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Text)]
    pub format: OutFormat,
    /// seed for the probabilistic zero test
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Closedness check and hamiltonian/degenerate classification
    Check {
        file: PathBuf,
        #[arg(long)]
        form: Option<String>,
    },
    /// First-order evolution residuals of the system
    Equations {
        file: PathBuf,
        #[arg(long)]
        form: Option<String>,
    },
    /// Verify a symmetry/current pair
    Noether {
        file: PathBuf,
        #[arg(long)]
        field: String,
        #[arg(long)]
        current: String,
        /// side relations `lhs = rhs`, repeatable
        #[arg(long = "relations")]
        relations: Vec<String>,
        #[arg(long)]
        form: Option<String>,
    },
    /// Bracket of two verified pairs, given as `FIELD:CURRENT`
    Bracket {
        file: PathBuf,
        #[arg(long = "pair", num_args = 1, required = true)]
        pairs: Vec<String>,
        #[arg(long = "relations")]
        relations: Vec<String>,
        #[arg(long)]
        form: Option<String>,
    },
    /// Emit the determining system for a symmetry ansatz
    Determining {
        file: PathBuf,
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        current: Option<String>,
        /// comma-separated opaque unknowns (informational)
        #[arg(long)]
        unknowns: Option<String>,
        /// comma-separated coordinates to split residuals over
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        form: Option<String>,
    },
    /// Run the constraint recursion to a fixed point
    Constrain {
        file: PathBuf,
        #[arg(long, default_value_t = 16)]
        max_steps: usize,
        #[arg(long)]
        form: Option<String>,
    },
    /// Local potential 1-form of a closed system
    Potential {
        file: PathBuf,
        #[arg(long)]
        form: Option<String>,
    },
    /// First-order Lagrangian of a potential
    Lagrangian {
        file: PathBuf,
        #[arg(long)]
        form: Option<String>,
    },
    /// Variational residuals of the first-order Lagrangian
    EulerLagrange {
        file: PathBuf,
        #[arg(long)]
        form: Option<String>,
    },
    /// Verify a reduction along a declared map
    Reduce {
        file: PathBuf,
        #[arg(long)]
        map: String,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        form: Option<String>,
    },
    /// Integrate the simulation section and check charge conservation
    Simulate {
        file: PathBuf,
        /// standalone config file with a [simulate] section
        #[arg(long)]
        config: Option<PathBuf>,
        /// write the charge series as CSV `t,Q`
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Early failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Failure {
        Failure { code: 2, message: msg.into() }
    }

    fn unsupported(msg: impl Into<String>) -> Failure {
        Failure { code: 3, message: msg.into() }
    }

    fn unknown(msg: impl Into<String>) -> Failure {
        Failure { code: 4, message: msg.into() }
    }
}

impl From<PdError> for Failure {
    fn from(e: PdError) -> Failure {
        match e {
            PdError::Lin(LinError::Indeterminate(entry)) => {
                Failure::unknown(format!("cannot decide whether `{entry}` vanishes"))
            }
            PdError::Lin(err) => Failure::unsupported(err.to_string()),
            PdError::Aff(err) => Failure::from(err),
            PdError::Unsupported(msg) => Failure::unsupported(msg),
        }
    }
}

impl From<AffError> for Failure {
    fn from(e: AffError) -> Failure {
        match e {
            AffError::ChartMismatch => Failure::input(e.to_string()),
            AffError::NotClosed(_) => Failure { code: 1, message: e.to_string() },
            AffError::Unsupported(_) => Failure::unsupported(e.to_string()),
        }
    }
}

impl From<NoetherError> for Failure {
    fn from(e: NoetherError) -> Failure {
        match e {
            NoetherError::Aff(err) => Failure::from(err),
            NoetherError::BadRelation(msg) => Failure::input(msg),
            NoetherError::NotAPair(msg) => Failure {
                code: 1,
                message: format!("bracket requires verified pairs; residual `{msg}`"),
            },
        }
    }
}

fn fmt_expr(e: &Expr, format: OutFormat) -> String {
    match format {
        OutFormat::Latex => latex_expr(e),
        _ => e.to_text(),
    }
}

fn load_model(path: &Path) -> Result<SystemModel, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_system(&text).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        Failure::input(format!("{}: {}", path.display(), lines.join("; ")))
    })
}

fn pick_form2<'m>(model: &'m SystemModel, name: Option<&str>) -> Result<&'m Form2, Failure> {
    model.main_form2(name).map_err(Failure::input)
}

fn parse_relations(model: &SystemModel, specs: &[String]) -> Result<Vec<Relation>, Failure> {
    let mut out = Vec::with_capacity(specs.len());
    for s in specs {
        let (lhs, rhs) = s
            .split_once('=')
            .ok_or_else(|| Failure::input(format!("relation `{s}` must be `lhs = rhs`")))?;
        let parse = |side: &str| {
            parse_expression(side, &model.chart).map_err(|d| {
                let lines: Vec<String> = d.iter().map(|x| x.to_string()).collect();
                Failure::input(format!("in relation `{s}`: {}", lines.join("; ")))
            })
        };
        let rel = Relation::new(parse(lhs)?, parse(rhs)?).map_err(Failure::from)?;
        out.push(rel);
    }
    Ok(out)
}

fn verdict_status(items: &[(String, Expr, Verdict)], verified: bool) -> Status {
    if verified {
        Status::Verified
    } else if items.iter().any(|(_, _, v)| *v == Verdict::Unknown) {
        Status::Unknown
    } else {
        Status::Falsified
    }
}

fn status_code(status: Status) -> i32 {
    match status {
        Status::Verified => 0,
        Status::Falsified => 1,
        Status::Unknown => 4,
        Status::Error => 2,
    }
}

fn run_check(model: &SystemModel, form: Option<&str>, format: OutFormat) -> Result<Report, Failure> {
    let omega = pick_form2(model, form)?;
    let res = closedness_residuals(omega);
    let chart = &model.chart;
    let mut items = Vec::new();
    for ((i, a, b, c), e) in &res.r1 {
        items.push((
            format!(
                "R1[{}; {}, {}, {}]",
                chart.base[*i], chart.fiber[*a], chart.fiber[*b], chart.fiber[*c]
            ),
            e.clone(),
            is_zero(e),
        ));
    }
    for ((a, b), e) in &res.r2 {
        items.push((
            format!("R2[{}, {}]", chart.fiber[*a], chart.fiber[*b]),
            e.clone(),
            is_zero(e),
        ));
    }
    let closed = items.iter().all(|(_, _, v)| v.is_zero());
    let status = verdict_status(&items, closed);
    let mut report = Report::new("check", status);
    for (name, e, v) in &items {
        if !v.is_zero() {
            report.item(name, fmt_expr(e, format), v.to_string());
        }
    }
    if closed {
        let (hamiltonian, kernel) = is_hamiltonian(omega, model.constraints.as_ref())?;
        if hamiltonian {
            let cert: Vec<String> =
                kernel.certificate.iter().map(|e| fmt_expr(e, format)).collect();
            if cert.is_empty() {
                report.note("hamiltonian (kernel trivial everywhere)");
            } else {
                report.note(format!(
                    "hamiltonian (kernel trivial where {} does not vanish)",
                    cert.join(" * ")
                ));
            }
        } else {
            report.note(format!(
                "prehamiltonian (degenerate): kernel dimension {}",
                kernel.vertical.len()
            ));
            for (k, y) in kernel.vertical.iter().enumerate() {
                let comps: Vec<String> = y.comps.iter().map(|e| fmt_expr(e, format)).collect();
                report.item(format!("kernel[{k}]"), comps.join(", "), "basis field");
            }
            for (k, p) in kernel.pairings.iter().enumerate() {
                if !p.is_zero_literal() {
                    report.item(
                        format!("pairing[{k}]"),
                        fmt_expr(p, format),
                        "full kernel drops where nonzero",
                    );
                }
            }
        }
        for n in kernel.notes {
            report.note(n);
        }
    }
    Ok(report)
}

fn run_equations(model: &SystemModel, form: Option<&str>, format: OutFormat) -> Result<Report, Failure> {
    let omega = pick_form2(model, form)?;
    let sys = hamilton_residuals(omega);
    let mut report = Report::new("equations", Status::Verified);
    for (b, e) in sys.residuals.iter().enumerate() {
        report.item(format!("R[{}]", model.chart.fiber[b]), fmt_expr(e, format), "residual");
    }
    Ok(report)
}

fn run_noether(
    model: &SystemModel,
    form: Option<&str>,
    field: &str,
    current: &str,
    relations: &[String],
    format: OutFormat,
) -> Result<Report, Failure> {
    let omega = pick_form2(model, form)?;
    let y = model
        .fields
        .get(field)
        .ok_or_else(|| Failure::input(format!("no field named `{field}`")))?;
    let f = model
        .forms0
        .get(current)
        .ok_or_else(|| Failure::input(format!("no current named `{current}`")))?;
    let rels = parse_relations(model, relations)?;
    let check = is_noether_pair(omega, y, f, &rels)?;
    let status = verdict_status(&check.items, check.verified);
    let mut report = Report::new("noether", status);
    for (name, e, v) in &check.items {
        report.item(name, fmt_expr(e, format), v.to_string());
    }
    if check.verified {
        report.note(format!("({field}, {current}) is a symmetry/current pair"));
    }
    Ok(report)
}

fn run_bracket(
    model: &SystemModel,
    form: Option<&str>,
    pairs: &[String],
    relations: &[String],
    format: OutFormat,
) -> Result<Report, Failure> {
    if pairs.len() != 2 {
        return Err(Failure::input("exactly two --pair FIELD:CURRENT arguments required"));
    }
    let omega = pick_form2(model, form)?;
    let mut resolved = Vec::new();
    for p in pairs {
        let (yn, fn_) = p
            .split_once(':')
            .ok_or_else(|| Failure::input(format!("pair `{p}` must be `FIELD:CURRENT`")))?;
        let y = model
            .fields
            .get(yn)
            .ok_or_else(|| Failure::input(format!("no field named `{yn}`")))?;
        let f = model
            .forms0
            .get(fn_)
            .ok_or_else(|| Failure::input(format!("no current named `{fn_}`")))?;
        resolved.push((y, f));
    }
    let rels = parse_relations(model, relations)?;
    for (y, f) in &resolved {
        let check = is_noether_pair(omega, y, f, &rels)?;
        if !check.verified {
            let status = verdict_status(&check.items, false);
            let mut report = Report::new("bracket", status);
            for (name, e, v) in &check.items {
                report.item(name, fmt_expr(e, format), v.to_string());
            }
            report.note("input pair failed verification");
            return Ok(report);
        }
    }
    let br = poisson_bracket(omega, resolved[0], resolved[1], &rels)?;
    let mut report = Report::new("bracket", Status::Verified);
    for (i, e) in br.comps.iter().enumerate() {
        report.item(format!("f[{}]", model.chart.base[i]), fmt_expr(e, format), "component");
    }
    let triv = is_trivial_current(&br, &rels);
    report.note(if triv.verified {
        "bracket current is trivial (pulled back from the base)".to_string()
    } else {
        "bracket current is not trivial".to_string()
    });
    Ok(report)
}

fn run_determining(
    model: &SystemModel,
    form: Option<&str>,
    field: Option<&str>,
    current: Option<&str>,
    unknowns: Option<&str>,
    split: Option<&str>,
    format: OutFormat,
) -> Result<Report, Failure> {
    let omega = pick_form2(model, form)?;
    let y = match field {
        Some(n) => model
            .fields
            .get(n)
            .ok_or_else(|| Failure::input(format!("no field named `{n}`")))?,
        None => {
            if model.fields.len() == 1 {
                model.fields.values().next().unwrap()
            } else {
                return Err(Failure::input("document has several fields; pass --field"));
            }
        }
    };
    let f = match current {
        Some(n) => model
            .forms0
            .get(n)
            .ok_or_else(|| Failure::input(format!("no current named `{n}`")))?,
        None => {
            if model.forms0.len() == 1 {
                model.forms0.values().next().unwrap()
            } else {
                return Err(Failure::input("document has several currents; pass --current"));
            }
        }
    };
    let split_vars: Option<Vec<String>> =
        split.map(|s| s.split(',').map(|v| v.trim().to_string()).collect());
    let sys = determining_system(omega, y, f, split_vars.as_deref())
        .map_err(Failure::from)?;
    let mut report = Report::new("determining", Status::Verified);
    for (name, e) in &sys {
        report.item(name, fmt_expr(e, format), "= 0");
    }
    if let Some(u) = unknowns {
        report.note(format!("unknowns: {u}"));
    }
    report.note(format!("{} equation(s)", sys.len()));
    Ok(report)
}

fn run_constrain(
    model: &SystemModel,
    form: Option<&str>,
    max_steps: usize,
    format: OutFormat,
) -> Result<Report, Failure> {
    let omega = pick_form2(model, form)?;
    let flow = constraint_algorithm(omega, None, max_steps)?;
    let status = match flow.outcome {
        FlowOutcome::FixedPoint | FlowOutcome::Empty => Status::Verified,
        FlowOutcome::MaxSteps => Status::Unknown,
    };
    let mut report = Report::new("constrain", status);
    for (k, stage) in flow.stages.iter().enumerate() {
        let text = if stage.exprs.is_empty() {
            "(none)".to_string()
        } else {
            stage
                .exprs
                .iter()
                .map(|e| format!("{} = 0", fmt_expr(e, format)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        report.item(format!("stage[{k}]"), text, "constraints");
    }
    report.note(match flow.outcome {
        FlowOutcome::FixedPoint => "fixed point",
        FlowOutcome::Empty => "empty constraint locus",
        FlowOutcome::MaxSteps => "step limit reached before stabilizing",
    });
    Ok(report)
}

fn run_potential(model: &SystemModel, form: Option<&str>, format: OutFormat) -> Result<Report, Failure> {
    let omega = pick_form2(model, form)?;
    let theta = potential(omega).map_err(Failure::from)?;
    let chart = &model.chart;
    let mut report = Report::new("potential", Status::Verified);
    for i in 0..chart.n() {
        for a in 0..chart.m() {
            if !theta.theta[i][a].is_zero_literal() {
                report.item(
                    format!("th[{}; {}]", chart.base[i], chart.fiber[a]),
                    fmt_expr(&theta.theta[i][a], format),
                    "component",
                );
            }
        }
    }
    report.item("H", fmt_expr(&theta.h, format), "component");
    Ok(report)
}

fn potential_form1(model: &SystemModel, form: Option<&str>) -> Result<crate::sysdef::Form1, Failure> {
    if let Some(name) = form {
        if let Some(theta) = model.forms1.get(name) {
            return Ok(theta.clone());
        }
    } else if model.forms2.is_empty() && model.forms1.len() == 1 {
        return Ok(model.forms1.values().next().unwrap().clone());
    }
    let omega = pick_form2(model, form)?;
    potential(omega).map_err(Failure::from)
}

fn run_lagrangian(model: &SystemModel, form: Option<&str>, format: OutFormat) -> Result<Report, Failure> {
    let theta = potential_form1(model, form)?;
    let l = lagrangian_of(&theta);
    let mut report = Report::new("lagrangian", Status::Verified);
    report.item("L", fmt_expr(&l, format), "density");
    Ok(report)
}

fn run_euler_lagrange(
    model: &SystemModel,
    form: Option<&str>,
    format: OutFormat,
) -> Result<Report, Failure> {
    let theta = potential_form1(model, form)?;
    let l = lagrangian_of(&theta);
    let sys = euler_lagrange(&model.chart, &l)?;
    let mut report = Report::new("euler-lagrange", Status::Verified);
    for (b, e) in sys.residuals.iter().enumerate() {
        report.item(format!("E[{}]", model.chart.fiber[b]), fmt_expr(e, format), "residual");
    }
    Ok(report)
}

fn run_reduce(
    model: &SystemModel,
    map: &str,
    target_path: &Path,
    form: Option<&str>,
    format: OutFormat,
) -> Result<Report, Failure> {
    let decl = model
        .maps
        .get(map)
        .ok_or_else(|| Failure::input(format!("no map named `{map}`")))?;
    let target = load_model(target_path)?;
    let p = decl
        .resolve(&model.chart, &target.chart)
        .map_err(Failure::input)?;
    let omega = pick_form2(model, None)?;
    let wt = pick_form2(&target, form)?;
    let rep = verify_reduction(omega, &p, wt)?;
    let status = if rep.verified() {
        Status::Verified
    } else if rep.items.iter().any(|(_, _, v)| *v == Verdict::Unknown) {
        Status::Unknown
    } else {
        Status::Falsified
    };
    let mut report = Report::new("reduce", status);
    report.item(
        "pullback matches",
        "",
        if rep.pullback_matches { "yes" } else { "no" },
    );
    report.item(
        "kernel is map-vertical",
        "",
        if rep.kernel_projects { "yes" } else { "no" },
    );
    report.item(
        "reduced form nondegenerate",
        "",
        if rep.target_nondegenerate { "yes" } else { "no" },
    );
    for (name, e, v) in &rep.items {
        report.item(name, fmt_expr(e, format), v.to_string());
    }
    for n in rep.notes {
        report.note(n);
    }
    Ok(report)
}

fn run_simulate(
    model: &SystemModel,
    config: Option<&Path>,
    csv: Option<&Path>,
) -> Result<Report, Failure> {
    let spec = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            parse_simulate_section(&text, &model.chart).map_err(|d| {
                let lines: Vec<String> = d.iter().map(|x| x.to_string()).collect();
                Failure::input(format!("{}: {}", path.display(), lines.join("; ")))
            })?
        }
        None => model
            .simulate
            .clone()
            .ok_or_else(|| Failure::input("document has no [simulate] section"))?,
    };
    let cfg = SimConfig::from_spec(&spec).map_err(|e| Failure::input(e.to_string()))?;
    let run = |cfg: &SimConfig| -> Result<(Vec<f64>, f64, f64), Failure> {
        let traj = crate::numsim::simulate_leapfrog(cfg)
            .map_err(|e| Failure { code: 1, message: e.to_string() })?;
        let q = charge_series(&traj, &cfg.sym)
            .map_err(|e| Failure::input(e.to_string()))?;
        let drift = charge_drift(&q);
        Ok((q, traj.dt, drift))
    };
    let (q, dt, drift) = run(&cfg)?;
    let (_, _, drift_fine) = run(&cfg.refined())?;
    let conv = convergence_check(drift, drift_fine);
    if let Some(path) = csv {
        let mut out = String::from("t,Q\n");
        for (s, v) in q.iter().enumerate() {
            out.push_str(&format!("{},{}\n", s as f64 * dt, v));
        }
        std::fs::write(path, out)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    let status = if conv.passes() { Status::Verified } else { Status::Falsified };
    let mut report = Report::new("simulate", status);
    report.item("drift", format!("{drift:e}"), "relative charge drift");
    report.item("drift_refined", format!("{drift_fine:e}"), "after halving dx, dt");
    match conv {
        Convergence::Exact => report.item("order", "", "exact (pass)"),
        Convergence::Order(p) => report.item(
            "order",
            format!("{p:.3}"),
            if conv.passes() { "pass" } else { "fail" },
        ),
    }
    if let Some(path) = csv {
        report.note(format!("charge series written to {}", path.display()));
    }
    Ok(report)
}

fn dispatch(cli: &Cli) -> Result<Report, Failure> {
    let format = cli.format;
    match &cli.cmd {
        Cmd::Check { file, form } => run_check(&load_model(file)?, form.as_deref(), format),
        Cmd::Equations { file, form } => {
            run_equations(&load_model(file)?, form.as_deref(), format)
        }
        Cmd::Noether { file, field, current, relations, form } => run_noether(
            &load_model(file)?,
            form.as_deref(),
            field,
            current,
            relations,
            format,
        ),
        Cmd::Bracket { file, pairs, relations, form } => {
            run_bracket(&load_model(file)?, form.as_deref(), pairs, relations, format)
        }
        Cmd::Determining { file, field, current, unknowns, split, form } => run_determining(
            &load_model(file)?,
            form.as_deref(),
            field.as_deref(),
            current.as_deref(),
            unknowns.as_deref(),
            split.as_deref(),
            format,
        ),
        Cmd::Constrain { file, max_steps, form } => {
            run_constrain(&load_model(file)?, form.as_deref(), *max_steps, format)
        }
        Cmd::Potential { file, form } => run_potential(&load_model(file)?, form.as_deref(), format),
        Cmd::Lagrangian { file, form } => {
            run_lagrangian(&load_model(file)?, form.as_deref(), format)
        }
        Cmd::EulerLagrange { file, form } => {
            run_euler_lagrange(&load_model(file)?, form.as_deref(), format)
        }
        Cmd::Reduce { file, map, target, form } => {
            run_reduce(&load_model(file)?, map, target, form.as_deref(), format)
        }
        Cmd::Simulate { file, config, csv } => {
            run_simulate(&load_model(file)?, config.as_deref(), csv.as_deref())
        }
    }
}

fn print_report(report: &Report, format: OutFormat) {
    match format {
        OutFormat::Json => println!("{}", report.to_json()),
        _ => print!("{}", report.to_text()),
    }
}

pub fn run_with(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap prints its own help/usage; map parse failures to input errors
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(seed) = cli.seed {
        set_default_seed(seed);
    }
    let command = match &cli.cmd {
        Cmd::Check { .. } => "check",
        Cmd::Equations { .. } => "equations",
        Cmd::Noether { .. } => "noether",
        Cmd::Bracket { .. } => "bracket",
        Cmd::Determining { .. } => "determining",
        Cmd::Constrain { .. } => "constrain",
        Cmd::Potential { .. } => "potential",
        Cmd::Lagrangian { .. } => "lagrangian",
        Cmd::EulerLagrange { .. } => "euler-lagrange",
        Cmd::Reduce { .. } => "reduce",
        Cmd::Simulate { .. } => "simulate",
    };
    match dispatch(&cli) {
        Ok(report) => {
            print_report(&report, cli.format);
            status_code(report.status)
        }
        Err(fail) => {
            let status = match fail.code {
                1 => Status::Falsified,
                4 => Status::Unknown,
                _ => Status::Error,
            };
            let mut report = Report::new(command, status);
            report.note(fail.message);
            print_report(&report, cli.format);
            fail.code
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args().collect())
}
