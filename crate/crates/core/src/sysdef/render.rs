//! Deterministic rendering of models and derived objects. The text format
//! re-parses to the same model; LaTeX follows the d^{n-1}x_i / d^n x
//! notation for densities.

use super::*;
use crate::symexpr::{normalize, Expr};
use num::Signed;
use serde_json::{json, Value};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Format {
    Text,
    Latex,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "text" => Some(Format::Text),
            "latex" => Some(Format::Latex),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

pub fn latex_expr(e: &Expr) -> String {
    match e {
        Expr::Rat(r) => {
            if r.is_integer() {
                r.numer().to_string()
            } else if r.is_negative() {
                format!("-\\frac{{{}}}{{{}}}", -r.numer(), r.denom())
            } else {
                format!("\\frac{{{}}}{{{}}}", r.numer(), r.denom())
            }
        }
        Expr::Sym(s) => latex_name(s),
        Expr::Jet { base, fiber } => {
            format!("\\partial_{{{}}} {}", latex_name(base), latex_name(fiber))
        }
        Expr::App(a) => {
            let mut head = String::new();
            for (k, cnt) in a.deriv.iter().enumerate() {
                for _ in 0..*cnt {
                    let slot = match &a.args[k] {
                        Expr::Sym(s) => latex_name(s),
                        _ => format!("{k}"),
                    };
                    head.push_str(&format!("\\partial_{{{slot}}}"));
                }
            }
            let args: Vec<String> = a.args.iter().map(latex_expr).collect();
            format!("{head}{}({})", latex_name(&a.name), args.join(","))
        }
        Expr::Elem(f, a) => format!("\\{}({})", f.name(), latex_expr(a)),
        Expr::Sum(ts) => {
            let mut out = String::new();
            for (k, t) in ts.iter().enumerate() {
                let s = latex_expr(t);
                if k == 0 {
                    out.push_str(&s);
                } else if let Some(tail) = s.strip_prefix('-') {
                    out.push_str(" - ");
                    out.push_str(tail);
                } else {
                    out.push_str(" + ");
                    out.push_str(&s);
                }
            }
            out
        }
        Expr::Prod(fs) => {
            let mut out = String::new();
            for (k, f) in fs.iter().enumerate() {
                let needs_paren = matches!(f, Expr::Sum(_));
                let s = latex_expr(f);
                if k > 0 {
                    out.push_str("\\,");
                }
                if needs_paren {
                    out.push_str(&format!("\\left({s}\\right)"));
                } else {
                    out.push_str(&s);
                }
            }
            out
        }
        Expr::Pow(b, r) => {
            let base = match **b {
                Expr::Sym(_) | Expr::Rat(_) | Expr::App(_) => latex_expr(b),
                _ => format!("\\left({}\\right)", latex_expr(b)),
            };
            if r.is_integer() {
                format!("{base}^{{{}}}", r.numer())
            } else {
                format!("{base}^{{{}/{}}}", r.numer(), r.denom())
            }
        }
    }
}

/// `u1` renders as `u_1`, `g(1,2)` as `g^{12}`, plain names pass through.
fn latex_name(s: &str) -> String {
    if let Some(open) = s.find('(') {
        let head = &s[..open];
        let ix: String = s[open + 1..s.len() - 1].split(',').collect();
        return format!("{head}^{{{ix}}}");
    }
    let head: String = s.chars().take_while(|c| !c.is_ascii_digit()).collect();
    let tail: String = s.chars().skip(head.len()).collect();
    if !head.is_empty() && !tail.is_empty() {
        format!("{head}_{{{tail}}}")
    } else {
        s.to_string()
    }
}

fn density_latex(chart: &Chart, i: usize) -> String {
    if chart.n() == 1 {
        "".into()
    } else {
        format!("\\,d^{{{}}}x_{{{}}}", chart.n() - 1, latex_name(&chart.base[i]))
    }
}

pub fn latex_form2(f: &Form2) -> String {
    let chart = &f.chart;
    let mut parts = Vec::new();
    for ((i, a, b), e) in &f.w {
        parts.push(format!(
            "\\left({}\\right)\\,dy^{{{}}}\\,dy^{{{}}}{}",
            latex_expr(e),
            latex_name(&chart.fiber[*a]),
            latex_name(&chart.fiber[*b]),
            density_latex(chart, *i)
        ));
    }
    for (a, e) in f.v.iter().enumerate() {
        if e.is_zero_literal() {
            continue;
        }
        parts.push(format!(
            "\\left({}\\right)\\,dy^{{{}}}\\,d^{{{}}}x",
            latex_expr(e),
            latex_name(&chart.fiber[a]),
            chart.n()
        ));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

pub fn latex_form1(f: &Form1) -> String {
    let chart = &f.chart;
    let mut parts = Vec::new();
    for (i, row) in f.theta.iter().enumerate() {
        for (a, e) in row.iter().enumerate() {
            if e.is_zero_literal() {
                continue;
            }
            parts.push(format!(
                "\\left({}\\right)\\,dy^{{{}}}{}",
                latex_expr(e),
                latex_name(&chart.fiber[a]),
                density_latex(chart, i)
            ));
        }
    }
    if !f.h.is_zero_literal() {
        parts.push(format!(
            "-\\left({}\\right)\\,d^{{{}}}x",
            latex_expr(&f.h),
            chart.n()
        ));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

pub fn latex_form0(f: &Form0) -> String {
    let chart = &f.chart;
    let mut parts = Vec::new();
    for (i, e) in f.comps.iter().enumerate() {
        if e.is_zero_literal() {
            continue;
        }
        parts.push(format!("\\left({}\\right){}", latex_expr(e), density_latex(chart, i)));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Residuals as `expr = 0` lines with jets shown as partial derivatives.
pub fn render_system_latex(sys: &PDSystem) -> Vec<String> {
    sys.residuals.iter().map(|r| format!("{} = 0", latex_expr(r))).collect()
}

fn sim_to_text(sim: &SimSpec, out: &mut String) {
    out.push_str("[simulate]\n");
    for (k, v) in &sim.entries {
        out.push_str(&format!("{k} = {}\n", v.to_text()));
    }
}

/// Renders a whole model. The text format is a valid document that parses
/// back to an equal model (components up to normalize).
pub fn render_model(model: &SystemModel, fmt: Format) -> String {
    match fmt {
        Format::Text => render_model_text(model),
        Format::Latex => render_model_latex(model),
        Format::Json => {
            serde_json::to_string_pretty(&model_json(model)).unwrap_or_default()
        }
    }
}

fn render_model_text(model: &SystemModel) -> String {
    let chart = &model.chart;
    let mut out = String::new();
    out.push_str(&format!(
        "bundle {{ base: {} fiber: {} }}\n",
        chart.base.join(", "),
        chart.fiber.join(", ")
    ));
    for (name, args) in &chart.opaque {
        out.push_str(&format!("declare {name}({})\n", args.join(", ")));
    }
    for (name, sym) in &chart.consts {
        let tag = match sym {
            Symmetry::None => "",
            Symmetry::Symmetric => " symmetric",
            Symmetry::Skew => " skew",
        };
        out.push_str(&format!("const {name}{tag}\n"));
    }
    for (name, f) in &model.forms0 {
        out.push_str(&format!("current {name} {{"));
        for (i, e) in f.comps.iter().enumerate() {
            if !e.is_zero_literal() {
                out.push_str(&format!(" {} = {}", chart.base[i], e.to_text()));
            }
        }
        out.push_str(" }\n");
    }
    for (name, f) in &model.forms1 {
        out.push_str(&format!("form {name} deg 1 {{\n"));
        for (i, row) in f.theta.iter().enumerate() {
            for (a, e) in row.iter().enumerate() {
                if !e.is_zero_literal() {
                    out.push_str(&format!(
                        "  th[{}; {}] = {}\n",
                        chart.base[i],
                        chart.fiber[a],
                        e.to_text()
                    ));
                }
            }
        }
        if !f.h.is_zero_literal() {
            out.push_str(&format!("  h = {}\n", f.h.to_text()));
        }
        out.push_str("}\n");
    }
    for (name, f) in &model.forms2 {
        out.push_str(&format!("form {name} deg 2 {{\n"));
        for ((i, a, b), e) in &f.w {
            // the written coefficient is twice the stored skew part
            let written = normalize(&Expr::mul(vec![Expr::int(2), e.clone()]));
            out.push_str(&format!(
                "  w[{}; {}, {}] = {}\n",
                chart.base[*i],
                chart.fiber[*a],
                chart.fiber[*b],
                written.to_text()
            ));
        }
        for (a, e) in f.v.iter().enumerate() {
            if !e.is_zero_literal() {
                out.push_str(&format!("  v[{}] = {}\n", chart.fiber[a], e.to_text()));
            }
        }
        out.push_str("}\n");
    }
    for (name, f) in &model.fields {
        out.push_str(&format!("field {name} {{"));
        for (a, e) in f.comps.iter().enumerate() {
            if !e.is_zero_literal() {
                out.push_str(&format!(" {} = {}", chart.fiber[a], e.to_text()));
            }
        }
        out.push_str(" }\n");
    }
    for (name, m) in &model.maps {
        out.push_str(&format!("map {name} -> {} {{", m.target_label));
        for (k, e) in &m.assigns {
            out.push_str(&format!(" {k} = {}", e.to_text()));
        }
        out.push_str(" }\n");
    }
    if let Some(c) = &model.constraints {
        let parts: Vec<String> = c.exprs.iter().map(|e| e.to_text()).collect();
        out.push_str(&format!("constraints {{ {} }}\n", parts.join("; ")));
    }
    if let Some(sim) = &model.simulate {
        sim_to_text(sim, &mut out);
    }
    out
}

fn render_model_latex(model: &SystemModel) -> String {
    let mut out = String::new();
    for (name, f) in &model.forms2 {
        out.push_str(&format!("{name} &= {}\\\\\n", latex_form2(f)));
    }
    for (name, f) in &model.forms1 {
        out.push_str(&format!("{name} &= {}\\\\\n", latex_form1(f)));
    }
    for (name, f) in &model.forms0 {
        out.push_str(&format!("{name} &= {}\\\\\n", latex_form0(f)));
    }
    for (name, f) in &model.fields {
        let comps: Vec<String> = f
            .comps
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero_literal())
            .map(|(a, e)| {
                format!(
                    "\\left({}\\right)\\partial_{{{}}}",
                    latex_expr(e),
                    latex_name(&f.chart.fiber[a])
                )
            })
            .collect();
        out.push_str(&format!("{name} &= {}\\\\\n", if comps.is_empty() {
            "0".into()
        } else {
            comps.join(" + ")
        }));
    }
    if let Some(c) = &model.constraints {
        let parts: Vec<String> =
            c.exprs.iter().map(|e| format!("{} = 0", latex_expr(e))).collect();
        out.push_str(&format!("\\text{{constraints}}: {}\\\\\n", parts.join(",\\; ")));
    }
    out
}

fn model_json(model: &SystemModel) -> Value {
    let chart = &model.chart;
    let f0: Value = model
        .forms0
        .iter()
        .map(|(k, f)| {
            (k.clone(), json!(f.comps.iter().map(|e| e.to_text()).collect::<Vec<_>>()))
        })
        .collect::<serde_json::Map<_, _>>()
        .into();
    let f1: Value = model
        .forms1
        .iter()
        .map(|(k, f)| {
            (
                k.clone(),
                json!({
                    "theta": f.theta.iter().map(|row| row.iter().map(|e| e.to_text()).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    "h": f.h.to_text(),
                }),
            )
        })
        .collect::<serde_json::Map<_, _>>()
        .into();
    let f2: Value = model
        .forms2
        .iter()
        .map(|(k, f)| {
            let w: Vec<Value> = f
                .w
                .iter()
                .map(|((i, a, b), e)| {
                    json!({
                        "i": chart.base[*i],
                        "a": chart.fiber[*a],
                        "b": chart.fiber[*b],
                        "skew_part": e.to_text(),
                    })
                })
                .collect();
            (
                k.clone(),
                json!({
                    "w": w,
                    "v": f.v.iter().map(|e| e.to_text()).collect::<Vec<_>>(),
                }),
            )
        })
        .collect::<serde_json::Map<_, _>>()
        .into();
    json!({
        "chart": {
            "base": chart.base,
            "fiber": chart.fiber,
            "opaque": chart.opaque,
            "consts": chart.consts.iter().map(|(k, s)| {
                (k.clone(), json!(match s {
                    Symmetry::None => "none",
                    Symmetry::Symmetric => "symmetric",
                    Symmetry::Skew => "skew",
                }))
            }).collect::<serde_json::Map<_, _>>(),
        },
        "currents": f0,
        "forms1": f1,
        "forms2": f2,
        "fields": model.fields.iter().map(|(k, f)| {
            (k.clone(), json!(f.comps.iter().map(|e| e.to_text()).collect::<Vec<_>>()))
        }).collect::<serde_json::Map<_, _>>(),
        "constraints": model.constraints.as_ref().map(|c| {
            c.exprs.iter().map(|e| e.to_text()).collect::<Vec<_>>()
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::is_zero;

    #[test]
    fn text_render_round_trips() {
        let text = r#"
bundle { base: x1, x2 fiber: u, u1, u2 }
const g symmetric
declare V(u)
form omega deg 2 {
  w[x1; u1, u] = g(1,1)
  v[u] = -diff(V(u),u)
}
field Y { u = u1 }
current f { x1 = u*u1 }
constraints { u - u1 }
"#;
        let m1 = parse_system(text).unwrap();
        let rendered = render_model(&m1, Format::Text);
        let m2 = parse_system(&rendered).unwrap_or_else(|e| {
            panic!("re-parse failed: {e:?}\n{rendered}");
        });
        assert_eq!(m1.chart, m2.chart);
        let w1 = m1.forms2["omega"].w_at(0, 1, 0);
        let w2 = m2.forms2["omega"].w_at(0, 1, 0);
        assert!(is_zero(&w1.sub(w2)).is_zero());
        assert_eq!(m1.fields["Y"].comps, m2.fields["Y"].comps);
    }

    #[test]
    fn latex_uses_paper_densities() {
        let text = r#"
bundle { base: x1, x2 fiber: u }
form th deg 1 { th[x1; u] = u h = u^2 }
"#;
        let m = parse_system(text).unwrap();
        let s = latex_form1(&m.forms1["th"]);
        assert!(s.contains("d^{1}x_{x_{1}}"), "{s}");
        assert!(s.contains("d^{2}x"), "{s}");
    }
}
