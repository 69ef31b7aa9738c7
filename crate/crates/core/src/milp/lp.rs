//! CPLEX-style LP text.
//!
//! Every row carries a label, every variable appears in `Bounds` in
//! declaration order, and numbers use the shortest round-tripping decimal
//! form. A problem with no variables exports as `obj: 0` with empty
//! sections.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use super::problem::{MilpProblem, Sense, VarKind};

const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("variable {0} used but never bounded")]
    Undeclared(String),
}

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == 0.0 {
        "0".into()
    } else {
        alloc::format!("{x}")
    }
}

fn write_terms(out: &mut String, p: &MilpProblem, coeffs: &[(usize, f64)]) {
    for (k, &(j, a)) in coeffs.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", num(a.abs()), p.variables[j].name);
    }
}

/// Renders `p` as LP text.
pub fn export_lp(p: &MilpProblem) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, p, &p.objective.coeffs);
    if p.objective.constant != 0.0 || p.objective.coeffs.is_empty() {
        let c = p.objective.constant;
        let sign = if c < 0.0 { '-' } else { '+' };
        if p.objective.coeffs.is_empty() && c >= 0.0 {
            let _ = write!(out, " {}", num(c));
        } else {
            let _ = write!(out, " {sign} {}", num(c.abs()));
        }
    }
    out.push_str("\nSubject To\n");
    for c in &p.constraints {
        let _ = write!(out, " {}:", c.name);
        write_terms(&mut out, p, &c.coeffs);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &p.variables {
        let _ = match (v.lower.is_finite(), v.upper.is_finite()) {
            _ if v.lower == v.upper => writeln!(out, " {} = {}", v.name, num(v.lower)),
            (false, false) => writeln!(out, " {} free", v.name),
            _ => writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper)),
        };
    }
    out.push_str("Binaries\n");
    for v in p.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Rows,
    Bounds,
    Binaries,
    Done,
}

struct Stmt {
    line: usize,
    label: String,
    tokens: Vec<String>,
}

fn parse_num(tok: &str, line: usize) -> Result<f64, LpError> {
    match tok {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| LpError::Syntax { line, message: alloc::format!("expected number, found `{tok}`") }),
    }
}

fn is_num(tok: &str) -> bool {
    tok.parse::<f64>().is_ok() || matches!(tok, "inf" | "-inf" | "+inf")
}

/// Linear expression `[+|-] [coef] name ...` with an optional bare constant.
fn parse_expr(tokens: &[String], line: usize) -> Result<(Vec<(String, f64)>, f64), LpError> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in tokens {
        match tok.as_str() {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            t if is_num(t) => {
                if coef.is_some() {
                    return Err(LpError::Syntax { line, message: "two numbers in a row".into() });
                }
                coef = Some(parse_num(t, line)?);
            }
            name => {
                terms.push((name.to_string(), sign * coef.take().unwrap_or(1.0)));
                sign = 1.0;
            }
        }
    }
    if let Some(c) = coef {
        constant += sign * c;
    }
    Ok((terms, constant))
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        if !cur.is_empty() {
            out.push(core::mem::take(cur));
        }
    };
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            flush(&mut cur, &mut out);
        } else if (c == '+' || c == '-') && cur.is_empty() && chars.get(i + 1).is_none_or(|n| n.is_whitespace()) {
            out.push(c.to_string());
        } else if c == '<' || c == '>' || c == '=' {
            flush(&mut cur, &mut out);
            let mut op = c.to_string();
            if chars.get(i + 1) == Some(&'=') {
                op.push('=');
                i += 1;
            }
            out.push(op);
        } else {
            cur.push(c);
        }
        i += 1;
    }
    flush(&mut cur, &mut out);
    out
}

fn sense_of(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "<" => Some(Sense::Le),
        ">=" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

fn header(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "st" | "s.t." => Some(Section::Rows),
        "bounds" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::Done),
        _ => None,
    }
}

/// Reads text in the dialect written by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<MilpProblem, LpError> {
    let mut section = Section::None;
    let mut objective: Option<Stmt> = None;
    let mut rows: Vec<Stmt> = Vec::new();
    let mut bounds: Vec<(usize, Vec<String>)> = Vec::new();
    let mut binaries: Vec<(usize, String)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('\\').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(s) = header(body) {
            section = s;
            continue;
        }
        let err = |message: &str| LpError::Syntax { line, message: message.into() };
        match section {
            Section::None => return Err(err("content before `Minimize`")),
            Section::Done => return Err(err("content after `End`")),
            Section::Objective | Section::Rows => {
                let (label, rest) = match body.split_once(':') {
                    Some((l, r)) => (Some(l.trim().to_string()), r),
                    None => (None, body),
                };
                let target = if section == Section::Objective { objective.as_mut() } else { rows.last_mut() };
                match (label, target) {
                    (Some(label), _) => {
                        let stmt = Stmt { line, label, tokens: tokenize(rest) };
                        if section == Section::Objective {
                            if objective.is_some() {
                                return Err(err("second objective"));
                            }
                            objective = Some(stmt);
                        } else {
                            rows.push(stmt);
                        }
                    }
                    (None, Some(stmt)) => stmt.tokens.extend(tokenize(rest)),
                    (None, None) => return Err(err("unlabelled row")),
                }
            }
            Section::Bounds => bounds.push((line, tokenize(body))),
            Section::Binaries => binaries.extend(body.split_whitespace().map(|n| (line, n.to_string()))),
        }
    }
    if section != Section::Done {
        return Err(LpError::Syntax { line: text.lines().count(), message: "missing `End`".into() });
    }

    let mut p = MilpProblem::new();
    let mut by_name: BTreeMap<String, usize> = BTreeMap::new();
    for (line, toks) in &bounds {
        let line = *line;
        let err = || LpError::Syntax { line, message: "unrecognised bound".into() };
        let (name, lo, hi) = match toks.as_slice() {
            [n, f] if f.eq_ignore_ascii_case("free") => (n.clone(), f64::NEG_INFINITY, f64::INFINITY),
            [n, eq, v] if eq == "=" => {
                let v = parse_num(v, line)?;
                (n.clone(), v, v)
            }
            [lo, a, n, b, hi] if a == "<=" && b == "<=" => (n.clone(), parse_num(lo, line)?, parse_num(hi, line)?),
            [n, op, v] if op == ">=" => (n.clone(), parse_num(v, line)?, f64::INFINITY),
            [n, op, v] if op == "<=" => (n.clone(), 0.0, parse_num(v, line)?),
            _ => return Err(err()),
        };
        if by_name.contains_key(&name) {
            return Err(LpError::Syntax { line, message: alloc::format!("{name} bounded twice") });
        }
        let j = p.add_var(name.clone(), lo, hi, VarKind::Continuous);
        by_name.insert(name, j);
    }
    for (line, name) in binaries {
        let j = *by_name.get(&name).ok_or(LpError::Syntax { line, message: alloc::format!("unknown binary {name}") })?;
        p.variables[j].kind = VarKind::Binary;
    }
    let resolve = |terms: Vec<(String, f64)>| -> Result<Vec<(usize, f64)>, LpError> {
        terms.into_iter().map(|(n, a)| by_name.get(&n).map(|&j| (j, a)).ok_or(LpError::Undeclared(n))).collect()
    };

    if let Some(obj) = objective {
        let (terms, constant) = parse_expr(&obj.tokens, obj.line)?;
        p.set_objective(resolve(terms)?, constant);
    }
    for row in rows {
        let at = row.tokens.iter().position(|t| sense_of(t).is_some());
        let Some(at) = at else {
            return Err(LpError::Syntax { line: row.line, message: alloc::format!("row {} has no sense", row.label) });
        };
        let sense = sense_of(&row.tokens[at]).expect("found above");
        let (terms, constant) = parse_expr(&row.tokens[..at], row.line)?;
        let (rhs_terms, rhs) = parse_expr(&row.tokens[at + 1..], row.line)?;
        if !rhs_terms.is_empty() {
            return Err(LpError::Syntax { line: row.line, message: "variables on the right-hand side".into() });
        }
        let coeffs = resolve(terms)?;
        p.add_constraint(row.label, coeffs, sense, rhs - constant);
    }
    Ok(p)
}
