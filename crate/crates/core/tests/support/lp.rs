//! A small reader for CPLEX LP text, written independently of the exporter.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Default, Clone)]
pub struct LpModel {
    pub minimize: bool,
    pub objective: Vec<(f64, String)>,
    pub rows: Vec<Row>,
    pub bounds: HashMap<String, (f64, f64)>,
    pub general: BTreeSet<String>,
    pub binary: BTreeSet<String>,
}

impl LpModel {
    /// Every variable named anywhere in the file.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut v: BTreeSet<String> = self.objective.iter().map(|(_, n)| n.clone()).collect();
        for r in &self.rows {
            v.extend(r.terms.iter().map(|(_, n)| n.clone()));
        }
        v.extend(self.bounds.keys().cloned());
        v.extend(self.general.iter().cloned());
        v.extend(self.binary.iter().cloned());
        v
    }

    pub fn bound(&self, var: &str) -> (f64, f64) {
        let default_hi = if self.binary.contains(var) { 1.0 } else { f64::INFINITY };
        self.bounds.get(var).copied().unwrap_or((0.0, default_hi))
    }

    pub fn objective_at(&self, values: &HashMap<String, f64>) -> f64 {
        eval(&self.objective, values)
    }

    /// Names of rows, bounds and integrality markers violated by `values` beyond `tol`.
    pub fn violations(&self, values: &HashMap<String, f64>, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            let lhs = eval(&r.terms, values);
            let ok = match r.sense {
                Sense::Le => lhs <= r.rhs + tol,
                Sense::Ge => lhs >= r.rhs - tol,
                Sense::Eq => (lhs - r.rhs).abs() <= tol,
            };
            if !ok {
                out.push(format!("{}: {lhs} vs {}", r.name, r.rhs));
            }
        }
        for v in self.variables() {
            let x = values.get(&v).copied().unwrap_or(0.0);
            let (lo, hi) = self.bound(&v);
            if x < lo - tol || x > hi + tol {
                out.push(format!("bound {v} = {x}"));
            }
            if (self.general.contains(&v) || self.binary.contains(&v)) && (x - x.round()).abs() > tol {
                out.push(format!("integrality {v} = {x}"));
            }
        }
        out
    }
}

fn eval(terms: &[(f64, String)], values: &HashMap<String, f64>) -> f64 {
    terms.iter().map(|(c, v)| c * values.get(v).copied().unwrap_or(0.0)).sum()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Cmp(Sense),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if c == '+' {
            out.push(Tok::Plus);
            k += 1;
        } else if c == '-' {
            out.push(Tok::Minus);
            k += 1;
        } else if c == ':' {
            out.push(Tok::Colon);
            k += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut op = c.to_string();
            if k + 1 < chars.len() && matches!(chars[k + 1], '<' | '>' | '=') {
                op.push(chars[k + 1]);
            }
            k += op.len();
            out.push(Tok::Cmp(match op.as_str() {
                "<" | "<=" | "=<" => Sense::Le,
                ">" | ">=" | "=>" => Sense::Ge,
                "=" => Sense::Eq,
                other => return Err(format!("bad operator {other}")),
            }));
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len()
                && (chars[k].is_ascii_digit()
                    || chars[k] == '.'
                    || ((chars[k] == 'e' || chars[k] == 'E') && k + 1 < chars.len())
                    || ((chars[k] == '-' || chars[k] == '+') && matches!(chars[k - 1], 'e' | 'E')))
            {
                k += 1;
            }
            let s: String = chars[start..k].iter().collect();
            out.push(Tok::Num(s.parse().map_err(|_| format!("bad number {s}"))?));
        } else if c.is_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_alphanumeric() || "_.[]{}!\"#$%&(),;?@'`|~".contains(chars[k])) {
                k += 1;
            }
            out.push(Tok::Ident(chars[start..k].iter().collect()));
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

/// Parses `+ 3 x - y 2.5 z` style sums; stops at the first token that is not part of a term.
fn terms(toks: &[Tok], k: &mut usize) -> Result<Vec<(f64, String)>, String> {
    let mut out = Vec::new();
    loop {
        let mut sign = 1.0;
        let mut saw = false;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = toks.get(*k) {
            if *t == Tok::Minus {
                sign = -sign;
            }
            *k += 1;
            saw = true;
        }
        let coef = match toks.get(*k) {
            Some(Tok::Num(v)) => {
                // A bare number followed by a comparison is a right-hand side, not a term.
                if !saw && matches!(toks.get(*k + 1), Some(Tok::Cmp(_)) | None) {
                    return Ok(out);
                }
                *k += 1;
                *v
            }
            _ => 1.0,
        };
        match (toks.get(*k), toks.get(*k + 1)) {
            (Some(Tok::Ident(name)), next) if next != Some(&Tok::Colon) => {
                out.push((sign * coef, name.clone()));
                *k += 1;
            }
            _ if saw => return Err(format!("dangling sign at token {}", *k)),
            _ => return Ok(out),
        }
    }
}

fn number(toks: &[Tok], k: &mut usize) -> Result<f64, String> {
    let mut sign = 1.0;
    while let Some(t @ (Tok::Plus | Tok::Minus)) = toks.get(*k) {
        if *t == Tok::Minus {
            sign = -sign;
        }
        *k += 1;
    }
    match toks.get(*k) {
        Some(Tok::Num(v)) => {
            *k += 1;
            Ok(sign * v)
        }
        Some(Tok::Ident(s)) if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") => {
            *k += 1;
            Ok(sign * f64::INFINITY)
        }
        other => Err(format!("expected a number, found {other:?}")),
    }
}

fn section_of(line: &str) -> Option<&'static str> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" | "minimum" | "min" => Some("min"),
        "maximize" | "maximum" | "max" => Some("max"),
        "subject to" | "such that" | "st" | "s.t." => Some("st"),
        "bounds" | "bound" => Some("bounds"),
        "general" | "generals" | "gen" => Some("general"),
        "binary" | "binaries" | "bin" => Some("binary"),
        "end" => Some("end"),
        _ => None,
    }
}

pub fn parse(text: &str) -> Result<LpModel, String> {
    let mut sections: BTreeMap<usize, (&'static str, String)> = BTreeMap::new();
    let mut current: Option<usize> = None;
    let mut ended = false;
    for line in text.lines() {
        let line = line.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if ended {
            return Err("content after End".into());
        }
        if let Some(s) = section_of(line) {
            if s == "end" {
                ended = true;
                continue;
            }
            let id = sections.len();
            sections.insert(id, (s, String::new()));
            current = Some(id);
            continue;
        }
        let id = current.ok_or("content before the objective section")?;
        let body = &mut sections.get_mut(&id).unwrap().1;
        body.push_str(line);
        body.push('\n');
    }
    if !ended {
        return Err("missing End".into());
    }

    let mut m = LpModel::default();
    let mut seen_objective = false;
    for (_, (kind, body)) in sections {
        match kind {
            "min" | "max" => {
                if seen_objective {
                    return Err("two objectives".into());
                }
                seen_objective = true;
                m.minimize = kind == "min";
                let toks = tokenize(&body)?;
                let mut k = 0;
                if let (Some(Tok::Ident(_)), Some(Tok::Colon)) = (toks.first(), toks.get(1)) {
                    k = 2;
                }
                m.objective = terms(&toks, &mut k)?;
                if k != toks.len() {
                    return Err(format!("trailing objective tokens from {k}"));
                }
            }
            "st" => {
                let toks = tokenize(&body)?;
                let mut k = 0;
                while k < toks.len() {
                    let name = match (toks.get(k), toks.get(k + 1)) {
                        (Some(Tok::Ident(n)), Some(Tok::Colon)) => {
                            k += 2;
                            n.clone()
                        }
                        _ => format!("R{}", m.rows.len()),
                    };
                    let t = terms(&toks, &mut k)?;
                    let sense = match toks.get(k) {
                        Some(Tok::Cmp(s)) => *s,
                        other => return Err(format!("row {name}: expected comparison, found {other:?}")),
                    };
                    k += 1;
                    let rhs = number(&toks, &mut k)?;
                    if t.is_empty() {
                        return Err(format!("row {name} has no terms"));
                    }
                    m.rows.push(Row { name, terms: t, sense, rhs });
                }
            }
            "bounds" => {
                for line in body.lines() {
                    parse_bound(line, &mut m.bounds)?;
                }
            }
            "general" => m.general.extend(names(&body)?),
            "binary" => m.binary.extend(names(&body)?),
            _ => unreachable!(),
        }
    }
    if !seen_objective {
        return Err("no objective".into());
    }
    Ok(m)
}

fn names(body: &str) -> Result<Vec<String>, String> {
    tokenize(body)?
        .into_iter()
        .map(|t| match t {
            Tok::Ident(s) => Ok(s),
            other => Err(format!("expected a name, found {other:?}")),
        })
        .collect()
}

fn parse_bound(line: &str, bounds: &mut HashMap<String, (f64, f64)>) -> Result<(), String> {
    let toks = tokenize(line)?;
    let entry = |b: &mut HashMap<String, (f64, f64)>, v: &str| *b.entry(v.to_string()).or_insert((0.0, f64::INFINITY));
    match toks.as_slice() {
        [Tok::Ident(v), Tok::Ident(free)] if free.eq_ignore_ascii_case("free") => {
            bounds.insert(v.clone(), (f64::NEG_INFINITY, f64::INFINITY));
        }
        [Tok::Ident(v), Tok::Cmp(s), rest @ ..] => {
            let mut k = 0;
            let x = number(rest, &mut k)?;
            let (lo, hi) = entry(bounds, v);
            bounds.insert(
                v.clone(),
                match s {
                    Sense::Le => (lo, x),
                    Sense::Ge => (x, hi),
                    Sense::Eq => (x, x),
                },
            );
        }
        _ => {
            // lo <= v <= hi, with an optional leading sign on lo.
            let mut k = 0;
            let lo = number(&toks, &mut k)?;
            if toks.get(k) != Some(&Tok::Cmp(Sense::Le)) {
                return Err(format!("unsupported bound {line:?}"));
            }
            k += 1;
            let Some(Tok::Ident(v)) = toks.get(k) else {
                return Err(format!("unsupported bound {line:?}"));
            };
            k += 1;
            let hi = match toks.get(k) {
                Some(Tok::Cmp(Sense::Le)) => {
                    k += 1;
                    number(&toks, &mut k)?
                }
                None => entry(bounds, v).1,
                _ => return Err(format!("unsupported bound {line:?}")),
            };
            bounds.insert(v.clone(), (lo, hi));
        }
    }
    Ok(())
}
