//! The PDESPEC v1 text format.
//!
//! ```text
//! [domain]
//! a = 0
//! b = 1
//! [states]
//! n0 = 0  n1 = 1  n2 = 0
//! [params]
//! c
//! [dynamics]
//! A0 = [[c, -1]]
//! [bc]
//! B = [[1, 0]]
//! BI = [["s*(1-s)", 0]]
//! ```
//!
//! Omitted blocks are zero. Matrix values may continue over several lines
//! until their brackets balance. `#` starts a comment.

use std::fmt::Write as _;

use crate::polyalg::{format_matrix, parse_expr, parse_matrix, MPoly, PolyError};
use crate::scalar::{format_rational, Rational};

use super::{PdeError, PdeSystem, StatePartition, SymMatrix};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Domain,
    States,
    Params,
    Dynamics,
    Bc,
}

/// Source position of each character of a (possibly multi-line) value.
struct Located {
    text: String,
    origin: Vec<(usize, usize)>,
}

impl Located {
    fn new() -> Self {
        Self { text: String::new(), origin: Vec::new() }
    }

    fn push_line(&mut self, line: usize, first_col: usize, chunk: &str) {
        if !self.text.is_empty() {
            self.text.push('\n');
            self.origin.push((line, first_col));
        }
        for (k, ch) in chunk.chars().enumerate() {
            self.text.push(ch);
            self.origin.push((line, first_col + k));
        }
    }

    /// Maps a 1-based column within `text` back to (line, column).
    fn locate(&self, column: usize) -> (usize, usize) {
        let idx = column.saturating_sub(1);
        match self.origin.get(idx).or_else(|| self.origin.last()) {
            Some(&pos) => pos,
            None => (0, 1),
        }
    }
}

struct Pending {
    key: String,
    value: Located,
    depth: i64,
}

#[derive(Default)]
struct Collected {
    a: Option<Rational>,
    b: Option<Rational>,
    n: [Option<usize>; 3],
    params: Vec<String>,
    blocks: Vec<(String, Vec<Vec<MPoly>>)>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> PdeError {
    PdeError::Syntax { line, column, message: message.into() }
}

fn bracket_depth(s: &str) -> i64 {
    s.chars().map(|c| match c {
        '[' => 1,
        ']' => -1,
        _ => 0,
    }).sum()
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

/// Splits `k1 = v1 k2 = v2` (commas optional) into pairs with the column
/// where each value starts.
fn assignments(line: &str, line_no: usize) -> Result<Vec<(String, String, usize)>, PdeError> {
    let parts: Vec<&str> = line.split('=').collect();
    if parts.len() < 2 {
        return Err(syntax(line_no, 1, "expected 'name = value'"));
    }
    let mut out = Vec::new();
    let mut offset = parts[0].chars().count() + 1;
    let mut key = parts[0].trim().trim_matches(',').trim().to_string();
    for (k, part) in parts.iter().enumerate().skip(1) {
        let last = k + 1 == parts.len();
        let (value, next_key) = if last {
            (part.trim().to_string(), String::new())
        } else {
            let body = part.trim_end();
            let split = body.rfind(|c: char| c.is_whitespace() || c == ',').ok_or_else(|| {
                syntax(line_no, offset + 1, "expected a separator before the next name")
            })?;
            (body[..split].trim().trim_end_matches(',').trim().to_string(), body[split + 1..].to_string())
        };
        if key.is_empty() {
            return Err(syntax(line_no, offset, "missing name before '='"));
        }
        let lead = part.chars().take_while(|c| c.is_whitespace()).count();
        out.push((key, value, offset + lead + 1));
        offset += part.chars().count() + 1;
        key = next_key.trim().to_string();
    }
    Ok(out)
}

fn constant(src: &str, line: usize, column: usize) -> Result<Rational, PdeError> {
    let e = parse_expr(src).map_err(|e| match e {
        PolyError::Parse { column: c, message } => syntax(line, column + c - 1, message),
        other => syntax(line, column, other.to_string()),
    })?;
    if !e.variables().is_empty() {
        return Err(syntax(line, column, format!("'{src}' must be a constant")));
    }
    let value = e.terms().next().map_or_else(|| Rational::from_integer(0.into()), |(_, c)| c.clone());
    Ok(value)
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn finish_matrix(p: Pending, out: &mut Collected) -> Result<(), PdeError> {
    let rows = parse_matrix(&p.value.text).map_err(|e| match e {
        PolyError::Parse { column, message } => {
            let (line, col) = p.value.locate(column);
            syntax(line, col, format!("{}: {message}", p.key))
        }
        other => {
            let (line, col) = p.value.locate(1);
            syntax(line, col, other.to_string())
        }
    })?;
    if out.blocks.iter().any(|(k, _)| *k == p.key) {
        let (line, col) = p.value.locate(1);
        return Err(syntax(line, col, format!("block {} given twice", p.key)));
    }
    out.blocks.push((p.key, rows));
    Ok(())
}

pub fn parse_pde(text: &str) -> Result<PdeSystem, PdeError> {
    let mut section = Section::None;
    let mut out = Collected::default();
    let mut pending: Option<Pending> = None;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let body = strip_comment(raw);
        if let Some(mut p) = pending.take() {
            let lead = body.chars().take_while(|c| c.is_whitespace()).count();
            p.value.push_line(line_no, lead + 1, body.trim());
            p.depth += bracket_depth(body);
            if p.depth > 0 {
                pending = Some(p);
            } else {
                finish_matrix(p, &mut out)?;
            }
            continue;
        }
        let line = body.trim();
        if line.is_empty() {
            continue;
        }
        let lead = body.chars().take_while(|c| c.is_whitespace()).count();
        if line.starts_with('[') && line.ends_with(']') && !line.contains('=') {
            section = match line[1..line.len() - 1].trim() {
                "domain" => Section::Domain,
                "states" => Section::States,
                "params" => Section::Params,
                "dynamics" => Section::Dynamics,
                "bc" => Section::Bc,
                other => return Err(syntax(line_no, lead + 1, format!("unknown section '{other}'"))),
            };
            continue;
        }
        match section {
            Section::None => {
                return Err(syntax(line_no, lead + 1, "content before the first section header"))
            }
            Section::Params => {
                let mut col = lead + 1;
                for token in line.split(|c: char| c == ',' || c.is_whitespace()) {
                    if !token.is_empty() {
                        if !is_identifier(token) || token == "s" || token == "th" {
                            return Err(syntax(line_no, col, format!("invalid parameter name '{token}'")));
                        }
                        if out.params.iter().any(|p| p == token) {
                            return Err(syntax(line_no, col, format!("parameter '{token}' declared twice")));
                        }
                        out.params.push(token.to_string());
                    }
                    col += token.chars().count() + 1;
                }
            }
            Section::Domain | Section::States => {
                for (key, value, col) in assignments(body, line_no)? {
                    match (section, key.as_str()) {
                        (Section::Domain, "a") => out.a = Some(constant(&value, line_no, col)?),
                        (Section::Domain, "b") => out.b = Some(constant(&value, line_no, col)?),
                        (Section::States, "n0" | "n1" | "n2") => {
                            let idx = (key.as_bytes()[1] - b'0') as usize;
                            let n = value.parse::<usize>().map_err(|_| {
                                syntax(line_no, col, format!("{key} must be a nonnegative integer"))
                            })?;
                            out.n[idx] = Some(n);
                        }
                        _ => return Err(syntax(line_no, col, format!("unknown key '{key}'"))),
                    }
                }
            }
            Section::Dynamics | Section::Bc => {
                let (key, rest) = body
                    .split_once('=')
                    .ok_or_else(|| syntax(line_no, lead + 1, "expected 'NAME = [[...]]'"))?;
                let key = key.trim().to_string();
                let allowed: &[&str] =
                    if section == Section::Dynamics { &["A0", "A1", "A2"] } else { &["B", "BI"] };
                if !allowed.contains(&key.as_str()) {
                    return Err(syntax(line_no, lead + 1, format!("unknown block '{key}' here")));
                }
                let offset = body[..body.find('=').unwrap()].chars().count() + 1;
                let value_lead = rest.chars().take_while(|c| c.is_whitespace()).count();
                let mut value = Located::new();
                value.push_line(line_no, offset + value_lead + 1, rest.trim());
                let p = Pending { key, value, depth: bracket_depth(rest) };
                if p.depth > 0 {
                    pending = Some(p);
                } else {
                    finish_matrix(p, &mut out)?;
                }
            }
        }
    }
    if let Some(p) = pending {
        let (line, col) = p.value.locate(1);
        return Err(syntax(line, col, format!("unterminated matrix for {}", p.key)));
    }
    assemble(out)
}

fn assemble(c: Collected) -> Result<PdeSystem, PdeError> {
    let missing = |what: &str| PdeError::Invalid(format!("missing {what}"));
    let a = c.a.clone().ok_or_else(|| missing("domain endpoint a"))?;
    let b = c.b.clone().ok_or_else(|| missing("domain endpoint b"))?;
    let part = StatePartition::new(c.n[0].unwrap_or(0), c.n[1].unwrap_or(0), c.n[2].unwrap_or(0))?;
    let (nx, nd, ns) = (part.n_x(), part.n_d(), part.n_s());
    let find = |name: &str| c.blocks.iter().find(|(k, _)| k == name).map(|(_, v)| v.clone());
    let nbc = find("B").map_or_else(|| find("BI").map_or(ns, |m| m.len()), |m| m.len());
    let block = |name: &str, rows: usize, cols: usize| match find(name) {
        Some(m) => SymMatrix::from_rows(m, cols),
        None => SymMatrix::zeros(rows, cols),
    };
    PdeSystem::new(
        part,
        a,
        b,
        c.params.clone(),
        block("A0", nx, nd),
        block("A1", nx, nd),
        block("A2", nx, nd),
        block("B", nbc, 2 * ns),
        block("BI", nbc, nd),
    )
}

/// Canonical PDESPEC text; `parse_pde(&format_pde(sys)) == sys`.
pub fn format_pde(sys: &PdeSystem) -> String {
    let mut out = String::new();
    let p = sys.partition;
    let _ = writeln!(out, "[domain]");
    let _ = writeln!(out, "a = {}", format_rational(&sys.a));
    let _ = writeln!(out, "b = {}", format_rational(&sys.b));
    let _ = writeln!(out, "[states]");
    let _ = writeln!(out, "n0 = {}\nn1 = {}\nn2 = {}", p.n0, p.n1, p.n2);
    let _ = writeln!(out, "[params]");
    if !sys.params.is_empty() {
        let _ = writeln!(out, "{}", sys.params.join(", "));
    }
    let _ = writeln!(out, "[dynamics]");
    for (name, m) in [("A0", &sys.a0), ("A1", &sys.a1), ("A2", &sys.a2)] {
        let _ = writeln!(out, "{name} = {}", format_matrix(&m.to_rows()));
    }
    let _ = writeln!(out, "[bc]");
    for (name, m) in [("B", &sys.bmat), ("BI", &sys.bi)] {
        let _ = writeln!(out, "{name} = {}", format_matrix(&m.to_rows()));
    }
    out
}
