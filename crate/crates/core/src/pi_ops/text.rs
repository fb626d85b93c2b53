//! Line-oriented text form of an operator:
//!
//! ```text
//! domain = [0, 1]
//! dims = 1 x 1
//! R0 = [["0"]]
//! R1 = [["s*th - th"]]
//! R2 = [["s*th - s"]]
//! ```

use std::fmt::Write as _;

use crate::polyalg::{format_matrix, parse_expr, parse_matrix, Entry, MPoly, Mat, PolyError};
use crate::scalar::{format_rational, Rational};

use super::{PiError, RatOperator};

pub fn format_operator(op: &RatOperator) -> String {
    let mut out = String::new();
    write_operator_block(&mut out, op);
    out
}

/// Appends the `domain`/`dims`/`R0`/`R1`/`R2` lines for `op`.
pub fn write_operator_block(out: &mut String, op: &RatOperator) {
    let (p, q) = op.shape();
    let _ = writeln!(out, "domain = [{}, {}]", format_rational(op.a()), format_rational(op.b()));
    let _ = writeln!(out, "dims = {p} x {q}");
    let r0: Vec<Vec<MPoly>> = (0..p)
        .map(|i| (0..q).map(|j| MPoly::from_poly1(op.r0().get(i, j))).collect())
        .collect();
    let _ = writeln!(out, "R0 = {}", format_matrix(&r0));
    for (name, k) in [("R1", op.r1()), ("R2", op.r2())] {
        let m: Vec<Vec<MPoly>> =
            (0..p).map(|i| (0..q).map(|j| MPoly::from_poly2(k.get(i, j))).collect()).collect();
        let _ = writeln!(out, "{name} = {}", format_matrix(&m));
    }
}

/// Parses one operator block; `first_line` offsets reported line numbers.
pub fn parse_operator_at(text: &str, first_line: usize) -> Result<RatOperator, PiError> {
    let mut domain = None;
    let mut dims = None;
    let mut blocks: [Option<Vec<Vec<MPoly>>>; 3] = [None, None, None];
    for (k, raw) in text.lines().enumerate() {
        let line_no = first_line + k;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fmt_err = |m: String| PiError::Format { line: line_no, message: m };
        let (key, value) =
            line.split_once('=').ok_or_else(|| fmt_err("expected 'key = value'".into()))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "domain" => {
                let inner = value
                    .strip_prefix('[')
                    .and_then(|v| v.strip_suffix(']'))
                    .ok_or_else(|| fmt_err("domain must be '[a, b]'".into()))?;
                let (a, b) = inner
                    .split_once(',')
                    .ok_or_else(|| fmt_err("domain must be '[a, b]'".into()))?;
                domain = Some((constant(a).map_err(|e| fmt_err(e.to_string()))?, {
                    constant(b).map_err(|e| fmt_err(e.to_string()))?
                }));
            }
            "dims" => {
                let (p, q) =
                    value.split_once('x').ok_or_else(|| fmt_err("dims must be 'p x q'".into()))?;
                let p: usize = p.trim().parse().map_err(|_| fmt_err("bad row count".into()))?;
                let q: usize = q.trim().parse().map_err(|_| fmt_err("bad column count".into()))?;
                dims = Some((p, q));
            }
            "R0" | "R1" | "R2" => {
                let idx = key.as_bytes()[1] as usize - b'0' as usize;
                blocks[idx] = Some(parse_matrix(value).map_err(|e| fmt_err(e.to_string()))?);
            }
            other => return Err(fmt_err(format!("unknown key '{other}'"))),
        }
    }
    let missing = |what: &str| PiError::Format { line: first_line, message: format!("missing {what}") };
    let (a, b) = domain.ok_or_else(|| missing("domain"))?;
    let (p, q) = dims.ok_or_else(|| missing("dims"))?;
    let to_mat = |rows: &Option<Vec<Vec<MPoly>>>, name: &str| -> Result<Vec<Vec<MPoly>>, PiError> {
        let rows = rows.clone().ok_or_else(|| missing(name))?;
        let shape_ok = rows.len() == p && rows.iter().all(|r| r.len() == q);
        if !shape_ok && !(p == 0 || q == 0) {
            return Err(PiError::Format {
                line: first_line,
                message: format!("{name} does not have shape {p} x {q}"),
            });
        }
        Ok(rows)
    };
    let r0 = to_mat(&blocks[0], "R0")?;
    let r1 = to_mat(&blocks[1], "R1")?;
    let r2 = to_mat(&blocks[2], "R2")?;
    let lift = |e: PolyError| PiError::Format { line: first_line, message: e.to_string() };
    let m0 = build(p, q, &r0, MPoly::to_poly1).map_err(lift)?;
    let m1 = build(p, q, &r1, MPoly::to_poly2).map_err(lift)?;
    let m2 = build(p, q, &r2, MPoly::to_poly2).map_err(lift)?;
    RatOperator::new(a, b, m0, m1, m2)
}

pub fn parse_operator(text: &str) -> Result<RatOperator, PiError> {
    parse_operator_at(text, 1)
}

fn build<P: Entry>(
    p: usize,
    q: usize,
    rows: &[Vec<MPoly>],
    f: impl Fn(&MPoly) -> Result<P, PolyError>,
) -> Result<Mat<P>, PolyError> {
    let mut data = Vec::with_capacity(p * q);
    for e in rows.iter().flatten() {
        data.push(f(e)?);
    }
    Ok(Mat::from_vec(p, q, data))
}

fn constant(src: &str) -> Result<Rational, PolyError> {
    let e = parse_expr(src)?;
    let p = e.to_poly2()?;
    if p.deg_s().unwrap_or(0) > 0 || p.deg_theta().unwrap_or(0) > 0 {
        return Err(PolyError::MalformedBound(format!("'{src}' is not a constant")));
    }
    Ok(p.coeff(0, 0))
}
