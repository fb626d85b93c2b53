//! Polynomial expression grammar shared by the model parser and the
//! operator text format.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary ('*' unary)*
//! unary := ('+' | '-') unary | power
//! power := atom ('^' integer)?
//! atom  := number ('/' number)? | ident | '(' expr ')'
//! ```
//!
//! Identifiers `s` and `th` are the spatial variables; any other identifier
//! is a named parameter.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::scalar::{format_rational, Rational};

use super::{Poly1, Poly2, PolyError};

/// Sorted `(variable, exponent)` pairs with positive exponents.
pub type Monomial = Vec<(String, u32)>;

/// Sparse multivariate polynomial over named variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl MPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn var(name: &str) -> Self {
        let mut p = Self::zero();
        p.terms.insert(vec![(name.to_string(), 1)], Rational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// Names of every variable that occurs.
    pub fn variables(&self) -> Vec<String> {
        let mut v: Vec<String> =
            self.terms.keys().flat_map(|m| m.iter().map(|(n, _)| n.clone())).collect();
        v.sort();
        v.dedup();
        v
    }

    fn insert(&mut self, m: Monomial, c: Rational) {
        let e = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.insert(mono_mul(m1, m2), c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(Rational::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Replaces named variables by rational values.
    pub fn bind(&self, values: &BTreeMap<String, Rational>) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for (name, e) in m {
                match values.get(name) {
                    Some(v) => {
                        for _ in 0..*e {
                            coeff *= v.clone();
                        }
                    }
                    None => rest.push((name.clone(), *e)),
                }
            }
            out.insert(rest, coeff);
        }
        out
    }

    /// Converts to a polynomial in `(s, th)`; fails on any other variable.
    pub fn to_poly2(&self) -> Result<Poly2<Rational>, PolyError> {
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let (mut i, mut j) = (0usize, 0usize);
            for (name, e) in m {
                match name.as_str() {
                    "s" => i = *e as usize,
                    "th" => j = *e as usize,
                    other => return Err(PolyError::UnboundSymbol(other.to_string())),
                }
            }
            terms.push((i, j, c.clone()));
        }
        Ok(Poly2::from_terms(&terms))
    }

    pub fn to_poly1(&self) -> Result<Poly1<Rational>, PolyError> {
        let p = self.to_poly2()?;
        p.as_poly_in_s()
            .ok_or_else(|| PolyError::MalformedBound("expression must not depend on th".into()))
    }

    pub fn from_poly2(p: &Poly2<Rational>) -> Self {
        let mut out = Self::zero();
        for (i, j, c) in p.terms() {
            let mut m = Vec::new();
            if i > 0 {
                m.push(("s".to_string(), i as u32));
            }
            if j > 0 {
                m.push(("th".to_string(), j as u32));
            }
            out.insert(m, c.clone());
        }
        out
    }

    pub fn from_poly1(p: &Poly1<Rational>) -> Self {
        Self::from_poly2(&Poly2::from_s(p))
    }
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut map: BTreeMap<String, u32> = BTreeMap::new();
    for (n, e) in a.iter().chain(b.iter()) {
        *map.entry(n.clone()).or_insert(0) += e;
    }
    map.into_iter().collect()
}

fn mono_degree(m: &Monomial) -> u32 {
    m.iter().map(|(_, e)| e).sum()
}

impl std::fmt::Display for MPoly {
    /// Highest total degree first; ties broken by the monomial order.
    /// The output parses back to an identical value.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(m1, _), (m2, _)| mono_degree(m2).cmp(&mono_degree(m1)).then(m1.cmp(m2)));
        for (k, (m, c)) in terms.iter().enumerate() {
            let neg = c.numer() < &BigInt::zero();
            let mag = if neg { -(*c).clone() } else { (*c).clone() };
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mut factors = Vec::new();
            if !mag.is_one() || m.is_empty() {
                factors.push(format_rational(&mag));
            }
            for (n, e) in m.iter() {
                if *e == 1 {
                    factors.push(n.clone());
                } else {
                    factors.push(format!("{n}^{e}"));
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Parses one expression.
pub fn parse_expr(src: &str) -> Result<MPoly, PolyError> {
    let mut p = Parser { chars: src.chars().collect(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.err(format!("unexpected '{}'", p.chars[p.pos])));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn err(&self, msg: impl Into<String>) -> PolyError {
        PolyError::Parse { column: self.pos + 1, message: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<MPoly, PolyError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some('-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MPoly, PolyError> {
        let mut acc = self.unary()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<MPoly, PolyError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<MPoly, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected a nonnegative integer exponent"));
            }
            let s: String = self.chars[start..self.pos].iter().collect();
            let k: u32 = s.parse().map_err(|_| self.err("exponent too large"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MPoly, PolyError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let mut v = self.number()?;
                if self.peek() == Some('/') {
                    self.pos += 1;
                    self.skip_ws();
                    let d = self.number()?;
                    if d.is_zero() {
                        return Err(self.err("division by zero"));
                    }
                    v /= d;
                }
                Ok(MPoly::constant(v))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                Ok(MPoly::var(&name))
            }
            Some(c) => Err(self.err(format!("unexpected '{c}'"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }

    /// Decimal literal with optional exponent, converted exactly.
    fn number(&mut self) -> Result<Rational, PolyError> {
        let start = self.pos;
        let mut digits = String::new();
        let mut frac_len = 0i64;
        let mut seen_dot = false;
        while let Some(&c) = self.chars.get(self.pos) {
            if c.is_ascii_digit() {
                digits.push(c);
                if seen_dot {
                    frac_len += 1;
                }
            } else if c == '.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits.is_empty() {
            self.pos = start;
            return Err(self.err("malformed number"));
        }
        let mut exp = 0i64;
        if matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1;
            if let Some(&c) = self.chars.get(self.pos) {
                if c == '-' || c == '+' {
                    sign = if c == '-' { -1 } else { 1 };
                    self.pos += 1;
                }
            }
            let es = self.pos;
            while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if es == self.pos {
                self.pos = save;
            } else {
                let e: String = self.chars[es..self.pos].iter().collect();
                exp = sign * e.parse::<i64>().map_err(|_| self.err("exponent too large"))?;
            }
        }
        let mantissa: BigInt = digits.parse().map_err(|_| self.err("malformed number"))?;
        let scale = exp - frac_len;
        let ten = BigInt::from(10);
        Ok(if scale >= 0 {
            Rational::from_integer(mantissa * ten.pow(scale as u32))
        } else {
            Rational::new(mantissa, ten.pow((-scale) as u32))
        })
    }
}

/// Parses a bracketed row-major matrix literal such as
/// `[["s*(1-s)", "0"], [lam, -1]]`. Entries may be quoted or bare.
pub fn parse_matrix(src: &str) -> Result<Vec<Vec<MPoly>>, PolyError> {
    let chars: Vec<char> = src.chars().collect();
    let mut pos = 0usize;
    let err = |pos: usize, m: &str| PolyError::Parse { column: pos + 1, message: m.to_string() };
    let skip = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    let expect = |pos: &mut usize, c: char| -> Result<(), PolyError> {
        skip(pos);
        if chars.get(*pos) == Some(&c) {
            *pos += 1;
            Ok(())
        } else {
            Err(err(*pos, &format!("expected '{c}'")))
        }
    };
    expect(&mut pos, '[')?;
    let mut rows = Vec::new();
    loop {
        skip(&mut pos);
        if chars.get(pos) == Some(&']') && rows.is_empty() {
            pos += 1;
            break;
        }
        expect(&mut pos, '[')?;
        let mut row = Vec::new();
        loop {
            skip(&mut pos);
            let start;
            let text: String;
            if chars.get(pos) == Some(&'"') {
                pos += 1;
                start = pos;
                while pos < chars.len() && chars[pos] != '"' {
                    pos += 1;
                }
                if pos >= chars.len() {
                    return Err(err(start, "unterminated string"));
                }
                text = chars[start..pos].iter().collect();
                pos += 1;
            } else {
                start = pos;
                let mut depth = 0i32;
                while pos < chars.len() {
                    match chars[pos] {
                        '(' => depth += 1,
                        ')' => depth -= 1,
                        ',' | ']' if depth == 0 => break,
                        '[' => return Err(err(pos, "unexpected '['")),
                        _ => {}
                    }
                    pos += 1;
                }
                text = chars[start..pos].iter().collect();
            }
            let e = parse_expr(&text).map_err(|e| match e {
                PolyError::Parse { column, message } => {
                    PolyError::Parse { column: start + column, message }
                }
                other => other,
            })?;
            row.push(e);
            skip(&mut pos);
            match chars.get(pos) {
                Some(',') => pos += 1,
                Some(']') => {
                    pos += 1;
                    break;
                }
                _ => return Err(err(pos, "expected ',' or ']'")),
            }
        }
        rows.push(row);
        skip(&mut pos);
        match chars.get(pos) {
            Some(',') => pos += 1,
            Some(']') => {
                pos += 1;
                break;
            }
            _ => return Err(err(pos, "expected ',' or ']'")),
        }
    }
    skip(&mut pos);
    if pos < chars.len() {
        return Err(err(pos, "trailing characters after matrix"));
    }
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.len() != first.len()) {
            return Err(err(0, "rows have different lengths"));
        }
    }
    Ok(rows)
}

/// Formats a matrix literal with quoted entries.
pub fn format_matrix(rows: &[Vec<MPoly>]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|r| {
            let items: Vec<String> = r.iter().map(|e| format!("\"{e}\"")).collect();
            format!("[{}]", items.join(", "))
        })
        .collect();
    format!("[{}]", body.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn literals() {
        assert_eq!(parse_expr("-1/2").unwrap(), MPoly::constant(rat(-1, 2)));
        assert_eq!(parse_expr("0.25").unwrap(), MPoly::constant(rat(1, 4)));
        assert_eq!(parse_expr("2.5e-1").unwrap(), MPoly::constant(rat(1, 4)));
        assert_eq!(parse_expr("3").unwrap(), MPoly::constant(int(3)));
    }

    #[test]
    fn expands_products() {
        let p = parse_expr("s*(1-s)").unwrap().to_poly1().unwrap();
        assert_eq!(p, Poly1::from_coeffs(vec![int(0), int(1), int(-1)]));
        let q = parse_expr(" (s - th)^2 ").unwrap().to_poly2().unwrap();
        assert_eq!(q.coeff(1, 1), int(-2));
    }

    #[test]
    fn parameters_bind() {
        let p = parse_expr("lam*s + c^2").unwrap();
        assert_eq!(p.variables(), vec!["c", "lam", "s"]);
        let vals = BTreeMap::from([("lam".to_string(), int(3)), ("c".to_string(), rat(1, 2))]);
        let b = p.bind(&vals).to_poly1().unwrap();
        assert_eq!(b, Poly1::from_coeffs(vec![rat(1, 4), int(3)]));
    }

    #[test]
    fn errors_carry_column() {
        match parse_expr("s + * 2") {
            Err(PolyError::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("s^-1").is_err());
        assert!(parse_expr("(s").is_err());
        assert!(parse_expr("1/0").is_err());
    }

    #[test]
    fn matrix_literals() {
        let m = parse_matrix(r#"[["s*(1-s)", "0"], [lam, -1]]"#).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1][1], MPoly::constant(int(-1)));
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
        let f = parse_matrix("[[(s+1)*2, th]]").unwrap();
        assert_eq!(f[0][0].to_poly1().unwrap(), Poly1::from_coeffs(vec![int(2), int(2)]));
        assert!(parse_matrix("[[1, 2], [3]]").is_err());
        assert!(parse_matrix("[[1, 2]").is_err());
        assert!(matches!(parse_matrix("[[1, s +]]"), Err(PolyError::Parse { column: 9, .. })));
    }

    #[test]
    fn display_round_trips() {
        for src in ["-1/2*s^2*th + 3 - lam*s", "0", "s*(1-s)*(th+2)^3", "-7/3"] {
            let p = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&p.to_string()).unwrap(), p, "{src} -> {p}");
        }
    }
}
