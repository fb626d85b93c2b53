//! Standard-form semidefinite feasibility problems and the SDPA sparse
//! (`.dat-s`) file format.
//!
//! A problem asks for symmetric `X_1, ..., X_p` with every `X_b` positive
//! semidefinite and `sum_b <F_kb, X_b> = c_k` for each constraint `k`.
//! Only the upper triangle (`i <= j`) of each symmetric `F_kb` is stored.

use std::fmt::Write as _;

use super::LpiError;

/// One upper-triangle entry of a constraint matrix, indices 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpEntry {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpConstraint {
    pub entries: Vec<SdpEntry>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub constraints: Vec<SdpConstraint>,
}

impl SdpConstraint {
    /// Sorts entries, merges duplicates, and drops zeros.
    pub fn new(mut entries: Vec<SdpEntry>, rhs: f64) -> Self {
        entries.sort_by_key(|e| (e.block, e.i, e.j));
        let mut out: Vec<SdpEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            match out.last_mut() {
                Some(l) if (l.block, l.i, l.j) == (e.block, e.i, e.j) => l.value += e.value,
                _ => out.push(e),
            }
        }
        out.retain(|e| e.value != 0.0);
        Self { entries: out, rhs }
    }

    /// `sum_b <F_b, X_b>` for symmetric block values.
    pub fn evaluate(&self, x: &[nalgebra::DMatrix<f64>]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let m = &x[e.block];
                if e.i == e.j {
                    e.value * m[(e.i, e.i)]
                } else {
                    e.value * (m[(e.i, e.j)] + m[(e.j, e.i)])
                }
            })
            .sum()
    }
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, constraints: Vec<SdpConstraint>) -> Result<Self, LpiError> {
        let p = Self { blocks, constraints };
        p.validate()?;
        Ok(p)
    }

    /// Checks that every entry addresses a declared upper-triangle position.
    pub fn validate(&self) -> Result<(), LpiError> {
        if self.blocks.iter().any(|&n| n == 0) {
            return Err(LpiError::Sdp("empty block".into()));
        }
        for (k, c) in self.constraints.iter().enumerate() {
            for e in &c.entries {
                let ok = e.block < self.blocks.len() && e.i <= e.j && e.j < self.blocks[e.block];
                if !ok || !e.value.is_finite() {
                    return Err(LpiError::Sdp(format!(
                        "constraint {}: bad entry ({}, {}, {})",
                        k + 1,
                        e.block + 1,
                        e.i + 1,
                        e.j + 1
                    )));
                }
            }
            if !c.rhs.is_finite() {
                return Err(LpiError::Sdp(format!("constraint {}: non-finite right side", k + 1)));
            }
        }
        Ok(())
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Largest `|sum <F, X> - c|` over the constraints.
    pub fn max_violation(&self, x: &[nalgebra::DMatrix<f64>]) -> f64 {
        self.constraints.iter().map(|c| (c.evaluate(x) - c.rhs).abs()).fold(0.0, f64::max)
    }

    /// SDPA sparse text. The constraint system is the dual form of the
    /// format with a zero objective matrix `F_0`.
    pub fn to_sdpa(&self) -> String {
        let mut out = String::new();
        out.push_str("* semidefinite feasibility problem\n");
        let _ = writeln!(out, "{}", self.constraints.len());
        let _ = writeln!(out, "{}", self.blocks.len());
        let sizes: Vec<String> = self.blocks.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        let rhs: Vec<String> = self.constraints.iter().map(|c| format!("{}", c.rhs)).collect();
        let _ = writeln!(out, "{}", rhs.join(" "));
        for (k, c) in self.constraints.iter().enumerate() {
            for e in &c.entries {
                let _ = writeln!(out, "{} {} {} {} {}", k + 1, e.block + 1, e.i + 1, e.j + 1, e.value);
            }
        }
        out
    }

    /// Parses SDPA sparse text written by [`SdpProblem::to_sdpa`] or by other
    /// tools. Entries of the objective matrix must be zero.
    pub fn from_sdpa(text: &str) -> Result<Self, LpiError> {
        let err = |line: usize, msg: &str| LpiError::Sdpa { line, message: msg.to_string() };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));
        let mut numbers = |what: &str| -> Result<(usize, Vec<String>), LpiError> {
            let (ln, l) = lines.next().ok_or_else(|| err(0, &format!("missing {what}")))?;
            let toks = l
                .split(|c: char| c.is_whitespace() || ",(){}".contains(c))
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            Ok((ln, toks))
        };
        let int = |ln: usize, t: &str| t.parse::<i64>().map_err(|_| err(ln, &format!("expected integer, found '{t}'")));
        let (ln, t) = numbers("constraint count")?;
        let m = int(ln, t.first().ok_or_else(|| err(ln, "empty line"))?)? as usize;
        let (ln, t) = numbers("block count")?;
        let nb = int(ln, t.first().ok_or_else(|| err(ln, "empty line"))?)? as usize;
        let (ln, t) = numbers("block structure")?;
        if t.len() < nb {
            return Err(err(ln, "block structure too short"));
        }
        let mut blocks = Vec::with_capacity(nb);
        for tok in &t[..nb] {
            let v = int(ln, tok)?;
            if v < 0 {
                return Err(err(ln, "diagonal (LP) blocks are not supported"));
            }
            blocks.push(v as usize);
        }
        let mut rhs = Vec::with_capacity(m);
        while rhs.len() < m {
            let (ln, t) = numbers("right-hand side")?;
            for tok in t {
                rhs.push(tok.parse::<f64>().map_err(|_| err(ln, &format!("bad number '{tok}'")))?);
            }
        }
        if rhs.len() != m {
            return Err(err(0, "right-hand side length differs from constraint count"));
        }
        let mut entries: Vec<Vec<SdpEntry>> = vec![Vec::new(); m];
        for (ln, l) in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 5 {
                return Err(err(ln, "expected 'constraint block i j value'"));
            }
            let k = int(ln, t[0])? as usize;
            let b = int(ln, t[1])? as usize;
            let i = int(ln, t[2])? as usize;
            let j = int(ln, t[3])? as usize;
            let v = t[4].parse::<f64>().map_err(|_| err(ln, &format!("bad number '{}'", t[4])))?;
            if k > m || b == 0 || b > nb || i == 0 || j == 0 {
                return Err(err(ln, "index out of range"));
            }
            if k == 0 {
                if v != 0.0 {
                    return Err(err(ln, "nonzero objective entries are not supported"));
                }
                continue;
            }
            let (i, j) = (i.min(j) - 1, i.max(j) - 1);
            entries[k - 1].push(SdpEntry { block: b - 1, i, j, value: v });
        }
        let constraints = entries
            .into_iter()
            .zip(rhs)
            .map(|(e, c)| SdpConstraint::new(e, c))
            .collect();
        Self::new(blocks, constraints)
    }
}
