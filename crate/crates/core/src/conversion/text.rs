//! Text form of a PIE: a `states` line followed by `[T]` and `[A]` operator
//! blocks in the operator text format.

use std::fmt::Write as _;

use crate::pde_model::StatePartition;
use crate::pi_ops::{parse_operator_at, write_operator_block, PiError};

use super::{ConversionError, PieSystem};

pub fn format_pie(pie: &PieSystem) -> String {
    let p = pie.partition;
    let mut out = String::new();
    let _ = writeln!(out, "states = {} {} {}", p.n0, p.n1, p.n2);
    let _ = writeln!(out, "[T]");
    write_operator_block(&mut out, &pie.t);
    let _ = writeln!(out, "[A]");
    write_operator_block(&mut out, &pie.a);
    out
}

pub fn parse_pie(text: &str) -> Result<PieSystem, ConversionError> {
    let fmt = |line: usize, message: &str| PiError::Format { line, message: message.into() };
    let lines: Vec<&str> = text.lines().collect();
    let mut partition = None;
    let mut sections: Vec<(String, usize, Vec<&str>)> = Vec::new();
    for (k, raw) in lines.iter().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line == "[T]" || line == "[A]" {
            sections.push((line.to_string(), k + 2, Vec::new()));
        } else if let Some((_, _, body)) = sections.last_mut() {
            body.push(raw);
        } else if let Some(rest) = line.strip_prefix("states") {
            let nums: Vec<usize> = rest
                .trim_start_matches([' ', '='])
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| fmt(k + 1, "states must be three integers"))?;
            if nums.len() != 3 {
                return Err(fmt(k + 1, "states must be three integers").into());
            }
            partition = Some(StatePartition::new(nums[0], nums[1], nums[2])?);
        } else if !line.is_empty() {
            return Err(fmt(k + 1, "expected 'states = n0 n1 n2'").into());
        }
    }
    let partition = partition.ok_or_else(|| fmt(1, "missing states line"))?;
    let find = |name: &str| -> Result<_, ConversionError> {
        let (_, start, body) = sections
            .iter()
            .find(|(n, _, _)| n == name)
            .ok_or_else(|| fmt(lines.len(), &format!("missing {name} block")))?;
        Ok(parse_operator_at(&body.join("\n"), *start)?)
    };
    PieSystem::new(partition, find("[T]")?, find("[A]")?)
}
