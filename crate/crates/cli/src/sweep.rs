//! Bisection on a yes/no status over a parameter interval.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStatus {
    ProvenStable,
    NotProven,
}

impl fmt::Display for SweepStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepStatus::ProvenStable => "proven-stable",
            SweepStatus::NotProven => "not-proven",
        })
    }
}

/// One evaluation of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub value: f64,
    pub status: SweepStatus,
    pub solve_seconds: f64,
}

/// A finished sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    /// Evaluations in the order they were made.
    pub log: Vec<SweepEntry>,
    /// The last value proven stable.
    pub boundary: Option<f64>,
    /// Midpoint of the final bracket of the same bisection run on the sign
    /// of the oracle spectral abscissa.
    pub oracle_crossing: Option<f64>,
}

impl SweepResult {
    /// The last proven-stable value of a bisection log.
    pub fn boundary_of(log: &[SweepEntry]) -> Option<f64> {
        log.iter().rev().find(|e| e.status == SweepStatus::ProvenStable).map(|e| e.value)
    }

    /// The log as CSV with columns `value,status,solve_seconds`. Solve times
    /// are left empty unless `timings` is set, so that repeated runs give
    /// identical output.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut s = String::from("value,status,solve_seconds\n");
        for e in &self.log {
            let t = if timings { format!("{:.3}", e.solve_seconds) } else { String::new() };
            s += &format!("{},{},{}\n", e.value, e.status, t);
        }
        s
    }
}

/// Bisects `[lo, hi]` until the bracket is at most `tol` wide, keeping the
/// endpoints at different statuses. Returns `None` when both ends share a
/// status.
pub fn bisect<E>(
    lo: f64,
    hi: f64,
    tol: f64,
    mut evaluate: impl FnMut(f64) -> Result<(SweepStatus, f64), E>,
) -> Result<Option<Vec<SweepEntry>>, E> {
    let mut log = Vec::new();
    let mut eval = |value: f64, log: &mut Vec<SweepEntry>| -> Result<SweepStatus, E> {
        let (status, solve_seconds) = evaluate(value)?;
        log.push(SweepEntry { value, status, solve_seconds });
        Ok(status)
    };
    let lo_status = eval(lo, &mut log)?;
    let hi_status = eval(hi, &mut log)?;
    if lo_status == hi_status {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if eval(mid, &mut log)? == lo_status {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Some(log))
}
