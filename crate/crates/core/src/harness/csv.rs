use std::fmt::Write as _;
use std::path::Path;

use super::SweepRecord;
use crate::error::Result;
use crate::lorawan::STATE_DIM;
use crate::point::format_real;

/// `alpha,m,p,C,lambda,run_seed,converged,iterations,final_step,residual,wall_time,x0_1..x0_12,sol_1..sol_12`
pub fn csv_header() -> String {
    let mut cols: Vec<String> = [
        "alpha",
        "m",
        "p",
        "C",
        "lambda",
        "run_seed",
        "converged",
        "iterations",
        "final_step",
        "residual",
        "wall_time",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((1..=STATE_DIM).map(|i| format!("x0_{i}")));
    cols.extend((1..=STATE_DIM).map(|i| format!("sol_{i}")));
    cols.join(",")
}

fn push_point(line: &mut String, values: Option<&[f64]>) {
    for i in 0..STATE_DIM {
        line.push(',');
        match values.and_then(|v| v.get(i)) {
            Some(v) => line.push_str(&format_real(*v)),
            None => line.push_str("NaN"),
        }
    }
}

/// Render records as CSV. Reals carry 17 significant digits.
pub fn write_csv_string(records: &[SweepRecord]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in records {
        let mut line = String::new();
        let _ = write!(
            line,
            "{},{},{},{},{},{},{},{},{},{},{}",
            format_real(r.alpha),
            r.m,
            format_real(r.p),
            format_real(r.c),
            format_real(r.lambda),
            r.run_seed,
            r.converged,
            r.iterations,
            format_real(r.final_step),
            format_real(r.residual),
            format_real(r.wall_time),
        );
        push_point(&mut line, Some(r.x0.values()));
        push_point(&mut line, r.solution.as_ref().map(|s| s.values()));
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn write_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_csv_string(records))?;
    Ok(())
}
