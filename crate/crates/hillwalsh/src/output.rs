//! File emission: grid CSV, PGM chart image, transition-curve CSV,
//! interlacing JSON, and oracle fixtures. All floating output is printed
//! with 12 significant digits, locale independent, so identical runs produce
//! byte-identical files.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discriminant::Method;
use crate::error::Result;
use crate::excitation::HillProblem;
use crate::stability::{InterlacingReport, StabilityGrid, TransitionCurves};

/// Formats with `sig` significant digits like printf %g: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("numeric exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    // fixed notation with sig - 1 - exp decimals, re-rendered from the value
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    let fixed = format!("{x:.decimals$}");
    trim_zeros(&fixed).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to `sig` significant digits; used before JSON serialization so the
/// number stream stays stable across runs.
pub fn round_sig(x: f64, sig: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", sig - 1, x).parse().unwrap_or(x)
}

/// Grid CSV: header `alpha,beta,delta,class`, one row per cell, row-major in
/// beta then alpha.
pub fn write_grid_csv<W: Write>(grid: &StabilityGrid, out: &mut W) -> Result<()> {
    writeln!(out, "alpha,beta,delta,class")?;
    for i in 0..grid.beta_axis.count {
        let beta = grid.beta_axis.value(i);
        for j in 0..grid.alpha_axis.count {
            let alpha = grid.alpha_axis.value(j);
            writeln!(
                out,
                "{},{},{},{}",
                fmt_sig(alpha, 12),
                fmt_sig(beta, 12),
                fmt_sig(grid.delta_at(i, j), 12),
                grid.class_at(i, j).label()
            )?;
        }
    }
    Ok(())
}

/// PGM (P2 text variant): one pixel per cell, width = alpha count, height =
/// beta count, beta increasing downward.
pub fn write_grid_pgm<W: Write>(grid: &StabilityGrid, out: &mut W) -> Result<()> {
    writeln!(out, "P2")?;
    writeln!(out, "{} {}", grid.alpha_axis.count, grid.beta_axis.count)?;
    writeln!(out, "255")?;
    for i in 0..grid.beta_axis.count {
        let row: Vec<String> = (0..grid.alpha_axis.count)
            .map(|j| grid.class_at(i, j).gray().to_string())
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Curves CSV: `curve_id,level,alpha,beta` with level +2 or -2; curve ids
/// number the +2 polylines first, then the -2 polylines.
pub fn write_curves_csv<W: Write>(curves: &TransitionCurves, out: &mut W) -> Result<()> {
    writeln!(out, "curve_id,level,alpha,beta")?;
    let mut id = 0usize;
    for poly in &curves.plus_level {
        for &(a, b) in poly {
            writeln!(out, "{id},+2,{},{}", fmt_sig(a, 12), fmt_sig(b, 12))?;
        }
        id += 1;
    }
    for poly in &curves.minus_level {
        for &(a, b) in poly {
            writeln!(out, "{id},-2,{},{}", fmt_sig(a, 12), fmt_sig(b, 12))?;
        }
        id += 1;
    }
    Ok(())
}

/// Interlacing report as JSON with rounded floats.
pub fn write_interlacing_json<W: Write>(report: &InterlacingReport, out: &mut W) -> Result<()> {
    let rounded = InterlacingReport {
        beta: round_sig(report.beta, 12),
        lambdas: report.lambdas.iter().map(|&x| round_sig(x, 12)).collect(),
        lambda_primes: report
            .lambda_primes
            .iter()
            .map(|&x| round_sig(x, 12))
            .collect(),
        ordering_ok: report.ordering_ok,
        intervals: report
            .intervals
            .iter()
            .map(|iv| crate::stability::IntervalLabel {
                lo: round_sig(iv.lo, 12),
                hi: round_sig(iv.hi, 12),
                label: iv.label.clone(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut *out, &rounded)
        .map_err(|e| crate::error::HillError::Numeric(format!("json serialization: {e}")))?;
    writeln!(out)?;
    Ok(())
}

/// Oracle fixture: a problem, the method that produced the value, its
/// order or step count, and the discriminant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub problem: HillProblem,
    pub method: Method,
    pub order: usize,
    pub delta: f64,
}

pub fn write_fixtures<W: Write>(records: &[FixtureRecord], out: &mut W) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, records)
        .map_err(|e| crate::error::HillError::Numeric(format!("json serialization: {e}")))?;
    writeln!(out)?;
    Ok(())
}

pub fn read_fixtures(text: &str) -> Result<Vec<FixtureRecord>> {
    serde_json::from_str(text)
        .map_err(|e| crate::error::HillError::Usage(format!("bad fixture file: {e}")))
}
