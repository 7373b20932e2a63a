use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::experiments::{AxisValues, ExperimentResult};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `printf("%.{digits}g")` without locale: shortest of fixed and scientific
/// notation, trailing zeros removed, exponent with at least two digits.
pub fn format_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Header with every axis, value column and `diverged_fraction`, then one
/// row per grid point.
pub fn to_csv(result: &ExperimentResult) -> Result<String> {
    result.validate()?;
    let mut out = String::new();
    let header: Vec<&str> = result
        .axes
        .iter()
        .map(|a| a.name.as_str())
        .chain(result.values.iter().map(|c| c.name.as_str()))
        .chain(std::iter::once("diverged_fraction"))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in 0..result.rows() {
        let mut cells: Vec<String> = Vec::with_capacity(header.len());
        for a in &result.axes {
            cells.push(match &a.values {
                AxisValues::Numeric(v) => format_g(v[row], 12),
                AxisValues::Labels(v) => v[row].clone(),
            });
        }
        for c in &result.values {
            cells.push(format_g(c.values[row], 12));
        }
        cells.push(format_g(result.diverged_fraction[row], 12));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    Ok(out)
}

/// Pretty-printed JSON object `{spec, axes, values, diverged_fraction,
/// seeds}`, newline-terminated.
pub fn to_json(result: &ExperimentResult) -> Result<String> {
    result.validate()?;
    let mut s = serde_json::to_string_pretty(result)?;
    s.push('\n');
    Ok(s)
}

pub fn render(result: &ExperimentResult, format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(result),
        Format::Json => to_json(result),
    }
}

/// Validates and renders `result` before touching `path`; `None` writes to
/// standard output.
pub fn emit(result: &ExperimentResult, format: Format, path: Option<&Path>) -> Result<()> {
    let text = render(result, format)?;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
