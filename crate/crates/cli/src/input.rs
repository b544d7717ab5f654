//! Text input formats.
//!
//! Covariance: four rows of four whitespace-separated decimals in
//! `(q1, p1, q2, p2)` order. Coefficients: six `label value` lines
//! (`label = value` also accepted). `#` starts a comment in both.

use gaussphase::num_complex::Complex64;
use gaussphase::nalgebra::Matrix4;
use gaussphase::ComplexCoeffs;

use crate::CliError;

pub const COEFF_LABELS: [&str; 6] = ["alpha_re", "alpha_im", "beta_re", "beta_im", "gamma_re", "gamma_im"];

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((i + 1, body))
    })
}

fn parse_number(tok: &str, line: usize, field: usize) -> Result<f64, CliError> {
    let x: f64 = tok.parse().map_err(|_| CliError::Parse {
        line,
        message: format!("field {field}: `{tok}` is not a decimal number"),
    })?;
    if !x.is_finite() {
        return Err(CliError::Parse { line, message: format!("field {field}: `{tok}` is not finite") });
    }
    Ok(x)
}

pub fn parse_covariance(text: &str) -> Result<Matrix4<f64>, CliError> {
    let mut m = Matrix4::zeros();
    let mut row = 0;
    let mut last_line = 0;
    for (line, body) in content_lines(text) {
        last_line = line;
        if row == 4 {
            return Err(CliError::Parse { line, message: "more than 4 rows".into() });
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(CliError::Parse { line, message: format!("expected 4 columns, found {}", toks.len()) });
        }
        for (j, tok) in toks.iter().enumerate() {
            m[(row, j)] = parse_number(tok, line, j + 1)?;
        }
        row += 1;
    }
    if row != 4 {
        return Err(CliError::Parse { line: last_line, message: format!("expected 4 rows, found {row}") });
    }
    Ok(m)
}

pub fn parse_coeffs(text: &str) -> Result<ComplexCoeffs, CliError> {
    let mut vals: [Option<f64>; 6] = [None; 6];
    let mut last_line = 0;
    for (line, body) in content_lines(text) {
        last_line = line;
        let body = body.replacen('=', " ", 1);
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(CliError::Parse { line, message: "expected `label value`".into() });
        }
        let idx = COEFF_LABELS.iter().position(|l| *l == toks[0]).ok_or_else(|| CliError::Parse {
            line,
            message: format!("unknown label `{}` (expected one of {})", toks[0], COEFF_LABELS.join(", ")),
        })?;
        if vals[idx].is_some() {
            return Err(CliError::Parse { line, message: format!("duplicate label `{}`", toks[0]) });
        }
        vals[idx] = Some(parse_number(toks[1], line, 2)?);
    }
    if let Some(i) = vals.iter().position(Option::is_none) {
        return Err(CliError::Parse { line: last_line, message: format!("missing `{}`", COEFF_LABELS[i]) });
    }
    let v: Vec<f64> = vals.iter().map(|x| x.unwrap_or_default()).collect();
    Ok(ComplexCoeffs::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), Complex64::new(v[4], v[5]))?)
}

/// Inverse of [`parse_covariance`], with shortest round-trip decimals.
pub fn format_covariance(rows: &[[f64; 4]; 4]) -> String {
    let mut out = String::from("# q1 p1 q2 p2\n");
    for row in rows {
        let cols: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&cols.join(" "));
        out.push('\n');
    }
    out
}
