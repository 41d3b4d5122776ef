//! Two-column CSV output and ingestion.
//!
//! Output: a header line, comma delimiter, LF line endings, numbers with 12
//! significant digits in `%.12g` style. Input: the same layout, with blank
//! lines and `#` comments skipped and an optional header.

use std::fmt::Write;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsvError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("no data rows")]
    Empty,
}

/// `%.12g`.
pub fn format_g12(x: f64) -> String {
    const SIG: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Header line plus one `a,b` row per pair.
pub fn write_columns(header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for (a, b) in rows {
        let _ = writeln!(out, "{},{}", format_g12(a), format_g12(b));
    }
    out
}

/// Parses two numeric columns. A first non-comment line that does not parse
/// as numbers is taken as the header.
pub fn read_columns(text: &str) -> Result<Vec<(f64, f64)>, CsvError> {
    let mut rows = Vec::new();
    let mut seen_first = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        let first = !seen_first;
        seen_first = true;
        match parsed {
            Some(v) if v.len() == 2 => {
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(CsvError::Malformed { line: line_no, reason: "non-finite value".into() });
                }
                rows.push((v[0], v[1]));
            }
            Some(v) => {
                return Err(CsvError::Malformed { line: line_no, reason: format!("expected 2 columns, found {}", v.len()) })
            }
            None if first => {}
            None => return Err(CsvError::Malformed { line: line_no, reason: format!("cannot parse '{line}'") }),
        }
    }
    if rows.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g12_matches_c() {
        let cases = [
            (0.5, "0.5"),
            (-0.5, "-0.5"),
            (100.0, "100"),
            (0.25, "0.25"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (1e-5, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (0.0001, "0.0001"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (0.0, "0"),
            (-0.0, "-0"),
            (99999999999.99999, "100000000000"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g12(x), want, "{x:e}");
        }
    }

    #[test]
    fn header_comments_and_blank_lines() {
        let text = "# experiment\nt_us,p_excited\n\n0,0.99\n# mid\n1.5, 0.4\n";
        assert_eq!(read_columns(text).unwrap(), vec![(0.0, 0.99), (1.5, 0.4)]);
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "t_us,w\n0,1\nabc,2\n";
        assert_eq!(
            read_columns(text),
            Err(CsvError::Malformed { line: 3, reason: "cannot parse 'abc,2'".into() })
        );
        assert!(matches!(read_columns("t,w\n1,2,3\n"), Err(CsvError::Malformed { line: 2, .. })));
        assert_eq!(read_columns("t_us,w\n"), Err(CsvError::Empty));
    }

    proptest! {
        #[test]
        fn round_trip_at_printed_precision(a in -1e6f64..1e6, b in -1.0f64..1.0) {
            let text = write_columns("t_us,w", [(a, b)]);
            let back = read_columns(&text).unwrap();
            let (a2, b2) = back[0];
            prop_assert_eq!(format_g12(a2), format_g12(a));
            prop_assert_eq!(format_g12(b2), format_g12(b));
            prop_assert!((a2 - a).abs() <= 1e-11 * a.abs().max(1e-300));
        }
    }
}
