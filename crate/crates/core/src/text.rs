//! Text forms shared by configuration files and the command line: complex
//! literals like `3+4j`, two-column real/imag files, and CSV numbers.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::ComplexVector;

/// Parse `a`, `bj`, `a+bj` or `a-bj` (also accepts `i` as the imaginary unit
/// and a bare `j` for `1j`).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse { offset: 0, message: format!("invalid complex literal '{s}'") };
    if t.is_empty() {
        return Err(bad());
    }
    let imag_unit = t.ends_with('j') || t.ends_with('i');
    if !imag_unit {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    }
    let body = &t[..t.len() - 1];
    // split at the last sign that is not part of an exponent or the leading sign
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let parse_imag = |s: &str| -> Result<f64> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => {
            let re = body[..i].parse::<f64>().map_err(|_| bad())?;
            let im = parse_imag(&body[i..])?;
            Ok(Complex64::new(re, im))
        }
        None => Ok(Complex64::new(0.0, parse_imag(body)?)),
    }
}

/// Inverse of [`parse_complex`]; round-trips exactly.
pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}j", z.re, -z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}

/// Read a vector from a two-column `re,im` text file (comma or whitespace
/// separated; lines starting with `#` and a non-numeric header are skipped).
pub fn parse_vector_columns(text: &str) -> Result<ComplexVector> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (lineno, line) in text.lines().enumerate() {
        let start = offset;
        offset += line.len() + 1;
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = l.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 2 => out.push(Complex64::new(v[0], v[1])),
            Ok(v) if v.len() == 1 => out.push(Complex64::new(v[0], 0.0)),
            Err(_) if lineno == 0 && out.is_empty() => continue,
            _ => {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("line {}: expected two numeric columns re,im", lineno + 1),
                })
            }
        }
    }
    ComplexVector::new(out)
}

pub fn format_vector_columns(v: &ComplexVector) -> String {
    let mut s = String::from("re,im\n");
    for z in v.iter() {
        let _ = writeln!(s, "{},{}", z.re, z.im);
    }
    s
}

/// CSV cell for an optional number: empty when absent.
pub(crate) fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("3+4j").unwrap(), c(3.0, 4.0));
        assert_eq!(parse_complex(" -1.5 - 2j ").unwrap(), c(-1.5, -2.0));
        assert_eq!(parse_complex("2j").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("-j").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("7").unwrap(), c(7.0, 0.0));
        assert_eq!(parse_complex("1e-3+2.5e+2i").unwrap(), c(1e-3, 250.0));
        assert!(parse_complex("3+4k").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn format_round_trip() {
        for z in [Complex64::new(3.0, 4.0), Complex64::new(-0.1, -1e-300), Complex64::new(0.0, -0.0)] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }

    #[test]
    fn columns() {
        let v = parse_vector_columns("re,im\n1,0\n0.5 -2\n# note\n3\n").unwrap();
        assert_eq!(v.dim(), 3);
        assert_eq!(v[1], Complex64::new(0.5, -2.0));
        let back = parse_vector_columns(&format_vector_columns(&v)).unwrap();
        assert_eq!(back, v);
        let err = parse_vector_columns("1,2\n1,2,3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { offset: 4, .. }), "{err:?}");
    }
}
