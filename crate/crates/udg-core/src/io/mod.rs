//! Text formats: point files, op sequences, and diagram serialization.
//!
//! All formats are line-oriented; `#` starts a comment, blank lines are
//! ignored, and floats are printed with Rust's shortest round-trip
//! formatting so `parse(emit(x)) == x` exactly.

pub mod diagram;

use crate::error::ParseError;
use crate::geom::{Point, WeightedSite};

/// Iterate meaningful (1-based line number, trimmed content) pairs.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn parse_f64(line: usize, tok: &str) -> Result<f64, ParseError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| ParseError::new(line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(ParseError::new(line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}

/// Parse an `x y` point file (SSSP input). Implicit ids are line order.
pub fn parse_points(text: &str) -> Result<Vec<Point>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(ParseError::new(ln, format!("expected `x y`, got {} fields", toks.len())));
        }
        out.push(Point::new(parse_f64(ln, toks[0])?, parse_f64(ln, toks[1])?));
    }
    Ok(out)
}

/// Parse an `x y w` site file. Implicit ids are line order.
pub fn parse_sites(text: &str) -> Result<Vec<WeightedSite>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(ParseError::new(
                ln,
                format!("expected `x y w`, got {} fields", toks.len()),
            ));
        }
        out.push(WeightedSite::new(
            out.len(),
            parse_f64(ln, toks[0])?,
            parse_f64(ln, toks[1])?,
            parse_f64(ln, toks[2])?,
        ));
    }
    Ok(out)
}

pub fn emit_points(pts: &[Point]) -> String {
    let mut s = String::new();
    for p in pts {
        s.push_str(&format!("{} {}\n", p.x, p.y));
    }
    s
}

pub fn emit_sites(sites: &[WeightedSite]) -> String {
    let mut s = String::new();
    for site in sites {
        s.push_str(&format!("{} {} {}\n", site.pos.x, site.pos.y, site.w));
    }
    s
}

/// One operation of a nearest-neighbor sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NnOp {
    /// Insert a weighted point below the line. Ids are assigned by insert
    /// order, starting at 0.
    Insert { x: f64, y: f64, w: f64 },
    /// Query the nearest neighbor among the inserts so far.
    Query { x: f64, y: f64 },
}

/// Parse an op-sequence file: one op per line, `I x y w` or `Q x y`.
pub fn parse_ops(text: &str) -> Result<Vec<NnOp>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["I", x, y, w] => out.push(NnOp::Insert {
                x: parse_f64(ln, x)?,
                y: parse_f64(ln, y)?,
                w: parse_f64(ln, w)?,
            }),
            ["Q", x, y] => out.push(NnOp::Query { x: parse_f64(ln, x)?, y: parse_f64(ln, y)? }),
            _ => {
                return Err(ParseError::new(ln, format!("expected `I x y w` or `Q x y`: `{line}`")))
            }
        }
    }
    Ok(out)
}

pub fn emit_ops(ops: &[NnOp]) -> String {
    let mut s = String::new();
    for op in ops {
        match op {
            NnOp::Insert { x, y, w } => s.push_str(&format!("I {x} {y} {w}\n")),
            NnOp::Query { x, y } => s.push_str(&format!("Q {x} {y}\n")),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_round_trip() {
        let text = "# comment\n0.5 0.25\n\n-1.75 3.5  # trailing\n";
        let pts = parse_points(text).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(parse_points(&emit_points(&pts)).unwrap(), pts);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_points("1 2\n3\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse_sites("1 2 3\nx 2 3\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse_ops("I 1 -1 0\nZ 0 0\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn ops_round_trip() {
        let ops = vec![
            NnOp::Insert { x: 0.1, y: -1.0, w: 0.5 },
            NnOp::Query { x: 0.2, y: 1.0 },
        ];
        assert_eq!(parse_ops(&emit_ops(&ops)).unwrap(), ops);
    }
}
