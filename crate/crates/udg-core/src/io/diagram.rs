//! Text serialization of a half-plane diagram.
//!
//! The format stores sites, vertices, arcs, and face chains; arc curve
//! geometry is rebuilt from the site pair on parse, so the serialization
//! stays compact and exact. Section counts come first so a reader can
//! preallocate:
//!
//! ```text
//! vdplus 1
//! sites <n>
//! s <id> <x> <y> <w>
//! verts <m>
//! v <fin|onl|inf> <x> <y>
//! arcs <k>
//! a <s_lo> <s_hi> <t_lo> <t_hi> <v_lo> <v_hi> <f_lo> <pos_lo> <f_hi> <pos_hi>
//! faces <f>
//! f <site> <lv> <rv> <len> [<arc_idx> <+|->]...
//! ```

use crate::error::ParseError;
use crate::geom::{Bisector, WeightedSite};
use crate::vd::{classify_or_dominate, ArcRec, DirArc, Face, HalfPlaneVD, VertKind, Vertex};

fn fmt_t(t: f64) -> String {
    if t == f64::NEG_INFINITY {
        "-inf".into()
    } else if t == f64::INFINITY {
        "inf".into()
    } else {
        format!("{t}")
    }
}

pub fn emit_diagram(vd: &HalfPlaneVD) -> String {
    let mut s = String::new();
    s.push_str("vdplus 1\n");
    s.push_str(&format!("sites {}\n", vd.sites.len()));
    for site in &vd.sites {
        s.push_str(&format!("s {} {} {} {}\n", site.id, site.pos.x, site.pos.y, site.w));
    }
    s.push_str(&format!("verts {}\n", vd.verts.len()));
    for v in &vd.verts {
        let kind = match v.kind {
            VertKind::Interior => "fin",
            VertKind::OnLine => "onl",
            VertKind::AtInfinity => "inf",
        };
        s.push_str(&format!("v {kind} {} {}\n", v.p.x, v.p.y));
    }
    s.push_str(&format!("arcs {}\n", vd.arcs.len()));
    for a in &vd.arcs {
        s.push_str(&format!(
            "a {} {} {} {} {} {} {} {} {} {}\n",
            a.s_lo(),
            a.s_hi(),
            fmt_t(a.t_lo),
            fmt_t(a.t_hi),
            a.v_lo,
            a.v_hi,
            a.f_lo,
            a.pos_lo,
            a.f_hi,
            a.pos_hi
        ));
    }
    s.push_str(&format!("faces {}\n", vd.faces.len()));
    for f in &vd.faces {
        s.push_str(&format!("f {} {} {} {}", f.site, f.lv, f.rv, f.chain.len()));
        for da in &f.chain {
            s.push_str(&format!(" {} {}", da.arc, if da.fwd { "+" } else { "-" }));
        }
        s.push('\n');
    }
    s
}

struct Lines<'a> {
    iter: std::iter::Peekable<std::vec::IntoIter<(usize, &'a str)>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        match self.iter.next() {
            Some((ln, l)) => Ok((ln, l.split_whitespace().collect())),
            None => Err(ParseError::new(0, format!("unexpected end of input, wanted {what}"))),
        }
    }
}

fn want_usize(ln: usize, tok: &str) -> Result<usize, ParseError> {
    tok.parse().map_err(|_| ParseError::new(ln, format!("invalid index `{tok}`")))
}

fn want_f64(ln: usize, tok: &str) -> Result<f64, ParseError> {
    if tok == "inf" {
        return Ok(f64::INFINITY);
    }
    if tok == "-inf" {
        return Ok(f64::NEG_INFINITY);
    }
    tok.parse().map_err(|_| ParseError::new(ln, format!("invalid number `{tok}`")))
}

fn section(lines: &mut Lines, name: &str) -> Result<usize, ParseError> {
    let (ln, toks) = lines.next(name)?;
    if toks.len() != 2 || toks[0] != name {
        return Err(ParseError::new(ln, format!("expected `{name} <count>`")));
    }
    want_usize(ln, toks[1])
}

pub fn parse_diagram(text: &str) -> Result<HalfPlaneVD, ParseError> {
    let content: Vec<(usize, &str)> = super::content_lines(text).collect();
    let mut lines = Lines { iter: content.into_iter().peekable() };

    let (ln, toks) = lines.next("header")?;
    if toks != ["vdplus", "1"] {
        return Err(ParseError::new(ln, "expected header `vdplus 1`"));
    }

    let n = section(&mut lines, "sites")?;
    let mut sites = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, t) = lines.next("site")?;
        if t.len() != 5 || t[0] != "s" {
            return Err(ParseError::new(ln, "expected `s <id> <x> <y> <w>`"));
        }
        sites.push(WeightedSite::new(
            want_usize(ln, t[1])?,
            want_f64(ln, t[2])?,
            want_f64(ln, t[3])?,
            want_f64(ln, t[4])?,
        ));
    }

    let m = section(&mut lines, "verts")?;
    let mut verts = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, t) = lines.next("vert")?;
        if t.len() != 4 || t[0] != "v" {
            return Err(ParseError::new(ln, "expected `v <kind> <x> <y>`"));
        }
        let kind = match t[1] {
            "fin" => VertKind::Interior,
            "onl" => VertKind::OnLine,
            "inf" => VertKind::AtInfinity,
            other => return Err(ParseError::new(ln, format!("unknown vertex kind `{other}`"))),
        };
        verts.push(Vertex {
            p: crate::geom::Point::new(want_f64(ln, t[2])?, want_f64(ln, t[3])?),
            kind,
        });
    }

    let mut vd = HalfPlaneVD::default();
    vd.set_sites(sites);
    vd.verts = verts;

    let k = section(&mut lines, "arcs")?;
    for _ in 0..k {
        let (ln, t) = lines.next("arc")?;
        if t.len() != 11 || t[0] != "a" {
            return Err(ParseError::new(ln, "expected arc record with 10 fields"));
        }
        let s_lo = want_usize(ln, t[1])?;
        let s_hi = want_usize(ln, t[2])?;
        let curve = match classify_or_dominate(vd.site(s_lo), vd.site(s_hi)) {
            Ok(Bisector::Curve(c)) => c,
            _ => {
                return Err(ParseError::new(
                    ln,
                    format!("sites {s_lo},{s_hi} admit no bisector curve"),
                ))
            }
        };
        vd.arcs.push(ArcRec {
            curve,
            t_lo: want_f64(ln, t[3])?,
            t_hi: want_f64(ln, t[4])?,
            v_lo: want_usize(ln, t[5])?,
            v_hi: want_usize(ln, t[6])?,
            f_lo: want_usize(ln, t[7])?,
            pos_lo: want_usize(ln, t[8])?,
            f_hi: want_usize(ln, t[9])?,
            pos_hi: want_usize(ln, t[10])?,
        });
    }

    let fcount = section(&mut lines, "faces")?;
    for _ in 0..fcount {
        let (ln, t) = lines.next("face")?;
        if t.len() < 5 || t[0] != "f" {
            return Err(ParseError::new(ln, "expected face record"));
        }
        let site = want_usize(ln, t[1])?;
        let lv = want_usize(ln, t[2])?;
        let rv = want_usize(ln, t[3])?;
        let len = want_usize(ln, t[4])?;
        if t.len() != 5 + 2 * len {
            return Err(ParseError::new(ln, "face chain length mismatch"));
        }
        let mut chain = Vec::with_capacity(len);
        for i in 0..len {
            let arc = want_usize(ln, t[5 + 2 * i])?;
            let fwd = match t[6 + 2 * i] {
                "+" => true,
                "-" => false,
                other => return Err(ParseError::new(ln, format!("bad direction `{other}`"))),
            };
            chain.push(DirArc { arc, fwd });
        }
        vd.faces.push(Face { site, lv, rv, chain });
    }

    vd.validate().map_err(|e| ParseError::new(0, format!("inconsistent diagram: {e}")))?;
    Ok(vd)
}

/// Structural equality of two diagrams (used by round-trip tests).
pub fn diagram_eq(a: &HalfPlaneVD, b: &HalfPlaneVD) -> bool {
    if a.sites != b.sites || a.verts.len() != b.verts.len() || a.arcs.len() != b.arcs.len() {
        return false;
    }
    for (x, y) in a.verts.iter().zip(&b.verts) {
        if x.kind != y.kind || x.p != y.p {
            return false;
        }
    }
    for (x, y) in a.arcs.iter().zip(&b.arcs) {
        if x.s_lo() != y.s_lo()
            || x.s_hi() != y.s_hi()
            || x.t_lo.to_bits() != y.t_lo.to_bits()
            || x.t_hi.to_bits() != y.t_hi.to_bits()
            || (x.v_lo, x.v_hi, x.f_lo, x.pos_lo, x.f_hi, x.pos_hi)
                != (y.v_lo, y.v_hi, y.f_lo, y.pos_lo, y.f_hi, y.pos_hi)
        {
            return false;
        }
    }
    if a.faces.len() != b.faces.len() {
        return false;
    }
    for (x, y) in a.faces.iter().zip(&b.faces) {
        if x.site != y.site || x.lv != y.lv || x.rv != y.rv || x.chain.len() != y.chain.len() {
            return false;
        }
        for (u, v) in x.chain.iter().zip(&y.chain) {
            if u.arc != v.arc || u.fwd != v.fwd {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vd::build::build_vdplus;

    #[test]
    fn round_trip_small_diagram() {
        let sites = vec![
            WeightedSite::new(0, -1.0, -1.0, 0.2),
            WeightedSite::new(1, 1.0, -1.5, -0.3),
            WeightedSite::new(2, 0.2, -0.7, 0.0),
        ];
        let d = build_vdplus(&sites).unwrap();
        let text = emit_diagram(d.vd());
        let back = parse_diagram(&text).unwrap();
        assert!(diagram_eq(d.vd(), &back), "round trip changed the diagram:\n{text}");
    }
}
