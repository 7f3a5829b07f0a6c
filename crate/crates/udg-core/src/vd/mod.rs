//! Half-plane additively-weighted Voronoi diagrams `VD+(S)`.
//!
//! All sites lie strictly below the x-axis; the diagram is the restriction of
//! their additively-weighted Voronoi diagram to the closed half-plane above
//! it. Because every region is star-shaped about its site (which is below the
//! line), each connected component of a region above the line is radially
//! monotone about the site and meets the line in exactly one interval. The
//! representation leans on that: faces are kept in left-to-right order along
//! the line, one face per l-edge, each with a single chain of bisector arcs
//! as its upper boundary. Unbounded chain ends carry symbolic at-infinity
//! vertices; a chain may pass through infinity between two unbounded arcs.
//!
//! A site may own several faces (its region can be pinched into pieces by
//! stronger neighbors), and sites whose region above the line is empty own
//! no face but are retained in `sites`.

pub mod build;
pub mod locate;
pub mod spokes;

pub use build::{build_vdplus, BuildOutcome, BuiltDiagram};
pub use locate::{build_locator, locate, Locator};
pub use spokes::{add_spokes, SpokedVD};

use crate::error::VdError;
use crate::geom::{classify_bisector, Bisector, BisectorCurve, Point, SiteId, WeightedSite};
use std::collections::HashMap;

pub type VertIdx = usize;
pub type ArcIdx = usize;
pub type FaceIdx = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertKind {
    /// Equidistant to three sites, strictly above the line.
    Interior,
    /// On the reference line (an l-edge endpoint).
    OnLine,
    /// Symbolic point at infinity; `p` holds the unit direction.
    AtInfinity,
}

#[derive(Debug, Clone, Copy)]
pub struct Vertex {
    pub p: Point,
    pub kind: VertKind,
}

impl Vertex {
    pub fn is_infinite(&self) -> bool {
        self.kind == VertKind::AtInfinity
    }
}

/// One maximal Voronoi edge piece: a parameter interval of the bisector of
/// `(s_lo, s_hi)`, bounding the face of `s_lo` on one side and the face of
/// `s_hi` on the other.
#[derive(Debug, Clone)]
pub struct ArcRec {
    pub curve: BisectorCurve,
    /// Parameter range; `-inf`/`+inf` for unbounded ends.
    pub t_lo: f64,
    pub t_hi: f64,
    /// Endpoint vertices at `t_lo` / `t_hi`.
    pub v_lo: VertIdx,
    pub v_hi: VertIdx,
    /// Face on `curve.site_lo`'s side and its chain position there.
    pub f_lo: FaceIdx,
    pub pos_lo: usize,
    /// Face on `curve.site_hi`'s side and its chain position there.
    pub f_hi: FaceIdx,
    pub pos_hi: usize,
}

impl ArcRec {
    pub fn s_lo(&self) -> SiteId {
        self.curve.site_lo.id
    }

    pub fn s_hi(&self) -> SiteId {
        self.curve.site_hi.id
    }

    /// The face across the arc from the face owned by `site`.
    pub fn other_face(&self, site: SiteId) -> (FaceIdx, usize) {
        if site == self.s_lo() {
            (self.f_hi, self.pos_hi)
        } else {
            debug_assert_eq!(site, self.s_hi());
            (self.f_lo, self.pos_lo)
        }
    }
}

/// Directed reference to an arc within a face chain. `fwd` means the chain
/// traverses the arc from its `t_lo` end to its `t_hi` end.
#[derive(Debug, Clone, Copy)]
pub struct DirArc {
    pub arc: ArcIdx,
    pub fwd: bool,
}

/// One face: a connected component of a site's region above the line,
/// bounded below by one l-edge `[lv, rv]` and above by `chain` (arcs in
/// left-to-right order over the top).
#[derive(Debug, Clone)]
pub struct Face {
    pub site: SiteId,
    pub lv: VertIdx,
    pub rv: VertIdx,
    pub chain: Vec<DirArc>,
}

/// The half-plane diagram. Faces are in left-to-right l-edge order.
#[derive(Debug, Clone, Default)]
pub struct HalfPlaneVD {
    pub sites: Vec<WeightedSite>,
    pub verts: Vec<Vertex>,
    pub arcs: Vec<ArcRec>,
    pub faces: Vec<Face>,
    site_pos: HashMap<SiteId, usize>,
}

impl HalfPlaneVD {
    pub fn empty() -> Self {
        HalfPlaneVD::default()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub(crate) fn set_sites(&mut self, sites: Vec<WeightedSite>) {
        self.site_pos = sites.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        self.sites = sites;
    }

    pub fn site(&self, id: SiteId) -> &WeightedSite {
        &self.sites[self.site_pos[&id]]
    }

    /// Start (left) vertex of a chain entry.
    pub fn arc_start(&self, da: DirArc) -> VertIdx {
        let a = &self.arcs[da.arc];
        if da.fwd {
            a.v_lo
        } else {
            a.v_hi
        }
    }

    /// End (right) vertex of a chain entry.
    pub fn arc_end(&self, da: DirArc) -> VertIdx {
        let a = &self.arcs[da.arc];
        if da.fwd {
            a.v_hi
        } else {
            a.v_lo
        }
    }

    /// x-extent of a face's l-edge (`-inf`/`+inf` at the extremes).
    pub fn face_l_range(&self, f: FaceIdx) -> (f64, f64) {
        let face = &self.faces[f];
        let xl = match self.verts[face.lv].kind {
            VertKind::AtInfinity => f64::NEG_INFINITY,
            _ => self.verts[face.lv].p.x,
        };
        let xr = match self.verts[face.rv].kind {
            VertKind::AtInfinity => f64::INFINITY,
            _ => self.verts[face.rv].p.x,
        };
        (xl, xr)
    }

    /// The left-to-right sequence of l-edges as `(xl, xr, owner)`.
    pub fn l_edge_seq(&self) -> Vec<(f64, f64, SiteId)> {
        (0..self.faces.len())
            .map(|f| {
                let (xl, xr) = self.face_l_range(f);
                (xl, xr, self.faces[f].site)
            })
            .collect()
    }

    /// Face whose l-edge contains `x` (ties to the right edge go right).
    pub fn face_at_line(&self, x: f64) -> FaceIdx {
        debug_assert!(!self.faces.is_empty());
        let mut lo = 0usize;
        let mut hi = self.faces.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.face_l_range(mid).0 <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// The diagram of a single site: one face owning the whole upper
    /// half-plane, one unbounded l-edge, no vertices above the line.
    pub fn singleton(s: WeightedSite) -> Result<Self, VdError> {
        if !s.is_finite() {
            return Err(VdError::NonFinite(s.id));
        }
        if s.pos.y >= 0.0 {
            return Err(VdError::SiteAboveLine(s.id, s.pos.y));
        }
        let mut vd = HalfPlaneVD::default();
        vd.set_sites(vec![s]);
        vd.verts.push(Vertex { p: Point::new(-1.0, 0.0), kind: VertKind::AtInfinity });
        vd.verts.push(Vertex { p: Point::new(1.0, 0.0), kind: VertKind::AtInfinity });
        vd.faces.push(Face { site: s.id, lv: 0, rv: 1, chain: Vec::new() });
        Ok(vd)
    }

    /// Euler characteristic ingredients with all at-infinity vertices
    /// collapsed to one: returns (V, E, F). For a valid diagram V - E + F = 1.
    pub fn euler_counts(&self) -> (usize, usize, usize) {
        let finite = self.verts.iter().filter(|v| !v.is_infinite()).count();
        let any_inf = self.verts.iter().any(|v| v.is_infinite());
        let v = finite + usize::from(any_inf);
        // edges: arcs plus l-edges (one per face)
        let e = self.arcs.len() + self.faces.len();
        (v, e, self.faces.len())
    }

    /// Structural validation for tests and debug builds.
    pub fn validate(&self) -> Result<(), String> {
        if self.faces.is_empty() {
            if !self.arcs.is_empty() || !self.verts.is_empty() {
                return Err("empty diagram with leftover geometry".into());
            }
            return Ok(());
        }
        let vert = |i: usize| -> &Vertex { &self.verts[i] };
        // l-edges tile the line
        if vert(self.faces[0].lv).kind != VertKind::AtInfinity {
            return Err("leftmost l-edge must start at -inf".into());
        }
        if vert(self.faces[self.faces.len() - 1].rv).kind != VertKind::AtInfinity {
            return Err("rightmost l-edge must end at +inf".into());
        }
        for (i, w) in self.faces.windows(2).enumerate() {
            if w[0].rv != w[1].lv {
                return Err(format!("faces {i},{} do not share an l-vertex", i + 1));
            }
            if w[0].site == w[1].site {
                return Err(format!("adjacent l-edges {i},{} share owner {}", i + 1, w[0].site));
            }
        }
        // chains connect
        for (fi, face) in self.faces.iter().enumerate() {
            let mut prev_end: Option<VertIdx> = Some(face.lv);
            for (k, da) in face.chain.iter().enumerate() {
                let s = self.arc_start(*da);
                if let Some(pe) = prev_end {
                    let ok = pe == s || (vert(pe).is_infinite() && vert(s).is_infinite());
                    if !ok {
                        return Err(format!("face {fi} chain break at {k}"));
                    }
                }
                prev_end = Some(self.arc_end(*da));
            }
            let last = prev_end.unwrap_or(face.lv);
            let ok = last == face.rv || (vert(last).is_infinite() && vert(face.rv).is_infinite());
            if !ok {
                return Err(format!("face {fi} chain does not reach rv"));
            }
            if face.chain.is_empty() && self.faces.len() > 1 {
                return Err(format!("face {fi} has empty chain in multi-face diagram"));
            }
        }
        // arcs reference both faces consistently
        for (ai, a) in self.arcs.iter().enumerate() {
            if self.faces[a.f_lo].site != a.s_lo() || self.faces[a.f_hi].site != a.s_hi() {
                return Err(format!("arc {ai} face owners mismatch"));
            }
            if self.faces[a.f_lo].chain[a.pos_lo].arc != ai
                || self.faces[a.f_hi].chain[a.pos_hi].arc != ai
            {
                return Err(format!("arc {ai} chain back-link broken"));
            }
            // endpoint geometry
            for (t, v) in [(a.t_lo, a.v_lo), (a.t_hi, a.v_hi)] {
                let vv = vert(v);
                if t.is_finite() {
                    if vv.is_infinite() {
                        return Err(format!("arc {ai} finite end has infinite vertex"));
                    }
                    let p = a.curve.point_at(t);
                    if p.dist(vv.p) > 1e-6 * (1.0 + p.norm()) {
                        return Err(format!("arc {ai} endpoint off vertex: {p:?} vs {:?}", vv.p));
                    }
                } else if !vv.is_infinite() {
                    return Err(format!("arc {ai} infinite end has finite vertex"));
                }
            }
            if a.t_lo >= a.t_hi {
                return Err(format!("arc {ai} empty parameter range"));
            }
        }
        // vertices on the line really are
        for (vi, v) in self.verts.iter().enumerate() {
            if v.kind == VertKind::OnLine && v.p.y.abs() > 1e-7 {
                return Err(format!("vertex {vi} marked on-line at y={}", v.p.y));
            }
        }
        Ok(())
    }
}

/// Exact linear-scan argmin of weighted distance; ties go to the smaller id.
pub fn nearest_site_bruteforce(
    sites: &[WeightedSite],
    q: Point,
) -> Result<(SiteId, f64), VdError> {
    if sites.is_empty() {
        return Err(VdError::EmptyInput);
    }
    let mut best: Option<(f64, SiteId)> = None;
    for s in sites {
        let d = s.dist(q);
        match best {
            None => best = Some((d, s.id)),
            Some((bd, bid)) => {
                if d < bd || (d == bd && s.id < bid) {
                    best = Some((d, s.id));
                }
            }
        }
    }
    let (d, id) = best.unwrap();
    Ok((id, d))
}

/// Bisector classification that resolves exact coincident equal-weight pairs
/// by the duplicate policy (min weight, then min id dominates), so merges of
/// diagrams with coincident sites across the two inputs stay total.
pub(crate) fn classify_or_dominate(
    a: &WeightedSite,
    b: &WeightedSite,
) -> Result<Bisector, crate::error::GeomError> {
    match classify_bisector(a, b) {
        Ok(bi) => Ok(bi),
        Err(crate::error::GeomError::CoincidentSites(_, _)) => {
            Ok(Bisector::Empty { dominant: a.id.min(b.id) })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_shape() {
        let s = WeightedSite::new(7, 0.0, -1.0, 0.0);
        let vd = HalfPlaneVD::singleton(s).unwrap();
        assert_eq!(vd.faces.len(), 1);
        assert_eq!(vd.l_edge_seq().len(), 1);
        assert_eq!(vd.verts.len(), 2);
        assert!(vd.validate().is_ok());
        let (v, e, f) = vd.euler_counts();
        assert_eq!(v as i64 - e as i64 + f as i64, 1);

        let s2 = WeightedSite::new(1, 5.0, -0.1, -3.0);
        let vd2 = HalfPlaneVD::singleton(s2).unwrap();
        assert_eq!(vd2.faces.len(), 1);
    }

    #[test]
    fn singleton_rejects_above_line() {
        let s = WeightedSite::new(0, 0.0, 0.0, 0.0);
        assert!(matches!(HalfPlaneVD::singleton(s), Err(VdError::SiteAboveLine(0, _))));
        let s = WeightedSite::new(0, 0.0, 2.0, 0.0);
        assert!(HalfPlaneVD::singleton(s).is_err());
    }

    #[test]
    fn brute_force_basics() {
        let sites = vec![WeightedSite::new(0, 0.0, -1.0, 0.0)];
        let (id, d) = nearest_site_bruteforce(&sites, Point::new(0.0, 1.0)).unwrap();
        assert_eq!((id, d), (0, 2.0));

        let sites =
            vec![WeightedSite::new(0, 0.0, -1.0, 0.0), WeightedSite::new(1, 2.0, -1.0, 1.0)];
        let (id, d) = nearest_site_bruteforce(&sites, Point::new(0.0, 1.0)).unwrap();
        assert_eq!(id, 0);
        assert_eq!(d, 2.0);
        assert!(nearest_site_bruteforce(&[], Point::new(0.0, 0.0)).is_err());
    }
}
