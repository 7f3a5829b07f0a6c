//! Spoke subdivision of a half-plane diagram.
//!
//! For each face, a spoke is drawn from the owner site to every finite
//! interior vertex of the face's chain, then clipped to the half-plane: the
//! clipped spoke runs from a foot on the face's l-edge up to the vertex.
//! Star-shapedness guarantees the clipped spoke stays inside the face and
//! that the feet appear along the l-edge in chain order. Sub-regions are the
//! maximal chain runs between consecutive spokes; a sub-region bounded by
//! two spokes, one arc, and its l-piece has at most four boundary pieces,
//! which is what gives the contour trace its constant-time steps. A chain
//! junction at infinity gets no spoke, so a sub-region may span several arcs
//! separated by gaps at infinity.

use super::{FaceIdx, HalfPlaneVD, SiteId, VertIdx};
use crate::geom::Point;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct Spoke {
    /// The spoke separates chain position `pos - 1` from `pos`.
    pub pos: usize,
    pub foot: Point,
    pub top: Point,
    pub top_vert: VertIdx,
}

#[derive(Debug, Clone)]
pub struct SubRegion {
    /// Chain positions `[start, end)` covered by this sub-region.
    pub start: usize,
    pub end: usize,
    /// Index into the face's spoke list, if bounded by a spoke on that side.
    pub left_spoke: Option<usize>,
    pub right_spoke: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct SpokedFace {
    pub spokes: Vec<Spoke>,
    pub subs: Vec<SubRegion>,
    /// Sub-region containing each chain position.
    pub sub_of_chain: Vec<usize>,
}

impl SpokedFace {
    /// Number of boundary pieces of a sub-region: its l-piece, its spokes,
    /// and its arcs.
    pub fn piece_count(&self, sub: usize) -> usize {
        let sr = &self.subs[sub];
        1 + usize::from(sr.left_spoke.is_some())
            + usize::from(sr.right_spoke.is_some())
            + (sr.end - sr.start)
    }

    /// Number of at-infinity chain junctions strictly inside a sub-region.
    pub fn gap_count(&self, sub: usize) -> usize {
        let sr = &self.subs[sub];
        (sr.end - sr.start).saturating_sub(1)
    }
}

/// A diagram plus its spoke subdivision and a per-site face hint.
#[derive(Debug, Clone)]
pub struct SpokedVD {
    pub vd: HalfPlaneVD,
    pub faces: Vec<SpokedFace>,
    pub site_face: HashMap<SiteId, FaceIdx>,
}

/// Build the spoke subdivision (the paper's per-merge preprocessing).
pub fn add_spokes(vd: HalfPlaneVD) -> SpokedVD {
    let mut faces = Vec::with_capacity(vd.faces.len());
    let mut site_face = HashMap::new();
    for (fi, face) in vd.faces.iter().enumerate() {
        site_face.entry(face.site).or_insert(fi);
        let site = vd.site(face.site);
        let mut sf = SpokedFace::default();
        // spokes at finite junctions
        for pos in 1..face.chain.len() {
            let v_end = vd.arc_end(face.chain[pos - 1]);
            let v_start = vd.arc_start(face.chain[pos]);
            if vd.verts[v_end].is_infinite() || vd.verts[v_start].is_infinite() {
                continue; // gap at infinity
            }
            debug_assert_eq!(v_end, v_start);
            let top = vd.verts[v_end].p;
            debug_assert!(top.y > -1e-9, "interior junction below the line");
            let s = site.pos;
            let dy = top.y - s.y;
            debug_assert!(dy > 0.0);
            let foot_x = s.x + (top.x - s.x) * (-s.y) / dy;
            sf.spokes.push(Spoke {
                pos,
                foot: Point::new(foot_x, 0.0),
                top,
                top_vert: v_end,
            });
        }
        // sub-regions between consecutive spokes
        let n = face.chain.len();
        sf.sub_of_chain = vec![0; n];
        if n == 0 {
            sf.subs.push(SubRegion { start: 0, end: 0, left_spoke: None, right_spoke: None });
        } else {
            let mut start = 0usize;
            for (si, spoke) in sf.spokes.iter().enumerate() {
                sf.subs.push(SubRegion {
                    start,
                    end: spoke.pos,
                    left_spoke: si.checked_sub(1),
                    right_spoke: Some(si),
                });
                start = spoke.pos;
            }
            sf.subs.push(SubRegion {
                start,
                end: n,
                left_spoke: sf.spokes.len().checked_sub(1),
                right_spoke: None,
            });
            for (k, sr) in sf.subs.iter().enumerate() {
                for pos in sr.start..sr.end {
                    sf.sub_of_chain[pos] = k;
                }
            }
        }
        faces.push(sf);
    }
    SpokedVD { vd, faces, site_face }
}

impl SpokedVD {
    /// Sub-region of face `f` above the l-edge point `x`.
    pub fn sub_at_line(&self, f: FaceIdx, x: f64) -> usize {
        let sf = &self.faces[f];
        // first spoke with foot beyond x
        let mut lo = 0usize;
        let mut hi = sf.spokes.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if sf.spokes[mid].foot.x <= x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        // sub-region `lo` is bounded on the left by spoke lo-1
        lo
    }

    /// Total number of sub-regions (for size accounting).
    pub fn sub_count(&self) -> usize {
        self.faces.iter().map(|f| f.subs.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::WeightedSite;

    #[test]
    fn singleton_has_one_subregion_no_spokes() {
        let vd = HalfPlaneVD::singleton(WeightedSite::new(0, 0.0, -1.0, 0.0)).unwrap();
        let svd = add_spokes(vd);
        assert_eq!(svd.faces[0].spokes.len(), 0);
        assert_eq!(svd.faces[0].subs.len(), 1);
        assert_eq!(svd.faces[0].piece_count(0), 1);
    }
}
