//! Point location in a spoked half-plane diagram.
//!
//! The locator is a hierarchy of coarsened diagrams over nested site
//! subsets whose sizes at least halve per level (the divide-and-conquer
//! build retains its prefix diagrams, so the hierarchy is free there; see
//! [`chain_levels`](super::build::chain_levels) for reuse after a merge).
//! A query walks a straight segment from a point on the hinted face's
//! l-edge towards the query point, stepping sub-region to sub-region in
//! O(1) per crossing; the coarse levels supply the face hint for the next
//! finer level, so the expected work per level is constant.
//!
//! Correctness never depends on the hierarchy: the level-0 walk alone
//! determines the owner, and a walk that exceeds its step budget (possible
//! only under numeric degeneracy) falls back to a brute-force scan.

use super::build::build_vdplus_full;
use super::spokes::SpokedVD;
use super::{FaceIdx, HalfPlaneVD};
use crate::error::VdError;
use crate::geom::{Point, SiteId, WeightedSite, EPS};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Point-location hierarchy. `levels[0]` is the diagram queries are
/// answered against; deeper levels are coarsenings used only as hints.
#[derive(Debug, Clone)]
pub struct Locator {
    pub levels: Vec<Arc<SpokedVD>>,
}

impl Locator {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Shrink factors between consecutive levels (site counts).
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.vd.sites.len()).collect()
    }
}

/// Build a locator for a standalone diagram by sub-sampling half the sites
/// (seeded, deterministic) and reusing the sub-build's own hierarchy.
///
/// Construction along the pipeline paths (divide-and-conquer builds,
/// flush merges, offline tree) reuses retained levels instead and costs
/// nothing extra; this standalone path pays one extra half-size build.
pub fn build_locator(svd: &Arc<SpokedVD>) -> Locator {
    let mut levels = vec![svd.clone()];
    let sites = &svd.vd.sites;
    if sites.len() > 8 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x10CA_7E00 ^ sites.len() as u64);
        let mut subset: Vec<WeightedSite> = sites.clone();
        subset.shuffle(&mut rng);
        subset.truncate(sites.len() / 2);
        if let Ok(out) = build_vdplus_full(&subset, 0x10CA_7E01) {
            levels.extend(out.diagram.levels);
        }
    }
    Locator { levels }
}

/// How far a located owner can be trusted: collect near-tie candidates
/// around the final sub-region and resolve ties to the smallest id.
fn resolve_ties(
    svd: &SpokedVD,
    face: FaceIdx,
    sub: usize,
    q: Point,
) -> (SiteId, f64) {
    let vd = &svd.vd;
    let owner = vd.faces[face].site;
    let mut best = (vd.site(owner).dist(q), owner);
    let sr = &svd.faces[face].subs[sub];
    let f = &vd.faces[face];
    let mut consider = |id: SiteId| {
        let d = vd.site(id).dist(q);
        let tol = EPS * (1.0 + best.0.abs().max(d.abs()));
        if d < best.0 - tol || ((d - best.0).abs() <= tol && id < best.1) {
            best = (d, id);
        }
    };
    for pos in sr.start..sr.end {
        let arc = &vd.arcs[f.chain[pos].arc];
        consider(if arc.s_lo() == owner { arc.s_hi() } else { arc.s_lo() });
    }
    // Near a spoke the tied region may sit across the adjacent sub-region.
    for sp in [sr.left_spoke, sr.right_spoke].into_iter().flatten() {
        let spk = &svd.faces[face].spokes[sp];
        let v = spk.top - spk.foot;
        let w = q - spk.foot;
        let t = (w.dot(v) / v.dot(v)).clamp(0.0, 1.0);
        let d = (w - v * t).norm();
        if d <= 1e-7 * (1.0 + q.norm()) {
            for pos in 0..f.chain.len() {
                let arc = &vd.arcs[f.chain[pos].arc];
                consider(if arc.s_lo() == owner { arc.s_hi() } else { arc.s_lo() });
            }
        }
    }
    (best.1, best.0)
}

/// Walk along the segment from a point on `start`'s l-edge to `q`,
/// crossing sub-regions; returns the (face, sub-region) containing `q`.
/// `None` means the walk exceeded its budget (degenerate geometry).
fn walk(svd: &SpokedVD, start: FaceIdx, q: Point) -> Option<(FaceIdx, usize)> {
    let vd = &svd.vd;
    let (xl, xr) = vd.face_l_range(start);
    let x0 = match (xl.is_finite(), xr.is_finite()) {
        (true, true) => 0.5 * (xl + xr),
        (true, false) => xl + 1.0,
        (false, true) => xr - 1.0,
        (false, false) => 0.0,
    };
    let p0 = Point::new(x0, 0.0);
    let mut face = start;
    let mut sub = svd.sub_at_line(face, x0);
    let mut tau_cur = 0.0f64;
    let budget = 8 * (vd.faces.len() + vd.arcs.len()) + 32;
    let seg = q - p0;
    let len2 = seg.dot(seg);
    if len2 == 0.0 {
        return Some((face, sub));
    }
    for _ in 0..budget {
        let sf = &svd.faces[face];
        let sr = &sf.subs[sub];
        let fc = &vd.faces[face];
        let eps_tau = 1e-12 + 1e-9 / len2.sqrt();
        let mut best: Option<(f64, usize, bool)> = None; // (tau, target, is_arc)
        for pos in sr.start..sr.end {
            let arc = &vd.arcs[fc.chain[pos].arc];
            for (_t, tau, p) in arc.curve.segment_intersections(p0, q) {
                // stay within the arc's parameter range
                let ta = arc.curve.param_of(p);
                let m = 1e-9 / (1.0 + ta.abs());
                if ta < arc.t_lo - m || ta > arc.t_hi + m {
                    continue;
                }
                if tau > tau_cur + eps_tau && best.map_or(true, |b| tau < b.0) {
                    best = Some((tau, fc.chain[pos].arc, true));
                }
            }
        }
        for (is_left, sp) in [(true, sr.left_spoke), (false, sr.right_spoke)] {
            if let Some(si) = sp {
                let spk = &sf.spokes[si];
                if let Some(tau) = seg_seg_tau(p0, q, spk.foot, spk.top) {
                    if tau > tau_cur + eps_tau && best.map_or(true, |b| tau < b.0) {
                        let target = if is_left { sub - 1 } else { sub + 1 };
                        best = Some((tau, target, false));
                    }
                }
            }
        }
        match best {
            None => return Some((face, sub)),
            Some((tau, target, true)) => {
                let arc = &vd.arcs[target];
                let owner = fc.site;
                let (nf, npos) = arc.other_face(owner);
                face = nf;
                sub = svd.faces[nf].sub_of_chain[npos];
                tau_cur = tau;
            }
            Some((tau, target, false)) => {
                sub = target;
                tau_cur = tau;
            }
        }
    }
    None
}

/// Crossing parameter of segment `p0->q` with segment `a->b`, if any.
fn seg_seg_tau(p0: Point, q: Point, a: Point, b: Point) -> Option<f64> {
    let d1 = q - p0;
    let d2 = b - a;
    let denom = d1.cross(d2);
    if denom.abs() < 1e-300 {
        return None;
    }
    let w = a - p0;
    let tau = w.cross(d2) / denom;
    let sig = w.cross(d1) / denom;
    if (-1e-12..=1.0 + 1e-12).contains(&sig) && (-1e-12..=1.0 + 1e-12).contains(&tau) {
        Some(tau)
    } else {
        None
    }
}

/// Locate the owning site of `q` (weighted-distance argmin over the
/// diagram's face owners; ties to smaller id).
pub fn locate(loc: &Locator, q: Point) -> Result<(SiteId, f64), VdError> {
    if q.y < -1e-12 {
        return Err(VdError::QueryBelowLine(q.y));
    }
    let q = Point::new(q.x, q.y.max(0.0));
    let level0 = loc.levels.first().ok_or(VdError::EmptyInput)?;
    if level0.vd.is_empty() {
        return Err(VdError::EmptyInput);
    }

    // Points on the line resolve directly through the l-edge sequence.
    if q.y == 0.0 {
        let f = level0.vd.face_at_line(q.x);
        let sub = level0.sub_at_line(f, q.x);
        return Ok(order_result(resolve_ties(level0, f, sub, q)));
    }

    // Coarse-to-fine descent: each level refines the hinted site.
    let mut hint: Option<SiteId> = None;
    for level in loc.levels.iter().rev() {
        if level.vd.is_empty() {
            continue;
        }
        let start = hint
            .and_then(|s| level.site_face.get(&s).copied())
            .unwrap_or_else(|| level.vd.face_at_line(q.x));
        let located = walk(level, start, q);
        match located {
            Some((f, _sub)) => hint = Some(level.vd.faces[f].site),
            None => {
                // Degenerate walk: exact but slow fallback on this level.
                hint = Some(brute_over_faces(&level.vd, q));
            }
        }
    }

    // Final exact answer on level 0.
    let start = hint
        .and_then(|s| level0.site_face.get(&s).copied())
        .unwrap_or_else(|| level0.vd.face_at_line(q.x));
    match walk(level0, start, q) {
        Some((f, sub)) => Ok(order_result(resolve_ties(level0, f, sub, q))),
        None => {
            let id = brute_over_faces(&level0.vd, q);
            Ok((id, level0.vd.site(id).dist(q)))
        }
    }
}

fn order_result((id, d): (SiteId, f64)) -> (SiteId, f64) {
    (id, d)
}

fn brute_over_faces(vd: &HalfPlaneVD, q: Point) -> SiteId {
    let mut best: Option<(f64, SiteId)> = None;
    for f in &vd.faces {
        let d = vd.site(f.site).dist(q);
        if best.map_or(true, |(bd, bid)| d < bd || (d == bd && f.site < bid)) {
            best = Some((d, f.site));
        }
    }
    best.expect("non-empty diagram").1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vd::build::build_vdplus;
    use crate::vd::nearest_site_bruteforce;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_locate() {
        let d =
            build_vdplus(&[WeightedSite::new(3, 0.0, -1.0, 0.0)]).unwrap();
        let loc = d.locator();
        let (id, dist) = locate(&loc, Point::new(0.0, 1.0)).unwrap();
        assert_eq!((id, dist), (3, 2.0));
        assert!(matches!(
            locate(&loc, Point::new(0.0, -1.0)),
            Err(VdError::QueryBelowLine(_))
        ));
    }

    #[test]
    fn symmetric_pair_locate() {
        let sites =
            vec![WeightedSite::new(0, -1.0, -1.0, 0.0), WeightedSite::new(1, 1.0, -1.0, 0.0)];
        let d = build_vdplus(&sites).unwrap();
        let loc = d.locator();
        let (id, _) = locate(&loc, Point::new(-0.5, 1.0)).unwrap();
        assert_eq!(id, 0);
        // tie on the line between symmetric sites goes to the min id
        let (id, _) = locate(&loc, Point::new(0.0, 0.0)).unwrap();
        assert_eq!(id, 0);
    }

    #[test]
    fn random_locate_agrees_with_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [5usize, 23, 100] {
            let sites: Vec<WeightedSite> = (0..n)
                .map(|i| {
                    WeightedSite::new(
                        i,
                        rng.gen_range(-6.0..6.0),
                        rng.gen_range(-3.0..-0.02),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let d = build_vdplus(&sites).unwrap();
            let loc = d.locator();
            for _ in 0..2000 {
                let q = Point::new(rng.gen_range(-9.0..9.0), rng.gen_range(0.0..7.0));
                let (lid, ld) = locate(&loc, q).unwrap();
                let (bid, bd) = nearest_site_bruteforce(&sites, q).unwrap();
                if (ld - bd).abs() > 1e-7 * (1.0 + bd.abs()) || (lid != bid && (ld - bd).abs() > 1e-9)
                {
                    panic!("locate mismatch at {q:?}: got ({lid},{ld}), want ({bid},{bd}), n={n}");
                }
            }
        }
    }
}
