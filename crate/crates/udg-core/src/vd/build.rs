//! Divide-and-conquer construction of `VD+(S)`.
//!
//! Sites are split by index halves, the halves built recursively, and the
//! results combined with the linear-time merge. The diagrams along the
//! leftmost recursion spine are prefixes of size n/2, n/4, ... — a halving
//! chain of sub-diagrams that is retained as the point-location hierarchy,
//! so the locator costs nothing beyond the build itself.
//!
//! Degenerate inputs abort the merge; the builder retries with a fresh
//! seeded perturbation of the input coordinates (bounded retries, recorded
//! in the outcome).

use super::spokes::{add_spokes, SpokedVD};
use super::{HalfPlaneVD, Locator};
use crate::error::{MergeError, VdError};
use crate::geom::perturb::{perturb_sites, retry_seed, PerturbMeta, DEFAULT_EPS};
use crate::geom::WeightedSite;
use crate::merge::{merge_vdplus_full, MergeOptions, MergeStats};
use std::collections::HashMap;
use std::sync::Arc;

/// Maximum perturbation retries before giving up.
pub const MAX_RETRIES: u32 = 5;

/// A constructed diagram together with its retained hierarchy levels
/// (`levels[0]` is the diagram itself; sizes at least halve per level).
#[derive(Debug, Clone)]
pub struct BuiltDiagram {
    pub svd: Arc<SpokedVD>,
    pub levels: Vec<Arc<SpokedVD>>,
}

impl BuiltDiagram {
    pub fn vd(&self) -> &HalfPlaneVD {
        &self.svd.vd
    }

    pub fn locator(&self) -> Locator {
        Locator { levels: self.levels.clone() }
    }

    /// Total site slots retained across all hierarchy levels.
    pub fn retained_sites(&self) -> usize {
        self.levels.iter().map(|l| l.vd.sites.len()).sum()
    }

    /// Wrap a lone spoked diagram with a trivial single-level hierarchy.
    pub fn from_svd(svd: Arc<SpokedVD>) -> Self {
        BuiltDiagram { levels: vec![svd.clone()], svd }
    }
}

/// Aggregate merge counters of one construction.
#[derive(Debug, Clone, Default)]
pub struct BuildStats {
    pub merges: u64,
    pub seeds: u64,
    pub trace_steps: u64,
    pub edge_crossings: u64,
    pub spoke_crossings: u64,
    pub max_crossings_per_spoke: u32,
}

impl BuildStats {
    pub(crate) fn absorb(&mut self, m: &MergeStats) {
        self.merges += 1;
        self.seeds += m.seeds as u64;
        self.trace_steps += m.trace_steps as u64;
        self.edge_crossings += m.edge_crossings as u64;
        self.spoke_crossings += m.spoke_crossings as u64;
        self.max_crossings_per_spoke = self.max_crossings_per_spoke.max(m.max_crossings_per_spoke);
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub diagram: BuiltDiagram,
    /// Perturbation applied to the inputs, if a retry was needed.
    pub perturb: Option<PerturbMeta>,
    pub retries: u32,
    /// The degeneracy that forced the first retry, if any.
    pub first_error: Option<MergeError>,
    pub stats: BuildStats,
}

/// Deduplicate coincident sites, keeping min weight then min id. Returns
/// (active in input order, inert).
fn dedupe(sites: &[WeightedSite]) -> (Vec<WeightedSite>, Vec<WeightedSite>) {
    let input_pos: HashMap<usize, usize> =
        sites.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&i, &j| {
        (sites[i].pos.x, sites[i].pos.y)
            .partial_cmp(&(sites[j].pos.x, sites[j].pos.y))
            .unwrap()
    });
    let mut active: Vec<WeightedSite> = Vec::with_capacity(sites.len());
    let mut inert: Vec<WeightedSite> = Vec::new();
    let coincident = |a: &WeightedSite, b: &WeightedSite| {
        a.pos.dist(b.pos) <= 1e-12 * (1.0 + a.pos.norm())
    };
    let mut group: Vec<usize> = Vec::new();
    let flush = |group: &mut Vec<usize>, active: &mut Vec<_>, inert: &mut Vec<_>| {
        if group.is_empty() {
            return;
        }
        let keep = *group
            .iter()
            .min_by(|&&i, &&j| {
                (sites[i].w, sites[i].id).partial_cmp(&(sites[j].w, sites[j].id)).unwrap()
            })
            .unwrap();
        for &i in group.iter() {
            if i == keep {
                active.push(sites[i]);
            } else {
                inert.push(sites[i]);
            }
        }
        group.clear();
    };
    for &i in &order {
        if let Some(&last) = group.last() {
            if !coincident(&sites[last], &sites[i]) {
                flush(&mut group, &mut active, &mut inert);
            }
        }
        group.push(i);
    }
    flush(&mut group, &mut active, &mut inert);
    active.sort_by_key(|s| input_pos[&s.id]);
    (active, inert)
}

/// Recursive build. Returns the (unwrapped) top diagram and the retained
/// levels strictly below it.
fn rec_build(
    sites: &[WeightedSite],
    stats: &mut BuildStats,
) -> Result<(SpokedVD, Vec<Arc<SpokedVD>>), VdError> {
    if sites.len() == 1 {
        return Ok((add_spokes(HalfPlaneVD::singleton(sites[0])?), Vec::new()));
    }
    let mid = sites.len() / 2;
    let (left, left_sub) = rec_build(&sites[..mid], stats)?;
    let left = Arc::new(left);
    let (right, _) = rec_build(&sites[mid..], stats)?;
    let res = merge_vdplus_full(&left, &right, &MergeOptions::default()).map_err(VdError::Merge)?;
    stats.absorb(&res.stats);
    let top = add_spokes(res.vd);
    let mut sub = vec![left];
    sub.extend(left_sub);
    Ok((top, sub))
}

fn validate_sites(sites: &[WeightedSite]) -> Result<(), VdError> {
    if sites.is_empty() {
        return Err(VdError::EmptyInput);
    }
    for s in sites {
        if !s.is_finite() {
            return Err(VdError::NonFinite(s.id));
        }
        if s.pos.y >= 0.0 {
            return Err(VdError::SiteAboveLine(s.id, s.pos.y));
        }
    }
    Ok(())
}

/// Build `VD+(S)` by divide-and-conquer with merges, with perturbation
/// retries on degeneracy. Dropped duplicates are retained in the output's
/// site set (they own no face).
pub fn build_vdplus(sites: &[WeightedSite]) -> Result<BuiltDiagram, VdError> {
    Ok(build_vdplus_full(sites, 0)?.diagram)
}

pub fn build_vdplus_full(sites: &[WeightedSite], base_seed: u64) -> Result<BuildOutcome, VdError> {
    validate_sites(sites)?;
    let (active, inert) = dedupe(sites);
    let mut last_err: Option<MergeError> = None;
    for attempt in 0..=MAX_RETRIES {
        let mut stats = BuildStats::default();
        let work: Vec<WeightedSite>;
        let perturb = if attempt == 0 {
            work = active.clone();
            None
        } else {
            let seed = retry_seed(base_seed, attempt);
            work = perturb_sites(&active, DEFAULT_EPS, seed);
            Some(PerturbMeta { eps: DEFAULT_EPS, seed })
        };
        match rec_build(&work, &mut stats) {
            Ok((mut top, sub)) => {
                if !inert.is_empty() {
                    let mut all = top.vd.sites.clone();
                    all.extend(inert.iter().copied());
                    top.vd.set_sites(all);
                }
                let svd = Arc::new(top);
                let mut levels = vec![svd.clone()];
                levels.extend(sub);
                return Ok(BuildOutcome {
                    diagram: BuiltDiagram { svd, levels },
                    perturb,
                    retries: attempt,
                    first_error: last_err,
                    stats,
                });
            }
            Err(VdError::Merge(e)) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        }
    }
    Err(VdError::Merge(last_err.unwrap_or(MergeError::TraceStall("exhausted retries".into()))))
}

/// Chain hierarchy levels after a merge: the new diagram on top, then every
/// old level at most half the size of the previously kept one.
pub fn chain_levels(top: Arc<SpokedVD>, old: &[Arc<SpokedVD>]) -> Vec<Arc<SpokedVD>> {
    let mut levels = vec![top];
    let mut last = levels[0].vd.sites.len();
    for l in old {
        let c = l.vd.sites.len();
        if 2 * c <= last && c > 0 {
            levels.push(l.clone());
            last = c;
        }
    }
    levels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::vd::nearest_site_bruteforce;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_site_build() {
        let sites =
            vec![WeightedSite::new(0, -1.0, -1.0, 0.0), WeightedSite::new(1, 1.0, -1.0, 0.0)];
        let d = build_vdplus(&sites).unwrap();
        assert_eq!(d.vd().faces.len(), 2);
        assert_eq!(d.vd().validate(), Ok(()));
        assert_eq!(d.levels.len(), 2);
    }

    #[test]
    fn stacked_pair_one_face() {
        let sites =
            vec![WeightedSite::new(0, 0.0, -1.0, 0.0), WeightedSite::new(1, 0.0, -2.0, 0.0)];
        let d = build_vdplus(&sites).unwrap();
        assert_eq!(d.vd().faces.len(), 1);
        assert_eq!(d.vd().faces[0].site, 0);
        assert_eq!(d.vd().sites.len(), 2);
    }

    #[test]
    fn duplicate_sites_dedupe() {
        let sites = vec![
            WeightedSite::new(0, 0.5, -1.0, 0.3),
            WeightedSite::new(1, 0.5, -1.0, 0.1),
            WeightedSite::new(2, 0.5, -1.0, 0.1),
        ];
        let d = build_vdplus(&sites).unwrap();
        assert_eq!(d.vd().faces.len(), 1);
        assert_eq!(d.vd().faces[0].site, 1, "min weight then min id wins");
        assert_eq!(d.vd().sites.len(), 3);
    }

    #[test]
    fn random_build_valid_and_line_owners_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [3usize, 7, 20, 60] {
            let sites: Vec<WeightedSite> = (0..n)
                .map(|i| {
                    WeightedSite::new(
                        i,
                        rng.gen_range(-5.0..5.0),
                        rng.gen_range(-3.0..-0.05),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let d = build_vdplus(&sites).unwrap();
            assert_eq!(d.vd().validate(), Ok(()), "n={n}");
            for _ in 0..300 {
                let x = rng.gen_range(-8.0..8.0);
                let q = Point::new(x, 0.0);
                let owner = d.vd().faces[d.vd().face_at_line(x)].site;
                let od = d.vd().site(owner).dist(q);
                let (bid, bd) = nearest_site_bruteforce(&sites, q).unwrap();
                assert!(
                    (od - bd).abs() <= 1e-7 * (1.0 + bd.abs()),
                    "line owner mismatch at {q:?}: {owner} vs {bid} (n={n})"
                );
            }
            let (v, e, f) = d.vd().euler_counts();
            assert_eq!(v as i64 - e as i64 + f as i64, 1, "euler failed at n={n}");
            assert!(d.vd().arcs.len() + d.vd().faces.len() <= 20 * n);
        }
    }
}
