//! Single-source shortest paths in weighted unit-disk graphs.
//!
//! The plane is covered by a grid of side-1/2 cells, so any two points in a
//! cell are adjacent in the graph and all neighbors of a point lie in the
//! 5x5 patch around its cell. The driver repeatedly extracts the minimum
//! tentative distance, settles that point's whole cell with a First Update
//! (patch -> cell), pushes the settled cell back out with a Second Update
//! (cell -> patch), and retires the cell.
//!
//! Each cell-pair update sorts the sources by snapshot distance, partitions
//! the targets by their first (smallest-rank) unit-distance neighbor, and
//! answers the per-target argmin of `dist'[a] + ||a - b||` with one
//! insertion-only additively-weighted nearest-neighbor structure over the
//! sources mapped below a separating axis-parallel line. Same-cell updates
//! (every pair is an edge) use a horizontal-median recursion with static
//! diagrams instead.
//!
//! [`dijkstra_baseline`] runs textbook Dijkstra on the explicit edge list
//! and is the correctness oracle for everything here.

use crate::error::{NnError, SsspError};
use crate::geom::{OrdF64, Point, WeightedSite};
use crate::awnn::DynamicNn;
use crate::vd::build::build_vdplus_full;
use crate::vd::locate::locate;
use std::collections::{BinaryHeap, HashMap};

/// Grid of square cells with side 1/2; cells are half-open boxes
/// `[i/2, (i+1)/2) x [j/2, (j+1)/2)`.
#[derive(Debug, Clone, Default)]
pub struct GridIndex {
    pub cells: HashMap<(i32, i32), Vec<usize>>,
    pub cell_of: Vec<(i32, i32)>,
}

/// Cell coordinates of a point.
pub fn cell_of_point(p: Point) -> (i32, i32) {
    ((2.0 * p.x).floor() as i32, (2.0 * p.y).floor() as i32)
}

/// The 5x5 patch of cells centered on `c`, row-major.
pub fn patch_cells(c: (i32, i32)) -> impl Iterator<Item = (i32, i32)> {
    (-2..=2).flat_map(move |dj| (-2..=2).map(move |di| (c.0 + di, c.1 + dj)))
}

/// Index the points into grid cells.
pub fn build_grid(points: &[Point]) -> GridIndex {
    let mut g = GridIndex { cells: HashMap::new(), cell_of: Vec::with_capacity(points.len()) };
    for (i, p) in points.iter().enumerate() {
        let c = cell_of_point(*p);
        g.cells.entry(c).or_default().push(i);
        g.cell_of.push(c);
    }
    g
}

/// Distance/predecessor tables of one SSSP run.
#[derive(Debug, Clone)]
pub struct DistTable {
    pub dist: Vec<f64>,
    pub pred: Vec<Option<usize>>,
}

impl DistTable {
    fn new(n: usize, s: usize) -> Self {
        let mut dist = vec![f64::INFINITY; n];
        dist[s] = 0.0;
        DistTable { dist, pred: vec![None; n] }
    }
}

/// Operation counters of one SSSP run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SsspStats {
    pub heap_pushes: u64,
    pub heap_pops: u64,
    pub cells_settled: u64,
    pub update_calls: u64,
    pub patch_point_sum: u64,
    pub nn_inserts: u64,
    pub nn_queries: u64,
    pub fallback_edges: u64,
}

/// Rigid frame mapping a cell-pair separator onto the x-axis with the
/// sources strictly below: a quarter-turn rotation plus a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    /// Number of counterclockwise quarter turns (0..4).
    pub quarter_turns: u8,
    pub tx: f64,
    pub ty: f64,
}

impl Isometry {
    pub fn apply(&self, p: Point) -> Point {
        let r = match self.quarter_turns & 3 {
            0 => p,
            1 => Point::new(-p.y, p.x),
            2 => Point::new(-p.x, -p.y),
            _ => Point::new(p.y, -p.x),
        };
        Point::new(r.x + self.tx, r.y + self.ty)
    }
}

/// Choose the separator and frame for a source cell / destination cell
/// pair. Prefers the source cell's open edges (right, top) so sources land
/// strictly below the line; otherwise sources exactly on the separating
/// grid line are reported for direct handling.
///
/// Returns `(iso, on_line_sep)` where `on_line_sep(p)` is true when a
/// source point sits exactly on the separator.
pub fn separator_isometry(src: (i32, i32), dst: (i32, i32)) -> Result<Isometry, SsspError> {
    if src == dst {
        return Err(SsspError::NotSeparated);
    }
    if dst.0 > src.0 {
        // vertical line x = (src.0 + 1)/2; sources strictly left
        let sep = (src.0 + 1) as f64 / 2.0;
        // (x, y) -> (-y, x - sep): rotation by +90deg then shift
        Ok(Isometry { quarter_turns: 1, tx: 0.0, ty: -sep })
    } else if dst.1 > src.1 {
        // horizontal line y = (src.1 + 1)/2; sources strictly below
        let sep = (src.1 + 1) as f64 / 2.0;
        Ok(Isometry { quarter_turns: 0, tx: 0.0, ty: -sep })
    } else if dst.0 < src.0 {
        // vertical line x = src.0/2; sources right, may touch the line
        let sep = src.0 as f64 / 2.0;
        // (x, y) -> (y, sep - x): rotation by -90deg then shift
        Ok(Isometry { quarter_turns: 3, tx: 0.0, ty: sep })
    } else {
        // horizontal line y = src.1/2; sources above, may touch the line
        let sep = src.1 as f64 / 2.0;
        // (x, y) -> (-x, sep - y): rotation by 180deg then shift
        Ok(Isometry { quarter_turns: 2, tx: 0.0, ty: sep })
    }
}

/// Exact first-neighbor partition: `part[i]` holds the targets whose
/// smallest-rank unit-distance neighbor in the ranked sources is `i`.
/// Targets with no neighbor appear nowhere.
///
/// Implemented by divide-and-conquer over the ranked prefix: an unweighted
/// diagram of the lower half answers "any neighbor within distance 1?"
/// per target, routing it left or right.
pub fn first_neighbor_partition(
    sources: &[Point],
    targets: &[(usize, Point)],
    iso: &Isometry,
) -> Result<Vec<Vec<usize>>, SsspError> {
    let mut part: Vec<Vec<usize>> = vec![Vec::new(); sources.len()];
    if sources.is_empty() || targets.is_empty() {
        return Ok(part);
    }
    rec_partition(sources, 0, sources.len(), targets, iso, &mut part)?;
    Ok(part)
}

fn rec_partition(
    sources: &[Point],
    lo: usize,
    hi: usize,
    targets: &[(usize, Point)],
    iso: &Isometry,
    part: &mut Vec<Vec<usize>>,
) -> Result<(), SsspError> {
    if targets.is_empty() {
        return Ok(());
    }
    if hi - lo == 1 {
        for (ti, p) in targets {
            if sources[lo].dist(*p) <= 1.0 + 1e-12 {
                part[lo].push(*ti);
            }
        }
        return Ok(());
    }
    let mid = (lo + hi) / 2;
    // Unweighted half-plane diagram of the lower-ranked half.
    let half: Vec<WeightedSite> = (lo..mid)
        .map(|i| {
            let m = iso.apply(sources[i]);
            WeightedSite::new(i, m.x, m.y, 0.0)
        })
        .collect();
    let built = build_vdplus_full(&half, 0x9A17 ^ ((lo as u64) << 24 | hi as u64))
        .map_err(|e| SsspError::Nn(NnError::Vd(e)))?;
    let loc = built.diagram.locator();
    let mut left: Vec<(usize, Point)> = Vec::new();
    let mut right: Vec<(usize, Point)> = Vec::new();
    for (ti, p) in targets {
        let q = iso.apply(*p);
        let (_, d) = locate(&loc, q).map_err(|e| SsspError::Nn(NnError::Vd(e)))?;
        if d <= 1.0 + 1e-12 {
            left.push((*ti, *p));
        } else {
            right.push((*ti, *p));
        }
    }
    rec_partition(sources, lo, mid, &left, iso, part)?;
    rec_partition(sources, mid, hi, &right, iso, part)?;
    Ok(())
}

/// One separated cell-pair update: relax every target in `dst_ids` through
/// its best source in `src_ids` under the snapshot distances.
#[allow(clippy::too_many_arguments)]
pub fn update_pair(
    points: &[Point],
    src_ids: &[usize],
    dst_ids: &[usize],
    src_cell: (i32, i32),
    dst_cell: (i32, i32),
    dist: &mut DistTable,
    stats: &mut SsspStats,
) -> Result<(), SsspError> {
    stats.update_calls += 1;
    let iso = separator_isometry(src_cell, dst_cell)?;

    // Snapshot and rank the reachable sources.
    let mut ranked: Vec<(usize, f64)> = src_ids
        .iter()
        .filter(|&&a| dist.dist[a].is_finite())
        .map(|&a| (a, dist.dist[a]))
        .collect();
    if ranked.is_empty() {
        return Ok(());
    }
    ranked.sort_by(|x, y| (OrdF64(x.1), x.0).cmp(&(OrdF64(y.1), y.0)));

    // Sources mapped exactly onto the separator cannot live below the line
    // in the half-plane structure; relax their targets directly.
    let mut below: Vec<(usize, f64)> = Vec::new();
    for &(a, da) in &ranked {
        let m = iso.apply(points[a]);
        if m.y < 0.0 {
            below.push((a, da));
        } else {
            stats.fallback_edges += 1;
            for &b in dst_ids {
                let w = points[a].dist(points[b]);
                if w <= 1.0 + 1e-12 {
                    relax(dist, b, a, da + w);
                }
            }
        }
    }
    if below.is_empty() {
        return Ok(());
    }

    let sources: Vec<Point> = below.iter().map(|&(a, _)| points[a]).collect();
    let targets: Vec<(usize, Point)> = dst_ids.iter().map(|&b| (b, points[b])).collect();
    let part = first_neighbor_partition(&sources, &targets, &iso)?;

    // One insertion-only NN structure over the ranked sources, inserted in
    // reverse rank order; targets in part[i] are answered when the i-th
    // source joins.
    let mut nn = DynamicNn::new();
    let mut nn_id_to_src: Vec<usize> = Vec::with_capacity(below.len());
    for i in (0..below.len()).rev() {
        let (a, da) = below[i];
        let m = iso.apply(points[a]);
        nn.insert(m.x, m.y, da).map_err(SsspError::Nn)?;
        nn_id_to_src.push(a);
        stats.nn_inserts += 1;
        for &b in &part[i] {
            let q = iso.apply(points[b]);
            let (nid, nd) = nn.query(q).map_err(SsspError::Nn)?;
            stats.nn_queries += 1;
            // nn ids count from 0 in insertion order
            let a_star = nn_id_to_src[nid];
            let w = points[a_star].dist(points[b]);
            if w <= 1.0 + 1e-9 {
                relax(dist, b, a_star, nd);
            } else {
                // Numerical safety net: the partition guarantees an edge to
                // the anchor source.
                stats.fallback_edges += 1;
                let wa = points[a].dist(points[b]);
                relax(dist, b, a, da + wa);
            }
        }
    }
    Ok(())
}

fn relax(dist: &mut DistTable, b: usize, via: usize, val: f64) {
    if val < dist.dist[b] {
        dist.dist[b] = val;
        dist.pred[b] = Some(via);
    }
}

/// Same-cell update: every pair in the cell is an edge. Horizontal-median
/// divide-and-conquer; cross relaxations go through static diagrams, tiny
/// or degenerate groups fall back to the direct scan.
pub fn same_cell_update(
    points: &[Point],
    ids: &[usize],
    dist: &mut DistTable,
    stats: &mut SsspStats,
) -> Result<(), SsspError> {
    stats.update_calls += 1;
    let snapshot: Vec<f64> = ids.iter().map(|&i| dist.dist[i]).collect();
    rec_same_cell(points, ids, &snapshot, dist, stats)
}

fn rec_same_cell(
    points: &[Point],
    ids: &[usize],
    snap: &[f64],
    dist: &mut DistTable,
    stats: &mut SsspStats,
) -> Result<(), SsspError> {
    let k = ids.len();
    if k <= 1 {
        return Ok(());
    }
    if k <= 16 {
        for (bi, &b) in ids.iter().enumerate() {
            for (ai, &a) in ids.iter().enumerate() {
                if ai != bi && snap[ai].is_finite() {
                    relax(dist, b, a, snap[ai] + points[a].dist(points[b]));
                }
            }
        }
        return Ok(());
    }
    // Split at a horizontal gap around the median y.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| points[ids[i]].y.total_cmp(&points[ids[j]].y));
    let mid = k / 2;
    let y_lo = points[ids[order[mid - 1]]].y;
    let y_hi = points[ids[order[mid]]].y;
    if y_hi - y_lo <= 1e-12 {
        // No usable gap (many identical y): direct scan.
        for (bi, &b) in ids.iter().enumerate() {
            for (ai, &a) in ids.iter().enumerate() {
                if ai != bi && snap[ai].is_finite() {
                    relax(dist, b, a, snap[ai] + points[a].dist(points[b]));
                }
            }
        }
        return Ok(());
    }
    let sep = 0.5 * (y_lo + y_hi);
    let (mut lower, mut upper): (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
    let (mut snap_lower, mut snap_upper): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for (i, &id) in ids.iter().enumerate() {
        if points[id].y < sep {
            lower.push(id);
            snap_lower.push(snap[i]);
        } else {
            upper.push(id);
            snap_upper.push(snap[i]);
        }
    }

    // Cross relaxations in both directions via static diagrams.
    cross_relax(points, &lower, &snap_lower, &upper, sep, false, dist, stats)?;
    cross_relax(points, &upper, &snap_upper, &lower, sep, true, dist, stats)?;

    rec_same_cell(points, &lower, &snap_lower, dist, stats)?;
    rec_same_cell(points, &upper, &snap_upper, dist, stats)?;
    Ok(())
}

/// Relax all `dst` through the diagram of `src` (weights = snapshots),
/// mapped so the sources are strictly below the line. `flip` mirrors the
/// frame for the upper-as-sources direction.
#[allow(clippy::too_many_arguments)]
fn cross_relax(
    points: &[Point],
    src: &[usize],
    src_snap: &[f64],
    dst: &[usize],
    sep: f64,
    flip: bool,
    dist: &mut DistTable,
    stats: &mut SsspStats,
) -> Result<(), SsspError> {
    let map = |p: Point| if flip { Point::new(p.x, sep - p.y) } else { Point::new(p.x, p.y - sep) };
    let sites: Vec<WeightedSite> = src
        .iter()
        .zip(src_snap)
        .filter(|(_, d)| d.is_finite())
        .map(|(&a, &d)| {
            let m = map(points[a]);
            WeightedSite::new(a, m.x, m.y, d)
        })
        .collect();
    if sites.is_empty() || dst.is_empty() {
        return Ok(());
    }
    let built = build_vdplus_full(&sites, 0x5A3E ^ sites.len() as u64)
        .map_err(|e| SsspError::Nn(NnError::Vd(e)))?;
    let loc = built.diagram.locator();
    for &b in dst {
        let q = map(points[b]);
        let (a_star, val) = locate(&loc, q).map_err(|e| SsspError::Nn(NnError::Vd(e)))?;
        stats.nn_queries += 1;
        relax(dist, b, a_star, val);
    }
    Ok(())
}

/// Unit-disk edges via the grid: all pairs at distance <= 1.
pub fn build_udg_edges(points: &[Point]) -> Vec<(usize, usize, f64)> {
    let grid = build_grid(points);
    let mut edges = Vec::new();
    for (i, p) in points.iter().enumerate() {
        for c in patch_cells(grid.cell_of[i]) {
            if let Some(ids) = grid.cells.get(&c) {
                for &j in ids {
                    if j > i {
                        let w = p.dist(points[j]);
                        if w <= 1.0 {
                            edges.push((i, j, w));
                        }
                    }
                }
            }
        }
    }
    edges
}

/// Textbook Dijkstra on the explicit unit-disk edge list (the oracle).
pub fn dijkstra_baseline(points: &[Point], s: usize) -> Result<DistTable, SsspError> {
    if s >= points.len() {
        return Err(SsspError::UnknownSource(s, points.len()));
    }
    let edges = build_udg_edges(points);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); points.len()];
    for (i, j, w) in edges {
        adj[i].push((j, w));
        adj[j].push((i, w));
    }
    let mut dt = DistTable::new(points.len(), s);
    let mut heap: BinaryHeap<std::cmp::Reverse<(OrdF64, usize)>> = BinaryHeap::new();
    heap.push(std::cmp::Reverse((OrdF64(0.0), s)));
    while let Some(std::cmp::Reverse((OrdF64(d), u))) = heap.pop() {
        if d > dt.dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dt.dist[v] {
                dt.dist[v] = nd;
                dt.pred[v] = Some(u);
                heap.push(std::cmp::Reverse((OrdF64(nd), v)));
            }
        }
    }
    Ok(dt)
}

/// The grid-based SSSP driver.
pub fn sssp_wangxue(points: &[Point], s: usize) -> Result<DistTable, SsspError> {
    sssp_wangxue_with_stats(points, s).map(|(d, _)| d)
}

pub fn sssp_wangxue_with_stats(
    points: &[Point],
    s: usize,
) -> Result<(DistTable, SsspStats), SsspError> {
    if s >= points.len() {
        return Err(SsspError::UnknownSource(s, points.len()));
    }
    let n = points.len();
    let grid = build_grid(points);
    let mut dist = DistTable::new(n, s);
    let mut stats = SsspStats::default();
    let mut cell_live: HashMap<(i32, i32), bool> =
        grid.cells.keys().map(|&c| (c, true)).collect();
    let mut active = vec![true; n];
    let mut heap: BinaryHeap<std::cmp::Reverse<(OrdF64, usize)>> = BinaryHeap::new();
    heap.push(std::cmp::Reverse((OrdF64(0.0), s)));
    stats.heap_pushes += 1;
    let mut settled_min = f64::NEG_INFINITY;

    while let Some(std::cmp::Reverse((OrdF64(d), c))) = heap.pop() {
        stats.heap_pops += 1;
        if !active[c] || d > dist.dist[c] {
            continue;
        }
        debug_assert!(d >= settled_min - 1e-9, "extraction order must be monotone");
        settled_min = settled_min.max(d);
        let cc = grid.cell_of[c];
        stats.cells_settled += 1;

        // Live points per patch cell, in row-major patch order.
        let patch: Vec<((i32, i32), Vec<usize>)> = patch_cells(cc)
            .filter(|pc| *cell_live.get(pc).unwrap_or(&false))
            .map(|pc| {
                let ids: Vec<usize> =
                    grid.cells[&pc].iter().copied().filter(|&i| active[i]).collect();
                (pc, ids)
            })
            .filter(|(_, ids)| !ids.is_empty())
            .collect();
        let cell_ids: Vec<usize> =
            patch.iter().find(|(pc, _)| *pc == cc).map(|(_, v)| v.clone()).unwrap_or_default();
        stats.patch_point_sum += patch.iter().map(|(_, v)| v.len() as u64).sum::<u64>();

        let before: Vec<f64> = cell_ids.iter().map(|&i| dist.dist[i]).collect();

        // First Update: patch -> cell.
        for (pc, ids) in &patch {
            if *pc == cc {
                same_cell_update(points, ids, &mut dist, &mut stats)?;
            } else {
                update_pair(points, ids, &cell_ids, *pc, cc, &mut dist, &mut stats)?;
            }
        }
        // Second Update: cell -> patch.
        for (pc, ids) in &patch {
            if *pc == cc {
                same_cell_update(points, ids, &mut dist, &mut stats)?;
            } else {
                update_pair(points, &cell_ids, ids, cc, *pc, &mut dist, &mut stats)?;
            }
        }

        // Push improved tentative distances, retire the settled cell.
        for (pc, ids) in &patch {
            for &i in ids {
                if *pc == cc {
                    active[i] = false;
                } else if dist.dist[i].is_finite() {
                    heap.push(std::cmp::Reverse((OrdF64(dist.dist[i]), i)));
                    stats.heap_pushes += 1;
                }
            }
        }
        let _ = before;
        cell_live.insert(cc, false);
    }
    Ok((dist, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        assert_eq!(cell_of_point(Point::new(0.3, 0.7)), (0, 1));
        // half-open rule
        assert_eq!(cell_of_point(Point::new(0.5, 0.5)), (1, 1));
        let patch: Vec<_> = patch_cells((0, 0)).collect();
        assert_eq!(patch.len(), 25);
        assert!(patch.contains(&(-2, -2)) && patch.contains(&(2, 2)));
    }

    #[test]
    fn chain_distances() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(0.9, 0.0), Point::new(1.8, 0.0)];
        let edges = build_udg_edges(&pts);
        assert_eq!(edges.len(), 2, "1.8 > 1 so the long chord is absent");
        let d = dijkstra_baseline(&pts, 0).unwrap();
        assert_eq!(d.dist, vec![0.0, 0.9, 1.8]);
        let (w, _) = sssp_wangxue_with_stats(&pts, 0).unwrap();
        for (a, b) in w.dist.iter().zip(&d.dist) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn exact_unit_distance_is_an_edge() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        let edges = build_udg_edges(&pts);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].2, 1.0);
    }

    #[test]
    fn unreachable_cluster_stays_infinite() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.4, 0.0),
        ];
        let d = sssp_wangxue(&pts, 0).unwrap();
        assert!(d.dist[1].is_finite());
        assert!(d.dist[2].is_infinite() && d.dist[3].is_infinite());
    }

    #[test]
    fn unknown_source_rejected() {
        let pts = vec![Point::new(0.0, 0.0)];
        assert!(matches!(sssp_wangxue(&pts, 3), Err(SsspError::UnknownSource(3, 1))));
    }

    #[test]
    fn separator_strictness() {
        // Destination right of source: sources map strictly below.
        let iso = separator_isometry((0, 0), (1, 0)).unwrap();
        let m = iso.apply(Point::new(0.49, 0.2));
        assert!(m.y < 0.0);
        let d = iso.apply(Point::new(0.5, 0.2));
        assert!(d.y >= 0.0);
        // Destination left: a source exactly on its cell's closed left edge
        // maps onto the line (y = 0), to be handled directly.
        let iso = separator_isometry((0, 0), (-1, 0)).unwrap();
        let on = iso.apply(Point::new(0.0, 0.3));
        assert_eq!(on.y, 0.0);
        let inside = iso.apply(Point::new(0.1, 0.3));
        assert!(inside.y < 0.0);
        // Isometries preserve distances.
        let p = Point::new(0.3, 0.1);
        let q = Point::new(0.45, 0.4);
        for iso in [
            separator_isometry((0, 0), (1, 0)).unwrap(),
            separator_isometry((0, 0), (0, 1)).unwrap(),
            separator_isometry((0, 0), (-1, 0)).unwrap(),
            separator_isometry((0, 0), (0, -1)).unwrap(),
        ] {
            assert!((iso.apply(p).dist(iso.apply(q)) - p.dist(q)).abs() < 1e-12);
        }
    }
}
