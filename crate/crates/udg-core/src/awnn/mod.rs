//! Insertion-only additively-weighted nearest-neighbor structures with a
//! separating line: inserts strictly below the x-axis, queries on or above
//! it.
//!
//! Four interchangeable solvers:
//!
//! - [`BruteNn`]: linear scan per query (test oracle).
//! - [`LogMethodNn`]: the classical logarithmic method — static diagrams of
//!   doubling sizes, rebuilt on the binary-carry pattern.
//! - [`DynamicNn`]: the amortized recursive structure — a small buffer
//!   `D(P')` plus a static diagram of `P \ P'` with a point locator,
//!   maintaining `|P'| <= |P| / log2 |P|`; when the invariant breaks, the
//!   buffer is flattened into a diagram, merged into the static part in
//!   linear time, and the locator hierarchy reused.
//! - [`offline_solve`]: a complete binary tree over the insertion sequence;
//!   each node holds the diagram of its leaves (built bottom-up by merges),
//!   and a query at time `i` consults the O(log n) canonical nodes covering
//!   the prefix.
//!
//! All solvers resolve ties to the smaller insertion id.

use crate::error::NnError;
use crate::geom::{Point, SiteId, WeightedSite};
use crate::io::NnOp;
use crate::merge::{merge_vdplus_full, MergeOptions};
use crate::vd::build::{build_vdplus_full, chain_levels, BuildStats, BuiltDiagram};
use crate::vd::locate::locate;
use crate::vd::spokes::add_spokes;
use crate::vd::Locator;
use std::sync::Arc;

/// Base-case threshold: structures of at most this many points answer by
/// linear scan.
pub const FLAT_LIMIT: usize = 8;

/// Operation counters shared by the solvers.
#[derive(Debug, Clone, Copy, Default)]
pub struct NnStats {
    pub inserts: u64,
    pub queries: u64,
    pub locates: u64,
    pub merges: u64,
    pub trace_steps: u64,
    pub flushes: u64,
    /// Sites processed by static rebuilds, weighted by a log factor of the
    /// rebuild size (logarithmic-method work accounting).
    pub rebuild_work: u64,
    /// Peak site slots retained across all static levels.
    pub peak_retained_sites: u64,
}

impl NnStats {
    fn absorb_build(&mut self, b: &BuildStats) {
        self.merges += b.merges;
        self.trace_steps += b.trace_steps;
    }
}

fn check_insert(s: &WeightedSite) -> Result<(), NnError> {
    if !(s.pos.y < 0.0) {
        return Err(NnError::SiteAboveLine(s.id, s.pos.y));
    }
    Ok(())
}

fn check_query(q: Point) -> Result<(), NnError> {
    if q.y < -1e-12 {
        return Err(NnError::QueryBelowLine(q.y));
    }
    Ok(())
}

fn better(a: (SiteId, f64), b: (SiteId, f64)) -> (SiteId, f64) {
    let tol = crate::geom::EPS * (1.0 + a.1.abs().max(b.1.abs()));
    if b.1 < a.1 - tol || ((b.1 - a.1).abs() <= tol && b.0 < a.0) {
        b
    } else {
        a
    }
}

/// Linear-scan oracle over the inserted sites.
#[derive(Debug, Clone, Default)]
pub struct BruteNn {
    sites: Vec<WeightedSite>,
    pub stats: NnStats,
}

impl BruteNn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn insert(&mut self, x: f64, y: f64, w: f64) -> Result<SiteId, NnError> {
        let s = WeightedSite::new(self.sites.len(), x, y, w);
        check_insert(&s)?;
        self.stats.inserts += 1;
        self.sites.push(s);
        Ok(s.id)
    }

    pub fn query(&mut self, q: Point) -> Result<(SiteId, f64), NnError> {
        check_query(q)?;
        self.stats.queries += 1;
        if self.sites.is_empty() {
            return Err(NnError::EmptyStructure);
        }
        let mut best = (self.sites[0].id, self.sites[0].dist(q));
        for s in &self.sites[1..] {
            best = better(best, (s.id, s.dist(q)));
        }
        Ok(best)
    }
}

/// Build a static diagram with perturbation retries, seeded deterministically
/// from the caller-provided nonce.
fn build_static(
    sites: &[WeightedSite],
    nonce: u64,
    stats: &mut NnStats,
) -> Result<BuiltDiagram, NnError> {
    let out = build_vdplus_full(sites, nonce).map_err(NnError::Vd)?;
    stats.absorb_build(&out.stats);
    Ok(out.diagram)
}

// ---------------------------------------------------------------------------
// Logarithmic method.
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct LogBucket {
    sites: Vec<WeightedSite>,
    diagram: BuiltDiagram,
    locator: Locator,
}

/// Bentley's logarithmic method: at most one static bucket per size class
/// `2^k`; insertion carries full buckets into a rebuilt larger bucket.
#[derive(Debug, Default)]
pub struct LogMethodNn {
    buckets: Vec<Option<LogBucket>>,
    count: usize,
    pub stats: NnStats,
}

impl LogMethodNn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.buckets.iter().flatten().map(|b| b.sites.len()).collect()
    }

    pub fn insert(&mut self, x: f64, y: f64, w: f64) -> Result<SiteId, NnError> {
        let s = WeightedSite::new(self.count, x, y, w);
        check_insert(&s)?;
        self.stats.inserts += 1;
        self.count += 1;
        let mut carry = vec![s];
        let mut k = 0usize;
        loop {
            if k == self.buckets.len() {
                self.buckets.push(None);
            }
            match self.buckets[k].take() {
                None => break,
                Some(b) => {
                    carry.extend(b.sites);
                    k += 1;
                }
            }
        }
        let log_factor = (usize::BITS - carry.len().leading_zeros()) as u64;
        self.stats.rebuild_work += carry.len() as u64 * log_factor;
        let diagram = build_static(&carry, (self.count as u64) << 8 | k as u64, &mut self.stats)?;
        let locator = diagram.locator();
        self.buckets[k] = Some(LogBucket { sites: carry, diagram, locator });
        let retained: usize = self.buckets.iter().flatten().map(|b| b.diagram.retained_sites()).sum();
        self.stats.peak_retained_sites = self.stats.peak_retained_sites.max(retained as u64);
        Ok(s.id)
    }

    pub fn query(&mut self, q: Point) -> Result<(SiteId, f64), NnError> {
        check_query(q)?;
        self.stats.queries += 1;
        if self.count == 0 {
            return Err(NnError::EmptyStructure);
        }
        let mut best: Option<(SiteId, f64)> = None;
        for b in self.buckets.iter().flatten() {
            self.stats.locates += 1;
            let hit = locate(&b.locator, q).map_err(NnError::Vd)?;
            best = Some(match best {
                None => hit,
                Some(cur) => better(cur, hit),
            });
        }
        Ok(best.expect("count > 0 implies a bucket"))
    }
}

// ---------------------------------------------------------------------------
// The amortized recursive structure.
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct StaticPart {
    diagram: BuiltDiagram,
    locator: Locator,
}

/// The recursive insertion-only structure: a buffer `D(P')` over recent
/// inserts plus a static diagram of the rest.
#[derive(Debug, Default)]
pub struct DynamicNn {
    total: usize,
    flat: Vec<WeightedSite>,
    buffer: Option<Box<DynamicNn>>,
    static_part: Option<StaticPart>,
    /// All sites ever inserted (original coordinates), for full rebuilds.
    all_sites: Vec<WeightedSite>,
    next_id: usize,
    pub stats: NnStats,
}

impl DynamicNn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Current buffer size `|P'|` (0 when running flat).
    pub fn buffer_len(&self) -> usize {
        match (&self.static_part, &self.buffer) {
            (None, _) => 0,
            (Some(_), Some(b)) => b.len(),
            (Some(_), None) => 0,
        }
    }

    /// Whether the rebuild invariant holds right now.
    pub fn invariant_holds(&self) -> bool {
        if self.total < 4 || self.static_part.is_none() {
            return true;
        }
        let n = self.total as f64;
        (self.buffer_len() as f64) <= n / n.log2()
    }

    /// Site slots retained across static levels, recursively.
    pub fn retained_sites(&self) -> usize {
        let own = self.static_part.as_ref().map_or(0, |sp| sp.diagram.retained_sites());
        own + self.flat.len() + self.buffer.as_ref().map_or(0, |b| b.retained_sites())
    }

    pub fn insert(&mut self, x: f64, y: f64, w: f64) -> Result<SiteId, NnError> {
        let id = self.next_id;
        self.insert_site(WeightedSite::new(id, x, y, w))?;
        self.next_id = id + 1;
        Ok(id)
    }

    pub(crate) fn insert_site(&mut self, s: WeightedSite) -> Result<(), NnError> {
        check_insert(&s)?;
        self.stats.inserts += 1;
        self.all_sites.push(s);
        self.total += 1;
        if self.static_part.is_none() {
            self.flat.push(s);
            if self.flat.len() > FLAT_LIMIT {
                // Base overflow: promote the flat list to a static diagram.
                self.rebuild_all()?;
            }
            self.track_peak();
            return Ok(());
        }
        self.buffer.get_or_insert_with(Default::default).insert_site(s)?;
        if !self.invariant_holds() {
            self.flush()?;
        }
        self.track_peak();
        Ok(())
    }

    fn track_peak(&mut self) {
        let r = self.retained_sites() as u64;
        if r > self.stats.peak_retained_sites {
            self.stats.peak_retained_sites = r;
        }
    }

    /// Rebuild the whole structure from the stored inserts (used for the
    /// first promotion and as the degeneracy fallback).
    fn rebuild_all(&mut self) -> Result<(), NnError> {
        let sites = self.all_sites.clone();
        let diagram = build_static(&sites, 0xD15C0 ^ self.total as u64, &mut self.stats)?;
        let locator = diagram.locator();
        self.static_part = Some(StaticPart { diagram, locator });
        self.flat.clear();
        self.buffer = None;
        Ok(())
    }

    /// Flatten the buffer into a diagram (recursively), merge it into the
    /// static part, rebuild the locator by level reuse, and empty the buffer.
    fn flush(&mut self) -> Result<(), NnError> {
        self.stats.flushes += 1;
        let buffer = match self.buffer.take() {
            Some(b) => b,
            None => return Ok(()),
        };
        let (buf_diag, buf_stats) = buffer.into_diagram()?;
        self.stats.merges += buf_stats.merges;
        self.stats.trace_steps += buf_stats.trace_steps;
        self.stats.locates += buf_stats.locates;
        self.stats.flushes += buf_stats.flushes;

        let sp = self.static_part.take().expect("flush requires a static part");
        match merge_vdplus_full(&sp.diagram.svd, &buf_diag.svd, &MergeOptions::default()) {
            Ok(out) => {
                self.stats.merges += 1;
                self.stats.trace_steps += out.stats.trace_steps as u64;
                let top = Arc::new(add_spokes(out.vd));
                let levels = chain_levels(top.clone(), &sp.diagram.levels);
                let diagram = BuiltDiagram { svd: top, levels };
                let locator = diagram.locator();
                self.static_part = Some(StaticPart { diagram, locator });
                Ok(())
            }
            // Degenerate merge: rebuild everything from scratch with a
            // perturbation (bounded retries inside).
            Err(_) => self.rebuild_all(),
        }
    }

    /// Materialize all stored sites as one diagram, consuming the structure.
    fn into_diagram(mut self: Box<Self>) -> Result<(BuiltDiagram, NnStats), NnError> {
        if self.static_part.is_none() {
            let d = build_static(&self.flat, 0xF1A7 ^ self.total as u64, &mut self.stats)?;
            return Ok((d, self.stats));
        }
        if self.buffer.is_some() {
            self.flush()?;
        }
        let sp = self.static_part.take().expect("static part present");
        Ok((sp.diagram, self.stats))
    }

    pub fn query(&mut self, q: Point) -> Result<(SiteId, f64), NnError> {
        check_query(q)?;
        self.stats.queries += 1;
        if self.total == 0 {
            return Err(NnError::EmptyStructure);
        }
        let mut best: Option<(SiteId, f64)> = None;
        if let Some(sp) = &self.static_part {
            self.stats.locates += 1;
            let hit = locate(&sp.locator, q).map_err(NnError::Vd)?;
            best = Some(hit);
        }
        for s in &self.flat {
            let hit = (s.id, s.dist(q));
            best = Some(match best {
                None => hit,
                Some(cur) => better(cur, hit),
            });
        }
        if let Some(b) = self.buffer.as_mut() {
            if !b.is_empty() {
                let hit = b.query(q)?;
                best = Some(match best {
                    None => hit,
                    Some(cur) => better(cur, hit),
                });
            }
        }
        Ok(best.expect("total > 0"))
    }
}

// ---------------------------------------------------------------------------
// Offline tree solver.
// ---------------------------------------------------------------------------

struct TreeNode {
    lo: usize,
    hi: usize,
    diagram: BuiltDiagram,
    locator: Locator,
    left: Option<Box<TreeNode>>,
    right: Option<Box<TreeNode>>,
}

fn build_tree(
    sites: &[WeightedSite],
    lo: usize,
    hi: usize,
    stats: &mut NnStats,
) -> Result<TreeNode, NnError> {
    if hi - lo == 1 {
        let diagram = build_static(&sites[lo..hi], lo as u64, stats)?;
        let locator = diagram.locator();
        return Ok(TreeNode { lo, hi, diagram, locator, left: None, right: None });
    }
    let mid = (lo + hi) / 2;
    let left = build_tree(sites, lo, mid, stats)?;
    let right = build_tree(sites, mid, hi, stats)?;
    let merged = merge_vdplus_full(
        &left.diagram.svd,
        &right.diagram.svd,
        &MergeOptions::default(),
    );
    let diagram = match merged {
        Ok(out) => {
            stats.merges += 1;
            stats.trace_steps += out.stats.trace_steps as u64;
            let top = Arc::new(add_spokes(out.vd));
            let levels = chain_levels(top.clone(), &left.diagram.levels);
            BuiltDiagram { svd: top, levels }
        }
        // Degenerate merge at this node: rebuild the range from scratch.
        Err(_) => build_static(&sites[lo..hi], (lo as u64) << 20 | hi as u64, stats)?,
    };
    let locator = diagram.locator();
    Ok(TreeNode { lo, hi, diagram, locator, left: Some(Box::new(left)), right: Some(Box::new(right)) })
}

fn canonical_query(
    node: &TreeNode,
    prefix: usize,
    q: Point,
    best: &mut Option<(SiteId, f64)>,
    stats: &mut NnStats,
) -> Result<(), NnError> {
    if node.lo >= prefix {
        return Ok(());
    }
    if node.hi <= prefix {
        stats.locates += 1;
        let hit = locate(&node.locator, q).map_err(NnError::Vd)?;
        *best = Some(match *best {
            None => hit,
            Some(cur) => better(cur, hit),
        });
        return Ok(());
    }
    if let Some(l) = &node.left {
        canonical_query(l, prefix, q, best, stats)?;
    }
    if let Some(r) = &node.right {
        canonical_query(r, prefix, q, best, stats)?;
    }
    Ok(())
}

/// Solve an offline op sequence with the complete-binary-tree structure.
/// Each query is answered with respect to the inserts preceding it.
pub fn offline_solve(ops: &[NnOp]) -> Result<Vec<(SiteId, f64)>, NnError> {
    offline_solve_with_stats(ops).map(|(a, _)| a)
}

pub fn offline_solve_with_stats(ops: &[NnOp]) -> Result<(Vec<(SiteId, f64)>, NnStats), NnError> {
    let mut stats = NnStats::default();
    let mut sites: Vec<WeightedSite> = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        match op {
            NnOp::Insert { x, y, w } => {
                let s = WeightedSite::new(sites.len(), *x, *y, *w);
                check_insert(&s)?;
                sites.push(s);
            }
            NnOp::Query { .. } => {
                if sites.is_empty() {
                    return Err(NnError::QueryBeforeAnyInsert(i));
                }
            }
        }
    }
    let root = if sites.is_empty() { None } else { Some(build_tree(&sites, 0, sites.len(), &mut stats)?) };

    let mut answers = Vec::new();
    let mut inserted = 0usize;
    for op in ops {
        match op {
            NnOp::Insert { .. } => inserted += 1,
            NnOp::Query { x, y } => {
                let q = Point::new(*x, *y);
                check_query(q)?;
                stats.queries += 1;
                let mut best = None;
                canonical_query(root.as_ref().expect("query after insert"), inserted, q, &mut best, &mut stats)?;
                answers.push(best.expect("prefix non-empty"));
            }
        }
    }
    stats.inserts = sites.len() as u64;
    Ok((answers, stats))
}

/// Replay an op sequence against any solver-like closure pair; used by the
/// CLI and tests to run the same sequence through different solvers.
pub fn replay_ops<I, Q>(
    ops: &[NnOp],
    mut insert: I,
    mut query: Q,
) -> Result<Vec<(SiteId, f64)>, NnError>
where
    I: FnMut(f64, f64, f64) -> Result<SiteId, NnError>,
    Q: FnMut(Point) -> Result<(SiteId, f64), NnError>,
{
    let mut answers = Vec::new();
    for op in ops {
        match op {
            NnOp::Insert { x, y, w } => {
                insert(*x, *y, *w)?;
            }
            NnOp::Query { x, y } => {
                answers.push(query(Point::new(*x, *y))?);
            }
        }
    }
    Ok(answers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_basics() {
        let mut b = BruteNn::new();
        assert!(matches!(b.query(Point::new(0.0, 1.0)), Err(NnError::EmptyStructure)));
        b.insert(0.0, -1.0, 0.0).unwrap();
        assert_eq!(b.query(Point::new(0.0, 1.0)).unwrap(), (0, 2.0));
        b.insert(2.0, -1.0, 1.0).unwrap();
        let (id, d) = b.query(Point::new(0.0, 1.0)).unwrap();
        assert_eq!((id, d), (0, 2.0));
        assert!(matches!(b.insert(0.0, 1.0, 0.0), Err(NnError::SiteAboveLine(_, _))));
    }

    #[test]
    fn dynamic_flat_base_case() {
        let mut d = DynamicNn::new();
        for i in 0..8 {
            d.insert(i as f64, -1.0, 0.0).unwrap();
        }
        // still flat: no static part
        assert!(d.static_part.is_none());
        assert_eq!(d.len(), 8);
        let (id, _) = d.query(Point::new(0.1, 0.5)).unwrap();
        assert_eq!(id, 0);
        d.insert(8.0, -1.0, 0.0).unwrap();
        assert!(d.static_part.is_some());
    }

    #[test]
    fn log_method_bucket_carry() {
        let mut l = LogMethodNn::new();
        for i in 0..16 {
            l.insert(i as f64 * 0.37 - 3.0, -1.0 - 0.1 * (i % 5) as f64, 0.1 * (i % 3) as f64)
                .unwrap();
        }
        // After 2^k inserts exactly one bucket.
        assert_eq!(l.bucket_sizes(), vec![16]);
    }

    #[test]
    fn solvers_agree_small() {
        let ops = vec![
            NnOp::Insert { x: 0.0, y: -1.0, w: 0.0 },
            NnOp::Query { x: 0.0, y: 1.0 },
            NnOp::Insert { x: 2.0, y: -1.0, w: 1.0 },
            NnOp::Insert { x: -1.0, y: -2.0, w: -0.5 },
            NnOp::Query { x: 1.0, y: 0.5 },
            NnOp::Query { x: -2.0, y: 0.0 },
        ];
        let off = offline_solve(&ops).unwrap();
        let mut dynn = DynamicNn::new();
        let mut dyn_ans = Vec::new();
        for op in &ops {
            match op {
                NnOp::Insert { x, y, w } => {
                    dynn.insert(*x, *y, *w).unwrap();
                }
                NnOp::Query { x, y } => dyn_ans.push(dynn.query(Point::new(*x, *y)).unwrap()),
            }
        }
        assert_eq!(off.len(), dyn_ans.len());
        for (a, b) in off.iter().zip(&dyn_ans) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn query_before_insert_is_an_error() {
        let ops = vec![NnOp::Query { x: 0.0, y: 1.0 }];
        assert!(matches!(offline_solve(&ops), Err(NnError::QueryBeforeAnyInsert(0))));
    }
}
