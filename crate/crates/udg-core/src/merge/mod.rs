//! Linear-time merge of two half-plane diagrams.
//!
//! Given `VD+(S_a)` and `VD+(S_b)` over disjoint site sets, the merged
//! diagram `VD+(S_a u S_b)` is computed in three phases:
//!
//! 1. **Seed sweep.** Both l-edge sequences are swept left to right. On each
//!    overlap of an a-edge (owner `s_a`) and a b-edge (owner `s_b`), the at
//!    most two roots of `B(s_a, s_b)` on the line that fall inside both
//!    edges are contour/line crossings ("seeds"). The sweep also yields the
//!    merged l-edge sequence with per-interval winners.
//! 2. **Contour tracing.** From each unconsumed seed, the contour is traced
//!    upward through the spoke subdivisions of both inputs. Every step
//!    inspects the boundary pieces of the current sub-region on each side
//!    and takes the first crossing along the current bisector: crossing a
//!    Voronoi arc emits a merge vertex and switches that side's active
//!    site; crossing a spoke moves to the adjacent sub-region; reaching the
//!    line consumes the matching seed; otherwise the arm escapes to
//!    infinity. Closed components strictly above the line cannot exist
//!    (every component above the line meets it), so seeding is complete.
//! 3. **Stitching.** Input arcs are split at merge vertices into alive/dead
//!    segments; alive segments and contour edges are bucketed per flanked
//!    input face, and the output faces are assembled by walking endpoint
//!    tokens from each merged l-interval, so only surviving geometry is
//!    ever touched.
//!
//! Degeneracies (roots on l-edge endpoints, tangential crossings, stalled
//! traces) abort with an error; callers that own the input sites retry with
//! a fresh seeded perturbation.

use crate::error::MergeError;
use crate::geom::{
    apollonius_vertices, Bisector, BisectorCurve, BisectorCursor, CurveKind, Point, SiteId,
    WeightedSite,
};
use crate::vd::spokes::SpokedVD;
use crate::vd::{
    classify_or_dominate, ArcIdx, ArcRec, DirArc, Face, FaceIdx, HalfPlaneVD, VertIdx, VertKind,
    Vertex,
};
use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SideTag {
    A,
    B,
}

/// A contour/line crossing discovered by the seed sweep.
#[derive(Debug, Clone)]
pub struct ContourSeed {
    pub point: Point,
    pub site_a: SiteId,
    pub site_b: SiteId,
    /// Host l-edges: face indices in each input diagram.
    pub a_face: FaceIdx,
    pub b_face: FaceIdx,
    /// Crossing parity: whether the a-side wins just left of the seed.
    pub a_closer_left: bool,
}

/// One step of the contour trace, for debug logs and drawings.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub kind: TraceStepKind,
    pub a_site: SiteId,
    pub b_site: SiteId,
    pub p: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStepKind {
    Start,
    CrossEdge,
    CrossSpoke,
    EndAtLine,
    EndAtInfinity,
}

/// Instrumentation counters of one merge.
#[derive(Debug, Clone, Default)]
pub struct MergeStats {
    pub seeds: usize,
    pub contour_edges: usize,
    pub edge_crossings: usize,
    pub spoke_crossings: usize,
    pub max_crossings_per_spoke: u32,
    pub trace_steps: usize,
    /// Emitted merge vertices with their three defining sites.
    pub merge_vertices: Vec<(Point, [SiteId; 3])>,
}

#[derive(Debug, Clone, Default)]
pub struct MergeOptions {
    pub collect_trace: bool,
}

#[derive(Debug)]
pub struct MergeOutcome {
    pub vd: HalfPlaneVD,
    pub stats: MergeStats,
    pub trace: Vec<TraceStep>,
}

/// Merge two spoked half-plane diagrams into `VD+(S_a u S_b)`.
pub fn merge_vdplus(a: &SpokedVD, b: &SpokedVD) -> Result<HalfPlaneVD, MergeError> {
    Ok(merge_vdplus_full(a, b, &MergeOptions::default())?.vd)
}

/// All contour/line crossings between two diagrams, sorted by x.
pub fn ell_intersections(
    a: &HalfPlaneVD,
    b: &HalfPlaneVD,
) -> Result<Vec<ContourSeed>, MergeError> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    Ok(sweep(a, b)?.seeds)
}

/// Full merge with stats and an optional trace log.
pub fn merge_vdplus_full(
    a: &SpokedVD,
    b: &SpokedVD,
    opts: &MergeOptions,
) -> Result<MergeOutcome, MergeError> {
    let mut stats = MergeStats::default();
    let mut trace_log = Vec::new();

    if a.vd.is_empty() || b.vd.is_empty() {
        let (full, other) = if a.vd.is_empty() { (b, a) } else { (a, b) };
        let mut vd = full.vd.clone();
        let mut sites = vd.sites.clone();
        sites.extend(other.vd.sites.iter().copied());
        vd.set_sites(sites);
        return Ok(MergeOutcome { vd, stats, trace: trace_log });
    }

    let sw = sweep(&a.vd, &b.vd)?;
    let tr = trace_all(a, b, &sw.seeds, opts, &mut stats, &mut trace_log)?;
    let vd = stitch(a, b, &sw, tr)?;
    debug_assert_eq!(vd.validate(), Ok(()), "merged diagram failed validation");
    Ok(MergeOutcome { vd, stats, trace: trace_log })
}

// ---------------------------------------------------------------------------
// Phase 1: the l-sweep.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EndTok {
    Seed(usize),
    InVert(SideTag, VertIdx),
    MinusInf,
    PlusInf,
}

#[derive(Debug, Clone)]
struct MInterval {
    side: SideTag,
    face: FaceIdx,
    left: EndTok,
    right: EndTok,
}

struct SweepOut {
    intervals: Vec<MInterval>,
    seeds: Vec<ContourSeed>,
}

fn sample_between(u: f64, v: f64) -> f64 {
    match (u.is_finite(), v.is_finite()) {
        (true, true) => 0.5 * (u + v),
        (true, false) => u + 1.0,
        (false, true) => v - 1.0,
        (false, false) => 0.0,
    }
}

fn sweep(a: &HalfPlaneVD, b: &HalfPlaneVD) -> Result<SweepOut, MergeError> {
    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut x_cur = f64::NEG_INFINITY;
    let mut left_tok = EndTok::MinusInf;
    let mut raw: Vec<MInterval> = Vec::new();
    let mut seeds: Vec<ContourSeed> = Vec::new();

    loop {
        let (_, axr) = a.face_l_range(ia);
        let (_, bxr) = b.face_l_range(ib);
        let seg_end = axr.min(bxr);
        let sa = a.site(a.faces[ia].site);
        let sb = b.site(b.faces[ib].site);

        // Roots of B(sa, sb) on the line inside the open overlap.
        let mut roots: Vec<f64> = Vec::new();
        match classify_or_dominate(sa, sb)
            .map_err(|e| MergeError::DegenerateTangency(format!("sweep bisector: {e}")))?
        {
            Bisector::Empty { .. } => {}
            Bisector::Curve(c) => {
                for p in c.hline_intersections(0.0) {
                    let x = p.x;
                    let tol = 1e-9 * (1.0 + x.abs());
                    if (x_cur.is_finite() && (x - x_cur).abs() <= tol)
                        || (seg_end.is_finite() && (x - seg_end).abs() <= tol)
                    {
                        return Err(MergeError::DegenerateTangency(format!(
                            "contour root at l-edge endpoint x={x}"
                        )));
                    }
                    if x > x_cur && x < seg_end {
                        roots.push(x);
                    }
                }
                if roots.len() == 2
                    && (roots[1] - roots[0]).abs() <= 1e-9 * (1.0 + roots[0].abs())
                {
                    return Err(MergeError::DegenerateTangency(
                        "contour tangent to the line".into(),
                    ));
                }
            }
        }

        let end_tok = if !seg_end.is_finite() {
            EndTok::PlusInf
        } else if axr < bxr {
            EndTok::InVert(SideTag::A, a.faces[ia].rv)
        } else if bxr < axr {
            EndTok::InVert(SideTag::B, b.faces[ib].rv)
        } else {
            return Err(MergeError::DegenerateTangency(format!(
                "coinciding l-vertices of both inputs at x={seg_end}"
            )));
        };

        let mut bounds = vec![x_cur];
        bounds.extend(roots.iter().copied());
        bounds.push(seg_end);
        let mut prev_side: Option<SideTag> = None;
        for k in 0..bounds.len() - 1 {
            let sm = sample_between(bounds[k], bounds[k + 1]);
            let q = Point::new(sm, 0.0);
            let (da, db) = (sa.dist(q), sb.dist(q));
            let side =
                if da < db || (da == db && sa.id < sb.id) { SideTag::A } else { SideTag::B };
            if let Some(ps) = prev_side {
                if ps == side {
                    return Err(MergeError::DegenerateTangency(
                        "winner did not change across a contour root".into(),
                    ));
                }
            }
            prev_side = Some(side);
            let right = if k + 1 < bounds.len() - 1 {
                seeds.push(ContourSeed {
                    point: Point::new(bounds[k + 1], 0.0),
                    site_a: sa.id,
                    site_b: sb.id,
                    a_face: ia,
                    b_face: ib,
                    a_closer_left: side == SideTag::A,
                });
                EndTok::Seed(seeds.len() - 1)
            } else {
                end_tok
            };
            let face = if side == SideTag::A { ia } else { ib };
            raw.push(MInterval { side, face, left: left_tok, right });
            left_tok = right;
        }

        if !seg_end.is_finite() {
            break;
        }
        if axr <= seg_end {
            ia += 1;
        }
        if bxr <= seg_end {
            ib += 1;
        }
        x_cur = seg_end;
    }

    // Coalesce runs won by the same face.
    let mut intervals: Vec<MInterval> = Vec::new();
    for iv in raw {
        match intervals.last_mut() {
            Some(last) if last.side == iv.side && last.face == iv.face => {
                last.right = iv.right;
            }
            _ => intervals.push(iv),
        }
    }
    Ok(SweepOut { intervals, seeds })
}

// ---------------------------------------------------------------------------
// Phase 2: contour tracing.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum PieceEndTok {
    Key(VKey),
    Inf(Point),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum VKey {
    Seed(usize),
    MergeV(VertIdx),
    InV(SideTag, VertIdx),
}

#[derive(Debug, Clone)]
struct ContourEdge {
    curve: BisectorCurve,
    a_face: FaceIdx,
    b_face: FaceIdx,
    t_lo: f64,
    t_hi: f64,
    lo_tok: PieceEndTok,
    hi_tok: PieceEndTok,
}

#[derive(Debug, Clone, Copy)]
struct CutEvent {
    t: f64,
    vert: VertIdx,
    /// Whether the arc survives on the increasing-parameter side of the cut.
    plus_alive: bool,
}

struct TraceOut {
    edges: Vec<ContourEdge>,
    cuts: HashMap<(SideTag, ArcIdx), Vec<CutEvent>>,
    /// Output vertices allocated so far (seed and merge vertices).
    out_verts: Vec<Vertex>,
    seed_vert: Vec<VertIdx>,
}

struct SideState<'v> {
    svd: &'v SpokedVD,
    face: FaceIdx,
    sub: usize,
    active: WeightedSite,
}

#[derive(Debug, Clone, Copy)]
enum Hit {
    Line { t: f64, x: f64 },
    Spoke { t: f64, side: SideTag, new_sub: usize, spoke_idx: usize },
    Arc { t: f64, side: SideTag, arc: ArcIdx, tau: f64, p: Point },
}

impl Hit {
    fn t(&self) -> f64 {
        match self {
            Hit::Line { t, .. } | Hit::Spoke { t, .. } | Hit::Arc { t, .. } => *t,
        }
    }
}

fn param_margin(c: &BisectorCurve, t: f64, spatial: f64) -> f64 {
    let speed = match c.kind {
        CurveKind::Line => 1.0,
        CurveKind::Hyperbola { a, b, .. } => (a * t.sinh()).hypot(b * t.cosh()).max(1e-12),
    };
    spatial / speed
}

/// Candidate crossings of the contour cursor with one side's current
/// sub-region (its arcs, its bounding spokes, and its l-piece).
fn side_candidates(
    cur: &BisectorCursor,
    st: &SideState,
    side: SideTag,
    other_active: &WeightedSite,
    out: &mut Vec<Hit>,
) -> Result<(), MergeError> {
    let vd = &st.svd.vd;
    let sf = &st.svd.faces[st.face];
    let face = &vd.faces[st.face];
    let sr = &sf.subs[st.sub];
    let eps_t = cur.min_progress();

    for pos in sr.start..sr.end {
        let da = face.chain[pos];
        let arc = &vd.arcs[da.arc];
        let other_id = if arc.s_lo() == st.active.id { arc.s_hi() } else { arc.s_lo() };
        let other = *vd.site(other_id);
        match apollonius_vertices(&st.active, other_active, &other) {
            Ok(verts) => {
                for (p, _) in verts {
                    let t = cur.curve.param_of(p);
                    if cur.progress(t) <= eps_t {
                        continue;
                    }
                    let tau = arc.curve.param_of(p);
                    let m = param_margin(&arc.curve, tau, 1e-9 * (1.0 + p.norm()));
                    if tau < arc.t_lo - m || tau > arc.t_hi + m {
                        continue;
                    }
                    out.push(Hit::Arc { t, side, arc: da.arc, tau, p });
                }
            }
            Err(crate::error::GeomError::Degenerate) => {
                for (t, tau, p) in fallback_arc_hits(&cur.curve, &arc.curve, arc.t_lo, arc.t_hi) {
                    if cur.progress(t) > eps_t {
                        out.push(Hit::Arc { t, side, arc: da.arc, tau, p });
                    }
                }
            }
            Err(e) => return Err(MergeError::TraceStall(format!("apollonius failure: {e}"))),
        }
    }

    for (is_left, sp_idx) in [(true, sr.left_spoke), (false, sr.right_spoke)] {
        if let Some(si) = sp_idx {
            let sp = &sf.spokes[si];
            for (t, _tau, _p) in cur.curve.segment_intersections(sp.foot, sp.top) {
                if cur.progress(t) > eps_t {
                    let new_sub = if is_left { st.sub - 1 } else { st.sub + 1 };
                    out.push(Hit::Spoke { t, side, new_sub, spoke_idx: si });
                }
            }
        }
    }

    let xl = match sr.left_spoke {
        Some(si) => sf.spokes[si].foot.x,
        None => vd.face_l_range(st.face).0,
    };
    let xr = match sr.right_spoke {
        Some(si) => sf.spokes[si].foot.x,
        None => vd.face_l_range(st.face).1,
    };
    for p in cur.curve.hline_intersections(0.0) {
        let t = cur.curve.param_of(Point::new(p.x, 0.0));
        if cur.progress(t) > eps_t && p.x >= xl - 1e-9 && p.x <= xr + 1e-9 {
            out.push(Hit::Line { t, x: p.x });
        }
    }
    Ok(())
}

/// Sampled root search of the cursor curve's equation along a target arc,
/// for collinear triples where the closed form degenerates.
fn fallback_arc_hits(
    cursor_curve: &BisectorCurve,
    target: &BisectorCurve,
    t_lo: f64,
    t_hi: f64,
) -> Vec<(f64, f64, Point)> {
    let lo = t_lo.max(-40.0);
    let hi = t_hi.min(40.0);
    if !(lo < hi) {
        return Vec::new();
    }
    let n = 256;
    let g = |tt: f64| cursor_curve.residual(target.point_at(tt));
    let mut hits = Vec::new();
    let mut pt = lo;
    let mut pg = g(pt);
    for i in 1..=n {
        let tt = lo + (hi - lo) * i as f64 / n as f64;
        let gt = g(tt);
        if pg == 0.0 || pg * gt < 0.0 {
            let (mut l, mut h, mut gl) = (pt, tt, pg);
            for _ in 0..60 {
                let m = 0.5 * (l + h);
                let gm = g(m);
                if gl * gm <= 0.0 {
                    h = m;
                } else {
                    l = m;
                    gl = gm;
                }
            }
            let tau = 0.5 * (l + h);
            let p = target.point_at(tau);
            hits.push((cursor_curve.param_of(p), tau, p));
        }
        pt = tt;
        pg = gt;
    }
    hits
}

fn bisector_of(
    x: &WeightedSite,
    y: &WeightedSite,
    what: &str,
) -> Result<BisectorCurve, MergeError> {
    match classify_or_dominate(x, y)
        .map_err(|e| MergeError::TraceStall(format!("{what}: {e}")))?
    {
        Bisector::Curve(c) => Ok(c),
        Bisector::Empty { .. } => {
            Err(MergeError::TraceStall(format!("{what}: bisector is empty")))
        }
    }
}

fn trace_all(
    a: &SpokedVD,
    b: &SpokedVD,
    seeds: &[ContourSeed],
    opts: &MergeOptions,
    stats: &mut MergeStats,
    trace_log: &mut Vec<TraceStep>,
) -> Result<TraceOut, MergeError> {
    let mut out = TraceOut {
        edges: Vec::new(),
        cuts: HashMap::new(),
        out_verts: Vec::new(),
        seed_vert: Vec::with_capacity(seeds.len()),
    };
    for s in seeds {
        out.out_verts.push(Vertex { p: s.point, kind: VertKind::OnLine });
        out.seed_vert.push(out.out_verts.len() - 1);
    }
    let mut consumed = vec![false; seeds.len()];
    let mut spoke_counts: HashMap<(SideTag, FaceIdx, usize), u32> = HashMap::new();
    let step_budget =
        64 * (a.sub_count() + b.sub_count() + a.vd.arcs.len() + b.vd.arcs.len() + 4) + 256;

    for start in 0..seeds.len() {
        if consumed[start] {
            continue;
        }
        consumed[start] = true;
        let seed = &seeds[start];
        let mut sta = SideState {
            svd: a,
            face: seed.a_face,
            sub: a.sub_at_line(seed.a_face, seed.point.x),
            active: *a.vd.site(seed.site_a),
        };
        let mut stb = SideState {
            svd: b,
            face: seed.b_face,
            sub: b.sub_at_line(seed.b_face, seed.point.x),
            active: *b.vd.site(seed.site_b),
        };
        let a_on_left = seed.a_closer_left;

        let curve = bisector_of(&sta.active, &stb.active, "seed bisector")?;
        let t0 = curve.param_of(seed.point);
        let tg = curve.tangent_at(t0);
        if tg.y.abs() < 1e-12 {
            return Err(MergeError::DegenerateTangency(
                "contour tangent to the line at a seed".into(),
            ));
        }
        let mut cur = BisectorCursor { curve, t: t0, dir: if tg.y > 0.0 { 1.0 } else { -1.0 } };
        let mut edge_start_t = t0;
        let mut edge_start_tok = PieceEndTok::Key(VKey::Seed(start));
        if opts.collect_trace {
            trace_log.push(TraceStep {
                kind: TraceStepKind::Start,
                a_site: sta.active.id,
                b_site: stb.active.id,
                p: seed.point,
            });
        }

        let mut steps = 0usize;
        let mut recent: std::collections::VecDeque<String> = std::collections::VecDeque::new();
        'arm: loop {
            steps += 1;
            stats.trace_steps += 1;
            if steps > step_budget {
                return Err(MergeError::TraceStall(format!(
                    "step budget exceeded; recent: {recent:?}"
                )));
            }
            let mut hits: Vec<Hit> = Vec::new();
            side_candidates(&cur, &sta, SideTag::A, &stb.active, &mut hits)?;
            side_candidates(&cur, &stb, SideTag::B, &sta.active, &mut hits)?;
            let best = hits
                .iter()
                .min_by(|x, y| cur.progress(x.t()).total_cmp(&cur.progress(y.t())))
                .copied();
            if let Some(h) = &best {
                if recent.len() >= 6 {
                    recent.pop_front();
                }
                recent.push_back(format!("{h:?} prog={:.3e}", cur.progress(h.t())));
            }

            let Some(hit) = best else {
                // Escape to infinity: validate the asymptotic direction.
                let u = cur.curve.unbounded_dir(cur.dir);
                if u.y <= 1e-12 {
                    return Err(MergeError::TraceStall(
                        "no crossing but asymptote does not escape upward".into(),
                    ));
                }
                for st in [&sta, &stb] {
                    let face = &st.svd.vd.faces[st.face];
                    let sr = &st.svd.faces[st.face].subs[st.sub];
                    for pos in sr.start..sr.end {
                        let arc = &st.svd.vd.arcs[face.chain[pos].arc];
                        let oid = if arc.s_lo() == st.active.id { arc.s_hi() } else { arc.s_lo() };
                        let o = st.svd.vd.site(oid);
                        let s_inf = (o.pos - st.active.pos).dot(u) + (st.active.w - o.w);
                        if s_inf > 1e-7 * (1.0 + s_inf.abs()) {
                            let oa = &sta.active;
                            let ob = &stb.active;
                            return Err(MergeError::TraceStall(format!(
                                "escape direction outside the active region: s_inf={s_inf:.6e} \
                                 u=({:.6},{:.6}) arc_t=[{},{}] cur_t={} dir={} \
                                 a=({},{},{}) b=({},{},{}) other=({},{},{})",
                                u.x,
                                u.y,
                                arc.t_lo,
                                arc.t_hi,
                                cur.t,
                                cur.dir,
                                oa.pos.x,
                                oa.pos.y,
                                oa.w,
                                ob.pos.x,
                                ob.pos.y,
                                ob.w,
                                o.pos.x,
                                o.pos.y,
                                o.w
                            )));
                        }
                    }
                }
                let (t_lo, t_hi, lo_tok, hi_tok) = if cur.dir > 0.0 {
                    (edge_start_t, f64::INFINITY, edge_start_tok.clone(), PieceEndTok::Inf(u))
                } else {
                    (f64::NEG_INFINITY, edge_start_t, PieceEndTok::Inf(u), edge_start_tok.clone())
                };
                out.edges.push(ContourEdge {
                    curve: cur.curve.clone(),
                    a_face: sta.face,
                    b_face: stb.face,
                    t_lo,
                    t_hi,
                    lo_tok,
                    hi_tok,
                });
                stats.contour_edges += 1;
                if opts.collect_trace {
                    trace_log.push(TraceStep {
                        kind: TraceStepKind::EndAtInfinity,
                        a_site: sta.active.id,
                        b_site: stb.active.id,
                        p: cur.pos(),
                    });
                }
                break 'arm;
            };

            match hit {
                Hit::Line { t, x } => {
                    let found = seeds
                        .iter()
                        .enumerate()
                        .filter(|(j, s)| {
                            !consumed[*j] && (s.point.x - x).abs() <= 1e-6 * (1.0 + x.abs())
                        })
                        .min_by(|(_, s1), (_, s2)| {
                            (s1.point.x - x).abs().total_cmp(&(s2.point.x - x).abs())
                        })
                        .map(|(j, _)| j);
                    let Some(j) = found else {
                        return Err(MergeError::DegenerateTangency(format!(
                            "contour reached the line at x={x} with no unconsumed seed"
                        )));
                    };
                    consumed[j] = true;
                    let (t_lo, t_hi, lo_tok, hi_tok) = if cur.dir > 0.0 {
                        (edge_start_t, t, edge_start_tok, PieceEndTok::Key(VKey::Seed(j)))
                    } else {
                        (t, edge_start_t, PieceEndTok::Key(VKey::Seed(j)), edge_start_tok)
                    };
                    out.edges.push(ContourEdge {
                        curve: cur.curve.clone(),
                        a_face: sta.face,
                        b_face: stb.face,
                        t_lo,
                        t_hi,
                        lo_tok,
                        hi_tok,
                    });
                    stats.contour_edges += 1;
                    if opts.collect_trace {
                        trace_log.push(TraceStep {
                            kind: TraceStepKind::EndAtLine,
                            a_site: sta.active.id,
                            b_site: stb.active.id,
                            p: Point::new(x, 0.0),
                        });
                    }
                    break 'arm;
                }
                Hit::Spoke { t, side, new_sub, spoke_idx } => {
                    stats.spoke_crossings += 1;
                    let st = if side == SideTag::A { &mut sta } else { &mut stb };
                    let c = spoke_counts.entry((side, st.face, spoke_idx)).or_insert(0);
                    *c += 1;
                    stats.max_crossings_per_spoke = stats.max_crossings_per_spoke.max(*c);
                    if *c > 1 {
                        // The contour can cross each spoke at most once; a
                        // second hit means the step is chasing numeric noise.
                        return Err(MergeError::DegenerateTangency(
                            "spoke crossed twice".into(),
                        ));
                    }
                    if new_sub >= st.svd.faces[st.face].subs.len() {
                        return Err(MergeError::TraceStall("spoke step out of range".into()));
                    }
                    st.sub = new_sub;
                    cur.advance_to(t);
                    if opts.collect_trace {
                        trace_log.push(TraceStep {
                            kind: TraceStepKind::CrossSpoke,
                            a_site: sta.active.id,
                            b_site: stb.active.id,
                            p: cur.pos(),
                        });
                    }
                }
                Hit::Arc { t, side, arc, tau, p } => {
                    stats.edge_crossings += 1;
                    let vtx = out.out_verts.len();
                    out.out_verts.push(Vertex { p, kind: VertKind::Interior });
                    let (t_lo, t_hi, lo_tok, hi_tok) = if cur.dir > 0.0 {
                        (edge_start_t, t, edge_start_tok, PieceEndTok::Key(VKey::MergeV(vtx)))
                    } else {
                        (t, edge_start_t, PieceEndTok::Key(VKey::MergeV(vtx)), edge_start_tok)
                    };
                    out.edges.push(ContourEdge {
                        curve: cur.curve.clone(),
                        a_face: sta.face,
                        b_face: stb.face,
                        t_lo,
                        t_hi,
                        lo_tok,
                        hi_tok,
                    });
                    stats.contour_edges += 1;

                    let travel = cur.curve.tangent_at(t) * cur.dir;
                    let other_side_active =
                        if side == SideTag::A { stb.active.id } else { sta.active.id };
                    let (st, stay_left) = if side == SideTag::A {
                        (&mut sta, a_on_left)
                    } else {
                        (&mut stb, !a_on_left)
                    };
                    let svd = st.svd;
                    let arc_rec = &svd.vd.arcs[arc];
                    let nu = arc_rec.curve.tangent_at(tau);
                    let cr = travel.cross(nu);
                    if cr.abs() < 1e-10 {
                        return Err(MergeError::DegenerateTangency(
                            "contour tangent to a Voronoi edge".into(),
                        ));
                    }
                    let plus_alive = (cr > 0.0) == stay_left;
                    out.cuts.entry((side, arc)).or_default().push(CutEvent {
                        t: tau,
                        vert: vtx,
                        plus_alive,
                    });

                    let old_active = st.active.id;
                    let other_id =
                        if arc_rec.s_lo() == st.active.id { arc_rec.s_hi() } else { arc_rec.s_lo() };
                    let (nf, npos) = arc_rec.other_face(st.active.id);
                    st.active = *svd.vd.site(other_id);
                    st.face = nf;
                    st.sub = svd.faces[nf].sub_of_chain[npos];
                    stats.merge_vertices.push((p, [old_active, other_id, other_side_active]));

                    let new_curve = bisector_of(&sta.active, &stb.active, "switch bisector")?;
                    let tn = new_curve.param_of(p);
                    let tgn = new_curve.tangent_at(tn);
                    let cr_new = tgn.cross(nu);
                    if cr_new.abs() < 1e-12 {
                        return Err(MergeError::DegenerateTangency(
                            "new contour tangent parallel to the crossed edge".into(),
                        ));
                    }
                    // Keep heading to the far side of the crossed arc.
                    let dir = if cr_new.signum() == cr.signum() { 1.0 } else { -1.0 };
                    cur = BisectorCursor { curve: new_curve, t: tn, dir };
                    edge_start_t = tn;
                    edge_start_tok = PieceEndTok::Key(VKey::MergeV(vtx));
                    if opts.collect_trace {
                        trace_log.push(TraceStep {
                            kind: TraceStepKind::CrossEdge,
                            a_site: sta.active.id,
                            b_site: stb.active.id,
                            p,
                        });
                    }
                }
            }
        }
    }

    if let Some(j) = consumed.iter().position(|c| !*c) {
        return Err(MergeError::TraceStall(format!("orphaned seed {j}")));
    }
    stats.seeds = seeds.len();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Phase 3: stitching.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum PieceSrc {
    #[allow(dead_code)]
    InArc { side: SideTag, arc: ArcIdx, seg: usize },
    #[allow(dead_code)]
    Contour { edge: usize },
}

#[derive(Debug, Clone)]
struct Piece {
    #[allow(dead_code)]
    src: PieceSrc,
    curve: BisectorCurve,
    t_lo: f64,
    t_hi: f64,
    lo_tok: PieceEndTok,
    hi_tok: PieceEndTok,
}

/// An unbounded piece end: direction angle plus the perpendicular offset of
/// its asymptote line (asymptotes pass through the curve frame origin), so
/// parallel asymptotes order deterministically.
#[derive(Debug, Clone, Copy)]
struct InfEnd {
    piece: usize,
    /// 0 = the piece's `t_lo` end, 1 = its `t_hi` end.
    end: u8,
    theta: f64,
    offset: f64,
}

fn inf_end(piece: usize, end: u8, dir: Point, origin: Point) -> InfEnd {
    // clockwise perpendicular: offset grows to the right of the direction
    let perp_cw = Point::new(dir.y, -dir.x);
    InfEnd { piece, end, theta: dir.y.atan2(dir.x), offset: origin.dot(perp_cw) }
}

#[derive(Default)]
struct Bucket {
    by_key: HashMap<VKey, Vec<usize>>,
    infs: Vec<InfEnd>,
    used: HashSet<usize>,
}

impl Bucket {
    /// The chain traverses infinity clockwise (decreasing angle), visiting
    /// parallel asymptotes left to right (increasing offset). Pick the next
    /// unused infinity end after an exit at `(theta, offset)`.
    fn next_inf(&self, theta: f64, offset: f64) -> Option<(usize, u8, f64, f64)> {
        const EPS_TH: f64 = 1e-9;
        let unused = || self.infs.iter().filter(|e| !self.used.contains(&e.piece));
        // same direction group, next offset to the right
        if let Some(e) = unused()
            .filter(|e| (e.theta - theta).abs() <= EPS_TH && e.offset > offset)
            .min_by(|x, y| x.offset.total_cmp(&y.offset))
        {
            return Some((e.piece, e.end, e.theta, e.offset));
        }
        // next direction group clockwise, entering at its leftmost member
        let cand: Vec<&InfEnd> = unused().filter(|e| e.theta < theta - EPS_TH).collect();
        let max_th = cand.iter().map(|e| e.theta).fold(f64::NEG_INFINITY, f64::max);
        cand.into_iter()
            .filter(|e| (e.theta - max_th).abs() <= EPS_TH)
            .min_by(|x, y| x.offset.total_cmp(&y.offset))
            .map(|e| (e.piece, e.end, e.theta, e.offset))
    }
}

fn end_key(tok: &PieceEndTok) -> Option<VKey> {
    match tok {
        PieceEndTok::Key(k) => Some(*k),
        PieceEndTok::Inf(_) => None,
    }
}

enum WalkCur {
    Key(VKey),
    /// Passing through infinity: exit angle and asymptote offset.
    Inf(f64, f64),
    Done,
}

/// Copy-on-demand of an input vertex into the output vertex list.
fn copy_in_vert(
    side: SideTag,
    v: VertIdx,
    a: &SpokedVD,
    b: &SpokedVD,
    out_verts: &mut Vec<Vertex>,
    memo: &mut HashMap<(SideTag, VertIdx), VertIdx>,
) -> VertIdx {
    *memo.entry((side, v)).or_insert_with(|| {
        let src = if side == SideTag::A { &a.vd } else { &b.vd };
        out_verts.push(src.verts[v]);
        out_verts.len() - 1
    })
}

fn stitch(a: &SpokedVD, b: &SpokedVD, sw: &SweepOut, tr: TraceOut) -> Result<HalfPlaneVD, MergeError> {
    let mut pieces: Vec<Piece> = Vec::new();
    let mut buckets: HashMap<(SideTag, FaceIdx), Bucket> = HashMap::new();

    fn push_piece(
        pieces: &mut Vec<Piece>,
        buckets: &mut HashMap<(SideTag, FaceIdx), Bucket>,
        piece: Piece,
        flanks: [(SideTag, FaceIdx); 2],
    ) {
        let id = pieces.len();
        let origin = piece.curve.frame.origin;
        for (side, face) in flanks {
            let bucket = buckets.entry((side, face)).or_default();
            match &piece.lo_tok {
                PieceEndTok::Key(k) => bucket.by_key.entry(*k).or_default().push(id),
                PieceEndTok::Inf(d) => bucket.infs.push(inf_end(id, 0, *d, origin)),
            }
            match &piece.hi_tok {
                PieceEndTok::Key(k) => bucket.by_key.entry(*k).or_default().push(id),
                PieceEndTok::Inf(d) => bucket.infs.push(inf_end(id, 1, *d, origin)),
            }
        }
        pieces.push(piece);
    }

    // Input arcs, split at merge vertices; only alive segments become pieces.
    for (side, svd) in [(SideTag::A, a), (SideTag::B, b)] {
        for (ai, arc) in svd.vd.arcs.iter().enumerate() {
            let tok_of = |v: VertIdx, end_sign: f64| -> PieceEndTok {
                if svd.vd.verts[v].is_infinite() {
                    PieceEndTok::Inf(arc.curve.unbounded_dir(end_sign))
                } else {
                    PieceEndTok::Key(VKey::InV(side, v))
                }
            };
            let flanks = [(side, arc.f_lo), (side, arc.f_hi)];
            match tr.cuts.get(&(side, ai)) {
                None => push_piece(
                    &mut pieces,
                    &mut buckets,
                    Piece {
                        src: PieceSrc::InArc { side, arc: ai, seg: 0 },
                        curve: arc.curve.clone(),
                        t_lo: arc.t_lo,
                        t_hi: arc.t_hi,
                        lo_tok: tok_of(arc.v_lo, -1.0),
                        hi_tok: tok_of(arc.v_hi, 1.0),
                    },
                    flanks,
                ),
                Some(cuts) => {
                    let mut cuts = cuts.clone();
                    cuts.sort_by(|u, v| u.t.total_cmp(&v.t));
                    for w in cuts.windows(2) {
                        if w[0].plus_alive == w[1].plus_alive
                            || (w[1].t - w[0].t).abs() <= 1e-12 * (1.0 + w[0].t.abs())
                        {
                            return Err(MergeError::DegenerateTangency(
                                "inconsistent or coincident cuts on one arc".into(),
                            ));
                        }
                    }
                    for k in 0..=cuts.len() {
                        let alive =
                            if k == 0 { !cuts[0].plus_alive } else { cuts[k - 1].plus_alive };
                        if !alive {
                            continue;
                        }
                        let (t_lo, lo_tok) = if k == 0 {
                            (arc.t_lo, tok_of(arc.v_lo, -1.0))
                        } else {
                            (cuts[k - 1].t, PieceEndTok::Key(VKey::MergeV(cuts[k - 1].vert)))
                        };
                        let (t_hi, hi_tok) = if k == cuts.len() {
                            (arc.t_hi, tok_of(arc.v_hi, 1.0))
                        } else {
                            (cuts[k].t, PieceEndTok::Key(VKey::MergeV(cuts[k].vert)))
                        };
                        push_piece(
                            &mut pieces,
                            &mut buckets,
                            Piece {
                                src: PieceSrc::InArc { side, arc: ai, seg: k },
                                curve: arc.curve.clone(),
                                t_lo,
                                t_hi,
                                lo_tok,
                                hi_tok,
                            },
                            flanks,
                        );
                    }
                }
            }
        }
    }

    for (ei, e) in tr.edges.iter().enumerate() {
        push_piece(
            &mut pieces,
            &mut buckets,
            Piece {
                src: PieceSrc::Contour { edge: ei },
                curve: e.curve.clone(),
                t_lo: e.t_lo,
                t_hi: e.t_hi,
                lo_tok: e.lo_tok.clone(),
                hi_tok: e.hi_tok.clone(),
            },
            [(SideTag::A, e.a_face), (SideTag::B, e.b_face)],
        );
    }

    // Output skeleton.
    let mut out = HalfPlaneVD::default();
    let mut sites: Vec<WeightedSite> = a.vd.sites.clone();
    sites.extend(b.vd.sites.iter().copied());
    out.set_sites(sites);
    out.verts = tr.out_verts;
    let mut in_vert_memo: HashMap<(SideTag, VertIdx), VertIdx> = HashMap::new();
    out.verts.push(Vertex { p: Point::new(-1.0, 0.0), kind: VertKind::AtInfinity });
    let minus_inf = out.verts.len() - 1;
    out.verts.push(Vertex { p: Point::new(1.0, 0.0), kind: VertKind::AtInfinity });
    let plus_inf = out.verts.len() - 1;

    let mut arc_of_piece: HashMap<usize, ArcIdx> = HashMap::new();

    for iv in &sw.intervals {
        let svd = if iv.side == SideTag::A { a } else { b };
        let owner = svd.vd.faces[iv.face].site;
        let owner_is_lo = |c: &BisectorCurve| c.site_lo.id == owner;
        let fi = out.faces.len();

        let mut vert_of_end = |tok: &EndTok, out_verts: &mut Vec<Vertex>| -> VertIdx {
            match tok {
                EndTok::Seed(s) => tr.seed_vert[*s],
                EndTok::MinusInf => minus_inf,
                EndTok::PlusInf => plus_inf,
                EndTok::InVert(sd, v) => copy_in_vert(*sd, *v, a, b, out_verts, &mut in_vert_memo),
            }
        };
        let lv = vert_of_end(&iv.left, &mut out.verts);
        let rv = vert_of_end(&iv.right, &mut out.verts);
        drop(vert_of_end);

        let key_of_end = |tok: &EndTok| -> Option<VKey> {
            match tok {
                EndTok::Seed(s) => Some(VKey::Seed(*s)),
                EndTok::InVert(sd, v) => Some(VKey::InV(*sd, *v)),
                _ => None,
            }
        };
        let left_key = key_of_end(&iv.left);
        let right_key = key_of_end(&iv.right);

        let bucket = buckets.entry((iv.side, iv.face)).or_default();
        let mut chain: Vec<DirArc> = Vec::new();
        let mut cur = match left_key {
            Some(k) => WalkCur::Key(k),
            None => WalkCur::Inf(std::f64::consts::PI + 1.0, f64::NEG_INFINITY),
        };
        let budget =
            bucket.by_key.values().map(|v| v.len()).sum::<usize>() + bucket.infs.len() + 2;
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > budget + 2 {
                return Err(MergeError::TraceStall("stitch walk runaway".into()));
            }
            let (pid, entered_lo) = match &cur {
                WalkCur::Done => break,
                WalkCur::Key(k) => {
                    if Some(*k) == right_key && !chain.is_empty() {
                        break;
                    }
                    let cand = bucket
                        .by_key
                        .get(k)
                        .into_iter()
                        .flatten()
                        .find(|pid| !bucket.used.contains(*pid))
                        .copied();
                    let Some(pid) = cand else {
                        if Some(*k) == right_key {
                            break;
                        }
                        return Err(MergeError::TraceStall(format!(
                            "stitch walk dead end at {k:?}"
                        )));
                    };
                    (pid, end_key(&pieces[pid].lo_tok) == Some(*k))
                }
                WalkCur::Inf(theta, offset) => {
                    let Some((pid, end, _, _)) = bucket.next_inf(*theta, *offset) else {
                        if right_key.is_none() {
                            break;
                        }
                        return Err(MergeError::TraceStall(
                            "stitch walk dead end at infinity".into(),
                        ));
                    };
                    (pid, end == 0)
                }
            };
            bucket.used.insert(pid);

            let arc_idx = match arc_of_piece.get(&pid) {
                Some(i) => *i,
                None => {
                    let piece = &pieces[pid];
                    let mut v_of = |tok: &PieceEndTok, sign: f64| -> VertIdx {
                        match tok {
                            PieceEndTok::Key(VKey::Seed(s)) => tr.seed_vert[*s],
                            PieceEndTok::Key(VKey::MergeV(v)) => *v,
                            PieceEndTok::Key(VKey::InV(sd, v)) => {
                                copy_in_vert(*sd, *v, a, b, &mut out.verts, &mut in_vert_memo)
                            }
                            PieceEndTok::Inf(d) => {
                                let _ = sign;
                                out.verts.push(Vertex { p: *d, kind: VertKind::AtInfinity });
                                out.verts.len() - 1
                            }
                        }
                    };
                    let v_lo = v_of(&piece.lo_tok, -1.0);
                    let v_hi = v_of(&piece.hi_tok, 1.0);
                    out.arcs.push(ArcRec {
                        curve: piece.curve.clone(),
                        t_lo: piece.t_lo,
                        t_hi: piece.t_hi,
                        v_lo,
                        v_hi,
                        f_lo: usize::MAX,
                        pos_lo: usize::MAX,
                        f_hi: usize::MAX,
                        pos_hi: usize::MAX,
                    });
                    let i = out.arcs.len() - 1;
                    arc_of_piece.insert(pid, i);
                    i
                }
            };
            {
                let is_lo_side = owner_is_lo(&out.arcs[arc_idx].curve);
                let rec = &mut out.arcs[arc_idx];
                if is_lo_side {
                    rec.f_lo = fi;
                    rec.pos_lo = chain.len();
                } else {
                    debug_assert_eq!(rec.s_hi(), owner, "piece does not flank the owner");
                    rec.f_hi = fi;
                    rec.pos_hi = chain.len();
                }
            }
            chain.push(DirArc { arc: arc_idx, fwd: entered_lo });

            let piece = &pieces[pid];
            let far = if entered_lo { &piece.hi_tok } else { &piece.lo_tok };
            cur = match far {
                PieceEndTok::Key(k) => {
                    if Some(*k) == right_key {
                        WalkCur::Done
                    } else {
                        WalkCur::Key(*k)
                    }
                }
                PieceEndTok::Inf(d) => {
                    let e = inf_end(pid, 0, *d, piece.curve.frame.origin);
                    WalkCur::Inf(e.theta, e.offset)
                }
            };
        }

        out.faces.push(Face { site: owner, lv, rv, chain });
    }

    for (ai, arc) in out.arcs.iter().enumerate() {
        if arc.f_lo == usize::MAX || arc.f_hi == usize::MAX {
            return Err(MergeError::TraceStall(format!(
                "output arc {ai} flanked by only one face"
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vd::spokes::add_spokes;

    fn spoked_singleton(id: usize, x: f64, y: f64, w: f64) -> SpokedVD {
        add_spokes(HalfPlaneVD::singleton(WeightedSite::new(id, x, y, w)).unwrap())
    }

    #[test]
    fn symmetric_pair_merge() {
        let a = spoked_singleton(0, -1.0, -1.0, 0.0);
        let b = spoked_singleton(1, 1.0, -1.0, 0.0);
        let seeds = ell_intersections(&a.vd, &b.vd).unwrap();
        assert_eq!(seeds.len(), 1);
        assert!(seeds[0].point.x.abs() < 1e-12);

        let m = merge_vdplus(&a, &b).unwrap();
        assert_eq!(m.faces.len(), 2);
        assert_eq!(m.validate(), Ok(()));
        let seq = m.l_edge_seq();
        assert_eq!(seq[0].2, 0);
        assert_eq!(seq[1].2, 1);
        assert!(seq[0].1.abs() < 1e-9);
        assert_eq!(m.arcs.len(), 1);
    }

    #[test]
    fn dominated_site_is_inert() {
        let a = spoked_singleton(0, -1.0, -1.0, 0.0);
        let b = spoked_singleton(1, -1.0, -1.5, 9.0);
        let seeds = ell_intersections(&a.vd, &b.vd).unwrap();
        assert!(seeds.is_empty());
        let m = merge_vdplus(&a, &b).unwrap();
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.faces[0].site, 0);
        assert_eq!(m.sites.len(), 2);
        assert_eq!(m.validate(), Ok(()));
    }

    #[test]
    fn stacked_sites_single_face() {
        // Equal weights, one strictly nearer the line: one face survives.
        let a = spoked_singleton(0, 0.0, -1.0, 0.0);
        let b = spoked_singleton(1, 0.0, -2.0, 0.0);
        let m = merge_vdplus(&a, &b).unwrap();
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.faces[0].site, 0);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let a = spoked_singleton(0, -1.0, -1.0, 0.0);
        let e = add_spokes(HalfPlaneVD::empty());
        let m = merge_vdplus(&a, &e).unwrap();
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.faces[0].site, 0);
        assert_eq!(m.sites.len(), 1);
    }

    #[test]
    fn three_sites_emit_a_merge_vertex() {
        // Two sites on one side, one on the other; the contour crosses an
        // input arc, so the merge emits an interior vertex equidistant to
        // all three sites.
        let a1 = HalfPlaneVD::singleton(WeightedSite::new(0, -1.0, -1.0, 0.0)).unwrap();
        let a2 = HalfPlaneVD::singleton(WeightedSite::new(1, 1.0, -1.0, 0.0)).unwrap();
        let pair =
            merge_vdplus(&add_spokes(a1), &add_spokes(a2)).unwrap();
        let b = spoked_singleton(2, 0.0, -2.5, -0.5);
        let res = merge_vdplus_full(&add_spokes(pair), &b, &MergeOptions::default()).unwrap();
        assert_eq!(res.vd.validate(), Ok(()));
        for (p, ids) in &res.stats.merge_vertices {
            let d0 = res.vd.site(ids[0]).dist(*p);
            for id in &ids[1..] {
                assert!((res.vd.site(*id).dist(*p) - d0).abs() <= 1e-7 * (1.0 + d0.abs()));
            }
        }
    }
}
