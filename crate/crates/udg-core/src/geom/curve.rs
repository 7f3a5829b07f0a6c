//! Bisector curves of weighted site pairs and their intersection primitives.
//!
//! The bisector `B(a, b) = { p : d(a,p) = d(b,p) }` of two additively-weighted
//! sites is one branch of a hyperbola with foci `a` and `b` (the branch
//! wrapping the heavier site), a straight line when the weights are equal,
//! and empty when one site dominates the plane (`|w_a - w_b| >= ||a - b||`).
//!
//! Curves are stored in a canonical frame: origin at the focus midpoint,
//! x-axis along the focal axis. In that frame a branch is
//! `(sigma * a * cosh t, b * sinh t)` and a line is `(0, t)`, so the canonical
//! y-coordinate is strictly monotone in the parameter `t`. Line intersections
//! reduce to a quadratic in `e^t`, and curve-curve intersections that share a
//! site reduce to the classical three-site Apollonius vertex computation.

use super::{Point, SiteId, WeightedSite, EPS, ROOT_EPS};
use crate::error::GeomError;

/// Rigid frame: `world = origin + ux * x_c + uy * y_c` with `uy = perp(ux)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub origin: Point,
    pub ux: Point,
}

impl Frame {
    fn uy(&self) -> Point {
        self.ux.perp()
    }

    pub fn to_world(&self, c: Point) -> Point {
        self.origin + self.ux * c.x + self.uy() * c.y
    }

    pub fn to_canon(&self, w: Point) -> Point {
        let d = w - self.origin;
        Point::new(d.dot(self.ux), d.dot(self.uy()))
    }

    pub fn dir_to_world(&self, c: Point) -> Point {
        self.ux * c.x + self.uy() * c.y
    }

    pub fn dir_to_canon(&self, w: Point) -> Point {
        Point::new(w.dot(self.ux), w.dot(self.uy()))
    }
}

/// Shape of a non-empty bisector in its canonical frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// Perpendicular bisector of the foci: canonical `x = 0`, parameter `t`
    /// is the canonical y.
    Line,
    /// One hyperbola branch: `(sigma * a * cosh t, b * sinh t)`.
    /// `sigma = +1` wraps the high-id focus, `-1` the low-id focus.
    Hyperbola { a: f64, b: f64, sigma: f64 },
}

/// Classification result of a site pair.
#[derive(Debug, Clone)]
pub enum Bisector {
    Curve(BisectorCurve),
    /// One site is weighted-closer everywhere; no bisector exists.
    Empty { dominant: SiteId },
}

impl Bisector {
    pub fn curve(self) -> Option<BisectorCurve> {
        match self {
            Bisector::Curve(c) => Some(c),
            Bisector::Empty { .. } => None,
        }
    }
}

/// A classified, non-empty bisector between two sites, with a monotone
/// parametrization in its canonical frame.
#[derive(Debug, Clone)]
pub struct BisectorCurve {
    /// The two sites, ordered by id.
    pub site_lo: WeightedSite,
    pub site_hi: WeightedSite,
    /// `w_hi - w_lo`; determines which branch and its shape.
    pub focal_offset: f64,
    pub kind: CurveKind,
    pub frame: Frame,
}

/// Classify the bisector of two sites.
///
/// Degeneracy policy: `|w_lo - w_hi| >= ||lo - hi||` within tolerance is
/// folded into `Empty` (the boundary ray case included), and exactly
/// coincident equal-weight sites are an error — the caller must deduplicate.
pub fn classify_bisector(a: &WeightedSite, b: &WeightedSite) -> Result<Bisector, GeomError> {
    debug_assert!(a.id != b.id, "bisector of a site with itself");
    let (lo, hi) = if a.id <= b.id { (*a, *b) } else { (*b, *a) };
    let sep = hi.pos - lo.pos;
    let d = sep.norm();
    let dw = hi.w - lo.w;
    let tol = EPS * (1.0 + d + dw.abs());

    if d <= tol {
        if dw.abs() <= tol {
            return Err(GeomError::CoincidentSites(lo.id, hi.id));
        }
        // Coincident positions, distinct weights: the lighter site dominates.
        let dominant = if dw > 0.0 { lo.id } else { hi.id };
        return Ok(Bisector::Empty { dominant });
    }
    if dw.abs() >= d - tol {
        // One site dominates everywhere (boundary ray folded in).
        let dominant = if dw > 0.0 { lo.id } else { hi.id };
        return Ok(Bisector::Empty { dominant });
    }

    let mid = lo.pos + sep * 0.5;
    let frame = Frame { origin: mid, ux: sep * (1.0 / d) };
    let kind = if dw.abs() <= tol {
        CurveKind::Line
    } else {
        // ||p - lo|| - ||p - hi|| = dw on the branch; dw > 0 puts it nearer
        // the high site (canonical +x side).
        let ha = dw.abs() / 2.0;
        let c = d / 2.0;
        let hb = ((c - ha) * (c + ha)).sqrt();
        CurveKind::Hyperbola { a: ha, b: hb, sigma: dw.signum() }
    };
    Ok(Bisector::Curve(BisectorCurve {
        site_lo: lo,
        site_hi: hi,
        focal_offset: dw,
        kind,
        frame,
    }))
}

impl BisectorCurve {
    /// Point on the curve at parameter `t`.
    pub fn point_at(&self, t: f64) -> Point {
        let c = match self.kind {
            CurveKind::Line => Point::new(0.0, t),
            CurveKind::Hyperbola { a, b, sigma } => Point::new(sigma * a * t.cosh(), b * t.sinh()),
        };
        self.frame.to_world(c)
    }

    /// Unit tangent in the direction of increasing `t`.
    pub fn tangent_at(&self, t: f64) -> Point {
        let c = match self.kind {
            CurveKind::Line => Point::new(0.0, 1.0),
            CurveKind::Hyperbola { a, b, sigma } => Point::new(sigma * a * t.sinh(), b * t.cosh()),
        };
        self.frame.dir_to_world(c).normalized()
    }

    /// Parameter of a point assumed to lie on (or near) the curve.
    pub fn param_of(&self, p: Point) -> f64 {
        let c = self.frame.to_canon(p);
        match self.kind {
            CurveKind::Line => c.y,
            CurveKind::Hyperbola { b, .. } => (c.y / b).asinh(),
        }
    }

    /// Signed residual `d(lo, p) - d(hi, p)` of the weighted distances;
    /// zero exactly on the curve.
    pub fn residual(&self, p: Point) -> f64 {
        self.site_lo.dist(p) - self.site_hi.dist(p)
    }

    /// Whether `p` lies on the curve within the relative tolerance.
    pub fn on_curve(&self, p: Point) -> bool {
        let scale = 1.0 + self.site_lo.dist(p).abs() + self.site_hi.dist(p).abs();
        self.residual(p).abs() <= 32.0 * EPS * scale
    }

    /// Asymptotic unit direction of the branch end as `t -> sign * inf`.
    pub fn unbounded_dir(&self, sign: f64) -> Point {
        let c = match self.kind {
            CurveKind::Line => Point::new(0.0, sign.signum()),
            CurveKind::Hyperbola { a, b, sigma } => {
                Point::new(sigma * a, sign.signum() * b)
            }
        };
        self.frame.dir_to_world(c).normalized()
    }

    /// All intersections with the line through `q` with direction `v`,
    /// as `(t, point)` sorted by `t`. At most two.
    pub fn line_intersections(&self, q: Point, v: Point) -> Vec<(f64, Point)> {
        let qc = self.frame.to_canon(q);
        let vc = self.frame.dir_to_canon(v);
        let mut out: Vec<f64> = Vec::new();
        match self.kind {
            CurveKind::Line => {
                // Canonical x = 0: solve qc.x + s * vc.x = 0.
                if vc.x.abs() > 1e-14 * (1.0 + vc.norm()) {
                    let s = -qc.x / vc.x;
                    out.push(qc.y + s * vc.y);
                }
            }
            CurveKind::Hyperbola { a, b, sigma } => {
                // Normal form n . p = k in the canonical frame.
                let n = vc.perp();
                let k = n.dot(qc);
                let ca = n.x * sigma * a;
                let cb = n.y * b;
                // ca*cosh t + cb*sinh t = k;  u = e^t:
                // (ca+cb) u^2 - 2k u + (ca-cb) = 0.
                let alpha = ca + cb;
                let gamma = ca - cb;
                let scale = ca.abs() + cb.abs() + k.abs() + 1e-300;
                if alpha.abs() <= 1e-14 * scale {
                    // Line parallel to an asymptote: at most one root.
                    if k.abs() > 1e-14 * scale {
                        let u = gamma / (2.0 * k);
                        if u > 0.0 {
                            out.push(u.ln());
                        }
                    }
                } else {
                    let disc = k * k - alpha * gamma;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        let qq = if k >= 0.0 { k + sq } else { k - sq };
                        let mut us = Vec::with_capacity(2);
                        if qq.abs() > 0.0 {
                            us.push(qq / alpha);
                            us.push(gamma / qq);
                        } else {
                            us.push(0.0);
                        }
                        for u in us {
                            if u > 1e-300 && u.is_finite() {
                                out.push(u.ln());
                            }
                        }
                    }
                }
                // Newton polish on f(t) = ca*cosh t + cb*sinh t - k.
                for t in out.iter_mut() {
                    for _ in 0..2 {
                        let f = ca * t.cosh() + cb * t.sinh() - k;
                        let fp = ca * t.sinh() + cb * t.cosh();
                        if fp.abs() > 1e-30 {
                            let step = f / fp;
                            if step.is_finite() && step.abs() < 1.0 {
                                *t -= step;
                            }
                        }
                    }
                }
            }
        }
        out.sort_by(|x, y| x.total_cmp(y));
        out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + x.abs()));
        out.iter().map(|&t| (t, self.point_at(t))).collect()
    }

    /// Intersections with the horizontal line `y = y0`, sorted by x.
    pub fn hline_intersections(&self, y0: f64) -> Vec<Point> {
        let mut pts: Vec<Point> = self
            .line_intersections(Point::new(0.0, y0), Point::new(1.0, 0.0))
            .into_iter()
            .map(|(_, p)| Point::new(p.x, y0))
            .collect();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        pts
    }

    /// Intersections with the closed segment `p0 -> p1`, as
    /// `(t_curve, tau_segment, point)` sorted along the segment.
    pub fn segment_intersections(&self, p0: Point, p1: Point) -> Vec<(f64, f64, Point)> {
        let v = p1 - p0;
        let len2 = v.dot(v);
        if len2 == 0.0 {
            return Vec::new();
        }
        let tol = 1e-9 / len2.sqrt().max(1e-300);
        let mut out: Vec<(f64, f64, Point)> = self
            .line_intersections(p0, v)
            .into_iter()
            .filter_map(|(t, p)| {
                let tau = (p - p0).dot(v) / len2;
                if (-tol..=1.0 + tol).contains(&tau) {
                    Some((t, tau.clamp(0.0, 1.0), p))
                } else {
                    None
                }
            })
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1));
        out
    }
}

/// Points equidistant (in weighted distance) to all three sites, with the
/// common distance, solved in closed form. At most two.
///
/// Writing `r` for the common weighted distance, `||p - s_i|| = r - w_i`
/// gives two linear equations in `(p, r)` from pair differences plus one
/// quadratic; candidates are polished by a 2D Newton step on the pairwise
/// residuals and validated against all three distances.
pub fn apollonius_vertices(
    s1: &WeightedSite,
    s2: &WeightedSite,
    s3: &WeightedSite,
) -> Result<Vec<(Point, f64)>, GeomError> {
    // Canonical argument order: the same triple must produce bit-identical
    // vertices no matter how the caller orients it, so that a trace never
    // re-detects the vertex it just crossed.
    let mut sorted = [s1, s2, s3];
    sorted.sort_by_key(|s| s.id);
    let (s1, s2, s3) = (sorted[0], sorted[1], sorted[2]);
    let m11 = 2.0 * (s2.pos.x - s1.pos.x);
    let m12 = 2.0 * (s2.pos.y - s1.pos.y);
    let m21 = 2.0 * (s3.pos.x - s1.pos.x);
    let m22 = 2.0 * (s3.pos.y - s1.pos.y);
    let det = m11 * m22 - m12 * m21;
    let scale = (m11.abs() + m12.abs()) * (m21.abs() + m22.abs()) + 1e-300;
    if det.abs() <= 1e-12 * scale {
        return Err(GeomError::Degenerate);
    }
    let n1 = s1.pos.dot(s1.pos);
    let n2 = s2.pos.dot(s2.pos);
    let n3 = s3.pos.dot(s3.pos);
    // 2(s_j - s_1) . p = (|s_j|^2 - |s_1|^2 + w_1^2 - w_j^2) + 2 r (w_j - w_1)
    let c01 = n2 - n1 + s1.w * s1.w - s2.w * s2.w;
    let c02 = n3 - n1 + s1.w * s1.w - s3.w * s3.w;
    let d1 = 2.0 * (s2.w - s1.w);
    let d2 = 2.0 * (s3.w - s1.w);
    let inv = 1.0 / det;
    // p(r) = p0 + p1 * r
    let p0 = Point::new((c01 * m22 - c02 * m12) * inv, (m11 * c02 - m21 * c01) * inv);
    let p1 = Point::new((d1 * m22 - d2 * m12) * inv, (m11 * d2 - m21 * d1) * inv);

    // ||p(r) - s1||^2 = (r - w1)^2
    let e = p0 - s1.pos;
    let qa = p1.dot(p1) - 1.0;
    let qb = 2.0 * p1.dot(e) + 2.0 * s1.w;
    let qc = e.dot(e) - s1.w * s1.w;
    let mut roots: Vec<f64> = Vec::new();
    let qscale = qa.abs() + qb.abs() + qc.abs() + 1e-300;
    if qa.abs() <= 1e-14 * qscale {
        if qb.abs() > 1e-14 * qscale {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let qq = if qb >= 0.0 { -(qb + sq) / 2.0 } else { -(qb - sq) / 2.0 };
            if qq.abs() > 0.0 {
                roots.push(qq / qa);
                roots.push(qc / qq);
            } else {
                roots.push(0.0);
            }
        }
    }

    let wmax = s1.w.max(s2.w).max(s3.w);
    let mut out: Vec<(Point, f64)> = Vec::new();
    for r in roots {
        if !r.is_finite() || r < wmax - 1e-7 * (1.0 + r.abs()) {
            continue;
        }
        let mut p = p0 + p1 * r;
        // Newton polish on F(p) = (d1(p)-d2(p), d1(p)-d3(p)).
        for _ in 0..3 {
            let v1 = p - s1.pos;
            let v2 = p - s2.pos;
            let v3 = p - s3.pos;
            let (l1, l2, l3) = (v1.norm(), v2.norm(), v3.norm());
            if l1 < 1e-14 || l2 < 1e-14 || l3 < 1e-14 {
                break;
            }
            let f1 = (l1 + s1.w) - (l2 + s2.w);
            let f2 = (l1 + s1.w) - (l3 + s3.w);
            if f1.abs() + f2.abs() < ROOT_EPS * (1.0 + l1.abs()) {
                break;
            }
            let g1 = v1 * (1.0 / l1) - v2 * (1.0 / l2);
            let g2 = v1 * (1.0 / l1) - v3 * (1.0 / l3);
            let jdet = g1.x * g2.y - g1.y * g2.x;
            if jdet.abs() < 1e-18 {
                break;
            }
            let dx = (f1 * g2.y - f2 * g1.y) / jdet;
            let dy = (g1.x * f2 - g2.x * f1) / jdet;
            p = p - Point::new(dx, dy);
        }
        let dd = s1.dist(p);
        let tol = 1e-7 * (1.0 + dd.abs());
        if (s2.dist(p) - dd).abs() <= tol && (s3.dist(p) - dd).abs() <= tol {
            if !out.iter().any(|(q, _)| q.dist(p) <= 1e-9 * (1.0 + p.norm())) {
                out.push((p, dd));
            }
        }
    }
    Ok(out)
}

/// Intersections of the bisector with a horizontal line, per the kernel
/// contract: all returned points lie on both within tolerance, sorted by x.
pub fn bisector_hline_intersections(c: &BisectorCurve, y0: f64) -> Vec<Point> {
    c.hline_intersections(y0)
}

/// Intersections of the bisector with a closed segment, sorted along it.
/// Reports `NearTangency` when two roots coincide within tolerance.
pub fn bisector_segment_intersections(
    c: &BisectorCurve,
    p0: Point,
    p1: Point,
) -> Result<Vec<Point>, GeomError> {
    let hits = c.segment_intersections(p0, p1);
    for w in hits.windows(2) {
        let gap = w[0].2.dist(w[1].2);
        if gap <= 1e-9 * (1.0 + w[0].2.norm()) {
            return Err(GeomError::NearTangency);
        }
    }
    Ok(hits.into_iter().map(|(_, _, p)| p).collect())
}

fn sites_of(c: &BisectorCurve) -> [WeightedSite; 2] {
    [c.site_lo, c.site_hi]
}

/// All real intersection points of two distinct non-empty bisector curves.
///
/// When the curves share a site this is the closed-form three-site vertex
/// computation; otherwise a sampled sign-change search along one curve with
/// bisection refinement. `NearTangency` is reported when two intersection
/// points coincide within tolerance.
pub fn bisector_pair_intersections(
    c1: &BisectorCurve,
    c2: &BisectorCurve,
) -> Result<Vec<Point>, GeomError> {
    let s1 = sites_of(c1);
    let s2 = sites_of(c2);
    let shared: Vec<&WeightedSite> =
        s1.iter().filter(|a| s2.iter().any(|b| b.id == a.id)).collect();

    let mut pts: Vec<Point>;
    if let Some(shared) = shared.first() {
        let other1 = s1.iter().find(|s| s.id != shared.id).unwrap();
        let other2 = s2.iter().find(|s| s.id != shared.id).unwrap();
        if other1.id == other2.id {
            // Same site pair: same curve; reject per precondition.
            return Err(GeomError::Degenerate);
        }
        match apollonius_vertices(shared, other1, other2) {
            Ok(vs) => pts = vs.into_iter().map(|(p, _)| p).collect(),
            Err(GeomError::Degenerate) => pts = sampled_intersections(c1, c2),
            Err(e) => return Err(e),
        }
    } else {
        pts = sampled_intersections(c1, c2);
    }

    pts.retain(|p| c1.on_curve(*p) && c2.on_curve(*p));
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| a.dist(*b) <= 1e-9 * (1.0 + a.norm()));
    for w in pts.windows(2) {
        if w[0].dist(w[1]) <= 1e-8 * (1.0 + w[0].norm()) {
            return Err(GeomError::NearTangency);
        }
    }
    Ok(pts)
}

/// Sign-change search for roots of c2's defining equation along c1.
fn sampled_intersections(c1: &BisectorCurve, c2: &BisectorCurve) -> Vec<Point> {
    let spread = c1
        .site_lo
        .pos
        .dist(c2.site_hi.pos)
        .max(c1.site_hi.pos.dist(c2.site_lo.pos))
        .max(c1.site_lo.pos.dist(c1.site_hi.pos))
        + c1.site_lo.w.abs()
        + c2.site_hi.w.abs();
    let reach = 1e3 * (1.0 + spread);
    let tmax = match c1.kind {
        CurveKind::Line => reach,
        CurveKind::Hyperbola { a, .. } => ((2.0 * reach / a.max(1e-12)).max(1.0)).ln() + 1.0,
    };
    let n = 2048;
    let g = |t: f64| c2.residual(c1.point_at(t));
    let mut roots = Vec::new();
    let mut prev_t = -tmax;
    let mut prev_g = g(prev_t);
    for i in 1..=n {
        let t = -tmax + 2.0 * tmax * (i as f64) / (n as f64);
        let gt = g(t);
        if prev_g == 0.0 {
            roots.push(prev_t);
        } else if prev_g * gt < 0.0 {
            // bisection
            let (mut lo, mut hi, mut glo) = (prev_t, t, prev_g);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if glo * gm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
                if (hi - lo).abs() < ROOT_EPS {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_g = gt;
    }
    roots.into_iter().map(|t| c1.point_at(t)).collect()
}

/// A monotone walk along a bisector: a parameter cursor plus a direction,
/// supporting "first intersection after the cursor" queries.
#[derive(Debug, Clone)]
pub struct BisectorCursor {
    pub curve: BisectorCurve,
    pub t: f64,
    /// +1.0 or -1.0: direction of travel in parameter space.
    pub dir: f64,
}

impl BisectorCursor {
    /// Start a walk at `from` (must lie on the curve) in the given parameter
    /// direction.
    pub fn begin(curve: &BisectorCurve, from: Point, dir: f64) -> Result<Self, GeomError> {
        let res = curve.residual(from);
        let scale = 1.0 + curve.site_lo.dist(from).abs();
        if res.abs() > 1e-6 * scale {
            return Err(GeomError::OffCurve(res));
        }
        Ok(BisectorCursor { curve: curve.clone(), t: curve.param_of(from), dir: dir.signum() })
    }

    pub fn pos(&self) -> Point {
        self.curve.point_at(self.t)
    }

    /// Unit tangent in the direction of travel.
    pub fn travel_dir(&self) -> Point {
        self.curve.tangent_at(self.t) * self.dir
    }

    /// Signed progress of parameter `t` relative to the cursor; positive
    /// means strictly ahead.
    pub fn progress(&self, t: f64) -> f64 {
        (t - self.t) * self.dir
    }

    /// Of the candidate curve parameters, the first strictly ahead of the
    /// cursor (beyond a spatial epsilon), if any.
    pub fn first_ahead(&self, candidates: impl IntoIterator<Item = f64>) -> Option<f64> {
        let eps = self.min_progress();
        candidates
            .into_iter()
            .filter(|&t| self.progress(t) > eps)
            .min_by(|a, b| self.progress(*a).total_cmp(&self.progress(*b)))
    }

    /// Parameter progress corresponding to a ~1e-9 spatial step at the cursor.
    pub fn min_progress(&self) -> f64 {
        let speed = match self.curve.kind {
            CurveKind::Line => 1.0,
            CurveKind::Hyperbola { a, b, .. } => {
                let sh = self.t.sinh().abs();
                let ch = self.t.cosh();
                (a * sh).hypot(b * ch).max(1e-12)
            }
        };
        let scale = 1.0 + self.pos().norm();
        (1e-9 * scale / speed).max(1e-13)
    }

    pub fn advance_to(&mut self, t: f64) {
        debug_assert!(self.progress(t) >= 0.0);
        self.t = t;
    }

    /// Sample `k` points ahead of the cursor at parameter steps `dt`.
    pub fn sample_ahead(&self, k: usize, dt: f64) -> Vec<Point> {
        (1..=k).map(|i| self.curve.point_at(self.t + self.dir * dt * i as f64)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{side_of_bisector, Side};

    fn site(id: usize, x: f64, y: f64, w: f64) -> WeightedSite {
        WeightedSite::new(id, x, y, w)
    }

    #[test]
    fn classify_line_symmetric() {
        let a = site(0, 0.0, -2.0, 0.0);
        let b = site(1, 4.0, -2.0, 0.0);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        assert_eq!(c.kind, CurveKind::Line);
        // vertical line x = 2
        for t in [-3.0, 0.0, 5.0] {
            let p = c.point_at(t);
            assert!((p.x - 2.0).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn classify_empty_dominated() {
        let a = site(0, 0.0, -2.0, 0.0);
        let b = site(1, 1.0, -2.0, 5.0);
        match classify_bisector(&a, &b).unwrap() {
            Bisector::Empty { dominant } => assert_eq!(dominant, 0),
            Bisector::Curve(_) => panic!("expected empty"),
        }
    }

    #[test]
    fn classify_paper_pair_is_line() {
        // equal weights, symmetric positions
        let a = site(0, 3.0, 0.0, 0.0);
        let b = site(1, -3.0, 0.0, 0.0);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        assert_eq!(c.kind, CurveKind::Line);
        let p = c.point_at(1.0);
        assert!(p.x.abs() < 1e-12);
    }

    #[test]
    fn coincident_sites_error() {
        let a = site(0, 1.0, -1.0, 0.5);
        let b = site(1, 1.0, -1.0, 0.5);
        assert!(matches!(
            classify_bisector(&a, &b),
            Err(GeomError::CoincidentSites(0, 1))
        ));
        // distinct weights: lighter dominates
        let b = site(1, 1.0, -1.0, 0.7);
        match classify_bisector(&a, &b).unwrap() {
            Bisector::Empty { dominant } => assert_eq!(dominant, 0),
            _ => panic!(),
        }
    }

    #[test]
    fn hyperbola_points_are_equidistant() {
        let a = site(0, -1.0, -2.0, 0.3);
        let b = site(1, 2.0, -1.0, -0.7);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        for i in -20..=20 {
            let t = i as f64 * 0.35;
            let p = c.point_at(t);
            let (da, db) = (a.dist(p), b.dist(p));
            assert!(
                (da - db).abs() <= 1e-9 * (1.0 + da.abs()),
                "t={t}: da={da} db={db}"
            );
            assert_eq!(side_of_bisector(p, &a, &b), Side::Equidistant);
        }
    }

    #[test]
    fn hline_hits_line_curve() {
        let a = site(0, 0.0, -2.0, 0.0);
        let b = site(1, 4.0, -2.0, 0.0);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        let pts = bisector_hline_intersections(&c, 0.0);
        assert_eq!(pts.len(), 1);
        assert!((pts[0].x - 2.0).abs() < 1e-12 && pts[0].y == 0.0);
    }

    #[test]
    fn hline_hits_symmetric_branch() {
        let a = site(0, -1.0, -1.0, 0.0);
        let b = site(1, 1.0, -1.0, 0.0);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        let pts = bisector_hline_intersections(&c, 0.0);
        assert_eq!(pts.len(), 1);
        assert!(pts[0].x.abs() < 1e-12);
    }

    #[test]
    fn hline_two_hits_on_weighted_branch() {
        // Heavier upper site: its region is a bubble poking above the line,
        // so the branch crosses y = 0 twice, at x = +-sqrt(11.25).
        let a = site(0, 0.0, -3.0, 0.0);
        let b = site(1, 0.0, -1.0, 1.0);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        let pts = bisector_hline_intersections(&c, 0.0);
        assert_eq!(pts.len(), 2, "{pts:?}");
        let r = 11.25f64.sqrt();
        assert!((pts[0].x + r).abs() < 1e-9 && (pts[1].x - r).abs() < 1e-9, "{pts:?}");
        for p in pts {
            assert!((a.dist(p) - b.dist(p)).abs() < 1e-9 * (1.0 + a.dist(p)));
        }
    }

    #[test]
    fn segment_intersections_basic() {
        let a = site(0, -1.0, -1.0, 0.0);
        let b = site(1, 1.0, -1.0, 0.0);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        let hits =
            bisector_segment_intersections(&c, Point::new(-1.0, 1.0), Point::new(1.0, 1.0))
                .unwrap();
        assert_eq!(hits.len(), 1);
        assert!(hits[0].x.abs() < 1e-12 && (hits[0].y - 1.0).abs() < 1e-12);
        let none =
            bisector_segment_intersections(&c, Point::new(1.0, 0.0), Point::new(2.0, 0.0))
                .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn pair_intersections_circumcenter() {
        // Equal-weight sites: bisectors meet at the circumcenter, which for
        // (0,-1), (2,-1), (1,-3) is (1, -7/4): equidistant checks confirm.
        let a = site(0, 0.0, -1.0, 0.0);
        let b = site(1, 2.0, -1.0, 0.0);
        let c = site(2, 1.0, -3.0, 0.0);
        let ab = classify_bisector(&a, &b).unwrap().curve().unwrap();
        let bc = classify_bisector(&b, &c).unwrap().curve().unwrap();
        let pts = bisector_pair_intersections(&ab, &bc).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].x - 1.0).abs() < 1e-9 && (pts[0].y + 1.75).abs() < 1e-9, "{pts:?}");
        let d0 = a.dist(pts[0]);
        assert!((b.dist(pts[0]) - d0).abs() < 1e-9 && (c.dist(pts[0]) - d0).abs() < 1e-9);
    }

    #[test]
    fn apollonius_matches_pairwise_routes() {
        // B(a,b) n B(b,c) must equal B(a,c) n B(b,c).
        let a = site(0, -1.3, -0.9, 0.4);
        let b = site(1, 1.1, -2.0, -0.2);
        let c = site(2, 0.4, -3.5, 0.9);
        let ab = classify_bisector(&a, &b).unwrap().curve().unwrap();
        let bc = classify_bisector(&b, &c).unwrap().curve().unwrap();
        let ac = classify_bisector(&a, &c).unwrap().curve().unwrap();
        let r1 = bisector_pair_intersections(&ab, &bc).unwrap();
        let r2 = bisector_pair_intersections(&ac, &bc).unwrap();
        assert_eq!(r1.len(), r2.len());
        for p in &r1 {
            assert!(
                r2.iter().any(|q| q.dist(*p) < 1e-7),
                "mismatch {r1:?} vs {r2:?}"
            );
        }
        // and they are genuine triple-equidistant points
        for p in &r1 {
            let d = a.dist(*p);
            assert!((b.dist(*p) - d).abs() < 1e-7 && (c.dist(*p) - d).abs() < 1e-7);
        }
    }

    #[test]
    fn pair_intersections_disjoint_branches() {
        // Far-separated pairs whose branches cannot meet.
        let a = site(0, -10.0, -1.0, 0.0);
        let b = site(1, -8.0, -1.0, 0.0);
        let c = site(2, 8.0, -1.0, 0.0);
        let d = site(3, 10.0, -1.0, 0.0);
        let ab = classify_bisector(&a, &b).unwrap().curve().unwrap();
        let cd = classify_bisector(&c, &d).unwrap().curve().unwrap();
        let pts = bisector_pair_intersections(&ab, &cd).unwrap();
        assert!(pts.is_empty(), "{pts:?}");
    }

    #[test]
    fn cursor_walks_upward() {
        let a = site(0, -1.0, -1.0, 0.0);
        let b = site(1, 1.0, -1.0, 0.0);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        let start = Point::new(0.0, 0.0);
        // choose the parameter direction that increases world y
        let t0 = c.param_of(start);
        let dir = if c.tangent_at(t0).y > 0.0 { 1.0 } else { -1.0 };
        let cur = BisectorCursor::begin(&c, start, dir).unwrap();
        let pts = cur.sample_ahead(5, 0.5);
        for w in pts.windows(2) {
            assert!(w[1].y > w[0].y);
        }
    }

    #[test]
    fn cursor_rejects_off_curve() {
        let a = site(0, -1.0, -1.0, 0.0);
        let b = site(1, 1.0, -1.0, 0.0);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        assert!(matches!(
            BisectorCursor::begin(&c, Point::new(0.5, 0.0), 1.0),
            Err(GeomError::OffCurve(_))
        ));
    }

    #[test]
    fn cursor_arc_length_monotone() {
        // Arc length (by numeric integration) strictly increases along the
        // emitted sample order, on a branch walked from its apex.
        let a = site(0, -1.0, -2.0, 0.0);
        let b = site(1, 1.0, -2.0, 0.8);
        let c = classify_bisector(&a, &b).unwrap().curve().unwrap();
        let apex = c.point_at(0.0);
        let cur = BisectorCursor::begin(&c, apex, 1.0).unwrap();
        let pts = cur.sample_ahead(6, 0.3);
        // Simpson integration of |dP/dt| between consecutive params
        let speed = |t: f64| match c.kind {
            CurveKind::Hyperbola { a, b, .. } => (a * t.sinh()).hypot(b * t.cosh()),
            CurveKind::Line => 1.0,
        };
        let mut arc = vec![0.0f64];
        for i in 0..pts.len() {
            let (t0, t1) = (0.3 * i as f64, 0.3 * (i + 1) as f64);
            let mid = 0.5 * (t0 + t1);
            let seg = (t1 - t0) / 6.0 * (speed(t0) + 4.0 * speed(mid) + speed(t1));
            arc.push(arc.last().unwrap() + seg);
        }
        for w in arc.windows(2) {
            assert!(w[1] > w[0]);
        }
    }
}
