//! Scratch probe: internals of the triple-vertex quadratic on the
//! ill-conditioned configuration.

use udg_core::geom::{Point, WeightedSite};

fn main() {
    let s1 = WeightedSite::new(0, -93.46641120697468, -0.04242615131857792, -0.9930206499118954);
    let s2 = WeightedSite::new(1, 327.75199785505197, -0.02201420248533255, -0.9885786061347321);
    let s3 = WeightedSite::new(2, -354.50159118204687, -0.05514263512296795, -0.9975054221893749);

    let m11 = 2.0 * (s2.pos.x - s1.pos.x);
    let m12 = 2.0 * (s2.pos.y - s1.pos.y);
    let m21 = 2.0 * (s3.pos.x - s1.pos.x);
    let m22 = 2.0 * (s3.pos.y - s1.pos.y);
    let det = m11 * m22 - m12 * m21;
    println!("M = [{m11}, {m12}; {m21}, {m22}], det = {det:e}");
    let n1 = s1.pos.dot(s1.pos);
    let n2 = s2.pos.dot(s2.pos);
    let n3 = s3.pos.dot(s3.pos);
    let c01 = n2 - n1 + s1.w * s1.w - s2.w * s2.w;
    let c02 = n3 - n1 + s1.w * s1.w - s3.w * s3.w;
    let d1 = 2.0 * (s2.w - s1.w);
    let d2 = 2.0 * (s3.w - s1.w);
    let inv = 1.0 / det;
    let p0 = Point::new((c01 * m22 - c02 * m12) * inv, (m11 * c02 - m21 * c01) * inv);
    let p1 = Point::new((d1 * m22 - d2 * m12) * inv, (m11 * d2 - m21 * d1) * inv);
    println!("p0 = ({:e}, {:e})", p0.x, p0.y);
    println!("p1 = ({:e}, {:e})", p1.x, p1.y);
    let e = p0 - s1.pos;
    let qa = p1.dot(p1) - 1.0;
    let qb = 2.0 * p1.dot(e) + 2.0 * s1.w;
    let qc = e.dot(e) - s1.w * s1.w;
    println!("qa = {qa:e}, qb = {qb:e}, qc = {qc:e}");
    let disc = qb * qb - 4.0 * qa * qc;
    println!("disc = {disc:e}, sqrt = {:e}", disc.max(0.0).sqrt());
    let sq = disc.max(0.0).sqrt();
    let qq = if qb >= 0.0 { -(qb + sq) / 2.0 } else { -(qb - sq) / 2.0 };
    println!("roots: r1 = {:e}, r2 = {:e}", qq / qa, qc / qq);
    for r in [qq / qa, qc / qq] {
        let p = p0 + p1 * r;
        println!(
            "  r={r:e}: p=({:e},{:e})  d1={:e} d2={:e} d3={:e}",
            p.x,
            p.y,
            s1.dist(p),
            s2.dist(p),
            s3.dist(p)
        );
    }
}
