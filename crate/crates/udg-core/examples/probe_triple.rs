//! Scratch probe: closed-form triple-vertex solve on an ill-conditioned
//! far-vertex configuration.

use udg_core::geom::{apollonius_vertices, classify_bisector, Point, WeightedSite};

fn main() {
    let a = WeightedSite::new(0, -93.46641120697468, -0.04242615131857792, -0.9930206499118954);
    let b = WeightedSite::new(1, 327.75199785505197, -0.02201420248533255, -0.9885786061347321);
    let o = WeightedSite::new(2, -354.50159118204687, -0.05514263512296795, -0.9975054221893749);

    match apollonius_vertices(&a, &b, &o) {
        Ok(vs) => {
            println!("{} vertices", vs.len());
            for (p, r) in vs {
                println!(
                    "p=({:.6e},{:.6e}) r={:.6e} residuals: {:.3e} {:.3e}",
                    p.x,
                    p.y,
                    r,
                    a.dist(p) - b.dist(p),
                    a.dist(p) - o.dist(p)
                );
            }
        }
        Err(e) => println!("error: {e}"),
    }

    // Where does the contour B(a,b) actually cross B(a,o)? Scan params.
    let cab = classify_bisector(&a, &b).unwrap().curve().unwrap();
    let cao = classify_bisector(&a, &o).unwrap().curve().unwrap();
    let g = |t: f64| cao.residual(cab.point_at(t));
    let mut prev = g(9.25);
    for i in 1..=200 {
        let t = 9.25 + i as f64 * 0.15;
        let cur = g(t);
        if prev * cur < 0.0 {
            println!("sign change of B(a,o) residual along B(a,b) at t in [{}, {t}]", t - 0.15);
            let p = cab.point_at(t);
            println!("  |p| there ~ {:.3e}", p.norm());
        }
        prev = cur;
    }
    let far = cab.point_at(25.0);
    println!("g(9.3)={:.6e} g(15)={:.6e} g(25)={:.6e} |p(25)|={:.3e}", g(9.3), g(15.0), g(25.0), far.norm());
}
