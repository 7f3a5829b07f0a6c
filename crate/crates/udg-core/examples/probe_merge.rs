//! Scratch probe: retry rates and timing across many seeds and sizes.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use udg_core::geom::WeightedSite;
use udg_core::merge::{merge_vdplus_full, MergeOptions};
use udg_core::vd::build::build_vdplus_full;

fn random_sites(rng: &mut ChaCha8Rng, n: usize, id0: usize) -> Vec<WeightedSite> {
    (0..n)
        .map(|i| {
            WeightedSite::new(
                id0 + i,
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-3.0..-0.01),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect()
}

fn main() {
    let mut total_retries = 0u32;
    let mut merge_fails = 0u32;
    let t0 = Instant::now();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sa = random_sites(&mut rng, 1000, 0);
        let sb = random_sites(&mut rng, 1000, 1000);
        let oa = build_vdplus_full(&sa, seed).unwrap();
        let ob = build_vdplus_full(&sb, seed ^ 0xff).unwrap();
        total_retries += oa.retries + ob.retries;
        if oa.retries + ob.retries > 0 {
            println!(
                "seed {seed}: retries {} + {} ({:?} | {:?})",
                oa.retries, ob.retries, oa.first_error, ob.first_error
            );
        }
        match merge_vdplus_full(&oa.diagram.svd, &ob.diagram.svd, &MergeOptions::default()) {
            Ok(_) => {}
            Err(e) => {
                merge_fails += 1;
                println!("seed {seed}: merge failed: {e}");
            }
        }
    }
    println!(
        "20 builds of 2x1000 + merges in {:.2?}; build retries: {total_retries}, merge failures: {merge_fails}",
        t0.elapsed()
    );

    // merge timing trend: per-merge wall time at doubling sizes
    for exp in 12..=17u32 {
        let n = 1usize << exp;
        let mut rng = ChaCha8Rng::seed_from_u64(1234 + exp as u64);
        let scale = (n as f64).sqrt();
        let sa: Vec<WeightedSite> = (0..n / 2)
            .map(|i| {
                WeightedSite::new(
                    i,
                    rng.gen_range(-scale..scale),
                    rng.gen_range(-3.0..-0.01),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let sb: Vec<WeightedSite> = (0..n / 2)
            .map(|i| {
                WeightedSite::new(
                    n / 2 + i,
                    rng.gen_range(-scale..scale),
                    rng.gen_range(-3.0..-0.01),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let oa = build_vdplus_full(&sa, 1).unwrap();
        let ob = build_vdplus_full(&sb, 2).unwrap();
        let t = Instant::now();
        let out = merge_vdplus_full(&oa.diagram.svd, &ob.diagram.svd, &MergeOptions::default());
        let dt = t.elapsed();
        match out {
            Ok(o) => println!(
                "n=2^{exp}: merge {dt:.2?}, seeds={}, edge_x={}, spoke_x={}",
                o.stats.seeds, o.stats.edge_crossings, o.stats.spoke_crossings
            ),
            Err(e) => println!("n=2^{exp}: merge FAILED {e}"),
        }
    }
}
