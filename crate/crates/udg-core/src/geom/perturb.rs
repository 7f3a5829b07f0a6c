//! Seeded random perturbation of site coordinates.
//!
//! The diagrams assume general position (no point equidistant to four
//! sites, no contour tangent to the reference line). Rather than symbolic
//! perturbation, degenerate inputs are nudged by a tiny seeded offset and
//! the construction retried; the perturbation used is recorded so outputs
//! stay reproducible.

use super::WeightedSite;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default perturbation magnitude.
pub const DEFAULT_EPS: f64 = 1e-7;

/// Record of a perturbation applied to an input, for output metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbMeta {
    pub eps: f64,
    pub seed: u64,
}

/// Perturb site positions by up to `eps` in each coordinate (uniform,
/// seeded). Sites strictly below the x-axis stay strictly below.
pub fn perturb_sites(sites: &[WeightedSite], eps: f64, seed: u64) -> Vec<WeightedSite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sites
        .iter()
        .map(|s| {
            let dx = rng.gen_range(-eps..=eps);
            let dy = rng.gen_range(-eps..=eps);
            let mut y = s.pos.y + dy;
            if s.pos.y < 0.0 && y >= 0.0 {
                y = -f64::MIN_POSITIVE.max(1e-300);
            }
            WeightedSite::new(s.id, s.pos.x + dx, y, s.w)
        })
        .collect()
}

/// Derive the retry seed for attempt `k` from a base seed.
pub fn retry_seed(base: u64, attempt: u32) -> u64 {
    base.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
