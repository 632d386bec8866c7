#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use ckn_core::params::{curve_constants, CknParams, Region};
use ckn_core::make_params;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn usable(p: &CknParams) -> bool {
    (1.2..=8.0).contains(&p.p)
}

/// A valid parameter point with `p` in `[1.2, 8]`.
pub fn random_valid(rng: &mut impl Rng) -> CknParams {
    loop {
        let n = rng.gen_range(2..=5);
        let c = curve_constants(n);
        let a = rng.gen_range(c.a_c - 3.0..c.a_c - 0.05);
        let lo = if a >= 0.0 { a } else { c.b_fs(a) };
        if lo >= a + 1.0 {
            continue;
        }
        let b = rng.gen_range(lo..a + 1.0);
        if let Ok(p) = make_params(n, a, b) {
            if usable(&p) {
                return p;
            }
        }
    }
}

pub fn random_in(rng: &mut impl Rng, region: Region) -> CknParams {
    loop {
        let p = random_valid(rng);
        if p.classify().region == region {
            return p;
        }
    }
}

/// A point strictly between `b_FS` and `b_FS*` for the given dimension.
pub fn random_remaining(rng: &mut impl Rng, n: u32) -> CknParams {
    let c = curve_constants(n);
    loop {
        let hi = c.a_c_star.min(c.a_c - 0.05);
        let a = rng.gen_range(c.a_c - 3.0..hi);
        let (lo, up) = (c.b_fs(a), c.b_fs_star(a).min(a + 1.0));
        if !(lo < up) {
            continue;
        }
        let b = rng.gen_range(lo..up);
        if let Ok(p) = make_params(n, a, b) {
            if usable(&p) && p.classify().region == Region::Remaining {
                return p;
            }
        }
    }
}
