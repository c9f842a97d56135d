//! Deterministic per-cluster pair stream.
//!
//! The same stream feeds voting and the partition re-scan, so it must be
//! reproducible under a fixed seed regardless of thread count. Clusters
//! whose pair count exceeds the cap are subsampled without replacement
//! with an RNG derived from (seed, cluster key), which keeps the
//! selection independent of cluster iteration order.

use std::collections::HashSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::cluster::Clusters;

/// Pairs of scene indices eligible to vote.
#[derive(Debug, Clone, Default)]
pub struct PairStream {
    pub pairs: Vec<(u32, u32)>,
    /// Pairs dropped by per-cluster subsampling.
    pub capped: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Unranks linear pair index k in [0, m(m-1)/2) to (i, j) with i < j,
/// enumerated row by row: (0,1), (0,2), ..., (1,2), ...
fn unrank_pair(k: u64, m: u64) -> (u32, u32) {
    // Row i starts at offset i*m - i*(i+1)/2 - i ... solve approximately,
    // then fix up.
    let total = m * (m - 1) / 2;
    debug_assert!(k < total);
    let rev = total - 1 - k;
    // rev indexes pairs from the end; row from the end has length 1, 2, ...
    let r = (((8.0 * rev as f64 + 1.0).sqrt() - 1.0) / 2.0).floor() as u64;
    let mut r = r.min(m - 2);
    while r * (r + 1) / 2 > rev {
        r -= 1;
    }
    while (r + 1) * (r + 2) / 2 <= rev {
        r += 1;
    }
    let i = m - 2 - r;
    let offset_in_row = k - (total - (r + 1) * (r + 2) / 2);
    let j = i + 1 + offset_in_row;
    (i as u32, j as u32)
}

/// Enumerates (or subsamples) the unordered pairs of every cluster.
pub fn build_pair_stream(clusters: &Clusters, pair_cap: u64, seed: u64) -> PairStream {
    let mut stream = PairStream::default();
    for (key, members) in clusters {
        let m = members.len() as u64;
        if m < 2 {
            continue;
        }
        let total = m * (m - 1) / 2;
        if total <= pair_cap {
            for a in 0..members.len() {
                for b in a + 1..members.len() {
                    stream.pairs.push((members[a], members[b]));
                }
            }
        } else {
            stream.capped += total - pair_cap;
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ key.0));
            let mut chosen: HashSet<u64> = HashSet::with_capacity(pair_cap as usize);
            let mut ranks: Vec<u64> = Vec::with_capacity(pair_cap as usize);
            while ranks.len() < pair_cap as usize {
                let k = rng.gen_range(0..total);
                if chosen.insert(k) {
                    ranks.push(k);
                }
            }
            ranks.sort_unstable();
            for k in ranks {
                let (a, b) = unrank_pair(k, m);
                stream.pairs.push((members[a as usize], members[b as usize]));
            }
        }
    }
    stream
}
