//! Splits a workset into left / right / out sets induced by a winning
//! mirror, with bijection enforcement between the two halves.

use crate::grid::{argmax_voxel, params_to_voxel, voxel_center_params, AccumulatorGrid, GridConfig};
use crate::kdtree::KdTree;
use crate::math::{self, Vec3};
use crate::mirror::{
    antipodal_alias, from_plane, plane_from_pair, plane_to_params, reflect_point, MirrorPlane,
};
use crate::pairs::PairStream;
use crate::scalar::Real;

/// A plane through the origin is voted for under both orientations of its
/// normal (the gamma >= 0 flip cannot pick one); when a voxel sits in the
/// first gamma bin, its antipodal twin holds the other half of the votes.
fn origin_twin<S: Real>(
    voxel: (usize, usize, usize),
    g: &GridConfig<S>,
) -> Option<(usize, usize, usize)> {
    if voxel.2 == 0 {
        Some(params_to_voxel(
            &antipodal_alias(&voxel_center_params(voxel, g)),
            g,
        ))
    } else {
        None
    }
}

/// Winning mirror picked by vote count and voter agreement.
#[derive(Debug, Clone, Copy)]
pub struct MirrorSelection<S: Real> {
    /// Consensus plane of the winning voxel's voters: sign-aligned mean
    /// of the pair normals through the mean of the pair midpoints. Has
    /// sub-voxel accuracy and the n_z sign that the voxel's (alpha,
    /// beta) center cannot represent.
    pub mirror: MirrorPlane<S>,
    pub voxel: (usize, usize, usize),
    pub votes: u32,
    /// Mean resultant length of the voters' aligned normals in [0, 1];
    /// near 1 for a real plane, low for a degeneracy pile-up.
    pub consensus: f64,
}

/// At most this many top-vote voxels are screened per step.
const MAX_CANDIDATES: usize = 4096;
/// Voxels below this fraction of the peak count are not screened.
const CANDIDATE_FRACTION: u32 = 4;

#[derive(Clone)]
struct ConsensusAccum<S: Real> {
    sum_n: Vec3<S>,
    sum_c: Vec3<S>,
    reference: Option<Vec3<S>>,
    count: u32,
}

/// Picks the mirror for this round. The raw argmax is unreliable: near
/// the alpha = pi/2 singularity one voxel absorbs votes from unrelated
/// pair normals (the parametrization collapses there), so in noisy
/// scenes a degenerate pile-up can outvote the true plane. Every voxel
/// within a factor of the peak count is therefore screened: its voters'
/// normals are averaged after sign alignment, and the first candidate
/// (by votes, then scan order) whose mean resultant length clears a
/// threshold wins and is refit from its voters. If none passes, the
/// argmax voxel's center is returned unrefit.
pub fn select_mirror<S: Real>(
    positions: &[Vec3<S>],
    stream: &PairStream,
    grid: &AccumulatorGrid,
    g: &GridConfig<S>,
) -> Option<MirrorSelection<S>> {
    let (peak_voxel, peak_votes) = argmax_voxel(grid)?;
    let threshold = (peak_votes / CANDIDATE_FRACTION).max(1);
    let mut candidates: Vec<(u32, usize)> = grid
        .counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c >= threshold)
        .map(|(flat, &c)| (c, flat))
        .collect();
    candidates.sort_unstable_by(|a, b| (b.0, a.1).cmp(&(a.0, b.1)));
    candidates.truncate(MAX_CANDIDATES);

    let (_, db, dg) = grid.dims;
    let unflatten = |flat: usize| (flat / (db * dg), (flat / dg) % db, flat % dg);
    let lookup: std::collections::HashMap<(usize, usize, usize), usize> = candidates
        .iter()
        .enumerate()
        .map(|(slot, &(_, flat))| (unflatten(flat), slot))
        .collect();
    let mut accums = vec![
        ConsensusAccum::<S> {
            sum_n: [S::zero(); 3],
            sum_c: [S::zero(); 3],
            reference: None,
            count: 0,
        };
        candidates.len()
    ];

    let eps_pair = S::from_f64(1e-6) * g.extent;
    for &(i, j) in &stream.pairs {
        let Some((c, n)) = plane_from_pair(positions[i as usize], positions[j as usize], eps_pair)
        else {
            continue;
        };
        let m = plane_to_params(c, n);
        if m.gamma > g.extent {
            continue;
        }
        let Some(&slot) = lookup.get(&params_to_voxel(&m, g)) else {
            continue;
        };
        let acc = &mut accums[slot];
        let aligned = match acc.reference {
            Some(r) if math::dot(r, n) < S::zero() => math::scale(n, -S::one()),
            Some(_) => n,
            None => {
                acc.reference = Some(n);
                n
            }
        };
        acc.sum_n = math::add(acc.sum_n, aligned);
        acc.sum_c = math::add(acc.sum_c, c);
        acc.count += 1;
    }

    // Two-stage screen. The raw resultant length only rejects gross
    // pile-ups: a handful of coincidental same-voxel voters already pulls
    // a true plane's value down toward it. The trimmed pass separates
    // them cleanly: a real plane keeps nearly all voters inside a narrow
    // cone around the mean, a pile-up keeps few.
    const SCREEN_CONSENSUS: f64 = 0.9;
    const MIN_KEPT_FRACTION: f64 = 0.6;
    let min_trimmed = (g.alpha_res + g.beta_res).as_f64().cos();
    for (slot, &(votes, flat)) in candidates.iter().enumerate() {
        let acc = &accums[slot];
        if acc.count == 0 {
            continue;
        }
        let resultant = math::norm(acc.sum_n);
        let consensus = (resultant / S::from_usize(acc.count as usize).unwrap()).as_f64();
        if consensus < SCREEN_CONSENSUS || !(resultant > S::zero()) {
            continue;
        }
        let mean = math::scale(acc.sum_n, S::one() / resultant);
        let voxel = unflatten(flat);
        let Some(trim) = trimmed_refit(positions, stream, voxel, mean, g) else {
            continue;
        };
        if (trim.kept as f64) < MIN_KEPT_FRACTION * acc.count as f64
            || trim.consensus < min_trimmed
        {
            continue;
        }
        return Some(MirrorSelection {
            mirror: trim.mirror,
            voxel,
            votes,
            consensus: trim.consensus,
        });
    }
    Some(MirrorSelection {
        mirror: voxel_center_params(peak_voxel, g),
        voxel: peak_voxel,
        votes: peak_votes,
        consensus: 0.0,
    })
}

struct TrimmedRefit<S: Real> {
    mirror: MirrorPlane<S>,
    kept: u32,
    consensus: f64,
}

/// Refit over the voxel's voters after discarding those whose normals
/// stray from the consensus direction (coincidental same-voxel pairs).
fn trimmed_refit<S: Real>(
    positions: &[Vec3<S>],
    stream: &PairStream,
    voxel: (usize, usize, usize),
    mean: Vec3<S>,
    g: &GridConfig<S>,
) -> Option<TrimmedRefit<S>> {
    let trim_dot = S::from_f64(
        ((g.alpha_res + g.beta_res).as_f64() * 4.0 + 1e-3)
            .min(std::f64::consts::FRAC_PI_4)
            .cos(),
    );
    let eps_pair = S::from_f64(1e-6) * g.extent;
    let mut sum_n = [S::zero(); 3];
    let mut sum_c = [S::zero(); 3];
    let mut kept = 0u32;
    for &(i, j) in &stream.pairs {
        let Some((c, n)) = plane_from_pair(positions[i as usize], positions[j as usize], eps_pair)
        else {
            continue;
        };
        let m = plane_to_params(c, n);
        if m.gamma > g.extent || params_to_voxel(&m, g) != voxel {
            continue;
        }
        let d = math::dot(mean, n);
        if d.abs() < trim_dot {
            continue;
        }
        let aligned = if d < S::zero() {
            math::scale(n, -S::one())
        } else {
            n
        };
        sum_n = math::add(sum_n, aligned);
        sum_c = math::add(sum_c, c);
        kept += 1;
    }
    let len = math::norm(sum_n);
    if kept == 0 || !(len > S::zero()) {
        return None;
    }
    let n = math::scale(sum_n, S::one() / len);
    let centroid = math::scale(sum_c, S::one() / S::from_usize(kept as usize).unwrap());
    Some(TrimmedRefit {
        mirror: from_plane(n, math::dot(n, centroid)),
        kept,
        consensus: (len / S::from_usize(kept as usize).unwrap()).as_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct PartitionResult<S: Real> {
    /// Participants on the normal side; `left[i]` pairs with `right[i]`.
    pub left: Vec<u32>,
    /// Participants opposite the normal.
    pub right: Vec<u32>,
    /// Everything else in the workset.
    pub out: Vec<u32>,
    pub mirror: MirrorPlane<S>,
    /// Pair votes collected by the winning voxel.
    pub votes: u32,
}

/// Re-scans the identical pair stream that produced `mirror` and splits
/// the workset. A gaussian participates if at least one of its pairs
/// quantizes to the winning voxel; participants are then classified by
/// signed distance and reduced to a left/right bijection by greedy
/// nearest-reflection matching. Unmatched participants are demoted to
/// `out`. Returns `None` when no bijective pair survives.
pub fn partition_by_mirror<S: Real>(
    positions: &[Vec3<S>],
    active: &[u32],
    stream: &PairStream,
    mirror: &MirrorPlane<S>,
    g: &GridConfig<S>,
    match_tol: S,
) -> Option<PartitionResult<S>> {
    let voxel = params_to_voxel(mirror, g);
    partition_with_voxel(positions, active, stream, voxel, mirror, g, match_tol)
}

/// Like [`partition_by_mirror`] but with the winning voxel pinned
/// separately from the plane used for sides and matching, so a refined
/// mirror can re-classify the original voters.
pub fn partition_with_voxel<S: Real>(
    positions: &[Vec3<S>],
    active: &[u32],
    stream: &PairStream,
    voxel: (usize, usize, usize),
    mirror: &MirrorPlane<S>,
    g: &GridConfig<S>,
    match_tol: S,
) -> Option<PartitionResult<S>> {
    let eps_pair = S::from_f64(1e-6) * g.extent;
    let twin = origin_twin(voxel, g);
    let mut participant = vec![false; positions.len()];
    let mut votes = 0u32;
    for &(i, j) in &stream.pairs {
        let Some((c, n)) = plane_from_pair(positions[i as usize], positions[j as usize], eps_pair)
        else {
            continue;
        };
        let m = plane_to_params(c, n);
        if m.gamma > g.extent {
            continue;
        }
        let v = params_to_voxel(&m, g);
        if v == voxel || Some(v) == twin {
            participant[i as usize] = true;
            participant[j as usize] = true;
            votes += 1;
        }
    }
    if votes == 0 {
        return None;
    }

    let normal = mirror.normal();
    let mut left_cand: Vec<u32> = Vec::new();
    let mut right_cand: Vec<u32> = Vec::new();
    let mut out: Vec<u32> = Vec::new();
    for &idx in active {
        if !participant[idx as usize] {
            out.push(idx);
            continue;
        }
        let sd = math::dot(normal, positions[idx as usize]) - mirror.gamma;
        if sd > S::zero() {
            left_cand.push(idx);
        } else {
            right_cand.push(idx);
        }
    }

    // Greedy nearest-reflection matching, in left candidate order. The
    // acceptance radius widens with the distance from the origin because
    // a half-voxel angular error displaces far points proportionally.
    let angular_slack = g.alpha_res + g.beta_res;
    let right_positions: Vec<Vec3<S>> = right_cand
        .iter()
        .map(|&i| positions[i as usize])
        .collect();
    let tree = KdTree::build(&right_positions);
    let mut claimed = vec![false; right_cand.len()];
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &li in &left_cand {
        let x = positions[li as usize];
        let reflected = reflect_point(x, mirror);
        let tol = match_tol + math::norm(x) * angular_slack;
        let hit = tree.nearest_filtered(reflected, &mut |ri| !claimed[ri as usize]);
        match hit {
            Some((ri, d2)) if d2 <= tol * tol => {
                claimed[ri as usize] = true;
                left.push(li);
                right.push(right_cand[ri as usize]);
            }
            _ => out.push(li),
        }
    }
    for (i, &ri) in right_cand.iter().enumerate() {
        if !claimed[i] {
            out.push(ri);
        }
    }

    if left.is_empty() {
        return None;
    }
    Some(PartitionResult {
        left,
        right,
        out,
        mirror: *mirror,
        votes,
    })
}
