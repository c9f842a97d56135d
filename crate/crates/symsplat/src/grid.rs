//! Voxelized (alpha, beta, gamma) accumulator and the voting pass.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mirror::{plane_from_pair, plane_to_params, MirrorPlane};
use crate::pairs::PairStream;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct GridConfig<S: Real> {
    /// Voxel size along alpha, radians.
    pub alpha_res: S,
    /// Voxel size along beta, radians.
    pub beta_res: S,
    /// Voxel size along gamma, scene units.
    pub gamma_res: S,
    /// Scene radius; bounds gamma.
    pub extent: S,
}

impl<S: Real> GridConfig<S> {
    /// Grid dimensions (d_alpha, d_beta, d_gamma), each at least 1.
    pub fn dims(&self) -> (usize, usize, usize) {
        let d = |span: S, res: S| ((span / res).floor().as_f64() as usize).max(1);
        (
            d(S::pi(), self.alpha_res),
            d(S::two_pi(), self.beta_res),
            d(self.extent, self.gamma_res),
        )
    }

    pub fn voxel_count(&self) -> usize {
        let (a, b, g) = self.dims();
        a * b * g
    }

    pub fn validate(&self, memory_budget_bytes: usize) -> Result<()> {
        if !(self.alpha_res > S::zero() && self.beta_res > S::zero() && self.gamma_res > S::zero())
        {
            return Err(Error::Config("grid resolutions must be > 0".into()));
        }
        if !(self.extent > S::zero()) {
            return Err(Error::Config("scene extent must be > 0".into()));
        }
        let required = self.voxel_count() * std::mem::size_of::<u32>();
        if required > memory_budget_bytes {
            return Err(Error::GridTooLarge {
                required,
                budget: memory_budget_bytes,
            });
        }
        Ok(())
    }
}

/// Dense vote counts over mirror-parameter voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatorGrid {
    pub dims: (usize, usize, usize),
    pub counts: Vec<u32>,
}

impl AccumulatorGrid {
    pub fn zeroed(dims: (usize, usize, usize)) -> Self {
        AccumulatorGrid {
            dims,
            counts: vec![0; dims.0 * dims.1 * dims.2],
        }
    }

    #[inline]
    pub fn flat_index(&self, v: (usize, usize, usize)) -> usize {
        (v.0 * self.dims.1 + v.1) * self.dims.2 + v.2
    }

    pub fn total_votes(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn occupied_voxels(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// 3x3x3 box sum; counters the splitting of votes across voxel
    /// boundaries. Returns a new grid.
    pub fn box_smoothed(&self) -> AccumulatorGrid {
        let (da, db, dg) = self.dims;
        let mut out = AccumulatorGrid::zeroed(self.dims);
        for a in 0..da {
            for b in 0..db {
                for g in 0..dg {
                    let mut sum = 0u32;
                    for aa in a.saturating_sub(1)..(a + 2).min(da) {
                        for bb in b.saturating_sub(1)..(b + 2).min(db) {
                            for gg in g.saturating_sub(1)..(g + 2).min(dg) {
                                sum += self.counts[(aa * db + bb) * dg + gg];
                            }
                        }
                    }
                    out.counts[(a * db + b) * dg + g] = sum;
                }
            }
        }
        out
    }
}

/// Side-channel counts from one voting pass.
#[derive(Debug, Clone, Default, Serialize)]
pub struct VoteStats {
    pub total_votes: u64,
    pub skipped_degenerate: u64,
    pub skipped_gamma_out_of_range: u64,
    pub capped_pairs: u64,
    pub peak_votes: u32,
    pub peak_voxel: (usize, usize, usize),
    pub occupied_voxels: usize,
}

/// Voxel of a mirror plane: floor division per axis, top edge clamped
/// into the last bin.
pub fn params_to_voxel<S: Real>(m: &MirrorPlane<S>, g: &GridConfig<S>) -> (usize, usize, usize) {
    let dims = g.dims();
    let idx = |v: S, res: S, dim: usize| -> usize {
        let i = (v / res).floor().as_f64();
        (i.max(0.0) as usize).min(dim - 1)
    };
    (
        idx(m.alpha, g.alpha_res, dims.0),
        idx(m.beta, g.beta_res, dims.1),
        idx(m.gamma, g.gamma_res, dims.2),
    )
}

#[inline]
fn vote_voxel<S: Real>(
    x_i: Vec3<S>,
    x_j: Vec3<S>,
    g: &GridConfig<S>,
    eps_pair: S,
) -> std::result::Result<(usize, usize, usize), Skip> {
    let (c, n) = plane_from_pair(x_i, x_j, eps_pair).ok_or(Skip::Degenerate)?;
    let m = plane_to_params(c, n);
    if m.gamma > g.extent {
        return Err(Skip::GammaOutOfRange);
    }
    Ok(params_to_voxel(&m, g))
}

enum Skip {
    Degenerate,
    GammaOutOfRange,
}

/// Casts every pair's vote into a shared atomic grid, parallel over pair
/// chunks. Counts are bit-identical for any thread count because voxel
/// increments commute.
pub fn accumulate_votes<S: Real>(
    positions: &[Vec3<S>],
    stream: &PairStream,
    g: &GridConfig<S>,
    memory_budget_bytes: usize,
) -> Result<(AccumulatorGrid, VoteStats)> {
    g.validate(memory_budget_bytes)?;
    let dims = g.dims();
    let voxels = dims.0 * dims.1 * dims.2;
    let counts: Vec<AtomicU32> = (0..voxels).map(|_| AtomicU32::new(0)).collect();
    let degenerate = AtomicU64::new(0);
    let gamma_skips = AtomicU64::new(0);
    let eps_pair = S::from_f64(1e-6) * g.extent;

    stream.pairs.par_chunks(16 * 1024).for_each(|chunk| {
        let mut local_degenerate = 0u64;
        let mut local_gamma = 0u64;
        for &(i, j) in chunk {
            match vote_voxel(positions[i as usize], positions[j as usize], g, eps_pair) {
                Ok(v) => {
                    let flat = (v.0 * dims.1 + v.1) * dims.2 + v.2;
                    counts[flat].fetch_add(1, Ordering::Relaxed);
                }
                Err(Skip::Degenerate) => local_degenerate += 1,
                Err(Skip::GammaOutOfRange) => local_gamma += 1,
            }
        }
        degenerate.fetch_add(local_degenerate, Ordering::Relaxed);
        gamma_skips.fetch_add(local_gamma, Ordering::Relaxed);
    });

    let grid = AccumulatorGrid {
        dims,
        counts: counts.into_iter().map(|c| c.into_inner()).collect(),
    };
    let stats = finish_stats(
        &grid,
        degenerate.into_inner(),
        gamma_skips.into_inner(),
        stream.capped,
    );
    Ok((grid, stats))
}

/// Single-threaded reference voting pass over the same pair stream.
pub fn accumulate_votes_serial<S: Real>(
    positions: &[Vec3<S>],
    stream: &PairStream,
    g: &GridConfig<S>,
    memory_budget_bytes: usize,
) -> Result<(AccumulatorGrid, VoteStats)> {
    g.validate(memory_budget_bytes)?;
    let mut grid = AccumulatorGrid::zeroed(g.dims());
    let mut degenerate = 0u64;
    let mut gamma_skips = 0u64;
    let eps_pair = S::from_f64(1e-6) * g.extent;
    for &(i, j) in &stream.pairs {
        match vote_voxel(positions[i as usize], positions[j as usize], g, eps_pair) {
            Ok(v) => {
                let flat = grid.flat_index(v);
                grid.counts[flat] += 1;
            }
            Err(Skip::Degenerate) => degenerate += 1,
            Err(Skip::GammaOutOfRange) => gamma_skips += 1,
        }
    }
    let stats = finish_stats(&grid, degenerate, gamma_skips, stream.capped);
    Ok((grid, stats))
}

fn finish_stats(
    grid: &AccumulatorGrid,
    degenerate: u64,
    gamma_skips: u64,
    capped: u64,
) -> VoteStats {
    let mut stats = VoteStats {
        total_votes: grid.total_votes(),
        skipped_degenerate: degenerate,
        skipped_gamma_out_of_range: gamma_skips,
        capped_pairs: capped,
        occupied_voxels: grid.occupied_voxels(),
        ..VoteStats::default()
    };
    if let Some((m, votes)) = argmax_voxel(grid) {
        stats.peak_voxel = m;
        stats.peak_votes = votes;
    }
    stats
}

/// Highest-vote voxel; ties broken by smallest (i_alpha, i_beta, i_gamma)
/// lexicographically (the scan order). `None` if the grid is all zeros.
pub fn argmax_voxel(grid: &AccumulatorGrid) -> Option<((usize, usize, usize), u32)> {
    let (da, db, dg) = grid.dims;
    let mut best: Option<(usize, u32)> = None;
    for (flat, &c) in grid.counts.iter().enumerate() {
        if c > 0 && best.map_or(true, |(_, bc)| c > bc) {
            best = Some((flat, c));
        }
    }
    best.map(|(flat, c)| {
        let g = flat % dg;
        let b = (flat / dg) % db;
        let a = flat / (dg * db);
        ((a, b, g), c)
    })
    .map(|(v, c)| {
        debug_assert!(v.0 < da);
        (v, c)
    })
}

/// Voxel-center mirror of the winning voxel, or `None` when no votes were
/// cast (the no-symmetry signal).
pub fn argmax_mirror<S: Real>(
    grid: &AccumulatorGrid,
    g: &GridConfig<S>,
) -> Option<(MirrorPlane<S>, u32)> {
    let (voxel, votes) = argmax_voxel(grid)?;
    Some((voxel_center_params(voxel, g), votes))
}

/// Mirror parameters at the center of a voxel.
pub fn voxel_center_params<S: Real>(
    voxel: (usize, usize, usize),
    g: &GridConfig<S>,
) -> MirrorPlane<S> {
    let center = |i: usize, res: S| (S::from_usize(i).unwrap() + S::half()) * res;
    MirrorPlane {
        alpha: center(voxel.0, g.alpha_res),
        beta: center(voxel.1, g.beta_res),
        gamma: center(voxel.2, g.gamma_res),
    }
}
