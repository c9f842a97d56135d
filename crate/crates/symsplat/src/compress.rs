//! Iterative compression driver: detect the dominant mirror, keep one
//! half, recurse on what remains.

use serde::Serialize;

use crate::cluster::build_clusters;
use crate::config::Config;
use crate::error::Result;
use crate::grid::{accumulate_votes, GridConfig, VoteStats};
use crate::math::Vec3;
use crate::mirror::MirrorPlane;
use crate::pairs::build_pair_stream;
use crate::partition::{partition_with_voxel, select_mirror, PartitionResult};
use crate::refine::refine_mirror;
use crate::scalar::Real;
use crate::scene::{Gaussian, GaussianScene};

/// One accepted mirror level: the plane plus the retained half's
/// positions, which is all that must be stored for it.
#[derive(Debug, Clone)]
pub struct CompressionLevel<S: Real> {
    pub mirror: MirrorPlane<S>,
    pub retained_positions: Vec<Vec3<S>>,
}

impl<S: Real> CompressionLevel<S> {
    pub fn retained_count(&self) -> usize {
        self.retained_positions.len()
    }
}

/// Hierarchical container: per-level mirrors and retained positions, full
/// attributes only for the innermost level's left and out sets.
#[derive(Debug, Clone)]
pub struct CompressedScene<S: Real> {
    /// Index 0 is the outermost mirror.
    pub levels: Vec<CompressionLevel<S>>,
    pub last_left: Vec<Gaussian<S>>,
    pub last_out: Vec<Gaussian<S>>,
    pub centroid_offset: Vec3<S>,
    pub extent: S,
    /// Orientation handling used while compressing; reconstruction must
    /// reflect the same way.
    pub householder_rotations: bool,
    /// Matching tolerance for reconstruction-time NN queries.
    pub match_tol: S,
}

impl<S: Real> CompressedScene<S> {
    /// Number of primitives the container expands to.
    pub fn expanded_count(&self) -> usize {
        let from_levels: usize = self
            .levels
            .iter()
            .take(self.levels.len().saturating_sub(1))
            .map(|l| l.retained_count())
            .sum();
        let last = if self.levels.is_empty() {
            self.last_left.len()
        } else {
            2 * self.last_left.len()
        };
        from_levels + last + self.last_out.len()
    }

    /// Primitives whose full attributes are stored.
    pub fn stored_attribute_count(&self) -> usize {
        self.last_left.len() + self.last_out.len()
    }
}

/// Per-level log entry for the run report.
#[derive(Debug, Clone, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub votes: u32,
    pub left: usize,
    pub out: usize,
    pub workset: usize,
    pub refined: bool,
    pub vote_stats: VoteStats,
}

/// Outcome of a single detection step.
pub enum StepOutcome<S: Real> {
    Symmetry {
        partition: PartitionResult<S>,
        stats: VoteStats,
        refined: bool,
    },
    NoSymmetry,
}

fn grid_config<S: Real>(cfg: &Config, extent: S) -> GridConfig<S> {
    GridConfig {
        alpha_res: S::from_f64(cfg.detector.alpha_res),
        beta_res: S::from_f64(cfg.detector.beta_res),
        gamma_res: S::from_f64(cfg.detector.gamma_res),
        extent,
    }
}

/// Runs clustering, voting, argmax, partition and (optionally) mirror
/// refinement with a final partition re-check against the refined plane.
pub fn compress_step<S: Real>(
    workset: &[u32],
    scene: &GaussianScene<S>,
    cfg: &Config,
) -> Result<StepOutcome<S>> {
    if workset.len() < 2 {
        return Ok(StepOutcome::NoSymmetry);
    }
    let positions = scene.positions();
    let clusters = build_clusters(scene, &cfg.clustering, workset);
    let stream = build_pair_stream(&clusters, cfg.detector.pair_cap, cfg.run.seed);
    if stream.pairs.is_empty() {
        return Ok(StepOutcome::NoSymmetry);
    }

    let g = grid_config(cfg, scene.extent);
    let (grid, stats) = accumulate_votes(&positions, &stream, &g, cfg.detector.max_grid_bytes)?;
    let argmax_grid = if cfg.detector.smoothing {
        grid.box_smoothed()
    } else {
        grid
    };
    let Some(selection) = select_mirror(&positions, &stream, &argmax_grid, &g) else {
        return Ok(StepOutcome::NoSymmetry);
    };
    let match_tol = S::from_f64(cfg.detector.match_tol());
    let voxel = selection.voxel;
    let mirror = selection.mirror;

    let Some(initial) =
        partition_with_voxel(&positions, workset, &stream, voxel, &mirror, &g, match_tol)
    else {
        return Ok(StepOutcome::NoSymmetry);
    };

    if !cfg.compressor.refine {
        return Ok(StepOutcome::Symmetry {
            partition: initial,
            stats,
            refined: false,
        });
    }

    let left_pos: Vec<Vec3<S>> = initial.left.iter().map(|&i| positions[i as usize]).collect();
    let right_pos: Vec<Vec3<S>> = initial
        .right
        .iter()
        .map(|&i| positions[i as usize])
        .collect();
    let (refined, report) = refine_mirror(&left_pos, &right_pos, &mirror, &cfg.refiner);
    if report.aborted {
        return Ok(StepOutcome::Symmetry {
            partition: initial,
            stats,
            refined: false,
        });
    }

    // Re-check the original voters against the refined plane.
    let Some(final_partition) =
        partition_with_voxel(&positions, workset, &stream, voxel, &refined, &g, match_tol)
    else {
        return Ok(StepOutcome::NoSymmetry);
    };
    Ok(StepOutcome::Symmetry {
        partition: final_partition,
        stats,
        refined: true,
    })
}

/// Full iterative compression. Each accepted level records the mirror and
/// the left half's positions; the next workset is left + out. Stops on
/// no-symmetry, when the winning voxel's support drops below
/// `min_support`, or at the level cap.
pub fn compress<S: Real>(
    scene: &GaussianScene<S>,
    cfg: &Config,
) -> Result<(CompressedScene<S>, Vec<LevelStats>)> {
    let mut workset: Vec<u32> = (0..scene.len() as u32).collect();
    let mut levels: Vec<CompressionLevel<S>> = Vec::new();
    let mut level_stats: Vec<LevelStats> = Vec::new();
    let mut last_partition: Option<PartitionResult<S>> = None;

    while levels.len() < cfg.compressor.max_levels {
        let outcome = compress_step(&workset, scene, cfg)?;
        let StepOutcome::Symmetry {
            partition,
            stats,
            refined,
        } = outcome
        else {
            break;
        };
        let support = partition.votes as f64 / workset.len() as f64;
        if support < cfg.compressor.min_support {
            break;
        }

        let retained_positions: Vec<Vec3<S>> = partition
            .left
            .iter()
            .map(|&i| scene.gaussians[i as usize].position)
            .collect();
        level_stats.push(LevelStats {
            level: levels.len(),
            alpha: partition.mirror.alpha.as_f64(),
            beta: partition.mirror.beta.as_f64(),
            gamma: partition.mirror.gamma.as_f64(),
            votes: partition.votes,
            left: partition.left.len(),
            out: partition.out.len(),
            workset: workset.len(),
            refined,
            vote_stats: stats,
        });
        levels.push(CompressionLevel {
            mirror: partition.mirror,
            retained_positions,
        });
        workset = partition
            .left
            .iter()
            .chain(&partition.out)
            .copied()
            .collect();
        last_partition = Some(partition);
    }

    let (last_left, last_out) = match &last_partition {
        Some(p) => (
            p.left
                .iter()
                .map(|&i| scene.gaussians[i as usize].clone())
                .collect(),
            p.out
                .iter()
                .map(|&i| scene.gaussians[i as usize].clone())
                .collect(),
        ),
        None => (Vec::new(), scene.gaussians.clone()),
    };

    Ok((
        CompressedScene {
            levels,
            last_left,
            last_out,
            centroid_offset: scene.centroid_offset,
            extent: scene.extent,
            householder_rotations: cfg.compressor.reflect_rotations,
            match_tol: S::from_f64(cfg.detector.match_tol()),
        },
        level_stats,
    ))
}
