//! Synthetic scenes with known mirrors, detection metrics, and the
//! gamma_res ablation sweep.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cluster::build_clusters;
use crate::codec::{encode_bytes, encoded_size, rcf};
use crate::compress::{compress, compress_step, CompressedScene, StepOutcome};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::{accumulate_votes, voxel_center_params, GridConfig};
use crate::math::{self, Vec3};
use crate::mirror::{from_plane, reflect_point, MirrorPlane};
use crate::pairs::build_pair_stream;
use crate::partition::select_mirror;
use crate::scene::{rgb_to_dc, Gaussian, GaussianScene};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeProfile {
    /// Every gaussian shares one attribute set.
    Uniform,
    /// K distinct colors; group i uses color i mod k.
    KColor(usize),
}

/// Recipe for a synthetic scene: an asymmetric filler plus one exactly
/// mirrored group per entry of `mirror_specs`.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    /// Scale for all group sizes; group i holds
    /// `round(base_count * coverage_i)` pairs.
    pub base_count: usize,
    /// (plane, coverage fraction); coverages sum to at most 1.
    pub mirror_specs: Vec<(MirrorPlane<f64>, f64)>,
    /// Stddev of the jitter applied to each reflected copy.
    pub noise_sigma: f64,
    pub attribute_profile: AttributeProfile,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_count == 0 {
            return Err(Error::Config("base_count must be >= 1".into()));
        }
        let sum: f64 = self.mirror_specs.iter().map(|(_, c)| c).sum();
        if self.mirror_specs.iter().any(|&(_, c)| c <= 0.0 || c > 1.0) || sum > 1.0 + 1e-12 {
            return Err(Error::Config(
                "coverage fractions must lie in (0, 1] and sum to at most 1".into(),
            ));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Config("noise_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Generator output: the recentered scene, the ground-truth mirrors
/// re-expressed in the recentered frame, and per-group pair counts.
#[derive(Debug)]
pub struct Synthetic {
    pub scene: GaussianScene<f64>,
    pub mirrors: Vec<MirrorPlane<f64>>,
    pub group_pairs: Vec<usize>,
}

const PALETTE: [[f64; 3]; 6] = [
    [0.9, 0.15, 0.15],
    [0.15, 0.9, 0.15],
    [0.15, 0.15, 0.9],
    [0.9, 0.9, 0.1],
    [0.9, 0.1, 0.9],
    [0.1, 0.9, 0.9],
];

fn group_color(profile: AttributeProfile, group: usize) -> [f64; 3] {
    match profile {
        AttributeProfile::Uniform => [0.6, 0.4, 0.3],
        AttributeProfile::KColor(k) => PALETTE[group % k.min(PALETTE.len()).max(1)],
    }
}

fn make_gaussian(position: Vec3<f64>, color: [f64; 3]) -> Gaussian<f64> {
    Gaussian {
        position,
        scale: [0.02; 3],
        rotation: [1.0, 0.0, 0.0, 0.0],
        opacity: 0.8,
        color_dc: rgb_to_dc(color),
        sh_rest: vec![],
    }
}

fn sample_box(rng: &mut ChaCha8Rng, half: f64) -> Vec3<f64> {
    [
        rng.gen_range(-half..half),
        rng.gen_range(-half..half),
        rng.gen_range(-half..half),
    ]
}

fn gaussian_noise(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3<f64> {
    // Box-Muller; three draws from two uniform pairs.
    let draw = |rng: &mut ChaCha8Rng| {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    [sigma * draw(rng), sigma * draw(rng), sigma * draw(rng)]
}

/// Builds the scene described by `spec`. Each group samples points
/// strictly on the positive side of its plane and appends the exact
/// (optionally jittered) reflections; leftover coverage becomes
/// unmirrored filler.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gaussians = Vec::new();
    let mut group_pairs = Vec::new();

    let mut covered = 0.0;
    for (group, &(m, coverage)) in spec.mirror_specs.iter().enumerate() {
        covered += coverage;
        let pairs = ((spec.base_count as f64) * coverage).round() as usize;
        group_pairs.push(pairs);
        let color = group_color(spec.attribute_profile, group);
        for _ in 0..pairs {
            let mut x = sample_box(&mut rng, 1.5);
            let sd = m.signed_distance(x);
            if sd < 0.0 {
                x = reflect_point(x, &m);
            }
            if m.signed_distance(x) < 0.05 {
                x = math::add(x, math::scale(m.normal(), 0.05));
            }
            let mut mirrored = reflect_point(x, &m);
            if spec.noise_sigma > 0.0 {
                mirrored = math::add(mirrored, gaussian_noise(&mut rng, spec.noise_sigma));
            }
            gaussians.push(make_gaussian(x, color));
            gaussians.push(make_gaussian(mirrored, color));
        }
    }
    let filler = ((spec.base_count as f64) * (1.0 - covered)).round() as usize;
    for i in 0..filler {
        let color = group_color(spec.attribute_profile, spec.mirror_specs.len() + i % 3);
        gaussians.push(make_gaussian(sample_box(&mut rng, 1.5), color));
    }

    let scene = GaussianScene::from_gaussians(gaussians, [0.0; 3]);
    let mirrors = spec
        .mirror_specs
        .iter()
        .map(|(m, _)| {
            let n = m.normal();
            let on_plane = math::scale(n, m.gamma);
            from_plane(n, math::dot(n, math::sub(on_plane, scene.centroid_offset)))
        })
        .collect();
    Ok(Synthetic {
        scene,
        mirrors,
        group_pairs,
    })
}

/// Angle between plane normals, minimized over the antipodal pair.
pub fn angular_error(a: &MirrorPlane<f64>, b: &MirrorPlane<f64>) -> f64 {
    let d = math::dot(a.normal(), b.normal()).abs().min(1.0);
    d.acos()
}

/// Distance between the planes along the normal, measured at the foot
/// point of `b`.
pub fn offset_error(a: &MirrorPlane<f64>, b: &MirrorPlane<f64>) -> f64 {
    let foot = math::scale(b.normal(), b.gamma);
    a.signed_distance(foot).abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    /// Errors of the raw voxel-center mirror against the closest truth.
    pub angular_error_rad: f64,
    pub offset_error: f64,
    /// Errors after refinement (equal to the raw ones when refinement is
    /// disabled or aborted).
    pub refined_angular_error_rad: f64,
    pub refined_offset_error: f64,
    pub votes: u32,
    pub levels_found: usize,
}

fn closest_gt<'a>(
    detected: &MirrorPlane<f64>,
    gt: &'a [MirrorPlane<f64>],
) -> &'a MirrorPlane<f64> {
    gt.iter()
        .min_by(|a, b| {
            let ka = angular_error(detected, a) + offset_error(detected, a);
            let kb = angular_error(detected, b) + offset_error(detected, b);
            ka.partial_cmp(&kb).unwrap()
        })
        .unwrap()
}

/// Runs one detection step without and with refinement and scores both
/// mirrors against the best-matching ground truth. `None` means the
/// detector found no symmetry.
pub fn eval_detection(
    scene: &GaussianScene<f64>,
    gt: &[MirrorPlane<f64>],
    cfg: &Config,
) -> Result<Option<DetectionReport>> {
    if gt.is_empty() {
        return Err(Error::Config("ground truth mirror list is empty".into()));
    }
    let workset: Vec<u32> = (0..scene.len() as u32).collect();

    let mut raw_cfg = cfg.clone();
    raw_cfg.compressor.refine = false;
    let StepOutcome::Symmetry { partition, .. } = compress_step(&workset, scene, &raw_cfg)? else {
        return Ok(None);
    };
    let raw = partition.mirror;
    let votes = partition.votes;
    let gt_plane = closest_gt(&raw, gt);

    let refined = if cfg.compressor.refine {
        match compress_step(&workset, scene, cfg)? {
            StepOutcome::Symmetry { partition, .. } => partition.mirror,
            StepOutcome::NoSymmetry => raw,
        }
    } else {
        raw
    };

    let (_, stats) = compress(scene, cfg)?;
    Ok(Some(DetectionReport {
        angular_error_rad: angular_error(&raw, gt_plane),
        offset_error: offset_error(&raw, gt_plane),
        refined_angular_error_rad: angular_error(&refined, gt_plane),
        refined_offset_error: offset_error(&refined, gt_plane),
        votes,
        levels_found: stats.len(),
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub gamma_res: f64,
    pub angular_error_rad: f64,
    pub offset_error: f64,
    pub votes: u32,
    pub levels: usize,
    pub compressed_bytes: u64,
    pub rcf: f64,
}

/// Baseline byte count: the scene serialized as a 0-level container.
pub fn passthrough_bytes(scene: &GaussianScene<f64>) -> u64 {
    let cs = CompressedScene {
        levels: vec![],
        last_left: vec![],
        last_out: scene.gaussians.clone(),
        centroid_offset: scene.centroid_offset,
        extent: scene.extent,
        householder_rotations: true,
        match_tol: 0.0,
    };
    encoded_size(&cs) as u64
}

/// Detected mirror snapped to its voxel's center, i.e. the plane as the
/// discretization alone delivers it, before any refit or refinement.
pub fn quantized_detection(
    scene: &GaussianScene<f64>,
    cfg: &Config,
) -> Result<Option<(MirrorPlane<f64>, u32)>> {
    let workset: Vec<u32> = (0..scene.len() as u32).collect();
    let positions = scene.positions();
    let clusters = build_clusters(scene, &cfg.clustering, &workset);
    let stream = build_pair_stream(&clusters, cfg.detector.pair_cap, cfg.run.seed);
    if stream.pairs.is_empty() {
        return Ok(None);
    }
    let g = GridConfig {
        alpha_res: cfg.detector.alpha_res,
        beta_res: cfg.detector.beta_res,
        gamma_res: cfg.detector.gamma_res,
        extent: scene.extent,
    };
    let (grid, _) = accumulate_votes(&positions, &stream, &g, cfg.detector.max_grid_bytes)?;
    let Some(sel) = select_mirror(&positions, &stream, &grid, &g) else {
        return Ok(None);
    };
    Ok(Some((voxel_center_params(sel.voxel, &g), sel.votes)))
}

/// One full detect + compress + encode run per gamma_res value. Detection
/// errors are scored on the quantized voxel-center plane so the sweep
/// isolates discretization.
pub fn sweep_gamma_res(
    scene: &GaussianScene<f64>,
    gt: &[MirrorPlane<f64>],
    values: &[f64],
    cfg: &Config,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) || values[0] <= 0.0 {
        return Err(Error::Config(
            "sweep values must be positive and strictly ascending".into(),
        ));
    }
    let original = passthrough_bytes(scene);
    let mut rows = Vec::with_capacity(values.len());
    for &gamma_res in values {
        let mut run_cfg = cfg.clone();
        run_cfg.detector.gamma_res = gamma_res;
        run_cfg.compressor.refine = false;
        let detected = quantized_detection(scene, &run_cfg)?;
        let (cs, stats) = compress(scene, &run_cfg)?;
        let compressed_bytes = encode_bytes(&cs).len() as u64;
        let (angular, offset, votes) = match &detected {
            Some((m, votes)) => {
                let gt_plane = closest_gt(m, gt);
                (angular_error(m, gt_plane), offset_error(m, gt_plane), *votes)
            }
            None => (f64::NAN, f64::NAN, 0),
        };
        rows.push(SweepRow {
            gamma_res,
            angular_error_rad: angular,
            offset_error: offset,
            votes,
            levels: stats.len(),
            compressed_bytes,
            rcf: rcf(original, compressed_bytes)?,
        });
    }
    Ok(rows)
}

/// CSV serialization of sweep rows with a fixed header line.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("gamma_res,angular_error_rad,offset_error,votes,levels,compressed_bytes,rcf\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.gamma_res,
            r.angular_error_rad,
            r.offset_error,
            r.votes,
            r.levels,
            r.compressed_bytes,
            r.rcf
        ));
    }
    out
}

/// Spearman rank correlation; ties share averaged ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rank = |vs: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..vs.len()).collect();
        order.sort_by(|&a, &b| vs[a].partial_cmp(&vs[b]).unwrap());
        let mut ranks = vec![0.0; vs.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && vs[order[j + 1]] == vs[order[i]] {
                j += 1;
            }
            let shared = (i + j) as f64 / 2.0 + 1.0;
            for &k in &order[i..=j] {
                ranks[k] = shared;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..xs.len() {
        num += (rx[i] - mean) * (ry[i] - mean);
        dx += (rx[i] - mean).powi(2);
        dy += (ry[i] - mean).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        return 0.0;
    }
    num / (dx * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mirror::{from_normal_offset, plane_to_params};

    fn one_mirror_spec(seed: u64, noise: f64) -> SyntheticSpec {
        SyntheticSpec {
            base_count: 200,
            mirror_specs: vec![(
                from_normal_offset(math::normalize([1.0, 0.4, 0.5]), 0.3),
                0.8,
            )],
            noise_sigma: noise,
            attribute_profile: AttributeProfile::Uniform,
            seed,
        }
    }

    #[test]
    fn noise_free_scene_is_exactly_symmetric() {
        let spec = SyntheticSpec {
            base_count: 100,
            mirror_specs: vec![(from_normal_offset([0.0, 0.0, 1.0], 0.2), 1.0)],
            noise_sigma: 0.0,
            attribute_profile: AttributeProfile::Uniform,
            seed: 1,
        };
        let s = gen_synthetic(&spec).unwrap();
        assert_eq!(s.scene.len(), 200);
        assert_eq!(s.group_pairs, vec![100]);
        let m = &s.mirrors[0];
        // Every point's reflection is present.
        for g in &s.scene.gaussians {
            let r = reflect_point(g.position, m);
            let best = s
                .scene
                .gaussians
                .iter()
                .map(|h| math::distance(h.position, r))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "unmatched reflection, distance {best}");
        }
    }

    #[test]
    fn determinism_under_seed() {
        let spec = one_mirror_spec(7, 0.01);
        let a = gen_synthetic(&spec).unwrap();
        let b = gen_synthetic(&spec).unwrap();
        assert_eq!(a.scene.gaussians, b.scene.gaussians);
        assert_eq!(a.mirrors.len(), b.mirrors.len());
    }

    #[test]
    fn nested_coverage_bookkeeping() {
        let spec = SyntheticSpec {
            base_count: 100,
            mirror_specs: vec![
                (from_normal_offset([1.0, 0.0, 0.0], 0.4), 0.6),
                (from_normal_offset([0.0, 1.0, 0.0], 0.6), 0.3),
            ],
            noise_sigma: 0.0,
            attribute_profile: AttributeProfile::KColor(3),
            seed: 2,
        };
        let s = gen_synthetic(&spec).unwrap();
        assert_eq!(s.group_pairs, vec![60, 30]);
        assert_eq!(s.scene.len(), 2 * 60 + 2 * 30 + 10);
    }

    #[test]
    fn invalid_coverage_rejected() {
        let mut spec = one_mirror_spec(1, 0.0);
        spec.mirror_specs[0].1 = 1.2;
        assert!(gen_synthetic(&spec).is_err());
    }

    #[test]
    fn exact_scene_detected_within_voxel() {
        let s = gen_synthetic(&one_mirror_spec(3, 0.0)).unwrap();
        let cfg = Config::default();
        let report = eval_detection(&s.scene, &s.mirrors, &cfg)
            .unwrap()
            .expect("detection");
        // Half a voxel in each angle plus boundary slack.
        assert!(report.angular_error_rad < 0.02, "{report:?}");
        assert!(report.offset_error < 0.02, "{report:?}");
        assert!(report.levels_found >= 1);
    }

    #[test]
    fn antipodal_normal_scores_zero() {
        let a = from_normal_offset([0.0, 0.0, 1.0], 0.5);
        // The canonical flip of (-n, -gamma) encodes the same plane.
        let b = plane_to_params([0.0, 0.0, 0.5], [0.0, 0.0, -1.0]);
        assert!(angular_error(&a, &b) < 1e-9);
        assert!(offset_error(&a, &b) < 1e-9);
    }

    #[test]
    fn noisy_scene_still_detected() {
        let cfg = Config::default();
        let noise = 2.0 * cfg.detector.gamma_res;
        let mut spec = one_mirror_spec(4, noise);
        spec.base_count = 1000;
        let s = gen_synthetic(&spec).unwrap();
        let report = eval_detection(&s.scene, &s.mirrors, &cfg).unwrap();
        assert!(report.is_some(), "noisy detection failed");
    }

    #[test]
    fn sweep_single_value() {
        let s = gen_synthetic(&one_mirror_spec(5, 0.0)).unwrap();
        let cfg = Config::default();
        let rows = sweep_gamma_res(&s.scene, &s.mirrors, &[0.01], &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("gamma_res,"));
    }

    #[test]
    fn sweep_requires_ascending_values() {
        let s = gen_synthetic(&one_mirror_spec(6, 0.0)).unwrap();
        let cfg = Config::default();
        assert!(sweep_gamma_res(&s.scene, &s.mirrors, &[0.1, 0.01], &cfg).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]), -1.0);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]);
        assert!(r > 0.9);
    }
}
