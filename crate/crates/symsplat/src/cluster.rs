//! Attribute-space bucketing: only similar-looking splats are paired for
//! mirror voting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scene::{dc_to_rgb, rgb_to_hsv, Gaussian, GaussianScene};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub bins_h: u32,
    pub bins_s: u32,
    pub bins_v: u32,
    pub bins_opacity: u32,
    /// Bins per scale axis (same count for x, y, z).
    pub bins_scale: u32,
    /// Log-scale clamp range for scale binning; resolved from the scene
    /// extent when absent.
    pub scale_range: Option<(f64, f64)>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            bins_h: 8,
            bins_s: 4,
            bins_v: 4,
            bins_opacity: 4,
            bins_scale: 4,
            scale_range: None,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.bins_h,
            self.bins_s,
            self.bins_v,
            self.bins_opacity,
            self.bins_scale,
        ];
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::Config("cluster bin counts must be >= 1".into()));
        }
        let mut total: u128 = 1;
        for c in [
            self.bins_h,
            self.bins_s,
            self.bins_v,
            self.bins_opacity,
            self.bins_scale,
            self.bins_scale,
            self.bins_scale,
        ] {
            total *= c as u128;
        }
        if total > u64::MAX as u128 {
            return Err(Error::Config(format!(
                "cluster key space {total} exceeds 64 bits"
            )));
        }
        Ok(())
    }

    /// Total key space N = h * s * v * o * scale^3.
    pub fn key_space(&self) -> u64 {
        self.bins_h as u64
            * self.bins_s as u64
            * self.bins_v as u64
            * self.bins_opacity as u64
            * (self.bins_scale as u64).pow(3)
    }

    /// Log-scale clamp range, defaulting to (ln 1e-4 * extent, ln 0.5 * extent).
    pub fn resolved_scale_range(&self, extent: f64) -> (f64, f64) {
        self.scale_range.unwrap_or_else(|| {
            let e = if extent > 0.0 { extent } else { 1.0 };
            ((1e-4 * e).ln(), (0.5 * e).ln())
        })
    }
}

/// Mixed-radix pack of the 7 bin indices (h, s, v, opacity, sx, sy, sz).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClusterKey(pub u64);

impl ClusterKey {
    pub fn pack(indices: [u32; 7], cfg: &ClusterConfig) -> ClusterKey {
        let radices = Self::radices(cfg);
        let mut key = 0u64;
        for (i, r) in indices.iter().zip(radices) {
            debug_assert!(*i < r);
            key = key * r as u64 + *i as u64;
        }
        ClusterKey(key)
    }

    pub fn unpack(self, cfg: &ClusterConfig) -> [u32; 7] {
        let radices = Self::radices(cfg);
        let mut key = self.0;
        let mut out = [0u32; 7];
        for i in (0..7).rev() {
            out[i] = (key % radices[i] as u64) as u32;
            key /= radices[i] as u64;
        }
        out
    }

    fn radices(cfg: &ClusterConfig) -> [u32; 7] {
        [
            cfg.bins_h,
            cfg.bins_s,
            cfg.bins_v,
            cfg.bins_opacity,
            cfg.bins_scale,
            cfg.bins_scale,
            cfg.bins_scale,
        ]
    }
}

fn bin_unit(v: f64, bins: u32) -> u32 {
    // v in [0, 1]; the top edge clamps into the last bin.
    let idx = (v * bins as f64).floor();
    (idx.max(0.0) as u32).min(bins - 1)
}

/// Bin index key for one splat.
///
/// HSV comes from the activated DC color, opacity is binned uniformly on
/// [0, 1], each scale axis uniformly in log space clamped to the range.
pub fn cluster_key<S: Real>(g: &Gaussian<S>, cfg: &ClusterConfig, scale_range: (f64, f64)) -> ClusterKey {
    let (h, s, v) = rgb_to_hsv(dc_to_rgb(g.color_dc));
    let (lo, hi) = scale_range;
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let scale_bin = |sc: S| {
        let t = ((sc.as_f64().ln() - lo) / span).clamp(0.0, 1.0);
        bin_unit(t, cfg.bins_scale)
    };
    ClusterKey::pack(
        [
            bin_unit(h.as_f64(), cfg.bins_h),
            bin_unit(s.as_f64(), cfg.bins_s),
            bin_unit(v.as_f64(), cfg.bins_v),
            bin_unit(g.opacity.as_f64(), cfg.bins_opacity),
            scale_bin(g.scale[0]),
            scale_bin(g.scale[1]),
            scale_bin(g.scale[2]),
        ],
        cfg,
    )
}

/// Buckets of scene indices keyed by attribute bins. Ordered map so all
/// downstream pair streams are independent of insertion order.
pub type Clusters = BTreeMap<ClusterKey, Vec<u32>>;

/// Partitions `active` into attribute buckets. Singleton buckets are kept;
/// they simply produce no pairs.
pub fn build_clusters<S: Real>(
    scene: &GaussianScene<S>,
    cfg: &ClusterConfig,
    active: &[u32],
) -> Clusters {
    let scale_range = cfg.resolved_scale_range(scene.extent.as_f64());
    let mut clusters = Clusters::new();
    for &idx in active {
        let key = cluster_key(&scene.gaussians[idx as usize], cfg, scale_range);
        clusters.entry(key).or_default().push(idx);
    }
    clusters
}

/// Sum over buckets of C(|bucket|, 2); the uncapped voting budget.
pub fn pair_count(clusters: &Clusters) -> u64 {
    clusters
        .values()
        .map(|v| {
            let n = v.len() as u64;
            n * (n - 1) / 2
        })
        .sum()
}
