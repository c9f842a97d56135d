//! Run configuration: TOML blocks [clustering], [detector], [refiner],
//! [compressor], [run].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterConfig;
use crate::error::{Error, Result};
use crate::refine::RefineOptions;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub alpha_res: f64,
    pub beta_res: f64,
    /// 0.01 suits object-scale scenes, 0.1 room-scale ones.
    pub gamma_res: f64,
    /// 3x3x3 box-sum smoothing of the grid before the argmax.
    pub smoothing: bool,
    /// Base tolerance for nearest-reflection matching; defaults to
    /// gamma_res when absent.
    pub match_tol: Option<f64>,
    /// Per-cluster pair budget; larger clusters are subsampled.
    pub pair_cap: u64,
    /// Accumulator memory budget in bytes.
    pub max_grid_bytes: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            alpha_res: 0.01,
            beta_res: 0.01,
            gamma_res: 0.01,
            smoothing: false,
            match_tol: None,
            pair_cap: 2_000_000,
            max_grid_bytes: 2 << 30,
        }
    }
}

impl DetectorConfig {
    pub fn match_tol(&self) -> f64 {
        self.match_tol.unwrap_or(self.gamma_res)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CompressorConfig {
    /// Minimum winning-voxel votes per workset gaussian to accept a level.
    pub min_support: f64,
    pub max_levels: usize,
    /// Run mirror refinement after each detection.
    pub refine: bool,
    /// Reflect orientations via the Householder construction; when off
    /// quaternions are copied verbatim.
    pub reflect_rotations: bool,
}

impl Default for CompressorConfig {
    fn default() -> Self {
        CompressorConfig {
            min_support: 0.05,
            max_levels: 8,
            refine: true,
            reflect_rotations: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// 0 means the rayon default.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 0, threads: 0 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub clustering: ClusterConfig,
    pub detector: DetectorConfig,
    pub refiner: RefineOptions,
    pub compressor: CompressorConfig,
    pub run: RunConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let cfg: Config =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.clustering.validate()?;
        if self.detector.alpha_res <= 0.0
            || self.detector.beta_res <= 0.0
            || self.detector.gamma_res <= 0.0
        {
            return Err(Error::Config("detector resolutions must be > 0".into()));
        }
        if self.refiner.step_size <= 0.0 {
            return Err(Error::Config("refiner step_size must be > 0".into()));
        }
        if self.refiner.max_iters == 0 {
            return Err(Error::Config("refiner max_iters must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.refiner.trim_fraction) {
            return Err(Error::Config("refiner trim_fraction must be in [0, 1]".into()));
        }
        if self.compressor.min_support < 0.0 {
            return Err(Error::Config("compressor min_support must be >= 0".into()));
        }
        Ok(())
    }
}
