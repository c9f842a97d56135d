//! Reflective-symmetry compression for 3D Gaussian splat scenes.
//!
//! The pipeline detects mirror planes with a voxelized Hough accumulator
//! over plane parameters (alpha, beta, gamma), stores only one half of
//! each symmetric substructure plus the plane, and reconstructs the rest
//! by reflection. Everything is generic over the scalar type; the
//! aliases at the crate root pin `f64`.

pub mod bench;
pub mod cluster;
pub mod codec;
pub mod compress;
pub mod config;
pub mod error;
pub mod grid;
pub mod kdtree;
pub mod math;
pub mod mirror;
pub mod pairs;
pub mod partition;
pub mod ply;
pub mod refine;
pub mod reflect;
pub mod scalar;
pub mod scene;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default-precision aliases.
pub type Vec3 = math::Vec3<f64>;
pub type Splat = scene::Gaussian<f64>;
pub type Scene = scene::GaussianScene<f64>;
pub type Mirror = mirror::MirrorPlane<f64>;
pub type Compressed = compress::CompressedScene<f64>;
