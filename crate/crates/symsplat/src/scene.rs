//! In-memory splat scene: activated attributes, recentered positions.

use crate::math::{self, Quat, Vec3};
use crate::scalar::Real;

/// Zeroth-order spherical harmonics basis constant.
pub const SH_C0: f64 = 0.282_094_791_7;

/// One splat primitive with activation functions already applied:
/// `scale` is exp of the stored log-scale, `opacity` is the logistic of the
/// stored logit.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian<S: Real> {
    pub position: Vec3<S>,
    pub scale: Vec3<S>,
    /// Unit quaternion (w, x, y, z).
    pub rotation: Quat<S>,
    /// In [0, 1].
    pub opacity: S,
    /// Spherical harmonics DC coefficients.
    pub color_dc: Vec3<S>,
    /// Higher-order SH coefficients carried verbatim (raw f32 file values).
    pub sh_rest: Vec<f32>,
}

impl<S: Real> Gaussian<S> {
    /// Covariance matrix R diag(s^2) R^T.
    pub fn covariance(&self) -> math::Mat3<S> {
        math::covariance(self.rotation, self.scale)
    }
}

/// A whole scene, recentered so the position centroid sits at the origin.
#[derive(Debug, Clone)]
pub struct GaussianScene<S: Real> {
    pub gaussians: Vec<Gaussian<S>>,
    /// Translation removed at load time; re-added on save.
    pub centroid_offset: Vec3<S>,
    /// Scene radius: max position norm after recentering.
    pub extent: S,
}

impl<S: Real> GaussianScene<S> {
    /// Builds a scene from raw gaussians, recentering at the position
    /// centroid and accumulating the shift into `extra_offset`.
    pub fn from_gaussians(mut gaussians: Vec<Gaussian<S>>, extra_offset: Vec3<S>) -> Self {
        let n = gaussians.len();
        let mut centroid = [S::zero(); 3];
        for g in &gaussians {
            centroid = math::add(centroid, g.position);
        }
        if n > 0 {
            centroid = math::scale(centroid, S::one() / S::from_usize(n).unwrap());
        }
        let mut extent = S::zero();
        for g in &mut gaussians {
            g.position = math::sub(g.position, centroid);
            extent = extent.max(math::norm(g.position));
        }
        GaussianScene {
            gaussians,
            centroid_offset: math::add(extra_offset, centroid),
            extent,
        }
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3<S>> {
        self.gaussians.iter().map(|g| g.position).collect()
    }
}

/// DC coefficient to base color: 0.5 + C0 * dc, clamped to [0, 1].
pub fn dc_to_rgb<S: Real>(dc: Vec3<S>) -> Vec3<S> {
    let c0 = S::from_f64(SH_C0);
    let mut rgb = [S::zero(); 3];
    for i in 0..3 {
        rgb[i] = (S::half() + c0 * dc[i]).max(S::zero()).min(S::one());
    }
    rgb
}

/// Inverse of `dc_to_rgb` on the un-clamped range; test support.
pub fn rgb_to_dc<S: Real>(rgb: Vec3<S>) -> Vec3<S> {
    let c0 = S::from_f64(SH_C0);
    [
        (rgb[0] - S::half()) / c0,
        (rgb[1] - S::half()) / c0,
        (rgb[2] - S::half()) / c0,
    ]
}

/// Standard HSV conversion; hue normalized to [0, 1), gray maps to hue 0.
pub fn rgb_to_hsv<S: Real>(rgb: Vec3<S>) -> (S, S, S) {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > S::zero() { delta / max } else { S::zero() };
    let six = S::from_f64(6.0);
    let h = if delta == S::zero() {
        S::zero()
    } else if max == r {
        let mut h = ((g - b) / delta) / six;
        if h < S::zero() {
            h = h + S::one();
        }
        h
    } else if max == g {
        (S::two() + (b - r) / delta) / six
    } else {
        (S::from_f64(4.0) + (r - g) / delta) / six
    };
    // Wrap the h == 1.0 edge back into [0, 1).
    let h = if h >= S::one() { h - S::one() } else { h };
    (h, s, v)
}

/// Logistic activation used for opacity.
pub fn logistic<S: Real>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

/// Inverse of `logistic`.
pub fn logit<S: Real>(p: S) -> S {
    (p / (S::one() - p)).ln()
}
