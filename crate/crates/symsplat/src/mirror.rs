//! Mirror plane parametrization.
//!
//! A plane is stored in (alpha, beta, gamma) form: the unit normal is
//! encoded by alpha = acos(n_x) and beta = atan2(n_y, n_x) + pi wrapped
//! into [0, 2pi), and gamma is the offset from the origin along the
//! normal. The two angles cannot represent the sign of n_z, so stored
//! planes keep n_z >= 0 and let gamma carry either sign; only the voting
//! quantization ([`plane_to_params`]) uses the gamma >= 0 orientation.

use serde::{Deserialize, Serialize};

use crate::math::{self, Vec3};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorPlane<S: Real> {
    /// Polar angle of the normal, acos(n_x), in [0, pi].
    pub alpha: S,
    /// atan2(n_y, n_x) + pi wrapped into [0, 2pi).
    pub beta: S,
    /// Offset from the origin along the normal, scene units; negative
    /// when the n_z >= 0 orientation points towards the origin.
    pub gamma: S,
}

impl<S: Real> MirrorPlane<S> {
    /// Unit normal encoded by (alpha, beta).
    ///
    /// The parametrization drops the sign of n_z; the reconstruction
    /// convention takes n_z >= 0. Voxel centers can be slightly
    /// inconsistent as (alpha, beta) pairs, so the result is clamped and
    /// renormalized.
    pub fn normal(&self) -> Vec3<S> {
        let nx = self.alpha.cos();
        let theta = self.beta - S::pi();
        let (sin_t, cos_t) = (theta.sin(), theta.cos());
        let r_xy = if cos_t.abs() < S::from_f64(1e-9) {
            // n_x ~ 0: the in-plane magnitude is not recoverable; put the
            // remaining mass on the y axis.
            (S::one() - nx * nx).max(S::zero()).sqrt()
        } else {
            (nx / cos_t).max(S::zero()).min(S::one())
        };
        let ny = r_xy * sin_t;
        let nz = (S::one() - nx * nx - ny * ny).max(S::zero()).sqrt();
        math::normalize([nx, ny, nz])
    }

    /// Signed distance n . x - gamma.
    pub fn signed_distance(&self, x: Vec3<S>) -> S {
        math::dot(self.normal(), x) - self.gamma
    }
}

/// Bisecting plane of a pair of positions: midpoint center, unit normal
/// from x_j towards x_i. Returns `None` when the pair is degenerate
/// (closer than `eps_pair`).
pub fn plane_from_pair<S: Real>(
    x_i: Vec3<S>,
    x_j: Vec3<S>,
    eps_pair: S,
) -> Option<(Vec3<S>, Vec3<S>)> {
    let diff = math::sub(x_i, x_j);
    let len = math::norm(diff);
    if len <= eps_pair {
        return None;
    }
    let c = math::scale(math::add(x_i, x_j), S::half());
    let n = math::scale(diff, S::one() / len);
    Some((c, n))
}

/// Canonical (alpha, beta, gamma) of the plane through `c` with unit
/// normal `n`; the normal is flipped first if needed so gamma >= 0.
pub fn plane_to_params<S: Real>(c: Vec3<S>, n: Vec3<S>) -> MirrorPlane<S> {
    let mut n = n;
    let mut gamma = math::dot(n, c);
    if gamma < S::zero() {
        n = math::scale(n, -S::one());
        gamma = -gamma;
    }
    let alpha = n[0].max(-S::one()).min(S::one()).acos();
    let mut beta = n[1].atan2(n[0]) + S::pi();
    if beta >= S::two_pi() {
        beta = beta - S::two_pi();
    }
    if beta < S::zero() {
        beta = beta + S::two_pi();
    }
    MirrorPlane { alpha, beta, gamma }
}

/// Builds the canonical parameters of the plane with unit normal `n` at
/// offset `gamma` from the origin.
pub fn from_normal_offset<S: Real>(n: Vec3<S>, gamma: S) -> MirrorPlane<S> {
    plane_to_params(math::scale(n, gamma), n)
}

/// Storable parameters of the plane with unit normal `n` at offset
/// `gamma`: the orientation with n_z >= 0 is kept (ties broken towards
/// n_y >= 0, then n_x >= 0) so that [`MirrorPlane::normal`] reconstructs
/// the normal exactly; gamma keeps its sign.
pub fn from_plane<S: Real>(n: Vec3<S>, gamma: S) -> MirrorPlane<S> {
    let flip = n[2] < S::zero()
        || (n[2] == S::zero() && (n[1] < S::zero() || (n[1] == S::zero() && n[0] < S::zero())));
    let (n, gamma) = if flip {
        (math::scale(n, -S::one()), -gamma)
    } else {
        (n, gamma)
    };
    let alpha = n[0].max(-S::one()).min(S::one()).acos();
    let mut beta = n[1].atan2(n[0]) + S::pi();
    if beta >= S::two_pi() {
        beta = beta - S::two_pi();
    }
    if beta < S::zero() {
        beta = beta + S::two_pi();
    }
    MirrorPlane { alpha, beta, gamma }
}

/// The plane whose (alpha, beta) encode the negated normal at the same
/// offset. Pairs of a plane through the origin vote under both
/// orientations, and the parametrization cannot represent a normal with
/// n_z < 0, so the argmax may land on this alias of the true plane;
/// trying both recovers it.
pub fn antipodal_alias<S: Real>(m: &MirrorPlane<S>) -> MirrorPlane<S> {
    let alpha = S::pi() - m.alpha;
    let mut beta = m.beta + S::pi();
    if beta >= S::two_pi() {
        beta = beta - S::two_pi();
    }
    MirrorPlane {
        alpha,
        beta,
        gamma: m.gamma,
    }
}

/// Householder reflection of a point: x - 2 (n . x - gamma) n.
pub fn reflect_point<S: Real>(x: Vec3<S>, m: &MirrorPlane<S>) -> Vec3<S> {
    let n = m.normal();
    let d = math::dot(n, x) - m.gamma;
    math::sub(x, math::scale(n, S::two() * d))
}
