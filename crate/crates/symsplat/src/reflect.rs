//! Reflecting whole splats across a mirror plane.

use crate::math::{self};
use crate::mirror::{reflect_point, MirrorPlane};
use crate::scalar::Real;
use crate::scene::Gaussian;

/// How orientations behave under reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationMode {
    /// Mirror the ellipsoid: R' = H R with the first column negated to
    /// restore determinant +1. A gaussian is invariant under negating a
    /// principal axis, so the result has covariance H Sigma H^T.
    Householder,
    /// Copy the quaternion verbatim.
    CopyVerbatim,
}

/// Reflects position (always) and orientation (per `mode`); scale,
/// opacity, color and the SH payload are copied bit-exactly.
pub fn reflect_gaussian<S: Real>(
    g: &Gaussian<S>,
    m: &MirrorPlane<S>,
    mode: RotationMode,
) -> Gaussian<S> {
    let position = reflect_point(g.position, m);
    let rotation = match mode {
        RotationMode::CopyVerbatim => g.rotation,
        RotationMode::Householder => {
            let h = math::householder(m.normal());
            let mut r = math::mat3_mul(&h, &math::quat_to_mat3(g.rotation));
            for row in &mut r {
                row[0] = -row[0];
            }
            math::mat3_to_quat(&r)
        }
    };
    Gaussian {
        position,
        rotation,
        scale: g.scale,
        opacity: g.opacity,
        color_dc: g.color_dc,
        sh_rest: g.sh_rest.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{frobenius_norm, householder, mat3_mul, mat3_sub, mat3_transpose};
    use crate::mirror::from_normal_offset;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn sample_gaussian(rng: &mut ChaCha8Rng) -> Gaussian<f64> {
        Gaussian {
            position: [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ],
            scale: [
                rng.gen_range(0.01..1.0),
                rng.gen_range(0.01..1.0),
                rng.gen_range(0.01..1.0),
            ],
            rotation: math::quat_normalize([
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]),
            opacity: rng.gen_range(0.0..1.0),
            color_dc: [0.1, 0.2, 0.3],
            sh_rest: vec![1.5, -0.5],
        }
    }

    fn sample_mirror(rng: &mut ChaCha8Rng) -> MirrorPlane<f64> {
        let n = math::normalize([
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.01..1.0),
        ]);
        from_normal_offset(n, rng.gen_range(0.0..1.5))
    }

    #[test]
    fn axis_aligned_identity_rotation() {
        // Identity rotation, diagonal covariance, mirror x = 0: the
        // mirrored covariance equals the original.
        let g = Gaussian::<f64> {
            position: [1.0, 0.0, 0.0],
            scale: [0.5, 0.2, 0.1],
            rotation: [1.0, 0.0, 0.0, 0.0],
            opacity: 0.5,
            color_dc: [0.0; 3],
            sh_rest: vec![],
        };
        let m = from_normal_offset([1.0, 0.0, 0.0], 0.0);
        let r = reflect_gaussian(&g, &m, RotationMode::Householder);
        assert_eq!(r.position, [-1.0, 0.0, 0.0]);
        let diff = mat3_sub(&r.covariance(), &g.covariance());
        assert!(frobenius_norm(&diff) < 1e-12);
    }

    #[test]
    fn covariance_matches_householder_oracle() {
        // 45 degrees about z, mirror x = 0: reflected covariance must
        // equal H Sigma H^T computed directly on the 3x3 matrices.
        let half = std::f64::consts::FRAC_PI_8; // quat half-angle for 45 deg
        let g = Gaussian::<f64> {
            position: [1.0, 0.5, 0.0],
            scale: [0.8, 0.2, 0.05],
            rotation: [half.cos(), 0.0, 0.0, half.sin()],
            opacity: 0.9,
            color_dc: [0.0; 3],
            sh_rest: vec![],
        };
        let m = from_normal_offset([1.0, 0.0, 0.0], 0.0);
        let r = reflect_gaussian(&g, &m, RotationMode::Householder);

        let h = householder(m.normal());
        let expected = mat3_mul(&mat3_mul(&h, &g.covariance()), &mat3_transpose(&h));
        let diff = mat3_sub(&r.covariance(), &expected);
        assert!(frobenius_norm(&diff) < 1e-12);
    }

    #[test]
    fn covariance_oracle_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let g = sample_gaussian(&mut rng);
            let m = sample_mirror(&mut rng);
            let r = reflect_gaussian(&g, &m, RotationMode::Householder);
            let h = householder(m.normal());
            let expected = mat3_mul(&mat3_mul(&h, &g.covariance()), &mat3_transpose(&h));
            let rel = frobenius_norm(&mat3_sub(&r.covariance(), &expected))
                / frobenius_norm(&expected);
            assert!(rel < 1e-9);
        }
    }

    #[test]
    fn double_reflection_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..1000 {
            let g = sample_gaussian(&mut rng);
            let m = sample_mirror(&mut rng);
            let back = reflect_gaussian(
                &reflect_gaussian(&g, &m, RotationMode::Householder),
                &m,
                RotationMode::Householder,
            );
            assert!(math::distance(back.position, g.position) < 1e-9);
            let rel = frobenius_norm(&mat3_sub(&back.covariance(), &g.covariance()))
                / frobenius_norm(&g.covariance());
            assert!(rel < 1e-9);
            // Non-positional attributes are copied bit-exactly.
            assert_eq!(back.scale, g.scale);
            assert_eq!(back.opacity, g.opacity);
            assert_eq!(back.color_dc, g.color_dc);
            assert_eq!(back.sh_rest, g.sh_rest);
        }
    }

    #[test]
    fn copy_verbatim_keeps_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = sample_gaussian(&mut rng);
        let m = sample_mirror(&mut rng);
        let r = reflect_gaussian(&g, &m, RotationMode::CopyVerbatim);
        assert_eq!(r.rotation, g.rotation);
    }
}
