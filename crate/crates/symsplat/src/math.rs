//! Small fixed-size vector / quaternion / 3x3 matrix helpers.

use crate::scalar::Real;

pub type Vec3<S> = [S; 3];
/// Quaternion stored as (w, x, y, z).
pub type Quat<S> = [S; 4];
/// Row-major 3x3 matrix.
pub type Mat3<S> = [[S; 3]; 3];

pub fn add<S: Real>(a: Vec3<S>, b: Vec3<S>) -> Vec3<S> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub<S: Real>(a: Vec3<S>, b: Vec3<S>) -> Vec3<S> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale<S: Real>(a: Vec3<S>, k: S) -> Vec3<S> {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub fn dot<S: Real>(a: Vec3<S>, b: Vec3<S>) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm<S: Real>(a: Vec3<S>) -> S {
    dot(a, a).sqrt()
}

pub fn distance<S: Real>(a: Vec3<S>, b: Vec3<S>) -> S {
    norm(sub(a, b))
}

pub fn normalize<S: Real>(a: Vec3<S>) -> Vec3<S> {
    let n = norm(a);
    scale(a, S::one() / n)
}

pub fn quat_norm<S: Real>(q: Quat<S>) -> S {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt()
}

pub fn quat_normalize<S: Real>(q: Quat<S>) -> Quat<S> {
    let n = quat_norm(q);
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

/// Rotation matrix of a unit quaternion (w, x, y, z).
pub fn quat_to_mat3<S: Real>(q: Quat<S>) -> Mat3<S> {
    let [w, x, y, z] = q;
    let two = S::two();
    [
        [
            S::one() - two * (y * y + z * z),
            two * (x * y - w * z),
            two * (x * z + w * y),
        ],
        [
            two * (x * y + w * z),
            S::one() - two * (x * x + z * z),
            two * (y * z - w * x),
        ],
        [
            two * (x * z - w * y),
            two * (y * z + w * x),
            S::one() - two * (x * x + y * y),
        ],
    ]
}

/// Unit quaternion of a proper rotation matrix (Shepperd's method).
pub fn mat3_to_quat<S: Real>(m: &Mat3<S>) -> Quat<S> {
    let trace = m[0][0] + m[1][1] + m[2][2];
    let q = if trace > S::zero() {
        let s = (trace + S::one()).sqrt() * S::two();
        [
            s * S::from_f64(0.25),
            (m[2][1] - m[1][2]) / s,
            (m[0][2] - m[2][0]) / s,
            (m[1][0] - m[0][1]) / s,
        ]
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (S::one() + m[0][0] - m[1][1] - m[2][2]).sqrt() * S::two();
        [
            (m[2][1] - m[1][2]) / s,
            s * S::from_f64(0.25),
            (m[0][1] + m[1][0]) / s,
            (m[0][2] + m[2][0]) / s,
        ]
    } else if m[1][1] > m[2][2] {
        let s = (S::one() + m[1][1] - m[0][0] - m[2][2]).sqrt() * S::two();
        [
            (m[0][2] - m[2][0]) / s,
            (m[0][1] + m[1][0]) / s,
            s * S::from_f64(0.25),
            (m[1][2] + m[2][1]) / s,
        ]
    } else {
        let s = (S::one() + m[2][2] - m[0][0] - m[1][1]).sqrt() * S::two();
        [
            (m[1][0] - m[0][1]) / s,
            (m[0][2] + m[2][0]) / s,
            (m[1][2] + m[2][1]) / s,
            s * S::from_f64(0.25),
        ]
    };
    quat_normalize(q)
}

pub fn mat3_mul<S: Real>(a: &Mat3<S>, b: &Mat3<S>) -> Mat3<S> {
    let mut out = [[S::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] = out[i][j] + a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn mat3_transpose<S: Real>(m: &Mat3<S>) -> Mat3<S> {
    let mut out = [[S::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

pub fn mat3_det<S: Real>(m: &Mat3<S>) -> S {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Householder matrix I - 2 n n^T for a unit normal n.
pub fn householder<S: Real>(n: Vec3<S>) -> Mat3<S> {
    let mut h = [[S::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            h[i][j] = if i == j { S::one() } else { S::zero() };
            h[i][j] = h[i][j] - S::two() * n[i] * n[j];
        }
    }
    h
}

/// Covariance R diag(s^2) R^T of a scale/rotation factorized Gaussian.
pub fn covariance<S: Real>(rotation: Quat<S>, scale_vec: Vec3<S>) -> Mat3<S> {
    let r = quat_to_mat3(rotation);
    let mut rs = [[S::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            rs[i][j] = r[i][j] * scale_vec[j] * scale_vec[j];
        }
    }
    mat3_mul(&rs, &mat3_transpose(&r))
}

pub fn frobenius_norm<S: Real>(m: &Mat3<S>) -> S {
    let mut acc = S::zero();
    for row in m {
        for v in row {
            acc = acc + *v * *v;
        }
    }
    acc.sqrt()
}

pub fn mat3_sub<S: Real>(a: &Mat3<S>, b: &Mat3<S>) -> Mat3<S> {
    let mut out = [[S::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}
