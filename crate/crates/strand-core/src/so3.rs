//! Exact small-dimension linear algebra for SO(3), so(3) and the 2-sphere:
//! hat/vee, the Rodrigues exponential and logarithm, polar re-projection onto
//! the rotation group, and symmetric positive-definite tensor solves.
//!
//! Everything here is plain `f64` 3×3 algebra; all types are immutable values
//! and every operation is pure.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Orthonormality tolerance accepted by [`Rot3::new`].
pub const ROT_ORTHO_TOL: f64 = 1e-9;
/// Symmetry tolerance accepted by [`SpdTensor::new`].
pub const SPD_SYM_TOL: f64 = 1e-12;
/// Margin below π where [`log_so3`] refuses to evaluate.
pub const LOG_ANGLE_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    /// Input matrix fails a structural precondition (e.g. `vee` on a matrix
    /// that is not antisymmetric within tolerance).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Rotation angle too close to π for a well-conditioned logarithm.
    #[error("rotation angle {0} within {LOG_ANGLE_MARGIN} of the cut locus at pi")]
    NearCutLocus(f64),
    /// Polar projection of a matrix with non-positive determinant.
    #[error("matrix with determinant {0} <= 0 cannot be projected onto SO(3)")]
    OrientationFlip(f64),
    /// Candidate SPD tensor is not symmetric within tolerance.
    #[error("matrix asymmetry {0} exceeds {SPD_SYM_TOL}")]
    NotSymmetric(f64),
    /// Candidate SPD tensor has a non-positive pivot in its factorization.
    #[error("matrix is not positive definite (pivot {0} <= 0)")]
    NotPositiveDefinite(f64),
}

// ---------------------------------------------------------------------------
// Vec3

/// A vector in ℝ³. Also used for so(3) elements through the hat map and for
/// points of the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const E1: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const E2: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const E3: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_max(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        self * (1.0 / n)
    }

    /// Component of `self` orthogonal to the unit vector `unit`.
    pub fn reject_from_unit(self, unit: Vec3) -> Vec3 {
        self - unit * self.dot(unit)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

// ---------------------------------------------------------------------------
// Mat3

/// A 3×3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const fn new(m: [[f64; 3]; 3]) -> Self {
        Mat3 { m }
    }

    pub const IDENTITY: Mat3 = Mat3::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn zero() -> Self {
        Mat3::new([[0.0; 3]; 3])
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Mat3::new([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn transpose(self) -> Mat3 {
        let m = self.m;
        Mat3::new([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn det(self) -> f64 {
        let m = self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    /// Inverse by adjugate. Errors when the determinant is smaller than
    /// `1e-300` in magnitude.
    pub fn inverse(self) -> Result<Mat3, So3Error> {
        let d = self.det();
        if d.abs() < 1e-300 {
            return Err(So3Error::InvalidInput(format!(
                "matrix is numerically singular (det = {d})"
            )));
        }
        let m = self.m;
        let inv_d = 1.0 / d;
        let cof = |r1: usize, c1: usize, r2: usize, c2: usize| {
            m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
        };
        Ok(Mat3::new([
            [
                cof(1, 1, 2, 2) * inv_d,
                -cof(0, 1, 2, 2) * inv_d,
                cof(0, 1, 1, 2) * inv_d,
            ],
            [
                -cof(1, 0, 2, 2) * inv_d,
                cof(0, 0, 2, 2) * inv_d,
                -cof(0, 0, 1, 2) * inv_d,
            ],
            [
                cof(1, 0, 2, 1) * inv_d,
                -cof(0, 0, 2, 1) * inv_d,
                cof(0, 0, 1, 1) * inv_d,
            ],
        ]))
    }

    /// Largest absolute entry.
    pub fn norm_max(self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Antisymmetric part (M - Mᵀ)/2.
    pub fn antisymmetric_part(self) -> Mat3 {
        (self - self.transpose()) * 0.5
    }

    pub fn is_finite(self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    pub fn col(self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn row(self, i: usize) -> Vec3 {
        Vec3::from_array(self.m[i])
    }

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Mat3 {
        Mat3::new([r0.as_array(), r1.as_array(), r2.as_array()])
    }

    /// Solve `self * x = b` for a general (well-conditioned) 3×3 matrix.
    pub fn solve(self, b: Vec3) -> Result<Vec3, So3Error> {
        Ok(self.inverse()? * b)
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = self.m[i][j] + o.m[i][j];
            }
        }
        Mat3::new(r)
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = self.m[i][j] - o.m[i][j];
            }
        }
        Mat3::new(r)
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut r = self.m;
        for row in r.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Mat3::new(r)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y + self.m[0][2] * v.z,
            self.m[1][0] * v.x + self.m[1][1] * v.y + self.m[1][2] * v.z,
            self.m[2][0] * v.x + self.m[2][1] * v.y + self.m[2][2] * v.z,
        )
    }
}

impl Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] =
                    self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j];
            }
        }
        Mat3::new(r)
    }
}

// ---------------------------------------------------------------------------
// hat / vee

/// so(3) ≅ ℝ³: `hat(v) w = v × w`.
pub fn hat(v: Vec3) -> Mat3 {
    Mat3::new([[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]])
}

/// Inverse of [`hat`]. Errors when `m` is not antisymmetric within `1e-9`.
pub fn vee(m: Mat3) -> Result<Vec3, So3Error> {
    let sym = (m + m.transpose()) * 0.5;
    let asym = sym.norm_max();
    if asym > 1e-9 {
        return Err(So3Error::InvalidInput(format!(
            "vee of a matrix with symmetric part {asym} > 1e-9"
        )));
    }
    Ok(vee_unchecked(m))
}

/// [`vee`] of the antisymmetric part, without the symmetry check. Useful for
/// matrices that are antisymmetric only up to discretization error.
pub fn vee_unchecked(m: Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m.m[2][1] - m.m[1][2]),
        0.5 * (m.m[0][2] - m.m[2][0]),
        0.5 * (m.m[1][0] - m.m[0][1]),
    )
}

// ---------------------------------------------------------------------------
// Rot3

/// A rotation matrix in SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3 {
    m: Mat3,
}

impl Rot3 {
    pub const IDENTITY: Rot3 = Rot3 { m: Mat3::IDENTITY };

    /// Validated constructor: requires ‖RᵀR − Id‖_max ≤ 1e−9 and det R > 0.
    pub fn new(m: Mat3) -> Result<Rot3, So3Error> {
        let defect = (m.transpose() * m - Mat3::IDENTITY).norm_max();
        if defect > ROT_ORTHO_TOL {
            return Err(So3Error::InvalidInput(format!(
                "orthonormality defect {defect} > {ROT_ORTHO_TOL}"
            )));
        }
        let d = m.det();
        if d <= 0.0 {
            return Err(So3Error::OrientationFlip(d));
        }
        Ok(Rot3 { m })
    }

    /// Wrap a matrix that is known (by construction) to be a rotation.
    pub fn from_matrix_unchecked(m: Mat3) -> Rot3 {
        Rot3 { m }
    }

    pub fn matrix(self) -> Mat3 {
        self.m
    }

    pub fn transpose(self) -> Rot3 {
        Rot3 {
            m: self.m.transpose(),
        }
    }

    /// Same as [`Rot3::transpose`]; rotations are orthogonal.
    pub fn inverse(self) -> Rot3 {
        self.transpose()
    }

    pub fn compose(self, other: Rot3) -> Rot3 {
        Rot3 {
            m: self.m * other.m,
        }
    }

    pub fn apply(self, v: Vec3) -> Vec3 {
        self.m * v
    }

    /// Rᵀ v without forming the transpose.
    pub fn apply_inverse(self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.m.col(0).dot(v),
            self.m.col(1).dot(v),
            self.m.col(2).dot(v),
        )
    }

    pub fn orthonormality_defect(self) -> f64 {
        (self.m.transpose() * self.m - Mat3::IDENTITY).norm_max()
    }
}

impl Mul<Rot3> for Rot3 {
    type Output = Rot3;
    fn mul(self, o: Rot3) -> Rot3 {
        self.compose(o)
    }
}

/// Rodrigues formula: `exp(hat(v))`.
pub fn exp_so3(v: Vec3) -> Rot3 {
    let theta2 = v.dot(v);
    let theta = theta2.sqrt();
    // sin θ / θ and (1 - cos θ)/θ² with series fallbacks near zero.
    let (a, b) = if theta < 1e-4 {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = hat(v);
    Rot3::from_matrix_unchecked(Mat3::IDENTITY + k * a + (k * k) * b)
}

/// Inverse of [`exp_so3`] on rotations with angle below π − 1e−6.
pub fn log_so3(r: Rot3) -> Result<Vec3, So3Error> {
    let m = r.matrix();
    let cos_theta = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    if theta >= std::f64::consts::PI - LOG_ANGLE_MARGIN {
        return Err(So3Error::NearCutLocus(theta));
    }
    let skew = vee_unchecked(m);
    if theta < 1e-8 {
        // R ≈ I + hat(v): vee of the antisymmetric part is v to O(θ³).
        return Ok(skew);
    }
    if theta < 3.0 * std::f64::consts::FRAC_PI_4 {
        let scale = theta / theta.sin();
        return Ok(skew * scale);
    }
    // Near the cut locus sin θ is small; recover the axis from the symmetric
    // part, with signs fixed by the (still nonzero) skew part.
    let one_minus_cos = 1.0 - cos_theta;
    let axis_sq = |i: usize| ((m.m[i][i] - cos_theta) / one_minus_cos).max(0.0);
    let mut n = Vec3::new(axis_sq(0).sqrt(), axis_sq(1).sqrt(), axis_sq(2).sqrt());
    // skew = sin θ · n, so the component signs of skew are those of n.
    if skew.x < 0.0 {
        n.x = -n.x;
    }
    if skew.y < 0.0 {
        n.y = -n.y;
    }
    if skew.z < 0.0 {
        n.z = -n.z;
    }
    Ok(n.normalized() * theta)
}

/// Orthonormal factor of the polar decomposition, by the Newton iteration
/// X ← (X + X⁻ᵀ)/2. Requires det(m) > 0.
pub fn project_to_so3(m: Mat3) -> Result<Rot3, So3Error> {
    let d = m.det();
    if d <= 0.0 {
        return Err(So3Error::OrientationFlip(d));
    }
    let mut x = m;
    for _ in 0..100 {
        let next = (x + x.inverse()?.transpose()) * 0.5;
        let step = (next - x).norm_max();
        x = next;
        if step < 1e-15 {
            break;
        }
    }
    let defect = (x.transpose() * x - Mat3::IDENTITY).norm_max();
    if defect > 1e-12 {
        return Err(So3Error::InvalidInput(format!(
            "polar iteration failed to converge (defect {defect})"
        )));
    }
    Ok(Rot3::from_matrix_unchecked(x))
}

// ---------------------------------------------------------------------------
// SpdTensor

/// A symmetric positive-definite 3×3 tensor, validated at construction by a
/// Cholesky factorization with positive pivots. Stores the factor for solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdTensor {
    m: Mat3,
    /// Lower-triangular Cholesky factor L with m = L Lᵀ.
    chol: Mat3,
}

impl SpdTensor {
    pub fn new(m: Mat3) -> Result<SpdTensor, So3Error> {
        let asym = (m - m.transpose()).norm_max();
        if asym > SPD_SYM_TOL {
            return Err(So3Error::NotSymmetric(asym));
        }
        let chol = cholesky3(m)?;
        Ok(SpdTensor { m, chol })
    }

    pub fn identity() -> SpdTensor {
        SpdTensor::new(Mat3::IDENTITY).expect("identity is SPD")
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Result<SpdTensor, So3Error> {
        SpdTensor::new(Mat3::diag(a, b, c))
    }

    pub fn matrix(self) -> Mat3 {
        self.m
    }

    /// T · v.
    pub fn apply(self, v: Vec3) -> Vec3 {
        self.m * v
    }

    /// Solve T x = b through the stored Cholesky factor.
    pub fn solve(self, b: Vec3) -> Vec3 {
        // Forward substitution L y = b.
        let l = self.chol.m;
        let y0 = b.x / l[0][0];
        let y1 = (b.y - l[1][0] * y0) / l[1][1];
        let y2 = (b.z - l[2][0] * y0 - l[2][1] * y1) / l[2][2];
        // Back substitution Lᵀ x = y.
        let x2 = y2 / l[2][2];
        let x1 = (y1 - l[2][1] * x2) / l[1][1];
        let x0 = (y0 - l[1][0] * x1 - l[2][0] * x2) / l[0][0];
        Vec3::new(x0, x1, x2)
    }
}

/// T⁻¹ b for an SPD tensor; the spelled-out name used throughout the strand
/// formulas.
pub fn spd_solve(t: SpdTensor, b: Vec3) -> Vec3 {
    t.solve(b)
}

fn cholesky3(m: Mat3) -> Result<Mat3, So3Error> {
    let a = m.m;
    let mut l = [[0.0_f64; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(So3Error::NotPositiveDefinite(sum));
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(Mat3::new(l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    fn assert_vec_close(a: Vec3, b: Vec3, tol: f64) {
        assert!(
            (a - b).norm_max() <= tol,
            "{a:?} vs {b:?} differ by {}",
            (a - b).norm_max()
        );
    }

    #[test]
    fn hat_of_e3_matches_cross_product_matrix() {
        let m = hat(Vec3::E3);
        assert_eq!(
            m,
            Mat3::new([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        );
    }

    #[test]
    fn vee_inverts_hat() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(hat(v)).unwrap(), v);
    }

    #[test]
    fn hat_e1_applied_to_e2_is_e3() {
        assert_eq!(hat(Vec3::E1) * Vec3::E2, Vec3::E3);
    }

    #[test]
    fn vee_rejects_symmetric_matrices() {
        let err = vee(Mat3::diag(1.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, So3Error::InvalidInput(_)));
    }

    #[test]
    fn exp_quarter_turn_about_e3() {
        let r = exp_so3(Vec3::new(0.0, 0.0, PI / 2.0));
        assert_vec_close(r.apply(Vec3::E1), Vec3::E2, 1e-15);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(exp_so3(Vec3::ZERO), Rot3::IDENTITY);
    }

    #[test]
    fn log_inverts_exp() {
        let v = Vec3::new(0.3, -0.2, 0.1);
        assert_vec_close(log_so3(exp_so3(v)).unwrap(), v, 1e-12);
    }

    #[test]
    fn log_errors_at_cut_locus() {
        let r = exp_so3(Vec3::new(PI - 1e-9, 0.0, 0.0));
        assert!(matches!(log_so3(r), Err(So3Error::NearCutLocus(_))));
    }

    #[test]
    fn log_is_accurate_near_pi() {
        let v = Vec3::new(0.0, PI - 1e-3, 0.0);
        assert_vec_close(log_so3(exp_so3(v)).unwrap(), v, 1e-9);
    }

    #[test]
    fn projection_of_near_identity_perturbation() {
        let m = Mat3::IDENTITY + hat(Vec3::E3) * 1e-6;
        let r = project_to_so3(m).unwrap();
        assert!(r.orthonormality_defect() <= 1e-14);
    }

    #[test]
    fn projection_is_idempotent_on_rotations() {
        let r = exp_so3(Vec3::new(0.4, -1.1, 2.0));
        let p = project_to_so3(r.matrix()).unwrap();
        assert!((p.matrix() - r.matrix()).norm_max() <= 1e-14);
    }

    #[test]
    fn projection_removes_scaling() {
        let r = project_to_so3(Mat3::IDENTITY * 1.1).unwrap();
        assert!((r.matrix() - Mat3::IDENTITY).norm_max() <= 1e-14);
    }

    #[test]
    fn projection_rejects_orientation_flips() {
        let err = project_to_so3(Mat3::diag(-1.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, So3Error::OrientationFlip(_)));
    }

    #[test]
    fn spd_solve_identity_and_diagonal() {
        let b = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(spd_solve(SpdTensor::identity(), b), b);
        let t = SpdTensor::diag(2.0, 2.0, 2.0).unwrap();
        assert_vec_close(spd_solve(t, Vec3::new(2.0, 4.0, 6.0)), b, 1e-15);
    }

    #[test]
    fn spd_rejects_asymmetric_and_indefinite() {
        let mut m = Mat3::diag(1.0, 1.0, 1.0);
        m.m[0][1] = 1e-6;
        assert!(matches!(SpdTensor::new(m), Err(So3Error::NotSymmetric(_))));
        assert!(matches!(
            SpdTensor::diag(1.0, -2.0, 1.0),
            Err(So3Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn rot3_new_validates() {
        assert!(Rot3::new(Mat3::IDENTITY * 1.001).is_err());
        assert!(Rot3::new(exp_so3(Vec3::new(0.1, 0.2, 0.3)).matrix()).is_ok());
    }

    #[test]
    fn projection_is_a_retraction() {
        // ‖project(R + E) − R‖ = O(‖E‖) against a fixed perturbation direction.
        let r = exp_so3(Vec3::new(0.7, 0.2, -0.4));
        let e = Mat3::new([[0.3, -0.1, 0.2], [0.05, 0.12, -0.3], [0.2, 0.1, 0.07]]);
        for scale in [1e-2, 1e-4, 1e-6] {
            let p = project_to_so3(r.matrix() + e * scale).unwrap();
            let dist = (p.matrix() - r.matrix()).norm_max();
            assert!(dist <= 10.0 * scale, "scale {scale}: dist {dist}");
        }
    }

    fn arb_vec3(range: f64) -> impl Strategy<Value = Vec3> {
        (
            -range..range_end(range),
            -range..range_end(range),
            -range..range_end(range),
        )
            .prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn range_end(range: f64) -> f64 {
        range
    }

    proptest! {
        #[test]
        fn exp_lands_on_so3(v in arb_vec3(10.0)) {
            let r = exp_so3(v);
            prop_assert!(r.orthonormality_defect() <= 1e-12);
            prop_assert!((r.matrix().det() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn hat_is_antisymmetric_bilinear(a in arb_vec3(5.0), b in arb_vec3(5.0)) {
            let lhs = hat(a) * b;
            let rhs = (hat(b) * a) * -1.0;
            prop_assert!((lhs - rhs).norm_max() <= 1e-12 * (1.0 + a.norm() * b.norm()));
        }

        #[test]
        fn spd_multiply_then_solve_roundtrip(
            v in arb_vec3(3.0),
            d in (0.2f64..4.0, 0.2f64..4.0, 0.2f64..4.0),
            w in arb_vec3(1.0),
        ) {
            // Random SPD tensor: rotate a positive diagonal.
            let q = exp_so3(w);
            let t = SpdTensor::new(
                q.matrix() * Mat3::diag(d.0, d.1, d.2) * q.matrix().transpose(),
            );
            // Rotated diagonals can pick up ~1e-16 asymmetry; symmetrize.
            let t = match t {
                Ok(t) => t,
                Err(_) => {
                    let m = q.matrix() * Mat3::diag(d.0, d.1, d.2) * q.matrix().transpose();
                    SpdTensor::new((m + m.transpose()) * 0.5).unwrap()
                }
            };
            let back = t.solve(t.apply(v));
            prop_assert!((back - v).norm_max() <= 1e-10 * (1.0 + v.norm()));
        }

        #[test]
        fn log_exp_roundtrip(v in arb_vec3(1.7)) {
            let back = log_so3(exp_so3(v)).unwrap();
            prop_assert!((back - v).norm_max() <= 1e-12);
        }
    }
}
