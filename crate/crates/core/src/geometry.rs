//! Position-orientation space and the Euclidean group acting on it.
//!
//! A pose point is a pair `(x, n)` with `x ∈ ℝ³` and `n` on the unit sphere.
//! A Euclidean transform is a pair `(t, Q)` with `QᵀQ = I`; reflections are
//! allowed, so the group has two connected components. The action is
//! `(t, Q) ⊳ (x, n) = (t + Qx, Qn)`, applied slotwise to pairs.

use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Orientation inputs below this norm are rejected instead of normalized.
pub const MIN_ORIENTATION_NORM: f64 = 1e-8;
/// Frobenius tolerance on `QᵀQ - I` accepted by [`OrthoMat3::new`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

pub(crate) fn ensure_finite(v: &Vec3, what: &'static str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}

/// A vector of unit Euclidean norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Normalizes `v`. Fails on non-finite input or when `|v| < 1e-8`.
    pub fn new(v: Vec3) -> Result<Self> {
        ensure_finite(&v, "orientation")?;
        let norm = v.norm();
        if norm < MIN_ORIENTATION_NORM {
            return Err(Error::DegenerateOrientation { norm });
        }
        if norm == 1.0 {
            Ok(Self(v))
        } else {
            Ok(Self(v / norm))
        }
    }

    /// Wraps a vector already known to have unit norm (up to rounding).
    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9, "norm {}", v.norm());
        Self(v)
    }

    pub fn e1() -> Self {
        Self(Vec3::x())
    }

    pub fn e2() -> Self {
        Self(Vec3::y())
    }

    pub fn e3() -> Self {
        Self(Vec3::z())
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0.dot(other)
    }
}

impl std::ops::Deref for UnitVec3 {
    type Target = Vec3;

    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

/// An element `(x, n)` of position-orientation space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosePoint {
    pub position: Vec3,
    pub orientation: UnitVec3,
}

impl PosePoint {
    pub fn new(position: Vec3, orientation: UnitVec3) -> Result<Self> {
        ensure_finite(&position, "position")?;
        Ok(Self {
            position,
            orientation,
        })
    }

    /// Builds a pose from raw coordinates, normalizing the orientation.
    pub fn from_coords(position: [f64; 3], orientation: [f64; 3]) -> Result<Self> {
        Self::new(
            Vec3::from(position),
            UnitVec3::new(Vec3::from(orientation))?,
        )
    }
}

/// An ordered pair of pose points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosePair {
    pub first: PosePoint,
    pub second: PosePoint,
}

impl PosePair {
    pub fn new(first: PosePoint, second: PosePoint) -> Self {
        Self { first, second }
    }

    /// The displacement `x₂ - x₁`.
    pub fn displacement(&self) -> Vec3 {
        self.second.position - self.first.position
    }

    /// The three vectors `(n₁, n₂, x₂ - x₁)` whose Gram matrix the universal
    /// invariants encode.
    pub fn frame_vectors(&self) -> [Vec3; 3] {
        [
            self.first.orientation.into_inner(),
            self.second.orientation.into_inner(),
            self.displacement(),
        ]
    }
}

/// A 3×3 orthogonal matrix, either a rotation or a rotoreflection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthoMat3(Matrix3<f64>);

impl OrthoMat3 {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite { what: "matrix" });
        }
        let deviation = orthogonality_defect(&m);
        if deviation > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { deviation });
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// The point reflection `-I`.
    pub fn inversion() -> Self {
        Self(-Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn is_reflection(&self) -> bool {
        self.determinant() < 0.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

impl Mul for OrthoMat3 {
    type Output = OrthoMat3;

    fn mul(self, rhs: OrthoMat3) -> OrthoMat3 {
        OrthoMat3(self.0 * rhs.0)
    }
}

/// `|QᵀQ - I|_F`.
pub fn orthogonality_defect(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

/// An element `(t, Q)` of the Euclidean group E(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EuclideanTransform {
    pub translation: Vec3,
    pub linear: OrthoMat3,
}

impl EuclideanTransform {
    pub fn new(translation: Vec3, linear: OrthoMat3) -> Result<Self> {
        ensure_finite(&translation, "translation")?;
        Ok(Self {
            translation,
            linear,
        })
    }

    pub fn identity() -> Self {
        Self {
            translation: Vec3::zeros(),
            linear: OrthoMat3::identity(),
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            translation,
            linear: OrthoMat3::identity(),
        }
    }

    pub fn from_linear(linear: OrthoMat3) -> Self {
        Self {
            translation: Vec3::zeros(),
            linear,
        }
    }

    /// Group product `self · rhs = (t₂ + Q₂t₁, Q₂Q₁)`, i.e. apply `rhs` first.
    pub fn product(&self, rhs: &EuclideanTransform) -> EuclideanTransform {
        EuclideanTransform {
            translation: self.translation + self.linear.apply(&rhs.translation),
            linear: self.linear * rhs.linear,
        }
    }

    /// `(t, Q)⁻¹ = (-Qᵀt, Qᵀ)`.
    pub fn inverse(&self) -> EuclideanTransform {
        let qt = self.linear.transpose();
        EuclideanTransform {
            translation: -qt.apply(&self.translation),
            linear: qt,
        }
    }

    pub fn act_on_point(&self, x: &Vec3) -> Vec3 {
        self.translation + self.linear.apply(x)
    }

    pub fn act_on_pose(&self, p: &PosePoint) -> PosePoint {
        PosePoint {
            position: self.act_on_point(&p.position),
            orientation: UnitVec3::new_unchecked(self.linear.apply(&p.orientation)),
        }
    }

    pub fn act_on_pair(&self, pair: &PosePair) -> PosePair {
        PosePair {
            first: self.act_on_pose(&pair.first),
            second: self.act_on_pose(&pair.second),
        }
    }

    /// Largest absolute entry difference between two transforms.
    pub fn max_abs_diff(&self, other: &EuclideanTransform) -> f64 {
        let dt = (self.translation - other.translation).amax();
        let dq = (self.linear.matrix() - other.linear.matrix()).amax();
        dt.max(dq)
    }
}

impl Mul for EuclideanTransform {
    type Output = EuclideanTransform;

    fn mul(self, rhs: EuclideanTransform) -> EuclideanTransform {
        self.product(&rhs)
    }
}

/// Largest componentwise difference between two poses, over position and
/// orientation.
pub fn pose_residual(a: &PosePoint, b: &PosePoint) -> f64 {
    let dx = (a.position - b.position).amax();
    let dn = (a.orientation.as_vec() - b.orientation.as_vec()).amax();
    dx.max(dn)
}

pub fn pair_residual(a: &PosePair, b: &PosePair) -> f64 {
    pose_residual(&a.first, &b.first).max(pose_residual(&a.second, &b.second))
}
