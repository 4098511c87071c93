//! Seeded random sampling of poses, pairs and Euclidean transforms.
//!
//! All samplers take an explicit generator. [`seeded_rng`] returns a ChaCha8
//! stream, which is portable across platforms, so a fixed seed reproduces
//! the same sequence bit for bit.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

use crate::geometry::{EuclideanTransform, OrthoMat3, PosePair, PosePoint, UnitVec3, Vec3};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Axis-aligned cube `[-half_width, half_width]³` used for positions and
/// translations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingBox {
    pub half_width: f64,
}

impl SamplingBox {
    pub fn new(half_width: f64) -> Self {
        assert!(half_width > 0.0 && half_width.is_finite());
        Self { half_width }
    }
}

impl Default for SamplingBox {
    fn default() -> Self {
        Self { half_width: 5.0 }
    }
}

pub fn random_point<R: Rng + ?Sized>(rng: &mut R, bounds: &SamplingBox) -> Vec3 {
    let h = bounds.half_width;
    Vec3::new(
        rng.random_range(-h..=h),
        rng.random_range(-h..=h),
        rng.random_range(-h..=h),
    )
}

/// Uniform direction on S².
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> UnitVec3 {
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    UnitVec3::new(Vec3::new(x, y, z)).expect("unit sphere sample has unit norm")
}

/// Haar-uniform rotation, via Shoemake's uniform unit-quaternion construction.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    use std::f64::consts::TAU;
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let q = Quaternion::new(
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    );
    UnitQuaternion::from_quaternion(q)
        .to_rotation_matrix()
        .into_inner()
}

/// Haar-uniform element of O(3): a uniform rotation whose first column is
/// negated with probability 1/2.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R) -> OrthoMat3 {
    let mut m = random_rotation(rng);
    if rng.random_bool(0.5) {
        m.column_mut(0).neg_mut();
    }
    OrthoMat3::new(m).expect("quaternion rotation is orthogonal")
}

pub fn random_pose<R: Rng + ?Sized>(rng: &mut R, bounds: &SamplingBox) -> PosePoint {
    PosePoint {
        position: random_point(rng, bounds),
        orientation: random_unit_vector(rng),
    }
}

pub fn random_pair<R: Rng + ?Sized>(rng: &mut R, bounds: &SamplingBox) -> PosePair {
    let first = random_pose(rng, bounds);
    let second = random_pose(rng, bounds);
    PosePair::new(first, second)
}

pub fn random_transform<R: Rng + ?Sized>(rng: &mut R, bounds: &SamplingBox) -> EuclideanTransform {
    let linear = random_orthogonal(rng);
    let translation = random_point(rng, bounds);
    EuclideanTransform {
        translation,
        linear,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_is_reproducible() {
        let bounds = SamplingBox::default();
        let mut a = seeded_rng(42);
        let mut b = seeded_rng(42);
        for _ in 0..100 {
            assert_eq!(random_pair(&mut a, &bounds), random_pair(&mut b, &bounds));
            assert_eq!(
                random_transform(&mut a, &bounds),
                random_transform(&mut b, &bounds)
            );
        }
    }

    #[test]
    fn positions_stay_in_box() {
        let bounds = SamplingBox::new(0.5);
        let mut rng = seeded_rng(1);
        for _ in 0..1000 {
            let x = random_point(&mut rng, &bounds);
            assert!(x.amax() <= 0.5);
        }
    }

    #[test]
    fn orientation_mean_vanishes() {
        let mut rng = seeded_rng(3);
        let n = 100_000;
        let mut sum = Vec3::zeros();
        for _ in 0..n {
            sum += random_unit_vector(&mut rng).into_inner();
        }
        let mean = sum / n as f64;
        assert!(mean.amax() < 0.02, "mean {mean:?}");
    }

    #[test]
    fn reflections_drawn_half_the_time() {
        let mut rng = seeded_rng(5);
        let n = 100_000;
        let flips = (0..n)
            .filter(|_| random_orthogonal(&mut rng).determinant() < 0.0)
            .count();
        let frac = flips as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn rotations_are_orthogonal_with_unit_determinant() {
        let mut rng = seeded_rng(9);
        for _ in 0..1000 {
            let m = random_rotation(&mut rng);
            assert!(crate::geometry::orthogonality_defect(&m) < 1e-14);
            assert!((m.determinant() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_matrix_entries_are_unbiased() {
        // Haar measure: each entry has mean 0 and variance 1/3.
        let mut rng = seeded_rng(11);
        let n = 50_000;
        let mut sum = Matrix3::<f64>::zeros();
        let mut sq = Matrix3::<f64>::zeros();
        for _ in 0..n {
            let m = random_rotation(&mut rng);
            sum += m;
            sq += m.component_mul(&m);
        }
        let mean = sum / n as f64;
        let var = sq / n as f64;
        assert!(mean.amax() < 0.02, "{mean}");
        for v in var.iter() {
            assert!((v - 1.0 / 3.0).abs() < 0.02, "{var}");
        }
    }
}
