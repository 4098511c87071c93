//! Differentials of the universal invariants and rank certification.
//!
//! The tangent space of `M₃ × M₃` at `(p₁, p₂)` is ten dimensional: three
//! position directions and two orientation directions orthogonal to `nᵢ`, per
//! slot. [`jacobian_report`] evaluates the four differentials on an
//! orthonormal basis of it and reports the singular values of the resulting
//! 4×10 matrix. Full rank at a pair means the invariants are a submersion
//! there.

use std::ops::{Add, Mul};

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::geometry::{PosePair, UnitVec3, Vec3};
use crate::invariants::universal_invariants;

/// Tangency (`ṅ·n = 0`) tolerance enforced by [`differential`].
pub const TANGENCY_TOL: f64 = 1e-8;
/// Singular values above this fraction of `max(σ_max, 1)` count toward rank.
pub const RANK_REL_TOL: f64 = 1e-8;
/// Pairs with `|det[x₂-x₁, n₁, n₂]|` above this are in the set U.
pub const BASIS_DET_TOL: f64 = 1e-10;

pub type Jacobian = SMatrix<f64, 4, 10>;

/// Velocity `((ẋ₁, ṅ₁), (ẋ₂, ṅ₂))` attached to a pose pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentPair {
    pub dx1: Vec3,
    pub dn1: Vec3,
    pub dx2: Vec3,
    pub dn2: Vec3,
}

impl TangentPair {
    pub fn zero() -> Self {
        Self {
            dx1: Vec3::zeros(),
            dn1: Vec3::zeros(),
            dx2: Vec3::zeros(),
            dn2: Vec3::zeros(),
        }
    }

    /// Drops the normal components of `dn1`, `dn2` at `base`.
    pub fn projected(dx1: Vec3, dn1: Vec3, dx2: Vec3, dn2: Vec3, base: &PosePair) -> Self {
        let n1 = base.first.orientation.as_vec();
        let n2 = base.second.orientation.as_vec();
        Self {
            dx1,
            dn1: dn1 - n1 * dn1.dot(n1),
            dx2,
            dn2: dn2 - n2 * dn2.dot(n2),
        }
    }

    /// `(ṅ₁·n₁, ṅ₂·n₂)`; both vanish for a valid tangent.
    pub fn tangency_residual(&self, base: &PosePair) -> [f64; 2] {
        [
            self.dn1.dot(base.first.orientation.as_vec()),
            self.dn2.dot(base.second.orientation.as_vec()),
        ]
    }

    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (k, v) in [self.dx1, self.dn1, self.dx2, self.dn2].iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(v.as_slice());
        }
        out
    }

    pub fn dot(&self, other: &TangentPair) -> f64 {
        self.dx1.dot(&other.dx1)
            + self.dn1.dot(&other.dn1)
            + self.dx2.dot(&other.dx2)
            + self.dn2.dot(&other.dn2)
    }
}

impl Add for TangentPair {
    type Output = TangentPair;

    fn add(self, rhs: TangentPair) -> TangentPair {
        TangentPair {
            dx1: self.dx1 + rhs.dx1,
            dn1: self.dn1 + rhs.dn1,
            dx2: self.dx2 + rhs.dx2,
            dn2: self.dn2 + rhs.dn2,
        }
    }
}

impl Mul<TangentPair> for f64 {
    type Output = TangentPair;

    fn mul(self, rhs: TangentPair) -> TangentPair {
        TangentPair {
            dx1: rhs.dx1 * self,
            dn1: rhs.dn1 * self,
            dx2: rhs.dx2 * self,
            dn2: rhs.dn2 * self,
        }
    }
}

/// `(dι₁, dι₂, dι₃, dι₄)` applied to `v`, after checking tangency.
pub fn differential(pair: &PosePair, v: &TangentPair) -> Result<[f64; 4]> {
    for (slot, r) in v.tangency_residual(pair).into_iter().enumerate() {
        if !(r.abs() <= TANGENCY_TOL) {
            return Err(Error::TangencyViolation {
                slot: slot + 1,
                residual: r,
            });
        }
    }
    Ok(differential_unchecked(pair, v))
}

pub fn differential_unchecked(pair: &PosePair, v: &TangentPair) -> [f64; 4] {
    let d = pair.displacement();
    let n1 = pair.first.orientation.as_vec();
    let n2 = pair.second.orientation.as_vec();
    let dd = v.dx2 - v.dx1;
    [
        dd.dot(n1) + d.dot(&v.dn1),
        dd.dot(n2) + d.dot(&v.dn2),
        2.0 * dd.dot(&d),
        v.dn1.dot(n2) + n1.dot(&v.dn2),
    ]
}

/// Central finite difference of the universal invariants along the curve
/// `s ↦ (x₁ + sẋ₁, (n₁ + sṅ₁)/|·|, x₂ + sẋ₂, (n₂ + sṅ₂)/|·|)`.
///
/// Independent of [`differential`]; used to cross-check it.
pub fn finite_difference_differential(pair: &PosePair, v: &TangentPair, step: f64) -> [f64; 4] {
    let plus = universal_invariants(&retract(pair, v, step)).to_array();
    let minus = universal_invariants(&retract(pair, v, -step)).to_array();
    std::array::from_fn(|k| (plus[k] - minus[k]) / (2.0 * step))
}

fn retract(pair: &PosePair, v: &TangentPair, s: f64) -> PosePair {
    let mut out = *pair;
    out.first.position += v.dx1 * s;
    out.second.position += v.dx2 * s;
    out.first.orientation = UnitVec3::new(*pair.first.orientation + v.dn1 * s)
        .expect("small step keeps orientation away from zero");
    out.second.orientation = UnitVec3::new(*pair.second.orientation + v.dn2 * s)
        .expect("small step keeps orientation away from zero");
    out
}

/// Largest componentwise error of `analytic` against `reference`, each
/// scaled by `max(|analytic_k|, 1)`.
pub fn scaled_error(analytic: &[f64; 4], reference: &[f64; 4]) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Ten orthonormal tangent directions at a base pair.
///
/// Order: `ẋ₁` along `e₁, e₂, e₃`; two directions for `ṅ₁`; `ẋ₂` along
/// `e₁, e₂, e₃`; two directions for `ṅ₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentBasis {
    pub base: PosePair,
    pub directions: [TangentPair; 10],
}

/// Orthonormal pair spanning the plane orthogonal to `n`, seeded from the
/// standard axis least aligned with `n` (lowest index on ties).
pub fn sphere_tangent_frame(n: &UnitVec3) -> [Vec3; 2] {
    let axis = (0..3)
        .min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs()))
        .unwrap();
    let e = Vec3::ith(axis, 1.0);
    let u = (e - n.as_vec() * e.dot(n)).normalize();
    let w = n.cross(&u);
    [u, w]
}

pub fn tangent_basis(pair: &PosePair) -> TangentBasis {
    let z = Vec3::zeros();
    let [u1, w1] = sphere_tangent_frame(&pair.first.orientation);
    let [u2, w2] = sphere_tangent_frame(&pair.second.orientation);
    let t = |dx1, dn1, dx2, dn2| TangentPair { dx1, dn1, dx2, dn2 };
    let directions = [
        t(Vec3::x(), z, z, z),
        t(Vec3::y(), z, z, z),
        t(Vec3::z(), z, z, z),
        t(z, u1, z, z),
        t(z, w1, z, z),
        t(z, z, Vec3::x(), z),
        t(z, z, Vec3::y(), z),
        t(z, z, Vec3::z(), z),
        t(z, z, z, u2),
        t(z, z, z, w2),
    ];
    TangentBasis {
        base: *pair,
        directions,
    }
}

/// True iff `x₂ - x₁`, `n₁`, `n₂` form a basis of ℝ³.
pub fn in_u(pair: &PosePair) -> bool {
    basis_determinant(pair).abs() > BASIS_DET_TOL
}

/// `det[x₂ - x₁, n₁, n₂]`.
pub fn basis_determinant(pair: &PosePair) -> f64 {
    let d = pair.displacement();
    d.dot(&pair.first.orientation.cross(&pair.second.orientation))
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobianReport {
    pub base: PosePair,
    pub matrix: Jacobian,
    /// Descending.
    pub singular_values: [f64; 4],
    pub rank: usize,
    pub in_u: bool,
}

pub fn jacobian(pair: &PosePair) -> Jacobian {
    let basis = tangent_basis(pair);
    let mut m = Jacobian::zeros();
    for (col, v) in basis.directions.iter().enumerate() {
        let d = differential_unchecked(pair, v);
        for (row, val) in d.into_iter().enumerate() {
            m[(row, col)] = val;
        }
    }
    m
}

pub fn numerical_rank(singular_values: &[f64]) -> usize {
    let largest = singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = RANK_REL_TOL * largest.max(1.0);
    singular_values.iter().filter(|&&s| s > threshold).count()
}

pub fn jacobian_report(pair: &PosePair) -> JacobianReport {
    let matrix = jacobian(pair);
    let mut singular_values: [f64; 4] = matrix.singular_values().into();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    JacobianReport {
        base: *pair,
        matrix,
        singular_values,
        rank: numerical_rank(&singular_values),
        in_u: in_u(pair),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PosePoint;
    use crate::invariants::counterexample_witness;

    fn pair(x1: [f64; 3], n1: [f64; 3], x2: [f64; 3], n2: [f64; 3]) -> PosePair {
        PosePair::new(
            PosePoint::from_coords(x1, n1).unwrap(),
            PosePoint::from_coords(x2, n2).unwrap(),
        )
    }

    #[test]
    fn zero_tangent_has_zero_differential() {
        let (p, _) = counterexample_witness();
        assert_eq!(differential(&p, &TangentPair::zero()).unwrap(), [0.0; 4]);
    }

    #[test]
    fn hand_evaluated_differential_at_witness() {
        let (p, _) = counterexample_witness();
        let v = TangentPair {
            dx2: Vec3::z(),
            ..TangentPair::zero()
        };
        assert_eq!(differential(&p, &v).unwrap(), [1.0, 0.0, 0.0, 0.0]);
        let fd = finite_difference_differential(&p, &v, 1e-6);
        assert!(scaled_error(&[1.0, 0.0, 0.0, 0.0], &fd) < 1e-9);
    }

    #[test]
    fn non_tangent_velocity_rejected() {
        let (p, _) = counterexample_witness();
        let v = TangentPair {
            dn1: Vec3::z(),
            ..TangentPair::zero()
        };
        assert!(matches!(
            differential(&p, &v),
            Err(Error::TangencyViolation { slot: 1, .. })
        ));
    }

    #[test]
    fn basis_for_vertical_orientations() {
        let pr = pair([0.0; 3], [0.0, 0.0, 1.0], [1.0, 2.0, 3.0], [0.0, 0.0, 1.0]);
        let basis = tangent_basis(&pr);
        for k in [3, 4, 8, 9] {
            let v = basis.directions[k];
            let dn = if k < 5 { v.dn1 } else { v.dn2 };
            assert_eq!(dn.z, 0.0);
            assert!((dn.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn basis_is_orthonormal_and_tangent() {
        let pr = pair([0.1, 0.2, 0.3], [0.3, -0.4, 0.5], [1.0, 2.0, 3.0], [-0.9, 0.1, 0.1]);
        let basis = tangent_basis(&pr);
        for (a, va) in basis.directions.iter().enumerate() {
            let [r1, r2] = va.tangency_residual(&pr);
            assert!(r1.abs() < 1e-15 && r2.abs() < 1e-15);
            for (b, vb) in basis.directions.iter().enumerate() {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((va.dot(vb) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn membership_in_u() {
        let (p, _) = counterexample_witness();
        assert!((basis_determinant(&p).abs() - 1.0).abs() < 1e-15);
        assert!(in_u(&p));
        let same_n = pair([0.0; 3], [0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]);
        assert!(!in_u(&same_n));
        let coincident = pair([1.0; 3], [0.0, 0.0, 1.0], [1.0; 3], [1.0, 0.0, 0.0]);
        assert!(!in_u(&coincident));
    }

    #[test]
    fn witness_has_full_rank() {
        let (p, _) = counterexample_witness();
        let r = jacobian_report(&p);
        assert_eq!(r.rank, 4);
        assert!(r.in_u);
        assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn degenerate_fixtures_lose_rank() {
        let coincident = pair([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], [1.0, 2.0, 3.0], [0.6, 0.8, 0.0]);
        let r = jacobian_report(&coincident);
        assert!(r.rank <= 3);
        assert!(r.matrix.row(2).iter().all(|&v| v == 0.0));

        let aligned = pair([0.0; 3], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        assert!(jacobian_report(&aligned).rank < 4);
    }
}
