//! Gram matrices of `(n₁, n₂, x₂ - x₁)` and the representer built from them.
//!
//! The Gram matrix is a function of the universal invariants alone. Any
//! factorization `G = FᵀF` yields three vectors with the same pairwise dot
//! products as the original ones, so the pair rebuilt from the columns of
//! `F` lies in the same E(3) orbit as the pair that produced the invariants.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{PosePair, PosePoint, UnitVec3, Vec3};
use crate::invariants::UniversalInvariants;

/// Eigenvalues above `-PSD_TOL` count as nonnegative.
pub const PSD_TOL: f64 = 1e-10;
/// Factor columns shorter than this cannot be orientations.
pub const MIN_FACTOR_NORM: f64 = 1e-6;

/// Symmetric matrix `[[1, i4, i1], [i4, 1, i2], [i1, i2, i3]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GramMatrix(Matrix3<f64>);

impl GramMatrix {
    pub fn from_invariants(inv: &UniversalInvariants) -> Self {
        let UniversalInvariants { i1, i2, i3, i4 } = *inv;
        Self(Matrix3::new(
            1.0, i4, i1, //
            i4, 1.0, i2, //
            i1, i2, i3,
        ))
    }

    /// Pairwise dot products of three vectors.
    pub fn of_vectors(v: &[Vec3; 3]) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| v[i].dot(&v[j]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut ev: [f64; 3] = self.0.symmetric_eigenvalues().into();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    /// Returns `F` with `FᵀF = G`, from the eigendecomposition
    /// `G = V Λ Vᵀ` as `F = Λ^½ Vᵀ`. Eigenvalues in `[-PSD_TOL, 0)` are
    /// clamped to zero; rank-deficient matrices factor without trouble.
    pub fn factor(&self) -> Result<Matrix3<f64>> {
        let eig = SymmetricEigen::new(self.0);
        let min = eig.eigenvalues.min();
        if min < -PSD_TOL {
            return Err(Error::UnrealizableTuple { min_eigenvalue: min });
        }
        let sqrt_lambda = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        Ok(Matrix3::from_diagonal(&sqrt_lambda) * eig.eigenvectors.transpose())
    }
}

pub fn gram_matrix(inv: &UniversalInvariants) -> GramMatrix {
    GramMatrix::from_invariants(inv)
}

/// True iff some pair of pose points has these invariants.
pub fn is_realizable(inv: &UniversalInvariants) -> bool {
    inv.to_array().iter().all(|v| v.is_finite()) && gram_matrix(inv).is_psd()
}

/// Builds a pair whose universal invariants equal `inv`.
///
/// The first pose sits at the origin. Its orientation and the second pose's
/// orientation and position are the columns of the Gram factor, with the two
/// orientation columns renormalized.
pub fn representer(inv: &UniversalInvariants) -> Result<PosePair> {
    if !inv.to_array().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { what: "invariants" });
    }
    let f = gram_matrix(inv).factor()?;
    let orientation = |col: usize| -> Result<UnitVec3> {
        let v: Vec3 = f.column(col).into();
        let norm = v.norm();
        if norm < MIN_FACTOR_NORM {
            return Err(Error::DegenerateOrientation { norm });
        }
        UnitVec3::new(v)
    };
    let n1 = orientation(0)?;
    let n2 = orientation(1)?;
    let first = PosePoint {
        position: Vec3::zeros(),
        orientation: n1,
    };
    let second = PosePoint {
        position: f.column(2).into(),
        orientation: n2,
    };
    Ok(PosePair::new(first, second))
}
