//! Orbit test: find a Euclidean motion carrying one pose pair onto another.

use nalgebra::Matrix3;

use crate::geometry::{pair_residual, EuclideanTransform, OrthoMat3, PosePair};

/// Default acceptance threshold on the alignment residual.
pub const ALIGNMENT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alignment {
    pub transform: EuclideanTransform,
    /// Largest coordinate error of `transform ⊳ from` against `to`.
    pub residual: f64,
}

/// Returns `g` with `g ⊳ from = to` when one exists, judged by
/// [`ALIGNMENT_TOL`].
pub fn find_alignment(from: &PosePair, to: &PosePair) -> Option<Alignment> {
    find_alignment_with_tol(from, to, ALIGNMENT_TOL)
}

/// Solves orthogonal Procrustes over all of O(3) on the vectors
/// `(n₁, n₂, x₂ - x₁)`, then fixes the translation from the first position.
///
/// No determinant correction is applied, so mirror images align. When the
/// vectors are rank deficient the minimizer is not unique; any one that
/// passes the residual check is returned.
pub fn find_alignment_with_tol(from: &PosePair, to: &PosePair, tol: f64) -> Option<Alignment> {
    let a = columns(from);
    let b = columns(to);
    let cross = b * a.transpose();
    let svd = cross.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let q = OrthoMat3::new(u * v_t).ok()?;
    let translation = to.first.position - q.apply(&from.first.position);
    let transform = EuclideanTransform {
        translation,
        linear: q,
    };
    let residual = pair_residual(&transform.act_on_pair(from), to);
    (residual <= tol).then_some(Alignment {
        transform,
        residual,
    })
}

fn columns(pair: &PosePair) -> Matrix3<f64> {
    let [n1, n2, d] = pair.frame_vectors();
    Matrix3::from_columns(&[n1, n2, d])
}
