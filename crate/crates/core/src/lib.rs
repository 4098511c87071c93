//! Universal, independent E(3) invariants on pairs of position-orientations.
//!
//! A position-orientation is a point `x ∈ ℝ³` with a unit direction `n`.
//! For a pair `((x₁, n₁), (x₂, n₂))` the four dot products
//!
//! ```text
//! i1 = (x₂-x₁)·n₁    i2 = (x₂-x₁)·n₂    i3 = |x₂-x₁|²    i4 = n₁·n₂
//! ```
//!
//! are invariant under rotations, reflections and translations, determine
//! the pair up to such a motion ([`gram::representer`] rebuilds one), and
//! have linearly independent differentials on a dense open set
//! ([`calculus::jacobian_report`]). The three-feature collection used by
//! PONITA lacks the first property; [`invariants::counterexample_witness`]
//! exhibits two pairs it cannot tell apart.
//!
//! The [`kernel`] module uses either collection as input to a small MLP
//! kernel inside a discrete equivariant convolution, and measures the
//! resulting expressivity gap on a synthetic dataset.

pub mod alignment;
pub mod calculus;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod gram;
pub mod invariants;
pub mod io;
pub mod kernel;
pub mod report;
pub mod sampling;
pub mod verify;

pub use alignment::{find_alignment, Alignment};
pub use calculus::{differential, in_u, jacobian_report, tangent_basis, JacobianReport, TangentPair};
pub use error::{Error, Result};
pub use geometry::{EuclideanTransform, OrthoMat3, PosePair, PosePoint, UnitVec3, Vec3};
pub use gram::{gram_matrix, is_realizable, representer, GramMatrix};
pub use invariants::{
    counterexample_witness, ponita_invariants, universal_invariants, Collection, PonitaInvariants,
    UniversalInvariants,
};
