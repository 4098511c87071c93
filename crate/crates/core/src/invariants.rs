//! The two invariant collections on pairs of pose points.
//!
//! [`UniversalInvariants`] are four dot products of `n₁`, `n₂` and
//! `x₂ - x₁`; together they determine a pair up to a Euclidean motion.
//! [`PonitaInvariants`] are the three features used by PONITA; they do not,
//! and [`counterexample_witness`] returns two pairs that collide under them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{PosePair, PosePoint, UnitVec3, Vec3};

/// `(x₂-x₁)·n₁`, `(x₂-x₁)·n₂`, `|x₂-x₁|²`, `n₁·n₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniversalInvariants {
    pub i1: f64,
    pub i2: f64,
    /// Squared distance, not distance.
    pub i3: f64,
    pub i4: f64,
}

impl UniversalInvariants {
    pub fn new(i1: f64, i2: f64, i3: f64, i4: f64) -> Self {
        Self { i1, i2, i3, i4 }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.i1, self.i2, self.i3, self.i4]
    }

    pub fn from_array([i1, i2, i3, i4]: [f64; 4]) -> Self {
        Self { i1, i2, i3, i4 }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.to_array(), &other.to_array())
    }
}

/// `(x₂-x₁)·n₁`, the distance from `x₂` to the line through `x₁` along
/// `n₁`, and the angle between `n₁` and `n₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PonitaInvariants {
    pub j1: f64,
    pub j2: f64,
    /// Radians in `[0, π]`.
    pub j3: f64,
}

impl PonitaInvariants {
    pub fn to_array(&self) -> [f64; 3] {
        [self.j1, self.j2, self.j3]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.to_array(), &other.to_array())
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn universal_invariants(pair: &PosePair) -> UniversalInvariants {
    let d = pair.displacement();
    let n1 = pair.first.orientation.as_vec();
    let n2 = pair.second.orientation.as_vec();
    UniversalInvariants {
        i1: d.dot(n1),
        i2: d.dot(n2),
        i3: d.dot(&d),
        i4: n1.dot(n2),
    }
}

pub fn ponita_invariants(pair: &PosePair) -> PonitaInvariants {
    let d = pair.displacement();
    let n1 = pair.first.orientation.as_vec();
    let n2 = pair.second.orientation.as_vec();
    let j1 = d.dot(n1);
    let j2 = (d - n1 * j1).norm();
    // arccos(n₁·n₂), evaluated in a form that stays accurate near 0 and π
    let j3 = n1.cross(n2).norm().atan2(n1.dot(n2));
    PonitaInvariants { j1, j2, j3 }
}

/// Selects which invariant collection feeds a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Collection {
    Universal,
    Ponita,
}

impl Collection {
    pub const ALL: [Collection; 2] = [Collection::Universal, Collection::Ponita];

    pub fn dim(self) -> usize {
        match self {
            Collection::Universal => 4,
            Collection::Ponita => 3,
        }
    }

    /// Writes the invariants of `pair` into `out[..self.dim()]`.
    pub fn write_features(self, pair: &PosePair, out: &mut [f64]) {
        match self {
            Collection::Universal => {
                out[..4].copy_from_slice(&universal_invariants(pair).to_array())
            }
            Collection::Ponita => out[..3].copy_from_slice(&ponita_invariants(pair).to_array()),
        }
    }

    pub fn features(self, pair: &PosePair) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.write_features(pair, &mut out);
        out
    }

    pub fn column_names(self) -> &'static [&'static str] {
        match self {
            Collection::Universal => &["i1", "i2", "i3", "i4"],
            Collection::Ponita => &["j1", "j2", "j3"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Collection::Universal => "universal",
            Collection::Ponita => "ponita",
        }
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Collection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "universal" => Ok(Collection::Universal),
            "ponita" => Ok(Collection::Ponita),
            other => Err(format!("unknown invariant collection `{other}`")),
        }
    }
}

/// The pairs `((0, e₃), (e₁, e₂))` and `((0, e₃), (e₁, e₁))`.
///
/// Their PONITA invariants coincide at `(0, 1, π/2)` while `(x₂-x₁)·n₂` is 0
/// on the first and 1 on the second, so no Euclidean motion relates them.
pub fn counterexample_witness() -> (PosePair, PosePair) {
    let origin = PosePoint {
        position: Vec3::zeros(),
        orientation: UnitVec3::e3(),
    };
    let p2 = PosePoint {
        position: Vec3::x(),
        orientation: UnitVec3::e2(),
    };
    let q2 = PosePoint {
        position: Vec3::x(),
        orientation: UnitVec3::e1(),
    };
    (PosePair::new(origin, p2), PosePair::new(origin, q2))
}

/// Rotates the second orientation of `pair` about the first orientation by
/// `angle` radians. The PONITA invariants are unchanged by this move, while
/// the universal ones generally are not.
pub fn twist_second_orientation(pair: &PosePair, angle: f64) -> PosePair {
    let axis = pair.first.orientation;
    let rot = nalgebra::Rotation3::from_axis_angle(
        &nalgebra::Unit::new_unchecked(axis.into_inner()),
        angle,
    );
    let mut out = *pair;
    out.second.orientation = UnitVec3::new(rot * pair.second.orientation.into_inner())
        .expect("rotation preserves norm");
    out
}
