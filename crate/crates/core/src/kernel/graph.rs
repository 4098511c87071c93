use crate::error::{Error, Result};
use crate::geometry::{EuclideanTransform, PosePoint};

/// Pose points carrying `channels` scalar features each, plus a positive
/// weight per node that plays the role of the integration measure.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseGraph {
    nodes: Vec<PosePoint>,
    /// Row-major `len × channels`.
    features: Vec<f64>,
    weights: Vec<f64>,
    channels: usize,
}

impl PoseGraph {
    pub fn new(
        nodes: Vec<PosePoint>,
        features: Vec<f64>,
        channels: usize,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidConfig("graph needs at least one channel".into()));
        }
        if features.len() != nodes.len() * channels {
            return Err(Error::DimensionMismatch {
                expected: nodes.len() * channels,
                got: features.len(),
            });
        }
        if weights.len() != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "node weights must be positive and finite, got {w}"
            )));
        }
        if !features.iter().all(|f| f.is_finite()) {
            return Err(Error::NonFinite { what: "node features" });
        }
        Ok(Self {
            nodes,
            features,
            weights,
            channels,
        })
    }

    /// Uniform weights `1/N`.
    pub fn with_uniform_weights(
        nodes: Vec<PosePoint>,
        features: Vec<f64>,
        channels: usize,
    ) -> Result<Self> {
        let n = nodes.len();
        Self::new(nodes, features, channels, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn nodes(&self) -> &[PosePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, node: usize) -> &[f64] {
        &self.features[node * self.channels..(node + 1) * self.channels]
    }

    /// Same nodes and weights with new features.
    pub fn with_features(&self, features: Vec<f64>, channels: usize) -> Result<Self> {
        Self::new(self.nodes.clone(), features, channels, self.weights.clone())
    }

    /// Moves every node by `g`; features and weights travel with the nodes.
    pub fn transformed(&self, g: &EuclideanTransform) -> Self {
        Self {
            nodes: self.nodes.iter().map(|p| g.act_on_pose(p)).collect(),
            ..self.clone()
        }
    }

    /// Node `k` of the result is node `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len());
        let c = self.channels;
        Self {
            nodes: perm.iter().map(|&i| self.nodes[i]).collect(),
            features: perm
                .iter()
                .flat_map(|&i| self.features[i * c..(i + 1) * c].iter().copied())
                .collect(),
            weights: perm.iter().map(|&i| self.weights[i]).collect(),
            channels: c,
        }
    }
}
