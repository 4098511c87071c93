//! Full-batch gradient descent on the per-node mean squared error.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::Collection;
use crate::kernel::conv::pair_features;
use crate::kernel::dataset::Sample;
use crate::kernel::graph::PoseGraph;
use crate::kernel::mlp::{Gradients, MlpKernel, Normalization};
use crate::sampling::seeded_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// Pairwise `(xⱼ - xᵢ)·nⱼ` aggregated over the graph, with planted
    /// witness collisions.
    Separation,
    /// Output of a frozen random kernel on the same collection.
    SelfDistill,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Separation => "separation",
            TargetKind::SelfDistill => "self-distill",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_nodes: usize,
    pub n_graphs: usize,
    /// Collection used by [`train_kernel`]; experiments train both.
    pub collection: Collection,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
    pub target: TargetKind,
    pub witness_fraction: f64,
    pub test_fraction: f64,
    pub position_half_width: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_nodes: 8,
            n_graphs: 200,
            collection: Collection::Universal,
            hidden: vec![64, 64],
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 2000,
            seed: 7,
            target: TargetKind::Separation,
            witness_fraction: 0.2,
            test_fraction: 0.2,
            position_half_width: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_nodes == 0 || self.n_graphs == 0 {
            return bad("node and graph counts must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad(format!("hidden sizes must be positive: {:?}", self.hidden));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return bad(format!("test fraction {} outside [0, 1)", self.test_fraction));
        }
        if !(self.position_half_width > 0.0 && self.position_half_width.is_finite()) {
            return bad("position half width must be positive".into());
        }
        Ok(())
    }

    /// `[collection.dim(), hidden…, 1]`.
    pub fn layer_sizes(&self, collection: Collection) -> Vec<usize> {
        let mut sizes = vec![collection.dim()];
        sizes.extend(&self.hidden);
        sizes.push(1);
        sizes
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Pair features of several graphs side by side.
pub fn stacked_pair_features<'a>(
    graphs: impl Iterator<Item = &'a PoseGraph>,
    collection: Collection,
) -> DMatrix<f64> {
    let blocks: Vec<DMatrix<f64>> = graphs.map(|g| pair_features(g, collection)).collect();
    let total = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(collection.dim(), total);
    let mut col = 0;
    for b in &blocks {
        out.columns_mut(col, b.ncols()).copy_from(b);
        col += b.ncols();
    }
    out
}

/// Precomputed pair features and bookkeeping for a list of samples.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    collection: Collection,
    features: DMatrix<f64>,
    /// Per pair: global output node and global source node.
    pairs: Vec<(usize, usize)>,
    /// Global node features, `c_in` per node.
    node_features: Vec<f64>,
    node_weights: Vec<f64>,
    targets: Vec<f64>,
    c_in: usize,
    c_out: usize,
}

impl TrainingSet {
    pub fn new(samples: &[Sample], collection: Collection) -> Result<Self> {
        let c_in = samples.first().map_or(1, |s| s.graph.channels());
        let c_out = match samples.first() {
            Some(s) if !s.graph.is_empty() => s.targets.len() / s.graph.len(),
            _ => 1,
        };
        let mut pairs = Vec::new();
        let mut node_features = Vec::new();
        let mut node_weights = Vec::new();
        let mut targets = Vec::new();
        let mut offset = 0;
        for s in samples {
            let n = s.graph.len();
            if s.graph.channels() != c_in {
                return Err(Error::DimensionMismatch {
                    expected: c_in,
                    got: s.graph.channels(),
                });
            }
            if s.targets.len() != n * c_out {
                return Err(Error::DimensionMismatch {
                    expected: n * c_out,
                    got: s.targets.len(),
                });
            }
            for i in 0..n {
                for j in 0..n {
                    pairs.push((offset + i, offset + j));
                }
            }
            node_features.extend_from_slice(s.graph.features());
            node_weights.extend_from_slice(s.graph.weights());
            targets.extend_from_slice(&s.targets);
            offset += n;
        }
        Ok(Self {
            collection,
            features: stacked_pair_features(samples.iter().map(|s| &s.graph), collection),
            pairs,
            node_features,
            node_weights,
            targets,
            c_in,
            c_out,
        })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn num_outputs(&self) -> usize {
        self.targets.len()
    }

    fn check(&self, kernel: &MlpKernel) -> Result<()> {
        if kernel.input_dim() != self.collection.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.collection.dim(),
                got: kernel.input_dim(),
            });
        }
        if kernel.c_in != self.c_in || kernel.c_out != self.c_out {
            return Err(Error::DimensionMismatch {
                expected: self.c_out * self.c_in,
                got: kernel.output_dim(),
            });
        }
        Ok(())
    }

    fn predictions(&self, kvals: &DMatrix<f64>) -> Vec<f64> {
        let (c_in, c_out) = (self.c_in, self.c_out);
        let mut out = vec![0.0; self.targets.len()];
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            let k = kvals.column(p);
            let f = &self.node_features[j * c_in..(j + 1) * c_in];
            let w = self.node_weights[j];
            for a in 0..c_out {
                let mut s = 0.0;
                for b in 0..c_in {
                    s += k[a * c_in + b] * f[b];
                }
                out[i * c_out + a] += s * w;
            }
        }
        out
    }

    fn mse_of(&self, predictions: &[f64]) -> f64 {
        if self.targets.is_empty() {
            return 0.0;
        }
        let sse: f64 = predictions
            .iter()
            .zip(&self.targets)
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        sse / self.targets.len() as f64
    }

    pub fn mse(&self, kernel: &MlpKernel) -> Result<f64> {
        self.check(kernel)?;
        Ok(self.mse_of(&self.predictions(&kernel.forward(&self.features))))
    }

    /// Loss and its gradient with respect to every kernel parameter.
    pub fn loss_and_gradient(&self, kernel: &MlpKernel) -> Result<(f64, Gradients)> {
        self.check(kernel)?;
        let cache = kernel.forward_cached(&self.features);
        let pred = self.predictions(&cache.output);
        let loss = self.mse_of(&pred);
        let scale = 2.0 / self.targets.len().max(1) as f64;
        let residual: Vec<f64> = pred
            .iter()
            .zip(&self.targets)
            .map(|(p, t)| scale * (p - t))
            .collect();
        let (c_in, c_out) = (self.c_in, self.c_out);
        let mut grad_k = DMatrix::zeros(c_out * c_in, self.pairs.len());
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            let f = &self.node_features[j * c_in..(j + 1) * c_in];
            let w = self.node_weights[j];
            for a in 0..c_out {
                let r = residual[i * c_out + a] * w;
                for b in 0..c_in {
                    grad_k[(a * c_in + b, p)] = r * f[b];
                }
            }
        }
        Ok((loss, kernel.backward(&cache, &grad_k)))
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub kernel: MlpKernel,
    /// Loss before each update, then the final loss: `epochs + 1` entries.
    pub loss_history: Vec<f64>,
}

/// Builds an initial kernel for `collection` from `cfg.seed` and fits its
/// input normalization to `data`.
pub fn initial_kernel(cfg: &ExperimentConfig, collection: Collection, data: &TrainingSet) -> Result<MlpKernel> {
    let mut rng = seeded_rng(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1));
    let mut kernel = MlpKernel::random(&cfg.layer_sizes(collection), 1, 1, &mut rng)?;
    kernel.normalization = Normalization::fit(data.features());
    Ok(kernel)
}

/// Trains a kernel on `cfg.collection` features of `data`.
pub fn train_kernel(cfg: &ExperimentConfig, data: &[Sample]) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidConfig("no training samples".into()));
    }
    let set = TrainingSet::new(data, cfg.collection)?;
    let kernel = initial_kernel(cfg, cfg.collection, &set)?;
    train_from(kernel, &set, cfg)
}

/// Gradient descent with heavy-ball momentum from a given kernel.
pub fn train_from(mut kernel: MlpKernel, set: &TrainingSet, cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let mut velocity: Option<Gradients> = None;
    let check = |loss: f64, epoch: usize, history: &[f64]| -> Result<()> {
        if loss.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteLoss {
                epoch,
                last_finite: history.last().copied().unwrap_or(f64::NAN),
            })
        }
    };
    for epoch in 0..cfg.epochs {
        let (loss, grad) = set.loss_and_gradient(&kernel)?;
        check(loss, epoch, &history)?;
        history.push(loss);
        let step = match velocity.take() {
            Some(mut v) => {
                for (vl, gl) in v.layers.iter_mut().zip(&grad.layers) {
                    let mu = cfg.momentum;
                    vl.weights.zip_apply(&gl.weights, |v, g| *v = mu * *v + g);
                    vl.bias.zip_apply(&gl.bias, |v, g| *v = mu * *v + g);
                }
                v
            }
            None => grad,
        };
        kernel.apply_update(&step, cfg.learning_rate);
        velocity = Some(step);
    }
    let final_loss = set.mse(&kernel)?;
    check(final_loss, cfg.epochs, &history)?;
    history.push(final_loss);
    Ok(TrainOutcome {
        kernel,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::dataset::make_separation_dataset;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            n_nodes: 4,
            n_graphs: 6,
            hidden: vec![5],
            epochs: 0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initial_kernel() {
        let cfg = small_cfg();
        let data = make_separation_dataset(1, 6, 4).unwrap();
        let out = train_kernel(&cfg, &data.samples).unwrap();
        assert_eq!(out.loss_history.len(), 1);
        let set = TrainingSet::new(&data.samples, cfg.collection).unwrap();
        let init = initial_kernel(&cfg, cfg.collection, &set).unwrap();
        assert_eq!(out.kernel, init);
        assert_eq!(out.loss_history[0], set.mse(&init).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = ExperimentConfig {
            learning_rate: 1e6,
            epochs: 200,
            momentum: 0.0,
            ..small_cfg()
        };
        let data = make_separation_dataset(1, 6, 4).unwrap();
        assert!(matches!(
            train_kernel(&cfg, &data.samples),
            Err(Error::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn loss_decreases() {
        let cfg = ExperimentConfig {
            epochs: 50,
            ..small_cfg()
        };
        let data = make_separation_dataset(2, 6, 4).unwrap();
        let out = train_kernel(&cfg, &data.samples).unwrap();
        assert_eq!(out.loss_history.len(), 51);
        assert!(out.loss_history[50] < out.loss_history[0]);
    }

    #[test]
    fn config_from_toml() {
        let cfg = ExperimentConfig::from_toml("seed = 3\nhidden = [8]\ntarget = \"self-distill\"\ncollection = \"ponita\"").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.hidden, vec![8]);
        assert_eq!(cfg.target, TargetKind::SelfDistill);
        assert_eq!(cfg.collection, Collection::Ponita);
        assert_eq!(cfg.n_graphs, 200);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("momentum = 1.5").is_err());
    }
}
