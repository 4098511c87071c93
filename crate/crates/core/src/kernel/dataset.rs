//! Synthetic datasets for kernel training.
//!
//! The separation target is `yᵢ = Σⱼ (xⱼ - xᵢ)·nⱼ wⱼ`, i.e. the convolution
//! of the constant field 1 with the kernel `i2`. The universal collection
//! contains `i2` as an input, the PONITA collection cannot recover it. Some
//! graphs come in twin couples that differ only in one node's orientation,
//! arranged as the two witness pairs moved by a common random motion: the
//! anchor node then has identical PONITA features in both twins while its
//! target differs by that node's weight.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{EuclideanTransform, PosePoint};
use crate::invariants::{counterexample_witness, Collection};
use crate::kernel::conv::convolve;
use crate::kernel::graph::PoseGraph;
use crate::kernel::mlp::{MlpKernel, Normalization};
use crate::sampling::{random_pose, random_transform, seeded_rng, SamplingBox};

/// A graph with per-node targets (`len × c_out`, row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub graph: PoseGraph,
    pub targets: Vec<f64>,
}

/// Two samples whose `node` has identical PONITA features but targets that
/// differ by `target_gap`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantedCollision {
    pub graphs: (usize, usize),
    pub node: usize,
    pub target_gap: f64,
}

impl PlantedCollision {
    /// Least total squared error any predictor that agrees on both graphs
    /// can reach on this node: predicting the midpoint costs `(gap/2)²`
    /// twice.
    pub fn floor(&self) -> f64 {
        0.5 * self.target_gap * self.target_gap
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub collisions: Vec<PlantedCollision>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of scalar outputs the MSE averages over.
    pub fn num_outputs(&self) -> usize {
        self.samples.iter().map(|s| s.targets.len()).sum()
    }

    /// Summed collision floors.
    pub fn collision_floor_sum(&self) -> f64 {
        self.collisions
            .iter()
            .map(PlantedCollision::floor)
            .fold(0.0, |acc, f| acc + f)
    }

    /// Lower bound on the MSE of any PONITA-feature model over this set.
    pub fn collision_floor_mse(&self) -> f64 {
        match self.num_outputs() {
            0 => 0.0,
            m => self.collision_floor_sum() / m as f64,
        }
    }

    /// Splits into `(train, test)`. Twin couples stay together; couples and
    /// single graphs are each split in proportion `test_fraction`.
    pub fn split(&self, test_fraction: f64, seed: u64) -> (Dataset, Dataset) {
        let mut in_couple = vec![false; self.len()];
        let mut couples: Vec<Vec<usize>> = Vec::new();
        for c in &self.collisions {
            in_couple[c.graphs.0] = true;
            in_couple[c.graphs.1] = true;
            couples.push(vec![c.graphs.0, c.graphs.1]);
        }
        let mut singles: Vec<Vec<usize>> = (0..self.len())
            .filter(|&i| !in_couple[i])
            .map(|i| vec![i])
            .collect();

        let mut rng = seeded_rng(seed);
        let mut test_units = Vec::new();
        let mut train_units = Vec::new();
        for units in [&mut couples, &mut singles] {
            units.shuffle(&mut rng);
            let n_test = (test_fraction * units.len() as f64).round() as usize;
            test_units.extend(units.drain(..n_test.min(units.len())));
            train_units.append(units);
        }
        (self.subset(&train_units), self.subset(&test_units))
    }

    fn subset(&self, units: &[Vec<usize>]) -> Dataset {
        let mut units = units.to_vec();
        units.sort();
        let mut remap = vec![usize::MAX; self.len()];
        let mut samples = Vec::new();
        for &i in units.iter().flatten() {
            remap[i] = samples.len();
            samples.push(self.samples[i].clone());
        }
        let collisions = self
            .collisions
            .iter()
            .filter(|c| remap[c.graphs.0] != usize::MAX)
            .map(|c| PlantedCollision {
                graphs: (remap[c.graphs.0], remap[c.graphs.1]),
                ..*c
            })
            .collect();
        Dataset {
            samples,
            collisions,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationOptions {
    /// Fraction of graphs that belong to a planted twin couple.
    pub witness_fraction: f64,
    /// Node positions are drawn from `[-h, h]³`.
    pub half_width: f64,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        Self {
            witness_fraction: 0.2,
            half_width: 1.0,
        }
    }
}

/// `yᵢ = Σⱼ (xⱼ - xᵢ)·nⱼ wⱼ`, summed over `j` ascending.
pub fn separation_target(graph: &PoseGraph) -> Vec<f64> {
    let nodes = graph.nodes();
    nodes
        .iter()
        .map(|pi| {
            nodes
                .iter()
                .zip(graph.weights())
                .map(|(pj, w)| (pj.position - pi.position).dot(&pj.orientation) * w)
                .sum()
        })
        .collect()
}

fn random_graph<R: Rng>(rng: &mut R, n_nodes: usize, bounds: &SamplingBox) -> Vec<PosePoint> {
    (0..n_nodes).map(|_| random_pose(rng, bounds)).collect()
}

fn unit_field_graph(nodes: Vec<PosePoint>) -> Result<PoseGraph> {
    let n = nodes.len();
    PoseGraph::with_uniform_weights(nodes, vec![1.0; n], 1)
}

pub fn make_separation_dataset(seed: u64, n_graphs: usize, n_nodes: usize) -> Result<Dataset> {
    make_separation_dataset_with(seed, n_graphs, n_nodes, &SeparationOptions::default())
}

pub fn make_separation_dataset_with(
    seed: u64,
    n_graphs: usize,
    n_nodes: usize,
    opts: &SeparationOptions,
) -> Result<Dataset> {
    if n_graphs == 0 || n_nodes < 2 {
        return Err(Error::InvalidConfig(format!(
            "separation dataset needs graphs and at least two nodes, got {n_graphs} × {n_nodes}"
        )));
    }
    if !(0.0..=1.0).contains(&opts.witness_fraction) {
        return Err(Error::InvalidConfig(format!(
            "witness fraction {} outside [0, 1]",
            opts.witness_fraction
        )));
    }
    let bounds = SamplingBox::new(opts.half_width);
    let mut rng = seeded_rng(seed);
    let n_couples = ((opts.witness_fraction * n_graphs as f64 / 2.0).round() as usize).min(n_graphs / 2);

    let (p, q) = counterexample_witness();
    let mut data = Dataset::default();
    for _ in 0..n_couples {
        let mut nodes = random_graph(&mut rng, n_nodes, &bounds);
        let anchor = rng.random_range(0..n_nodes);
        let partner = (anchor + rng.random_range(1..n_nodes)) % n_nodes;
        let g: EuclideanTransform = random_transform(&mut rng, &bounds);
        nodes[anchor] = g.act_on_pose(&p.first);
        nodes[partner] = g.act_on_pose(&p.second);
        let mut twin = nodes.clone();
        twin[partner] = g.act_on_pose(&q.second);

        let a = unit_field_graph(nodes)?;
        let b = unit_field_graph(twin)?;
        // i2 is 0 on the first witness and 1 on the second
        let target_gap = a.weights()[partner];
        let first = data.samples.len();
        for graph in [a, b] {
            let targets = separation_target(&graph);
            data.samples.push(Sample { graph, targets });
        }
        data.collisions.push(PlantedCollision {
            graphs: (first, first + 1),
            node: anchor,
            target_gap,
        });
    }
    while data.samples.len() < n_graphs {
        let graph = unit_field_graph(random_graph(&mut rng, n_nodes, &bounds))?;
        let targets = separation_target(&graph);
        data.samples.push(Sample { graph, targets });
    }
    Ok(data)
}

/// Random graphs whose targets are the convolution of the unit field with
/// `teacher`. The teacher's input normalization is refit to the sampled
/// pair features.
pub fn make_self_distill_dataset(
    seed: u64,
    n_graphs: usize,
    n_nodes: usize,
    collection: Collection,
    teacher: &MlpKernel,
    half_width: f64,
) -> Result<(Dataset, MlpKernel)> {
    if n_graphs == 0 || n_nodes == 0 {
        return Err(Error::InvalidConfig("self-distillation needs a non-empty dataset".into()));
    }
    let bounds = SamplingBox::new(half_width);
    let mut rng = seeded_rng(seed);
    let graphs = (0..n_graphs)
        .map(|_| unit_field_graph(random_graph(&mut rng, n_nodes, &bounds)))
        .collect::<Result<Vec<_>>>()?;
    let mut teacher = teacher.clone();
    let features = crate::kernel::train::stacked_pair_features(graphs.iter(), collection);
    teacher.normalization = Normalization::fit(&features);
    let samples = graphs
        .into_iter()
        .map(|graph| {
            let targets = convolve(&graph, &teacher, collection)?.features().to_vec();
            Ok(Sample { graph, targets })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        Dataset {
            samples,
            collisions: Vec::new(),
        },
        teacher,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::ponita_invariants;
    use crate::geometry::PosePair;

    #[test]
    fn couples_collide_under_ponita_features() {
        let data = make_separation_dataset(3, 20, 6).unwrap();
        assert_eq!(data.len(), 20);
        assert_eq!(data.collisions.len(), 2);
        for c in &data.collisions {
            let a = &data.samples[c.graphs.0];
            let b = &data.samples[c.graphs.1];
            let i = c.node;
            for j in 0..6 {
                let fa = ponita_invariants(&PosePair::new(a.graph.nodes()[i], a.graph.nodes()[j]));
                let fb = ponita_invariants(&PosePair::new(b.graph.nodes()[i], b.graph.nodes()[j]));
                assert!(fa.max_abs_diff(&fb) < 1e-12);
            }
            let gap = a.targets[i] - b.targets[i];
            assert!((gap.abs() - c.target_gap).abs() < 1e-12, "{gap}");
            assert_eq!(c.target_gap, 1.0 / 6.0);
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = make_separation_dataset(11, 10, 4).unwrap();
        let b = make_separation_dataset(11, 10, 4).unwrap();
        assert_eq!(a, b);
        let c = make_separation_dataset(12, 10, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_keeps_couples_together() {
        let data = make_separation_dataset(5, 50, 4).unwrap();
        let (train, test) = data.split(0.2, 9);
        assert_eq!(train.len() + test.len(), 50);
        assert_eq!(train.collisions.len() + test.collisions.len(), 5);
        assert_eq!(test.collisions.len(), 1);
        for part in [&train, &test] {
            for c in &part.collisions {
                let a = &part.samples[c.graphs.0].graph;
                let b = &part.samples[c.graphs.1].graph;
                assert_eq!(a.nodes()[c.node], b.nodes()[c.node]);
            }
        }
        let floor = test.collision_floor_mse();
        assert!((floor - 0.5 / 16.0 / test.num_outputs() as f64).abs() < 1e-18);
    }

    #[test]
    fn target_is_linear_in_i2() {
        // the target is the w-weighted row sum of i2 over pairs
        let data = make_separation_dataset(8, 4, 5).unwrap();
        for s in &data.samples {
            let nodes = s.graph.nodes();
            for (i, y) in s.targets.iter().enumerate() {
                let direct: f64 = (0..5)
                    .map(|j| {
                        crate::invariants::universal_invariants(&PosePair::new(nodes[i], nodes[j])).i2
                            * s.graph.weights()[j]
                    })
                    .sum();
                assert!((direct - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_single_node_graphs() {
        assert!(make_separation_dataset(1, 4, 1).is_err());
    }
}
