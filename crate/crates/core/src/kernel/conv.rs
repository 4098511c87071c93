//! Discrete equivariant convolution
//! `(Φf)(pᵢ) = Σⱼ k(pᵢ, pⱼ) f(pⱼ) wⱼ`.
//!
//! The kernel sees the pair only through an invariant collection, so `Φ`
//! commutes with every Euclidean motion of the node set. Pairs are visited
//! in lexicographic `(i, j)` order and each output is accumulated over `j`
//! ascending, then input channel ascending. No compensated summation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::PosePair;
use crate::invariants::Collection;
use crate::kernel::graph::PoseGraph;
use crate::kernel::mlp::MlpKernel;

/// Invariants of every ordered pair `(pᵢ, pⱼ)`, self pairs included.
/// Column `i·N + j` holds pair `(i, j)`.
pub fn pair_features(graph: &PoseGraph, collection: Collection) -> DMatrix<f64> {
    let n = graph.len();
    let dim = collection.dim();
    let mut out = DMatrix::zeros(dim, n * n);
    let nodes = graph.nodes();
    for i in 0..n {
        for j in 0..n {
            let pair = PosePair::new(nodes[i], nodes[j]);
            collection.write_features(&pair, out.column_mut(i * n + j).as_mut_slice());
        }
    }
    out
}

/// Applies the convolution operator and returns a graph with the same
/// nodes and weights and `kernel.c_out` output channels.
pub fn convolve(graph: &PoseGraph, kernel: &MlpKernel, collection: Collection) -> Result<PoseGraph> {
    check_kernel(graph, kernel, collection)?;
    let kvals = kernel.forward(&pair_features(graph, collection));
    let out = aggregate(graph, kernel, &kvals);
    graph.with_features(out, kernel.c_out)
}

fn check_kernel(graph: &PoseGraph, kernel: &MlpKernel, collection: Collection) -> Result<()> {
    if kernel.input_dim() != collection.dim() {
        return Err(Error::DimensionMismatch {
            expected: collection.dim(),
            got: kernel.input_dim(),
        });
    }
    if kernel.c_in != graph.channels() {
        return Err(Error::DimensionMismatch {
            expected: graph.channels(),
            got: kernel.c_in,
        });
    }
    Ok(())
}

/// Weighted kernel sum given kernel values for every pair
/// (`c_out·c_in × N²`, pair order as in [`pair_features`]).
pub(crate) fn aggregate(graph: &PoseGraph, kernel: &MlpKernel, kvals: &DMatrix<f64>) -> Vec<f64> {
    let n = graph.len();
    let (c_out, c_in) = (kernel.c_out, kernel.c_in);
    let mut out = vec![0.0; n * c_out];
    for i in 0..n {
        for j in 0..n {
            let k = kvals.column(i * n + j);
            let f = graph.feature(j);
            let w = graph.weights()[j];
            for a in 0..c_out {
                let mut s = 0.0;
                for b in 0..c_in {
                    s += k[a * c_in + b] * f[b];
                }
                out[i * c_out + a] += s * w;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PosePoint;
    use crate::sampling::{random_pose, seeded_rng, SamplingBox};

    fn graph(n: usize, seed: u64) -> PoseGraph {
        let mut rng = seeded_rng(seed);
        let nodes = (0..n)
            .map(|_| random_pose(&mut rng, &SamplingBox::default()))
            .collect();
        let features = (0..n).map(|i| i as f64 - 1.0).collect();
        PoseGraph::new(nodes, features, 1, vec![1.0; n]).unwrap()
    }

    #[test]
    fn constant_kernel_sums_features() {
        let g = graph(5, 1);
        let mut k = MlpKernel::zeros(&[4, 3, 1], 1, 1).unwrap();
        k.layers[1].bias[0] = 1.0;
        let out = convolve(&g, &k, Collection::Universal).unwrap();
        let total: f64 = g.features().iter().sum();
        for v in out.features() {
            assert_eq!(*v, total);
        }
    }

    #[test]
    fn single_node_sees_coincident_invariants() {
        let p = PosePoint::from_coords([1.0, 2.0, 3.0], [0.0, 0.0, 1.0]).unwrap();
        let g = PoseGraph::new(vec![p], vec![2.0], 1, vec![0.5]).unwrap();
        let mut rng = seeded_rng(4);
        for collection in Collection::ALL {
            let k = MlpKernel::random(&[collection.dim(), 4, 1], 1, 1, &mut rng).unwrap();
            let coincident: Vec<f64> = match collection {
                Collection::Universal => vec![0.0, 0.0, 0.0, 1.0],
                Collection::Ponita => vec![0.0, 0.0, 0.0],
            };
            let expected = k.eval(&coincident).unwrap()[(0, 0)] * 2.0 * 0.5;
            let out = convolve(&g, &k, collection).unwrap();
            assert!((out.features()[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_must_match_collection_and_channels() {
        let g = graph(3, 2);
        let k = MlpKernel::zeros(&[3, 1], 1, 1).unwrap();
        assert!(convolve(&g, &k, Collection::Universal).is_err());
        let k2 = MlpKernel::zeros(&[4, 2], 1, 2).unwrap();
        assert!(convolve(&g, &k2, Collection::Universal).is_err());
    }

    #[test]
    fn multichannel_contracts_input_channels() {
        let g = graph(3, 3);
        let g2 = g
            .with_features(vec![1.0, 0.5, -1.0, 2.0, 0.0, 3.0], 2)
            .unwrap();
        let mut k = MlpKernel::zeros(&[4, 6], 3, 2).unwrap();
        // row-major 3×2 output: [[1, 0], [0, 1], [1, 1]]
        for (idx, b) in [1.0, 0.0, 0.0, 1.0, 1.0, 1.0].into_iter().enumerate() {
            k.layers[0].bias[idx] = b;
        }
        let out = convolve(&g2, &k, Collection::Universal).unwrap();
        assert_eq!(out.channels(), 3);
        let (s0, s1) = (1.0 - 1.0 + 0.0, 0.5 + 2.0 + 3.0);
        for i in 0..3 {
            assert_eq!(out.feature(i), &[s0, s1, s0 + s1]);
        }
    }
}
