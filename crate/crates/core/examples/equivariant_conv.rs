//! One convolution layer with an invariant-conditioned kernel. Moving the
//! input graph leaves the output features unchanged; relabeling nodes
//! relabels the output.
//!
//!     cargo run --example equivariant_conv

use m3_invariants::kernel::{convolve, pair_features, MlpKernel, Normalization, PoseGraph};
use m3_invariants::sampling::{random_pose, random_transform, seeded_rng, SamplingBox};
use m3_invariants::Collection;

fn main() -> m3_invariants::Result<()> {
    let mut rng = seeded_rng(5);
    let bounds = SamplingBox::default();
    let n = 6;
    let nodes = (0..n).map(|_| random_pose(&mut rng, &bounds)).collect();
    let features = (0..2 * n).map(|k| k as f64 / 4.0).collect();
    let graph = PoseGraph::with_uniform_weights(nodes, features, 2)?;

    for collection in Collection::ALL {
        let mut kernel = MlpKernel::random(&[collection.dim(), 16, 16, 6], 3, 2, &mut rng)?;
        kernel.normalization = Normalization::fit(&pair_features(&graph, collection));
        let out = convolve(&graph, &kernel, collection)?;

        let g = random_transform(&mut rng, &bounds);
        let moved = convolve(&graph.transformed(&g), &kernel, collection)?;
        let motion_gap = max_gap(out.features(), moved.features());

        let perm: Vec<usize> = (0..n).rev().collect();
        let relabeled = convolve(&graph.permuted(&perm), &kernel, collection)?;
        let expected: Vec<f64> = perm.iter().flat_map(|&i| out.feature(i).to_vec()).collect();
        let perm_gap = max_gap(&expected, relabeled.features());

        println!("{collection:<9} out channels {}  motion gap {motion_gap:.1e}  relabel gap {perm_gap:.1e}", out.channels());
    }
    Ok(())
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
