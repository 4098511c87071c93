//! Write a pose graph and a kernel to text and read both back bit for bit.
//!
//!     cargo run --example file_formats

use m3_invariants::io::{read_kernel, read_pose_graph, write_kernel, write_pose_graph};
use m3_invariants::kernel::{MlpKernel, PoseGraph};
use m3_invariants::sampling::{random_pose, seeded_rng, SamplingBox};

fn main() -> m3_invariants::Result<()> {
    let mut rng = seeded_rng(9);
    let nodes = (0..3).map(|_| random_pose(&mut rng, &SamplingBox::default())).collect();
    let graph = PoseGraph::with_uniform_weights(nodes, vec![0.5, -1.0, 2.0], 1)?;
    let text = write_pose_graph(&graph);
    print!("{text}");
    let (back, warnings) = read_pose_graph(&text)?;
    assert!(warnings.is_empty());
    assert_eq!(write_pose_graph(&back), text);

    let kernel = MlpKernel::random(&[4, 3, 1], 1, 1, &mut rng)?;
    let ktext = write_kernel(&kernel);
    println!("{}", ktext.lines().next().unwrap_or_default());
    let kback = read_kernel(&ktext)?;
    assert_eq!(kback.parameters(), kernel.parameters());
    println!("{} parameters round-tripped", kernel.num_parameters());
    Ok(())
}
