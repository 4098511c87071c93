//! Move a random pair by a random motion (reflections included) and find the
//! motion again from the two pairs alone.
//!
//!     cargo run --example alignment

use m3_invariants::find_alignment;
use m3_invariants::sampling::{random_pair, random_transform, seeded_rng, SamplingBox};

fn main() {
    let mut rng = seeded_rng(3);
    let bounds = SamplingBox::default();
    for _ in 0..5 {
        let pair = random_pair(&mut rng, &bounds);
        let g = random_transform(&mut rng, &bounds);
        let moved = g.act_on_pair(&pair);
        let found = find_alignment(&pair, &moved).expect("orbit mates align");
        println!(
            "reflection {:5}  recovered error {:.2e}  residual {:.2e}",
            g.linear.is_reflection(),
            found.transform.max_abs_diff(&g),
            found.residual
        );
    }
}
