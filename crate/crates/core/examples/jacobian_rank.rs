//! Rank of the invariant map's differential on random pairs and on the
//! degenerate configurations where the rank drops.
//!
//!     cargo run --example jacobian_rank

use m3_invariants::jacobian_report;
use m3_invariants::sampling::{random_pair, seeded_rng, SamplingBox};
use m3_invariants::verify::degenerate_fixtures;

fn main() {
    let mut rng = seeded_rng(11);
    for k in 0..3 {
        let r = jacobian_report(&random_pair(&mut rng, &SamplingBox::default()));
        println!("random {k:<31} rank {}  in U {}  sigma {:.3?}", r.rank, r.in_u, r.singular_values.as_slice());
    }
    for (name, pair) in degenerate_fixtures() {
        let r = jacobian_report(&pair);
        println!("{name:<38} rank {}  in U {}  sigma {:.3?}", r.rank, r.in_u, r.singular_values.as_slice());
    }
}
