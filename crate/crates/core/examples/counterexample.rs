//! Two pose pairs that the PONITA invariants cannot tell apart, although no
//! Euclidean motion maps one onto the other.
//!
//!     cargo run --example counterexample

use m3_invariants::{counterexample_witness, find_alignment, ponita_invariants, universal_invariants};

fn main() {
    let (p, q) = counterexample_witness();
    println!("ponita    p = {:?}", ponita_invariants(&p).to_array());
    println!("ponita    q = {:?}", ponita_invariants(&q).to_array());
    println!("universal p = {:?}", universal_invariants(&p).to_array());
    println!("universal q = {:?}", universal_invariants(&q).to_array());
    match find_alignment(&p, &q) {
        Some(a) => println!("aligned with residual {}", a.residual),
        None => println!("no motion maps p onto q"),
    }
}
