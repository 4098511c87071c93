//! Train kernels on both invariant collections against a target that depends
//! on more than the PONITA invariants see. Prints the CSV report.
//!
//!     cargo run --release --example expressivity -- 300

use m3_invariants::kernel::{run_experiment, ExperimentConfig};

fn main() -> m3_invariants::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let cfg = ExperimentConfig {
        epochs,
        ..ExperimentConfig::default()
    };
    let outcome = run_experiment(&cfg)?;
    print!("{}", outcome.report().to_csv());
    eprintln!("universal / ponita test MSE = {:.3e}", outcome.mse_ratio());
    Ok(())
}
