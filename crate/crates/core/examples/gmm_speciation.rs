//! Two-component mixture populations on the 1-D walker: both components
//! start together (or from one split parent) and drift to opposite sides.
//!
//! cargo run --release --example gmm_speciation

use evoes::cli::preset;
use evoes::experiments::{gmm_speciation, SpeciationMode};
use evoes::runtime::WorkerPool;

fn main() -> evoes::Result<()> {
    let pool = WorkerPool::new(1)?;
    let config = preset("pointwalker-maxvar")?;
    for mode in [SpeciationMode::Vanilla, SpeciationMode::Splitting { split_at: 50 }] {
        let r = gmm_speciation(&config, mode, &pool)?;
        println!(
            "{mode:?}: component behaviors {:+.2} / {:+.2}, separation {:.2}, speciated {}",
            r.component_bcs[0][0], r.component_bcs[1][0], r.separation, r.speciated
        );
    }
    Ok(())
}
