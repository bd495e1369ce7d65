//! Score-function gradients against common-random-number finite differences.
//!
//! cargo run --release --example gradient_check [n]

use std::time::Instant;

use evoes::estimators::EstimatorKind;
use evoes::gradcheck::{compare, FdOptions, GradTask};

fn main() -> evoes::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20_000);
    println!("{:<8} {:<13} {:>8} {:>9}  pass", "est", "task", "cosine", "rel.err");
    for task in [GradTask::Synthetic1d, GradTask::Synthetic5d] {
        for kind in [EstimatorKind::Es, EstimatorKind::MaxVar, EstimatorKind::MaxEnt] {
            let t = Instant::now();
            let r = compare(kind, task, &FdOptions::new(n, task.default_dist().sigma, 0))?;
            println!(
                "{:<8} {:<13} {:>8.5} {:>9.4}  {}  ({:.1}s)",
                r.estimator,
                r.task,
                r.cosine,
                r.rel_magnitude_error,
                r.passed,
                t.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
