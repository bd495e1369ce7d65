//! MaxVar and MaxEnt on the 1-D interference behavior. The mean climbs the
//! `5 sin(x/5)` envelope toward its peak at `5 pi / 2` while ignoring the fast
//! `sin(20x)` ripple.
//!
//! cargo run --release --example interference

use std::f64::consts::PI;

use evoes::cli::preset;
use evoes::runtime::WorkerPool;
use evoes::trainer::{init_checkpoint, run_generations};

fn main() -> evoes::Result<()> {
    let pool = WorkerPool::new(1)?;
    let target = 5.0 * PI / 2.0;
    for name in ["interference-maxvar", "interference-maxent"] {
        let config = preset(name)?;
        let start = init_checkpoint(&config)?;
        let (state, _) = run_generations(start, config.generations, &pool, |s, _| {
            if s.generation % 50 == 0 {
                println!("{name:>20} gen {:>3}  mu = {:+.3}", s.generation, s.dist.means()[0][0]);
            }
            Ok(())
        })?;
        let mu = state.dist.means()[0][0];
        println!("{name:>20} final mu = {mu:.3}  (| |mu| - 5pi/2 | = {:.3})\n", (mu.abs() - target).abs());
    }
    Ok(())
}
