//! Standard ES started from an evolvability-trained population versus the
//! same ES from a fresh initialization.
//!
//! cargo run --release --example seeding

use evoes::cli::preset;
use evoes::experiments::compare_seeding;
use evoes::runtime::WorkerPool;
use evoes::trainer::{init_checkpoint, run_generations, Direction};

fn main() -> evoes::Result<()> {
    let pool = WorkerPool::new(1)?;
    let config = preset("pointwalker-maxvar")?;
    let (trained, _) = run_generations(init_checkpoint(&config)?, config.generations, &pool, |_, _| Ok(()))?;
    let cmp = compare_seeding(&trained, Direction::PosX, 21, 0.01, &pool)?;
    println!("gen   seeded    fresh");
    for g in [0, 5, 10, 15, 20] {
        println!("{g:>3}  {:>7.2}  {:>7.2}", cmp.seeded[g].fitness_mean, cmp.fresh[g].fitness_mean);
    }
    println!("seeded ahead at 5, 10, 20: {}", cmp.seeded_ahead_at(&[5, 10, 20]));
    Ok(())
}
