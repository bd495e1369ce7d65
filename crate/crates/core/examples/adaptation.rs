//! After diversity training, a handful of offspring already solve either
//! direction: pick the best of k samples for +x and for -x.
//!
//! cargo run --release --example adaptation

use evoes::cli::preset;
use evoes::experiments::adapt_best_of_k;
use evoes::runtime::WorkerPool;
use evoes::trainer::{init_checkpoint, run_generations, Direction};

fn main() -> evoes::Result<()> {
    let pool = WorkerPool::new(1)?;
    let config = preset("pointwalker-maxent")?;
    let (state, _) = run_generations(init_checkpoint(&config)?, config.generations, &pool, |_, _| Ok(()))?;
    for objective in [Direction::PosX, Direction::NegX] {
        let r = adapt_best_of_k(&state, objective, 10, 1, 7)?;
        println!(
            "{objective}: best of 10 scores {:.2} (offspring {}, seed {:#018x})",
            r.best_score, r.best_index, r.best_seed
        );
    }
    Ok(())
}
