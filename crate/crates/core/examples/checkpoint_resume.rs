//! Interrupting a run and resuming from its checkpoint reproduces the
//! uninterrupted run bit for bit.
//!
//! cargo run --release --example checkpoint_resume

use evoes::cli::preset;
use evoes::runtime::WorkerPool;
use evoes::trainer::{init_checkpoint, load_checkpoint, run_generations, save_checkpoint};

fn main() -> evoes::Result<()> {
    let mut config = preset("pointwalker-maxent")?;
    config.population_size = 100;
    let pool = WorkerPool::new(2)?;
    let dir = std::env::temp_dir().join("evoes-checkpoint-example");
    std::fs::create_dir_all(&dir).map_err(|e| evoes::Error::InvalidValue(e.to_string()))?;

    let (straight, _) = run_generations(init_checkpoint(&config)?, 20, &pool, |_, _| Ok(()))?;

    let (half, _) = run_generations(init_checkpoint(&config)?, 10, &pool, |_, _| Ok(()))?;
    let path = dir.join("half.eves");
    save_checkpoint(&half, &path)?;
    let (resumed, _) = run_generations(load_checkpoint(&path)?, 10, &pool, |_, _| Ok(()))?;

    let a = straight.to_bytes()?;
    let b = resumed.to_bytes()?;
    println!("checkpoint: {} bytes, identical after resume: {}", a.len(), a == b);
    println!("hash {}", evoes::cli::content_hash(&a));
    Ok(())
}
