//! Diversity training on the 1-D walker splits the offspring into walkers
//! heading left and right, while standard ES walks one way only.
//! Writes a behavior heatmap to the system temp directory.
//!
//! cargo run --release --example pointwalker_bimodality

use evoes::cli::preset;
use evoes::experiments::{bimodality_metrics, export_heatmap, sample_batch};
use evoes::runtime::WorkerPool;
use evoes::trainer::{init_checkpoint, run_generations};

fn main() -> evoes::Result<()> {
    let pool = WorkerPool::new(1)?;
    for name in ["pointwalker-maxvar", "pointwalker-maxent", "pointwalker-es"] {
        let config = preset(name)?;
        let (state, _) = run_generations(init_checkpoint(&config)?, config.generations, &pool, |_, _| Ok(()))?;
        let batch = sample_batch(&state, 2000, &pool)?;
        let m = bimodality_metrics(&batch)?;
        println!(
            "{name:>19}: {:.0}% of offspring end right of the origin, mean |x| = {:.2}",
            100.0 * m.frac_positive,
            m.mean_abs_bc
        );
        let heatmap = export_heatmap(&batch, 40, 20.0)?;
        let path = std::env::temp_dir().join(format!("{name}-heatmap.csv"));
        heatmap.write_csv(&path)?;
        let row: String = heatmap.counts
            .iter()
            .map(|&c| match c {
                0 => ' ',
                1..=20 => '.',
                21..=100 => 'o',
                _ => '#',
            })
            .collect();
        println!("{:>19}  [{row}]  -> {}", "", path.display());
    }
    Ok(())
}
