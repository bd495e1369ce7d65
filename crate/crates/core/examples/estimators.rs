//! The raw estimator API: sample offspring, compute scores, and turn behaviors
//! into gradients without the trainer.
//!
//! cargo run --release --example estimators

use evoes::distributions::{sample_offspring, IsoGaussian, ParamVec, PopulationDistribution};
use evoes::estimators::{es_gradient, maxent_gradient, maxvar_gradient};
use evoes::kde::entropy_estimate;
use evoes::shaping::{rank_normalize, whiten, BcMatrix};

fn main() -> evoes::Result<()> {
    let sigma = 0.5;
    let dist: PopulationDistribution = IsoGaussian::new(ParamVec::new(vec![1.0])?, sigma)?.into();
    let offspring = sample_offspring(&dist, 10_000, 42);
    let scores = offspring
        .iter()
        .map(|o| dist.score(&o.genome))
        .collect::<evoes::Result<Vec<_>>>()?;
    let z: Vec<f64> = offspring.iter().map(|o| o.genome[0]).collect();

    // f(z) = z^2 has d/dmu E[f] = 2 mu; rank shaping keeps only the direction.
    let f: Vec<f64> = z.iter().map(|v| v * v).collect();
    let g = es_gradient(&rank_normalize(&f), &scores)?;
    println!("es     (f = z^2, ranked): {:+.4}", g.grad[0][0]);

    // B(z) = z: whitened variance does not depend on the mean.
    let bcs = BcMatrix::column(&z)?;
    let g = maxvar_gradient(&bcs, &scores)?;
    println!("maxvar (B = z):           {:+.4}", g.grad[0][0]);

    // B(z) = z^2: spreading grows with |mu|.
    let sq = BcMatrix::column(&f)?;
    let g = maxvar_gradient(&sq, &scores)?;
    println!("maxvar (B = z^2):         {:+.4}", g.grad[0][0]);

    let h = 1.0;
    let raw = entropy_estimate(&bcs, h);
    let analytic = 0.5 * (2.0 * std::f64::consts::PI * (sigma * sigma + h * h)).ln()
        + sigma * sigma / (2.0 * (sigma * sigma + h * h));
    println!("entropy estimate (B = z, h = 1): {raw:.4}  analytic {analytic:.4}");

    let (w, _) = whiten(&sq)?;
    let g = maxent_gradient(&w, &scores, h)?;
    println!("maxent (B = z^2, whitened): {:+.4}  loss {:.4}", g.grad[0][0], g.loss);
    Ok(())
}
