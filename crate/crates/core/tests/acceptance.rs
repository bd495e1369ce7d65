//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each, and exits non-zero if any fails.
//!
//! cargo test --release --test acceptance            # all criteria
//! cargo test --release --test acceptance -- 1 9 11  # a subset

use std::f64::consts::PI;
use std::time::Instant;

use evoes::cli::preset;
use evoes::distributions::{sample_offspring, IsoGaussian, ParamVec, PopulationDistribution};
use evoes::estimators::{maxent_gradient, maxvar_gradient};
use evoes::experiments::{bimodality_metrics, compare_seeding, gmm_speciation, sample_batch, SpeciationMode};
use evoes::gradcheck::run_suite;
use evoes::runtime::WorkerPool;
use evoes::shaping::{gaussian_kernel, rank_normalize, whiten, BcMatrix};
use evoes::theoremnet::flip_demo;
use evoes::trainer::{init_checkpoint, run_generations, train_run, Checkpoint, Direction, TrainConfig};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn train(config: &TrainConfig, pool: &WorkerPool) -> evoes::Result<Checkpoint> {
    Ok(run_generations(init_checkpoint(config)?, config.generations, pool, |_, _| Ok(()))?.0)
}

fn interference(name: &str) -> Outcome {
    let pool = WorkerPool::new(1).map_err(|e| e.to_string())?;
    let target = 5.0 * PI / 2.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 0..3 {
        let config = TrainConfig {
            run_seed: seed,
            ..preset(name).map_err(|e| e.to_string())?
        };
        let t = Instant::now();
        let state = train(&config, &pool).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        let mu = state.dist.means()[0][0];
        let dev = (mu.abs() - target).abs();
        ok &= dev < 0.5 && secs < 30.0;
        parts.push(format!("seed {seed}: mu {mu:.3} ({secs:.1}s)"));
    }
    check(ok, parts.join(", "))
}

fn c1() -> Outcome {
    interference("interference-maxvar")
}

fn c2() -> Outcome {
    interference("interference-maxent")
}

fn c3() -> Outcome {
    let t = Instant::now();
    let reports = run_suite(100_000, 0).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let accurate = reports.iter().all(|r| r.passed);
    let worst_cos = reports.iter().map(|r| r.cosine).fold(f64::INFINITY, f64::min);
    let worst_rel = reports.iter().map(|r| r.rel_magnitude_error).fold(0.0, f64::max);
    check(
        accurate && secs < 60.0,
        format!(
            "{} checks, min cosine {worst_cos:.4}, max rel.err {worst_rel:.4}, all accurate {accurate}, {secs:.1}s (budget 60s)",
            reports.len()
        ),
    )
}

fn iso_scores(mean: f64, sigma: f64, n: usize, seed: u64) -> (Vec<f64>, Vec<Vec<ParamVec>>) {
    let dist: PopulationDistribution = IsoGaussian::new(ParamVec::new(vec![mean]).unwrap(), sigma).unwrap().into();
    let offspring = sample_offspring(&dist, n, seed);
    let z = offspring.iter().map(|o| o.genome[0]).collect();
    let scores = offspring.iter().map(|o| dist.score(&o.genome).unwrap()).collect();
    (z, scores)
}

fn c4() -> Outcome {
    let (sigma, h) = (0.5, 1.0);
    let (z, scores) = iso_scores(0.7, sigma, 10_000, 4);
    let g = maxent_gradient(&BcMatrix::column(&z).unwrap(), &scores, h).map_err(|e| e.to_string())?;
    let s2 = sigma * sigma;
    let oracle = 0.5 * (2.0 * PI * (s2 + h * h)).ln() + s2 / (2.0 * (s2 + h * h));
    check(
        (g.loss - oracle).abs() <= 0.02,
        format!("loss {:.4}, oracle {oracle:.4}", g.loss),
    )
}

fn c5() -> Outcome {
    let n = 10_000;
    let (z, scores) = iso_scores(-0.3, 0.5, n, 5);
    let bcs = BcMatrix::column(&z).unwrap();
    let g = maxvar_gradient(&bcs, &scores).map_err(|e| e.to_string())?.grad[0][0];
    let (w, _) = whiten(&bcs).map_err(|e| e.to_string())?;
    let terms: Vec<f64> = w.iter_rows().zip(&scores).map(|(b, s)| b[0] * b[0] * s[0][0]).collect();
    let mean = terms.iter().sum::<f64>() / n as f64;
    let var = terms.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    check(g.abs() <= 3.0 * se, format!("grad {g:+.4}, 3 SE = {:.4}", 3.0 * se))
}

struct WalkerRuns {
    maxvar: Vec<Checkpoint>,
}

fn c6(runs: &mut Option<WalkerRuns>) -> Outcome {
    let pool = WorkerPool::new(1).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut maxvar = Vec::new();
    for seed in 0..3u64 {
        let cfg = |name: &str| -> Result<TrainConfig, String> {
            Ok(TrainConfig {
                run_seed: seed,
                ..preset(name).map_err(|e| e.to_string())?
            })
        };
        let es = train(&cfg("pointwalker-es")?, &pool).map_err(|e| e.to_string())?;
        let es_batch = sample_batch(&es, 2000, &pool).map_err(|e| e.to_string())?;
        let es_fitness = es_batch.fitness().iter().sum::<f64>() / es_batch.len() as f64;
        for name in ["pointwalker-maxvar", "pointwalker-maxent"] {
            let state = train(&cfg(name)?, &pool).map_err(|e| e.to_string())?;
            let m = bimodality_metrics(&sample_batch(&state, 2000, &pool).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let pass = (0.3..=0.7).contains(&m.frac_positive) && m.mean_abs_bc >= 0.5 * es_fitness;
            ok &= pass;
            let short = if name.ends_with("maxvar") { "maxvar" } else { "maxent" };
            parts.push(format!(
                "{short}/{seed}: frac+ {:.2} |x| {:.1}",
                m.frac_positive, m.mean_abs_bc
            ));
            if name.ends_with("maxvar") {
                maxvar.push(state);
            }
        }
        parts.push(format!("es/{seed}: {es_fitness:.1}"));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    *runs = Some(WalkerRuns { maxvar });
    check(ok, format!("{} ({secs:.0}s)", parts.join(", ")))
}

fn c7(runs: &mut Option<WalkerRuns>) -> Outcome {
    let pool = WorkerPool::new(1).map_err(|e| e.to_string())?;
    if runs.is_none() {
        let mut maxvar = Vec::new();
        for seed in 0..3 {
            let config = TrainConfig {
                run_seed: seed,
                ..preset("pointwalker-maxvar").map_err(|e| e.to_string())?
            };
            maxvar.push(train(&config, &pool).map_err(|e| e.to_string())?);
        }
        *runs = Some(WalkerRuns { maxvar });
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (seed, trained) in runs.as_ref().unwrap().maxvar.iter().enumerate() {
        let cmp = compare_seeding(trained, Direction::PosX, 21, 0.01, &pool).map_err(|e| e.to_string())?;
        let ahead = cmp.seeded_ahead_at(&[5, 10, 20]);
        ok &= ahead;
        let at = |g: usize| format!("{:.1}/{:.1}", cmp.seeded[g].fitness_mean, cmp.fresh[g].fitness_mean);
        parts.push(format!("pair {seed}: {} {} {}", at(5), at(10), at(20)));
    }
    check(ok, format!("seeded/fresh at 5,10,20: {}", parts.join("; ")))
}

fn c8() -> Outcome {
    let pool = WorkerPool::new(1).map_err(|e| e.to_string())?;
    let mut hits = 0;
    let mut parts = Vec::new();
    for (i, mode) in [SpeciationMode::Vanilla, SpeciationMode::Splitting { split_at: 50 }]
        .into_iter()
        .enumerate()
    {
        for seed in 0..3 {
            let config = TrainConfig {
                run_seed: seed,
                ..preset("pointwalker-maxvar").map_err(|e| e.to_string())?
            };
            let r = gmm_speciation(&config, mode, &pool).map_err(|e| e.to_string())?;
            hits += r.speciated as usize;
            let tag = if i == 0 { "vanilla" } else { "split" };
            parts.push(format!("{tag}/{seed} {:+.1}|{:+.1}", r.component_bcs[0][0], r.component_bcs[1][0]));
        }
    }
    check(hits >= 4, format!("{hits}/6 speciated: {}", parts.join(", ")))
}

fn c9() -> Outcome {
    let t = Instant::now();
    let demo = flip_demo(0.05, 201, 1000, 0).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let iid = &demo.full_iid;
    check(
        demo.passed() && secs < 10.0,
        format!(
            "sup err {:.1e}/{:.1e}, flip rate {:.3} vs bound {:.3} (3 SE {:.3}), {secs:.1}s",
            demo.designated.sup_error_pos,
            demo.designated.sup_error_neg,
            iid.flip_rate_pos.unwrap_or(f64::NAN),
            iid.theorem_bound.unwrap_or(f64::NAN),
            3.0 * iid.binomial_se().unwrap_or(f64::NAN)
        ),
    )
}

fn c10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut n_files = 0;
    for name in ["interference-maxvar", "interference-maxent", "pointwalker-maxent", "pointwalker-maxvar"] {
        let mut config = preset(name).map_err(|e| e.to_string())?;
        config.run_seed = 3;
        config.checkpoint_every = 5;
        if config.env.uses_policy() {
            config.generations = 15;
        }
        let mut outputs = Vec::new();
        for (i, workers) in [1, 4, 1, 4].into_iter().enumerate() {
            let out = dir.path().join(format!("{name}-{i}"));
            train_run(&config, workers, &out).map_err(|e| e.to_string())?;
            let mut files: Vec<_> = std::fs::read_dir(&out)
                .map_err(|e| e.to_string())?
                .map(|e| e.unwrap().path())
                .collect();
            files.sort();
            let contents: Vec<(std::ffi::OsString, Vec<u8>)> = files
                .iter()
                .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap()))
                .collect();
            outputs.push(contents);
        }
        n_files += outputs[0].len();
        ok &= outputs.iter().all(|o| o == &outputs[0]);
    }
    check(ok, format!("{n_files} run files over 4 configs, identical for workers 1, 4, 1, 4"))
}

fn c11() -> Outcome {
    let mut failures = Vec::new();
    let mut expect = |cond: bool, what: &str| {
        if !cond {
            failures.push(what.to_string());
        }
    };
    expect(rank_normalize(&[10.0, 30.0, 20.0]) == [-0.5, 0.5, 0.0], "rank [10,30,20]");
    expect(rank_normalize(&[7.0]) == [0.0], "rank [7]");
    expect(rank_normalize(&[5.0, 5.0]) == [0.0, 0.0], "rank ties");
    let values: Vec<f64> = (0..200).map(|i| ((i * 7919) % 211) as f64 * 0.37 - 30.0).collect();
    let base = rank_normalize(&values);
    let exp: Vec<f64> = values.iter().map(|v| (v / 10.0).exp()).collect();
    let affine: Vec<f64> = values.iter().map(|v| 3.0 * v + 11.0).collect();
    expect(rank_normalize(&exp) == base && rank_normalize(&affine) == base, "monotone invariance");

    let col = BcMatrix::column(&[1.0, 2.0, 3.0]).unwrap();
    let (w, _) = whiten(&col).unwrap();
    let want = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
    expect(w.as_slice().iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-5), "whiten [1,2,3]");
    let (w, _) = whiten(&BcMatrix::column(&[2.0, 2.0, 2.0]).unwrap()).unwrap();
    expect(w.as_slice().iter().all(|v| *v == 0.0), "whiten constant");
    let rows: Vec<Vec<f64>> = (0..100)
        .map(|i| vec![(i as f64 * 0.7).sin() * 40.0 + 3.0, (i as f64).sqrt() * 1e-3, -(i as f64)])
        .collect();
    let raw = BcMatrix::from_rows(&rows).unwrap();
    let (w, stats) = whiten(&raw).unwrap();
    let back = stats.invert(&w).unwrap();
    expect(
        raw.as_slice().iter().zip(back.as_slice()).all(|(a, b)| (a - b).abs() <= 1e-10),
        "whiten round-trip",
    );
    expect(
        w.col_mean().iter().all(|m| m.abs() < 1e-12) && w.col_var().iter().all(|v| (v.sqrt() - 1.0).abs() < 1e-12),
        "whitened moments",
    );

    expect((gaussian_kernel(&[0.0], 1.0) - 0.39894).abs() < 5e-6, "kernel [0]");
    expect((gaussian_kernel(&[2.0], 1.0) - 0.05399).abs() < 5e-6, "kernel [2]");
    expect((gaussian_kernel(&[0.0, 0.0], 1.0) - 0.15915).abs() < 5e-6, "kernel [0,0]");
    check(failures.is_empty(), if failures.is_empty() { "all shaping properties hold".into() } else { failures.join(", ") })
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |i: usize| wanted.is_empty() || wanted.contains(&i);
    let mut walker_runs = None;
    let names = [
        "interference convergence, maxvar",
        "interference convergence, maxent",
        "gradient oracle suite",
        "analytic entropy",
        "maxvar null gradient",
        "pointwalker bimodality",
        "seeding standard ES",
        "mixture speciation",
        "weight-flip network",
        "determinism",
        "shaping properties",
    ];
    let mut failed = 0;
    for (i, name) in names.iter().enumerate() {
        let idx = i + 1;
        if !run(idx) {
            continue;
        }
        let outcome = match idx {
            1 => c1(),
            2 => c2(),
            3 => c3(),
            4 => c4(),
            5 => c5(),
            6 => c6(&mut walker_runs),
            7 => c7(&mut walker_runs),
            8 => c8(),
            9 => c9(),
            10 => c10(),
            _ => c11(),
        };
        match outcome {
            Ok(d) => println!("criterion {idx:>2} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {idx:>2} FAIL  {name}: {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
