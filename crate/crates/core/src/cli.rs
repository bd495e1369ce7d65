//! Command-line front end: layered configuration, subcommand dispatch, and
//! run manifests.
//!
//! Configuration is resolved in three layers: a compiled-in preset (or the
//! defaults), then a TOML file, then repeated `--set key=value` overrides.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::estimators::BcScaling;
use crate::experiments::{
    adapt_best_of_k, bimodality_metrics, compare_seeding, export_heatmap, gmm_speciation, sample_batch,
    SpeciationMode,
};
use crate::gradcheck::run_suite;
use crate::runtime::WorkerPool;
use crate::theoremnet::flip_demo;
use crate::trainer::{
    init_checkpoint, load_checkpoint, save_checkpoint, train_run_detailed, Algo, Direction, GenStats,
    OptimizerKind, TrainConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const WORKERS_ENV: &str = "EVOES_WORKERS";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const PRESET_NAMES: [&str; 7] = [
    "interference-maxvar",
    "interference-maxent",
    "locomotion-maxvar",
    "locomotion-maxent",
    "pointwalker-maxvar",
    "pointwalker-maxent",
    "pointwalker-es",
];

/// Compiled-in configuration presets.
pub fn preset(name: &str) -> Result<TrainConfig> {
    let interference = TrainConfig {
        env: EnvKind::Interference,
        population_size: 500,
        sigma: 0.5,
        generations: 300,
        init_mean: 1.0,
        ..TrainConfig::default()
    };
    let locomotion = TrainConfig {
        env: EnvKind::PointWalker2d,
        population_size: 10_000,
        sigma: 0.02,
        learning_rate: 0.01,
        l2_coef: 0.05,
        kernel_bandwidth: 1.0,
        optimizer: OptimizerKind::Adam,
        ..TrainConfig::default()
    };
    let walker = TrainConfig {
        env: EnvKind::PointWalker1d,
        population_size: 500,
        sigma: 0.1,
        learning_rate: 0.03,
        l2_coef: 0.0,
        generations: 150,
        optimizer: OptimizerKind::Adam,
        ..TrainConfig::default()
    };
    Ok(match name {
        "interference-maxvar" => TrainConfig {
            algo: Algo::MaxvarEes,
            learning_rate: 0.03,
            optimizer: OptimizerKind::Sgd,
            bc_scaling: BcScaling::Center,
            ..interference
        },
        "interference-maxent" => TrainConfig {
            algo: Algo::MaxentEes,
            learning_rate: 0.1,
            kernel_bandwidth: 1.0,
            optimizer: OptimizerKind::Adam,
            bc_scaling: BcScaling::Whiten,
            ..interference
        },
        "locomotion-maxvar" => TrainConfig {
            algo: Algo::MaxvarEes,
            ..locomotion
        },
        "locomotion-maxent" => TrainConfig {
            algo: Algo::MaxentEes,
            ..locomotion
        },
        "pointwalker-maxvar" => TrainConfig {
            algo: Algo::MaxvarEes,
            ..walker
        },
        "pointwalker-maxent" => TrainConfig {
            algo: Algo::MaxentEes,
            ..walker
        },
        "pointwalker-es" => TrainConfig {
            algo: Algo::StandardEs,
            ..walker
        },
        other => {
            return Err(Error::config(
                "preset",
                format!("unknown preset `{other}` (known: {})", PRESET_NAMES.join(", ")),
            ))
        }
    })
}

fn to_table(config: &TrainConfig) -> Result<toml::Table> {
    toml::Table::try_from(config).map_err(|e| Error::InvalidValue(format!("config is not representable: {e}")))
}

pub fn config_to_toml(config: &TrainConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::InvalidValue(format!("config is not representable: {e}")))
}

/// Parses a complete or partial TOML document over the defaults.
pub fn config_from_toml(text: &str) -> Result<TrainConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("config", e.message().to_string()))?;
    resolve(TrainConfig::default(), &[table])
}

fn known_keys() -> Vec<String> {
    let mut keys: Vec<String> = to_table(&TrainConfig::default())
        .expect("defaults serialize")
        .keys()
        .cloned()
        .collect();
    keys.push("mlp".into());
    keys
}

fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Layers `overlays` onto `base`, checking each top-level key on its own so
/// errors name the key at fault.
fn resolve(base: TrainConfig, overlays: &[toml::Table]) -> Result<TrainConfig> {
    let known = known_keys();
    let base_table = to_table(&base)?;
    let mut merged = base_table.clone();
    for o in overlays {
        for k in o.keys() {
            if !known.contains(k) {
                return Err(Error::config(k.clone(), "unknown key"));
            }
        }
        merge(&mut merged, o);
    }
    for (k, v) in &merged {
        let mut probe = base_table.clone();
        probe.insert(k.clone(), v.clone());
        TrainConfig::deserialize(probe).map_err(|e| Error::config(k.clone(), e.message().to_string()))?;
    }
    let config =
        TrainConfig::deserialize(merged).map_err(|e| Error::config("config", e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Turns `key=value` (dotted keys allowed) into a one-entry table. Values
/// parse as TOML, falling back to a bare string.
pub fn parse_override(spec: &str) -> Result<toml::Table> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(spec, "expected key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::config(spec, "empty key"));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields one part");
    let mut table = toml::Table::new();
    table.insert(last.to_string(), value);
    for p in parts.into_iter().rev() {
        let mut outer = toml::Table::new();
        outer.insert(p.to_string(), toml::Value::Table(table));
        table = outer;
    }
    Ok(table)
}

/// Preset (or defaults), then the file, then each override in order.
pub fn parse_config(preset_name: Option<&str>, file: Option<&Path>, overrides: &[String]) -> Result<TrainConfig> {
    let base = match preset_name {
        Some(p) => preset(p)?,
        None => TrainConfig::default(),
    };
    let mut overlays = Vec::new();
    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            Error::config("config", format!("{}: {}", path.display(), e.message()))
        })?;
        overlays.push(table);
    }
    for o in overrides {
        overlays.push(parse_override(o)?);
    }
    resolve(base, &overlays)
}

/// Git blob hash: `sha256("blob <len>\0" + bytes)`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: TrainConfig,
    pub workers: usize,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub logs: Vec<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
    pub heatmaps: Vec<PathBuf>,
    pub checkpoint_hash: Option<String>,
}

impl RunManifest {
    fn new(command: &str, config: &TrainConfig, workers: usize) -> Self {
        RunManifest {
            command: command.into(),
            config: config.clone(),
            workers,
            started_at: now(),
            finished_at: 0.0,
            logs: Vec::new(),
            checkpoints: Vec::new(),
            heatmaps: Vec::new(),
            checkpoint_hash: None,
        }
    }

    /// Hashes the last listed checkpoint, stamps the end time, and writes
    /// the manifest into `dir`.
    fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        if let Some(cp) = self.checkpoints.last() {
            let bytes = fs::read(cp).map_err(|e| Error::io(cp, e))?;
            self.checkpoint_hash = Some(content_hash(&bytes));
        }
        self.finished_at = now();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidValue(format!("{}: {e}", path.display())))
    }

    pub fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        self.logs.iter().chain(&self.checkpoints).chain(&self.heatmaps)
    }
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Parser, Debug)]
#[command(name = "evoes", version, about = "Evolvability evolution strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Compiled-in preset to start from.
    #[arg(long)]
    preset: Option<String>,
    /// TOML file layered over the preset.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set sigma=0.1`; repeatable.
    #[arg(long = "set", value_name = "K=V")]
    set: Vec<String>,
    /// Shorthand for `--set run_seed=N`.
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for `--set generations=N`.
    #[arg(long)]
    generations: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut sets = self.set.clone();
        if let Some(s) = self.seed {
            sets.push(format!("run_seed={s}"));
        }
        if let Some(g) = self.generations {
            sets.push(format!("generations={g}"));
        }
        parse_config(self.preset.as_deref(), self.config.as_deref(), &sets)
    }
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Worker threads; defaults to $EVOES_WORKERS, then 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn workers(&self) -> Result<usize> {
        match self.workers {
            Some(w) => Ok(w),
            None => match std::env::var(WORKERS_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(WORKERS_ENV, format!("expected a worker count, got `{v}`"))),
                Err(_) => Ok(1),
            },
        }
    }

    fn out(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitMode {
    Vanilla,
    Splitting,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a population and write the run log and checkpoints.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sample a batch from a checkpoint and write behaviors plus a heatmap.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        /// Heatmap half-width; defaults to the walker's reach.
        #[arg(long)]
        range: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Best-of-k adaptation of a checkpoint toward an objective.
    Adapt {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        #[arg(long, default_value = "+x", allow_hyphen_values = true)]
        objective: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        n_eval: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Standard ES seeded from a checkpoint, compared against a fresh start.
    SeedEs {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        #[arg(long, default_value = "+x", allow_hyphen_values = true)]
        objective: String,
        #[arg(long, default_value_t = 20)]
        generations: u64,
        #[arg(long, default_value_t = 0.01)]
        learning_rate: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Two-component mixture training, from two seeds or by splitting.
    GmmSplit {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value = "vanilla")]
        mode: SplitMode,
        #[arg(long, default_value_t = 50)]
        split_at: u64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Build and verify the weight-flip network; prints a JSON report.
    TheoremDemo {
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Finite-difference oracle suite for all estimators.
    Gradcheck {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value).expect("json")).map_err(|e| Error::io("<stdout>", e))
}

fn gen_stats_json(stats: &[GenStats]) -> serde_json::Value {
    json!(stats.iter().map(|s| s.fitness_mean).collect::<Vec<_>>())
}

fn write_log(path: &Path, stats: &[GenStats], bc_dim: usize) -> Result<()> {
    let mut text = GenStats::csv_header(bc_dim);
    text.push('\n');
    for s in stats {
        text.push_str(&s.csv_row(false));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    match cli.command {
        Command::Train { config, run } => {
            let config = config.resolve()?;
            let workers = run.workers()?;
            let pool = WorkerPool::new(workers)?;
            let dir = run.out("runs/train");
            let mut manifest = RunManifest::new("train", &config, workers);
            let state = init_checkpoint(&config)?;
            let (final_state, stats, artifacts) = train_run_detailed(state, config.generations, &pool, &dir)?;
            manifest.logs.push(artifacts.log);
            manifest.checkpoints = artifacts.checkpoints;
            manifest.checkpoints.push(artifacts.final_checkpoint);
            let path = manifest.finish(&dir)?;
            let last = stats.last();
            write_json(
                out,
                &json!({
                    "generations": final_state.generation,
                    "final_bc_mean": last.map(|s| s.bc_mean.clone()),
                    "final_fitness_mean": last.map(|s| s.fitness_mean),
                    "means": final_state.dist.means().iter().map(|m| m.to_vec()).collect::<Vec<_>>(),
                    "manifest": path,
                }),
            )?;
            Ok(true)
        }
        Command::Evaluate {
            checkpoint,
            samples,
            bins,
            range,
            run,
        } => {
            let state = load_checkpoint(&checkpoint)?;
            let workers = run.workers()?;
            let pool = WorkerPool::new(workers)?;
            let dir = run.out("runs/evaluate");
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let mut manifest = RunManifest::new("evaluate", &state.config, workers);
            let batch = sample_batch(&state, samples, &pool)?;
            let batch_path = dir.join("batch.csv");
            let bc_dim = state.config.env.bc_dim();
            let mut text: Vec<String> = (0..bc_dim).map(|i| format!("bc_{i}")).collect();
            text.push("fitness".into());
            let mut csv = text.join(",") + "\n";
            for o in &batch.offspring {
                let mut cols: Vec<String> = o.bc.iter().map(|v| v.to_string()).collect();
                cols.push(o.fitness.to_string());
                csv.push_str(&cols.join(","));
                csv.push('\n');
            }
            fs::write(&batch_path, csv).map_err(|e| Error::io(&batch_path, e))?;
            let range = range.unwrap_or_else(|| {
                let walker = crate::envs::PointWalkerSpec {
                    horizon: state.config.horizon,
                    ..crate::envs::PointWalkerSpec::new(bc_dim)
                };
                if state.config.env.uses_policy() {
                    walker.reach()
                } else {
                    5.0
                }
            });
            let heatmap = export_heatmap(&batch, bins, range)?;
            let heatmap_path = dir.join("heatmap.csv");
            heatmap.write_csv(&heatmap_path)?;
            manifest.logs.push(batch_path);
            manifest.heatmaps.push(heatmap_path);
            let path = manifest.finish(&dir)?;
            let metrics = bimodality_metrics(&batch).ok();
            write_json(
                out,
                &json!({
                    "samples": batch.len(),
                    "frac_positive": metrics.map(|m| m.frac_positive),
                    "mean_abs_bc": metrics.map(|m| m.mean_abs_bc),
                    "var_trace": metrics.map(|m| m.var_trace),
                    "out_of_range": heatmap.out_of_range,
                    "manifest": path,
                }),
            )?;
            Ok(true)
        }
        Command::Adapt {
            checkpoint,
            objective,
            k,
            n_eval,
            seed,
        } => {
            let state = load_checkpoint(&checkpoint)?;
            let objective: Direction = objective.parse()?;
            let r = adapt_best_of_k(&state, objective, k, n_eval, seed)?;
            write_json(
                out,
                &json!({
                    "objective": objective.to_string(),
                    "best_index": r.best_index,
                    "best_seed": r.best_seed,
                    "best_score": r.best_score,
                    "all_scores": r.all_scores,
                }),
            )?;
            Ok(true)
        }
        Command::SeedEs {
            checkpoint,
            objective,
            generations,
            learning_rate,
            run,
        } => {
            let state = load_checkpoint(&checkpoint)?;
            let objective: Direction = objective.parse()?;
            let workers = run.workers()?;
            let pool = WorkerPool::new(workers)?;
            let dir = run.out("runs/seed-es");
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let cmp = compare_seeding(&state, objective, generations, learning_rate, &pool)?;
            let bc_dim = state.config.env.bc_dim();
            let seeded_log = dir.join("seeded.csv");
            let fresh_log = dir.join("fresh.csv");
            write_log(&seeded_log, &cmp.seeded, bc_dim)?;
            write_log(&fresh_log, &cmp.fresh, bc_dim)?;
            let mut manifest = RunManifest::new("seed-es", &state.config, workers);
            manifest.logs = vec![seeded_log, fresh_log];
            let path = manifest.finish(&dir)?;
            write_json(
                out,
                &json!({
                    "objective": objective.to_string(),
                    "seeded_fitness": gen_stats_json(&cmp.seeded),
                    "fresh_fitness": gen_stats_json(&cmp.fresh),
                    "seeded_ahead_at_5_10_20": cmp.seeded_ahead_at(&[5, 10, 20]),
                    "manifest": path,
                }),
            )?;
            Ok(true)
        }
        Command::GmmSplit {
            config,
            mode,
            split_at,
            run,
        } => {
            let config = config.resolve()?;
            let workers = run.workers()?;
            let pool = WorkerPool::new(workers)?;
            let dir = run.out("runs/gmm-split");
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let mode = match mode {
                SplitMode::Vanilla => SpeciationMode::Vanilla,
                SplitMode::Splitting => SpeciationMode::Splitting { split_at },
            };
            let report = gmm_speciation(&config, mode, &pool)?;
            let cp = dir.join(crate::trainer::FINAL_CHECKPOINT_FILE);
            save_checkpoint(&report.final_state, &cp)?;
            let mut manifest = RunManifest::new("gmm-split", &report.final_state.config, workers);
            manifest.checkpoints.push(cp);
            let path = manifest.finish(&dir)?;
            write_json(
                out,
                &json!({
                    "component_bcs": report.component_bcs,
                    "separation": report.separation,
                    "speciated": report.speciated,
                    "manifest": path,
                }),
            )?;
            Ok(true)
        }
        Command::TheoremDemo {
            epsilon,
            grid,
            trials,
            seed,
        } => {
            let demo = flip_demo(epsilon, grid, trials, seed)?;
            write_json(
                out,
                &json!({
                    "sup_error_pos": demo.designated.sup_error_pos,
                    "sup_error_neg": demo.designated.sup_error_neg,
                    "flip_rate_pos": demo.full_iid.flip_rate_pos,
                    "flip_rate_neg": demo.full_iid.flip_rate_neg,
                    "theorem_bound": demo.full_iid.theorem_bound,
                    "trials": demo.full_iid.trials,
                    "epsilon": demo.params.epsilon,
                    "delta1": demo.params.delta1,
                    "delta2": demo.params.delta2,
                    "deviation_bound": demo.deviation_bound,
                    "passed": demo.passed(),
                }),
            )?;
            Ok(true)
        }
        Command::Gradcheck { n, seed } => {
            let reports = run_suite(n, seed)?;
            let passed = reports.iter().all(|r| r.passed);
            write_json(out, &json!({ "passed": passed, "checks": reports }))?;
            Ok(passed)
        }
    }
}

/// Parses `argv` (including the program name), runs the subcommand, and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    match run(cli, out) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            let _ = writeln!(err, "error: checks failed");
            EXIT_RUNTIME
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_exactly() {
        let c = preset("interference-maxvar").unwrap();
        assert_eq!((c.learning_rate, c.sigma, c.population_size), (0.03, 0.5, 500));
        let c = preset("interference-maxent").unwrap();
        assert_eq!((c.learning_rate, c.sigma, c.population_size, c.kernel_bandwidth), (0.1, 0.5, 500, 1.0));
        for name in ["locomotion-maxvar", "locomotion-maxent"] {
            let c = preset(name).unwrap();
            assert_eq!(
                (c.learning_rate, c.sigma, c.population_size, c.l2_coef, c.kernel_bandwidth),
                (0.01, 0.02, 10_000, 0.05, 1.0)
            );
        }
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn override_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        fs::write(&file, "sigma = 0.25\nlearning_rate = 0.2\n").unwrap();
        let c = parse_config(Some("interference-maxvar"), Some(&file), &["learning_rate=0.07".into()]).unwrap();
        assert_eq!(c.sigma, 0.25);
        assert_eq!(c.learning_rate, 0.07);
        assert_eq!(c.population_size, 500);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("population_size=0", "population_size"),
            ("sigma=\"wide\"", "sigma"),
            ("bogus=1", "bogus"),
            ("optimizer=rmsprop", "optimizer"),
        ];
        for (set, key) in cases {
            match parse_config(None, None, &[set.into()]) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{set}"),
                other => panic!("{set}: {other:?}"),
            }
        }
    }

    #[test]
    fn nested_override() {
        let c = parse_config(
            Some("pointwalker-maxvar"),
            None,
            &[
                "mlp={input_dim=3, output_dim=1, hidden=[8], activation=\"tanh\", output_activation=\"tanh\"}".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.mlp.unwrap().hidden, vec![8]);
    }

    #[test]
    fn config_round_trip() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            assert_eq!(config_from_toml(&config_to_toml(&c).unwrap()).unwrap(), c);
        }
    }

    #[test]
    fn blob_hash_matches_git() {
        // `printf 'hello\n' | git hash-object --stdin` under sha256 object format
        assert_eq!(
            content_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }
}
