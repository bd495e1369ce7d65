use evoes::cli::{config_from_toml, config_to_toml, parse_config, preset, PRESET_NAMES};
use evoes::envs::EnvKind;
use evoes::trainer::{Algo, OptimizerKind, TrainConfig};
use evoes::Error;
use proptest::prelude::*;

fn arb_config() -> impl Strategy<Value = TrainConfig> {
    (
        prop_oneof![Just(Algo::StandardEs), Just(Algo::MaxvarEes), Just(Algo::MaxentEes)],
        prop_oneof![Just(EnvKind::Interference), Just(EnvKind::PointWalker1d), Just(EnvKind::PointWalker2d)],
        1usize..5000,
        1e-4f64..10.0,
        1e-4f64..1.0,
        0.0f64..1.0,
        0u64..(i64::MAX as u64),
        any::<bool>(),
        1usize..4,
        -20.0f64..20.0,
    )
        .prop_map(|(algo, env, half_pop, sigma, lr, l2, seed, adam, k, init)| TrainConfig {
            algo,
            env,
            population_size: 2 * half_pop,
            sigma,
            learning_rate: lr,
            l2_coef: l2,
            run_seed: seed,
            optimizer: if adam { OptimizerKind::Adam } else { OptimizerKind::Sgd },
            mixture_k: k,
            init_mean: init,
            ..TrainConfig::default()
        })
}

proptest! {
    #[test]
    fn toml_round_trip(config in arb_config()) {
        let text = config_to_toml(&config).unwrap();
        prop_assert_eq!(config_from_toml(&text).unwrap(), config);
    }
}

#[test]
fn presets_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in PRESET_NAMES {
        let c = preset(name).unwrap();
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, config_to_toml(&c).unwrap()).unwrap();
        assert_eq!(parse_config(None, Some(&path), &[]).unwrap(), c);
    }
}

#[test]
fn full_scale_presets() {
    let c = preset("interference-maxvar").unwrap();
    assert_eq!(c.learning_rate, 0.03);
    assert_eq!(c.sigma, 0.5);
    assert_eq!(c.population_size, 500);
    let c = preset("locomotion-maxent").unwrap();
    assert_eq!(c.kernel_bandwidth, 1.0);
    assert_eq!(c.l2_coef, 0.05);
}

#[test]
fn bad_file_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "sigma = -1.0\n").unwrap();
    match parse_config(None, Some(&path), &[]) {
        Err(Error::Config { key, .. }) => assert_eq!(key, "sigma"),
        other => panic!("{other:?}"),
    }
    std::fs::write(&path, "generations = \"many\"\n").unwrap();
    match parse_config(None, Some(&path), &[]) {
        Err(Error::Config { key, .. }) => assert_eq!(key, "generations"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn set_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "env = \"pointwalker2d\"\nobjective = \"+y\"\n").unwrap();
    let c = parse_config(Some("pointwalker-es"), Some(&path), &["objective=-y".into()]).unwrap();
    assert_eq!(c.env, EnvKind::PointWalker2d);
    assert_eq!(c.objective.to_string(), "-y");
    assert_eq!(c.sigma, 0.1);
}
