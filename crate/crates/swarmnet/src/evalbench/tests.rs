use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::rollout::{sample_plus, NoiseConfig};
use crate::swarmgen::{
    generate_episodes, ContextSpec, Obstacle, SimConfig, SimModel, Vec2,
};

/// Cheap model dims; window length is 3.
fn small_cfg() -> SwarmNetConfig {
    SwarmNetConfig {
        conv_layers: 2,
        kernel_size: 2,
        conv_channels: 8,
        encoded_dim: 8,
        mlp_hidden: vec![8],
        edge_dim: 6,
        ..SwarmNetConfig::default()
    }
}

fn short_episodes(count: usize, base_seed: u64) -> Vec<EpisodeTensor> {
    let cfg = SimConfig {
        steps: 20,
        agents: 3,
        ..SimConfig::default()
    };
    generate_episodes(SimModel::Chaser, &cfg, count, base_seed).unwrap()
}

fn fresh_params(cfg: &SwarmNetConfig, seed: u64) -> SwarmNetParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SwarmNetParams::init(cfg, &mut rng)
}

fn quick_run() -> TrainRunConfig {
    TrainRunConfig {
        epochs: 2,
        batch_size: 4,
        val_fraction: 0.25,
        max_horizon: 2,
        ..TrainRunConfig::default()
    }
}

// ── Evaluation arithmetic ────────────────────────────────────────────

#[test]
fn report_aggregation_matches_hand_computed_statistics() {
    let cfg = small_cfg();
    let params = fresh_params(&cfg, 3);
    let episodes = short_episodes(3, 10);
    let h = 2;
    let t_w = cfg.window_len();

    let report = evaluate(&params, &cfg, &episodes, &[h], "chaser", "raw", 0).unwrap();

    // oracle: per-episode losses from explicit scalar loops
    let mut ls = Vec::new();
    let mut lnorms = Vec::new();
    for ep in &episodes {
        let window = seed_window(ep, t_w).unwrap();
        let rollout = predict(&params, &cfg, &window, ep.context.encoded(), h).unwrap();
        let mut l = 0.0f64;
        for step in 0..h {
            let truth = ep.state_at(t_w + step);
            let pred = rollout.step(step);
            let mut sq = 0.0f64;
            for (p, t) in pred.iter().zip(truth) {
                let d = (*p - *t) as f64; // states are f32; the loss is defined on f32 diffs
                sq += d * d;
            }
            l += 0.5 * sq / truth.len() as f64;
        }
        l /= h as f64;

        let mut skip = 0.0f64;
        for tr in 0..h {
            let a = ep.state_at(t_w - 1 + tr);
            let b = ep.state_at(t_w + tr);
            let mut sq = 0.0f64;
            for (x, y) in a.iter().zip(b) {
                let d = (*x - *y) as f64;
                sq += d * d;
            }
            skip += 0.5 * sq / a.len() as f64;
        }
        skip /= h as f64;

        ls.push(l);
        lnorms.push(l / skip);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let l_mean = mean(&ls);
    let lnorm_mean = mean(&lnorms);
    let lnorm_std = (lnorms
        .iter()
        .map(|v| (v - lnorm_mean) * (v - lnorm_mean))
        .sum::<f64>()
        / lnorms.len() as f64)
        .sqrt();

    let row = report.horizon(h).unwrap();
    assert!((row.l_mean - l_mean).abs() <= 1e-9, "{} vs {l_mean}", row.l_mean);
    assert!((row.lnorm_mean - lnorm_mean).abs() <= 1e-9);
    assert!((row.lnorm_std - lnorm_std).abs() <= 1e-9);
    assert_eq!(report.episodes, 3);
}

#[test]
fn copy_baseline_is_the_unit_calibration_on_every_dataset() {
    let sim = SimConfig {
        steps: 20,
        agents: 4,
        ..SimConfig::default()
    };
    for model in [SimModel::Boids, SimModel::Helbing, SimModel::Chaser] {
        let episodes = generate_episodes(model, &sim, 3, 7).unwrap();
        let report = copy_baseline_report(&episodes, 7, &[1, 4], "any").unwrap();
        let unit = report.horizon(1).unwrap();
        assert!(
            (unit.lnorm_mean - 1.0).abs() <= 1e-6,
            "{model:?}: {}",
            unit.lnorm_mean
        );
        assert!(unit.lnorm_std <= 1e-6);
        // longer horizons drift away from the held state
        assert!(report.horizon(4).unwrap().lnorm_mean > 0.0);
    }
}

#[test]
fn evaluation_reads_only_the_seed_and_target_prefix() {
    let cfg = small_cfg();
    let params = fresh_params(&cfg, 9);
    let ep = &short_episodes(1, 33)[0];
    let h = 4;
    // the protocol touches states 0..window+h; everything after is free
    let cut = (cfg.window_len() + h) * ep.n() * ep.d();
    let mut corrupted = ep.states().to_vec();
    for v in &mut corrupted[cut..] {
        *v += 1000.0;
    }
    let twin = EpisodeTensor::new(
        ep.t(),
        ep.n(),
        corrupted,
        ep.context.clone(),
        ep.model,
        ep.seed,
    )
    .unwrap();

    let a = evaluate(&params, &cfg, std::slice::from_ref(ep), &[h], "d", "v", 0).unwrap();
    let b = evaluate(&params, &cfg, &[twin], &[h], "d", "v", 0).unwrap();
    assert_eq!(a.horizons, b.horizons);
}

#[test]
fn oversized_horizons_are_refused_up_front() {
    let cfg = small_cfg();
    let params = fresh_params(&cfg, 1);
    let episodes = short_episodes(2, 0);
    // T = 20, window 3: horizon 17 fits, 18 does not
    assert!(evaluate(&params, &cfg, &episodes, &[17], "d", "v", 0).is_ok());
    let err = evaluate(&params, &cfg, &episodes, &[18], "d", "v", 0);
    assert!(matches!(
        err,
        Err(Error::HorizonTooLong {
            requested: 18,
            max: 17
        })
    ));
    assert!(evaluate(&params, &cfg, &episodes, &[], "d", "v", 0).is_err());
    assert!(evaluate(&params, &cfg, &episodes, &[0], "d", "v", 0).is_err());
}

#[test]
fn split_audit_catches_shared_provenance() {
    let train = short_episodes(4, 0);
    let test_ok = short_episodes(2, 100);
    assert!(audit_split(&train, &test_ok).is_ok());

    let test_bad = short_episodes(1, 3); // seed 3 is in 0..4
    assert!(matches!(
        audit_split(&train, &test_bad),
        Err(Error::Config(_))
    ));

    // the same seed under a different simulator is a different episode
    let sim = SimConfig {
        steps: 20,
        agents: 3,
        ..SimConfig::default()
    };
    let other_model = generate_episodes(SimModel::Boids, &sim, 1, 3).unwrap();
    assert!(audit_split(&train, &other_model).is_ok());
}

// ── Ablations ────────────────────────────────────────────────────────

#[test]
fn ablation_grid_covers_the_five_variant_ladder() {
    let variants = standard_variants();
    let names: Vec<&str> = variants.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(
        names,
        [
            "markov",
            "markov_context",
            "conv",
            "conv_context",
            "conv_context_curriculum"
        ]
    );
    // the ladder tops out at the full model
    let full = &standard_variants()[4];
    assert_eq!(full.encoder, TemporalEncoder::Conv1d);
    assert!(full.use_context && full.curriculum);

    let base = small_cfg();
    let cfg = full.model_config(&base);
    assert_eq!(cfg.temporal_encoder, TemporalEncoder::Conv1d);
    let markov = standard_variants()[0].model_config(&base);
    assert_eq!(markov.temporal_encoder, TemporalEncoder::Markov);
    assert!(!markov.use_context);
}

#[test]
fn ablation_suite_is_deterministic_and_fully_tabulated() {
    let train_eps = short_episodes(10, 0);
    let test_eps = short_episodes(3, 200);
    let cfg = small_cfg();
    let run = quick_run();

    let first = ablation_suite(&train_eps, &test_eps, &cfg, &run, &[1, 2], "chaser").unwrap();
    assert_eq!(first.len(), 5);
    for report in &first {
        assert!(report.note.is_none(), "{}: {:?}", report.variant, report.note);
        assert_eq!(report.horizons.len(), 2);
        for row in &report.horizons {
            assert!(row.lnorm_mean.is_finite() && row.lnorm_mean >= 0.0);
            assert!(row.lnorm_std >= 0.0);
        }
    }

    let second = ablation_suite(&train_eps, &test_eps, &cfg, &run, &[1, 2], "chaser").unwrap();
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a.variant, b.variant);
        assert_eq!(a.horizons, b.horizons, "variant {} not reproducible", a.variant);
    }
}

#[test]
fn failed_variants_are_annotated_not_fatal() {
    // a single training episode cannot be split, so every variant fails
    let train_eps = short_episodes(1, 0);
    let test_eps = short_episodes(2, 50);
    let reports =
        ablation_suite(&train_eps, &test_eps, &small_cfg(), &quick_run(), &[1], "chaser").unwrap();
    assert_eq!(reports.len(), 5);
    for report in &reports {
        assert!(report.note.is_some());
        assert!(report.horizons.is_empty());
    }

    // overlapping splits are a caller bug and abort the suite instead
    let overlap = ablation_suite(
        &short_episodes(4, 0),
        &short_episodes(1, 2),
        &small_cfg(),
        &quick_run(),
        &[1],
        "chaser",
    );
    assert!(overlap.is_err());
}

// ── Sweeps ───────────────────────────────────────────────────────────

#[test]
fn sweep_spec_validation_rejects_malformed_grids() {
    assert!(SweepSpec::default().validate().is_ok());
    for bad in [
        SweepSpec {
            sizes: vec![],
            ..SweepSpec::default()
        },
        SweepSpec {
            sizes: vec![0, 5],
            ..SweepSpec::default()
        },
        SweepSpec {
            sizes: vec![5, 5],
            ..SweepSpec::default()
        },
        SweepSpec {
            sizes: vec![8, 4],
            ..SweepSpec::default()
        },
        SweepSpec {
            horizons: vec![],
            ..SweepSpec::default()
        },
        SweepSpec {
            seeds_per_cell: 0,
            ..SweepSpec::default()
        },
    ] {
        assert!(bad.validate().is_err(), "{bad:?} passed");
    }
}

#[test]
fn degenerate_sweep_reduces_to_a_single_evaluation() {
    let pool = short_episodes(6, 0);
    let test_eps = short_episodes(2, 80);
    let cfg = small_cfg();
    let run = quick_run();
    let spec = SweepSpec {
        sizes: vec![6],
        horizons: vec![2],
        seeds_per_cell: 1,
    };

    let grid = sample_size_sweep(&spec, &pool, &test_eps, &cfg, &run, "chaser").unwrap();
    assert_eq!(grid.len(), 1);

    let trained = train(&pool, &cfg, &run).unwrap();
    let direct = evaluate(&trained.params, &cfg, &test_eps, &[2], "chaser", "n6", run.seed).unwrap();
    assert_eq!(grid[0].horizons, direct.horizons);
    assert_eq!(grid[0].variant, "n6");
}

#[test]
fn sweep_grid_emits_sizes_times_horizons_rows() {
    let pool = short_episodes(8, 0);
    let test_eps = short_episodes(2, 90);
    let spec = SweepSpec {
        sizes: vec![4, 8],
        horizons: vec![1, 2],
        seeds_per_cell: 1,
    };
    let grid =
        sample_size_sweep(&spec, &pool, &test_eps, &small_cfg(), &quick_run(), "chaser").unwrap();
    assert_eq!(grid.len(), 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    write_report_csv(&path, &grid).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2);
    assert!(text.starts_with("dataset,variant,horizon,seed,L,Lnorm_mean,Lnorm_std,episodes,seconds\n"));

    // a pool smaller than the largest size is refused
    let starved = sample_size_sweep(
        &spec,
        &pool[..6],
        &test_eps,
        &small_cfg(),
        &quick_run(),
        "chaser",
    );
    assert!(matches!(starved, Err(Error::Config(_))));
}

// ── Report output ────────────────────────────────────────────────────

#[test]
fn failed_reports_surface_as_nan_rows_and_table_notes() {
    let failed = EvalReport {
        dataset: "boids".into(),
        variant: "conv".into(),
        seed: 7,
        episodes: 0,
        seconds: 1.25,
        horizons: Vec::new(),
        note: Some("numeric fault".into()),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    write_report_csv(&path, std::slice::from_ref(&failed)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "boids,conv,0,7,nan,nan,nan,0,1.250");

    let table = format_report_table(std::slice::from_ref(&failed));
    assert!(table.contains("FAILED: numeric fault"));
    assert!(table.contains("mean +/- std"));
}

// ── Trajectory plots ─────────────────────────────────────────────────

fn count(hay: &str, needle: &str) -> usize {
    hay.matches(needle).count()
}

#[test]
fn truth_only_plot_draws_every_agent_and_the_legend() {
    let sim = SimConfig {
        steps: 15,
        agents: 5,
        ..SimConfig::default()
    };
    let ep = &generate_episodes(SimModel::Boids, &sim, 1, 4).unwrap()[0];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("truth.svg");
    plot_trajectories(ep, None, 0, &path).unwrap();
    let svg = std::fs::read_to_string(&path).unwrap();

    assert_eq!(count(&svg, "class=\"truth\""), 5);
    assert_eq!(count(&svg, "class=\"pred\""), 0);
    assert_eq!(count(&svg, "class=\"legend-entry\""), 5);
    assert!(svg.starts_with("<svg "));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn prediction_overlay_draws_chains_samples_and_context() {
    let cfg = small_cfg();
    let params = fresh_params(&cfg, 6);
    let sim = SimConfig {
        steps: 20,
        agents: 4,
        ..SimConfig::default()
    };
    let base = &generate_episodes(SimModel::Chaser, &sim, 1, 5).unwrap()[0];
    // attach a hand-placed obstacle and goal so both markers render
    let ctx = ContextSpec::new(
        vec![Obstacle {
            center: Vec2::new(1.0, 1.0),
            radius: 0.5,
        }],
        Some(Vec2::new(-2.0, 3.0)),
        1,
    )
    .unwrap();
    let ep = EpisodeTensor::new(
        base.t(),
        base.n(),
        base.states().to_vec(),
        ctx,
        base.model,
        base.seed,
    )
    .unwrap();

    let window = seed_window(&ep, cfg.window_len()).unwrap();
    let det = predict(&params, &cfg, &window, ep.context.encoded(), 6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let det_path = dir.path().join("det.svg");
    plot_trajectories(&ep, Some(&det), cfg.window_len(), &det_path).unwrap();
    let svg = std::fs::read_to_string(&det_path).unwrap();
    assert_eq!(count(&svg, "class=\"pred\""), 4);
    assert_eq!(count(&svg, "class=\"sample-path\""), 0);
    assert_eq!(count(&svg, "class=\"obstacle\""), 1);
    assert_eq!(count(&svg, "class=\"goal\""), 1);

    let noise = NoiseConfig {
        dropout: 0.2,
        sigma: 0.0,
        samples: 3,
        seed: 1,
    };
    let stoch = sample_plus(&params, &cfg, &window, ep.context.encoded(), 6, &noise).unwrap();
    let stoch_path = dir.path().join("stoch.svg");
    plot_trajectories(&ep, Some(&stoch), cfg.window_len(), &stoch_path).unwrap();
    let svg = std::fs::read_to_string(&stoch_path).unwrap();
    assert_eq!(count(&svg, "class=\"sample-path\""), 3 * 4);
    assert_eq!(count(&svg, "class=\"pred\""), 4);
}

#[test]
fn plot_rejects_mismatched_swarms_and_bad_paths() {
    let cfg = small_cfg();
    let params = fresh_params(&cfg, 2);
    let ep = &short_episodes(1, 6)[0];
    let window = seed_window(ep, cfg.window_len()).unwrap();
    let det = predict(&params, &cfg, &window, ep.context.encoded(), 2).unwrap();

    let other = &generate_episodes(
        SimModel::Chaser,
        &SimConfig {
            steps: 20,
            agents: 5,
            ..SimConfig::default()
        },
        1,
        70,
    )
    .unwrap()[0];
    assert!(matches!(
        plot_trajectories(other, Some(&det), cfg.window_len(), Path::new("unused.svg")),
        Err(Error::Config(_))
    ));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no-such-dir").join("plot.svg");
    assert!(matches!(
        plot_trajectories(ep, None, 0, &missing),
        Err(Error::Io(_))
    ));
}
