//! `swarmnet` command line: generate datasets, train models, evaluate and
//! ablate them, roll predictions out, sample uncertainty, drive clone
//! swarms, and render plots.
//!
//! Precedence everywhere: flags override the `--config` file, which
//! overrides built-in defaults. `SWARMNET_SEED` fills in for a missing
//! `--seed` flag. Exit codes: 0 success, 1 I/O or malformed artifact,
//! 2 usage or configuration, 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use swarmnet::config::RunConfigFile;
use swarmnet::error::{Error, Result};
use swarmnet::evalbench::{
    audit_split, check_sweep, copy_baseline_report, evaluate, format_report_table,
    plot_trajectories, run_variant, standard_variants, sweep_cell, write_report_csv, EvalReport,
    SweepSpec,
};
use swarmnet::model::{load_checkpoint, save_checkpoint, Checkpoint, SwarmNetConfig};
use swarmnet::rollout::{
    clone_swarm, marginal_histograms, predict, sample_plus, seed_window, write_clone_csv,
    write_histograms, write_rollout_csv, PlantConfig, RolloutMode, RolloutResult,
};
use swarmnet::swarmgen::{make_dataset, read_dataset, EpisodeTensor, SimModel};
use swarmnet::trainer::{train, write_train_log};

#[derive(Parser)]
#[command(
    name = "swarmnet",
    version,
    about = "Swarm dynamics laboratory: simulate, learn, predict, imitate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate episodes and write a dataset file
    Generate(GenerateArgs),
    /// Train a model on a dataset and save a checkpoint
    Train(TrainArgs),
    /// Evaluate a checkpoint on held-out episodes
    Eval(EvalArgs),
    /// Train the encoder/context/curriculum variant ladder
    Ablate(AblateArgs),
    /// Train across training-set sizes and tabulate losses
    Sweep(SweepArgs),
    /// Deterministic long-horizon rollout from a test episode
    Rollout(RolloutArgs),
    /// Stochastic rollouts with dropout and input noise
    Sample(SampleArgs),
    /// Drive a fresh swarm closed loop with a trained model
    Clone(CloneArgs),
    /// Render an episode, optionally with a model overlay, as SVG
    Plot(PlotArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run-configuration JSON; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base RNG seed (fallback: SWARMNET_SEED env, then the config file)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory that relative output paths land in
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Simulator: boids, helbing or chaser
    #[arg(long)]
    model: String,
    /// Number of episodes to simulate
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    /// Dataset file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training dataset
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint file to write
    #[arg(long, default_value = "model.ckpt")]
    out_checkpoint: PathBuf,
    /// Per-epoch CSV log to write
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_horizon: Option<usize>,
    /// Train at the fixed horizon instead of ramping
    #[arg(long)]
    no_curriculum: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Held-out dataset
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated prediction horizons
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    train_data: PathBuf,
    #[arg(long)]
    test_data: PathBuf,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    /// Worker threads for independent variants
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "ablation.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training pool; each cell trains on its first `size` episodes
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    test_data: PathBuf,
    /// Comma-separated training-set sizes
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[arg(long)]
    seeds_per_cell: Option<usize>,
    /// Worker threads for independent cells
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct RolloutArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Episode index within the dataset
    #[arg(long, default_value_t = 0)]
    episode: usize,
    #[arg(long, default_value_t = 40)]
    horizon: usize,
    #[arg(long, default_value = "rollout.csv")]
    out: PathBuf,
    /// Also render the rollout against ground truth
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    episode: usize,
    #[arg(long, default_value_t = 40)]
    horizon: usize,
    #[arg(long)]
    samples: Option<usize>,
    /// Inference-time dropout probability
    #[arg(long)]
    dropout: Option<f32>,
    /// Gaussian input-noise scale
    #[arg(long)]
    sigma: Option<f32>,
    #[arg(long, default_value = "samples.csv")]
    out: PathBuf,
    /// Also render the sample envelope
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Also write per-agent marginal histograms to this CSV
    #[arg(long)]
    hist: Option<PathBuf>,
    /// Rollout step the histograms describe (default: the last)
    #[arg(long)]
    hist_step: Option<usize>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
}

#[derive(Args)]
struct CloneArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset providing the spawn states (episode step 0) and context
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    episode: usize,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value = "clone.csv")]
    out: PathBuf,
    /// Also render the realized trajectory against the source episode
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    episode: usize,
    /// Overlay this model's prediction
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    horizon: usize,
    #[arg(long, default_value = "plot.svg")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Rollout(a) => cmd_rollout(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Clone(a) => cmd_clone(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

/// Stable scripting contract: 1 broken files, 2 broken invocations,
/// 3 broken numerics.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Format(_) => 1,
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::ShapeMismatch { .. }
        | Error::SeriesTooShort { .. }
        | Error::HorizonTooLong { .. }
        | Error::NotScalar { .. } => 2,
        Error::PoisonedGradient { .. }
        | Error::PoisonedModel(_)
        | Error::NanLoss { .. }
        | Error::SimulationDiverged { .. }
        | Error::RolloutDiverged { .. }
        | Error::NormalizationUndefined => 3,
    }
}

// ── Shared plumbing ──────────────────────────────────────────────────

fn load_config(path: &Option<PathBuf>) -> Result<RunConfigFile> {
    match path {
        Some(p) => RunConfigFile::from_path(p),
        None => Ok(RunConfigFile::default()),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("SWARMNET_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map(Some).map_err(|_| {
            Error::Config(format!("SWARMNET_SEED must be an unsigned integer, got '{raw}'"))
        }),
        Err(_) => Ok(None),
    }
}

/// Seed precedence: flag, then environment, then the given fallback.
fn pick_seed(flag: Option<u64>, fallback: u64) -> Result<u64> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(fallback),
    })
}

fn place(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

/// Every artifact gets a `<name>.config.json` sidecar holding the fully
/// resolved run configuration (checkpoints embed it natively instead).
fn write_sidecar(artifact: &Path, cfg: &RunConfigFile) -> Result<()> {
    let mut name = artifact
        .file_name()
        .ok_or_else(|| Error::Config(format!("bad output path {artifact:?}")))?
        .to_os_string();
    name.push(".config.json");
    std::fs::write(artifact.with_file_name(name), cfg.to_json())?;
    Ok(())
}

fn pick_episode(episodes: &[EpisodeTensor], idx: usize) -> Result<&EpisodeTensor> {
    episodes.get(idx).ok_or_else(|| {
        Error::Config(format!(
            "episode index {idx} out of range, dataset has {} episodes",
            episodes.len()
        ))
    })
}

fn check_dims(model: &SwarmNetConfig, episodes: &[EpisodeTensor]) -> Result<()> {
    let d_c = episodes[0].context.dim();
    if model.context_dim != d_c {
        return Err(Error::Config(format!(
            "dimension mismatch: model expects context shape [{}], dataset provides [{}]",
            model.context_dim, d_c
        )));
    }
    let d = episodes[0].d();
    if model.state_dim != d {
        return Err(Error::Config(format!(
            "dimension mismatch: model expects state shape [{}], dataset provides [{}]",
            model.state_dim, d
        )));
    }
    Ok(())
}

/// Effective configuration around a loaded checkpoint: an explicit
/// `--config` wins, otherwise the checkpoint's embedded document; the
/// model section always comes from the checkpoint itself.
fn config_around(ckpt: &Checkpoint, flag: &Option<PathBuf>) -> Result<RunConfigFile> {
    let mut cfg = match flag {
        Some(p) => RunConfigFile::from_path(p)?,
        None => RunConfigFile::from_json(&ckpt.config_json)
            .unwrap_or_else(|_| RunConfigFile::default()),
    };
    cfg.model = ckpt.model_cfg.clone();
    Ok(cfg)
}

fn dataset_tag(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Run `f` over `items` on up to `jobs` threads, preserving order.
fn parallel_map<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker filled slot"))
        .collect()
}

// ── Commands ─────────────────────────────────────────────────────────

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let cfg = load_config(&a.common.config)?;
    let model: SimModel = a.model.parse()?;
    let seed = pick_seed(a.common.seed, 0)?;
    let out = place(&a.common.out_dir, &a.out);
    let summary = make_dataset(model, &cfg.sim, a.episodes, seed, &out)?;
    write_sidecar(&out, &cfg)?;
    println!(
        "wrote {} episodes (T={}, N={}, d_c={}) to {} ({} bytes)",
        summary.episodes,
        summary.steps,
        summary.agents,
        summary.context_dim,
        out.display(),
        summary.bytes
    );
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg = load_config(&a.common.config)?;
    if let Some(v) = a.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = a.max_horizon {
        cfg.train.max_horizon = v;
    }
    if a.no_curriculum {
        cfg.train.curriculum = false;
    }
    cfg.train.seed = pick_seed(a.common.seed, cfg.train.seed)?;
    cfg.validate()?;

    let episodes = read_dataset(&a.data)?;
    check_dims(&cfg.model, &episodes)?;

    let outcome = train(&episodes, &cfg.model, &cfg.train)?;

    let ckpt_path = place(&a.common.out_dir, &a.out_checkpoint);
    save_checkpoint(&ckpt_path, &cfg.to_json(), &cfg.model, &outcome.params)?;
    if let Some(log) = &a.log {
        let log_path = place(&a.common.out_dir, log);
        write_train_log(&log_path, &outcome.log)?;
        write_sidecar(&log_path, &cfg)?;
    }
    let seconds: f64 = outcome.log.iter().map(|r| r.seconds).sum();
    println!(
        "trained {} epochs on {} episodes in {:.1}s; best validation L_norm {:.4} at epoch {}; checkpoint {}",
        outcome.log.len(),
        episodes.len(),
        seconds,
        outcome.best_val_lnorm,
        outcome.best_epoch,
        ckpt_path.display()
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let mut cfg = config_around(&ckpt, &a.common.config)?;
    if let Some(h) = a.horizons {
        cfg.eval.horizons = h;
    }
    let episodes = read_dataset(&a.data)?;
    check_dims(&cfg.model, &episodes)?;

    let tag = dataset_tag(&a.data);
    let calibration = copy_baseline_report(
        &episodes,
        cfg.model.window_len(),
        &cfg.eval.horizons,
        &tag,
    )?;
    let report = evaluate(
        &ckpt.params,
        &cfg.model,
        &episodes,
        &cfg.eval.horizons,
        &tag,
        "model",
        cfg.train.seed,
    )?;
    let reports = vec![calibration, report];

    print!("{}", format_report_table(&reports));
    let out = place(&a.common.out_dir, &a.out);
    write_report_csv(&out, &reports)?;
    write_sidecar(&out, &cfg)?;
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_ablate(a: AblateArgs) -> Result<()> {
    let mut cfg = load_config(&a.common.config)?;
    if let Some(h) = a.horizons {
        cfg.eval.horizons = h;
    }
    cfg.train.seed = pick_seed(a.common.seed, cfg.train.seed)?;
    let train_eps = read_dataset(&a.train_data)?;
    let test_eps = read_dataset(&a.test_data)?;
    check_dims(&cfg.model, &train_eps)?;
    check_dims(&cfg.model, &test_eps)?;
    audit_split(&train_eps, &test_eps)?;

    let tag = dataset_tag(&a.test_data);
    let variants = standard_variants();
    let mut reports = vec![copy_baseline_report(
        &test_eps,
        cfg.model.window_len(),
        &cfg.eval.horizons,
        &tag,
    )?];
    reports.extend(parallel_map(a.jobs, &variants, |v| {
        run_variant(
            v,
            &train_eps,
            &test_eps,
            &cfg.model,
            &cfg.train,
            &cfg.eval.horizons,
            &tag,
        )
    }));

    print!("{}", format_report_table(&reports));
    let out = place(&a.common.out_dir, &a.out);
    write_report_csv(&out, &reports)?;
    write_sidecar(&out, &cfg)?;
    println!("ablation table written to {}", out.display());
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = load_config(&a.common.config)?;
    if let Some(v) = a.sizes {
        cfg.eval.sweep.sizes = v;
    }
    if let Some(v) = a.horizons {
        cfg.eval.sweep.horizons = v;
    }
    if let Some(v) = a.seeds_per_cell {
        cfg.eval.sweep.seeds_per_cell = v;
    }
    cfg.train.seed = pick_seed(a.common.seed, cfg.train.seed)?;
    let pool = read_dataset(&a.data)?;
    let test_eps = read_dataset(&a.test_data)?;
    check_dims(&cfg.model, &pool)?;
    check_dims(&cfg.model, &test_eps)?;
    let spec: &SweepSpec = &cfg.eval.sweep;
    check_sweep(spec, &pool, &test_eps, &cfg.model)?;

    let tag = dataset_tag(&a.test_data);
    let cells: Vec<Result<EvalReport>> = parallel_map(a.jobs, &spec.sizes, |&size| {
        sweep_cell(size, spec, &pool, &test_eps, &cfg.model, &cfg.train, &tag)
    });
    let grid = cells.into_iter().collect::<Result<Vec<_>>>()?;

    // calibration is printed but kept out of the grid CSV, whose row
    // count is pinned to sizes x horizons
    let calibration =
        copy_baseline_report(&test_eps, cfg.model.window_len(), &spec.horizons, &tag)?;
    let mut table = vec![calibration];
    table.extend(grid.iter().cloned());
    print!("{}", format_report_table(&table));

    let out = place(&a.common.out_dir, &a.out);
    write_report_csv(&out, &grid)?;
    write_sidecar(&out, &cfg)?;
    println!("sweep grid written to {}", out.display());
    Ok(())
}

fn cmd_rollout(a: RolloutArgs) -> Result<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let cfg = config_around(&ckpt, &a.common.config)?;
    let episodes = read_dataset(&a.data)?;
    check_dims(&cfg.model, &episodes)?;
    let ep = pick_episode(&episodes, a.episode)?;

    let t_w = cfg.model.window_len();
    let window = seed_window(ep, t_w)?;
    let result = predict(&ckpt.params, &cfg.model, &window, ep.context.encoded(), a.horizon)?;

    let out = place(&a.common.out_dir, &a.out);
    write_rollout_csv(&out, &result)?;
    write_sidecar(&out, &cfg)?;
    if let Some(plot) = &a.plot {
        let plot_path = place(&a.common.out_dir, plot);
        plot_trajectories(ep, Some(&result), t_w, &plot_path)?;
        write_sidecar(&plot_path, &cfg)?;
        println!("plot written to {}", plot_path.display());
    }
    println!(
        "deterministic {}-step rollout of {} agents written to {}",
        a.horizon,
        result.agents,
        out.display()
    );
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let mut cfg = config_around(&ckpt, &a.common.config)?;
    if let Some(v) = a.samples {
        cfg.noise.samples = v;
    }
    if let Some(v) = a.dropout {
        cfg.noise.dropout = v;
    }
    if let Some(v) = a.sigma {
        cfg.noise.sigma = v;
    }
    cfg.noise.seed = pick_seed(a.common.seed, cfg.noise.seed)?;
    cfg.noise.validate()?;
    if cfg.noise.is_degenerate() && cfg.noise.samples > 1 {
        eprintln!(
            "warning: dropout 0 and sigma 0 leave nothing to sample; all {} samples will be identical",
            cfg.noise.samples
        );
    }

    let episodes = read_dataset(&a.data)?;
    check_dims(&cfg.model, &episodes)?;
    let ep = pick_episode(&episodes, a.episode)?;
    let t_w = cfg.model.window_len();
    let window = seed_window(ep, t_w)?;
    let result = sample_plus(
        &ckpt.params,
        &cfg.model,
        &window,
        ep.context.encoded(),
        a.horizon,
        &cfg.noise,
    )?;

    let out = place(&a.common.out_dir, &a.out);
    write_rollout_csv(&out, &result)?;
    write_sidecar(&out, &cfg)?;
    if let Some(plot) = &a.plot {
        let plot_path = place(&a.common.out_dir, plot);
        plot_trajectories(ep, Some(&result), t_w, &plot_path)?;
        write_sidecar(&plot_path, &cfg)?;
        println!("envelope plot written to {}", plot_path.display());
    }
    if let Some(hist) = &a.hist {
        let step = a.hist_step.unwrap_or(a.horizon.saturating_sub(1));
        let set = marginal_histograms(&result, step, a.bins)?;
        let hist_path = place(&a.common.out_dir, hist);
        write_histograms(&hist_path, &set)?;
        write_sidecar(&hist_path, &cfg)?;
        println!("step-{step} histograms written to {}", hist_path.display());
    }
    let spread = result
        .mean_position_spread(a.horizon - 1)
        .unwrap_or_default();
    println!(
        "{} samples over {} steps written to {} (final mean positional spread {:.4})",
        cfg.noise.samples,
        a.horizon,
        out.display(),
        spread
    );
    Ok(())
}

fn cmd_clone(a: CloneArgs) -> Result<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let cfg = config_around(&ckpt, &a.common.config)?;
    let episodes = read_dataset(&a.data)?;
    check_dims(&cfg.model, &episodes)?;
    let ep = pick_episode(&episodes, a.episode)?;

    let initial: Vec<_> = (0..ep.n()).map(|i| ep.agent_state(0, i)).collect();
    let plant = PlantConfig::from_sim(&cfg.sim, ep.model);
    let run = clone_swarm(&ckpt.params, &cfg.model, &initial, &ep.context, a.steps, &plant)?;

    let out = place(&a.common.out_dir, &a.out);
    write_clone_csv(&out, &run)?;
    write_sidecar(&out, &cfg)?;
    if let Some(plot) = &a.plot {
        // realized trajectory, drawn like a prediction anchored at spawn
        let n = run.agents;
        let d = 4;
        let steps = run.states.shape()[0] - 1;
        let realized = RolloutResult {
            predicted: swarmnet::diffcore::Tensor::new(
                vec![steps, n, d],
                run.states.data()[n * d..].to_vec(),
            ),
            mode: RolloutMode::Deterministic,
            samples: None,
            dispersion: None,
            horizon: steps,
            agents: n,
            state_dim: d,
        };
        let plot_path = place(&a.common.out_dir, plot);
        plot_trajectories(ep, Some(&realized), 1, &plot_path)?;
        write_sidecar(&plot_path, &cfg)?;
        println!("clone trajectory plot written to {}", plot_path.display());
    }
    println!(
        "clone swarm of {} agents ran {} steps; trajectory written to {}",
        run.agents,
        a.steps,
        out.display()
    );
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let episodes = read_dataset(&a.data)?;
    let ep = pick_episode(&episodes, a.episode)?;
    let out = place(&a.common.out_dir, &a.out);

    match &a.checkpoint {
        Some(ckpt_path) => {
            let ckpt = load_checkpoint(ckpt_path)?;
            let cfg = config_around(&ckpt, &a.common.config)?;
            check_dims(&cfg.model, &episodes)?;
            let t_w = cfg.model.window_len();
            let window = seed_window(ep, t_w)?;
            let result = predict(
                &ckpt.params,
                &cfg.model,
                &window,
                ep.context.encoded(),
                a.horizon,
            )?;
            plot_trajectories(ep, Some(&result), t_w, &out)?;
            write_sidecar(&out, &cfg)?;
        }
        None => {
            let cfg = load_config(&a.common.config)?;
            plot_trajectories(ep, None, 0, &out)?;
            write_sidecar(&out, &cfg)?;
        }
    }
    println!("plot written to {}", out.display());
    Ok(())
}
