//! Desk-scale experiment harness: horizon-loss tables, encoder and context
//! ablations, training-set-size sweeps, and SVG trajectory plots.
//!
//! Evaluation protocol: each test episode seeds the model with its first
//! `T_w` ground-truth states, the model unrolls `h` steps open loop, and
//! the loss is normalized by the natural skip over the same `h`
//! transitions. Reports aggregate mean and population standard deviation
//! across test episodes.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SwarmNetConfig, SwarmNetParams, TemporalEncoder};
use crate::rollout::{predict, seed_window, RolloutResult};
use crate::swarmgen::EpisodeTensor;
use crate::trainer::{half_mse, natural_skip_over, train, TrainRunConfig};

/// Losses at one prediction horizon, aggregated over test episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonLoss {
    pub horizon: usize,
    pub l_mean: f64,
    pub lnorm_mean: f64,
    pub lnorm_std: f64,
}

/// One evaluation run: a tagged row of per-horizon losses.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub variant: String,
    pub seed: u64,
    /// Evaluation samples pooled per horizon (episodes, or episodes times
    /// seeds for sweep cells).
    pub episodes: usize,
    /// Wall-clock time of the run that produced this row.
    pub seconds: f64,
    pub horizons: Vec<HorizonLoss>,
    /// Failure annotation; set when a variant could not be trained or
    /// evaluated, in which case `horizons` is empty.
    pub note: Option<String>,
}

impl EvalReport {
    pub fn horizon(&self, h: usize) -> Option<&HorizonLoss> {
        self.horizons.iter().find(|row| row.horizon == h)
    }
}

fn check_horizons(horizons: &[usize]) -> Result<usize> {
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(Error::InvalidParameter(
            "horizon list must be non-empty and positive".into(),
        ));
    }
    Ok(*horizons.iter().max().unwrap())
}

fn check_capacity(episodes: &[EpisodeTensor], t_w: usize, max_h: usize) -> Result<()> {
    if episodes.is_empty() {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    for ep in episodes {
        if ep.t() < t_w + max_h {
            return Err(Error::HorizonTooLong {
                requested: max_h,
                max: ep.t().saturating_sub(t_w),
            });
        }
    }
    Ok(())
}

/// Per-episode `(L, L_norm)` for one model at one horizon.
fn model_episode_losses(
    params: &SwarmNetParams,
    cfg: &SwarmNetConfig,
    episodes: &[EpisodeTensor],
    h: usize,
) -> Result<Vec<(f64, f64)>> {
    let t_w = cfg.window_len();
    let mut out = Vec::with_capacity(episodes.len());
    for ep in episodes {
        let window = seed_window(ep, t_w)?;
        let rollout = predict(params, cfg, &window, ep.context.encoded(), h)?;
        let mut l = 0.0;
        for step in 0..h {
            l += half_mse(rollout.step(step), ep.state_at(t_w + step));
        }
        l /= h as f64;
        let l_bar = natural_skip_over(ep.states(), ep.t(), ep.n(), ep.d(), t_w - 1, h)?;
        out.push((l, l / l_bar));
    }
    Ok(out)
}

/// Per-episode `(L, L_norm)` for the copy predictor (last seeded state
/// held for all `h` steps).
fn copy_episode_losses(episodes: &[EpisodeTensor], t_w: usize, h: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(episodes.len());
    for ep in episodes {
        let base = ep.state_at(t_w - 1);
        let mut l = 0.0;
        for step in 0..h {
            l += half_mse(base, ep.state_at(t_w + step));
        }
        l /= h as f64;
        let l_bar = natural_skip_over(ep.states(), ep.t(), ep.n(), ep.d(), t_w - 1, h)?;
        out.push((l, l / l_bar));
    }
    Ok(out)
}

/// Mean and population standard deviation over per-episode losses.
fn aggregate(
    dataset: &str,
    variant: &str,
    seed: u64,
    per_horizon: Vec<(usize, Vec<(f64, f64)>)>,
    seconds: f64,
) -> Result<EvalReport> {
    let mut horizons = Vec::with_capacity(per_horizon.len());
    let mut episodes = 0;
    for (h, losses) in per_horizon {
        let count = losses.len() as f64;
        episodes = losses.len();
        let l_mean = losses.iter().map(|(l, _)| l).sum::<f64>() / count;
        let lnorm_mean = losses.iter().map(|(_, ln)| ln).sum::<f64>() / count;
        let lnorm_var = losses
            .iter()
            .map(|(_, ln)| (ln - lnorm_mean) * (ln - lnorm_mean))
            .sum::<f64>()
            / count;
        let row = HorizonLoss {
            horizon: h,
            l_mean,
            lnorm_mean,
            lnorm_std: lnorm_var.sqrt(),
        };
        if !(row.l_mean.is_finite() && row.lnorm_mean.is_finite() && row.lnorm_std.is_finite()) {
            return Err(Error::PoisonedModel(format!(
                "non-finite evaluation loss for {variant} at horizon {h}"
            )));
        }
        horizons.push(row);
    }
    Ok(EvalReport {
        dataset: dataset.into(),
        variant: variant.into(),
        seed,
        episodes,
        seconds,
        horizons,
        note: None,
    })
}

/// Evaluate a trained model on held-out episodes at each horizon.
pub fn evaluate(
    params: &SwarmNetParams,
    cfg: &SwarmNetConfig,
    episodes: &[EpisodeTensor],
    horizons: &[usize],
    dataset: &str,
    variant: &str,
    seed: u64,
) -> Result<EvalReport> {
    let started = Instant::now();
    let max_h = check_horizons(horizons)?;
    check_capacity(episodes, cfg.window_len(), max_h)?;
    let mut per_horizon = Vec::with_capacity(horizons.len());
    for &h in horizons {
        per_horizon.push((h, model_episode_losses(params, cfg, episodes, h)?));
    }
    aggregate(dataset, variant, seed, per_horizon, started.elapsed().as_secs_f64())
}

/// Calibration row: the copy predictor evaluated under the same protocol.
/// At horizon 1 its normalized loss is exactly 1 by construction.
pub fn copy_baseline_report(
    episodes: &[EpisodeTensor],
    t_w: usize,
    horizons: &[usize],
    dataset: &str,
) -> Result<EvalReport> {
    let started = Instant::now();
    let max_h = check_horizons(horizons)?;
    check_capacity(episodes, t_w, max_h)?;
    let mut per_horizon = Vec::with_capacity(horizons.len());
    for &h in horizons {
        per_horizon.push((h, copy_episode_losses(episodes, t_w, h)?));
    }
    aggregate(dataset, "copy", 0, per_horizon, started.elapsed().as_secs_f64())
}

/// Episode provenance must not overlap between splits: every episode keeps
/// the simulator seed that produced it, and those seeds are compared.
pub fn audit_split(train: &[EpisodeTensor], test: &[EpisodeTensor]) -> Result<()> {
    use std::collections::HashSet;
    let train_seeds: HashSet<(crate::swarmgen::SimModel, u64)> =
        train.iter().map(|ep| (ep.model, ep.seed)).collect();
    for ep in test {
        if train_seeds.contains(&(ep.model, ep.seed)) {
            return Err(Error::Config(format!(
                "test episode (model {:?}, seed {}) also appears in the training split",
                ep.model, ep.seed
            )));
        }
    }
    Ok(())
}

// ── Ablations ────────────────────────────────────────────────────────

/// One model/training variant in the ablation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSpec {
    pub name: String,
    pub encoder: TemporalEncoder,
    pub use_context: bool,
    pub curriculum: bool,
}

impl VariantSpec {
    pub fn model_config(&self, base: &SwarmNetConfig) -> SwarmNetConfig {
        SwarmNetConfig {
            temporal_encoder: self.encoder,
            use_context: self.use_context,
            ..base.clone()
        }
    }

    pub fn run_config(&self, base: &TrainRunConfig) -> TrainRunConfig {
        TrainRunConfig {
            curriculum: self.curriculum,
            ..*base
        }
    }
}

/// The standard five-variant ladder, from a memoryless encoder without
/// context up to the full model.
pub fn standard_variants() -> Vec<VariantSpec> {
    let spec = |name: &str, encoder, use_context, curriculum| VariantSpec {
        name: name.into(),
        encoder,
        use_context,
        curriculum,
    };
    vec![
        spec("markov", TemporalEncoder::Markov, false, false),
        spec("markov_context", TemporalEncoder::Markov, true, false),
        spec("conv", TemporalEncoder::Conv1d, false, false),
        spec("conv_context", TemporalEncoder::Conv1d, true, false),
        spec("conv_context_curriculum", TemporalEncoder::Conv1d, true, true),
    ]
}

/// Train and evaluate one ablation variant. Failures come back as an
/// annotated report, never an error, so a suite can keep going.
pub fn run_variant(
    variant: &VariantSpec,
    train_eps: &[EpisodeTensor],
    test_eps: &[EpisodeTensor],
    base_cfg: &SwarmNetConfig,
    base_run: &TrainRunConfig,
    horizons: &[usize],
    dataset: &str,
) -> EvalReport {
    let started = Instant::now();
    let cfg = variant.model_config(base_cfg);
    let run = variant.run_config(base_run);
    let outcome = train(train_eps, &cfg, &run).and_then(|trained| {
        evaluate(
            &trained.params,
            &cfg,
            test_eps,
            horizons,
            dataset,
            &variant.name,
            run.seed,
        )
    });
    match outcome {
        Ok(mut report) => {
            report.seconds = started.elapsed().as_secs_f64();
            report
        }
        Err(err) => EvalReport {
            dataset: dataset.into(),
            variant: variant.name.clone(),
            seed: base_run.seed,
            episodes: 0,
            seconds: started.elapsed().as_secs_f64(),
            horizons: Vec::new(),
            note: Some(err.to_string()),
        },
    }
}

/// Train and evaluate every variant under identical seeds and splits.
/// A variant that fails to train yields an annotated report instead of
/// aborting the suite.
pub fn ablation_suite(
    train_eps: &[EpisodeTensor],
    test_eps: &[EpisodeTensor],
    base_cfg: &SwarmNetConfig,
    base_run: &TrainRunConfig,
    horizons: &[usize],
    dataset: &str,
) -> Result<Vec<EvalReport>> {
    audit_split(train_eps, test_eps)?;
    check_horizons(horizons)?;
    Ok(standard_variants()
        .iter()
        .map(|v| run_variant(v, train_eps, test_eps, base_cfg, base_run, horizons, dataset))
        .collect())
}

// ── Training-set-size sweep ──────────────────────────────────────────

/// Grid for the dataset-size study: one model per size, evaluated at
/// every horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub sizes: Vec<usize>,
    pub horizons: Vec<usize>,
    /// Trainings pooled per cell; evaluation stats pool episodes across
    /// these seeds.
    pub seeds_per_cell: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            sizes: vec![200, 500],
            horizons: vec![5, 40],
            seeds_per_cell: 1,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes[0] == 0 {
            return Err(Error::InvalidParameter(
                "sweep sizes must be non-empty and positive".into(),
            ));
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "sweep sizes must be strictly ascending".into(),
            ));
        }
        check_horizons(&self.horizons)?;
        if self.seeds_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "sweep needs at least one seed per cell".into(),
            ));
        }
        Ok(())
    }
}

/// One sweep cell: train on the first `size` pool episodes (once per
/// cell seed) and evaluate on the shared test set, pooling episode
/// losses across seeds.
pub fn sweep_cell(
    size: usize,
    spec: &SweepSpec,
    pool: &[EpisodeTensor],
    test: &[EpisodeTensor],
    cfg: &SwarmNetConfig,
    run: &TrainRunConfig,
    dataset: &str,
) -> Result<EvalReport> {
    let started = Instant::now();
    let mut pooled: Vec<(usize, Vec<(f64, f64)>)> =
        spec.horizons.iter().map(|&h| (h, Vec::new())).collect();
    for s in 0..spec.seeds_per_cell {
        let cell_run = TrainRunConfig {
            seed: run.seed + s as u64,
            ..*run
        };
        let trained = train(&pool[..size], cfg, &cell_run)?;
        for (h, losses) in &mut pooled {
            losses.extend(model_episode_losses(&trained.params, cfg, test, *h)?);
        }
    }
    let mut report = aggregate(
        dataset,
        &format!("n{size}"),
        run.seed,
        pooled,
        started.elapsed().as_secs_f64(),
    )?;
    report.seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Shared preconditions for a sweep grid.
pub fn check_sweep(
    spec: &SweepSpec,
    pool: &[EpisodeTensor],
    test: &[EpisodeTensor],
    cfg: &SwarmNetConfig,
) -> Result<()> {
    spec.validate()?;
    audit_split(pool, test)?;
    let largest = *spec.sizes.last().unwrap();
    if pool.len() < largest {
        return Err(Error::Config(format!(
            "training pool has {} episodes, sweep asks for {largest}",
            pool.len()
        )));
    }
    let max_h = *spec.horizons.iter().max().unwrap();
    check_capacity(test, cfg.window_len(), max_h)
}

/// Train one model per training-set size (per seed) and evaluate each on
/// the shared test set. Returns one report per size; each report carries
/// `spec.horizons.len()` rows, so the grid CSV has
/// `sizes.len() * horizons.len()` data lines.
pub fn sample_size_sweep(
    spec: &SweepSpec,
    pool: &[EpisodeTensor],
    test: &[EpisodeTensor],
    cfg: &SwarmNetConfig,
    run: &TrainRunConfig,
    dataset: &str,
) -> Result<Vec<EvalReport>> {
    check_sweep(spec, pool, test, cfg)?;
    spec.sizes
        .iter()
        .map(|&size| sweep_cell(size, spec, pool, test, cfg, run, dataset))
        .collect()
}

// ── Report output ────────────────────────────────────────────────────

/// Report CSV: `dataset,variant,horizon,seed,L,Lnorm_mean,Lnorm_std,episodes,seconds`.
/// Failed (annotated) reports emit one row with `nan` losses.
pub fn write_report_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut out = String::from("dataset,variant,horizon,seed,L,Lnorm_mean,Lnorm_std,episodes,seconds\n");
    for r in reports {
        if r.horizons.is_empty() {
            out.push_str(&format!(
                "{},{},0,{},nan,nan,nan,0,{:.3}\n",
                r.dataset, r.variant, r.seed, r.seconds
            ));
            continue;
        }
        for row in &r.horizons {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{:.3}\n",
                r.dataset,
                r.variant,
                row.horizon,
                r.seed,
                row.l_mean,
                row.lnorm_mean,
                row.lnorm_std,
                r.episodes,
                r.seconds
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Human-readable table; the ± is a population standard deviation across
/// evaluation episodes.
pub fn format_report_table(reports: &[EvalReport]) -> String {
    let mut horizons: Vec<usize> = reports
        .iter()
        .flat_map(|r| r.horizons.iter().map(|h| h.horizon))
        .collect();
    horizons.sort_unstable();
    horizons.dedup();

    let mut out = String::from("L_norm, mean +/- std across evaluation episodes\n");
    out.push_str(&format!("{:<28}", "variant"));
    for h in &horizons {
        out.push_str(&format!("{:>24}", format!("h={h}")));
    }
    out.push('\n');
    for r in reports {
        out.push_str(&format!("{:<28}", format!("{}/{}", r.dataset, r.variant)));
        if let Some(note) = &r.note {
            out.push_str(&format!("  FAILED: {note}"));
        } else {
            for h in &horizons {
                match r.horizon(*h) {
                    Some(row) => out.push_str(&format!(
                        "{:>24}",
                        format!("{:.4} +/- {:.4}", row.lnorm_mean, row.lnorm_std)
                    )),
                    None => out.push_str(&format!("{:>24}", "-")),
                }
            }
        }
        out.push('\n');
    }
    out
}

// ── Trajectory plots ─────────────────────────────────────────────────

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Frame {
    min_x: f32,
    min_y: f32,
    scale: f32,
    size: f32,
    pad: f32,
}

impl Frame {
    fn fit(min_x: f32, max_x: f32, min_y: f32, max_y: f32) -> Frame {
        let size = 640.0f32;
        let pad = 48.0f32;
        let span = (max_x - min_x).max(max_y - min_y).max(1e-3);
        Frame {
            min_x,
            min_y,
            scale: (size - 2.0 * pad) / span,
            size,
            pad,
        }
    }

    fn x(&self, wx: f32) -> f32 {
        self.pad + (wx - self.min_x) * self.scale
    }

    // svg y grows downward
    fn y(&self, wy: f32) -> f32 {
        self.size - self.pad - (wy - self.min_y) * self.scale
    }
}

fn polyline_points(frame: &Frame, path: &[(f32, f32)]) -> String {
    let mut out = String::new();
    for (wx, wy) in path {
        out.push_str(&format!("{:.2},{:.2} ", frame.x(*wx), frame.y(*wy)));
    }
    out.trim_end().to_string()
}

/// Agent `a`'s positions over the whole episode.
fn truth_path(ep: &EpisodeTensor, a: usize) -> Vec<(f32, f32)> {
    (0..ep.t())
        .map(|t| {
            let s = ep.agent_state(t, a);
            (s.pos.x, s.pos.y)
        })
        .collect()
}

fn predicted_path(result: &RolloutResult, sample: Option<usize>, a: usize) -> Vec<(f32, f32)> {
    (0..result.horizon)
        .map(|t| {
            let block = match sample {
                Some(s) => result.sample_step(s, t),
                None => result.step(t),
            };
            (block[a * result.state_dim], block[a * result.state_dim + 1])
        })
        .collect()
}

/// Render an episode and (optionally) a rollout to a self-contained SVG.
///
/// Ground truth is dashed gray; predictions are per-agent colored chains
/// with arrowheads, starting at ground-truth step `start` (the first
/// predicted state's index, normally the window length). Stochastic
/// results overlay every sample as a faint path. Obstacles are outlined
/// circles, the goal is a cross marker.
pub fn plot_trajectories(
    ep: &EpisodeTensor,
    prediction: Option<&RolloutResult>,
    start: usize,
    path: &Path,
) -> Result<()> {
    if let Some(p) = prediction {
        if p.agents != ep.n() {
            return Err(Error::Config(format!(
                "prediction covers {} agents, episode has {}",
                p.agents,
                ep.n()
            )));
        }
    }

    // world bounds over everything drawn
    let mut min_x = f32::INFINITY;
    let mut max_x = f32::NEG_INFINITY;
    let mut min_y = f32::INFINITY;
    let mut max_y = f32::NEG_INFINITY;
    let mut cover = |x: f32, y: f32| {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    };
    for a in 0..ep.n() {
        for (x, y) in truth_path(ep, a) {
            cover(x, y);
        }
    }
    if let Some(p) = prediction {
        for a in 0..p.agents {
            for (x, y) in predicted_path(p, None, a) {
                cover(x, y);
            }
        }
    }
    for o in &ep.context.obstacles {
        cover(o.center.x - o.radius, o.center.y - o.radius);
        cover(o.center.x + o.radius, o.center.y + o.radius);
    }
    if let Some(g) = ep.context.goal {
        cover(g.x, g.y);
    }
    let frame = Frame::fit(min_x, max_x, min_y, max_y);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n",
        frame.size
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // arrowhead per palette color
    svg.push_str("<defs>\n");
    for (i, color) in PALETTE.iter().enumerate() {
        svg.push_str(&format!(
            "<marker id=\"arrow{i}\" viewBox=\"0 0 6 6\" refX=\"5\" refY=\"3\" \
             markerWidth=\"5\" markerHeight=\"5\" orient=\"auto\">\
             <path d=\"M0,0 L6,3 L0,6 z\" fill=\"{color}\"/></marker>\n"
        ));
    }
    svg.push_str("</defs>\n");

    for o in &ep.context.obstacles {
        svg.push_str(&format!(
            "<circle class=\"obstacle\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" \
             fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n",
            frame.x(o.center.x),
            frame.y(o.center.y),
            o.radius * frame.scale
        ));
    }
    if let Some(g) = ep.context.goal {
        let (gx, gy) = (frame.x(g.x), frame.y(g.y));
        svg.push_str(&format!(
            "<path class=\"goal\" d=\"M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}\" \
             stroke=\"black\" stroke-width=\"2\"/>\n",
            gx - 6.0,
            gy - 6.0,
            gx + 6.0,
            gy + 6.0,
            gx - 6.0,
            gy + 6.0,
            gx + 6.0,
            gy - 6.0
        ));
    }

    for a in 0..ep.n() {
        svg.push_str(&format!(
            "<polyline class=\"truth\" points=\"{}\" fill=\"none\" stroke=\"#999999\" \
             stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n",
            polyline_points(&frame, &truth_path(ep, a))
        ));
    }

    if let Some(p) = prediction {
        if p.samples.is_some() {
            for s in 0..p.num_samples() {
                for a in 0..p.agents {
                    svg.push_str(&format!(
                        "<polyline class=\"sample-path\" points=\"{}\" fill=\"none\" \
                         stroke=\"{}\" stroke-width=\"1\" opacity=\"0.18\"/>\n",
                        polyline_points(&frame, &predicted_path(p, Some(s), a)),
                        PALETTE[a % PALETTE.len()]
                    ));
                }
            }
        }
        for a in 0..p.agents {
            // anchor the chain at the last seeded truth state so it reads
            // as a continuation
            let mut chain = Vec::new();
            if start >= 1 && start <= ep.t() {
                let s = ep.agent_state(start - 1, a);
                chain.push((s.pos.x, s.pos.y));
            }
            chain.extend(predicted_path(p, None, a));
            let color_idx = a % PALETTE.len();
            svg.push_str(&format!(
                "<polyline class=\"pred\" points=\"{}\" fill=\"none\" stroke=\"{}\" \
                 stroke-width=\"2\" marker-mid=\"url(#arrow{})\" marker-end=\"url(#arrow{})\"/>\n",
                polyline_points(&frame, &chain),
                PALETTE[color_idx],
                color_idx,
                color_idx
            ));
        }
    }

    for a in 0..ep.n() {
        let y = 18.0 + 18.0 * a as f32;
        svg.push_str(&format!(
            "<g class=\"legend-entry\"><rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" \
             fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" \
             font-family=\"sans-serif\">agent {}</text></g>\n",
            frame.size - 110.0,
            y,
            PALETTE[a % PALETTE.len()],
            frame.size - 92.0,
            y + 10.0,
            a
        ));
    }

    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests;
