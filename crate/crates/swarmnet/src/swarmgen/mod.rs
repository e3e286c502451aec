//! Ground-truth swarm simulators and the episode datasets they produce.
//!
//! Three deterministic models generate training data: a flocking model
//! (cohesion / separation / alignment plus goal seeking and soft obstacle
//! repulsion), a social-force model driven by exponential repulsion, and a
//! cyclic-pursuit model started on a circle. An episode records `T` states of
//! `N` agents with `D = 4` channels `(px, py, vx, vy)` alongside a
//! fixed-length context vector encoding obstacles and goal.
//!
//! Everything here is seeded: the same `(model, config, seed)` triple
//! reproduces an episode bit-exactly.

mod boids;
mod chaser;
mod dataset;
mod helbing;

pub use boids::boids_step;
pub use chaser::chaser_step;
pub use dataset::{read_dataset, write_dataset};
pub use helbing::helbing_step;

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channels per agent state: px, py, vx, vy.
pub const STATE_DIM: usize = 4;

// ── Geometry ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f32,
    pub y: f32,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f32, y: f32) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f32 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm_sq(self) -> f32 {
        self.dot(self)
    }

    pub fn norm(self) -> f32 {
        self.norm_sq().sqrt()
    }

    /// Unit vector, or `fallback` when the length is too small to normalize.
    pub fn normalized_or(self, fallback: Vec2) -> Vec2 {
        let n = self.norm();
        if n > 1e-12 {
            self / n
        } else {
            fallback
        }
    }

    /// Rescale to at most `max` length.
    pub fn clamp_norm(self, max: f32) -> Vec2 {
        let n = self.norm();
        if n > max {
            self * (max / n)
        } else {
            self
        }
    }

    pub fn rotated(self, angle: f32) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2 {
            x: self.x * c - self.y * s,
            y: self.x * s + self.y * c,
        }
    }

    /// Signed angle that rotates `self` onto `other`, in `(-pi, pi]`.
    pub fn angle_to(self, other: Vec2) -> f32 {
        let cross = self.x * other.y - self.y * other.x;
        cross.atan2(self.dot(other))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        *self = *self + o;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f32> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f32) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f32> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f32) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

// ── Domain types ─────────────────────────────────────────────────────

/// Position and velocity of one agent. Velocity is in arena units per unit
/// time; positions advance by `velocity * dt` each step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentState {
    pub pos: Vec2,
    pub vel: Vec2,
}

impl AgentState {
    pub fn new(px: f32, py: f32, vx: f32, vy: f32) -> Self {
        AgentState {
            pos: Vec2::new(px, py),
            vel: Vec2::new(vx, vy),
        }
    }

    pub fn channels(&self) -> [f32; STATE_DIM] {
        [self.pos.x, self.pos.y, self.vel.x, self.vel.y]
    }

    pub fn from_channels(c: &[f32]) -> Self {
        AgentState::new(c[0], c[1], c[2], c[3])
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f32,
}

/// Static per-episode environment: obstacles and an optional goal, plus the
/// fixed-length encoding fed to the network.
///
/// The encoding is `3 * max_obstacles + 2` floats: `(cx, cy, radius)` per
/// obstacle slot, then `(gx, gy)`; absent slots are zero-filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSpec {
    pub obstacles: Vec<Obstacle>,
    pub goal: Option<Vec2>,
    encoded: Vec<f32>,
}

impl ContextSpec {
    pub fn new(obstacles: Vec<Obstacle>, goal: Option<Vec2>, max_obstacles: usize) -> Result<Self> {
        if obstacles.len() > max_obstacles {
            return Err(Error::Config(format!(
                "{} obstacles exceed the {} context slots",
                obstacles.len(),
                max_obstacles
            )));
        }
        if let Some(o) = obstacles.iter().find(|o| !(o.radius > 0.0)) {
            return Err(Error::Config(format!(
                "obstacle radius must be positive, got {}",
                o.radius
            )));
        }
        let mut encoded = vec![0.0f32; 3 * max_obstacles + 2];
        for (k, o) in obstacles.iter().enumerate() {
            encoded[3 * k] = o.center.x;
            encoded[3 * k + 1] = o.center.y;
            encoded[3 * k + 2] = o.radius;
        }
        if let Some(g) = goal {
            encoded[3 * max_obstacles] = g.x;
            encoded[3 * max_obstacles + 1] = g.y;
        }
        Ok(ContextSpec {
            obstacles,
            goal,
            encoded,
        })
    }

    pub fn empty(max_obstacles: usize) -> Self {
        ContextSpec::new(Vec::new(), None, max_obstacles).expect("empty context is valid")
    }

    /// Rebuild the structured view from a stored encoding. Obstacle slots
    /// with zero radius are treated as empty; whether the goal slot is live
    /// cannot be recovered from the floats alone, so the caller passes it.
    pub fn from_encoded(encoded: Vec<f32>, has_goal: bool) -> Result<Self> {
        if encoded.len() < 2 || (encoded.len() - 2) % 3 != 0 {
            return Err(Error::Format(format!(
                "context encoding length {} is not 3k + 2",
                encoded.len()
            )));
        }
        let slots = (encoded.len() - 2) / 3;
        let mut obstacles = Vec::new();
        for k in 0..slots {
            let radius = encoded[3 * k + 2];
            if radius < 0.0 {
                return Err(Error::Format(format!(
                    "negative obstacle radius {radius} in context encoding"
                )));
            }
            if radius > 0.0 {
                obstacles.push(Obstacle {
                    center: Vec2::new(encoded[3 * k], encoded[3 * k + 1]),
                    radius,
                });
            }
        }
        let goal = has_goal.then(|| Vec2::new(encoded[3 * slots], encoded[3 * slots + 1]));
        Ok(ContextSpec {
            obstacles,
            goal,
            encoded,
        })
    }

    pub fn encoded(&self) -> &[f32] {
        &self.encoded
    }

    pub fn dim(&self) -> usize {
        self.encoded.len()
    }
}

/// Which ground-truth model generated an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimModel {
    Boids,
    Helbing,
    Chaser,
}

impl SimModel {
    pub fn tag(self) -> u8 {
        match self {
            SimModel::Boids => 0,
            SimModel::Helbing => 1,
            SimModel::Chaser => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(SimModel::Boids),
            1 => Ok(SimModel::Helbing),
            2 => Ok(SimModel::Chaser),
            other => Err(Error::Format(format!("unknown model tag {other}"))),
        }
    }

    /// Chaser episodes carry no goal; the other models always do.
    pub fn has_goal(self) -> bool {
        !matches!(self, SimModel::Chaser)
    }
}

impl std::fmt::Display for SimModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimModel::Boids => "boids",
            SimModel::Helbing => "helbing",
            SimModel::Chaser => "chaser",
        })
    }
}

impl std::str::FromStr for SimModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "boids" => Ok(SimModel::Boids),
            "helbing" => Ok(SimModel::Helbing),
            "chaser" => Ok(SimModel::Chaser),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected boids, helbing or chaser)"
            ))),
        }
    }
}

/// One recorded episode: `[T, N, 4]` states (time outer, agent middle,
/// channel inner) plus static context.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTensor {
    t: usize,
    n: usize,
    states: Vec<f32>,
    pub context: ContextSpec,
    pub model: SimModel,
    pub seed: u64,
}

impl EpisodeTensor {
    /// Minimum episode length; shorter series cannot cover the default
    /// temporal window of 7 plus one prediction target.
    pub const MIN_STEPS: usize = 8;

    pub fn new(
        t: usize,
        n: usize,
        states: Vec<f32>,
        context: ContextSpec,
        model: SimModel,
        seed: u64,
    ) -> Result<Self> {
        if t < Self::MIN_STEPS {
            return Err(Error::Config(format!(
                "episode length {t} is below the minimum of {}",
                Self::MIN_STEPS
            )));
        }
        if n == 0 {
            return Err(Error::Config("episode needs at least one agent".into()));
        }
        if states.len() != t * n * STATE_DIM {
            return Err(Error::Config(format!(
                "state buffer length {} does not match T={t}, N={n}, D={STATE_DIM}",
                states.len()
            )));
        }
        Ok(EpisodeTensor {
            t,
            n,
            states,
            context,
            model,
            seed,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        STATE_DIM
    }

    pub fn states(&self) -> &[f32] {
        &self.states
    }

    /// The `[N, 4]` block at time `t`.
    pub fn state_at(&self, t: usize) -> &[f32] {
        let w = self.n * STATE_DIM;
        &self.states[t * w..(t + 1) * w]
    }

    pub fn agent_state(&self, t: usize, agent: usize) -> AgentState {
        let base = (t * self.n + agent) * STATE_DIM;
        AgentState::from_channels(&self.states[base..base + STATE_DIM])
    }

    pub fn context_dim(&self) -> usize {
        self.context.dim()
    }
}

// ── Configuration ────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoidsParams {
    pub perception_radius: f32,
    pub separation_radius: f32,
    pub cohesion_weight: f32,
    pub separation_weight: f32,
    pub alignment_weight: f32,
    pub goal_weight: f32,
    pub obstacle_weight: f32,
    pub max_speed: f32,
}

impl Default for BoidsParams {
    fn default() -> Self {
        BoidsParams {
            perception_radius: 3.0,
            separation_radius: 1.0,
            cohesion_weight: 0.5,
            separation_weight: 2.0,
            alignment_weight: 0.3,
            goal_weight: 1.0,
            obstacle_weight: 4.0,
            max_speed: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HelbingParams {
    /// Preferred speed toward the goal; zero disables the driving force.
    pub desired_speed: f32,
    pub relaxation_time: f32,
    pub repulsion_strength: f32,
    pub repulsion_falloff: f32,
    pub agent_radius: f32,
}

impl Default for HelbingParams {
    fn default() -> Self {
        HelbingParams {
            desired_speed: 1.5,
            relaxation_time: 0.5,
            repulsion_strength: 2.0,
            repulsion_falloff: 0.5,
            agent_radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaserParams {
    pub speed: f32,
    /// Maximum heading change in radians per unit time.
    pub turn_rate: f32,
    pub spawn_radius: f32,
}

impl Default for ChaserParams {
    fn default() -> Self {
        ChaserParams {
            speed: 1.5,
            turn_rate: 2.0,
            spawn_radius: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f32,
    /// Recorded states per episode, including the initial one.
    pub steps: usize,
    pub agents: usize,
    pub arena_half_width: f32,
    pub max_obstacles: usize,
    pub boids: BoidsParams,
    pub helbing: HelbingParams,
    pub chaser: ChaserParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            steps: 50,
            agents: 5,
            arena_half_width: 10.0,
            max_obstacles: 1,
            boids: BoidsParams::default(),
            helbing: HelbingParams::default(),
            chaser: ChaserParams::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps < EpisodeTensor::MIN_STEPS {
            return Err(Error::Config(format!(
                "steps must be at least {}, got {}",
                EpisodeTensor::MIN_STEPS,
                self.steps
            )));
        }
        if self.agents == 0 {
            return Err(Error::Config("agent count must be at least 1".into()));
        }
        if !(self.arena_half_width > 0.0) {
            return Err(Error::Config("arena half-width must be positive".into()));
        }
        if !(self.helbing.relaxation_time > 0.0) || !(self.helbing.repulsion_falloff > 0.0) {
            return Err(Error::Config(
                "relaxation time and repulsion falloff must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Length of the encoded context vector.
    pub fn context_dim(&self) -> usize {
        3 * self.max_obstacles + 2
    }
}

// ── Episode generation ───────────────────────────────────────────────

/// Advance all agents one step under the given model.
pub fn step_model(
    model: SimModel,
    states: &[AgentState],
    ctx: &ContextSpec,
    cfg: &SimConfig,
) -> Result<Vec<AgentState>> {
    match model {
        SimModel::Boids => boids_step(states, ctx, cfg),
        SimModel::Helbing => Ok(helbing_step(states, ctx, cfg)),
        SimModel::Chaser => chaser_step(states, cfg),
    }
}

/// Roll a fixed context and initial condition forward for `cfg.steps` states
/// (the initial one included), recording every step.
pub fn run_episode(
    model: SimModel,
    cfg: &SimConfig,
    ctx: &ContextSpec,
    initial: Vec<AgentState>,
    seed: u64,
) -> Result<EpisodeTensor> {
    let n = initial.len();
    let mut states = Vec::with_capacity(cfg.steps * n * STATE_DIM);
    let mut current = initial;
    record(&mut states, &current);
    for step in 1..cfg.steps {
        current = step_model(model, &current, ctx, cfg)?;
        if current.iter().any(|a| !a.is_finite()) {
            return Err(Error::SimulationDiverged { step });
        }
        record(&mut states, &current);
    }
    EpisodeTensor::new(cfg.steps, n, states, ctx.clone(), model, seed)
}

fn record(buf: &mut Vec<f32>, states: &[AgentState]) {
    for a in states {
        buf.extend_from_slice(&a.channels());
    }
}

/// Generate one seeded episode. The context is drawn before the initial
/// states (obstacles before goal) so the stream layout is stable.
pub fn simulate(model: SimModel, cfg: &SimConfig, seed: u64) -> Result<EpisodeTensor> {
    cfg.validate()?;
    if model == SimModel::Chaser && cfg.agents < 2 {
        return Err(Error::Config(
            "cyclic pursuit needs at least two agents".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = draw_context(model, cfg, &mut rng)?;
    let initial = draw_initial(model, cfg, &mut rng);
    run_episode(model, cfg, &ctx, initial, seed)
}

/// Obstacles sit near the arena center, the goal on the far right; both
/// scale with the arena so non-default sizes keep a sane geometry.
fn draw_context(model: SimModel, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<ContextSpec> {
    if !model.has_goal() {
        return Ok(ContextSpec::empty(cfg.max_obstacles));
    }
    let s = cfg.arena_half_width;
    let mut obstacles = Vec::with_capacity(cfg.max_obstacles);
    for _ in 0..cfg.max_obstacles {
        let center = Vec2::new(rng.gen_range(-0.2 * s..0.2 * s), rng.gen_range(-0.2 * s..0.2 * s));
        let radius = rng.gen_range(0.08 * s..0.15 * s);
        obstacles.push(Obstacle { center, radius });
    }
    let goal = Vec2::new(rng.gen_range(0.6 * s..0.8 * s), rng.gen_range(-0.2 * s..0.2 * s));
    ContextSpec::new(obstacles, Some(goal), cfg.max_obstacles)
}

fn draw_initial(model: SimModel, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<AgentState> {
    match model {
        // spawn box on the left, opposite the goal
        SimModel::Boids | SimModel::Helbing => {
            let s = cfg.arena_half_width;
            let center = Vec2::new(-0.7 * s, 0.0);
            (0..cfg.agents)
                .map(|_| {
                    let pos = center
                        + Vec2::new(
                            rng.gen_range(-0.2 * s..0.2 * s),
                            rng.gen_range(-0.2 * s..0.2 * s),
                        );
                    let vel = Vec2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
                    AgentState { pos, vel }
                })
                .collect()
        }
        // evenly spaced on a circle of seeded radius and phase, heading
        // counterclockwise so each agent starts behind its pursuit target
        SimModel::Chaser => {
            let radius = cfg.chaser.spawn_radius * rng.gen_range(0.8..1.2);
            let phase = rng.gen_range(0.0..std::f32::consts::TAU);
            (0..cfg.agents)
                .map(|i| {
                    let theta =
                        phase + std::f32::consts::TAU * i as f32 / cfg.agents as f32;
                    let pos = Vec2::new(radius * theta.cos(), radius * theta.sin());
                    let tangent = Vec2::new(-theta.sin(), theta.cos());
                    AgentState {
                        pos,
                        vel: tangent * cfg.chaser.speed,
                    }
                })
                .collect()
        }
    }
}

/// Episodes for seeds `base_seed .. base_seed + count`.
pub fn generate_episodes(
    model: SimModel,
    cfg: &SimConfig,
    count: usize,
    base_seed: u64,
) -> Result<Vec<EpisodeTensor>> {
    (0..count)
        .map(|i| simulate(model, cfg, base_seed.wrapping_add(i as u64)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetSummary {
    pub episodes: usize,
    pub steps: usize,
    pub agents: usize,
    pub context_dim: usize,
    pub bytes: u64,
}

/// Generate `count` episodes and write them as one dataset file.
pub fn make_dataset(
    model: SimModel,
    cfg: &SimConfig,
    count: usize,
    base_seed: u64,
    path: &Path,
) -> Result<DatasetSummary> {
    if count == 0 {
        return Err(Error::Config("dataset needs at least one episode".into()));
    }
    let episodes = generate_episodes(model, cfg, count, base_seed)?;
    let bytes = write_dataset(path, &episodes)?;
    Ok(DatasetSummary {
        episodes: count,
        steps: cfg.steps,
        agents: cfg.agents,
        context_dim: cfg.context_dim(),
        bytes,
    })
}
