//! Flocking step: cohesion, separation, alignment, goal seeking and soft
//! obstacle repulsion, Euler-integrated with a hard speed cap.

use super::{AgentState, ContextSpec, SimConfig, Vec2};
use crate::error::{Error, Result};

/// Falloff length of the soft obstacle shell, in arena units.
const OBSTACLE_FALLOFF: f32 = 0.5;

/// Direction used whenever a repulsion direction is undefined (agent exactly
/// at an obstacle center or coincident with a neighbor).
pub(super) const FALLBACK_DIR: Vec2 = Vec2 { x: 1.0, y: 0.0 };

/// Squared-distance floor for the separation force so coincident agents get
/// a large finite push instead of an infinity.
const MIN_SEP_DIST_SQ: f32 = 1e-6;

pub fn boids_step(
    states: &[AgentState],
    ctx: &ContextSpec,
    cfg: &SimConfig,
) -> Result<Vec<AgentState>> {
    let p = &cfg.boids;
    let goal = ctx
        .goal
        .ok_or_else(|| Error::Config("flocking step requires a goal in the context".into()))?;

    let mut out = Vec::with_capacity(states.len());
    for (i, a) in states.iter().enumerate() {
        let mut centroid = Vec2::ZERO;
        let mut mean_vel = Vec2::ZERO;
        let mut neighbors = 0u32;
        let mut separation = Vec2::ZERO;
        for (j, b) in states.iter().enumerate() {
            if i == j {
                continue;
            }
            let diff = a.pos - b.pos;
            let d = diff.norm();
            if d < p.perception_radius {
                centroid += b.pos;
                mean_vel += b.vel;
                neighbors += 1;
            }
            if d < p.separation_radius {
                // magnitude 1/d: quadratic growth of the push as agents close in
                separation += diff / diff.norm_sq().max(MIN_SEP_DIST_SQ);
                if d == 0.0 {
                    separation += FALLBACK_DIR * (1.0 / MIN_SEP_DIST_SQ.sqrt());
                }
            }
        }

        let (cohesion, alignment) = if neighbors > 0 {
            let inv = 1.0 / neighbors as f32;
            (centroid * inv - a.pos, mean_vel * inv - a.vel)
        } else {
            (Vec2::ZERO, Vec2::ZERO)
        };

        let goal_force = (goal - a.pos).normalized_or(Vec2::ZERO) * p.max_speed - a.vel;

        let mut obstacle_force = Vec2::ZERO;
        for o in &ctx.obstacles {
            let diff = a.pos - o.center;
            let away = diff.normalized_or(FALLBACK_DIR);
            obstacle_force += away * ((o.radius - diff.norm()) / OBSTACLE_FALLOFF).exp();
        }

        let acc = cohesion * p.cohesion_weight
            + separation * p.separation_weight
            + alignment * p.alignment_weight
            + goal_force * p.goal_weight
            + obstacle_force * p.obstacle_weight;

        let vel = (a.vel + acc * cfg.dt).clamp_norm(p.max_speed);
        out.push(AgentState {
            pos: a.pos + vel * cfg.dt,
            vel,
        });
    }
    Ok(out)
}
