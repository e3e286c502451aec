//! Social-force step: relaxation toward a desired velocity plus exponential
//! repulsion from other agents and obstacles.

use super::boids::FALLBACK_DIR;
use super::{AgentState, ContextSpec, SimConfig, Vec2};

pub fn helbing_step(states: &[AgentState], ctx: &ContextSpec, cfg: &SimConfig) -> Vec<AgentState> {
    let p = &cfg.helbing;
    let mut out = Vec::with_capacity(states.len());
    for (i, a) in states.iter().enumerate() {
        let mut acc = Vec2::ZERO;

        // driving force only when there is somewhere to go
        if p.desired_speed > 0.0 {
            if let Some(goal) = ctx.goal {
                let desired = (goal - a.pos).normalized_or(Vec2::ZERO) * p.desired_speed;
                acc += (desired - a.vel) / p.relaxation_time;
            }
        }

        for (j, b) in states.iter().enumerate() {
            if i == j {
                continue;
            }
            let diff = a.pos - b.pos;
            let away = diff.normalized_or(FALLBACK_DIR);
            // exactly `repulsion_strength` when the two bodies touch
            let gap = 2.0 * p.agent_radius - diff.norm();
            acc += away * (p.repulsion_strength * (gap / p.repulsion_falloff).exp());
        }

        for o in &ctx.obstacles {
            let diff = a.pos - o.center;
            let away = diff.normalized_or(FALLBACK_DIR);
            let gap = p.agent_radius + o.radius - diff.norm();
            acc += away * (p.repulsion_strength * (gap / p.repulsion_falloff).exp());
        }

        let mut vel = a.vel + acc * cfg.dt;
        if p.desired_speed > 0.0 {
            vel = vel.clamp_norm(2.0 * p.desired_speed);
        }
        out.push(AgentState {
            pos: a.pos + vel * cfg.dt,
            vel,
        });
    }
    out
}
