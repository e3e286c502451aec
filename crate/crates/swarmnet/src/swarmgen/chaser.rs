//! Cyclic-pursuit step: agent `i` chases agent `(i + 1) mod N` at constant
//! speed with a bounded turn rate.

use super::boids::FALLBACK_DIR;
use super::{AgentState, SimConfig};
use crate::error::{Error, Result};

pub fn chaser_step(states: &[AgentState], cfg: &SimConfig) -> Result<Vec<AgentState>> {
    let n = states.len();
    if n < 2 {
        return Err(Error::Config(
            "cyclic pursuit needs at least two agents".into(),
        ));
    }
    let p = &cfg.chaser;
    let max_turn = p.turn_rate * cfg.dt;

    let mut out = Vec::with_capacity(n);
    for (i, a) in states.iter().enumerate() {
        let target = states[(i + 1) % n].pos;
        let desired = (target - a.pos).normalized_or(FALLBACK_DIR);
        // a stationary agent has no heading; let it set off straight at the target
        let heading = a.vel.normalized_or(desired);
        let turn = heading.angle_to(desired).clamp(-max_turn, max_turn);
        let vel = heading.rotated(turn) * p.speed;
        out.push(AgentState {
            pos: a.pos + vel * cfg.dt,
            vel,
        });
    }
    Ok(out)
}
