//! Swarm dynamics learning toolkit.
//!
//! The crate covers the full pipeline for learning multi-agent dynamics from
//! trajectory data:
//!
//! - [`swarmgen`]: deterministic Boids / Helbing / Chaser simulators and the
//!   binary episode dataset format they produce,
//! - [`diffcore`]: a small dense-tensor reverse-mode autodiff engine with an
//!   Adam optimizer, sized for the networks built here,
//! - [`model`]: the SwarmNet predictor built from a temporal Conv1D encoder,
//!   one graph convolution over the fully connected agent graph, and a
//!   decoding MLP,
//! - [`trainer`]: supervised training with normalized MSE loss, shifted-window
//!   restructuring and a 1→10 step curriculum,
//! - [`rollout`]: long-horizon autoregressive prediction, dropout-based
//!   stochastic sampling, and closed-loop clone-swarm control,
//! - [`evalbench`]: horizon-loss evaluation, ablation tables, sample-size
//!   sweeps and SVG trajectory plots.

pub mod config;
pub mod diffcore;
pub mod error;
pub mod evalbench;
pub mod model;
pub mod rollout;
pub mod swarmgen;
pub mod trainer;

pub use error::{Error, Result};
