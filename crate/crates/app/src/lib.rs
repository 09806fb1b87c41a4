//! File formats, worker-pool evaluation and CLI commands for the
//! `handpose-core` recognizer.
//!
//! - [`io`] – PGM depth/mask images, camera sidecars, pose and hand
//!   dimension files.
//! - [`config`] – the serializable run configuration.
//! - [`parallel`] – batch pose evaluation over a worker pool with
//!   worker-count-invariant results.
//! - [`commands`] – the `synth`, `recognize`, `eval`, `bench` and `track`
//!   operations behind the CLI.

pub mod commands;
pub mod config;
pub mod io;
pub mod parallel;
pub mod suite;

pub use commands::{cmd_bench, cmd_eval, cmd_recognize, cmd_synth, cmd_track, AppError};
pub use config::RunConfig;
pub use parallel::{evaluate_batch, ParallelEvaluator};
