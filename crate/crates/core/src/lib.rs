//! Core algorithms for model-based 26-DoF hand pose recovery from a
//! depth + silhouette observation.
//!
//! The pipeline stages are:
//!
//! 1. **hand_model** – the 26-parameter pose, its legal ranges and the
//!    forward-kinematic construction of 38 analytic primitives.
//! 2. **camera** – pinhole ray casting of the primitives into a depth image.
//! 3. **observation** – synthetic observation generation and noise injection.
//! 4. **cost** – match mask, pixel discrepancy and collision penalty that
//!    score a candidate pose against an observation.
//! 5. **pso** – bounded constriction-weight particle swarm with periodic
//!    worst-half subdimensional mutation.
//! 6. **reduce** – deterministic pairwise ("pyramid") summation used for all
//!    pixel sums so results do not depend on evaluation scheduling.
//!
//! The crate is `no_std` (with `alloc`); file formats, worker pools and the
//! CLI live in the companion `handpose` crate.

#![no_std]

extern crate alloc;

pub mod camera;
pub mod cost;
pub mod hand_model;
pub mod math;
pub mod observation;
pub mod pso;
pub mod reduce;
pub mod rng;

pub use camera::{render_depth, silhouette_of, CameraIntrinsics, DepthImage, SilhouetteMask};
pub use cost::{
    collision_penalty, render_pose, CostBreakdown, CostError, CostParams, Evaluator,
};
pub use hand_model::{
    clamp_pose, default_bounds, forward_kinematics, random_pose, FingerPose, HandDimensions,
    HandGeometry, HandPose, PoseBounds, Primitive, WristPose, POSE_DIM,
};
pub use observation::{apply_noise, synthesize_observation, NoiseSpec, Observation};
pub use pso::{
    constriction_weight, init_swarm, run, BatchObjective, PsoError, PsoParams, RunResult,
    SearchBounds, Swarm, WarmStart,
};
pub use reduce::pyramid_sum;
