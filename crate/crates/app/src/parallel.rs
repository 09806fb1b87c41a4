//! Worker-pool batch evaluation of candidate poses.
//!
//! Each worker owns a private evaluator (render buffer and scratch space)
//! and scores a contiguous slice of the batch, so results are bitwise
//! identical for any worker count: every pose is scored by exactly the same
//! arithmetic regardless of which worker runs it.

use handpose_core::{
    BatchObjective, CostBreakdown, CostError, CostParams, Evaluator, HandDimensions, HandPose,
    Observation,
};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("pose {index}: {cause}")]
pub struct BatchError {
    pub index: usize,
    pub cause: CostError,
}

/// Scores every pose against the observation. `workers` ≥ 1; the split is
/// into contiguous chunks so ordering (and arithmetic) never depends on
/// scheduling.
pub fn evaluate_batch(
    poses: &[HandPose],
    o: &Observation,
    dims: &HandDimensions,
    params: &CostParams,
    workers: usize,
) -> Result<Vec<CostBreakdown>, BatchError> {
    let n = poses.len();
    let mut out: Vec<Result<CostBreakdown, CostError>> =
        vec![Err(CostError::DimensionMismatch { left: (0, 0), right: (0, 0) }); n];
    let workers = workers.max(1).min(n.max(1));
    if workers <= 1 {
        let mut eval = Evaluator::new(dims.clone(), *params);
        for (slot, pose) in out.iter_mut().zip(poses) {
            *slot = eval.objective(pose, o);
        }
    } else {
        let chunk = n.div_ceil(workers);
        std::thread::scope(|scope| {
            for (pose_chunk, out_chunk) in poses.chunks(chunk).zip(out.chunks_mut(chunk)) {
                scope.spawn(move || {
                    let mut eval = Evaluator::new(dims.clone(), *params);
                    for (slot, pose) in out_chunk.iter_mut().zip(pose_chunk) {
                        *slot = eval.objective(pose, o);
                    }
                });
            }
        });
    }
    out.into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|cause| BatchError { index, cause }))
        .collect()
}

/// Adapts a fixed observation into the optimizer's batch-objective shape.
pub struct ParallelEvaluator<'a> {
    pub observation: &'a Observation,
    pub dims: HandDimensions,
    pub params: CostParams,
    pub workers: usize,
}

impl BatchObjective for ParallelEvaluator<'_> {
    fn evaluate(&mut self, positions: &[Vec<f64>], costs: &mut [f64]) {
        let poses: Vec<HandPose> = positions.iter().map(|p| HandPose::from_vector(p)).collect();
        // Render size always matches the observation's own camera, so the
        // only cost error (a dimension mismatch) cannot occur here.
        let results = evaluate_batch(
            &poses,
            self.observation,
            &self.dims,
            &self.params,
            self.workers,
        )
        .expect("render and observation share one camera");
        for (c, b) in costs.iter_mut().zip(results) {
            *c = b.total;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use handpose_core::{
        default_bounds, random_pose, rng, synthesize_observation, CameraIntrinsics,
    };

    fn setup(n: usize) -> (Vec<HandPose>, Observation, HandDimensions, CostParams) {
        let dims = HandDimensions::default();
        let cam = CameraIntrinsics::for_resolution(80, 60);
        let bounds = default_bounds();
        let mut rng = rng::seeded(11);
        let reference = random_pose(&mut rng, &bounds);
        let o = synthesize_observation(&reference, &dims, &cam);
        let poses = (0..n).map(|_| random_pose(&mut rng, &bounds)).collect();
        (poses, o, dims, CostParams::default())
    }

    #[test]
    fn batch_of_one_matches_the_single_call_bitwise() {
        let (poses, o, dims, params) = setup(1);
        let batch = evaluate_batch(&poses, &o, &dims, &params, 1).unwrap();
        let single = Evaluator::new(dims.clone(), params)
            .objective(&poses[0], &o)
            .unwrap();
        assert_eq!(batch[0].total.to_bits(), single.total.to_bits());
    }

    #[test]
    fn identical_poses_give_identical_breakdowns() {
        let (mut poses, o, dims, params) = setup(1);
        let p = poses[0];
        poses = vec![p; 64];
        let batch = evaluate_batch(&poses, &o, &dims, &params, 4).unwrap();
        for b in &batch[1..] {
            assert_eq!(b, &batch[0]);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let (poses, o, dims, params) = setup(64);
        let base = evaluate_batch(&poses, &o, &dims, &params, 1).unwrap();
        for workers in [2, 3, 8] {
            let got = evaluate_batch(&poses, &o, &dims, &params, workers).unwrap();
            for (a, b) in base.iter().zip(&got) {
                assert_eq!(a.total.to_bits(), b.total.to_bits());
                assert_eq!(a.depth_term.to_bits(), b.depth_term.to_bits());
                assert_eq!(a.area_term.to_bits(), b.area_term.to_bits());
            }
        }
    }

    #[test]
    fn permuted_batch_permutes_the_output() {
        let (poses, o, dims, params) = setup(16);
        let forward = evaluate_batch(&poses, &o, &dims, &params, 4).unwrap();
        let reversed: Vec<HandPose> = poses.iter().rev().copied().collect();
        let backward = evaluate_batch(&reversed, &o, &dims, &params, 4).unwrap();
        for (a, b) in forward.iter().zip(backward.iter().rev()) {
            assert_eq!(a.total.to_bits(), b.total.to_bits());
        }
    }

    #[test]
    fn empty_batch_is_fine() {
        let (_, o, dims, params) = setup(1);
        assert!(evaluate_batch(&[], &o, &dims, &params, 4).unwrap().is_empty());
    }

    #[test]
    fn parallel_objective_matches_sequential_costs() {
        let (poses, o, dims, params) = setup(32);
        let positions: Vec<Vec<f64>> = poses.iter().map(|h| h.to_vector().to_vec()).collect();
        let mut seq = ParallelEvaluator {
            observation: &o,
            dims: dims.clone(),
            params,
            workers: 1,
        };
        let mut par = ParallelEvaluator {
            observation: &o,
            dims: dims.clone(),
            params,
            workers: 4,
        };
        let mut a = vec![0.0; positions.len()];
        let mut b = vec![0.0; positions.len()];
        seq.evaluate(&positions, &mut a);
        par.evaluate(&positions, &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
