//! Pose-vs-observation scoring: match mask, pixel discrepancy, collision
//! penalty and the combined objective.
//!
//! The discrepancy has a depth term (mean clamped |o_d - r_d| over the
//! union coverage) and an area term (one minus the Dice overlap of the
//! observed silhouette and the match mask, weighted by lambda). Depth
//! differences are measured in millimeters and scaled by `depth_scale`
//! (default 0.1, i.e. centimeters) so the default match threshold maps to
//! 1.0 and the stop threshold of the optimizer is commensurate.
//!
//! All pixel sums go through the pyramid reduction; since the per-pixel
//! summands are integer-valued, the sums are exact and independent of
//! bracketing.

use alloc::vec::Vec;
use core::fmt;

use crate::camera::{render_depth_into, CameraIntrinsics, DepthImage, SilhouetteMask};
use crate::hand_model::{forward_kinematics, HandDimensions, HandPose};
use crate::observation::Observation;
use crate::reduce::pyramid_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Match threshold, millimeters.
    pub d_m: f64,
    /// Depth-difference clamp, millimeters.
    pub d_max: f64,
    /// Area-term weight.
    pub lambda: f64,
    /// Collision-penalty weight.
    pub lambda_k: f64,
    /// Millimeters-to-objective-units factor for the depth term.
    pub depth_scale: f64,
    /// Clamp the depth numerator at `d_m` instead of `d_max`.
    pub clamp_at_dm: bool,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            d_m: 10.0,
            d_max: 40.0,
            lambda: 20.0,
            lambda_k: 10.0,
            depth_scale: 0.1,
            clamp_at_dm: false,
        }
    }
}

impl CostParams {
    pub fn is_valid(&self) -> bool {
        0.0 < self.d_m
            && self.d_m <= self.d_max
            && self.lambda >= 0.0
            && self.lambda_k >= 0.0
            && self.depth_scale > 0.0
    }

    fn clamp_mm(&self) -> f64 {
        if self.clamp_at_dm {
            self.d_m
        } else {
            self.d_max
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub depth_term: f64,
    pub area_term: f64,
    pub penalty_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostError {
    DimensionMismatch {
        left: (u32, u32),
        right: (u32, u32),
    },
}

impl fmt::Display for CostError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostError::DimensionMismatch { left, right } => write!(
                f,
                "image dimension mismatch: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
        }
    }
}

fn check_dims(a: (u32, u32), b: (u32, u32)) -> Result<(), CostError> {
    if a == b {
        Ok(())
    } else {
        Err(CostError::DimensionMismatch { left: a, right: b })
    }
}

/// Binary correlation of a rendered depth against the observed depth:
/// 1 iff the render covers the pixel and either the observed depth is
/// undefined there or the two depths agree within `d_m`.
pub fn match_mask(r_d: &DepthImage, o_d: &DepthImage, d_m: f64) -> Result<SilhouetteMask, CostError> {
    check_dims((r_d.width, r_d.height), (o_d.width, o_d.height))?;
    let data = r_d
        .data
        .iter()
        .zip(&o_d.data)
        .map(|(&r, &o)| {
            let matched = r != 0 && (o == 0 || (r as f64 - o as f64).abs() < d_m);
            u8::from(matched)
        })
        .collect();
    Ok(SilhouetteMask {
        width: r_d.width,
        height: r_d.height,
        data,
    })
}

/// Per-pixel scratch for the discrepancy sums, reusable across poses.
struct Scratch {
    num: Vec<f64>,
    or_cov: Vec<f64>,
    and_cov: Vec<f64>,
}

impl Scratch {
    fn new() -> Self {
        Scratch {
            num: Vec::new(),
            or_cov: Vec::new(),
            and_cov: Vec::new(),
        }
    }

    fn resize(&mut self, n: usize) {
        self.num.resize(n, 0.0);
        self.or_cov.resize(n, 0.0);
        self.and_cov.resize(n, 0.0);
    }
}

fn discrepancy_into(
    o: &Observation,
    r_d: &DepthImage,
    p: &CostParams,
    scratch: &mut Scratch,
) -> Result<(f64, f64), CostError> {
    check_dims((o.depth.width, o.depth.height), (r_d.width, r_d.height))?;
    check_dims((o.mask.width, o.mask.height), (r_d.width, r_d.height))?;
    let n = r_d.data.len();
    scratch.resize(n);
    let clamp_mm = p.clamp_mm();
    for i in 0..n {
        let r = r_d.data[i];
        let od = o.depth.data[i];
        let os = o.mask.data[i] != 0;
        let diff = (r as f64 - od as f64).abs();
        let matched = r != 0 && (od == 0 || diff < p.d_m);
        scratch.num[i] = if r != 0 && od != 0 {
            diff.min(clamp_mm)
        } else {
            0.0
        };
        scratch.or_cov[i] = f64::from(os || matched);
        scratch.and_cov[i] = f64::from(os && matched);
    }
    let num_sum = pyramid_sum(&scratch.num[..n]);
    let or_sum = pyramid_sum(&scratch.or_cov[..n]);
    let and_sum = pyramid_sum(&scratch.and_cov[..n]);
    if or_sum == 0.0 {
        // Empty matches empty.
        return Ok((0.0, 0.0));
    }
    let depth_term = p.depth_scale * num_sum / or_sum;
    let area_term = p.lambda * (1.0 - 2.0 * and_sum / (and_sum + or_sum));
    Ok((depth_term, area_term))
}

/// Depth and area terms of the discrepancy between observation and render.
pub fn discrepancy(
    o: &Observation,
    r_d: &DepthImage,
    p: &CostParams,
) -> Result<(f64, f64), CostError> {
    discrepancy_into(o, r_d, p, &mut Scratch::new())
}

/// Adjacent-finger crossing penalty: for the pairs (index, middle),
/// (middle, ring), (ring, little), phi = rest separation plus the
/// abduction of the little-side finger minus the abduction of the
/// thumb-side finger, in degrees; violations (phi < 0) accumulate.
pub fn collision_penalty(h: &HandPose, rest_separation_deg: f64) -> f64 {
    let mut kc = 0.0;
    for pair in [(1usize, 2usize), (2, 3), (3, 4)] {
        let phi = rest_separation_deg + h.fingers[pair.1].theta_mp_z
            - h.fingers[pair.0].theta_mp_z;
        kc += -phi.min(0.0);
    }
    kc
}

/// Reusable objective evaluator owning a private render buffer, the
/// per-particle "own memory region" of the parallel design.
pub struct Evaluator {
    dims: HandDimensions,
    params: CostParams,
    depth_buf: Vec<u16>,
    scratch: Scratch,
}

impl Evaluator {
    pub fn new(dims: HandDimensions, params: CostParams) -> Self {
        Evaluator {
            dims,
            params,
            depth_buf: Vec::new(),
            scratch: Scratch::new(),
        }
    }

    pub fn params(&self) -> &CostParams {
        &self.params
    }

    pub fn dims(&self) -> &HandDimensions {
        &self.dims
    }

    /// Renders pose `h` and returns the rendered depth alongside the
    /// breakdown (the render is reused by diagnostics).
    pub fn objective(&mut self, h: &HandPose, o: &Observation) -> Result<CostBreakdown, CostError> {
        let cam = &o.cam;
        self.depth_buf.resize((cam.width * cam.height) as usize, 0);
        render_depth_into(&forward_kinematics(h, &self.dims), cam, &mut self.depth_buf);
        let r_d = DepthImage {
            width: cam.width,
            height: cam.height,
            data: core::mem::take(&mut self.depth_buf),
        };
        let result = discrepancy_into(o, &r_d, &self.params, &mut self.scratch);
        self.depth_buf = r_d.data;
        let (depth_term, area_term) = result?;
        let kc = collision_penalty(h, self.dims.rest_separation_deg);
        let penalty_term = self.params.lambda_k * kc;
        Ok(CostBreakdown {
            depth_term,
            area_term,
            penalty_term,
            total: depth_term + area_term + penalty_term,
        })
    }
}

/// One-shot objective; identical arithmetic to the evaluator path.
pub fn objective(
    h: &HandPose,
    o: &Observation,
    d: &HandDimensions,
    p: &CostParams,
) -> Result<CostBreakdown, CostError> {
    Evaluator::new(d.clone(), *p).objective(h, o)
}

/// Renders `h` with the observation's camera, for overlays and diagnostics.
pub fn render_pose(h: &HandPose, d: &HandDimensions, cam: &CameraIntrinsics) -> DepthImage {
    crate::camera::render_depth(&forward_kinematics(h, d), cam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::silhouette_of;
    use crate::hand_model::{default_bounds, random_pose, WristPose};
    use crate::observation::synthesize_observation;
    use crate::rng;
    use alloc::vec;

    fn img(w: u32, h: u32, data: Vec<u16>) -> DepthImage {
        DepthImage {
            width: w,
            height: h,
            data,
        }
    }

    fn mask(w: u32, h: u32, data: Vec<u8>) -> SilhouetteMask {
        SilhouetteMask {
            width: w,
            height: h,
            data,
        }
    }

    fn flat_hand() -> HandPose {
        HandPose {
            wrist: WristPose {
                z_c: 1.0,
                ..WristPose::default()
            },
            ..HandPose::default()
        }
    }

    #[test]
    fn match_mask_equal_depths() {
        let r = img(2, 2, vec![900, 0, 1000, 1200]);
        let o = r.clone();
        let m = match_mask(&r, &o, 10.0).unwrap();
        assert_eq!(m.data, silhouette_of(&r).data);
    }

    #[test]
    fn match_mask_undefined_observation_branch() {
        let r = img(2, 2, vec![900, 900, 0, 0]);
        let o = img(2, 2, vec![0, 0, 0, 0]);
        let m = match_mask(&r, &o, 10.0).unwrap();
        assert_eq!(m.data, vec![1, 1, 0, 0]);
    }

    #[test]
    fn match_mask_rejects_large_difference() {
        let r = img(1, 1, vec![1025]);
        let o = img(1, 1, vec![1000]);
        let m = match_mask(&r, &o, 10.0).unwrap();
        assert_eq!(m.data, vec![0]);
    }

    #[test]
    fn match_mask_dimension_mismatch() {
        let r = img(2, 1, vec![0, 0]);
        let o = img(1, 2, vec![0, 0]);
        assert!(match_mask(&r, &o, 10.0).is_err());
    }

    #[test]
    fn handcrafted_two_by_two() {
        let o = Observation {
            mask: mask(2, 2, vec![1, 1, 0, 0]),
            depth: img(2, 2, vec![1000, 980, 0, 0]),
            cam: CameraIntrinsics::for_resolution(2, 2),
        };
        let r_d = img(2, 2, vec![1005, 0, 900, 0]);
        let p = CostParams::default();
        let (depth_term, area_term) = discrepancy(&o, &r_d, &p).unwrap();
        assert!((depth_term - 0.5 / 3.0).abs() < 1e-12, "depth {depth_term}");
        assert!((area_term - 10.0).abs() < 1e-12, "area {area_term}");
    }

    #[test]
    fn disjoint_masks_hit_the_lambda_ceiling() {
        let o = Observation {
            mask: mask(2, 2, vec![1, 1, 0, 0]),
            depth: img(2, 2, vec![0, 0, 0, 0]),
            cam: CameraIntrinsics::for_resolution(2, 2),
        };
        let r_d = img(2, 2, vec![0, 0, 900, 900]);
        let (depth_term, area_term) = discrepancy(&o, &r_d, &CostParams::default()).unwrap();
        assert_eq!(depth_term, 0.0);
        assert_eq!(area_term, 20.0);
    }

    #[test]
    fn empty_matches_empty() {
        let o = Observation {
            mask: mask(2, 2, vec![0; 4]),
            depth: img(2, 2, vec![0; 4]),
            cam: CameraIntrinsics::for_resolution(2, 2),
        };
        let r_d = img(2, 2, vec![0; 4]);
        let (d, a) = discrepancy(&o, &r_d, &CostParams::default()).unwrap();
        assert_eq!((d, a), (0.0, 0.0));
    }

    #[test]
    fn collision_penalty_examples() {
        let mut h = flat_hand();
        assert_eq!(collision_penalty(&h, 15.0), 0.0);
        // Index toward middle (+), middle toward index (-).
        h.fingers[1].theta_mp_z = 15.0;
        h.fingers[2].theta_mp_z = -15.0;
        assert_eq!(collision_penalty(&h, 15.0), 15.0);
        // Only violating pairs contribute.
        let mut h2 = flat_hand();
        h2.fingers[3].theta_mp_z = 5.0;
        h2.fingers[4].theta_mp_z = -20.0;
        // (ring, little): 15 + (-20) - 5 = -10.
        assert_eq!(collision_penalty(&h2, 15.0), 10.0);
    }

    #[test]
    fn self_match_scores_zero() {
        let d = HandDimensions::default();
        let h = flat_hand();
        let o = synthesize_observation(&h, &d, &CameraIntrinsics::for_resolution(160, 120));
        let b = objective(&h, &o, &d, &CostParams::default()).unwrap();
        assert_eq!(b.total, 0.0, "breakdown {b:?}");
    }

    #[test]
    fn shifted_pose_scores_positive() {
        let d = HandDimensions::default();
        let h = flat_hand();
        let o = synthesize_observation(&h, &d, &CameraIntrinsics::for_resolution(160, 120));
        let mut shifted = h;
        shifted.wrist.x_c += 0.05;
        let b = objective(&shifted, &o, &d, &CostParams::default()).unwrap();
        assert!(b.total > 0.0);
    }

    #[test]
    fn crossing_fingers_add_exactly_the_weighted_penalty() {
        let d = HandDimensions::default();
        let h = flat_hand();
        let o = synthesize_observation(&h, &d, &CameraIntrinsics::for_resolution(160, 120));
        let mut crossed = h;
        crossed.fingers[1].theta_mp_z = 15.0;
        crossed.fingers[2].theta_mp_z = -15.0;
        let base = objective(&crossed, &o, &d, &CostParams::default()).unwrap();
        let kc = collision_penalty(&crossed, d.rest_separation_deg);
        assert_eq!(base.penalty_term, 10.0 * kc);
        assert!(kc > 0.0);
    }

    #[test]
    fn evaluator_matches_one_shot_objective_bitwise() {
        let d = HandDimensions::default();
        let p = CostParams::default();
        let o = synthesize_observation(&flat_hand(), &d, &CameraIntrinsics::for_resolution(80, 60));
        let mut ev = Evaluator::new(d.clone(), p);
        let b = default_bounds();
        let mut rng = rng::seeded(12);
        for _ in 0..5 {
            let h = random_pose(&mut rng, &b);
            let via_eval = ev.objective(&h, &o).unwrap();
            let via_free = objective(&h, &o, &d, &p).unwrap();
            assert_eq!(via_eval.total.to_bits(), via_free.total.to_bits());
        }
    }

    /// Independent pixel-loop oracle; integer-valued summands make the
    /// sums exact, so plain sequential addition is a valid reference for
    /// the pyramid-reduced implementation.
    fn oracle_discrepancy(o: &Observation, r_d: &DepthImage, p: &CostParams) -> (f64, f64) {
        let mut num = 0.0;
        let mut or_sum = 0.0;
        let mut and_sum = 0.0;
        for i in 0..r_d.data.len() {
            let r = r_d.data[i];
            let od = o.depth.data[i];
            let os = o.mask.data[i] != 0;
            let matched = r != 0 && (od == 0 || (r as f64 - od as f64).abs() < p.d_m);
            if r != 0 && od != 0 {
                let clamp = if p.clamp_at_dm { p.d_m } else { p.d_max };
                num += (r as f64 - od as f64).abs().min(clamp);
            }
            if os || matched {
                or_sum += 1.0;
            }
            if os && matched {
                and_sum += 1.0;
            }
        }
        if or_sum == 0.0 {
            return (0.0, 0.0);
        }
        (
            p.depth_scale * num / or_sum,
            p.lambda * (1.0 - 2.0 * and_sum / (and_sum + or_sum)),
        )
    }

    fn random_pair(rng: &mut rng::Rng) -> (Observation, DepthImage) {
        let n = 16;
        let depth = |rng: &mut rng::Rng| -> Vec<u16> {
            (0..n)
                .map(|_| {
                    if rng::unit(rng) < 0.3 {
                        0
                    } else {
                        900 + (rng::unit(rng) * 200.0) as u16
                    }
                })
                .collect()
        };
        let o = Observation {
            depth: img(4, 4, depth(rng)),
            mask: mask(4, 4, (0..n).map(|_| u8::from(rng::unit(rng) < 0.5)).collect()),
            cam: CameraIntrinsics::for_resolution(4, 4),
        };
        let r_d = img(4, 4, depth(rng));
        (o, r_d)
    }

    #[test]
    fn brute_force_equivalence_on_random_images() {
        let p = CostParams::default();
        let mut rng = rng::seeded(21);
        for _ in 0..200 {
            let (o, r_d) = random_pair(&mut rng);
            let got = discrepancy(&o, &r_d, &p).unwrap();
            let want = oracle_discrepancy(&o, &r_d, &p);
            assert_eq!(got.0.to_bits(), want.0.to_bits());
            assert_eq!(got.1.to_bits(), want.1.to_bits());
        }
    }

    /// Like `random_pair` but with a mask consistent with the depth data
    /// (every defined depth pixel is a silhouette pixel, as holds for any
    /// real observation); the depth-term bound presumes this.
    fn random_consistent_pair(rng: &mut rng::Rng) -> (Observation, DepthImage) {
        let (mut o, r_d) = random_pair(rng);
        for (m, &z) in o.mask.data.iter_mut().zip(&o.depth.data) {
            if z != 0 {
                *m = 1;
            }
        }
        (o, r_d)
    }

    #[test]
    fn terms_stay_in_their_ranges() {
        let p = CostParams::default();
        let mut rng = rng::seeded(33);
        for _ in 0..500 {
            let (o, r_d) = random_consistent_pair(&mut rng);
            let (d, a) = discrepancy(&o, &r_d, &p).unwrap();
            assert!(d >= 0.0 && d <= p.d_max * p.depth_scale, "depth {d}");
            assert!((0.0..=p.lambda).contains(&a), "area {a}");
        }
    }

    #[test]
    fn clamp_at_dm_flag_restores_literal_rule() {
        let o = Observation {
            mask: mask(1, 1, vec![1]),
            depth: img(1, 1, vec![1000]),
            cam: CameraIntrinsics::for_resolution(1, 1),
        };
        let r_d = img(1, 1, vec![1030]);
        let loose = CostParams::default();
        let strict = CostParams {
            clamp_at_dm: true,
            ..loose
        };
        let (d_loose, _) = discrepancy(&o, &r_d, &loose).unwrap();
        let (d_strict, _) = discrepancy(&o, &r_d, &strict).unwrap();
        assert_eq!(d_loose, 3.0); // min(30, 40) * 0.1 / 1
        assert_eq!(d_strict, 1.0); // min(30, 10) * 0.1 / 1
    }
}
