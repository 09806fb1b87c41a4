//! Observation pairs (silhouette + depth) and synthetic generation.
//!
//! A real capture pipeline is out of scope; observations are either
//! synthesized from a reference pose or loaded from files by the companion
//! crate. The noise model approximates Kinect-class sensors: additive
//! Gaussian depth error, missing-depth dropout and mask speckle.

use crate::camera::{silhouette_of, CameraIntrinsics, DepthImage, SilhouetteMask};
use crate::hand_model::{forward_kinematics, HandDimensions, HandPose};
use crate::rng::{self, Rng};

/// The observation O = (mask, depth) a candidate pose is scored against.
/// Depth may be 0 (undefined) at mask=1 pixels; the match rule allows it.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub mask: SilhouetteMask,
    pub depth: DepthImage,
    pub cam: CameraIntrinsics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Additive Gaussian sigma on valid depth pixels, millimeters.
    pub depth_sigma: f64,
    /// Probability a valid depth pixel becomes 0 (mask untouched).
    pub dropout_prob: f64,
    /// Probability a mask pixel flips.
    pub mask_flip_prob: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            depth_sigma: 0.0,
            dropout_prob: 0.0,
            mask_flip_prob: 0.0,
        }
    }
}

impl NoiseSpec {
    pub fn is_valid(&self) -> bool {
        self.depth_sigma >= 0.0
            && (0.0..=1.0).contains(&self.dropout_prob)
            && (0.0..=1.0).contains(&self.mask_flip_prob)
    }

    pub fn is_zero(&self) -> bool {
        self.depth_sigma == 0.0 && self.dropout_prob == 0.0 && self.mask_flip_prob == 0.0
    }
}

/// Renders the reference pose and derives its silhouette.
pub fn synthesize_observation(
    h_ref: &HandPose,
    d: &HandDimensions,
    cam: &CameraIntrinsics,
) -> Observation {
    let depth = crate::camera::render_depth(&forward_kinematics(h_ref, d), cam);
    let mask = silhouette_of(&depth);
    Observation {
        mask,
        depth,
        cam: *cam,
    }
}

/// Applies the noise model; deterministic for a given rng state. Dropout
/// zeroes depth but leaves the mask alone, modelling missing sensor depth.
pub fn apply_noise(o: &Observation, n: &NoiseSpec, rng: &mut Rng) -> Observation {
    let mut out = o.clone();
    for z in out.depth.data.iter_mut() {
        if *z == 0 {
            continue;
        }
        if n.depth_sigma > 0.0 {
            let noisy = *z as f64 + n.depth_sigma * rng::standard_normal(rng);
            *z = libm::round(noisy.clamp(o.cam.z_near, o.cam.z_far)) as u16;
        }
        if n.dropout_prob > 0.0 && rng::unit(rng) < n.dropout_prob {
            *z = 0;
        }
    }
    if n.mask_flip_prob > 0.0 {
        for m in out.mask.data.iter_mut() {
            if rng::unit(rng) < n.mask_flip_prob {
                *m ^= 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand_model::WristPose;

    fn flat_hand_at(z_m: f64) -> HandPose {
        HandPose {
            wrist: WristPose {
                z_c: z_m,
                ..WristPose::default()
            },
            ..HandPose::default()
        }
    }

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::for_resolution(160, 120)
    }

    #[test]
    fn behind_camera_is_empty() {
        let h = flat_hand_at(0.05); // well inside z_near
        let o = synthesize_observation(&h, &HandDimensions::default(), &cam());
        assert_eq!(o.mask.count_ones(), 0);
        assert!(o.depth.data.iter().all(|&z| z == 0));
    }

    #[test]
    fn flat_hand_depths_are_near_the_wrist_plane() {
        let o = synthesize_observation(&flat_hand_at(1.0), &HandDimensions::default(), &cam());
        assert!(o.mask.count_ones() > 0);
        for &z in &o.depth.data {
            if z != 0 {
                assert!((900..=1100).contains(&z), "depth {z}");
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let h = flat_hand_at(0.8);
        let d = HandDimensions::default();
        let a = synthesize_observation(&h, &d, &cam());
        let b = synthesize_observation(&h, &d, &cam());
        assert_eq!(a, b);
    }

    #[test]
    fn zero_noise_is_identity() {
        let o = synthesize_observation(&flat_hand_at(1.0), &HandDimensions::default(), &cam());
        let noisy = apply_noise(&o, &NoiseSpec::default(), &mut rng::seeded(1));
        assert_eq!(o, noisy);
    }

    #[test]
    fn full_dropout_clears_depth_only() {
        let o = synthesize_observation(&flat_hand_at(1.0), &HandDimensions::default(), &cam());
        let spec = NoiseSpec {
            dropout_prob: 1.0,
            ..NoiseSpec::default()
        };
        let noisy = apply_noise(&o, &spec, &mut rng::seeded(1));
        assert!(noisy.depth.data.iter().all(|&z| z == 0));
        assert_eq!(noisy.mask, o.mask);
    }

    #[test]
    fn depth_sigma_matches_empirical_std() {
        let o = synthesize_observation(&flat_hand_at(0.7), &HandDimensions::default(), &cam());
        let valid = o.depth.data.iter().filter(|&&z| z != 0).count();
        assert!(valid >= 500, "need enough valid pixels, got {valid}");
        let spec = NoiseSpec {
            depth_sigma: 5.0,
            ..NoiseSpec::default()
        };
        // Aggregate several seeds to pass the 10^4-sample bar.
        let mut diffs = alloc::vec::Vec::new();
        for seed in 0..20 {
            let noisy = apply_noise(&o, &spec, &mut rng::seeded(seed));
            for (a, b) in o.depth.data.iter().zip(&noisy.depth.data) {
                if *a != 0 && *b != 0 {
                    diffs.push(*b as f64 - *a as f64);
                }
            }
        }
        assert!(diffs.len() >= 10_000);
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / diffs.len() as f64;
        let std = libm::sqrt(var);
        assert!((4.5..=5.5).contains(&std), "std {std}");
    }

    #[test]
    fn mask_flip_probability_is_respected() {
        let o = synthesize_observation(&flat_hand_at(1.0), &HandDimensions::default(), &cam());
        let spec = NoiseSpec {
            mask_flip_prob: 0.1,
            ..NoiseSpec::default()
        };
        let noisy = apply_noise(&o, &spec, &mut rng::seeded(5));
        let flips = o
            .mask
            .data
            .iter()
            .zip(&noisy.mask.data)
            .filter(|(a, b)| a != b)
            .count();
        let rate = flips as f64 / o.mask.data.len() as f64;
        assert!((0.08..=0.12).contains(&rate), "flip rate {rate}");
    }
}
