//! 26-DoF hand parameterization and forward kinematics.
//!
//! A pose is the wrist position/orientation (6 DoF) plus four joint angles
//! per finger (5 x 4 DoF). Forward kinematics places 38 analytic primitives
//! in the camera frame: an elliptic palm cylinder capped by two ellipsoids,
//! and per finger four joint spheres interleaved with three segments
//! (truncated cones, except the thumb's proximal segment which is an
//! ellipsoid).
//!
//! Conventions, pinned by the tests in this module:
//! - right-handed camera frame, +z into the scene;
//! - wrist rotation is intrinsic x -> y -> z;
//! - in the local hand frame fingers point along +y, the palm normal is +z
//!   and the thumb side is +x;
//! - abduction rotates about the local z axis (positive moves the finger
//!   toward the little-finger side), flexion rotates about the local x axis
//!   (positive curls toward +z);
//! - the thumb's base frame is pre-rotated 90 degrees about the palm axis
//!   (+y) so its flexion sweeps across the palm.

use alloc::vec::Vec;

use crate::math::{deg_to_rad, Mat3, Vec3};
use crate::rng::{self, Rng};

/// Number of scalar pose parameters.
pub const POSE_DIM: usize = 26;

/// Number of finger-angle parameters (the mutation-rule suffix).
pub const FINGER_DIMS: usize = 20;

/// Index of the first finger parameter in the flattened pose vector.
pub const FINGER_OFFSET: usize = 6;

pub const FINGER_COUNT: usize = 5;

/// Finger order used everywhere: thumb, index, middle, ring, little.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finger {
    Thumb = 0,
    Index = 1,
    Middle = 2,
    Ring = 3,
    Little = 4,
}

/// Joint angles of one finger, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FingerPose {
    /// Base-joint flexion.
    pub theta_mp_x: f64,
    /// Base-joint abduction.
    pub theta_mp_z: f64,
    /// Middle-joint flexion.
    pub theta_pip: f64,
    /// Distal-joint flexion.
    pub theta_dip: f64,
}

/// Wrist position (meters, camera frame) and hand orientation (degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WristPose {
    pub x_c: f64,
    pub y_c: f64,
    pub z_c: f64,
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
}

impl Default for WristPose {
    fn default() -> Self {
        WristPose {
            x_c: 0.0,
            y_c: 0.0,
            z_c: 1.0,
            theta_x: 0.0,
            theta_y: 0.0,
            theta_z: 0.0,
        }
    }
}

/// The full 26-parameter hand state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HandPose {
    pub wrist: WristPose,
    /// Ordered thumb, index, middle, ring, little.
    pub fingers: [FingerPose; FINGER_COUNT],
}

impl HandPose {
    /// Flattening order: `[x_c, y_c, z_c, theta_x, theta_y, theta_z]` then
    /// per finger (thumb..little) `[mp_x, mp_z, pip, dip]`.
    pub fn to_vector(&self) -> [f64; POSE_DIM] {
        let mut v = [0.0; POSE_DIM];
        v[0] = self.wrist.x_c;
        v[1] = self.wrist.y_c;
        v[2] = self.wrist.z_c;
        v[3] = self.wrist.theta_x;
        v[4] = self.wrist.theta_y;
        v[5] = self.wrist.theta_z;
        for (f, fp) in self.fingers.iter().enumerate() {
            let o = FINGER_OFFSET + 4 * f;
            v[o] = fp.theta_mp_x;
            v[o + 1] = fp.theta_mp_z;
            v[o + 2] = fp.theta_pip;
            v[o + 3] = fp.theta_dip;
        }
        v
    }

    pub fn from_vector(v: &[f64]) -> HandPose {
        assert_eq!(v.len(), POSE_DIM, "pose vector must have 26 entries");
        let mut fingers = [FingerPose::default(); FINGER_COUNT];
        for (f, fp) in fingers.iter_mut().enumerate() {
            let o = FINGER_OFFSET + 4 * f;
            *fp = FingerPose {
                theta_mp_x: v[o],
                theta_mp_z: v[o + 1],
                theta_pip: v[o + 2],
                theta_dip: v[o + 3],
            };
        }
        HandPose {
            wrist: WristPose {
                x_c: v[0],
                y_c: v[1],
                z_c: v[2],
                theta_x: v[3],
                theta_y: v[4],
                theta_z: v[5],
            },
            fingers,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

/// Box limits of the 26 parameters, in flattening order.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseBounds {
    pub lower: [f64; POSE_DIM],
    pub upper: [f64; POSE_DIM],
}

impl PoseBounds {
    pub fn is_valid(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| l < u)
    }
}

/// Joint and wrist limits: per finger (mp_x, mp_z, pip, dip) in degrees,
/// wrist position box in meters, wrist angles in degrees.
const FINGER_LIMITS: [[(f64, f64); 4]; FINGER_COUNT] = [
    // thumb
    [(0.0, 90.0), (-15.0, 60.0), (0.0, 50.0), (-15.0, 70.0)],
    // index
    [(0.0, 90.0), (-15.0, 15.0), (0.0, 100.0), (0.0, 60.0)],
    // middle
    [(0.0, 90.0), (-10.0, 10.0), (0.0, 100.0), (0.0, 60.0)],
    // ring
    [(0.0, 90.0), (-30.0, 0.0), (0.0, 100.0), (0.0, 60.0)],
    // little
    [(0.0, 90.0), (-45.0, 0.0), (0.0, 100.0), (0.0, 60.0)],
];

const WRIST_LIMITS: [(f64, f64); 6] = [
    (-0.9, 0.9),
    (-0.68, 0.68),
    (0.5, 1.5),
    (-30.0, 120.0),
    (-70.0, 75.0),
    (-35.0, 20.0),
];

/// The search-space limits of the joint/wrist parameter tables.
pub fn default_bounds() -> PoseBounds {
    let mut lower = [0.0; POSE_DIM];
    let mut upper = [0.0; POSE_DIM];
    for (i, &(l, u)) in WRIST_LIMITS.iter().enumerate() {
        lower[i] = l;
        upper[i] = u;
    }
    for (f, row) in FINGER_LIMITS.iter().enumerate() {
        for (j, &(l, u)) in row.iter().enumerate() {
            lower[FINGER_OFFSET + 4 * f + j] = l;
            upper[FINGER_OFFSET + 4 * f + j] = u;
        }
    }
    PoseBounds { lower, upper }
}

/// Clamps every parameter into its box; parameters already inside are
/// returned unchanged (the operation is idempotent bitwise).
pub fn clamp_pose(h: &HandPose, b: &PoseBounds) -> HandPose {
    let mut v = h.to_vector();
    for i in 0..POSE_DIM {
        v[i] = v[i].clamp(b.lower[i], b.upper[i]);
    }
    HandPose::from_vector(&v)
}

/// Draws each parameter independently, uniformly within its box.
pub fn random_pose(rng: &mut Rng, b: &PoseBounds) -> HandPose {
    let mut v = [0.0; POSE_DIM];
    for i in 0..POSE_DIM {
        v[i] = rng::uniform(rng, b.lower[i], b.upper[i]);
    }
    HandPose::from_vector(&v)
}

/// Per-finger geometry: where the chain attaches to the palm and how long
/// and thick each segment is. Millimeters, local hand frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerDimensions {
    pub base_offset: [f64; 3],
    /// Proximal, middle, distal segment lengths.
    pub segment_lengths: [f64; 3],
    /// Sphere/cone radii at the four joints, proximal to tip.
    pub segment_radii: [f64; 4],
}

/// Hand measurements (millimeters). Loadable from a config file so a
/// measured hand can replace the anthropometric defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct HandDimensions {
    pub palm_half_width: f64,
    pub palm_half_thickness: f64,
    pub palm_length: f64,
    /// Ordered thumb, index, middle, ring, little.
    pub fingers: [FingerDimensions; FINGER_COUNT],
    /// Semi-axes of the thumb's proximal-segment ellipsoid; the middle
    /// value lies along the segment.
    pub thumb_proximal_ellipsoid: [f64; 3],
    /// Angular gap between adjacent finger base frames at zero abduction,
    /// degrees; used by the collision penalty.
    pub rest_separation_deg: f64,
}

impl Default for HandDimensions {
    fn default() -> Self {
        HandDimensions {
            palm_half_width: 45.0,
            palm_half_thickness: 15.0,
            palm_length: 100.0,
            fingers: [
                FingerDimensions {
                    base_offset: [42.0, 15.0, 0.0],
                    segment_lengths: [48.0, 32.0, 25.0],
                    segment_radii: [11.0, 9.0, 8.0, 7.0],
                },
                FingerDimensions {
                    base_offset: [27.0, 100.0, 0.0],
                    segment_lengths: [45.0, 27.0, 22.0],
                    segment_radii: [9.0, 8.0, 7.0, 6.0],
                },
                FingerDimensions {
                    base_offset: [9.0, 100.0, 0.0],
                    segment_lengths: [50.0, 30.0, 24.0],
                    segment_radii: [9.0, 8.0, 7.0, 6.0],
                },
                FingerDimensions {
                    base_offset: [-9.0, 100.0, 0.0],
                    segment_lengths: [45.0, 27.0, 22.0],
                    segment_radii: [8.5, 7.5, 6.5, 5.5],
                },
                FingerDimensions {
                    base_offset: [-27.0, 100.0, 0.0],
                    segment_lengths: [35.0, 22.0, 18.0],
                    segment_radii: [7.5, 6.5, 5.5, 5.0],
                },
            ],
            thumb_proximal_ellipsoid: [14.0, 24.0, 12.0],
            rest_separation_deg: 15.0,
        }
    }
}

impl HandDimensions {
    pub fn is_valid(&self) -> bool {
        let palm_ok = self.palm_half_width > 0.0
            && self.palm_half_thickness > 0.0
            && self.palm_length > 0.0;
        let fingers_ok = self.fingers.iter().all(|f| {
            f.segment_lengths.iter().all(|&l| l > 0.0)
                && f.segment_radii.iter().all(|&r| r > 0.0)
                && f.segment_radii.windows(2).all(|w| w[0] >= w[1])
        });
        palm_ok && fingers_ok && self.thumb_proximal_ellipsoid.iter().all(|&a| a > 0.0)
    }
}

/// An analytic surface in camera-frame millimeters.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    TruncatedCone {
        base_center: Vec3,
        tip_center: Vec3,
        base_radius: f64,
        tip_radius: f64,
    },
    Ellipsoid {
        center: Vec3,
        semi_axes: Vec3,
        orientation: Mat3,
    },
    EllipticCylinder {
        base_center: Vec3,
        orientation: Mat3,
        /// Half-axes along the local x and z directions.
        half_x: f64,
        half_z: f64,
        /// Extent along the local y axis starting at `base_center`.
        length: f64,
    },
}

impl Primitive {
    /// Conservative bounding sphere, used by the renderer to reject rays
    /// cheaply without changing any intersection result.
    pub fn bounding_sphere(&self) -> (Vec3, f64) {
        match *self {
            Primitive::Sphere { center, radius } => (center, radius),
            Primitive::TruncatedCone {
                base_center,
                tip_center,
                base_radius,
                tip_radius,
            } => {
                let mid = (base_center + tip_center) * 0.5;
                let half = (tip_center - base_center).norm() * 0.5;
                (mid, half + base_radius.max(tip_radius))
            }
            Primitive::Ellipsoid {
                center, semi_axes, ..
            } => (center, semi_axes.x.max(semi_axes.y).max(semi_axes.z)),
            Primitive::EllipticCylinder {
                base_center,
                orientation,
                half_x,
                half_z,
                length,
            } => {
                let axis = orientation.mul_vec(Vec3::new(0.0, 1.0, 0.0));
                let mid = base_center + axis * (length * 0.5);
                let half = length * 0.5;
                let r = half_x.max(half_z);
                (mid, libm::sqrt(half * half + r * r))
            }
        }
    }
}

/// The placed primitives of one pose: palm cylinder, two palm caps, then
/// per finger joint spheres interleaved with segment surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct HandGeometry {
    pub primitives: Vec<Primitive>,
}

impl HandGeometry {
    /// Joint-sphere centers per finger (4 each), extracted for tests and
    /// diagnostics.
    pub fn joint_centers(&self) -> [[Vec3; 4]; FINGER_COUNT] {
        let mut out = [[Vec3::ZERO; 4]; FINGER_COUNT];
        for f in 0..FINGER_COUNT {
            let base = 3 + 7 * f;
            let mut j = 0;
            for p in &self.primitives[base..base + 7] {
                if let Primitive::Sphere { center, .. } = *p {
                    out[f][j] = center;
                    j += 1;
                }
            }
            debug_assert_eq!(j, 4);
        }
        out
    }

    /// Bounding sphere of the whole hand.
    pub fn bounding_sphere(&self) -> (Vec3, f64) {
        let mut center = Vec3::ZERO;
        let spheres: Vec<(Vec3, f64)> =
            self.primitives.iter().map(|p| p.bounding_sphere()).collect();
        for (c, _) in &spheres {
            center = center + *c;
        }
        center = center / spheres.len() as f64;
        let mut radius: f64 = 0.0;
        for (c, r) in &spheres {
            radius = radius.max((*c - center).norm() + r);
        }
        (center, radius)
    }
}

const METERS_TO_MM: f64 = 1000.0;

/// Places the 38 primitives of pose `h` in the camera frame.
///
/// Total over finite inputs; joint limits are the optimizer's concern.
pub fn forward_kinematics(h: &HandPose, d: &HandDimensions) -> HandGeometry {
    let wrist_rot = Mat3::rot_x(deg_to_rad(h.wrist.theta_x))
        .mul(&Mat3::rot_y(deg_to_rad(h.wrist.theta_y)))
        .mul(&Mat3::rot_z(deg_to_rad(h.wrist.theta_z)));
    let wrist_t = Vec3::new(
        h.wrist.x_c * METERS_TO_MM,
        h.wrist.y_c * METERS_TO_MM,
        h.wrist.z_c * METERS_TO_MM,
    );
    // Translation is applied last so rigid-translation equivariance holds at
    // the floating-point level when the wrist starts at the origin.
    let place = |local: Vec3| wrist_rot.mul_vec(local) + wrist_t;

    let mut primitives = Vec::with_capacity(3 + 7 * FINGER_COUNT);

    primitives.push(Primitive::EllipticCylinder {
        base_center: place(Vec3::ZERO),
        orientation: wrist_rot,
        half_x: d.palm_half_width,
        half_z: d.palm_half_thickness,
        length: d.palm_length,
    });
    let cap_axes = Vec3::new(d.palm_half_width, d.palm_half_thickness, d.palm_half_thickness);
    primitives.push(Primitive::Ellipsoid {
        center: place(Vec3::ZERO),
        semi_axes: cap_axes,
        orientation: wrist_rot,
    });
    primitives.push(Primitive::Ellipsoid {
        center: place(Vec3::new(0.0, d.palm_length, 0.0)),
        semi_axes: cap_axes,
        orientation: wrist_rot,
    });

    for (f, (fd, fp)) in d.fingers.iter().zip(&h.fingers).enumerate() {
        let is_thumb = f == Finger::Thumb as usize;
        let pre = if is_thumb {
            // 90 degrees about the palm axis, signed so flexion sweeps
            // toward the little-finger side.
            Mat3::rot_y(deg_to_rad(-90.0))
        } else {
            Mat3::IDENTITY
        };
        let base_rot = pre
            .mul(&Mat3::rot_z(deg_to_rad(fp.theta_mp_z)))
            .mul(&Mat3::rot_x(deg_to_rad(fp.theta_mp_x)));

        let mut joints = [Vec3::ZERO; 4];
        let mut rots = [Mat3::IDENTITY; 3];
        joints[0] = Vec3::new(fd.base_offset[0], fd.base_offset[1], fd.base_offset[2]);
        rots[0] = base_rot;
        rots[1] = rots[0].mul(&Mat3::rot_x(deg_to_rad(fp.theta_pip)));
        rots[2] = rots[1].mul(&Mat3::rot_x(deg_to_rad(fp.theta_dip)));
        for s in 0..3 {
            joints[s + 1] =
                joints[s] + rots[s].mul_vec(Vec3::new(0.0, fd.segment_lengths[s], 0.0));
        }

        for s in 0..3 {
            primitives.push(Primitive::Sphere {
                center: place(joints[s]),
                radius: fd.segment_radii[s],
            });
            if is_thumb && s == 0 {
                let mid = (joints[0] + joints[1]) * 0.5;
                primitives.push(Primitive::Ellipsoid {
                    center: place(mid),
                    semi_axes: Vec3::new(
                        d.thumb_proximal_ellipsoid[0],
                        d.thumb_proximal_ellipsoid[1],
                        d.thumb_proximal_ellipsoid[2],
                    ),
                    orientation: wrist_rot.mul(&rots[0]),
                });
            } else {
                primitives.push(Primitive::TruncatedCone {
                    base_center: place(joints[s]),
                    tip_center: place(joints[s + 1]),
                    base_radius: fd.segment_radii[s],
                    tip_radius: fd.segment_radii[s + 1],
                });
            }
        }
        primitives.push(Primitive::Sphere {
            center: place(joints[3]),
            radius: fd.segment_radii[3],
        });
    }

    HandGeometry { primitives }
}
