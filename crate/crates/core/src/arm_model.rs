//! Geometry, joint limits and forward kinematics of the serpentine arm.
//!
//! The arm hangs from an actuation package at the origin: a rotating mast,
//! three single-hinge stages, two multi-coupling stages whose couplings all
//! share one pitch and one yaw, and a two-axis wrist carrying the gripper.
//! The base frame has +z up and the unbent arm extends along -z.
//!
//! Joint conventions, applied in the current (moving) frame:
//!
//! * mast rotation and wrist roll turn about the local z axis;
//! * pitch is a rotation about the local -y axis, so a positive pitch swings
//!   the distal chain towards local +x;
//! * yaw is a rotation about the local x axis, applied after the pitch of
//!   the same coupling, so a positive yaw swings the chain towards local +y;
//! * each joint sits at the proximal end of the segment it carries.

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Point3<f64>;

/// Number of independent joint parameters.
pub const NUM_DOFS: usize = 10;

pub const MAST: usize = 0;
pub const STAGE1_PITCH: usize = 1;
pub const STAGE2_PITCH: usize = 2;
pub const STAGE3_PITCH: usize = 3;
pub const STAGE4_PITCH: usize = 4;
pub const STAGE4_YAW: usize = 5;
pub const STAGE5_PITCH: usize = 6;
pub const STAGE5_YAW: usize = 7;
pub const WRIST_ROLL: usize = 8;
pub const WRIST_PITCH: usize = 9;

pub const DOF_NAMES: [&str; NUM_DOFS] = [
    "mast_rotation",
    "stage1_pitch",
    "stage2_pitch",
    "stage3_pitch",
    "stage4_pitch",
    "stage4_yaw",
    "stage5_pitch",
    "stage5_yaw",
    "wrist_roll",
    "wrist_pitch",
];

/// The ten independent joint parameters of the arm, in degrees.
///
/// Order: mast rotation, stage 1-3 pitches, stage 4 pitch and yaw, stage 5
/// pitch and yaw, wrist roll, wrist pitch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DofVector(pub [f64; NUM_DOFS]);

impl DofVector {
    pub const ZERO: DofVector = DofVector([0.0; NUM_DOFS]);

    pub fn new(values: [f64; NUM_DOFS]) -> Self {
        DofVector(values)
    }

    pub fn as_array(&self) -> &[f64; NUM_DOFS] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Same vector with the mast rotation replaced.
    pub fn with_mast(mut self, degrees: f64) -> Self {
        self.0[MAST] = degrees;
        self
    }

    /// Euclidean norm of the difference, in degrees.
    pub fn distance(&self, other: &DofVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::ops::Index<usize> for DofVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl std::ops::IndexMut<usize> for DofVector {
    fn index_mut(&mut self, index: usize) -> &mut f64 {
        &mut self.0[index]
    }
}

impl From<[f64; NUM_DOFS]> for DofVector {
    fn from(values: [f64; NUM_DOFS]) -> Self {
        DofVector(values)
    }
}

/// Inclusive `[min, max]` range per independent DOF, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JointLimits {
    pub mast_rotation: [f64; 2],
    pub stage1_pitch: [f64; 2],
    pub stage2_pitch: [f64; 2],
    pub stage3_pitch: [f64; 2],
    pub stage4_pitch: [f64; 2],
    pub stage4_yaw: [f64; 2],
    pub stage5_pitch: [f64; 2],
    pub stage5_yaw: [f64; 2],
    pub wrist_roll: [f64; 2],
    pub wrist_pitch: [f64; 2],
}

impl Default for JointLimits {
    fn default() -> Self {
        JointLimits {
            mast_rotation: [-180.0, 180.0],
            stage1_pitch: [0.0, 45.0],
            stage2_pitch: [0.0, 45.0],
            stage3_pitch: [0.0, 45.0],
            stage4_pitch: [-30.0, 30.0],
            stage4_yaw: [-15.0, 15.0],
            stage5_pitch: [-30.0, 30.0],
            stage5_yaw: [-30.0, 30.0],
            wrist_roll: [-180.0, 180.0],
            wrist_pitch: [-60.0, 60.0],
        }
    }
}

impl JointLimits {
    fn as_array(&self) -> [[f64; 2]; NUM_DOFS] {
        [
            self.mast_rotation,
            self.stage1_pitch,
            self.stage2_pitch,
            self.stage3_pitch,
            self.stage4_pitch,
            self.stage4_yaw,
            self.stage5_pitch,
            self.stage5_yaw,
            self.wrist_roll,
            self.wrist_pitch,
        ]
    }

    /// `(min, max)` for one DOF.
    pub fn range(&self, dof: usize) -> (f64, f64) {
        let [lo, hi] = self.as_array()[dof];
        (lo, hi)
    }

    pub fn ranges(&self) -> [(f64, f64); NUM_DOFS] {
        self.as_array().map(|[lo, hi]| (lo, hi))
    }

    pub fn contains(&self, q: &DofVector) -> bool {
        self.ranges()
            .iter()
            .zip(q.iter())
            .all(|(&(lo, hi), v)| v >= lo && v <= hi)
    }
}

/// Weights of the optional customer-constraint terms. All zero disables them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintWeights {
    /// Weight on the summed hard-stop proximity, per degree.
    pub hard_stop: f64,
    /// Clearance (degrees) a joint should keep from either limit.
    pub hard_stop_margin: f64,
    /// Weight on the summed height of the gripper above lower arm points, per foot.
    pub lowest_point: f64,
}

impl ConstraintWeights {
    pub fn is_zero(&self) -> bool {
        self.hard_stop == 0.0 && self.lowest_point == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmModel {
    pub mast_length: f64,
    pub stage123_segment_length: f64,
    pub stage4_coupling_count: usize,
    pub stage4_segment_length: f64,
    pub stage5_coupling_count: usize,
    pub stage5_segment_length: f64,
    pub wrist_gripper_length: f64,
    pub limits: JointLimits,
}

impl Default for ArmModel {
    fn default() -> Self {
        ArmModel {
            mast_length: 13.0,
            stage123_segment_length: 11.0,
            stage4_coupling_count: 3,
            stage4_segment_length: 1.5,
            stage5_coupling_count: 3,
            stage5_segment_length: 1.5,
            wrist_gripper_length: 1.5,
            limits: JointLimits::default(),
        }
    }
}

/// Positions of every joint/coupling boundary, base first, gripper tip last.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmPose {
    pub points: Vec<Point>,
}

impl ArmPose {
    pub fn end_effector(&self) -> Point {
        *self.points.last().expect("pose always has points")
    }

    /// Lowest z over all points.
    pub fn min_z(&self) -> f64 {
        self.points.iter().map(|p| p.z).fold(f64::INFINITY, f64::min)
    }
}

impl ArmModel {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("mast_length", self.mast_length),
            ("stage123_segment_length", self.stage123_segment_length),
            ("stage4_segment_length", self.stage4_segment_length),
            ("stage5_segment_length", self.stage5_segment_length),
            ("wrist_gripper_length", self.wrist_gripper_length),
        ];
        for (name, len) in lengths {
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {len}")));
            }
        }
        if self.stage4_coupling_count == 0 || self.stage5_coupling_count == 0 {
            return Err(Error::InvalidConfig("coupling counts must be >= 1".into()));
        }
        for (dof, (lo, hi)) in self.limits.ranges().into_iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "limit for {} must satisfy min < max, got [{lo}, {hi}]",
                    DOF_NAMES[dof]
                )));
            }
        }
        Ok(())
    }

    /// Lengths of the rigid members in base-to-tip order.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let mut out = vec![self.mast_length];
        out.extend(std::iter::repeat_n(self.stage123_segment_length, 3));
        out.extend(std::iter::repeat_n(self.stage4_segment_length, self.stage4_coupling_count));
        out.extend(std::iter::repeat_n(self.stage5_segment_length, self.stage5_coupling_count));
        out.push(self.wrist_gripper_length);
        out
    }

    /// Total length of the chain; no target farther than this from the base is reachable.
    pub fn max_reach(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Length of everything below the mast. Bounds reach measured from the mast tip.
    pub fn reach_below_mast(&self) -> f64 {
        self.max_reach() - self.mast_length
    }

    /// Number of physical joints after stage coupling replication.
    pub fn physical_joint_count(&self) -> usize {
        1 + 3 + 2 * self.stage4_coupling_count + 2 * self.stage5_coupling_count + 2
    }

    /// Replicates the stage-4 and stage-5 bend over every coupling of the stage.
    pub fn expand_dofs(&self, q: &DofVector) -> Vec<f64> {
        expand(q, self.stage4_coupling_count, self.stage5_coupling_count)
    }

    /// Ranges of the physical joints, in the order produced by [`Self::expand_dofs`].
    pub fn physical_limits(&self) -> Vec<(f64, f64)> {
        let r = self.limits.ranges();
        let mut out = vec![r[MAST], r[STAGE1_PITCH], r[STAGE2_PITCH], r[STAGE3_PITCH]];
        for _ in 0..self.stage4_coupling_count {
            out.push(r[STAGE4_PITCH]);
            out.push(r[STAGE4_YAW]);
        }
        for _ in 0..self.stage5_coupling_count {
            out.push(r[STAGE5_PITCH]);
            out.push(r[STAGE5_YAW]);
        }
        out.push(r[WRIST_ROLL]);
        out.push(r[WRIST_PITCH]);
        out
    }

    /// Clips every component into its limit range.
    pub fn clamp(&self, q: &DofVector) -> DofVector {
        let mut out = *q;
        for (dof, (lo, hi)) in self.limits.ranges().into_iter().enumerate() {
            out[dof] = out[dof].clamp(lo, hi);
        }
        out
    }

    pub fn check_limits(&self, q: &DofVector) -> Result<()> {
        for (dof, (lo, hi)) in self.limits.ranges().into_iter().enumerate() {
            let value = q[dof];
            if !(value >= lo && value <= hi) {
                return Err(Error::LimitViolation {
                    dof,
                    value,
                    min: lo,
                    max: hi,
                });
            }
        }
        Ok(())
    }

    pub fn forward_kinematics(&self, q: &DofVector) -> Result<ArmPose> {
        self.check_limits(q)?;
        Ok(self.pose_unchecked(q))
    }

    pub fn end_effector(&self, q: &DofVector) -> Result<Point> {
        self.check_limits(q)?;
        Ok(self.end_effector_unchecked(q))
    }

    pub(crate) fn pose_unchecked(&self, q: &DofVector) -> ArmPose {
        let mut points = Vec::with_capacity(self.segment_lengths().len() + 1);
        points.push(Point::origin());
        self.walk_chain(q, |frame| points.push(frame * Point::origin()));
        ArmPose { points }
    }

    pub(crate) fn end_effector_unchecked(&self, q: &DofVector) -> Point {
        let mut tip = Point::origin();
        self.walk_chain(q, |frame| tip = frame * Point::origin());
        tip
    }

    /// Composes the chain and reports the frame at the distal end of every member.
    fn walk_chain(&self, q: &DofVector, mut visit: impl FnMut(&Isometry3<f64>)) {
        let z = Vector3::z_axis();
        let neg_y = -Vector3::y_axis();
        let x = Vector3::x_axis();
        let down = |len: f64| Translation3::new(0.0, 0.0, -len);
        let rot = |axis, deg: f64| UnitQuaternion::from_axis_angle(&axis, deg.to_radians());

        let mut frame = Isometry3::from_parts(Translation3::identity(), rot(z, q[MAST]));
        frame *= down(self.mast_length);
        visit(&frame);

        for dof in [STAGE1_PITCH, STAGE2_PITCH, STAGE3_PITCH] {
            frame *= rot(neg_y, q[dof]);
            frame *= down(self.stage123_segment_length);
            visit(&frame);
        }

        let coupled = [
            (STAGE4_PITCH, STAGE4_YAW, self.stage4_coupling_count, self.stage4_segment_length),
            (STAGE5_PITCH, STAGE5_YAW, self.stage5_coupling_count, self.stage5_segment_length),
        ];
        for (pitch, yaw, count, len) in coupled {
            let bend = rot(neg_y, q[pitch]) * rot(x, q[yaw]);
            for _ in 0..count {
                frame *= bend;
                frame *= down(len);
                visit(&frame);
            }
        }

        frame *= rot(z, q[WRIST_ROLL]) * rot(neg_y, q[WRIST_PITCH]);
        frame *= down(self.wrist_gripper_length);
        visit(&frame);
    }

    /// Per-DOF hard-stop proximity: `max(0, margin - distance to the nearer limit)`.
    pub fn hard_stop_terms(&self, q: &DofVector, margin: f64) -> [f64; NUM_DOFS] {
        let ranges = self.limits.ranges();
        std::array::from_fn(|dof| {
            let (lo, hi) = ranges[dof];
            let clearance = (q[dof] - lo).min(hi - q[dof]);
            (margin - clearance).max(0.0)
        })
    }

    /// Weighted customer-constraint cost of a configuration and its pose.
    pub fn constraint_penalties(
        &self,
        q: &DofVector,
        pose: &ArmPose,
        weights: &ConstraintWeights,
    ) -> f64 {
        let mut total = 0.0;
        if weights.hard_stop != 0.0 {
            let stops: f64 = self.hard_stop_terms(q, weights.hard_stop_margin).iter().sum();
            total += weights.hard_stop * stops;
        }
        if weights.lowest_point != 0.0 {
            total += weights.lowest_point * lowest_point_violation(pose);
        }
        total
    }

    /// Stable hash of the model contents, used to tie tables to the model they were learned on.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(self).expect("model serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Sum over pose points of how far the gripper sits above them, in feet.
pub fn lowest_point_violation(pose: &ArmPose) -> f64 {
    let ee_z = pose.end_effector().z;
    pose.points.iter().map(|p| (ee_z - p.z).max(0.0)).sum()
}

fn expand(q: &DofVector, stage4: usize, stage5: usize) -> Vec<f64> {
    let mut out = vec![q[MAST], q[STAGE1_PITCH], q[STAGE2_PITCH], q[STAGE3_PITCH]];
    for _ in 0..stage4 {
        out.extend([q[STAGE4_PITCH], q[STAGE4_YAW]]);
    }
    for _ in 0..stage5 {
        out.extend([q[STAGE5_PITCH], q[STAGE5_YAW]]);
    }
    out.extend([q[WRIST_ROLL], q[WRIST_PITCH]]);
    out
}
