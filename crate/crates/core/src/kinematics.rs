//! Denavit-Hartenberg transforms and closed-form kinematics for one 3-DOF leg.
//!
//! Joint 1 (the shoulder) yaws about the vertical axis of the shoulder frame;
//! joints 2 and 3 pitch inside the vertical plane selected by joint 1. The
//! D-H table used throughout is
//!
//! | joint | twist  | offset | length |
//! |-------|--------|--------|--------|
//! | 1     | +pi/2  | 0      | l1     |
//! | 2     | 0      | 0      | l2     |
//! | 3     | 0      | 0      | l3     |
//!
//! Angles are radians and lengths are meters everywhere in this module.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on the arccos domain check so that exact workspace-boundary
/// targets survive rounding.
pub const REACH_TOLERANCE: f64 = 1e-12;

/// Tolerance used when validating rotation blocks of freshly built transforms.
pub const TRANSFORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("target outside the leg workspace (cos q3 = {cos_q3})")]
    Unreachable { cos_q3: f64 },
    #[error("target lies on the shoulder axis, joint 1 is undefined")]
    ShoulderSingularity,
    #[error("joint {joint} angle {angle} rad outside limits [{min}, {max}]")]
    JointLimit {
        joint: usize,
        angle: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid leg geometry: {0}")]
    InvalidGeometry(String),
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(q: f64) -> f64 {
    if q > -PI && q <= PI {
        return q;
    }
    let wrapped = q.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// One row of a D-H table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhParams {
    pub joint_angle: f64,
    pub link_twist: f64,
    pub link_offset: f64,
    pub link_length: f64,
}

impl DhParams {
    /// Builds a row with the joint angle wrapped into (-pi, pi].
    pub fn new(joint_angle: f64, link_twist: f64, link_offset: f64, link_length: f64) -> Self {
        Self {
            joint_angle: normalize_angle(joint_angle),
            link_twist,
            link_offset,
            link_length,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.joint_angle.is_finite()
            && self.link_twist.is_finite()
            && self.link_offset.is_finite()
            && self.link_length.is_finite()
    }
}

/// Rigid-body transform stored as a 4x4 matrix with bottom row (0, 0, 0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousTransform(Matrix4<f64>);

impl HomogeneousTransform {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self::checked(m)
    }

    fn checked(m: Matrix4<f64>) -> Self {
        let t = Self(m);
        debug_assert!(
            t.is_valid(TRANSFORM_TOLERANCE),
            "transform violates rigid-body invariants: {m}"
        );
        t
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Largest element of |R^T R - I|.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rotation();
        (r.transpose() * r - Matrix3::identity()).amax()
    }

    /// Bottom row exact, rotation block orthonormal with determinant +1.
    pub fn is_valid(&self, tol: f64) -> bool {
        let bottom = self.0.row(3);
        bottom[0] == 0.0
            && bottom[1] == 0.0
            && bottom[2] == 0.0
            && bottom[3] == 1.0
            && self.orthonormality_error() <= tol
            && (self.rotation().determinant() - 1.0).abs() <= tol
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        let t = -(rt * self.translation());
        Self::from_parts(rt, t)
    }

    pub fn transform_point(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }
}

/// The link transform from frame i-1 to frame i.
pub fn dh_transform(p: &DhParams) -> HomogeneousTransform {
    let (sq, cq) = p.joint_angle.sin_cos();
    let (sa, ca) = p.link_twist.sin_cos();
    let a = p.link_length;
    #[rustfmt::skip]
    let m = Matrix4::new(
        cq, -sq * ca,  sq * sa, a * cq,
        sq,  cq * ca, -cq * sa, a * sq,
        0.0,      sa,       ca, p.link_offset,
        0.0,     0.0,      0.0, 1.0,
    );
    HomogeneousTransform::checked(m)
}

/// Chain product `a * b`: maps frame-b coordinates through b then a.
pub fn compose(a: &HomogeneousTransform, b: &HomogeneousTransform) -> HomogeneousTransform {
    let mut m = a.0 * b.0;
    // the product of two exact bottom rows is exact, but pin it anyway
    m[(3, 0)] = 0.0;
    m[(3, 1)] = 0.0;
    m[(3, 2)] = 0.0;
    m[(3, 3)] = 1.0;
    HomogeneousTransform::checked(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimit {
    pub min: f64,
    pub max: f64,
}

impl JointLimit {
    pub const FULL: JointLimit = JointLimit { min: -PI, max: PI };

    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.min - REACH_TOLERANCE && q <= self.max + REACH_TOLERANCE
    }
}

/// Link lengths and joint limits of one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegGeometry {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub limits: [JointLimit; 3],
}

impl LegGeometry {
    pub fn new(l1: f64, l2: f64, l3: f64, limits: [JointLimit; 3]) -> Result<Self, KinematicsError> {
        let g = Self { l1, l2, l3, limits };
        g.validate()?;
        Ok(g)
    }

    /// Geometry whose joints may take any angle.
    pub fn unconstrained(l1: f64, l2: f64, l3: f64) -> Result<Self, KinematicsError> {
        Self::new(l1, l2, l3, [JointLimit::FULL; 3])
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (name, l) in [("l1", self.l1), ("l2", self.l2), ("l3", self.l3)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(KinematicsError::InvalidGeometry(format!(
                    "{name} must be positive and finite, got {l}"
                )));
            }
        }
        for (i, lim) in self.limits.iter().enumerate() {
            if !(lim.min.is_finite() && lim.max.is_finite()) || lim.min >= lim.max || lim.min < -PI || lim.max > PI {
                return Err(KinematicsError::InvalidGeometry(format!(
                    "joint {} limit [{}, {}] must be a non-empty interval inside (-pi, pi]",
                    i + 1,
                    lim.min,
                    lim.max
                )));
            }
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.l1 + self.l2 + self.l3
    }

    /// The D-H rows of this leg at joint angles `q`.
    pub fn dh_params(&self, q: &JointAngles) -> [DhParams; 3] {
        [
            DhParams::new(q.q1, FRAC_PI_2, 0.0, self.l1),
            DhParams::new(q.q2, 0.0, 0.0, self.l2),
            DhParams::new(q.q3, 0.0, 0.0, self.l3),
        ]
    }

    pub fn check_limits(&self, q: &JointAngles) -> Result<(), KinematicsError> {
        for (i, (angle, lim)) in q.as_array().into_iter().zip(self.limits).enumerate() {
            if !lim.contains(angle) {
                return Err(KinematicsError::JointLimit {
                    joint: i + 1,
                    angle,
                    min: lim.min,
                    max: lim.max,
                });
            }
        }
        Ok(())
    }
}

impl Default for LegGeometry {
    /// Desk-scale leg: 5 cm coxa, 10 cm femur, 10 cm tibia.
    fn default() -> Self {
        Self {
            l1: 0.05,
            l2: 0.10,
            l3: 0.10,
            limits: [
                JointLimit::new(-75f64.to_radians(), 75f64.to_radians()),
                JointLimit::new(-90f64.to_radians(), 90f64.to_radians()),
                JointLimit::new(-170f64.to_radians(), 10f64.to_radians()),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointAngles {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl JointAngles {
    pub fn new(q1: f64, q2: f64, q3: f64) -> Self {
        Self { q1, q2, q3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.q1, self.q2, self.q3]
    }

    pub fn normalized(&self) -> Self {
        Self::new(
            normalize_angle(self.q1),
            normalize_angle(self.q2),
            normalize_angle(self.q3),
        )
    }
}

/// Foot position in the leg's shoulder frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FootPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FootPosition {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &FootPosition) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Selects the sign of the square root in the joint-2 solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IkBranch {
    /// Positive root; the knee sits below the hip-to-foot line (q3 >= 0).
    KneeDown,
    /// Negative root; the knee sits above the hip-to-foot line (q3 <= 0).
    KneeUp,
}

impl IkBranch {
    pub const BOTH: [IkBranch; 2] = [IkBranch::KneeDown, IkBranch::KneeUp];

    fn sign(self) -> f64 {
        match self {
            IkBranch::KneeDown => 1.0,
            IkBranch::KneeUp => -1.0,
        }
    }
}

/// Foot pose of the leg: the full shoulder-to-foot transform and its translation.
pub fn forward_kinematics(g: &LegGeometry, q: &JointAngles) -> (HomogeneousTransform, FootPosition) {
    let [p1, p2, p3] = g.dh_params(q);
    let t = compose(&compose(&dh_transform(&p1), &dh_transform(&p2)), &dh_transform(&p3));
    let foot = FootPosition::from_vector(t.translation());
    (t, foot)
}

/// Intermediates of the closed-form solution for a target.
struct IkTerms {
    planar: f64,
    a: f64,
    b: f64,
    c: f64,
    cos_q3: f64,
}

fn ik_terms(g: &LegGeometry, t: &FootPosition) -> IkTerms {
    let planar = t.x.hypot(t.y);
    let r = planar - g.l1;
    let a = 2.0 * g.l2 * r;
    let b = 2.0 * t.z * g.l2;
    let c = r * r + t.z * t.z + g.l2 * g.l2 - g.l3 * g.l3;
    let cos_q3 = (c - 2.0 * g.l2 * g.l2) / (2.0 * g.l2 * g.l3);
    IkTerms {
        planar,
        a,
        b,
        c,
        cos_q3,
    }
}

/// True iff the target is off the shoulder axis and inside the annular
/// workspace of the two pitch links. Joint limits are not considered.
pub fn reachable(g: &LegGeometry, target: &FootPosition) -> bool {
    if !target.is_finite() {
        return false;
    }
    let terms = ik_terms(g, target);
    terms.planar > 0.0 && terms.cos_q3.abs() <= 1.0 + REACH_TOLERANCE
}

/// Closed-form joint angles placing the foot at `target`.
///
/// Joint 1 comes from the planar bearing of the target; joint 2 from the
/// `a cos q2 + b sin q2 = c` relation with the branch choosing the root;
/// joint 3 from the law of cosines, signed to match the branch.
pub fn inverse_kinematics(
    g: &LegGeometry,
    target: &FootPosition,
    branch: IkBranch,
) -> Result<JointAngles, KinematicsError> {
    let IkTerms {
        planar,
        a,
        b,
        c,
        cos_q3,
    } = ik_terms(g, target);
    if planar == 0.0 {
        return Err(KinematicsError::ShoulderSingularity);
    }
    if !(cos_q3.abs() <= 1.0 + REACH_TOLERANCE) {
        return Err(KinematicsError::Unreachable { cos_q3 });
    }
    let s = branch.sign();
    let q1 = target.y.atan2(target.x);
    let disc = (a * a + b * b - c * c).max(0.0).sqrt();
    let q2 = c.atan2(s * disc) - a.atan2(b);
    let q3 = s * cos_q3.clamp(-1.0, 1.0).acos();
    let q = JointAngles::new(q1, q2, q3).normalized();
    g.check_limits(&q)?;
    Ok(q)
}
