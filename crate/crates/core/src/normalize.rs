//! Head-pose estimation and rigid normalization of landmark frames.
//!
//! The face plane passes through the two eye centers and the nose tip. Its
//! normal, measured against the coordinate axes, gives pitch and yaw; roll is
//! read from the eye line once pitch and yaw are undone. Normalization then
//! centers the frame on the eye midpoint, removes the rotation and scales the
//! interocular distance to 100 units.
//!
//! The pose model is `observed = Ry(yaw) · Rx(pitch) · Rz(roll) · canonical`
//! (column vectors, relative to the eye midpoint), with a canonical face lying
//! in a `z = const` plane. Poses produced by that model are recovered exactly;
//! for arbitrary non-rigid input the angles are an approximation.
//!
//! Without depth only roll, translation and scale are observable, so planar
//! tracks are normalized with pitch and yaw fixed at zero.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Vector3};

use crate::data::{points, Dimensionality, FacePoints, Landmark, LandmarkFrame, LandmarkTrack, NUM_POINTS};
use crate::error::{Error, Result};

/// Target distance between the two eye centers after normalization.
pub const INTEROCULAR_DISTANCE: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeadPose {
    /// Pitch relative to the first frame of the sequence.
    pub theta_x_prime: f64,
    pub theta_y: f64,
    pub theta_z: f64,
}

impl HeadPose {
    pub const FRONTAL: HeadPose = HeadPose {
        theta_x_prime: 0.0,
        theta_y: 0.0,
        theta_z: 0.0,
    };
}

/// A frame expressed in the face-centered, scale-normalized coordinate system.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedFrame {
    frame_index: u32,
    points: [Vector3<f64>; NUM_POINTS],
}

impl NormalizedFrame {
    pub fn frame_index(&self) -> u32 {
        self.frame_index
    }

    pub fn points(&self) -> &[Vector3<f64>; NUM_POINTS] {
        &self.points
    }

    pub fn interocular(&self) -> f64 {
        let (c1, c2) = eye_centers(self);
        (c2 - c1).norm()
    }

    /// Converts back into a landmark frame, e.g. for writing `.norm.csv` dumps.
    pub fn to_landmark_frame(&self, dim: Dimensionality) -> Result<LandmarkFrame> {
        let pts = self
            .points
            .iter()
            .map(|p| match dim {
                Dimensionality::Planar => Landmark::planar(p.x, p.y),
                Dimensionality::Spatial => Landmark::spatial(p.x, p.y, p.z),
            })
            .collect();
        LandmarkFrame::new(self.frame_index, pts)
    }
}

impl FacePoints for NormalizedFrame {
    fn position(&self, index: usize) -> Vector3<f64> {
        self.points[index - 1]
    }
}

/// Eye centers `c1 = (l1 + l3) / 2` and `c2 = (l4 + l6) / 2`.
pub fn eye_centers(frame: &impl FacePoints) -> (Vector3<f64>, Vector3<f64>) {
    let c1 = (frame.position(points::LEFT_EYE_OUTER) + frame.position(points::LEFT_EYE_INNER)) / 2.0;
    let c2 = (frame.position(points::RIGHT_EYE_INNER) + frame.position(points::RIGHT_EYE_OUTER)) / 2.0;
    (c1, c2)
}

/// Unit normal of the plane through the nose tip and both eye centers,
/// oriented towards `+z`.
pub fn face_normal(frame: &impl FacePoints) -> Result<Vector3<f64>> {
    let (c1, c2) = eye_centers(frame);
    let g = frame.position(points::NOSE_TIP);
    let (to_c2, to_c1) = (c2 - g, c1 - g);
    let n = to_c2.cross(&to_c1);
    let scale = to_c2.norm() * to_c1.norm();
    if scale == 0.0 || n.norm() <= 1e-12 * scale {
        return Err(Error::Degenerate("nose tip and eye centers are collinear".into()));
    }
    let n = n.normalize();
    Ok(if n.z < 0.0 { -n } else { n })
}

/// Angles between `normal` and the unit `x`, `y` and `z` axes.
pub fn axis_angles(normal: &Vector3<f64>) -> [f64; 3] {
    let n = normal.normalize();
    [n.x, n.y, n.z].map(|c| c.clamp(-1.0, 1.0).acos())
}

/// Absolute pitch of the face plane (no baseline subtracted).
pub fn absolute_pitch(frame: &impl FacePoints) -> Result<f64> {
    let [_, from_y, _] = axis_angles(&face_normal(frame)?);
    Ok(from_y - FRAC_PI_2)
}

/// Full pose of a 3D frame; `pitch_baseline` is the absolute pitch of the
/// sequence's first (frontal) frame.
pub fn head_pose_3d(frame: &LandmarkFrame, pitch_baseline: f64) -> Result<HeadPose> {
    if frame.dimensionality() != Dimensionality::Spatial {
        return Err(Error::InvalidParameter(
            "head_pose_3d needs landmarks with depth".into(),
        ));
    }
    let n = face_normal(frame)?;
    let [_, from_y, _] = axis_angles(&n);
    let pitch = from_y - FRAC_PI_2;
    let yaw = n.x.atan2(n.z);

    let (c1, c2) = eye_centers(frame);
    let eye_line = rot_x(-pitch) * rot_y(-yaw) * (c2 - c1);
    let roll = eye_line.y.atan2(eye_line.x);

    Ok(HeadPose {
        theta_x_prime: wrap_angle(pitch - pitch_baseline),
        theta_y: yaw,
        theta_z: roll,
    })
}

/// Planar pose: roll from the eye line, pitch and yaw fixed at zero.
pub fn head_pose_2d(frame: &impl FacePoints) -> HeadPose {
    let (c1, c2) = eye_centers(frame);
    HeadPose {
        theta_x_prime: 0.0,
        theta_y: 0.0,
        theta_z: (c2.y - c1.y).atan2(c2.x - c1.x),
    }
}

pub fn normalize_frame(frame: &LandmarkFrame, pose: &HeadPose) -> Result<NormalizedFrame> {
    let (c1, c2) = eye_centers(frame);
    let interocular = (c2 - c1).norm();
    if interocular <= f64::EPSILON {
        return Err(Error::Degenerate(format!(
            "frame {}: zero interocular distance",
            frame.frame_index()
        )));
    }
    let origin = (c1 + c2) / 2.0;
    let rotation = rot_z(-pose.theta_z) * rot_x(-pose.theta_x_prime) * rot_y(-pose.theta_y);
    let scale = INTEROCULAR_DISTANCE / interocular;

    let mut pts = [Vector3::zeros(); NUM_POINTS];
    for (dst, src) in pts.iter_mut().zip(frame.points()) {
        *dst = rotation * (src.to_vector() - origin) * scale;
    }
    Ok(NormalizedFrame {
        frame_index: frame.frame_index(),
        points: pts,
    })
}

/// Normalizes every frame. 3D tracks take their pitch baseline from the first
/// frame; planar tracks use [`head_pose_2d`].
pub fn normalize_sequence(track: &LandmarkTrack) -> Result<Vec<NormalizedFrame>> {
    let first = track
        .frames
        .first()
        .ok_or_else(|| Error::InvalidLandmarks("empty landmark track".into()))?;
    match track.dimensionality {
        Dimensionality::Planar => track
            .frames
            .iter()
            .map(|f| normalize_frame(f, &head_pose_2d(f)))
            .collect(),
        Dimensionality::Spatial => {
            let baseline = absolute_pitch(first)?;
            track
                .frames
                .iter()
                .map(|f| normalize_frame(f, &head_pose_3d(f, baseline)?))
                .collect()
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}
