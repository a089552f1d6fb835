//! Constant-curvature kinematics of a joint.
//!
//! A joint bends as a circular arc of fixed length `L`, parameterised by the
//! bending-plane orientation `φ` and the bending angle `θ`. Positive `θ` bends
//! the tip toward the direction `(cos φ, sin φ, 0)` of the base frame. With
//! the actuator layout centred on +Y, `φ = +90°` bends toward +Y (flexion),
//! `φ = −90°` toward −Y (extension) and `φ = 0` / `180°` are lateral (waggle).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, MatrixXx2, Vector3};

use crate::config::{ActuatorAnchor, JointGeometry};
use crate::series::{one_minus_cos, sinc, sinc_d1, sinc_d2, versc, versc_d1, versc_d2};

/// Generalised coordinates of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointConfig {
    pub phi: f64,
    pub theta: f64,
}

impl JointConfig {
    /// Builds a configuration with `φ` wrapped into `(−π, π]`.
    pub fn new(phi: f64, theta: f64) -> Self {
        Self {
            phi: normalize_angle(phi),
            theta,
        }
    }

    pub fn straight() -> Self {
        Self::default()
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Rigid transform from the base panel to the moving panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// `self ∘ other`: express `other` (given in the frame of `self`'s tip)
    /// in `self`'s base frame.
    pub fn then(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

/// Rotation part of the constant-curvature transform.
fn cc_rotation(phi: f64, theta: f64) -> Matrix3<f64> {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let omc = one_minus_cos(theta);
    Matrix3::new(
        cp * cp * ct + sp * sp,
        -cp * sp * omc,
        cp * st,
        -cp * sp * omc,
        sp * sp * ct + cp * cp,
        sp * st,
        -cp * st,
        -sp * st,
        ct,
    )
}

/// `∂R/∂φ` and `∂R/∂θ`.
fn cc_rotation_partials(phi: f64, theta: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let omc = one_minus_cos(theta);
    let d_phi = Matrix3::new(
        2.0 * sp * cp * omc,
        -(cp * cp - sp * sp) * omc,
        -sp * st,
        -(cp * cp - sp * sp) * omc,
        -2.0 * sp * cp * omc,
        cp * st,
        sp * st,
        -cp * st,
        0.0,
    );
    let d_theta = Matrix3::new(
        -cp * cp * st,
        -cp * sp * st,
        cp * ct,
        -cp * sp * st,
        -sp * sp * st,
        sp * ct,
        -cp * ct,
        -sp * ct,
        -st,
    );
    (d_phi, d_theta)
}

fn tip_position(phi: f64, theta: f64, arc_length: f64) -> Vector3<f64> {
    let (sp, cp) = phi.sin_cos();
    let radial = arc_length * versc(theta);
    Vector3::new(cp * radial, sp * radial, arc_length * sinc(theta))
}

/// Constant-curvature transform `T_s` of a joint of arc length `arc_length`.
pub fn cc_transform(q: JointConfig, arc_length: f64) -> Pose {
    Pose {
        rotation: cc_rotation(q.phi, q.theta),
        translation: tip_position(q.phi, q.theta, arc_length),
    }
}

/// Length `‖T_s b_i − b_i‖` of one actuator.
pub fn actuator_length(q: JointConfig, anchor: &ActuatorAnchor, arc_length: f64) -> f64 {
    actuator_span(q, anchor, arc_length).norm()
}

fn actuator_span(q: JointConfig, anchor: &ActuatorAnchor, arc_length: f64) -> Vector3<f64> {
    let pose = cc_transform(q, arc_length);
    pose.transform_point(&anchor.base_point) - anchor.base_point
}

pub fn actuator_lengths(q: JointConfig, anchors: &[ActuatorAnchor], arc_length: f64) -> Vec<f64> {
    anchors
        .iter()
        .map(|a| actuator_length(q, a, arc_length))
        .collect()
}

/// Actuator Jacobian `J_a`: row `i` is `(∂l_i/∂φ, ∂l_i/∂θ)`.
///
/// Differentiates the closed-form lengths analytically; at `θ = 0` the φ
/// column is exactly zero.
pub fn actuator_jacobian(
    q: JointConfig,
    anchors: &[ActuatorAnchor],
    arc_length: f64,
) -> MatrixXx2<f64> {
    let (phi, theta) = (q.phi, q.theta);
    let rot = cc_rotation(phi, theta);
    let (d_rot_phi, d_rot_theta) = cc_rotation_partials(phi, theta);
    let (sp, cp) = phi.sin_cos();
    let p = tip_position(phi, theta, arc_length);
    let radial = arc_length * versc(theta);
    let dp_phi = Vector3::new(-sp * radial, cp * radial, 0.0);
    let d_radial = arc_length * versc_d1(theta);
    let dp_theta = Vector3::new(cp * d_radial, sp * d_radial, arc_length * sinc_d1(theta));

    let mut jac = MatrixXx2::zeros(anchors.len());
    for (i, a) in anchors.iter().enumerate() {
        let b = a.base_point;
        let span = rot * b + p - b;
        let len = span.norm();
        if len == 0.0 {
            continue;
        }
        let dv_phi = d_rot_phi * b + dp_phi;
        let dv_theta = d_rot_theta * b + dp_theta;
        jac[(i, 0)] = span.dot(&dv_phi) / len;
        jac[(i, 1)] = span.dot(&dv_theta) / len;
    }
    jac
}

/// Distance `d = (L/θ) sin(θ/2)` from the base to the lumped centre of mass,
/// which lies at the midpoint of the chord.
pub fn com_distance(theta: f64, arc_length: f64) -> f64 {
    0.5 * arc_length * sinc(0.5 * theta)
}

/// Position, velocity and acceleration of the arc tip in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMotion {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

impl PointMotion {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            position: self.position * k,
            velocity: self.velocity * k,
            acceleration: self.acceleration * k,
        }
    }
}

/// Tip motion for given rates and accelerations of `(φ, θ)`. The lumped
/// centre of mass is this scaled by one half.
pub fn tip_motion(
    q: JointConfig,
    rates: [f64; 2],
    accels: [f64; 2],
    arc_length: f64,
) -> PointMotion {
    let (phi, theta) = (q.phi, q.theta);
    let [phid, thd] = rates;
    let [phidd, thdd] = accels;
    let (sp, cp) = phi.sin_cos();
    let l = arc_length;

    // Cylindrical coordinates: radius rho = L·versc(θ), height h = L·sinc(θ).
    let rho = l * versc(theta);
    let rho_d = l * versc_d1(theta) * thd;
    let rho_dd = l * (versc_d2(theta) * thd * thd + versc_d1(theta) * thdd);
    let h = l * sinc(theta);
    let h_d = l * sinc_d1(theta) * thd;
    let h_dd = l * (sinc_d2(theta) * thd * thd + sinc_d1(theta) * thdd);

    let v_r = rho_d;
    let v_t = rho * phid;
    let a_r = rho_dd - rho * phid * phid;
    let a_t = rho * phidd + 2.0 * rho_d * phid;

    PointMotion {
        position: Vector3::new(rho * cp, rho * sp, h),
        velocity: Vector3::new(v_r * cp - v_t * sp, v_r * sp + v_t * cp, h_d),
        acceleration: Vector3::new(a_r * cp - a_t * sp, a_r * sp + a_t * cp, h_dd),
    }
}

/// Errors from chain composition.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KinematicsError {
    #[error("{configs} joint configurations but {geometries} geometries")]
    LengthMismatch { configs: usize, geometries: usize },
}

/// Base-to-tip pose of joints in series. An empty chain is the identity.
pub fn compose_chain(
    configs: &[JointConfig],
    geoms: &[JointGeometry],
) -> Result<Pose, KinematicsError> {
    if configs.len() != geoms.len() {
        return Err(KinematicsError::LengthMismatch {
            configs: configs.len(),
            geometries: geoms.len(),
        });
    }
    Ok(configs
        .iter()
        .zip(geoms)
        .fold(Pose::identity(), |acc, (q, g)| {
            acc.then(&cc_transform(*q, g.arc_length))
        }))
}
