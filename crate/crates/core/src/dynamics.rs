//! Lagrangian dynamics of one lumped joint in the coordinates `q = (φ, θ)`.
//!
//! The equation of motion is assembled as
//!
//! ```text
//! M(q) q̈ + c(q, q̇) + D(q) q̇ + G(q) = τ + K(q, P)
//! ```
//!
//! `K` is the net pneumatic-plus-elastic moment (actuator moment minus the
//! vertebra's restoring moment), so it acts as a generalised force: it is
//! negative for `θ > 0` on an unpressurised joint. `D` is positive
//! semi-definite and `τ` is any external generalised torque (zero for
//! pressure-driven motion). `c` already carries the rate products.

use nalgebra::{Matrix2, MatrixXx2, Vector2, Vector3};

use crate::actuation::{static_force, ActuatorCommand};
use crate::config::{ActuatorAnchor, DynamicParams, LeverArm, Model, SoaParams};
use crate::kinematics::{
    actuator_jacobian, actuator_lengths, com_distance, tip_motion, JointConfig,
};
use crate::series::{cor1, cor2, grav, m22, sinc};

/// Configuration and rates of a joint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub q: JointConfig,
    /// `(φ̇, θ̇)`
    pub qdot: [f64; 2],
}

impl JointState {
    pub fn at_rest(q: JointConfig) -> Self {
        Self { q, qdot: [0.0; 2] }
    }

    pub fn is_finite(&self) -> bool {
        self.q.phi.is_finite()
            && self.q.theta.is_finite()
            && self.qdot.iter().all(|v| v.is_finite())
    }

    pub fn rates(&self) -> Vector2<f64> {
        Vector2::new(self.qdot[0], self.qdot[1])
    }
}

/// Every term of the equation of motion at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsTerms {
    pub inertia: Matrix2<f64>,
    pub coriolis: Vector2<f64>,
    pub gravity: Vector2<f64>,
    pub stiffness: Vector2<f64>,
    pub damping: Matrix2<f64>,
}

/// Diagonal inertia matrix. The φ entry is `I + m·d²` with `d` the
/// centre-of-mass distance.
pub fn inertia_matrix(q: JointConfig, dynp: &DynamicParams) -> Matrix2<f64> {
    let m = dynp.inertial_mass();
    let l = dynp.arc_length;
    let d = com_distance(q.theta, l);
    Matrix2::new(
        dynp.inertia + m * d * d,
        0.0,
        0.0,
        0.25 * dynp.inertia + m * l * l * m22(q.theta),
    )
}

/// Coriolis and centrifugal vector, rate products included. These are the
/// Christoffel terms of [`inertia_matrix`].
pub fn coriolis_vector(state: &JointState, dynp: &DynamicParams) -> Vector2<f64> {
    let m = dynp.inertial_mass();
    let ml2 = m * dynp.arc_length * dynp.arc_length;
    let [phid, thd] = state.qdot;
    let k1 = cor1(state.q.theta);
    Vector2::new(
        ml2 * k1 * phid * thd,
        ml2 * cor2(state.q.theta) * thd * thd - 0.5 * ml2 * k1 * phid * phid,
    )
}

/// Gravity vector; its φ component is always zero.
pub fn gravity_vector(q: JointConfig, dynp: &DynamicParams) -> Vector2<f64> {
    Vector2::new(
        0.0,
        dynp.gravitational_mass() * dynp.gravity * dynp.arc_length * grav(q.theta),
    )
}

/// Potential whose θ-derivative is [`gravity_vector`]: `m g d cos θ`.
pub fn gravity_potential(q: JointConfig, dynp: &DynamicParams) -> f64 {
    let l = dynp.arc_length;
    dynp.gravitational_mass() * dynp.gravity * 0.5 * l * sinc(0.5 * q.theta) * q.theta.cos()
}

fn lever_arms(q: JointConfig, anchors: &[ActuatorAnchor], soa: &SoaParams) -> Vec<f64> {
    match soa.lever_arm_mode {
        LeverArm::Uniform => vec![soa.lever_arm; anchors.len()],
        LeverArm::PerAnchor => {
            let (s, c) = q.phi.sin_cos();
            anchors
                .iter()
                .map(|a| (a.base_point.x * c + a.base_point.y * s).abs())
                .collect()
        }
    }
}

fn stiffness_with(
    q: JointConfig,
    pressures: &[f64],
    jac: &MatrixXx2<f64>,
    arms: &[f64],
    model: &Model,
) -> Vector2<f64> {
    let l0 = model.geometry.arc_length;
    let lengths = actuator_lengths(q, &model.anchors, l0);
    let mut k = Vector2::zeros();
    for (i, (&p, l)) in pressures.iter().zip(lengths).enumerate() {
        let f = static_force(p, l - l0, &model.soa);
        k[0] += arms[i] * jac[(i, 0)] * f;
        k[1] += arms[i] * jac[(i, 1)] * f;
    }
    k[1] -= model.dynamics.vertebra_stiffness() * q.theta;
    k
}

fn damping_with(jac: &MatrixXx2<f64>, arms: &[f64], soa: &SoaParams) -> Matrix2<f64> {
    let mut d = Matrix2::zeros();
    for (i, r) in arms.iter().enumerate() {
        let row = jac.row(i);
        d += soa.damping * r * row.transpose() * row;
    }
    d
}

/// Net moment `K = r·J_aᵀ·F − (E I_p / L)·θ ê_θ`, with each actuator force
/// `F_i = P_i A − (m P_i + n)(l_i − L)` measured from the straight length.
pub fn stiffness_term(q: JointConfig, pressures: &ActuatorCommand, model: &Model) -> Vector2<f64> {
    let jac = actuator_jacobian(q, &model.anchors, model.geometry.arc_length);
    let arms = lever_arms(q, &model.anchors, &model.soa);
    stiffness_with(q, pressures.pressures(), &jac, &arms, model)
}

/// Damping matrix `D = c·r·J_aᵀ J_a`, positive semi-definite.
pub fn damping_matrix(q: JointConfig, model: &Model) -> Matrix2<f64> {
    let jac = actuator_jacobian(q, &model.anchors, model.geometry.arc_length);
    let arms = lever_arms(q, &model.anchors, &model.soa);
    damping_with(&jac, &arms, &model.soa)
}

/// All terms at once, sharing one Jacobian evaluation.
pub fn dynamics_terms(
    state: &JointState,
    pressures: &ActuatorCommand,
    model: &Model,
) -> DynamicsTerms {
    let q = state.q;
    let jac = actuator_jacobian(q, &model.anchors, model.geometry.arc_length);
    let arms = lever_arms(q, &model.anchors, &model.soa);
    DynamicsTerms {
        inertia: inertia_matrix(q, &model.dynamics),
        coriolis: coriolis_vector(state, &model.dynamics),
        gravity: gravity_vector(q, &model.dynamics),
        stiffness: stiffness_with(q, pressures.pressures(), &jac, &arms, model),
        damping: damping_with(&jac, &arms, &model.soa),
    }
}

impl DynamicsTerms {
    /// Everything on the right-hand side except `M q̈`.
    fn net_force(&self, state: &JointState, external: Vector2<f64>) -> Vector2<f64> {
        external + self.stiffness - self.coriolis - self.damping * state.rates() - self.gravity
    }
}

/// Accelerations `(φ̈, θ̈)` under the given pressures and external torque.
pub fn forward_dynamics(
    state: &JointState,
    pressures: &ActuatorCommand,
    model: &Model,
    external: [f64; 2],
) -> [f64; 2] {
    let terms = dynamics_terms(state, pressures, model);
    let rhs = terms.net_force(state, Vector2::new(external[0], external[1]));
    // M is diagonal and positive.
    [
        rhs[0] / terms.inertia[(0, 0)],
        rhs[1] / terms.inertia[(1, 1)],
    ]
}

/// External generalised torque needed to realise `qddot`:
/// `τ = M q̈ + c + D q̇ + G − K`.
pub fn inverse_dynamics(
    state: &JointState,
    qddot: [f64; 2],
    pressures: &ActuatorCommand,
    model: &Model,
) -> [f64; 2] {
    let terms = dynamics_terms(state, pressures, model);
    let a = Vector2::new(qddot[0], qddot[1]);
    let tau = terms.inertia * a + terms.coriolis + terms.damping * state.rates() + terms.gravity
        - terms.stiffness;
    [tau[0], tau[1]]
}

/// Kinetic energy `½ q̇ᵀ M q̇`.
pub fn kinetic_energy(state: &JointState, dynp: &DynamicParams) -> f64 {
    let v = state.rates();
    0.5 * (v.transpose() * inertia_matrix(state.q, dynp) * v)[0]
}

/// Potential of the conservative forces at constant pressures: vertebra
/// bending, actuator springs and gravity. Only meaningful for the uniform
/// lever arm.
pub fn potential_energy(q: JointConfig, pressures: &ActuatorCommand, model: &Model) -> f64 {
    let l0 = model.geometry.arc_length;
    let soa = &model.soa;
    let actuators: f64 = pressures
        .pressures()
        .iter()
        .zip(actuator_lengths(q, &model.anchors, l0))
        .map(|(&p, l)| {
            let dl = l - l0;
            -p * soa.area * dl + 0.5 * soa.stiffness(p) * dl * dl
        })
        .sum();
    0.5 * model.dynamics.vertebra_stiffness() * q.theta * q.theta
        + soa.lever_arm * actuators
        + gravity_potential(q, &model.dynamics)
}

pub fn total_energy(state: &JointState, pressures: &ActuatorCommand, model: &Model) -> f64 {
    kinetic_energy(state, &model.dynamics) + potential_energy(state.q, pressures, model)
}

/// Load the joint exerts on its base.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BaseReaction {
    /// Moment of the inertial and gravity loads, signed by its bending
    /// component (N·m).
    pub torque: f64,
    /// Magnitude of the force transmitted to the base (N).
    pub force: f64,
}

/// Base reaction for a known acceleration. The torque is the generalised
/// inertial-plus-gravity load `M q̈ + c + G`; its θ component acts about the
/// bending axis and its φ component about the base z axis. The force is
/// `Σ m (a + g ẑ)` over the lumped body and the tip mass.
pub fn base_reaction(state: &JointState, qddot: [f64; 2], dynp: &DynamicParams) -> BaseReaction {
    let q = state.q;
    let a = Vector2::new(qddot[0], qddot[1]);
    let load = inertia_matrix(q, dynp) * a + coriolis_vector(state, dynp) + gravity_vector(q, dynp);
    let magnitude = load.norm();
    let torque = if load[1] < 0.0 { -magnitude } else { magnitude };

    let com = tip_motion(q, state.qdot, qddot, dynp.arc_length).scaled(0.5);
    let weight = (dynp.mass + dynp.tip_mass) * dynp.gravity * Vector3::z();
    let force = (dynp.gravitational_mass() * com.acceleration + weight).norm();
    BaseReaction { torque, force }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("static equilibrium search did not converge (residual {residual:e} after {iterations} iterations)")]
    EquilibriumNotConverged { residual: f64, iterations: usize },
    #[error("{pressures} pressures for {actuators} actuators")]
    CountMismatch { pressures: usize, actuators: usize },
}

/// `K − G` at rest: zero at a static equilibrium.
pub fn static_residual(q: JointConfig, pressures: &ActuatorCommand, model: &Model) -> Vector2<f64> {
    stiffness_term(q, pressures, model) - gravity_vector(q, &model.dynamics)
}

/// Minimum-norm actuator forces that hold the joint still at `q` against
/// the vertebra and gravity. These are the load shares handed to the
/// inverse pressure map.
pub fn equilibrium_forces(q: JointConfig, model: &Model) -> Vec<f64> {
    let jac = actuator_jacobian(q, &model.anchors, model.geometry.arc_length);
    let arms = lever_arms(q, &model.anchors, &model.soa);
    let n = model.anchors.len();
    // B = (diag(r) J)ᵀ maps actuator forces to the generalised moment.
    let mut b = nalgebra::DMatrix::<f64>::zeros(2, n);
    for i in 0..n {
        b[(0, i)] = arms[i] * jac[(i, 0)];
        b[(1, i)] = arms[i] * jac[(i, 1)];
    }
    let required = Vector2::new(0.0, model.dynamics.vertebra_stiffness() * q.theta)
        + gravity_vector(q, &model.dynamics);
    let pinv = b
        .pseudo_inverse(1e-14)
        .expect("pseudo-inverse of a finite matrix");
    let f = pinv * nalgebra::DVector::from_column_slice(required.as_slice());
    f.iter().copied().collect()
}

/// Newton search for the rest configuration under constant pressures,
/// starting from `guess`.
pub fn solve_equilibrium(
    pressures: &ActuatorCommand,
    guess: JointConfig,
    model: &Model,
) -> Result<JointConfig, DynamicsError> {
    if pressures.len() != model.anchors.len() {
        return Err(DynamicsError::CountMismatch {
            pressures: pressures.len(),
            actuators: model.anchors.len(),
        });
    }
    const MAX_ITER: usize = 100;
    let scale = model.dynamics.vertebra_stiffness().max(1e-12);
    let mut q = guess;
    let mut r = static_residual(q, pressures, model);
    for it in 0..MAX_ITER {
        if r.norm() < 1e-13 * scale {
            return Ok(q);
        }
        let h = 1e-7;
        let mut jac = Matrix2::zeros();
        for k in 0..2 {
            let mut plus = q;
            let mut minus = q;
            if k == 0 {
                plus.phi += h;
                minus.phi -= h;
            } else {
                plus.theta += h;
                minus.theta -= h;
            }
            let col = (static_residual(plus, pressures, model)
                - static_residual(minus, pressures, model))
                / (2.0 * h);
            jac.set_column(k, &col);
        }
        let step = match jac.try_inverse() {
            Some(inv) => -(inv * r),
            None => {
                return Err(DynamicsError::EquilibriumNotConverged {
                    residual: r.norm(),
                    iterations: it,
                })
            }
        };
        // Backtrack until the residual decreases.
        let mut lambda = 1.0;
        loop {
            let trial = JointConfig {
                phi: q.phi + lambda * step[0],
                theta: q.theta + lambda * step[1],
            };
            let rt = static_residual(trial, pressures, model);
            if rt.norm() < r.norm() || lambda < 1e-6 {
                q = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
    if r.norm() < 1e-9 * scale {
        Ok(q)
    } else {
        Err(DynamicsError::EquilibriumNotConverged {
            residual: r.norm(),
            iterations: MAX_ITER,
        })
    }
}

/// Common pressure on the actuators marked in `driving` (the others vented)
/// that holds the joint at rest at `q`, found by bisection on the bending
/// component of the static residual. `None` if no pressure in the supply
/// range does it.
pub fn holding_pressure(q: JointConfig, driving: &[bool], model: &Model) -> Option<f64> {
    let residual =
        |p: f64| static_residual(q, &crate::actuation::pattern_command(p, driving), model)[1];
    let (mut lo, mut hi) = (model.soa.min_pressure, model.soa.max_pressure);
    let (mut rlo, rhi) = (residual(lo), residual(hi));
    if rlo.signum() == rhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let rm = residual(mid);
        if rm.signum() == rlo.signum() {
            lo = mid;
            rlo = rm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-9 * (1.0 + hi.abs()) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}
