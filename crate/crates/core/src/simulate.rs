//! Fixed-step RK4 integration, pressure schedules and motion metrics.

use crate::actuation::{pattern_command, ActuatorCommand, PressureProfile};
use crate::config::{Model, PlatformParams};
use crate::dynamics::{base_reaction, forward_dynamics, BaseReaction, JointState};
use crate::kinematics::JointConfig;
use crate::platform::{platform_accels, PlatformError, PlatformState};

/// Time-stamped states with one input record per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S, U> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub inputs: Vec<U>,
}

impl<S, U> Default for Trajectory<S, U> {
    fn default() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            inputs: Vec::new(),
        }
    }
}

impl<S, U> Trajectory<S, U> {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            inputs: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: f64, state: S, input: U) {
        self.times.push(t);
        self.states.push(state);
        self.inputs.push(input);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Equal lengths and strictly increasing times.
    pub fn is_consistent(&self) -> bool {
        self.states.len() == self.times.len()
            && self.inputs.len() == self.times.len()
            && self.times.windows(2).all(|w| w[1] > w[0])
    }
}

/// What drove the joint at one sample, plus the quantities derived from it
/// during integration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointRecord {
    pub pressures: Vec<f64>,
    pub qddot: [f64; 2],
    pub reaction: BaseReaction,
}

pub type JointTrajectory = Trajectory<JointState, JointRecord>;
/// Inputs are the hinge torque (N·m).
pub type PlatformTrajectory = Trajectory<PlatformState, f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulationError {
    #[error("state became non-finite at t = {time} s")]
    NonFiniteState { time: f64 },
    #[error("invalid step: dt = {dt} s, duration = {duration} s (need dt > 0 and duration >= dt)")]
    InvalidStep { dt: f64, duration: f64 },
    #[error(transparent)]
    Platform(#[from] PlatformError),
}

fn step_count(duration: f64, dt: f64) -> Result<usize, SimulationError> {
    if !(dt > 0.0 && duration >= dt && duration.is_finite()) {
        return Err(SimulationError::InvalidStep { dt, duration });
    }
    Ok((duration / dt).round() as usize)
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// One classical Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(rhs: &mut F, t: f64, y: &[f64; N], dt: f64) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let h = 0.5 * dt;
    let k1 = rhs(t, y);
    let k2 = rhs(t + h, &axpy(y, h, &k1));
    let k3 = rhs(t + h, &axpy(y, h, &k2));
    let k4 = rhs(t + dt, &axpy(y, dt, &k3));
    std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Integrates `ẏ = rhs(t, y)` from `t = 0` with fixed step `dt`. Samples
/// are taken at `t_k = k·dt`, `k = 0..=round(duration/dt)`.
pub fn integrate<const N: usize, F>(
    mut rhs: F,
    y0: [f64; N],
    duration: f64,
    dt: f64,
) -> Result<Trajectory<[f64; N], ()>, SimulationError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let n = step_count(duration, dt)?;
    let mut traj = Trajectory::with_capacity(n + 1);
    let mut y = y0;
    traj.push(0.0, y, ());
    for k in 0..n {
        let t = k as f64 * dt;
        y = rk4_step(&mut rhs, t, &y, dt);
        let t_next = (k + 1) as f64 * dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(SimulationError::NonFiniteState { time: t_next });
        }
        traj.push(t_next, y, ());
    }
    Ok(traj)
}

/// Source of actuator pressures during a simulation.
pub trait PressureSchedule {
    /// Called at the start of every step, and before the first sample,
    /// with the current state. Feedback decisions are made here and held
    /// for the whole step.
    fn update(&mut self, _t: f64, _state: &JointState) {}

    fn command(&self, t: f64) -> ActuatorCommand;
}

/// The same pressures for all time.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPressures(pub ActuatorCommand);

impl PressureSchedule for ConstantPressures {
    fn command(&self, _t: f64) -> ActuatorCommand {
        self.0.clone()
    }
}

/// Angle-triggered switch of a pulse to a fixed pressure level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub theta: f64,
    pub level: f64,
}

/// A pressure pulse on the driving actuators, the others vented. With a
/// cutoff the driving pressure jumps to `cutoff.level` at the first step
/// that starts with `θ ≥ cutoff.theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub profile: PressureProfile,
    pub driving: Vec<bool>,
    pub cutoff: Option<Cutoff>,
    switched_at: Option<f64>,
}

impl PulseSchedule {
    pub fn new(profile: PressureProfile, driving: Vec<bool>) -> Self {
        Self {
            profile,
            driving,
            cutoff: None,
            switched_at: None,
        }
    }

    pub fn with_cutoff(mut self, theta: f64, level: f64) -> Self {
        self.cutoff = Some(Cutoff { theta, level });
        self
    }

    /// Time at which the cutoff fired, if it has.
    pub fn switched_at(&self) -> Option<f64> {
        self.switched_at
    }

    pub fn level_at(&self, t: f64) -> f64 {
        match (self.switched_at, self.cutoff) {
            (Some(ts), Some(cut)) if t >= ts => cut.level,
            _ => self.profile.pressure_at(t),
        }
    }
}

impl PressureSchedule for PulseSchedule {
    fn update(&mut self, t: f64, state: &JointState) {
        if let (Some(cut), None) = (self.cutoff, self.switched_at) {
            if state.q.theta >= cut.theta {
                self.switched_at = Some(t);
            }
        }
    }

    fn command(&self, t: f64) -> ActuatorCommand {
        pattern_command(self.level_at(t), &self.driving)
    }
}

fn joint_to_array(s: &JointState) -> [f64; 4] {
    [s.q.phi, s.q.theta, s.qdot[0], s.qdot[1]]
}

fn joint_from_array(y: &[f64]) -> JointState {
    // φ is left unwrapped inside the integrator so the state stays smooth.
    JointState {
        q: JointConfig {
            phi: y[0],
            theta: y[1],
        },
        qdot: [y[2], y[3]],
    }
}

fn joint_rhs(model: &Model, command: &ActuatorCommand, y: &[f64]) -> [f64; 4] {
    let s = joint_from_array(y);
    let a = forward_dynamics(&s, command, model, [0.0; 2]);
    [y[2], y[3], a[0], a[1]]
}

fn joint_record(model: &Model, state: &JointState, command: ActuatorCommand) -> JointRecord {
    let qddot = forward_dynamics(state, &command, model, [0.0; 2]);
    JointRecord {
        reaction: base_reaction(state, qddot, &model.dynamics),
        qddot,
        pressures: command.0,
    }
}

/// Simulates one pressure-driven joint.
pub fn simulate_joint<S: PressureSchedule>(
    model: &Model,
    initial: JointState,
    schedule: &mut S,
    duration: f64,
    dt: f64,
) -> Result<JointTrajectory, SimulationError> {
    let n = step_count(duration, dt)?;
    let mut traj = Trajectory::with_capacity(n + 1);
    let mut y = joint_to_array(&initial);
    for k in 0..=n {
        let t = k as f64 * dt;
        let state = joint_from_array(&y);
        if !state.is_finite() {
            return Err(SimulationError::NonFiniteState { time: t });
        }
        schedule.update(t, &state);
        traj.push(t, state, joint_record(model, &state, schedule.command(t)));
        if k == n {
            break;
        }
        let sched = &*schedule;
        let mut rhs = |tau: f64, y: &[f64; 4]| joint_rhs(model, &sched.command(tau), y);
        y = rk4_step(&mut rhs, t, &y, dt);
    }
    Ok(traj)
}

/// Simulates the two-body platform under a prescribed hinge torque.
pub fn simulate_platform<F>(
    params: &PlatformParams,
    initial: PlatformState,
    mut torque: F,
    duration: f64,
    dt: f64,
) -> Result<PlatformTrajectory, SimulationError>
where
    F: FnMut(f64) -> f64,
{
    // Reject degenerate inertia up front so the integrator never sees it.
    platform_accels(&initial, 0.0, params)?;
    let to_state = |y: &[f64; 4]| PlatformState {
        alpha: y[0],
        beta: y[1],
        alphadot: y[2],
        betadot: y[3],
    };
    let n = step_count(duration, dt)?;
    let mut traj = Trajectory::with_capacity(n + 1);
    let mut y = [
        initial.alpha,
        initial.beta,
        initial.alphadot,
        initial.betadot,
    ];
    for k in 0..=n {
        let t = k as f64 * dt;
        let state = to_state(&y);
        if !state.is_finite() {
            return Err(SimulationError::NonFiniteState { time: t });
        }
        traj.push(t, state, torque(t));
        if k == n {
            break;
        }
        let mut rhs = |tt: f64, y: &[f64; 4]| {
            let (aa, bb) = platform_accels(&to_state(y), torque(tt), params)
                .expect("inertia checked before integration");
            [y[2], y[3], aa, bb]
        };
        y = rk4_step(&mut rhs, t, &y, dt);
    }
    Ok(traj)
}

/// Bending load the joint puts on its base, projected on `axis` (a unit
/// vector in the base plane).
pub fn hinge_torque(state: &JointState, qddot: [f64; 2], model: &Model, axis: [f64; 2]) -> f64 {
    let d = &model.dynamics;
    let q = state.q;
    let load = crate::dynamics::inertia_matrix(q, d) * nalgebra::Vector2::new(qddot[0], qddot[1])
        + crate::dynamics::coriolis_vector(state, d)
        + crate::dynamics::gravity_vector(q, d);
    // The bending axis for direction φ is (−sin φ, cos φ, 0).
    let (s, c) = q.phi.sin_cos();
    load[1] * (-s * axis[0] + c * axis[1])
}

/// Options of a coupled tail-on-platform run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartOptions {
    /// Unit vector in the joint's base plane along the platform hinge.
    pub axis: [f64; 2],
    /// The platform weight is carried by its wheels: gravity terms of the
    /// platform model are dropped.
    pub ground_support: bool,
}

/// Joint and platform integrated together. The hinge torque driving the
/// platform is the joint's base load about `options.axis`; the platform
/// motion does not feed back into the joint.
pub fn simulate_cart<S: PressureSchedule>(
    model: &Model,
    joint0: JointState,
    schedule: &mut S,
    platform0: PlatformState,
    options: CartOptions,
    duration: f64,
    dt: f64,
) -> Result<(JointTrajectory, PlatformTrajectory), SimulationError> {
    let mut params = model.platform;
    if options.ground_support {
        params.gravity = 0.0;
    }
    platform_accels(&platform0, 0.0, &params)?;
    let n = step_count(duration, dt)?;
    let mut joint_traj = Trajectory::with_capacity(n + 1);
    let mut plat_traj = Trajectory::with_capacity(n + 1);
    let j0 = joint_to_array(&joint0);
    let mut y = [
        j0[0],
        j0[1],
        j0[2],
        j0[3],
        platform0.alpha,
        platform0.beta,
        platform0.alphadot,
        platform0.betadot,
    ];
    let plat_state = |y: &[f64; 8]| PlatformState {
        alpha: y[4],
        beta: y[5],
        alphadot: y[6],
        betadot: y[7],
    };
    for k in 0..=n {
        let t = k as f64 * dt;
        let js = joint_from_array(&y[..4]);
        let ps = plat_state(&y);
        if !js.is_finite() || !ps.is_finite() {
            return Err(SimulationError::NonFiniteState { time: t });
        }
        schedule.update(t, &js);
        let record = joint_record(model, &js, schedule.command(t));
        let tau = hinge_torque(&js, record.qddot, model, options.axis);
        joint_traj.push(t, js, record);
        plat_traj.push(t, ps, tau);
        if k == n {
            break;
        }
        let sched = &*schedule;
        let mut rhs = |tt: f64, y: &[f64; 8]| {
            let js = joint_from_array(&y[..4]);
            let command = sched.command(tt);
            let a = forward_dynamics(&js, &command, model, [0.0; 2]);
            let tau = hinge_torque(&js, a, model, options.axis);
            let (aa, bb) = platform_accels(&plat_state(y), tau, &params)
                .expect("inertia checked before integration");
            [y[2], y[3], a[0], a[1], y[6], y[7], aa, bb]
        };
        y = rk4_step(&mut rhs, t, &y, dt);
    }
    Ok((joint_traj, plat_traj))
}

/// Summary of one maneuver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotionMetrics {
    /// First time θ reaches the target (s).
    pub t_settle: Option<f64>,
    /// Peak |θ̇| (rad/s).
    pub v_peak: f64,
    /// Peak |base torque| (N·m).
    pub tau_peak: f64,
    /// Peak base force (N).
    pub f_peak: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("trajectory is empty")]
    Empty,
    #[error("target angle {target} rad never reached")]
    TargetNeverReached { target: f64, metrics: MotionMetrics },
}

/// First time the series reaches `target` from below, linearly
/// interpolated between samples.
pub fn first_crossing(times: &[f64], values: &[f64], target: f64) -> Option<f64> {
    if values.first().is_some_and(|&v| v >= target) {
        return times.first().copied();
    }
    for k in 1..values.len() {
        let (a, b) = (values[k - 1], values[k]);
        if a < target && b >= target {
            let s = (target - a) / (b - a);
            return Some(times[k - 1] + s * (times[k] - times[k - 1]));
        }
    }
    None
}

fn peak_abs(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, |m, x| m.max(x.abs()))
}

/// Metrics from raw series; see [`extract_metrics`].
pub fn metrics_from_series(
    times: &[f64],
    theta: &[f64],
    thetadot: &[f64],
    torque: &[f64],
    force: &[f64],
    target: f64,
) -> Result<MotionMetrics, MetricsError> {
    if times.is_empty() {
        return Err(MetricsError::Empty);
    }
    let metrics = MotionMetrics {
        t_settle: first_crossing(times, theta, target),
        v_peak: peak_abs(thetadot.iter().copied()),
        tau_peak: peak_abs(torque.iter().copied()),
        f_peak: peak_abs(force.iter().copied()),
    };
    if metrics.t_settle.is_none() {
        return Err(MetricsError::TargetNeverReached { target, metrics });
    }
    Ok(metrics)
}

/// Settling time to `target`, peak bending rate and peak base loads.
pub fn extract_metrics(traj: &JointTrajectory, target: f64) -> Result<MotionMetrics, MetricsError> {
    let theta: Vec<f64> = traj.states.iter().map(|s| s.q.theta).collect();
    let thetadot: Vec<f64> = traj.states.iter().map(|s| s.qdot[1]).collect();
    let torque: Vec<f64> = traj.inputs.iter().map(|r| r.reaction.torque).collect();
    let force: Vec<f64> = traj.inputs.iter().map(|r| r.reaction.force).collect();
    metrics_from_series(&traj.times, &theta, &thetadot, &torque, &force, target)
}

/// Per-sample base loads of a joint trajectory: `(torque, force)`.
pub fn base_reaction_series(traj: &JointTrajectory) -> (Vec<f64>, Vec<f64>) {
    traj.inputs
        .iter()
        .map(|r| (r.reaction.torque, r.reaction.force))
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::driving_set;
    use crate::dynamics::total_energy;
    use std::f64::consts::PI;

    #[test]
    fn zero_rhs_keeps_state() {
        let traj = integrate(|_, _| [0.0; 3], [1.0, -2.0, 3.0], 1.0, 0.1).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.states.iter().all(|s| *s == [1.0, -2.0, 3.0]));
        assert!(traj.is_consistent());
    }

    #[test]
    fn harmonic_oscillator_period() {
        let w = 2.0 * PI;
        let traj = integrate(|_, y| [y[1], -w * w * y[0]], [1.0, 0.0], 1.0, 1e-4).unwrap();
        let last = traj.states.last().unwrap();
        assert!((last[0] - 1.0).abs() < 1e-6);
        assert!(last[1].abs() < 1e-6 * w);
    }

    #[test]
    fn bad_steps_are_rejected() {
        assert!(integrate(|_, _| [0.0], [0.0], 1.0, 0.0).is_err());
        assert!(integrate(|_, _| [0.0], [0.0], 0.01, 0.1).is_err());
    }

    #[test]
    fn blow_up_reports_time() {
        let err = integrate(|_, y| [y[0] * y[0]], [1.0], 2.0, 0.01).unwrap_err();
        assert!(
            matches!(err, SimulationError::NonFiniteState { time } if time > 0.9 && time <= 2.0)
        );
    }

    #[test]
    fn crossing_of_ramp() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let theta: Vec<f64> = times.iter().map(|t| 2.0 * t).collect();
        assert!((first_crossing(&times, &theta, 0.75).unwrap() - 0.375).abs() < 1e-12);
        assert_eq!(first_crossing(&times, &theta, 5.0), None);
    }

    #[test]
    fn sinusoid_peak_rate() {
        let (a, w) = (0.5, 3.0);
        let times: Vec<f64> = (0..=20000).map(|k| k as f64 * 1e-4).collect();
        let theta: Vec<f64> = times.iter().map(|t| a * (w * t).sin()).collect();
        let rate: Vec<f64> = times.iter().map(|t| a * w * (w * t).cos()).collect();
        let zeros = vec![0.0; times.len()];
        let m = metrics_from_series(&times, &theta, &rate, &zeros, &zeros, 0.25).unwrap();
        assert!((m.v_peak - a * w).abs() < 1e-12);
    }

    #[test]
    fn missing_target_still_reports_metrics() {
        let times = [0.0, 1.0];
        let err = metrics_from_series(
            &times,
            &[0.0, 0.1],
            &[0.0, 2.0],
            &[1.0, -3.0],
            &[0.5, 0.2],
            1.0,
        )
        .unwrap_err();
        match err {
            MetricsError::TargetNeverReached { metrics, .. } => {
                assert_eq!(metrics.t_settle, None);
                assert_eq!(metrics.v_peak, 2.0);
                assert_eq!(metrics.tau_peak, 3.0);
            }
            e => panic!("unexpected {e:?}"),
        }
        assert_eq!(
            metrics_from_series(&[], &[], &[], &[], &[], 1.0),
            Err(MetricsError::Empty)
        );
    }

    #[test]
    fn runs_are_bit_identical() {
        let model = Model::default();
        let run = || {
            let profile = PressureProfile {
                peak: 3e5,
                rise_time: 0.04,
                hold: 0.05,
                vacuum: -9e4,
            };
            let mut s = PulseSchedule::new(profile, driving_set(PI / 2.0, &model.anchors));
            simulate_joint(
                &model,
                JointState::at_rest(JointConfig::new(PI / 2.0, 0.0)),
                &mut s,
                0.1,
                1e-4,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn cutoff_switches_to_vacuum_once() {
        let model = Model::default();
        let profile = PressureProfile {
            peak: 4e5,
            rise_time: 0.04,
            hold: 1.0,
            vacuum: -9e4,
        };
        let mut s = PulseSchedule::new(profile, driving_set(PI / 2.0, &model.anchors))
            .with_cutoff(0.3, -9e4);
        let traj = simulate_joint(
            &model,
            JointState::at_rest(JointConfig::new(PI / 2.0, 0.0)),
            &mut s,
            0.3,
            1e-4,
        )
        .unwrap();
        let ts = s.switched_at().expect("cutoff fired");
        let k = traj.times.iter().position(|&t| t >= ts).unwrap();
        assert!(traj.states[k].q.theta >= 0.3);
        assert!(traj.states[k - 1].q.theta < 0.3);
        assert!(traj.inputs[k..]
            .iter()
            .all(|r| r.pressures.iter().all(|&p| p <= 0.0)));
    }

    #[test]
    fn unpressurised_joint_conserves_energy_without_damping() {
        let mut model = Model::default();
        model.soa.damping = 0.0;
        let p = ActuatorCommand::zeros(5);
        let start = JointState {
            q: JointConfig::new(0.4, 0.5),
            qdot: [3.0, -2.0],
        };
        let traj =
            simulate_joint(&model, start, &mut ConstantPressures(p.clone()), 0.2, 1e-4).unwrap();
        let e0 = total_energy(&traj.states[0], &p, &model);
        let drift = traj
            .states
            .iter()
            .map(|s| (total_energy(s, &p, &model) - e0).abs())
            .fold(0.0, f64::max);
        assert!(drift / e0.abs() < 1e-7, "{drift}");
    }
}
