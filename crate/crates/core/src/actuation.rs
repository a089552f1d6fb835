//! Soft origami actuator statics and the pressure-pulse input.

use crate::config::{ActuatorAnchor, SoaParams, Violation};
use crate::kinematics::{actuator_lengths, JointConfig};

/// Static output force `F = P·A − (m·P + n)·Δl`.
pub fn static_force(pressure: f64, delta_length: f64, soa: &SoaParams) -> f64 {
    pressure * soa.area - soa.stiffness(pressure) * delta_length
}

/// One pressure per actuator (Pa).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActuatorCommand(pub Vec<f64>);

impl ActuatorCommand {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn pressures(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Each pressure clamped into `[P_min, P_max]`.
    pub fn clamped(&self, soa: &SoaParams) -> Self {
        Self(
            self.0
                .iter()
                .map(|p| p.clamp(soa.min_pressure, soa.max_pressure))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActuationError {
    #[error("actuator {index}: pressure mapping is singular (denominator {denominator:e})")]
    SingularMapping { index: usize, denominator: f64 },
    #[error("required pressures leave [{min}, {max}] Pa: {requested:?} (clamped: {clamped:?})")]
    PressureOutOfRange {
        requested: Vec<f64>,
        clamped: Vec<f64>,
        min: f64,
        max: f64,
    },
    #[error("{forces} forces given for {actuators} actuators")]
    CountMismatch { forces: usize, actuators: usize },
}

/// Inverse static map: the pressures that make each actuator deliver the
/// requested force `F_i` at configuration `q`,
/// `P_i = (F_i + n·Δl_i) / (A − m·Δl_i)`.
pub fn inverse_pressure(
    q: JointConfig,
    forces: &[f64],
    anchors: &[ActuatorAnchor],
    arc_length: f64,
    soa: &SoaParams,
) -> Result<ActuatorCommand, ActuationError> {
    if forces.len() != anchors.len() {
        return Err(ActuationError::CountMismatch {
            forces: forces.len(),
            actuators: anchors.len(),
        });
    }
    let guard = 1e-8 * soa.area;
    let mut pressures = Vec::with_capacity(forces.len());
    for (index, (f, l)) in forces
        .iter()
        .zip(actuator_lengths(q, anchors, arc_length))
        .enumerate()
    {
        let dl = l - arc_length;
        let denominator = soa.area - soa.stiffness_slope * dl;
        if denominator.abs() < guard {
            return Err(ActuationError::SingularMapping { index, denominator });
        }
        pressures.push((f + soa.stiffness_offset * dl) / denominator);
    }
    let command = ActuatorCommand(pressures);
    if command
        .0
        .iter()
        .any(|p| *p < soa.min_pressure || *p > soa.max_pressure)
    {
        return Err(ActuationError::PressureOutOfRange {
            clamped: command.clamped(soa).0,
            requested: command.0,
            min: soa.min_pressure,
            max: soa.max_pressure,
        });
    }
    Ok(command)
}

/// A single pulse: smooth cubic rise to `peak` over `rise_time`, flat for
/// `hold`, then the `vacuum` level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureProfile {
    pub peak: f64,
    pub rise_time: f64,
    pub hold: f64,
    pub vacuum: f64,
}

impl PressureProfile {
    /// Pressure at time `t` since the pulse started. Zero for `t ≤ 0`.
    pub fn pressure_at(&self, t: f64) -> f64 {
        let t0 = self.rise_time;
        if t <= 0.0 {
            0.0
        } else if t < t0 {
            // P0·t²·(3/t0² − 2t/t0³), written in the normalised time.
            let u = t / t0;
            self.peak * u * u * (3.0 - 2.0 * u)
        } else if t <= t0 + self.hold {
            self.peak
        } else {
            self.vacuum
        }
    }

    pub fn end_of_hold(&self) -> f64 {
        self.rise_time + self.hold
    }

    pub fn violations(&self, soa: &SoaParams) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.rise_time > 0.0) {
            v.push(Violation {
                field: "rise_time",
                message: "t0 must be positive".into(),
            });
        }
        if !(self.hold >= 0.0) {
            v.push(Violation {
                field: "hold",
                message: "hold must be non-negative".into(),
            });
        }
        if !(self.peak >= 0.0 && self.peak <= soa.max_pressure) {
            v.push(Violation {
                field: "peak",
                message: format!(
                    "P0 = {:.3} bar must lie in [0, {:.3}] bar",
                    self.peak / 1e5,
                    soa.max_pressure / 1e5
                ),
            });
        }
        if !(self.vacuum <= 0.0 && self.vacuum >= soa.min_pressure) {
            v.push(Violation {
                field: "vacuum",
                message: format!(
                    "vacuum = {:.1} kPa must lie in [{:.1}, 0] kPa",
                    self.vacuum / 1e3,
                    soa.min_pressure / 1e3
                ),
            });
        }
        v
    }
}

/// Actuators that lengthen when the joint bends toward `bend_phi`: those on
/// the far side of the bending axis. These are the ones a pulse drives.
pub fn driving_set(bend_phi: f64, anchors: &[ActuatorAnchor]) -> Vec<bool> {
    let (s, c) = bend_phi.sin_cos();
    anchors
        .iter()
        .map(|a| {
            let b = a.base_point;
            let along = b.x * c + b.y * s;
            along < -1e-9 * b.norm()
        })
        .collect()
}

/// Pressure command with `pressure` on the driving set and zero elsewhere.
pub fn pattern_command(pressure: f64, driving: &[bool]) -> ActuatorCommand {
    ActuatorCommand(
        driving
            .iter()
            .map(|&d| if d { pressure } else { 0.0 })
            .collect(),
    )
}
