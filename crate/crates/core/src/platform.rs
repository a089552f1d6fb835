//! Planar two-body model of a tail hinged to a robot body.
//!
//! `α` is the body angle and `β` the tail angle measured as in the
//! Lagrangian below, so the tail's absolute orientation enters the kinetic
//! energy through `β̇ − α̇` and, taken in the same rotational sense as the
//! body, equals `α − β`.
//!
//! ```text
//! T = ½ J_t (β̇ − α̇)² + ½ J_r α̇²
//! U = m_r g L_r sin α + m_t g L_t sin(β − α)
//! ```
//!
//! with `J_t = I_t + m_t L_t²` and `J_r = I_r + m_r L_r²`.

use crate::config::PlatformParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlatformState {
    pub alpha: f64,
    pub beta: f64,
    pub alphadot: f64,
    pub betadot: f64,
}

impl PlatformState {
    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite()
            && self.beta.is_finite()
            && self.alphadot.is_finite()
            && self.betadot.is_finite()
    }

    /// Tail orientation in the body's rotational sense.
    pub fn tail_angle(&self) -> f64 {
        self.alpha - self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum PlatformError {
    #[error("platform inertia matrix is singular (determinant {determinant:e})")]
    SingularInertia { determinant: f64 },
}

/// Accelerations `(α̈, β̈)` for hinge torque `tau`.
///
/// Both equations of motion are solved together:
///
/// ```text
/// [ J_t   −J_t  ] [β̈]   [ τ − m_t g L_t cos(β−α)                 ]
/// [ −J_t  J_tot ] [α̈] = [ −m_r g L_r cos α + m_t g L_t cos(β−α) ]
/// ```
///
/// where `J_tot = J_r + J_t`; the determinant is `J_t J_r`.
pub fn platform_accels(
    state: &PlatformState,
    tau: f64,
    params: &PlatformParams,
) -> Result<(f64, f64), PlatformError> {
    let jt = params.tail_hinge_inertia();
    let jr = params.body_hinge_inertia();
    let jtot = jt + jr;
    let det = jt * jtot - jt * jt;
    if !(det.abs() >= 1e-12) {
        return Err(PlatformError::SingularInertia { determinant: det });
    }
    let g = params.gravity;
    let tail_g = params.tail_mass * g * params.tail_com * (state.beta - state.alpha).cos();
    let body_g = params.body_mass * g * params.body_com * state.alpha.cos();
    let r1 = tau - tail_g;
    let r2 = -body_g + tail_g;
    let betaddot = (jtot * r1 + jt * r2) / det;
    let alphaddot = (jt * r1 + jt * r2) / det;
    Ok((alphaddot, betaddot))
}

pub fn kinetic_energy(state: &PlatformState, params: &PlatformParams) -> f64 {
    let rel = state.betadot - state.alphadot;
    0.5 * params.tail_hinge_inertia() * rel * rel
        + 0.5 * params.body_hinge_inertia() * state.alphadot * state.alphadot
}

pub fn potential_energy(state: &PlatformState, params: &PlatformParams) -> f64 {
    let g = params.gravity;
    params.body_mass * g * params.body_com * state.alpha.sin()
        + params.tail_mass * g * params.tail_com * (state.beta - state.alpha).sin()
}

/// `T − U`.
pub fn lagrangian(state: &PlatformState, params: &PlatformParams) -> f64 {
    kinetic_energy(state, params) - potential_energy(state, params)
}

/// `J_tot α̇ − J_t β̇`: constant for any hinge torque when `g = 0`.
pub fn body_momentum(state: &PlatformState, params: &PlatformParams) -> f64 {
    let jt = params.tail_hinge_inertia();
    (params.body_hinge_inertia() + jt) * state.alphadot - jt * state.betadot
}

/// Hinge torque that holds the tail still relative to the body.
pub fn holding_torque(state: &PlatformState, params: &PlatformParams) -> f64 {
    params.tail_mass * params.gravity * params.tail_com * (state.beta - state.alpha).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(g: f64) -> PlatformParams {
        PlatformParams {
            body_mass: 1.5,
            tail_mass: 0.283,
            body_inertia: 6e-3,
            tail_inertia: 1.04e-3,
            body_com: 0.12,
            tail_com: 0.105,
            gravity: g,
        }
    }

    #[test]
    fn rest_without_torque_or_gravity() {
        assert_eq!(
            platform_accels(&PlatformState::default(), 0.0, &params(0.0)).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn degenerate_inertia_is_rejected() {
        let mut p = params(9.81);
        p.tail_inertia = 0.0;
        p.tail_mass = 0.0;
        assert!(matches!(
            platform_accels(&PlatformState::default(), 1.0, &p),
            Err(PlatformError::SingularInertia { .. })
        ));
    }

    #[test]
    fn accelerations_satisfy_both_equations() {
        let p = params(9.81);
        let s = PlatformState {
            alpha: 0.3,
            beta: -0.4,
            alphadot: 1.0,
            betadot: 2.0,
        };
        let tau = 0.7;
        let (aa, bb) = platform_accels(&s, tau, &p).unwrap();
        let jt = 1.04e-3 + 0.283 * 0.105 * 0.105;
        let jr = 6e-3 + 1.5 * 0.12 * 0.12;
        let c = (s.beta - s.alpha).cos();
        let eq21 = jt * (bb - aa) + 0.283 * 9.81 * 0.105 * c - tau;
        let eq22 =
            (jr + jt) * aa - jt * bb + 1.5 * 9.81 * 0.12 * s.alpha.cos() - 0.283 * 9.81 * 0.105 * c;
        assert!(eq21.abs() < 1e-12 && eq22.abs() < 1e-12);
    }

    #[test]
    fn body_turns_against_tail() {
        let p = params(0.0);
        let (aa, bb) = platform_accels(&PlatformState::default(), 0.5, &p).unwrap();
        let tail = aa - bb;
        assert!(aa * tail < 0.0);
    }

    #[test]
    fn holding_torque_stops_relative_motion() {
        let p = params(9.81);
        let s = PlatformState {
            alpha: 0.2,
            beta: 1.1,
            ..Default::default()
        };
        let (aa, bb) = platform_accels(&s, holding_torque(&s, &p), &p).unwrap();
        assert!((bb - aa).abs() < 1e-12);
    }

    #[test]
    fn lagrangian_at_rest_is_zero() {
        assert_eq!(lagrangian(&PlatformState::default(), &params(9.81)), 0.0);
    }

    proptest! {
        #[test]
        fn kinetic_energy_is_quadratic_in_rates(
            a in -3.0f64..3.0, b in -3.0f64..3.0, ad in -10.0f64..10.0, bd in -10.0f64..10.0,
        ) {
            let p = params(9.81);
            let s = PlatformState { alpha: a, beta: b, alphadot: ad, betadot: bd };
            let fast = PlatformState { alphadot: 2.0 * ad, betadot: 2.0 * bd, ..s };
            prop_assert!((kinetic_energy(&fast, &p) - 4.0 * kinetic_energy(&s, &p)).abs() <= 1e-12 * (1.0 + kinetic_energy(&fast, &p)));
            prop_assert_eq!(potential_energy(&fast, &p), potential_energy(&s, &p));
        }

        #[test]
        fn momentum_rate_vanishes_without_gravity(
            a in -3.0f64..3.0, b in -3.0f64..3.0, ad in -10.0f64..10.0, bd in -10.0f64..10.0, tau in -5.0f64..5.0,
        ) {
            let p = params(0.0);
            let s = PlatformState { alpha: a, beta: b, alphadot: ad, betadot: bd };
            let (aa, bb) = platform_accels(&s, tau, &p).unwrap();
            let jt = p.tail_hinge_inertia();
            let rate = (p.body_hinge_inertia() + jt) * aa - jt * bb;
            assert_relative_eq!(rate, 0.0, epsilon = 1e-10);
        }
    }
}
