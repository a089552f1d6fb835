use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vertail::actuation::{driving_set, PressureProfile};
use vertail::dynamics::forward_dynamics;
use vertail::kinematics::actuator_jacobian;
use vertail::simulate::{simulate_joint, PulseSchedule};
use vertail::{ActuatorCommand, JointConfig, JointState, Model};

fn kernels(c: &mut Criterion) {
    let model = Model::default();
    let state = JointState {
        q: JointConfig::new(-1.2, 0.6),
        qdot: [1.5, -4.0],
    };
    let p = ActuatorCommand(vec![3e5, 0.0, 0.0, 3e5, 3e5]);
    c.bench_function("actuator_jacobian", |b| {
        b.iter(|| {
            actuator_jacobian(
                black_box(state.q),
                &model.anchors,
                model.geometry.arc_length,
            )
        })
    });
    c.bench_function("forward_dynamics", |b| {
        b.iter(|| forward_dynamics(black_box(&state), &p, &model, [0.0; 2]))
    });
}

fn maneuver(c: &mut Criterion) {
    let model = Model::default();
    let phi = -std::f64::consts::FRAC_PI_2;
    let profile = PressureProfile {
        peak: 6e5,
        rise_time: 0.04,
        hold: 1.0,
        vacuum: -9e4,
    };
    let driving = driving_set(phi, &model.anchors);
    c.bench_function("simulate_joint 0.2 s at 0.1 ms", |b| {
        b.iter(|| {
            let mut schedule = PulseSchedule::new(profile, driving.clone());
            let start = JointState::at_rest(JointConfig::new(phi, 0.0));
            simulate_joint(&model, start, &mut schedule, 0.2, 1e-4).unwrap()
        })
    });
}

criterion_group!(benches, kernels, maneuver);
criterion_main!(benches);
