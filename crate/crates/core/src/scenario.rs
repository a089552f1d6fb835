//! Scenario files and the runs they describe.
//!
//! A scenario file holds a `[scenario]` table plus optional kind-specific
//! tables and, optionally, model overrides in the `[geometry]`, `[soa]`,
//! `[dynamics]` and `[platform]` sections of the model file format.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuation::{driving_set, PressureProfile};
use crate::config::{
    ConfigError, DynamicsSection, GeometrySection, Model, ModelFile, PlatformSection, SoaSection,
    Violation, Violations,
};
use crate::dynamics::{holding_pressure, JointState};
use crate::fitting::{
    fit_damping_rise, fit_linear, fit_power_law, FitError, FitOptions, PulseExperiment, TorqueTrace,
};
use crate::io::{self, IoError, Record};
use crate::kinematics::{tip_motion, JointConfig};
use crate::platform::{platform_accels, PlatformState};
use crate::simulate::{
    extract_metrics, simulate_cart, simulate_joint, CartOptions, JointTrajectory, MetricsError,
    MotionMetrics, PulseSchedule, SimulationError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Maneuver,
    PressureSweep,
    MassSweep,
    Cart,
    Ballistic,
    Fit,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Maneuver => "maneuver",
            Self::PressureSweep => "pressure_sweep",
            Self::MassSweep => "mass_sweep",
            Self::Cart => "cart",
            Self::Ballistic => "ballistic",
            Self::Fit => "fit",
        }
    }
}

/// Primary bending motions. With the actuator pentagon centred on +Y the
/// sagittal plane is YZ: flexion bends toward +Y (φ = 90°), extension
/// toward −Y (φ = −90°) and waggle sideways toward +X (φ = 0°).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Extension,
    Flexion,
    Waggle,
}

impl Direction {
    pub fn phi(self) -> f64 {
        match self {
            Self::Extension => -0.5 * PI,
            Self::Flexion => 0.5 * PI,
            Self::Waggle => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Extension => "extension",
            Self::Flexion => "flexion",
            Self::Waggle => "waggle",
        }
    }

    /// Platform hinge axis in the joint base plane: pitch for the sagittal
    /// motions, the lateral axis for waggle.
    pub fn hinge_axis(self) -> [f64; 2] {
        match self {
            Self::Extension | Self::Flexion => [1.0, 0.0],
            Self::Waggle => [0.0, 1.0],
        }
    }
}

/// What the driving actuators do once the target angle is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AfterTarget {
    /// Switch to the pressure that holds the target statically.
    Hold,
    /// Switch to the pulse's vacuum level.
    Vacuum,
    /// Keep following the pulse.
    Continue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    /// Output file stem; defaults to the scenario file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default = "default_target")]
    pub target_deg: f64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
}

fn default_direction() -> Direction {
    Direction::Extension
}
fn default_target() -> f64 {
    38.0
}
fn default_duration() -> f64 {
    0.6
}
fn default_dt() -> f64 {
    1e-4
}

/// `[pulse]`: bar, ms, kPa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    pub peak_bar: f64,
    pub rise_ms: f64,
    pub hold_ms: f64,
    pub vacuum_kpa: f64,
    pub after_target: AfterTarget,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self {
            peak_bar: 6.0,
            rise_ms: 40.0,
            hold_ms: 1000.0,
            vacuum_kpa: -90.0,
            after_target: AfterTarget::Hold,
        }
    }
}

impl PulseSection {
    fn profile(&self, peak_bar: f64) -> PressureProfile {
        PressureProfile {
            peak: peak_bar * 1e5,
            rise_time: self.rise_ms * 1e-3,
            hold: self.hold_ms * 1e-3,
            vacuum: self.vacuum_kpa * 1e3,
        }
    }
}

/// `[sweep]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub pressures_bar: Vec<f64>,
    pub tip_masses_g: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            pressures_bar: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            tip_masses_g: vec![0.0, 10.0, 20.0, 30.0, 40.0],
        }
    }
}

/// `[cart]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartSection {
    /// Wheels carry the static weight: platform gravity terms are dropped.
    pub ground_support: bool,
    pub alpha0_deg: f64,
    pub beta0_deg: f64,
}

impl Default for CartSection {
    fn default() -> Self {
        Self {
            ground_support: true,
            alpha0_deg: 0.0,
            beta0_deg: 0.0,
        }
    }
}

/// `[ballistic]`: the tail flicks a projectile held at its tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallisticSection {
    /// Lean of the tail base axis away from vertical, against the flick
    /// direction.
    pub tilt_deg: f64,
    /// Height of the joint base above the landing plane.
    pub base_height_m: f64,
    pub projectile_g: f64,
}

impl Default for BallisticSection {
    fn default() -> Self {
        Self {
            tilt_deg: 40.0,
            base_height_m: 0.3,
            projectile_g: 10.0,
        }
    }
}

/// `[fit]`: the open-loop pulse experiment and, when no trace file is
/// given, the ground truth of a synthetic trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// `time_s,torque_Nm` CSV, relative to the scenario file.
    pub trace: Option<PathBuf>,
    pub direction: Direction,
    pub peak_bar: f64,
    pub hold_ms: f64,
    pub vacuum_kpa: f64,
    pub duration_s: f64,
    pub dt_s: f64,
    pub truth_t0_ms: f64,
    pub truth_c_n_s_m: f64,
    /// Noise standard deviation as a fraction of the peak |torque|.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            trace: None,
            direction: Direction::Flexion,
            peak_bar: 2.0,
            hold_ms: 60.0,
            vacuum_kpa: -90.0,
            duration_s: 0.25,
            dt_s: 2e-4,
            truth_t0_ms: 40.0,
            truth_c_n_s_m: 52.0,
            noise_fraction: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub pulse: PulseSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub cart: CartSection,
    #[serde(default)]
    pub ballistic: BallisticSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub soa: SoaSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub platform: PlatformSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    Invalid(Violations),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("no metrics files found in {0:?}")]
    NoInput(Vec<PathBuf>),
}

impl ScenarioError {
    /// Bad or unreadable input: configuration, trace or metrics files.
    pub fn is_input_error(&self) -> bool {
        match self {
            Self::Config(_) | Self::Invalid(_) | Self::Io(_) | Self::NoInput(_) => true,
            Self::Fit(e) => matches!(e, FitError::BadTrace | FitError::Csv { .. }),
            Self::Simulation(_) => false,
        }
    }

    /// The numerics failed on valid input.
    pub fn is_numerical(&self) -> bool {
        !self.is_input_error()
    }
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Config(ConfigError::Parse(e)))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            ScenarioError::Config(ConfigError::Io {
                path: path.display().to_string(),
                source,
            })
        })?;
        let mut file = Self::from_toml(&text)?;
        if file.scenario.name.is_none() {
            file.scenario.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        if let Some(trace) = &file.fit.trace {
            if trace.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                file.fit.trace = Some(base.join(trace));
            }
        }
        Ok(file)
    }

    pub fn name(&self) -> &str {
        self.scenario
            .name
            .as_deref()
            .unwrap_or(self.scenario.kind.as_str())
    }

    pub fn model(&self) -> Result<Model, ScenarioError> {
        ModelFile {
            geometry: self.geometry.clone(),
            soa: self.soa.clone(),
            dynamics: self.dynamics.clone(),
            platform: self.platform.clone(),
        }
        .into_model()
        .map_err(|v| ScenarioError::Config(ConfigError::Invalid(v)))
    }

    /// Scenario-level checks; the model is validated separately.
    pub fn violations(&self, model: &Model) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut push = |field: &'static str, message: String| v.push(Violation { field, message });
        let s = &self.scenario;
        if !(s.dt_s > 0.0) {
            push("dt_s", "dt must be positive".into());
        }
        if !(s.duration_s >= s.dt_s) {
            push("duration_s", "duration must be at least one step".into());
        }
        if !(s.target_deg > 0.0 && s.target_deg < 180.0) {
            push("target_deg", "target must lie in (0, 180) degrees".into());
        }
        let pressures: Vec<f64> = match s.kind {
            ScenarioKind::PressureSweep | ScenarioKind::Ballistic => {
                self.sweep.pressures_bar.clone()
            }
            ScenarioKind::Fit => vec![self.fit.peak_bar],
            _ => vec![self.pulse.peak_bar],
        };
        if pressures.is_empty() {
            push("pressures_bar", "sweep needs at least one pressure".into());
        }
        for p in pressures {
            let profile = match s.kind {
                ScenarioKind::Fit => PressureProfile {
                    peak: p * 1e5,
                    rise_time: self.fit.truth_t0_ms * 1e-3,
                    hold: self.fit.hold_ms * 1e-3,
                    vacuum: self.fit.vacuum_kpa * 1e3,
                },
                _ => self.pulse.profile(p),
            };
            for mut e in profile.violations(&model.soa) {
                e.field = match e.field {
                    "peak" => "peak_bar",
                    "rise_time" => "rise_ms",
                    "hold" => "hold_ms",
                    "vacuum" => "vacuum_kpa",
                    f => f,
                };
                push(e.field, e.message);
            }
        }
        if s.kind == ScenarioKind::MassSweep {
            if self.sweep.tip_masses_g.is_empty() {
                push("tip_masses_g", "sweep needs at least one mass".into());
            }
            if self.sweep.tip_masses_g.iter().any(|m| !(*m >= 0.0)) {
                push("tip_masses_g", "tip masses must be non-negative".into());
            }
        }
        if s.kind == ScenarioKind::Ballistic {
            let b = &self.ballistic;
            if !(b.tilt_deg.abs() < 90.0) {
                push("tilt_deg", "tilt must lie in (-90, 90) degrees".into());
            }
            if !(b.base_height_m >= 0.0) {
                push("base_height_m", "base height must be non-negative".into());
            }
            if !(b.projectile_g >= 0.0) {
                push(
                    "projectile_g",
                    "projectile mass must be non-negative".into(),
                );
            }
        }
        if s.kind == ScenarioKind::Fit {
            let f = &self.fit;
            if !(f.dt_s > 0.0 && f.duration_s >= f.dt_s) {
                push("fit.dt_s", "fit needs dt > 0 and duration >= dt".into());
            }
            if !(f.noise_fraction >= 0.0) {
                push(
                    "noise_fraction",
                    "noise fraction must be non-negative".into(),
                );
            }
        }
        v
    }
}

/// Where and how a scenario runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Replaces every time step of the scenario.
    pub dt: Option<f64>,
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub records: Vec<Record>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Name of the metrics file a run writes into its output directory.
pub fn metrics_file_name(name: &str) -> String {
    format!("{name}_metrics.toml")
}

fn base_record(kind: ScenarioKind, group: &str) -> Record {
    let mut r = Record::new();
    r.insert("kind".into(), kind.as_str().into());
    r.insert("group".into(), group.into());
    r
}

fn put(r: &mut Record, key: &str, value: f64) {
    r.insert(key.into(), value.into());
}

struct ManeuverRun {
    traj: JointTrajectory,
    metrics: MotionMetrics,
    reached: bool,
    warning: Option<String>,
}

fn run_maneuver(
    model: &Model,
    file: &ScenarioFile,
    peak_bar: f64,
    dt: f64,
) -> Result<ManeuverRun, ScenarioError> {
    let s = &file.scenario;
    let phi = s.direction.phi();
    let target = s.target_deg.to_radians();
    let driving = driving_set(phi, &model.anchors);
    let profile = file.pulse.profile(peak_bar);
    let mut schedule = PulseSchedule::new(profile, driving.clone());
    let mut warning = None;
    match file.pulse.after_target {
        AfterTarget::Hold => match holding_pressure(JointConfig::new(phi, target), &driving, model)
        {
            Some(p) => schedule = schedule.with_cutoff(target, p),
            None => {
                warning = Some(format!(
                    "no supply pressure holds {:.1} deg; pulse left unmodified",
                    s.target_deg
                ))
            }
        },
        AfterTarget::Vacuum => schedule = schedule.with_cutoff(target, profile.vacuum),
        AfterTarget::Continue => {}
    }
    let start = JointState::at_rest(JointConfig::new(phi, 0.0));
    let traj = simulate_joint(model, start, &mut schedule, s.duration_s, dt)?;
    let (metrics, reached) = match extract_metrics(&traj, target) {
        Ok(m) => (m, true),
        Err(MetricsError::TargetNeverReached { metrics, .. }) => (metrics, false),
        Err(MetricsError::Empty) => unreachable!("simulations have at least one sample"),
    };
    Ok(ManeuverRun {
        traj,
        metrics,
        reached,
        warning,
    })
}

fn maneuver_record(
    kind: ScenarioKind,
    file: &ScenarioFile,
    run: &ManeuverRun,
    peak_bar: f64,
    tip_mass_g: f64,
    trajectory: &str,
) -> Record {
    let mut r = base_record(kind, file.name());
    r.insert("direction".into(), file.scenario.direction.as_str().into());
    put(&mut r, "pressure_bar", peak_bar);
    put(&mut r, "tip_mass_g", tip_mass_g);
    put(&mut r, "target_deg", file.scenario.target_deg);
    r.insert("target_reached".into(), run.reached.into());
    if let Some(t) = run.metrics.t_settle {
        put(&mut r, "t_settle_s", t);
    }
    put(&mut r, "v_peak_deg_s", run.metrics.v_peak.to_degrees());
    put(&mut r, "tau_peak_Nm", run.metrics.tau_peak);
    put(&mut r, "f_peak_N", run.metrics.f_peak);
    r.insert("trajectory".into(), trajectory.into());
    r
}

fn label(x: f64) -> String {
    let s = format!("{x}");
    s.replace('-', "m").replace('.', "p")
}

/// Runs a scenario, writing trajectories and a metrics file into
/// `options.out_dir`.
pub fn run_scenario(
    file: &ScenarioFile,
    options: &RunOptions,
) -> Result<RunSummary, ScenarioError> {
    let model = file.model()?;
    let mut file = file.clone();
    if let Some(dt) = options.dt {
        file.scenario.dt_s = dt;
        file.fit.dt_s = dt;
    }
    let violations = file.violations(&model);
    if !violations.is_empty() {
        return Err(ScenarioError::Invalid(Violations(violations)));
    }
    std::fs::create_dir_all(&options.out_dir).map_err(|source| IoError::Io {
        path: options.out_dir.clone(),
        source,
    })?;
    let mut summary = RunSummary {
        warnings: model.warnings(),
        ..Default::default()
    };
    let name = file.name().to_string();
    let out = |f: String| options.out_dir.join(f);
    let dt = file.scenario.dt_s;
    let kind = file.scenario.kind;
    let m_actuators = model.anchors.len();

    match kind {
        ScenarioKind::Maneuver => {
            let p = file.pulse.peak_bar;
            let run = run_maneuver(&model, &file, p, dt)?;
            let csv = format!("{name}.csv");
            io::write_joint_csv(&out(csv.clone()), &run.traj, m_actuators)?;
            summary.files.push(out(csv.clone()));
            summary.records.push(maneuver_record(
                kind,
                &file,
                &run,
                p,
                model.dynamics.tip_mass * 1e3,
                &csv,
            ));
            summary.warnings.extend(run.warning);
        }
        ScenarioKind::PressureSweep | ScenarioKind::MassSweep => {
            let members: Vec<(f64, f64)> = if kind == ScenarioKind::PressureSweep {
                let m = model.dynamics.tip_mass * 1e3;
                file.sweep.pressures_bar.iter().map(|&p| (p, m)).collect()
            } else {
                let p = file.pulse.peak_bar;
                file.sweep.tip_masses_g.iter().map(|&m| (p, m)).collect()
            };
            type Member = (Record, PathBuf, Option<String>);
            let results: Vec<Result<Member, ScenarioError>> = members
                .par_iter()
                .map(|&(p, mass_g)| {
                    let mut m = model.clone();
                    m.dynamics.tip_mass = mass_g * 1e-3;
                    let run = run_maneuver(&m, &file, p, dt)?;
                    let csv = if kind == ScenarioKind::PressureSweep {
                        format!("{name}_{}bar.csv", label(p))
                    } else {
                        format!("{name}_{}g.csv", label(mass_g))
                    };
                    io::write_joint_csv(&out(csv.clone()), &run.traj, m_actuators)?;
                    let rec = maneuver_record(kind, &file, &run, p, mass_g, &csv);
                    Ok((rec, out(csv), run.warning))
                })
                .collect();
            for r in results {
                let (rec, path, warning) = r?;
                summary.records.push(rec);
                summary.files.push(path);
                summary.warnings.extend(warning);
            }
        }
        ScenarioKind::Cart => run_cart(&model, &file, dt, &name, &options.out_dir, &mut summary)?,
        ScenarioKind::Ballistic => {
            run_ballistic(&model, &file, dt, &name, &options.out_dir, &mut summary)?
        }
        ScenarioKind::Fit => run_fit(&model, &file, &name, &options.out_dir, &mut summary)?,
    }

    let metrics = out(metrics_file_name(&name));
    io::write_metrics(&metrics, &summary.records)?;
    summary.files.push(metrics);
    Ok(summary)
}

fn run_cart(
    model: &Model,
    file: &ScenarioFile,
    dt: f64,
    name: &str,
    out_dir: &Path,
    summary: &mut RunSummary,
) -> Result<(), ScenarioError> {
    let s = &file.scenario;
    let phi = s.direction.phi();
    let target = s.target_deg.to_radians();
    let driving = driving_set(phi, &model.anchors);
    let profile = file.pulse.profile(file.pulse.peak_bar);
    let mut schedule = PulseSchedule::new(profile, driving.clone());
    match file.pulse.after_target {
        AfterTarget::Hold => {
            if let Some(p) = holding_pressure(JointConfig::new(phi, target), &driving, model) {
                schedule = schedule.with_cutoff(target, p);
            }
        }
        AfterTarget::Vacuum => schedule = schedule.with_cutoff(target, profile.vacuum),
        AfterTarget::Continue => {}
    }
    let options = CartOptions {
        axis: s.direction.hinge_axis(),
        ground_support: file.cart.ground_support,
    };
    let platform0 = PlatformState {
        alpha: file.cart.alpha0_deg.to_radians(),
        beta: file.cart.beta0_deg.to_radians(),
        ..Default::default()
    };
    let start = JointState::at_rest(JointConfig::new(phi, 0.0));
    let (joint, cart) = simulate_cart(
        model,
        start,
        &mut schedule,
        platform0,
        options,
        s.duration_s,
        dt,
    )?;

    let joint_csv = format!("{name}_joint.csv");
    let cart_csv = format!("{name}_cart.csv");
    io::write_joint_csv(&out_dir.join(&joint_csv), &joint, model.anchors.len())?;
    io::write_platform_csv(&out_dir.join(&cart_csv), &cart)?;
    summary.files.push(out_dir.join(&joint_csv));
    summary.files.push(out_dir.join(&cart_csv));

    let mut params = model.platform;
    if options.ground_support {
        params.gravity = 0.0;
    }
    let accels: Vec<(f64, f64)> = cart
        .states
        .iter()
        .zip(&cart.inputs)
        .map(|(st, tau)| platform_accels(st, *tau, &params))
        .collect::<Result<_, _>>()
        .map_err(SimulationError::from)?;
    let tail_acc: Vec<f64> = accels.iter().map(|(a, b)| a - b).collect();
    let scale = tail_acc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let onset = tail_acc.iter().position(|v| v.abs() > 1e-6 * scale);

    let mut r = base_record(ScenarioKind::Cart, name);
    r.insert("direction".into(), s.direction.as_str().into());
    put(&mut r, "pressure_bar", file.pulse.peak_bar);
    let (peak_alpha, _) = cart
        .states
        .iter()
        .map(|st| st.alpha - platform0.alpha)
        .fold((0.0f64, 0.0f64), |(best, mag), a| {
            if a.abs() > mag {
                (a, a.abs())
            } else {
                (best, mag)
            }
        });
    put(&mut r, "alpha_peak_deg", peak_alpha.to_degrees());
    let last = cart.states.last().expect("non-empty trajectory");
    put(
        &mut r,
        "alpha_final_deg",
        (last.alpha - platform0.alpha).to_degrees(),
    );
    if let Some(k) = onset {
        put(&mut r, "onset_time_s", cart.times[k]);
        put(&mut r, "onset_alpha_acc_rad_s2", accels[k].0);
        put(&mut r, "onset_tail_acc_rad_s2", tail_acc[k]);
        r.insert("opposite".into(), (accels[k].0 * tail_acc[k] < 0.0).into());
    }
    put(
        &mut r,
        "tau_peak_Nm",
        cart.inputs.iter().fold(0.0f64, |m, t| m.max(t.abs())),
    );
    r.insert("trajectory".into(), joint_csv.into());
    r.insert("cart_trajectory".into(), cart_csv.into());
    summary.records.push(r);
    Ok(())
}

/// Drag-free range of a point released at height `h0` with velocity
/// components `v_fwd` (horizontal) and `v_up`, landing at height zero.
pub fn projectile_range(v_fwd: f64, v_up: f64, h0: f64, g: f64) -> f64 {
    let flight = (v_up + (v_up * v_up + 2.0 * g * h0).max(0.0).sqrt()) / g;
    v_fwd * flight
}

/// Release state of a flick: tip at peak speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Release {
    pub time: f64,
    pub speed: f64,
    pub height: f64,
    pub range: f64,
}

/// Releases the tip at its peak speed. The base axis leans by `tilt` so
/// that world up is `cos(tilt) ẑ + sin(tilt) ê` in the base frame, with
/// `ê` the bending direction; forward is `cos(tilt) ê − sin(tilt) ẑ`.
pub fn release_at_peak_speed(
    traj: &JointTrajectory,
    model: &Model,
    bend_phi: f64,
    tilt: f64,
    base_height: f64,
    gravity: f64,
) -> Option<Release> {
    let l = model.dynamics.arc_length;
    let motions: Vec<_> = traj
        .states
        .iter()
        .zip(&traj.inputs)
        .map(|(s, r)| tip_motion(s.q, s.qdot, r.qddot, l))
        .collect();
    let k = (0..motions.len()).max_by(|&a, &b| {
        motions[a]
            .velocity
            .norm()
            .total_cmp(&motions[b].velocity.norm())
    })?;
    let e = nalgebra::Vector3::new(bend_phi.cos(), bend_phi.sin(), 0.0);
    let z = nalgebra::Vector3::z();
    let up = tilt.cos() * z + tilt.sin() * e;
    let fwd = tilt.cos() * e - tilt.sin() * z;
    let m = &motions[k];
    let height = base_height + m.position.dot(&up);
    Some(Release {
        time: traj.times[k],
        speed: m.velocity.norm(),
        height,
        range: projectile_range(m.velocity.dot(&fwd), m.velocity.dot(&up), height, gravity),
    })
}

fn run_ballistic(
    model: &Model,
    file: &ScenarioFile,
    dt: f64,
    name: &str,
    out_dir: &Path,
    summary: &mut RunSummary,
) -> Result<(), ScenarioError> {
    let s = &file.scenario;
    let b = &file.ballistic;
    let phi = s.direction.phi();
    let mut m = model.clone();
    m.dynamics.tip_mass = b.projectile_g * 1e-3;
    let driving = driving_set(phi, &m.anchors);
    let results: Vec<Result<(Record, PathBuf), ScenarioError>> = file
        .sweep
        .pressures_bar
        .par_iter()
        .map(|&p| {
            let mut schedule = PulseSchedule::new(file.pulse.profile(p), driving.clone());
            let start = JointState::at_rest(JointConfig::new(phi, 0.0));
            let traj = simulate_joint(&m, start, &mut schedule, s.duration_s, dt)?;
            let g = m.dynamics.gravity;
            let rel =
                release_at_peak_speed(&traj, &m, phi, b.tilt_deg.to_radians(), b.base_height_m, g)
                    .expect("non-empty trajectory");
            let csv = format!("{name}_{}bar.csv", label(p));
            io::write_joint_csv(&out_dir.join(&csv), &traj, m.anchors.len())?;
            let mut r = base_record(ScenarioKind::Ballistic, name);
            r.insert("direction".into(), s.direction.as_str().into());
            put(&mut r, "pressure_bar", p);
            put(&mut r, "projectile_g", b.projectile_g);
            put(&mut r, "release_time_s", rel.time);
            put(&mut r, "release_speed_m_s", rel.speed);
            put(&mut r, "release_height_m", rel.height);
            put(&mut r, "range_m", rel.range);
            r.insert("trajectory".into(), csv.clone().into());
            Ok((r, out_dir.join(csv)))
        })
        .collect();
    for r in results {
        let (rec, path) = r?;
        summary.records.push(rec);
        summary.files.push(path);
    }
    Ok(())
}

fn run_fit(
    model: &Model,
    file: &ScenarioFile,
    name: &str,
    out_dir: &Path,
    summary: &mut RunSummary,
) -> Result<(), ScenarioError> {
    let f = &file.fit;
    let experiment = PulseExperiment {
        model: model.clone(),
        direction: f.direction.phi(),
        peak: f.peak_bar * 1e5,
        hold: f.hold_ms * 1e-3,
        vacuum: f.vacuum_kpa * 1e3,
        duration: f.duration_s,
        dt: f.dt_s,
    };
    let trace = match &f.trace {
        Some(path) => TorqueTrace::load(path)?,
        None => {
            let trace = experiment.synthesize(
                f.truth_t0_ms * 1e-3,
                f.truth_c_n_s_m,
                f.noise_fraction,
                f.seed,
            )?;
            let path = out_dir.join(format!("{name}_trace.csv"));
            trace.save(&path)?;
            summary.files.push(path);
            trace
        }
    };
    let result = fit_damping_rise(&trace, &experiment, &FitOptions::default())?;
    let t0 = result.param("t0").expect("fit defines t0");
    let c = result.param("c").expect("fit defines c");
    let fitted = experiment.simulate(t0, c)?;
    let path = out_dir.join(format!("{name}_model.csv"));
    fitted.save(&path)?;
    summary.files.push(path);

    let mut r = base_record(ScenarioKind::Fit, name);
    put(&mut r, "t0_ms", t0 * 1e3);
    put(&mut r, "c_n_s_m", c);
    put(&mut r, "rmse_Nm", result.rmse);
    r.insert("iterations".into(), (result.iterations as i64).into());
    r.insert("converged".into(), result.converged.into());
    summary.records.push(r);
    Ok(())
}

/// Metrics files named by `paths`; directories contribute every `.toml`
/// file they contain, in name order.
pub fn collect_metrics_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, ScenarioError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|source| IoError::Io {
                path: p.clone(),
                source,
            })?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "toml"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(ScenarioError::NoInput(paths.to_vec()));
    }
    Ok(files)
}

fn series(records: &[&Record], x: &str, y: &str) -> (Vec<f64>, Vec<f64>) {
    records
        .iter()
        .filter_map(|r| Some((io::number(r, x)?, io::number(r, y)?)))
        .unzip()
}

fn varies(xs: &[f64]) -> bool {
    xs.windows(2).any(|w| w[0] != w[1])
}

/// Trend lines for one group of records: power laws of settling time and
/// peak rate against pressure, straight lines of peak torque and range
/// against pressure and of peak torque against tip mass.
pub fn trend_records(group: &str, records: &[&Record]) -> Vec<Record> {
    let mut out = Vec::new();
    let fit_kind = |kind: &str, x: &str, y: &str| {
        let mut r = Record::new();
        r.insert("kind".into(), kind.into());
        r.insert("group".into(), group.into());
        r.insert("x".into(), x.into());
        r.insert("y".into(), y.into());
        r
    };
    for y in ["t_settle_s", "v_peak_deg_s"] {
        let (xs, ys) = series(records, "pressure_bar", y);
        if varies(&xs) {
            if let Ok(p) = fit_power_law(&xs, &ys) {
                let mut r = fit_kind("fit_power_law", "pressure_bar", y);
                put(&mut r, "coefficient", p.coefficient);
                put(&mut r, "exponent", p.exponent);
                out.push(r);
            }
        }
    }
    for (x, y) in [
        ("pressure_bar", "tau_peak_Nm"),
        ("pressure_bar", "range_m"),
        ("tip_mass_g", "tau_peak_Nm"),
    ] {
        let (xs, ys) = series(records, x, y);
        if varies(&xs) {
            if let Ok(l) = fit_linear(&xs, &ys) {
                let mut r = fit_kind("fit_linear", x, y);
                put(&mut r, "slope", l.slope);
                put(&mut r, "intercept", l.intercept);
                put(&mut r, "r_squared", l.r_squared);
                out.push(r);
            }
        }
    }
    out
}

/// Merges metrics files and appends trend fits per group.
pub fn report(paths: &[PathBuf]) -> Result<Vec<Record>, ScenarioError> {
    let files = collect_metrics_files(paths)?;
    let mut records = Vec::new();
    for f in &files {
        records.extend(io::read_metrics(f)?);
    }
    let mut groups: Vec<String> = Vec::new();
    for r in &records {
        let g = r["group"].as_str().expect("schema checked").to_string();
        if !groups.contains(&g) && !r["kind"].as_str().is_some_and(|k| k.starts_with("fit_")) {
            groups.push(g);
        }
    }
    let mut fits = Vec::new();
    for g in &groups {
        let members: Vec<&Record> = records
            .iter()
            .filter(|r| r["group"].as_str() == Some(g.as_str()))
            .filter(|r| !r["kind"].as_str().is_some_and(|k| k.starts_with("fit_")))
            .collect();
        fits.extend(trend_records(g, &members));
    }
    records.extend(fits);
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_follow_anchor_layout() {
        assert_eq!(Direction::Flexion.phi(), 0.5 * PI);
        assert_eq!(Direction::Extension.phi(), -0.5 * PI);
        assert_eq!(Direction::Waggle.phi(), 0.0);
        let model = Model::default();
        let count = |d: Direction| {
            driving_set(d.phi(), &model.anchors)
                .iter()
                .filter(|b| **b)
                .count()
        };
        assert_eq!(count(Direction::Extension), 3);
        assert_eq!(count(Direction::Flexion), 2);
        assert_eq!(count(Direction::Waggle), 2);
    }

    #[test]
    fn minimal_file_takes_defaults() {
        let f = ScenarioFile::from_toml("[scenario]\nkind = \"maneuver\"\n").unwrap();
        assert_eq!(f.scenario.direction, Direction::Extension);
        assert_eq!(f.scenario.target_deg, 38.0);
        assert_eq!(f.pulse, PulseSection::default());
        assert_eq!(f.model().unwrap(), Model::default());
    }

    #[test]
    fn unknown_keys_and_kinds_are_rejected() {
        assert!(ScenarioFile::from_toml("[scenario]\nkind = \"dance\"\n").is_err());
        assert!(ScenarioFile::from_toml("[scenario]\nkind = \"cart\"\nspeed = 3\n").is_err());
        assert!(ScenarioFile::from_toml("[pulse]\npeak_bar = 2.0\n").is_err());
    }

    #[test]
    fn scenario_violations() {
        let mut f = ScenarioFile::from_toml("[scenario]\nkind = \"pressure_sweep\"\n").unwrap();
        let model = f.model().unwrap();
        assert!(f.violations(&model).is_empty());
        f.sweep.pressures_bar.push(7.0);
        f.scenario.dt_s = 0.0;
        let v = f.violations(&model);
        assert!(v
            .iter()
            .any(|e| e.field == "peak_bar" && e.message.contains("7.000 bar")));
        assert!(v.iter().any(|e| e.field == "dt_s"));
    }

    #[test]
    fn range_formula() {
        // Level launch from the ground: v² sin 2e / g.
        let (v, e, g) = (5.0f64, 0.6f64, 9.81);
        let r = projectile_range(v * e.cos(), v * e.sin(), 0.0, g);
        assert!((r - v * v * (2.0 * e).sin() / g).abs() < 1e-12);
        // Horizontal launch from height h: v √(2h/g).
        assert!((projectile_range(3.0, 0.0, 0.5, g) - 3.0 * (1.0 / g).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn labels_are_file_safe() {
        assert_eq!(label(1.0), "1");
        assert_eq!(label(2.5), "2p5");
        assert_eq!(label(-3.25), "m3p25");
    }
}
