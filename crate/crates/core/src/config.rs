//! Physical parameters of a joint, its actuators, the lumped segment and the
//! tailed platform.
//!
//! Everything here is SI (m, kg, s, Pa, rad). The on-disk configuration uses
//! mm / g / deg / bar / kPa and is converted by [`ModelFile::into_model`].

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Upper bound on the positive actuation pressure (6 bar).
pub const MAX_SUPPLY_PRESSURE: f64 = 6.0e5;
/// Lower bound on the vacuum level, set by the vacuum pump (−95 kPa).
pub const MIN_VACUUM_PRESSURE: f64 = -9.5e4;

/// A single violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every violation found in a parameter set.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid parameters: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct Violations(pub Vec<Violation>);

/// Invariant checking shared by all parameter types. Never panics; collects
/// every violation.
pub trait Validate {
    fn violations(&self) -> Vec<Violation>;

    fn validate(&self) -> Result<(), Violations> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Violations(v))
        }
    }
}

fn positive(out: &mut Vec<Violation>, field: &'static str, symbol: &str, value: f64) {
    if !(value > 0.0 && value.is_finite()) {
        out.push(Violation::new(
            field,
            format!("{symbol} must be positive (got {value})"),
        ));
    }
}

fn non_negative(out: &mut Vec<Violation>, field: &'static str, symbol: &str, value: f64) {
    if !(value >= 0.0 && value.is_finite()) {
        out.push(Violation::new(
            field,
            format!("{symbol} must be non-negative (got {value})"),
        ));
    }
}

/// Geometry of one joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointGeometry {
    /// H_j
    pub joint_height: f64,
    /// H_a, initial gap between the two panels.
    pub panel_gap: f64,
    /// D_a
    pub actuator_circle_diameter: f64,
    /// D_p
    pub panel_diameter: f64,
    /// α₁, angular spacing between neighbouring actuators (rad).
    pub actuator_spacing: f64,
    /// Vertebra arc length L of one joint.
    pub arc_length: f64,
    pub actuator_count: usize,
    /// α₂ as tabulated. Its reference frame is undefined, so it is carried
    /// but never used.
    pub segment_tilt: f64,
}

impl Default for JointGeometry {
    fn default() -> Self {
        Self {
            joint_height: 42.51e-3,
            panel_gap: 36.51e-3,
            actuator_circle_diameter: 45.87e-3,
            panel_diameter: 70.94e-3,
            actuator_spacing: 72f64.to_radians(),
            arc_length: 36.51e-3,
            actuator_count: 5,
            segment_tilt: 91.23f64.to_radians(),
        }
    }
}

impl JointGeometry {
    pub fn anchor_radius(&self) -> f64 {
        0.5 * self.actuator_circle_diameter
    }

    /// Non-fatal findings: a vertebra longer than the panel gap.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.arc_length > self.panel_gap {
            w.push(format!(
                "arc length L = {:.3} mm exceeds the panel gap H_a = {:.3} mm",
                self.arc_length * 1e3,
                self.panel_gap * 1e3
            ));
        }
        w
    }
}

impl Validate for JointGeometry {
    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        positive(&mut v, "joint_height", "H_j", self.joint_height);
        positive(&mut v, "panel_gap", "H_a", self.panel_gap);
        positive(
            &mut v,
            "actuator_circle_diameter",
            "D_a",
            self.actuator_circle_diameter,
        );
        positive(&mut v, "panel_diameter", "D_p", self.panel_diameter);
        positive(&mut v, "arc_length", "L", self.arc_length);
        if self.actuator_count == 0 {
            v.push(Violation::new(
                "actuator_count",
                "at least one actuator is required",
            ));
        }
        if !(self.actuator_spacing >= 0.0) {
            v.push(Violation::new(
                "actuator_spacing",
                "alpha_1 must be non-negative",
            ));
        } else if self.actuator_spacing * self.actuator_count as f64 > 2.0 * PI + 1e-12 {
            v.push(Violation::new(
                "actuator_spacing",
                format!(
                    "alpha_1 * n_act = {:.3} deg exceeds a full turn",
                    (self.actuator_spacing * self.actuator_count as f64).to_degrees()
                ),
            ));
        }
        v
    }
}

/// Base-panel attachment point of one actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorAnchor {
    pub index: usize,
    /// `b_i` in the base frame, on the `z = 0` plane.
    pub base_point: Vector3<f64>,
}

impl ActuatorAnchor {
    /// Azimuth of the anchor in the base plane (rad, from +X).
    pub fn azimuth(&self) -> f64 {
        self.base_point.y.atan2(self.base_point.x)
    }
}

/// Places the actuators on the circle of diameter `D_a`, `alpha_1` apart,
/// with the layout centred on +Y. For an odd count one anchor sits on +Y; the
/// set is mirror-symmetric about the YZ plane for any count.
pub fn derive_anchors(geom: &JointGeometry) -> Vec<ActuatorAnchor> {
    let n = geom.actuator_count;
    let radius = geom.anchor_radius();
    let centre = 0.5 * (n as f64 - 1.0);
    let mut anchors: Vec<ActuatorAnchor> = (0..n)
        .map(|k| {
            let offset = (k as f64 - centre) * geom.actuator_spacing;
            // x = r sin(offset), y = r cos(offset): exactly mirror-paired.
            let (s, c) = offset.sin_cos();
            ActuatorAnchor {
                index: 0,
                base_point: Vector3::new(radius * s, radius * c, 0.0),
            }
        })
        .collect();
    // Number counter-clockwise from the +Y anchor.
    anchors.sort_by(|a, b| {
        let key = |p: &ActuatorAnchor| (p.azimuth() - 0.5 * PI).rem_euclid(2.0 * PI);
        key(a).total_cmp(&key(b))
    });
    for (i, a) in anchors.iter_mut().enumerate() {
        a.index = i;
    }
    anchors
}

/// How the pneumatic moment arm is applied across actuators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeverArm {
    /// The same arm `r = D_a/2` for every actuator.
    #[default]
    Uniform,
    /// Each actuator uses the distance of its anchor from the bending axis.
    PerAnchor,
}

/// Static model of a soft origami actuator plus its damper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoaParams {
    /// Effective area A (m²).
    pub area: f64,
    /// m: stiffness slope (N/m per Pa).
    pub stiffness_slope: f64,
    /// n: stiffness offset (N/m).
    pub stiffness_offset: f64,
    /// c: linear damping (N·s/m).
    pub damping: f64,
    /// r = D_a / 2 (m).
    pub lever_arm: f64,
    pub lever_arm_mode: LeverArm,
    pub max_pressure: f64,
    pub min_pressure: f64,
}

impl SoaParams {
    /// k = m·P + n.
    pub fn stiffness(&self, pressure: f64) -> f64 {
        self.stiffness_slope * pressure + self.stiffness_offset
    }
}

impl Validate for SoaParams {
    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        positive(&mut v, "area", "A", self.area);
        positive(&mut v, "lever_arm", "r", self.lever_arm);
        non_negative(&mut v, "damping", "c", self.damping);
        if !self.stiffness_slope.is_finite() {
            v.push(Violation::new("stiffness_slope", "m must be finite"));
        }
        if !self.stiffness_offset.is_finite() {
            v.push(Violation::new("stiffness_offset", "n must be finite"));
        }
        if !(self.max_pressure > 0.0) {
            v.push(Violation::new("max_pressure", "P_max must be positive"));
        } else if self.max_pressure > MAX_SUPPLY_PRESSURE {
            v.push(Violation::new(
                "max_pressure",
                format!(
                    "P_max = {:.3} bar exceeds the 6 bar actuation limit",
                    self.max_pressure / 1e5
                ),
            ));
        }
        if !(self.min_pressure < 0.0) {
            v.push(Violation::new(
                "min_pressure",
                "P_min must be negative (vacuum)",
            ));
        } else if self.min_pressure < MIN_VACUUM_PRESSURE {
            v.push(Violation::new(
                "min_pressure",
                format!(
                    "P_min = {:.1} kPa is below the -95 kPa vacuum limit",
                    self.min_pressure / 1e3
                ),
            ));
        }
        v
    }
}

/// Lumped rigid-body parameters of a joint or segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicParams {
    pub mass: f64,
    /// Moment of inertia about the centre of mass (kg·m²).
    pub inertia: f64,
    pub arc_length: f64,
    /// Vertebra Young's modulus E (Pa).
    pub youngs_modulus: f64,
    /// Vertebra area moment I_p (m⁴).
    pub area_moment: f64,
    pub gravity: f64,
    /// Point mass carried at the distal tip (kg).
    pub tip_mass: f64,
}

impl DynamicParams {
    /// E·I_p / L.
    pub fn vertebra_stiffness(&self) -> f64 {
        self.youngs_modulus * self.area_moment / self.arc_length
    }

    /// Mass entering the kinetic terms. A tip point mass sits on the chord at
    /// twice the centre-of-mass distance, so it counts fourfold.
    pub fn inertial_mass(&self) -> f64 {
        self.mass + 4.0 * self.tip_mass
    }

    /// Mass entering the gravity and base-force terms (tip mass counts twice).
    pub fn gravitational_mass(&self) -> f64 {
        self.mass + 2.0 * self.tip_mass
    }

    /// Thin-rod estimate `m L² / 12` about the centre of mass.
    pub fn thin_rod_inertia(mass: f64, length: f64) -> f64 {
        mass * length * length / 12.0
    }
}

impl Validate for DynamicParams {
    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        positive(&mut v, "mass", "m", self.mass);
        positive(&mut v, "inertia", "I", self.inertia);
        positive(&mut v, "arc_length", "L", self.arc_length);
        positive(&mut v, "youngs_modulus", "E", self.youngs_modulus);
        positive(&mut v, "area_moment", "I_p", self.area_moment);
        non_negative(&mut v, "gravity", "g", self.gravity);
        non_negative(&mut v, "tip_mass", "tip mass", self.tip_mass);
        v
    }
}

/// Two-body hinged platform: robot body plus tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformParams {
    pub body_mass: f64,
    pub tail_mass: f64,
    pub body_inertia: f64,
    pub tail_inertia: f64,
    /// L_r, hinge to body centre of mass.
    pub body_com: f64,
    /// L_t, hinge to tail centre of mass.
    pub tail_com: f64,
    pub gravity: f64,
}

impl PlatformParams {
    /// I_t + m_t L_t², tail inertia about the hinge.
    pub fn tail_hinge_inertia(&self) -> f64 {
        self.tail_inertia + self.tail_mass * self.tail_com * self.tail_com
    }

    /// I_r + m_r L_r², body inertia about the hinge.
    pub fn body_hinge_inertia(&self) -> f64 {
        self.body_inertia + self.body_mass * self.body_com * self.body_com
    }
}

impl Validate for PlatformParams {
    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        positive(&mut v, "body_mass", "m_r", self.body_mass);
        positive(&mut v, "tail_mass", "m_t", self.tail_mass);
        positive(&mut v, "body_inertia", "I_r", self.body_inertia);
        positive(&mut v, "tail_inertia", "I_t", self.tail_inertia);
        positive(&mut v, "body_com", "L_r", self.body_com);
        positive(&mut v, "tail_com", "L_t", self.tail_com);
        non_negative(&mut v, "gravity", "g", self.gravity);
        v
    }
}

/// Complete validated parameter set in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub geometry: JointGeometry,
    pub anchors: Vec<ActuatorAnchor>,
    pub soa: SoaParams,
    pub dynamics: DynamicParams,
    pub platform: PlatformParams,
}

impl Default for Model {
    fn default() -> Self {
        ModelFile::default()
            .into_model()
            .expect("shipped defaults are valid")
    }
}

impl Model {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = self.geometry.warnings();
        if self.soa.stiffness(self.soa.min_pressure) <= 0.0 {
            w.push(format!(
                "SOA stiffness m P + n is not positive at P_min = {:.1} kPa",
                self.soa.min_pressure / 1e3
            ));
        }
        w
    }
}

impl Validate for Model {
    fn violations(&self) -> Vec<Violation> {
        let mut v = self.geometry.violations();
        v.extend(self.soa.violations());
        v.extend(self.dynamics.violations());
        v.extend(self.platform.violations());
        v
    }
}

/// Errors from loading a configuration file.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] Violations),
}

// ---------------------------------------------------------------------------
// File representation (engineering units).

/// `[geometry]`: lengths in mm, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub joint_height_mm: f64,
    pub panel_gap_mm: f64,
    pub actuator_circle_diameter_mm: f64,
    pub panel_diameter_mm: f64,
    pub actuator_spacing_deg: f64,
    /// Defaults to `panel_gap_mm`.
    pub arc_length_mm: Option<f64>,
    pub actuator_count: usize,
    pub segment_tilt_deg: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            joint_height_mm: 42.51,
            panel_gap_mm: 36.51,
            actuator_circle_diameter_mm: 45.87,
            panel_diameter_mm: 70.94,
            actuator_spacing_deg: 72.0,
            arc_length_mm: None,
            actuator_count: 5,
            segment_tilt_deg: 91.23,
        }
    }
}

/// `[soa]`: pressures in bar / kPa, stiffness in N/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoaSection {
    /// Circumcircle diameter of the actuator cross-section. Bounds the
    /// effective area.
    pub circumcircle_diameter_mm: f64,
    /// A
    pub effective_area_mm2: f64,
    /// m, expressed per bar.
    pub stiffness_slope_n_per_m_per_bar: f64,
    /// n
    pub stiffness_offset_n_per_m: f64,
    pub damping_n_s_per_m: f64,
    pub max_pressure_bar: f64,
    pub min_pressure_kpa: f64,
    pub lever_arm: LeverArm,
}

impl Default for SoaSection {
    fn default() -> Self {
        Self {
            circumcircle_diameter_mm: 24.78,
            effective_area_mm2: 100.0,
            stiffness_slope_n_per_m_per_bar: 100.0,
            stiffness_offset_n_per_m: 300.0,
            damping_n_s_per_m: 52.0,
            max_pressure_bar: 6.0,
            min_pressure_kpa: -95.0,
            lever_arm: LeverArm::Uniform,
        }
    }
}

/// `[dynamics]`: mass in g, vertebra modulus in MPa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub mass_g: f64,
    /// Defaults to the thin-rod estimate over the arc length.
    pub inertia_kg_m2: Option<f64>,
    /// Defaults to the geometry arc length.
    pub arc_length_mm: Option<f64>,
    pub youngs_modulus_mpa: f64,
    pub vertebra_diameter_mm: f64,
    /// Overrides the solid-rod `π d⁴ / 64`.
    pub area_moment_mm4: Option<f64>,
    pub gravity_m_s2: f64,
    pub tip_mass_g: f64,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            mass_g: 111.2,
            inertia_kg_m2: None,
            arc_length_mm: None,
            youngs_modulus_mpa: 10.0,
            vertebra_diameter_mm: 6.0,
            area_moment_mm4: None,
            gravity_m_s2: 9.81,
            tip_mass_g: 0.0,
        }
    }
}

/// `[platform]`: SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatformSection {
    pub body_mass_kg: f64,
    pub tail_mass_kg: f64,
    pub body_inertia_kg_m2: f64,
    pub tail_inertia_kg_m2: f64,
    pub body_com_m: f64,
    pub tail_com_m: f64,
    pub gravity_m_s2: f64,
}

impl Default for PlatformSection {
    fn default() -> Self {
        Self {
            body_mass_kg: 1.5,
            tail_mass_kg: 0.283,
            body_inertia_kg_m2: 6.0e-3,
            tail_inertia_kg_m2: 1.04e-3,
            body_com_m: 0.12,
            tail_com_m: 0.105,
            gravity_m_s2: 9.81,
        }
    }
}

/// The model part of a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelFile {
    pub geometry: GeometrySection,
    pub soa: SoaSection,
    pub dynamics: DynamicsSection,
    pub platform: PlatformSection,
}

impl ModelFile {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Converts to SI, derives anchors and validates.
    pub fn into_model(self) -> Result<Model, Violations> {
        let g = &self.geometry;
        let geometry = JointGeometry {
            joint_height: g.joint_height_mm * 1e-3,
            panel_gap: g.panel_gap_mm * 1e-3,
            actuator_circle_diameter: g.actuator_circle_diameter_mm * 1e-3,
            panel_diameter: g.panel_diameter_mm * 1e-3,
            actuator_spacing: g.actuator_spacing_deg.to_radians(),
            arc_length: g.arc_length_mm.unwrap_or(g.panel_gap_mm) * 1e-3,
            actuator_count: g.actuator_count,
            segment_tilt: g.segment_tilt_deg.to_radians(),
        };

        let s = &self.soa;
        let area = s.effective_area_mm2 * 1e-6;
        let circumcircle = 0.5 * s.circumcircle_diameter_mm * 1e-3;
        let mut extra = Vec::new();
        if area > PI * circumcircle * circumcircle {
            extra.push(Violation::new(
                "effective_area",
                "A cannot exceed the circumcircle area of the actuator section",
            ));
        }
        let soa = SoaParams {
            area,
            stiffness_slope: s.stiffness_slope_n_per_m_per_bar / 1e5,
            stiffness_offset: s.stiffness_offset_n_per_m,
            damping: s.damping_n_s_per_m,
            lever_arm: geometry.anchor_radius(),
            lever_arm_mode: s.lever_arm,
            max_pressure: s.max_pressure_bar * 1e5,
            min_pressure: s.min_pressure_kpa * 1e3,
        };

        let d = &self.dynamics;
        let mass = d.mass_g * 1e-3;
        let arc_length = d.arc_length_mm.map_or(geometry.arc_length, |l| l * 1e-3);
        let area_moment = match d.area_moment_mm4 {
            Some(i) => i * 1e-12,
            None => {
                let dia = d.vertebra_diameter_mm * 1e-3;
                PI * dia.powi(4) / 64.0
            }
        };
        let dynamics = DynamicParams {
            mass,
            inertia: d
                .inertia_kg_m2
                .unwrap_or_else(|| DynamicParams::thin_rod_inertia(mass, arc_length)),
            arc_length,
            youngs_modulus: d.youngs_modulus_mpa * 1e6,
            area_moment,
            gravity: d.gravity_m_s2,
            tip_mass: d.tip_mass_g * 1e-3,
        };

        let p = &self.platform;
        let platform = PlatformParams {
            body_mass: p.body_mass_kg,
            tail_mass: p.tail_mass_kg,
            body_inertia: p.body_inertia_kg_m2,
            tail_inertia: p.tail_inertia_kg_m2,
            body_com: p.body_com_m,
            tail_com: p.tail_com_m,
            gravity: p.gravity_m_s2,
        };

        let mut model = Model {
            anchors: Vec::new(),
            geometry,
            soa,
            dynamics,
            platform,
        };
        extra.extend(model.violations());
        if !extra.is_empty() {
            return Err(Violations(extra));
        }
        model.anchors = derive_anchors(&model.geometry);
        Ok(model)
    }
}

/// The shipped defaults file, documenting every key and its unit.
pub const DEFAULTS_TOML: &str = include_str!("../../../configs/defaults.toml");

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn azimuths_deg(anchors: &[ActuatorAnchor]) -> Vec<f64> {
        let mut a: Vec<f64> = anchors
            .iter()
            .map(|p| p.azimuth().to_degrees().rem_euclid(360.0))
            .collect();
        a.sort_by(f64::total_cmp);
        a
    }

    #[test]
    fn pentagon_layout_matches_table_values() {
        let anchors = derive_anchors(&JointGeometry::default());
        assert_eq!(anchors.len(), 5);
        let expected = [18.0, 90.0, 162.0, 234.0, 306.0];
        for (got, want) in azimuths_deg(&anchors).iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        for a in &anchors {
            assert!((a.base_point.norm() - 22.935e-3).abs() < 1e-12);
            assert_eq!(a.base_point.z, 0.0);
        }
        assert!((anchors[0].azimuth().to_degrees() - 90.0).abs() < 1e-12);
    }

    #[test]
    fn single_actuator_sits_on_plus_y() {
        let geom = JointGeometry {
            actuator_count: 1,
            ..Default::default()
        };
        let anchors = derive_anchors(&geom);
        assert_eq!(anchors.len(), 1);
        let b = anchors[0].base_point;
        assert_eq!(b.x, 0.0);
        assert_eq!(b.y, 0.5 * geom.actuator_circle_diameter);
    }

    #[test]
    fn pentagon_x_components_cancel() {
        let anchors = derive_anchors(&JointGeometry::default());
        let sum: Vector3<f64> = anchors.iter().map(|a| a.base_point).sum();
        assert!(sum.x.abs() < 1e-15);
    }

    #[test]
    fn defaults_validate() {
        assert!(JointGeometry::default().validate().is_ok());
        assert!(Model::default().validate().is_ok());
    }

    #[test]
    fn zero_actuator_diameter_is_reported() {
        let geom = JointGeometry {
            actuator_circle_diameter: 0.0,
            ..Default::default()
        };
        let err = geom.validate().unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].field, "actuator_circle_diameter");
        assert!(err.0[0].message.contains("D_a must be positive"));
    }

    #[test]
    fn pressure_above_six_bar_is_reported() {
        let mut soa = Model::default().soa;
        soa.max_pressure = 7e5;
        let err = soa.validate().unwrap_err();
        assert!(err.0.iter().any(|v| v.message.contains("6 bar")));
    }

    #[test]
    fn validation_collects_every_violation() {
        let dynp = DynamicParams {
            mass: -1.0,
            inertia: 0.0,
            arc_length: 0.0,
            youngs_modulus: 1.0,
            area_moment: 1.0,
            gravity: -9.81,
            tip_mass: 0.0,
        };
        let fields: Vec<_> = dynp.violations().iter().map(|v| v.field).collect();
        assert_eq!(fields, ["mass", "inertia", "arc_length", "gravity"]);
    }

    #[test]
    fn spacing_over_full_turn_is_rejected() {
        let geom = JointGeometry {
            actuator_spacing: 80f64.to_radians(),
            ..Default::default()
        };
        assert!(geom.validate().is_err());
    }

    #[test]
    fn long_vertebra_only_warns() {
        let geom = JointGeometry {
            arc_length: 40e-3,
            ..Default::default()
        };
        assert!(geom.validate().is_ok());
        assert_eq!(geom.warnings().len(), 1);
        assert!(JointGeometry::default().warnings().is_empty());
    }

    #[test]
    fn shipped_defaults_file_matches_builtin_defaults() {
        let parsed = ModelFile::from_toml(DEFAULTS_TOML).unwrap();
        assert_eq!(parsed, ModelFile::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ModelFile::from_toml("[geometry]\nbogus_mm = 3.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(ModelFile::from_toml("[nonsense]\n").is_err());
    }

    #[test]
    fn units_are_converted_on_load() {
        let file = ModelFile::from_toml(
            "[geometry]\npanel_gap_mm = 40.0\n[soa]\nmax_pressure_bar = 2.0\n[dynamics]\nmass_g = 200.0\n",
        )
        .unwrap();
        let model = file.into_model().unwrap();
        assert_eq!(model.geometry.arc_length, 40e-3);
        assert_eq!(model.soa.max_pressure, 2e5);
        assert_eq!(model.dynamics.mass, 0.2);
        assert!((model.soa.area - 1e-4).abs() < 1e-18);
        assert_eq!(model.soa.stiffness_slope, 1e-3);
        assert_eq!(
            model.soa.lever_arm,
            0.5 * model.geometry.actuator_circle_diameter
        );
    }

    proptest! {
        #[test]
        fn anchors_are_mirror_symmetric(
            n in 1usize..9,
            dia in 1e-3f64..0.2,
            frac in 0.05f64..1.0,
        ) {
            let geom = JointGeometry {
                actuator_count: n,
                actuator_circle_diameter: dia,
                actuator_spacing: frac * 2.0 * PI / n as f64,
                ..Default::default()
            };
            let anchors = derive_anchors(&geom);
            prop_assert_eq!(anchors.len(), n);
            for a in &anchors {
                let p = a.base_point;
                prop_assert!((p.norm() - 0.5 * dia).abs() < 1e-12);
                let mirrored = anchors.iter().any(|b| {
                    (b.base_point.x + p.x).abs() < 1e-12 && (b.base_point.y - p.y).abs() < 1e-12
                });
                prop_assert!(mirrored);
            }
        }
    }
}
