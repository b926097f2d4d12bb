//! Physical parameters, launch commands, simulation settings and the shared
//! state types.
//!
//! Parameters are loaded from flat `key=value` text (one entry per line, `#`
//! starts a comment). Keys not given in the text keep their defaults:
//!
//! | key | default | unit |
//! |---|---|---|
//! | body_length | 0.50 | m |
//! | mass | 3.0 | kg |
//! | yaw_inertia | 0.0368 | kg·m² |
//! | fluid_density | 1000 | kg/m³ |
//! | cd_surge | 0.25 | - |
//! | cd_sway | 1.70 | - |
//! | frontal_area | 0.008 | m² |
//! | lateral_area | 0.045 | m² |
//! | yaw_damping | 0.156 | N·m·s² |
//! | added_mass_surge | 0.3 | kg |
//! | added_mass_sway | 0.55 | kg |
//! | added_yaw_inertia | 0.0101 | kg·m² |
//! | pivot_offset | 0.18 | m |
//! | fin_offset | 0.12 | m |
//! | fin_area | 0.00658 | m² |
//! | fin_normal_coeff | 2.0 | - |
//! | linkage_ratio | 1.0 | - |
//! | plate_stiffness | 18.5 | N·m/rad |
//! | plate_damping | 0.0081 | N·m·s/rad |
//! | hinge_stiffness | 0.216 | N·m/rad |
//! | hinge_damping | 0.0304 | N·m·s/rad |
//! | fin_inertia | 3.14e-5 | kg·m² |
//!
//! Mass, size and drag values are nominal for a half-metre prototype. The
//! inertia, added-mass and tail values were tuned so the clamped plate stays
//! below resonance and the heading is stable across the sweep grid. The
//! authoritative values are the ones in [`RobotParams::default`]; the shipped
//! `config/default.cfg` is generated from them.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors from parsing or validating a parameter file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: cannot parse value `{value}` for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error(transparent)]
    Sim(#[from] SimConfigError),
    #[error("`{key}` = {value} is invalid: must be {rule}")]
    Invalid {
        key: &'static str,
        value: f64,
        rule: &'static str,
    },
}

/// Rejected tail command.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CommandError {
    #[error("amplitude {0} deg outside [0, 80]")]
    Amplitude(f64),
    #[error("frequency {0} Hz outside [0, 7]")]
    Frequency(f64),
}

/// Rejected simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimConfigError {
    #[error("dt {0} s outside (0, 0.01]")]
    Step(f64),
    #[error("max_duration {0} s must be positive")]
    Duration(f64),
    #[error("telemetry_rate {0} frames/s must be positive")]
    TelemetryRate(f64),
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    Positive,
    NonNegative,
    Linkage,
}

impl Rule {
    fn holds(self, v: f64) -> bool {
        match self {
            Rule::Positive => v.is_finite() && v > 0.0,
            Rule::NonNegative => v.is_finite() && v >= 0.0,
            Rule::Linkage => v.is_finite() && v > 0.0 && v <= 2.0,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Rule::Positive => "finite and > 0",
            Rule::NonNegative => "finite and >= 0",
            Rule::Linkage => "in (0, 2]",
        }
    }
}

macro_rules! robot_params {
    ($( $(#[$doc:meta])* $name:ident : $rule:ident = $default:expr ),* $(,)?) => {
        /// Every physical constant of the robot and the surrounding water.
        ///
        /// Units are SI throughout; angles are radians.
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct RobotParams {
            $( $(#[$doc])* pub $name: f64, )*
        }

        impl Default for RobotParams {
            fn default() -> Self {
                Self { $( $name: $default, )* }
            }
        }

        impl RobotParams {
            /// Field names in canonical order; these are the config keys.
            pub const KEYS: &'static [&'static str] = &[$( stringify!($name) ),*];

            fn field_mut(&mut self, key: &str) -> Option<&mut f64> {
                match key {
                    $( stringify!($name) => Some(&mut self.$name), )*
                    _ => None,
                }
            }

            /// `(key, value)` pairs in canonical order.
            pub fn entries(&self) -> Vec<(&'static str, f64)> {
                vec![$( (stringify!($name), self.$name) ),*]
            }

            fn rules(&self) -> [(&'static str, f64, Rule); Self::KEYS.len()] {
                [$( (stringify!($name), self.$name, Rule::$rule) ),*]
            }
        }
    };
}

robot_params! {
    /// Nose-to-tail length, m.
    body_length: Positive = 0.50,
    /// Dry mass, kg.
    mass: Positive = 3.0,
    /// Rigid-body yaw inertia about the centre of mass, kg·m².
    yaw_inertia: Positive = 0.0368,
    /// kg/m³.
    fluid_density: Positive = 1000.0,
    cd_surge: NonNegative = 0.25,
    cd_sway: NonNegative = 1.70,
    /// Reference area for surge drag, m².
    frontal_area: Positive = 0.008,
    /// Reference area for sway drag, m².
    lateral_area: Positive = 0.045,
    /// Quadratic yaw damping, N·m·s².
    yaw_damping: NonNegative = 0.156,
    added_mass_surge: Positive = 0.3,
    added_mass_sway: Positive = 0.55,
    added_yaw_inertia: Positive = 0.0101,
    /// Centre of mass to plate root (aft), m.
    pivot_offset: Positive = 0.18,
    /// Plate root to fin centre of pressure, m.
    fin_offset: Positive = 0.12,
    fin_area: Positive = 0.00658,
    /// Flat-plate normal force coefficient: C_N = fin_normal_coeff · sin(α).
    fin_normal_coeff: NonNegative = 2.0,
    /// Servo angle to plate-root angle.
    linkage_ratio: Linkage = 1.0,
    plate_stiffness: Positive = 18.5,
    plate_damping: NonNegative = 0.0081,
    hinge_stiffness: Positive = 0.216,
    hinge_damping: NonNegative = 0.0304,
    /// Fin inertia about its hinge, kg·m².
    fin_inertia: Positive = 3.14e-5,
}

impl RobotParams {
    /// Checks every field against its invariant, reporting the first offender.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, value, rule) in self.rules() {
            if !rule.holds(value) {
                return Err(ConfigError::Invalid {
                    key,
                    value,
                    rule: rule.describe(),
                });
            }
        }
        Ok(())
    }

    /// Surge mass including added mass.
    pub fn surge_mass(&self) -> f64 {
        self.mass + self.added_mass_surge
    }

    /// Sway mass including added mass.
    pub fn sway_mass(&self) -> f64 {
        self.mass + self.added_mass_sway
    }

    /// Yaw inertia including added inertia.
    pub fn total_yaw_inertia(&self) -> f64 {
        self.yaw_inertia + self.added_yaw_inertia
    }

    /// Length of the elastic plate from root to hinge: the fin centre of
    /// pressure sits a quarter of `fin_offset` behind the hinge.
    pub fn plate_length(&self) -> f64 {
        0.75 * self.fin_offset
    }

    /// Hinge to fin centre of pressure.
    pub fn hinge_arm(&self) -> f64 {
        0.25 * self.fin_offset
    }

    /// Writes the parameters as `key=value` lines. Values use the shortest
    /// decimal form that parses back to the same bits.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries() {
            let _ = writeln!(out, "{key}={value}");
        }
        out
    }

    /// Hex SHA-256 over the canonical text form. Changes iff some value does.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_config_text().as_bytes()))
    }

    /// Copy with both tail springs scaled by `factor`.
    pub fn with_stiffness_scaled(&self, factor: f64) -> Self {
        Self {
            plate_stiffness: self.plate_stiffness * factor,
            hinge_stiffness: self.hinge_stiffness * factor,
            ..*self
        }
    }
}

/// One `key=value` line of a config file.
struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn unknown(&self) -> ConfigError {
        ConfigError::UnknownKey {
            line: self.line,
            key: self.key.to_string(),
        }
    }

    fn parse<T: std::str::FromStr>(&self) -> Result<T, ConfigError> {
        self.value.parse().map_err(|_| ConfigError::BadValue {
            line: self.line,
            key: self.key.to_string(),
            value: self.value.to_string(),
        })
    }
}

fn entries(text: &str) -> Result<Vec<Entry<'_>>, ConfigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let syntax = || ConfigError::Syntax {
            line: idx + 1,
            text: raw.to_string(),
        };
        let (key, value) = line.split_once('=').ok_or_else(syntax)?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(syntax());
        }
        out.push(Entry {
            line: idx + 1,
            key,
            value,
        });
    }
    Ok(out)
}

fn set_param(params: &mut RobotParams, entry: &Entry) -> Result<(), ConfigError> {
    let value = entry.parse()?;
    *params.field_mut(entry.key).ok_or_else(|| entry.unknown())? = value;
    Ok(())
}

/// Parses `key=value` text over the defaults and validates the result.
pub fn load_params(config_text: &str) -> Result<RobotParams, ConfigError> {
    let mut params = RobotParams::default();
    for entry in entries(config_text)? {
        set_param(&mut params, &entry)?;
    }
    params.validate()?;
    Ok(params)
}

/// Like [`load_params`], but the same file may also carry the simulation
/// keys `dt`, `max_duration`, `telemetry_rate` and `seed`.
pub fn load_config(config_text: &str) -> Result<(RobotParams, SimConfig), ConfigError> {
    let mut params = RobotParams::default();
    let mut sim = SimConfig::default();
    for entry in entries(config_text)? {
        match entry.key {
            "dt" => sim.dt = entry.parse()?,
            "max_duration" => sim.max_duration = entry.parse()?,
            "telemetry_rate" => sim.telemetry_rate = entry.parse()?,
            "seed" => sim.seed = entry.parse()?,
            _ => set_param(&mut params, &entry)?,
        }
    }
    params.validate()?;
    sim.validate()?;
    Ok((params, sim))
}

/// Servo program for one launch: `amplitude · sin(2π · frequency · t)`.
///
/// Amplitude is in degrees, as set by the operator; conversion to radians
/// happens in [`crate::tail::servo_angle`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TailCommand {
    pub amplitude: f64,
    pub frequency: f64,
}

impl TailCommand {
    pub const MAX_AMPLITUDE_DEG: f64 = 80.0;
    pub const MAX_FREQUENCY_HZ: f64 = 7.0;

    pub fn new(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
        }
    }

    pub fn rest() -> Self {
        Self::default()
    }

    /// Stroke period in seconds, `None` for the rest frequency.
    pub fn period(&self) -> Option<f64> {
        (self.frequency > 0.0).then(|| 1.0 / self.frequency)
    }
}

/// Accepts exactly `[0, 80]` deg × `[0, 7]` Hz.
pub fn validate_command(cmd: &TailCommand) -> Result<(), CommandError> {
    if !(0.0..=TailCommand::MAX_AMPLITUDE_DEG).contains(&cmd.amplitude) {
        return Err(CommandError::Amplitude(cmd.amplitude));
    }
    if !(0.0..=TailCommand::MAX_FREQUENCY_HZ).contains(&cmd.frequency) {
        return Err(CommandError::Frequency(cmd.frequency));
    }
    Ok(())
}

/// Planar pose in the world frame and velocities in the body frame
/// (x forward, y to port).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl BodyState {
    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.yaw, self.u, self.v, self.r]
            .iter()
            .all(|c| c.is_finite())
    }
}

/// Lumped tail: plate deflection at the root and fin deflection relative to
/// the plate tip.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TailState {
    pub plate_angle: f64,
    pub plate_rate: f64,
    pub hinge_angle: f64,
    pub hinge_rate: f64,
}

impl TailState {
    pub fn is_finite(&self) -> bool {
        [
            self.plate_angle,
            self.plate_rate,
            self.hinge_angle,
            self.hinge_rate,
        ]
        .iter()
        .all(|c| c.is_finite())
    }

    /// Fin angle relative to the body axis.
    pub fn fin_angle(&self) -> f64 {
        self.plate_angle + self.hinge_angle
    }

    pub fn negated(&self) -> Self {
        Self {
            plate_angle: -self.plate_angle,
            plate_rate: -self.plate_rate,
            hinge_angle: -self.hinge_angle,
            hinge_rate: -self.hinge_rate,
        }
    }
}

/// Integrator and logging settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub max_duration: f64,
    pub telemetry_rate: f64,
    /// Unused: the simulation has no stochastic terms.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 5e-4,
            max_duration: 120.0,
            telemetry_rate: 50.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimConfigError> {
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(SimConfigError::Step(self.dt));
        }
        if !(self.max_duration > 0.0 && self.max_duration.is_finite()) {
            return Err(SimConfigError::Duration(self.max_duration));
        }
        if !(self.telemetry_rate > 0.0 && self.telemetry_rate.is_finite()) {
            return Err(SimConfigError::TelemetryRate(self.telemetry_rate));
        }
        Ok(())
    }
}
