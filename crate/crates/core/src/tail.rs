//! Servo program, rod linkage and the two-stage compliant tail.
//!
//! The elastic plate is a single torsional spring-damper between the servo
//! driven root angle and the plate, carrying the fin assembly. The fin sits on
//! a spring-loaded hinge at the plate tip and is moved only by its spring,
//! damper and the hydrodynamic moment about the hinge:
//!
//! ```text
//! I · θp'' = −k_p (θp − drive) − c_p (θp' − drive')
//! I · θh'' = −k_h θh − c_h θh' + M_hydro
//! ```
//!
//! with `I = fin_inertia` for both stages.

use std::f64::consts::PI;

use crate::dynamics::SimError;
use crate::geom::Vec2;
use crate::params::{BodyState, RobotParams, TailCommand, TailState};

/// Servo trajectory in radians: `amplitude · sin(omega · t)`.
///
/// A negative amplitude is the phase-inverted program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stroke {
    pub amplitude: f64,
    pub omega: f64,
}

impl Stroke {
    pub fn from_command(cmd: &TailCommand) -> Self {
        Self {
            amplitude: cmd.amplitude.to_radians(),
            omega: 2.0 * PI * cmd.frequency,
        }
    }

    pub fn inverted(self) -> Self {
        Self {
            amplitude: -self.amplitude,
            ..self
        }
    }

    fn is_rest(&self) -> bool {
        self.amplitude == 0.0 || self.omega == 0.0
    }

    pub fn angle(&self, t: f64) -> f64 {
        if self.is_rest() {
            return 0.0;
        }
        self.amplitude * (self.omega * t).sin()
    }

    pub fn rate(&self, t: f64) -> f64 {
        if self.is_rest() {
            return 0.0;
        }
        self.amplitude * self.omega * (self.omega * t).cos()
    }
}

impl From<&TailCommand> for Stroke {
    fn from(cmd: &TailCommand) -> Self {
        Self::from_command(cmd)
    }
}

/// Commanded servo angle at time `t`, radians.
pub fn servo_angle(cmd: &TailCommand, t: f64) -> f64 {
    Stroke::from_command(cmd).angle(t)
}

/// Plate-root angle imposed through the rods.
pub fn plate_drive_angle(servo: f64, params: &RobotParams) -> f64 {
    params.linkage_ratio * servo
}

/// Angular accelerations `(plate, hinge)` of the tail.
pub fn tail_accelerations(
    state: &TailState,
    drive: f64,
    drive_rate: f64,
    fin_hydro_moment: f64,
    params: &RobotParams,
) -> (f64, f64) {
    let inertia = params.fin_inertia;
    let plate = (-params.plate_stiffness * (state.plate_angle - drive)
        - params.plate_damping * (state.plate_rate - drive_rate))
        / inertia;
    let hinge = (-params.hinge_stiffness * state.hinge_angle
        - params.hinge_damping * state.hinge_rate
        + fin_hydro_moment)
        / inertia;
    (plate, hinge)
}

fn tail_rate(
    s: &TailState,
    drive: f64,
    drive_rate: f64,
    moment: f64,
    params: &RobotParams,
) -> [f64; 4] {
    let (pa, ha) = tail_accelerations(s, drive, drive_rate, moment, params);
    [s.plate_rate, pa, s.hinge_rate, ha]
}

fn offset(s: &TailState, k: &[f64; 4], h: f64) -> TailState {
    TailState {
        plate_angle: s.plate_angle + h * k[0],
        plate_rate: s.plate_rate + h * k[1],
        hinge_angle: s.hinge_angle + h * k[2],
        hinge_rate: s.hinge_rate + h * k[3],
    }
}

/// One RK4 step of the tail alone.
///
/// Over the step the drive ramps linearly from `drive` at `drive_rate` and the
/// hydrodynamic hinge moment is held constant.
pub fn step_tail(
    state: &TailState,
    drive: f64,
    drive_rate: f64,
    fin_hydro_moment: f64,
    dt: f64,
    params: &RobotParams,
) -> Result<TailState, SimError> {
    if !state.is_finite()
        || !drive.is_finite()
        || !drive_rate.is_finite()
        || !fin_hydro_moment.is_finite()
        || !dt.is_finite()
    {
        return Err(SimError::NonFinite);
    }
    let m = fin_hydro_moment;
    let half = 0.5 * dt;
    let k1 = tail_rate(state, drive, drive_rate, m, params);
    let k2 = tail_rate(
        &offset(state, &k1, half),
        drive + drive_rate * half,
        drive_rate,
        m,
        params,
    );
    let k3 = tail_rate(
        &offset(state, &k2, half),
        drive + drive_rate * half,
        drive_rate,
        m,
        params,
    );
    let k4 = tail_rate(
        &offset(state, &k3, dt),
        drive + drive_rate * dt,
        drive_rate,
        m,
        params,
    );
    let mut incr = [0.0; 4];
    for i in 0..4 {
        incr[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    let next = offset(state, &incr, dt);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(SimError::NonFinite)
    }
}

/// Mechanical energy stored in the tail: both springs plus the kinetic
/// energy of the two stages.
pub fn tail_energy(state: &TailState, drive: f64, params: &RobotParams) -> f64 {
    let d = state.plate_angle - drive;
    0.5 * params.plate_stiffness * d * d
        + 0.5 * params.hinge_stiffness * state.hinge_angle * state.hinge_angle
        + 0.5 * params.fin_inertia * (state.plate_rate.powi(2) + state.hinge_rate.powi(2))
}

/// Steady-state plate amplitude per unit drive amplitude at `omega`: the
/// plate stage is linear, so this is the exact gain of the spring-damper.
pub fn plate_gain(omega: f64, params: &RobotParams) -> f64 {
    let k = params.plate_stiffness;
    let c = params.plate_damping;
    let i = params.fin_inertia;
    let num = k.hypot(c * omega);
    let den = (k - i * omega * omega).hypot(c * omega);
    num / den
}

/// Fin centre-of-pressure kinematics in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinKinematics {
    pub position: Vec2,
    /// Absolute fin angle: yaw + plate + hinge. The chord points aft along
    /// `-(cos, sin)` of this angle.
    pub orientation: f64,
    pub velocity: Vec2,
}

impl FinKinematics {
    /// Unit vector from hinge towards the trailing edge.
    pub fn chord(&self) -> Vec2 {
        -Vec2::from_angle(self.orientation)
    }
}

/// Fin centre of pressure in the body frame, relative to the centre of mass,
/// together with its velocity relative to the body.
pub(crate) fn fin_body_offset(tail: &TailState, params: &RobotParams) -> (Vec2, Vec2) {
    let plate_dir = Vec2::from_angle(tail.plate_angle);
    let fin_dir = Vec2::from_angle(tail.fin_angle());
    let root = Vec2::new(-params.pivot_offset, 0.0);
    let lp = params.plate_length();
    let arm = params.hinge_arm();
    let pos = root - plate_dir * lp - fin_dir * arm;
    let vel = -(plate_dir.perp() * (lp * tail.plate_rate))
        - fin_dir.perp() * (arm * (tail.plate_rate + tail.hinge_rate));
    (pos, vel)
}

/// Rigid chain CoM → plate root → plate tip (hinge) → fin centre of pressure.
pub fn fin_world_kinematics(
    body: &BodyState,
    tail: &TailState,
    params: &RobotParams,
) -> FinKinematics {
    let (offset, rel_vel) = fin_body_offset(tail, params);
    let (s, c) = body.yaw.sin_cos();
    let vel_body = Vec2::new(body.u, body.v) + offset.perp() * body.r + rel_vel;
    FinKinematics {
        position: Vec2::new(body.x, body.y) + offset.rotate_sc(s, c),
        orientation: body.yaw + tail.fin_angle(),
        velocity: vel_body.rotate_sc(s, c),
    }
}
