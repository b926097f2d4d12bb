//! Coupled body + tail equations of motion and their fixed-step RK4
//! integration.
//!
//! The body carries added mass in each direction. With `mx`, `my`, `iz` the
//! effective surge mass, sway mass and yaw inertia, the body-frame equations
//! are
//!
//! ```text
//! mx u' =  Fx + my v r
//! my v' =  Fy − mx u r
//! iz r' =  Mz − (my − mx) u v
//! ```
//!
//! which conserve kinetic energy in the absence of external loads. The tail
//! stages (see [`crate::tail`]) are integrated in the same step.

use std::io::{self, Write};

use thiserror::Error;

use crate::fmt::sig9;
use crate::hydro::{body_wrench, fin_wrench};
use crate::params::{
    validate_command, BodyState, CommandError, RobotParams, SimConfig, SimConfigError,
    TailCommand, TailState,
};
use crate::tail::{fin_world_kinematics, plate_drive_angle, tail_accelerations, Stroke};

/// Any state component beyond this magnitude counts as a blow-up.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

pub const STATE_DIM: usize = 10;

/// `[x, y, yaw, u, v, r, plate_angle, plate_rate, hinge_angle, hinge_rate]`
pub type StateVector = [f64; STATE_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimError {
    #[error("non-finite value in tail integration")]
    NonFinite,
    #[error("integration diverged at t = {t} s")]
    Unstable { t: f64 },
    #[error("step {0} s outside (0, 0.01]")]
    InvalidStep(f64),
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error(transparent)]
    Config(#[from] SimConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FullState {
    pub body: BodyState,
    pub tail: TailState,
    pub t: f64,
}

impl FullState {
    pub fn to_vector(&self) -> StateVector {
        let b = &self.body;
        let s = &self.tail;
        [
            b.x,
            b.y,
            b.yaw,
            b.u,
            b.v,
            b.r,
            s.plate_angle,
            s.plate_rate,
            s.hinge_angle,
            s.hinge_rate,
        ]
    }

    pub fn from_vector(v: &StateVector, t: f64) -> Self {
        Self {
            body: BodyState {
                x: v[0],
                y: v[1],
                yaw: v[2],
                u: v[3],
                v: v[4],
                r: v[5],
            },
            tail: TailState {
                plate_angle: v[6],
                plate_rate: v[7],
                hinge_angle: v[8],
                hinge_rate: v[9],
            },
            t,
        }
    }

    /// Reflection across the world x-axis.
    pub fn mirrored(&self) -> Self {
        Self {
            body: BodyState {
                y: -self.body.y,
                yaw: -self.body.yaw,
                v: -self.body.v,
                r: -self.body.r,
                ..self.body
            },
            tail: self.tail.negated(),
            t: self.t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.body.is_finite() && self.tail.is_finite() && self.t.is_finite()
    }

    fn within_limits(&self) -> bool {
        self.to_vector()
            .iter()
            .all(|c| c.is_finite() && c.abs() <= DIVERGENCE_LIMIT)
    }

    /// Kinetic energy of the body including added mass.
    pub fn body_kinetic_energy(&self, params: &RobotParams) -> f64 {
        let b = &self.body;
        0.5 * (params.surge_mass() * b.u * b.u
            + params.sway_mass() * b.v * b.v
            + params.total_yaw_inertia() * b.r * b.r)
    }
}

/// How the body is held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mount {
    #[default]
    Free,
    /// Body frozen in place; only the tail moves (bench calibration).
    Clamped,
}

/// Time derivative of the full state under `cmd`.
pub fn derivative(state: &FullState, cmd: &TailCommand, params: &RobotParams) -> StateVector {
    derivative_driven(state, &Stroke::from_command(cmd), Mount::Free, params)
}

pub fn derivative_driven(
    state: &FullState,
    stroke: &Stroke,
    mount: Mount,
    params: &RobotParams,
) -> StateVector {
    let body = &state.body;
    let tail = &state.tail;
    let drive = plate_drive_angle(stroke.angle(state.t), params);
    let drive_rate = plate_drive_angle(stroke.rate(state.t), params);

    let fin = fin_world_kinematics(body, tail, params);
    let load = fin_wrench(&fin, body, params);
    let (plate_acc, hinge_acc) =
        tail_accelerations(tail, drive, drive_rate, load.hinge_moment, params);

    let mut d = [0.0; STATE_DIM];
    d[6] = tail.plate_rate;
    d[7] = plate_acc;
    d[8] = tail.hinge_rate;
    d[9] = hinge_acc;

    if mount == Mount::Free {
        let (s, c) = body.yaw.sin_cos();
        d[0] = body.u * c - body.v * s;
        d[1] = body.u * s + body.v * c;
        d[2] = body.r;

        let w = body_wrench(body, params) + load.wrench;
        let mx = params.surge_mass();
        let my = params.sway_mass();
        let iz = params.total_yaw_inertia();
        d[3] = (w.fx + my * body.v * body.r) / mx;
        d[4] = (w.fy - mx * body.u * body.r) / my;
        d[5] = (w.mz - (my - mx) * body.u * body.v) / iz;
    }
    d
}

fn axpy(base: &StateVector, k: &StateVector, h: f64) -> StateVector {
    let mut out = *base;
    for (o, ki) in out.iter_mut().zip(k) {
        *o += h * ki;
    }
    out
}

/// One classical RK4 step of the full coupled system.
pub fn step_rk4(
    state: &FullState,
    cmd: &TailCommand,
    dt: f64,
    params: &RobotParams,
) -> Result<FullState, SimError> {
    step_rk4_driven(state, &Stroke::from_command(cmd), Mount::Free, dt, params)
}

pub fn step_rk4_driven(
    state: &FullState,
    stroke: &Stroke,
    mount: Mount,
    dt: f64,
    params: &RobotParams,
) -> Result<FullState, SimError> {
    if !(dt > 0.0 && dt <= 0.01) {
        return Err(SimError::InvalidStep(dt));
    }
    let t = state.t;
    let y = state.to_vector();
    let f = |v: &StateVector, t: f64| {
        derivative_driven(&FullState::from_vector(v, t), stroke, mount, params)
    };
    let half = 0.5 * dt;
    let k1 = f(&y, t);
    let k2 = f(&axpy(&y, &k1, half), t + half);
    let k3 = f(&axpy(&y, &k2, half), t + half);
    let k4 = f(&axpy(&y, &k3, dt), t + dt);
    let mut next = y;
    for i in 0..STATE_DIM {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let out = FullState::from_vector(&next, t + dt);
    if out.within_limits() {
        Ok(out)
    } else {
        Err(SimError::Unstable { t: out.t })
    }
}

/// Step-by-step integration of one launch. Time is kept as
/// `start + steps · dt` so long runs do not accumulate rounding in `t`.
#[derive(Debug, Clone)]
pub struct Launch {
    state: FullState,
    stroke: Stroke,
    mount: Mount,
    dt: f64,
    start: f64,
    steps: u64,
    params: RobotParams,
}

impl Launch {
    pub fn new(
        init: FullState,
        stroke: Stroke,
        mount: Mount,
        dt: f64,
        params: RobotParams,
    ) -> Result<Self, SimError> {
        if !(dt > 0.0 && dt <= 0.01) {
            return Err(SimError::InvalidStep(dt));
        }
        Ok(Self {
            state: init,
            stroke,
            mount,
            dt,
            start: init.t,
            steps: 0,
            params,
        })
    }

    pub fn state(&self) -> &FullState {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self) -> Result<&FullState, SimError> {
        let mut next =
            step_rk4_driven(&self.state, &self.stroke, self.mount, self.dt, &self.params)?;
        self.steps += 1;
        next.t = self.start + self.steps as f64 * self.dt;
        self.state = next;
        Ok(&self.state)
    }

    /// Steps until the step counter reaches `target`.
    pub fn run_to_step(&mut self, target: u64) -> Result<&FullState, SimError> {
        while self.steps < target {
            self.step()?;
        }
        Ok(&self.state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// Aborted on divergence; samples stop before `t`.
    Unstable { t: f64 },
}

/// Telemetry record of one launch: the simulator's counterpart of the video.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub samples: Vec<FullState>,
    pub cmd: TailCommand,
    pub params_digest: String,
    pub termination: Termination,
}

impl TrajectoryLog {
    pub const CSV_HEADER: &'static str = "t,x,y,yaw,u,v,r,plate_angle,hinge_angle";

    pub fn is_complete(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for s in &self.samples {
            let b = &s.body;
            let row = [
                s.t,
                b.x,
                b.y,
                b.yaw,
                b.u,
                b.v,
                b.r,
                s.tail.plate_angle,
                s.tail.hinge_angle,
            ]
            .map(sig9)
            .join(",");
            writeln!(out, "{row}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii csv")
    }
}

/// Integrates a free-swimming launch and samples it at the telemetry rate.
///
/// Divergence does not return an error: the log is truncated and flagged.
pub fn simulate(
    init: &FullState,
    cmd: &TailCommand,
    cfg: &SimConfig,
    params: &RobotParams,
) -> Result<TrajectoryLog, SimError> {
    validate_command(cmd)?;
    simulate_driven(init, cmd, &Stroke::from_command(cmd), Mount::Free, cfg, params)
}

pub(crate) fn simulate_driven(
    init: &FullState,
    cmd: &TailCommand,
    stroke: &Stroke,
    mount: Mount,
    cfg: &SimConfig,
    params: &RobotParams,
) -> Result<TrajectoryLog, SimError> {
    cfg.validate()?;
    let mut launch = Launch::new(*init, *stroke, mount, cfg.dt, *params)?;
    let total_steps = (cfg.max_duration / cfg.dt).round() as u64;
    let frame_steps = 1.0 / (cfg.telemetry_rate * cfg.dt);

    let mut samples = vec![*init];
    let mut termination = Termination::Completed;
    for frame in 1u64.. {
        let target = (frame as f64 * frame_steps).round() as u64;
        if target > total_steps {
            break;
        }
        match launch.run_to_step(target) {
            Ok(s) => samples.push(*s),
            Err(SimError::Unstable { t }) => {
                termination = Termination::Unstable { t };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(TrajectoryLog {
        samples,
        cmd: *cmd,
        params_digest: params.digest(),
        termination,
    })
}
