//! Automated swim tests: launches, steady-segment detection, speed
//! measurement, grid digitizing, clamped-body tail calibration and the
//! amplitude × frequency sweep.

use std::io::{self, Write};

use thiserror::Error;

use crate::dynamics::{simulate, simulate_driven, FullState, Mount, SimError, Termination, TrajectoryLog};
use crate::fmt::sig9;
use crate::geom::Vec2;
use crate::params::{validate_command, CommandError, RobotParams, SimConfig, TailCommand};
use crate::tail::Stroke;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error("launch diverged at t = {t} s")]
    Unstable { t: f64 },
    #[error("speed never settled within tolerance")]
    NotReached,
    #[error("stroke frequency is zero; no stroke period to segment by")]
    ZeroFrequency,
    #[error("trajectory log is empty")]
    EmptyLog,
    #[error("segment shorter than one stroke period")]
    SegmentTooShort,
    #[error("travel {travel} m is less than two grid cells of {cell} m")]
    InsufficientTravel { travel: f64, cell: f64 },
    #[error("fin shows no oscillation to time")]
    NoOscillation,
}

/// Launch from rest at the origin heading +x.
pub fn run_launch(
    cmd: &TailCommand,
    cfg: &SimConfig,
    params: &RobotParams,
) -> Result<TrajectoryLog, HarnessError> {
    let log = simulate(&FullState::default(), cmd, cfg, params)?;
    match log.termination {
        Termination::Completed => Ok(log),
        Termination::Unstable { t } => Err(HarnessError::Unstable { t }),
    }
}

/// Centre-of-mass position at time `t`, cubic Hermite interpolation between
/// telemetry samples using their world-frame velocities.
pub fn position_at(samples: &[FullState], t: f64) -> Vec2 {
    let last = samples.len() - 1;
    let idx = samples.partition_point(|s| s.t <= t);
    let (a, b) = match idx {
        0 => return pos(&samples[0]),
        i if i > last => return pos(&samples[last]),
        i => (&samples[i - 1], &samples[i]),
    };
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    pos(a) * h00 + world_velocity(a) * (h10 * h) + pos(b) * h01 + world_velocity(b) * (h11 * h)
}

fn pos(s: &FullState) -> Vec2 {
    Vec2::new(s.body.x, s.body.y)
}

fn world_velocity(s: &FullState) -> Vec2 {
    Vec2::new(s.body.u, s.body.v).rotate(s.body.yaw)
}

/// Net displacement per stroke period divided by the period, for every
/// complete period from the first sample on.
pub fn period_speeds(samples: &[FullState], period: f64) -> Vec<f64> {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Vec::new();
    };
    let t0 = first.t;
    let n = ((last.t - t0) / period + 1e-9).floor() as usize;
    (0..n)
        .map(|k| {
            let a = position_at(samples, t0 + k as f64 * period);
            let b = position_at(samples, t0 + (k + 1) as f64 * period);
            (b - a).norm() / period
        })
        .collect()
}

/// Tolerances of the constant-speed test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    pub rel_tol: f64,
    pub min_periods: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            rel_tol: 0.02,
            min_periods: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadySegment {
    pub t_start: f64,
    pub t_end: f64,
    pub mean_speed: f64,
    pub yaw_peak_to_peak: f64,
}

/// Whether every value lies within `rel_tol` of the window mean, given the
/// window's left-to-right sum, length and extremes.
fn within_tolerance(sum: f64, len: usize, lo: f64, hi: f64, rel_tol: f64) -> bool {
    let mean = sum / len as f64;
    hi - mean <= rel_tol * mean && mean - lo <= rel_tol * mean
}

/// Whether every value of `speeds` lies within `rel_tol` of their mean.
pub fn window_is_steady(speeds: &[f64], rel_tol: f64) -> bool {
    let (sum, lo, hi) = speeds.iter().fold(
        (0.0, f64::INFINITY, f64::NEG_INFINITY),
        |(sum, lo, hi), &s| (sum + s, lo.min(s), hi.max(s)),
    );
    within_tolerance(sum, speeds.len(), lo, hi, rel_tol)
}

/// Earliest start of a window of at least `min_periods` consecutive stroke
/// periods whose speeds all lie within `rel_tol` of their mean, with the
/// longest such window from that start. Returns period indices `[start, end)`.
pub fn steady_window(speeds: &[f64], opts: &SteadyOptions) -> Option<(usize, usize)> {
    let m = opts.min_periods.max(1);
    let n = speeds.len();
    if n < m {
        return None;
    }
    (0..=n - m).find_map(|start| {
        let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        let mut best = None;
        for (j, &s) in speeds.iter().enumerate().skip(start) {
            sum += s;
            lo = lo.min(s);
            hi = hi.max(s);
            let len = j + 1 - start;
            if len >= m && within_tolerance(sum, len, lo, hi, opts.rel_tol) {
                best = Some(j + 1);
            }
        }
        best.map(|end| (start, end))
    })
}

pub fn detect_steady(log: &TrajectoryLog, opts: &SteadyOptions) -> Result<SteadySegment, HarnessError> {
    let first = log.samples.first().ok_or(HarnessError::EmptyLog)?;
    let period = log.cmd.period().ok_or(HarnessError::ZeroFrequency)?;
    let speeds = period_speeds(&log.samples, period);
    let (i, j) = steady_window(&speeds, opts).ok_or(HarnessError::NotReached)?;
    let t_start = first.t + i as f64 * period;
    let t_end = first.t + j as f64 * period;
    let mean_speed = speeds[i..j].iter().sum::<f64>() / (j - i) as f64;
    Ok(SteadySegment {
        t_start,
        t_end,
        mean_speed,
        yaw_peak_to_peak: yaw_peak_to_peak(&log.samples, t_start, t_end),
    })
}

/// Heading range over samples with `t_start <= t <= t_end`.
pub fn yaw_peak_to_peak(samples: &[FullState], t_start: f64, t_end: f64) -> f64 {
    let (lo, hi) = samples
        .iter()
        .filter(|s| s.t >= t_start && s.t <= t_end)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.body.yaw), hi.max(s.body.yaw))
        });
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Translational speed over the segment, ignoring the stroke-synchronous
/// rocking: displacement between endpoints one whole number of periods apart,
/// projected on the mean heading, over the elapsed time.
///
/// For the rest command the whole segment is used as is.
pub fn measure_speed(
    log: &TrajectoryLog,
    segment: &SteadySegment,
    cmd: &TailCommand,
) -> Result<f64, HarnessError> {
    if log.samples.is_empty() {
        return Err(HarnessError::EmptyLog);
    }
    let span = segment.t_end - segment.t_start;
    let elapsed = match cmd.period() {
        Some(period) => {
            let whole = (span / period + 1e-9).floor();
            if whole < 1.0 {
                return Err(HarnessError::SegmentTooShort);
            }
            whole * period
        }
        None if span > 0.0 => span,
        None => return Err(HarnessError::SegmentTooShort),
    };
    let t_end = segment.t_start + elapsed;
    let heading = mean_heading(&log.samples, segment.t_start, t_end);
    let d = position_at(&log.samples, t_end) - position_at(&log.samples, segment.t_start);
    Ok(d.dot(Vec2::from_angle(heading)) / elapsed)
}

/// Circular mean of the heading over `[t_start, t_end]`.
fn mean_heading(samples: &[FullState], t_start: f64, t_end: f64) -> f64 {
    let (s, c) = samples
        .iter()
        .filter(|s| s.t >= t_start && s.t <= t_end)
        .fold((0.0, 0.0), |(s, c), st| {
            let (a, b) = st.body.yaw.sin_cos();
            (s + a, c + b)
        });
    if s == 0.0 && c == 0.0 {
        0.0
    } else {
        s.atan2(c)
    }
}

/// Interval at which the digitizer reads the grid cell under the robot, s.
pub const GRID_READING_INTERVAL: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMeasurement {
    pub distance: f64,
    pub elapsed: f64,
    pub speed: f64,
}

/// Distance read off a square floor grid with the default reading interval.
///
/// See [`grid_digitize_with`].
pub fn grid_digitize(log: &TrajectoryLog, cell: f64) -> Result<GridMeasurement, HarnessError> {
    grid_digitize_with(&log.samples, cell, GRID_READING_INTERVAL)
}

/// Reading sequences averaged by the digitizer, evenly offset within one
/// reading interval.
pub const GRID_READING_PHASES: usize = 50;

/// Distance read off a square floor grid.
///
/// Every `interval` seconds the centre of mass is snapped to the nearest grid
/// corner and straight segments between successive distinct corners are
/// summed. A single reading sequence carries an endpoint error of up to
/// `cell/√2` per end whose sign depends on where the path happens to sit in
/// its cell, so the distance is averaged over [`GRID_READING_PHASES`]
/// sequences started at even offsets within the first interval. Every
/// sequence spans the same whole number of intervals, which is the reported
/// elapsed time.
pub fn grid_digitize_with(
    samples: &[FullState],
    cell: f64,
    interval: f64,
) -> Result<GridMeasurement, HarnessError> {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Err(HarnessError::EmptyLog);
    };
    let travel: f64 = samples
        .windows(2)
        .map(|w| (pos(&w[1]) - pos(&w[0])).norm())
        .sum();
    if travel.is_nan() || travel < 2.0 * cell {
        return Err(HarnessError::InsufficientTravel { travel, cell });
    }
    // Whole intervals that fit after the latest phase offset.
    let intervals = ((last.t - first.t) / interval + 1e-9).floor() - 1.0;
    if intervals < 1.0 {
        return Err(HarnessError::SegmentTooShort);
    }
    let snap = |p: Vec2| ((p.x / cell).round() as i64, (p.y / cell).round() as i64);

    let mut total = 0.0;
    for phase in 0..GRID_READING_PHASES {
        let start = first.t + interval * phase as f64 / GRID_READING_PHASES as f64;
        let mut corners: Vec<(i64, i64)> = Vec::new();
        for k in 0..=intervals as usize {
            let c = snap(position_at(samples, start + k as f64 * interval));
            if corners.last() != Some(&c) {
                corners.push(c);
            }
        }
        total += corners
            .windows(2)
            .map(|w| {
                let dx = (w[1].0 - w[0].0) as f64 * cell;
                let dy = (w[1].1 - w[0].1) as f64 * cell;
                dx.hypot(dy)
            })
            .sum::<f64>();
    }
    let distance = total / GRID_READING_PHASES as f64;
    let elapsed = intervals * interval;
    Ok(GridMeasurement {
        distance,
        elapsed,
        speed: distance / elapsed,
    })
}

/// Result of running the tail with the body held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCalibration {
    /// Half the peak-to-peak fin angle (plate + hinge), degrees.
    pub amp_actual: f64,
    /// Mean interval between upward zero crossings of the fin angle, s.
    pub period_actual: f64,
}

/// Periods discarded before measuring, and periods measured.
pub const CALIBRATION_TRANSIENT_PERIODS: usize = 10;
pub const CALIBRATION_MEASURED_PERIODS: usize = 10;

/// Clamped-body bench run. The fin angle is read at every integrator step.
pub fn calibrate_tail(
    cmd: &TailCommand,
    cfg: &SimConfig,
    params: &RobotParams,
) -> Result<TailCalibration, HarnessError> {
    validate_command(cmd)?;
    let period = cmd.period().ok_or(HarnessError::ZeroFrequency)?;
    let run_cfg = SimConfig {
        max_duration: period
            * (CALIBRATION_TRANSIENT_PERIODS + CALIBRATION_MEASURED_PERIODS) as f64,
        telemetry_rate: 1.0 / cfg.dt,
        ..*cfg
    };
    let log = simulate_driven(
        &FullState::default(),
        cmd,
        &Stroke::from_command(cmd),
        Mount::Clamped,
        &run_cfg,
        params,
    )?;
    if let Termination::Unstable { t } = log.termination {
        return Err(HarnessError::Unstable { t });
    }
    let settle = period * CALIBRATION_TRANSIENT_PERIODS as f64 - 0.5 * cfg.dt;
    let tail: Vec<(f64, f64)> = log
        .samples
        .iter()
        .filter(|s| s.t >= settle)
        .map(|s| (s.t, s.tail.fin_angle()))
        .collect();

    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, a)| {
            (lo.min(a), hi.max(a))
        });
    let amp_actual = (0.5 * (hi - lo)).to_degrees();
    if amp_actual == 0.0 {
        // Nothing moves; the servo program still has the commanded period.
        return Ok(TailCalibration {
            amp_actual: 0.0,
            period_actual: period,
        });
    }

    let crossings: Vec<f64> = tail
        .windows(2)
        .filter(|w| w[0].1 < 0.0 && w[1].1 >= 0.0)
        .map(|w| {
            let (t0, a0) = w[0];
            let (t1, a1) = w[1];
            t0 + (t1 - t0) * (-a0) / (a1 - a0)
        })
        .collect();
    if crossings.len() < 2 {
        return Err(HarnessError::NoOscillation);
    }
    let period_actual =
        (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    Ok(TailCalibration {
        amp_actual,
        period_actual,
    })
}

/// One sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRecord {
    pub amp_cmd: f64,
    pub freq_cmd: f64,
    pub amp_actual: f64,
    pub period_actual: f64,
    pub speed: f64,
    pub yaw_pp: f64,
    pub steady_reached: bool,
}

impl ExperimentRecord {
    pub const CSV_HEADER: &'static str =
        "amp_cmd_deg,freq_cmd_hz,amp_actual_deg,period_actual_s,speed_mps,yaw_pp_rad,steady_reached";

    fn failed(cmd: &TailCommand) -> Self {
        Self {
            amp_cmd: cmd.amplitude,
            freq_cmd: cmd.frequency,
            amp_actual: f64::NAN,
            period_actual: f64::NAN,
            speed: f64::NAN,
            yaw_pp: f64::NAN,
            steady_reached: false,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            sig9(self.amp_cmd),
            sig9(self.freq_cmd),
            sig9(self.amp_actual),
            sig9(self.period_actual),
            sig9(self.speed),
            sig9(self.yaw_pp),
            self.steady_reached
        )
    }
}

/// Full protocol for one (amplitude, frequency) setting: bench calibration,
/// free launch, steady-segment detection and speed measurement.
///
/// When speed never settles, the last `min_periods` periods are measured and
/// the record is flagged. For the rest frequency the whole launch is the
/// measuring window.
pub fn evaluate_cell(
    cmd: &TailCommand,
    cfg: &SimConfig,
    params: &RobotParams,
    opts: &SteadyOptions,
) -> Result<ExperimentRecord, HarnessError> {
    validate_command(cmd)?;
    let (amp_actual, period_actual) = match cmd.period() {
        Some(_) => {
            let cal = calibrate_tail(cmd, cfg, params)?;
            (cal.amp_actual, cal.period_actual)
        }
        None => (0.0, 0.0),
    };
    let log = run_launch(cmd, cfg, params)?;
    let t_last = log.samples.last().ok_or(HarnessError::EmptyLog)?.t;

    let (segment, steady_reached) = match detect_steady(&log, opts) {
        Ok(seg) => (seg, true),
        Err(HarnessError::NotReached) => {
            let period = cmd.period().expect("non-zero frequency");
            let whole = (t_last / period + 1e-9).floor();
            let count = (opts.min_periods as f64).min(whole);
            let t_start = (whole - count) * period;
            let t_end = whole * period;
            let seg = SteadySegment {
                t_start,
                t_end,
                mean_speed: f64::NAN,
                yaw_peak_to_peak: yaw_peak_to_peak(&log.samples, t_start, t_end),
            };
            (seg, false)
        }
        Err(HarnessError::ZeroFrequency) => {
            let seg = SteadySegment {
                t_start: 0.0,
                t_end: t_last,
                mean_speed: f64::NAN,
                yaw_peak_to_peak: yaw_peak_to_peak(&log.samples, 0.0, t_last),
            };
            (seg, true)
        }
        Err(e) => return Err(e),
    };
    let speed = measure_speed(&log, &segment, cmd)?;
    Ok(ExperimentRecord {
        amp_cmd: cmd.amplitude,
        freq_cmd: cmd.frequency,
        amp_actual,
        period_actual,
        speed,
        yaw_pp: segment.yaw_peak_to_peak,
        steady_reached,
    })
}

/// How sweep cells are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon worker pool; identical to `Sequential` without the `parallel`
    /// feature.
    #[default]
    Parallel,
}

/// Sweep outcome: one record per cell, amplitude-major, plus the per-cell
/// failures that were recorded as `NaN` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<(TailCommand, HarnessError)>,
}

pub fn sweep(
    amps: &[f64],
    freqs: &[f64],
    cfg: &SimConfig,
    params: &RobotParams,
    opts: &SteadyOptions,
    execution: Execution,
) -> Result<SweepResult, HarnessError> {
    let cells: Vec<TailCommand> = amps
        .iter()
        .flat_map(|&a| freqs.iter().map(move |&f| TailCommand::new(a, f)))
        .collect();
    for c in &cells {
        validate_command(c)?;
    }
    let eval = |c: &TailCommand| evaluate_cell(c, cfg, params, opts);
    let outcomes: Vec<Result<ExperimentRecord, HarnessError>> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            cells.par_iter().map(eval).collect()
        }
        _ => cells.iter().map(eval).collect(),
    };
    let mut records = Vec::with_capacity(cells.len());
    let mut failures = Vec::new();
    for (cmd, outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                records.push(ExperimentRecord::failed(cmd));
                failures.push((*cmd, e));
            }
        }
    }
    Ok(SweepResult { records, failures })
}

pub fn write_sweep_csv<W: Write>(records: &[ExperimentRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", ExperimentRecord::CSV_HEADER)?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Speed against measured amplitude, grouped by commanded frequency.
pub fn write_speed_vs_amplitude<W: Write>(
    records: &[ExperimentRecord],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "freq_cmd_hz,amp_actual_deg,speed_mps")?;
    let mut rows: Vec<&ExperimentRecord> = records.iter().collect();
    rows.sort_by(|a, b| a.freq_cmd.total_cmp(&b.freq_cmd).then(a.amp_cmd.total_cmp(&b.amp_cmd)));
    for r in rows {
        writeln!(out, "{},{},{}", sig9(r.freq_cmd), sig9(r.amp_actual), sig9(r.speed))?;
    }
    Ok(())
}

/// Speed against measured period, grouped by commanded amplitude.
pub fn write_speed_vs_period<W: Write>(
    records: &[ExperimentRecord],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "amp_cmd_deg,period_actual_s,speed_mps")?;
    let mut rows: Vec<&ExperimentRecord> = records.iter().collect();
    rows.sort_by(|a, b| a.amp_cmd.total_cmp(&b.amp_cmd).then(b.freq_cmd.total_cmp(&a.freq_cmd)));
    for r in rows {
        writeln!(out, "{},{},{}", sig9(r.amp_cmd), sig9(r.period_actual), sig9(r.speed))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{BodyState, TailState};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const RATE: f64 = 50.0;

    /// Log sampled from a closed-form path returning world position, world
    /// velocity and heading.
    fn synthetic<F>(cmd: TailCommand, duration: f64, path: F) -> TrajectoryLog
    where
        F: Fn(f64) -> (Vec2, Vec2, f64),
    {
        let n = (duration * RATE).round() as usize;
        let samples = (0..=n)
            .map(|i| {
                let t = i as f64 / RATE;
                let (p, w, yaw) = path(t);
                let b = w.rotate(-yaw);
                FullState {
                    body: BodyState { x: p.x, y: p.y, yaw, u: b.x, v: b.y, r: 0.0 },
                    tail: TailState::default(),
                    t,
                }
            })
            .collect();
        TrajectoryLog {
            samples,
            cmd,
            params_digest: String::new(),
            termination: Termination::Completed,
        }
    }

    /// Straight run along +x with a constant speed inside each 1 s period.
    fn piecewise(speeds: &[f64]) -> TrajectoryLog {
        let speeds = speeds.to_vec();
        let n = speeds.len();
        synthetic(TailCommand::new(20.0, 1.0), n as f64, move |t| {
            let k = (t.floor() as usize).min(n - 1);
            let x = speeds[..k].iter().sum::<f64>() + speeds[k] * (t - k as f64);
            (Vec2::new(x, 0.0), Vec2::new(speeds[k], 0.0), 0.0)
        })
    }

    /// Straight swim at `speed` along `heading` from `origin`, with a lateral
    /// zigzag and a heading rock at the stroke frequency.
    fn rocking_path(
        freq: f64,
        speed: f64,
        heading: f64,
        origin: Vec2,
        curl: f64,
    ) -> impl Fn(f64) -> (Vec2, Vec2, f64) {
        let w = 2.0 * std::f64::consts::PI * freq;
        move |t| {
            let local = Vec2::new(speed * t, curl * t * t + 0.02 * (w * t).sin());
            let vel = Vec2::new(speed, 2.0 * curl * t + 0.02 * w * (w * t).cos());
            (
                origin + local.rotate(heading),
                vel.rotate(heading),
                heading + 0.1 * (w * t).sin(),
            )
        }
    }

    fn oracle_window(speeds: &[f64], opts: &SteadyOptions) -> Option<(usize, usize)> {
        let m = opts.min_periods.max(1);
        let steady = |w: &[f64]| {
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            w.iter().all(|&s| (s - mean).abs() <= opts.rel_tol * mean)
        };
        (0..speeds.len()).find_map(|s| {
            (s + m..=speeds.len())
                .rev()
                .find(|&e| steady(&speeds[s..e]))
                .map(|e| (s, e))
        })
    }

    #[test]
    fn constant_speed_is_steady_throughout() {
        let log = piecewise(&[0.3; 12]);
        let seg = detect_steady(&log, &SteadyOptions::default()).unwrap();
        assert_eq!((seg.t_start, seg.t_end), (0.0, 12.0));
        assert_relative_eq!(seg.mean_speed, 0.3, max_relative = 1e-12);
        assert_eq!(seg.yaw_peak_to_peak, 0.0);
    }

    #[test]
    fn accelerating_log_never_settles() {
        let speeds: Vec<f64> = (0..16).map(|k| 0.001 * 2f64.powi(k)).collect();
        let log = piecewise(&speeds);
        assert_eq!(
            detect_steady(&log, &SteadyOptions::default()),
            Err(HarnessError::NotReached)
        );
    }

    #[test]
    fn ramp_then_plateau() {
        let mut speeds: Vec<f64> = (0..10).map(|k| 0.03 * (k + 1) as f64).collect();
        speeds.extend([0.3; 10]);
        let log = piecewise(&speeds);
        let opts = SteadyOptions::default();
        let seg = detect_steady(&log, &opts).unwrap();
        assert!((9.0..=11.0).contains(&seg.t_start), "{seg:?}");
        let measured = period_speeds(&log.samples, 1.0);
        let (s, e) = oracle_window(&measured, &opts).unwrap();
        assert_eq!((seg.t_start, seg.t_end), (s as f64, e as f64));
    }

    #[test]
    fn zero_frequency_and_empty_logs_are_rejected() {
        let mut log = piecewise(&[0.3; 6]);
        log.cmd = TailCommand::rest();
        assert_eq!(detect_steady(&log, &SteadyOptions::default()), Err(HarnessError::ZeroFrequency));
        log.samples.clear();
        assert_eq!(detect_steady(&log, &SteadyOptions::default()), Err(HarnessError::EmptyLog));
    }

    #[test]
    fn hermite_interpolation_is_exact_for_cubics() {
        let log = synthetic(TailCommand::new(20.0, 1.0), 2.0, |t| {
            let p = Vec2::new(t * t * t - t, 0.5 * t * t);
            let w = Vec2::new(3.0 * t * t - 1.0, t);
            (p, w, 0.7)
        });
        for t in [0.013, 0.5, 1.234, 1.999] {
            let p = position_at(&log.samples, t);
            assert_relative_eq!(p.x, t * t * t - t, epsilon = 1e-12);
            assert_relative_eq!(p.y, 0.5 * t * t, epsilon = 1e-12);
        }
    }

    fn segment(t_start: f64, t_end: f64) -> SteadySegment {
        SteadySegment { t_start, t_end, mean_speed: 0.0, yaw_peak_to_peak: 0.0 }
    }

    #[test]
    fn straight_path_speed() {
        let cmd = TailCommand::new(20.0, 2.0);
        let log = synthetic(cmd, 15.0, |t| (Vec2::new(0.3 * t, 0.0), Vec2::new(0.3, 0.0), 0.0));
        assert_relative_eq!(measure_speed(&log, &segment(2.0, 12.3), &cmd).unwrap(), 0.3, max_relative = 1e-12);
    }

    #[test]
    fn zigzag_and_rocking_cancel() {
        let cmd = TailCommand::new(20.0, 2.0);
        let log = synthetic(cmd, 15.0, rocking_path(2.0, 0.3, 0.0, Vec2::new(0.0, 0.0), 0.0));
        let speed = measure_speed(&log, &segment(2.0, 12.3), &cmd).unwrap();
        assert!((speed - 0.3).abs() < 1e-6, "{speed}");
    }

    #[test]
    fn still_log_has_zero_speed() {
        let cmd = TailCommand::rest();
        let log = synthetic(cmd, 10.0, |_| (Vec2::new(1.0, -2.0), Vec2::new(0.0, 0.0), 0.4));
        assert_eq!(measure_speed(&log, &segment(0.0, 10.0), &cmd).unwrap(), 0.0);
    }

    #[test]
    fn segment_shorter_than_a_period_is_rejected() {
        let cmd = TailCommand::new(20.0, 0.5);
        let log = synthetic(cmd, 5.0, |t| (Vec2::new(0.3 * t, 0.0), Vec2::new(0.3, 0.0), 0.0));
        assert_eq!(
            measure_speed(&log, &segment(0.0, 1.9), &cmd),
            Err(HarnessError::SegmentTooShort)
        );
    }

    fn straight(duration: f64, speed: f64, heading: f64) -> TrajectoryLog {
        let dir = Vec2::from_angle(heading);
        let origin = Vec2::new(0.031, 0.017);
        synthetic(TailCommand::new(20.0, 1.0), duration, move |t| {
            (origin + dir * (speed * t), dir * speed, heading)
        })
    }

    #[test]
    fn grid_speed_within_quantization_envelope() {
        let log = straight(1.0 / 0.35, 0.35, 0.35);
        let g = grid_digitize(&log, 0.1).unwrap();
        assert!((0.35 * 0.6..=0.35 * 1.4).contains(&g.speed), "{g:?}");
        assert_eq!(g.elapsed, 1.0);
    }

    #[test]
    fn grid_needs_two_cells_of_travel() {
        let log = straight(0.2, 0.35, 0.0);
        assert!(matches!(
            grid_digitize(&log, 0.1),
            Err(HarnessError::InsufficientTravel { .. })
        ));
    }

    proptest! {
        #[test]
        fn detector_matches_brute_force(
            speeds in prop::collection::vec(0.97f64..1.03, 0..40),
            min_periods in 1usize..8,
            rel_tol in 0.005f64..0.05,
        ) {
            let opts = SteadyOptions { rel_tol, min_periods };
            prop_assert_eq!(steady_window(&speeds, &opts), oracle_window(&speeds, &opts));
        }

        #[test]
        fn speed_is_invariant_under_rigid_motion(
            heading in -3.1f64..3.1,
            ox in -5.0f64..5.0,
            oy in -5.0f64..5.0,
            curl in -0.002f64..0.002,
        ) {
            let cmd = TailCommand::new(20.0, 2.0);
            let seg = segment(1.0, 9.0);
            let base = synthetic(cmd, 10.0, rocking_path(2.0, 0.3, 0.0, Vec2::new(0.0, 0.0), curl));
            let moved = synthetic(cmd, 10.0, rocking_path(2.0, 0.3, heading, Vec2::new(ox, oy), curl));
            let a = measure_speed(&base, &seg, &cmd).unwrap();
            let b = measure_speed(&moved, &seg, &cmd).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-3), "{} vs {}", a, b);
        }

        #[test]
        fn grid_distance_is_bounded_by_arc_length(
            speed in 0.1f64..0.8,
            bend in -0.3f64..0.3,
            cell in 0.02f64..0.2,
        ) {
            // Constant-speed arc of constant curvature.
            let log = synthetic(TailCommand::new(20.0, 1.0), 8.0, move |t| {
                let yaw = bend * t;
                let p = if bend == 0.0 {
                    Vec2::new(speed * t, 0.0)
                } else {
                    Vec2::new(yaw.sin(), 1.0 - yaw.cos()) * (speed / bend)
                };
                (p, Vec2::from_angle(yaw) * speed, yaw)
            });
            let g = grid_digitize(&log, cell).unwrap();
            let readings = (g.elapsed / GRID_READING_INTERVAL).floor() + 2.0;
            prop_assert!(g.distance <= speed * 8.0 + 2.0 * cell * readings);
        }
    }
}
