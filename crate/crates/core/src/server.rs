//! TCP ground-station endpoint.
//!
//! One client at a time; a second connection gets `ERR BUSY` and is closed.
//! A per-session owner thread applies every state transition; a helper thread
//! only forwards received lines to it. While running, the owner advances the
//! launch in real time and pushes one telemetry frame per
//! `1 / telemetry_rate` seconds.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crate::dynamics::{FullState, Launch, Mount, SimError};
use crate::params::{RobotParams, SimConfig};
use crate::protocol::{encode_telemetry, parse_command, session_step, Mode, SessionState, REPLY_BUSY};
use crate::tail::Stroke;

pub const DEFAULT_PORT: u16 = 4747;

pub struct Server {
    listener: TcpListener,
    sim: SimConfig,
    params: RobotParams,
    busy: Arc<AtomicBool>,
}

impl Server {
    pub fn bind<A: ToSocketAddrs>(addr: A, sim: SimConfig, params: RobotParams) -> io::Result<Self> {
        sim.validate()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            sim,
            params,
            busy: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accept loop; returns only on a listener error.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let mut stream = stream?;
            if self.busy.swap(true, Ordering::AcqRel) {
                let _ = writeln!(stream, "{REPLY_BUSY}");
                continue;
            }
            let busy = Arc::clone(&self.busy);
            let (sim, params) = (self.sim, self.params);
            thread::spawn(move || {
                let peer = stream.peer_addr().ok();
                if let Err(e) = Session::new(sim, params).serve(stream) {
                    eprintln!("session {peer:?} ended: {e}");
                }
                busy.store(false, Ordering::Release);
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> io::Result<SocketAddr> {
        let addr = self.local_addr()?;
        thread::spawn(move || self.run());
        Ok(addr)
    }
}

/// Binds and serves forever.
pub fn serve(port: u16, sim: SimConfig, params: RobotParams) -> io::Result<()> {
    Server::bind(("0.0.0.0", port), sim, params)?.run()
}

struct Running {
    launch: Launch,
    started: Instant,
    frames_sent: u64,
}

struct Session {
    sim: SimConfig,
    params: RobotParams,
    state: SessionState,
    running: Option<Running>,
}

impl Session {
    fn new(sim: SimConfig, params: RobotParams) -> Self {
        Self {
            sim,
            params,
            state: SessionState::default(),
            running: None,
        }
    }

    fn frame_interval(&self) -> f64 {
        1.0 / self.sim.telemetry_rate
    }

    fn serve(mut self, stream: TcpStream) -> io::Result<()> {
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        let mut out = stream;
        let (tx, rx) = mpsc::channel::<String>();
        thread::spawn(move || {
            for line in reader.lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        loop {
            let next_line = match &self.running {
                None => rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
                Some(run) => {
                    let due = run.started
                        + Duration::from_secs_f64((run.frames_sent + 1) as f64 * self.frame_interval());
                    rx.recv_timeout(due.saturating_duration_since(Instant::now()))
                }
            };
            match next_line {
                Ok(line) => {
                    let line = line.strip_suffix('\r').unwrap_or(&line);
                    let reply = self.handle_line(line);
                    writeln!(out, "{reply}")?;
                }
                Err(RecvTimeoutError::Timeout) => {
                    if let Some(frame) = self.advance_frame() {
                        writeln!(out, "{frame}")?;
                    }
                }
                // Client gone: the session ends and the launch is dropped.
                Err(RecvTimeoutError::Disconnected) => return Ok(()),
            }
        }
    }

    fn handle_line(&mut self, line: &str) -> String {
        let cmd = match parse_command(line) {
            Ok(cmd) => cmd,
            Err(e) => return e.reply(),
        };
        let was = self.state.mode;
        let (next, reply) = session_step(&self.state, &cmd);
        self.state = next;
        match (was, self.state.mode) {
            (Mode::Idle, Mode::Running) => {
                let active = self.state.active_cmd.expect("running has an active command");
                let launch = Launch::new(
                    FullState::default(),
                    Stroke::from_command(&active),
                    Mount::Free,
                    self.sim.dt,
                    self.params,
                )
                .expect("dt validated at bind");
                self.running = Some(Running {
                    launch,
                    started: Instant::now(),
                    frames_sent: 0,
                });
            }
            (Mode::Running, Mode::Idle) => self.running = None,
            _ => {}
        }
        reply
    }

    /// Integrates up to the next frame time and encodes the state.
    fn advance_frame(&mut self) -> Option<String> {
        let interval = self.frame_interval();
        let run = self.running.as_mut()?;
        let frame = run.frames_sent + 1;
        let target = (frame as f64 * interval / self.sim.dt).round() as u64;
        match run.launch.run_to_step(target) {
            Ok(state) => {
                run.frames_sent = frame;
                Some(encode_telemetry(state))
            }
            Err(SimError::Unstable { t }) => {
                self.running = None;
                self.state = session_step(&self.state, &crate::protocol::Command::Stop).0;
                Some(format!("ERR UNSTABLE {t}"))
            }
            Err(e) => {
                self.running = None;
                self.state = session_step(&self.state, &crate::protocol::Command::Stop).0;
                Some(format!("ERR {e}"))
            }
        }
    }
}
