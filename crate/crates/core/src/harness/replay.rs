//! Replays a controller and writes its trajectory, metric trace and SVG frames.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::eval::{EvalError, Simulation};
use super::experiment::RunError;
use crate::controllers::ControllerSpec;
use crate::sim::{AgentState, Cone, WorldConfig, WorldState};

pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";
pub const METRICS_FILE: &str = "metrics.csv";
pub const FRAME_DIR: &str = "frames";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub sensor: bool,
}

/// One line of `trajectory.jsonl`: the state at `tick` and its sensor bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub tick: u64,
    pub agents: Vec<AgentRecord>,
}

impl FrameRecord {
    fn capture(world: &WorldState, config: &WorldConfig) -> Self {
        let sensors = world.sense_all(config);
        Self {
            tick: world.tick,
            agents: world
                .agents
                .iter()
                .zip(sensors)
                .map(|(a, sensor)| AgentRecord {
                    x: a.x,
                    y: a.y,
                    theta: a.theta,
                    v: a.v,
                    omega: a.omega,
                    sensor,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub tick: u64,
    pub phi: f64,
    pub tau: f64,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Replay {
    /// `T + 1` states, the spawn included.
    pub frames: Vec<FrameRecord>,
    /// One row per executed tick, measured after the step.
    pub metrics: Vec<MetricRow>,
    pub lambda: f64,
}

pub fn simulate_trace(spec: &ControllerSpec, config: &SimConfig, spawn_seed: u64) -> Result<Replay, EvalError> {
    let mut sim = Simulation::new(spec, config, spawn_seed)?;
    let mut frames = vec![FrameRecord::capture(sim.world(), &config.world)];
    let mut metrics = Vec::with_capacity(config.horizon as usize);
    while sim.world().tick < config.horizon {
        let rec = sim.tick()?;
        metrics.push(MetricRow {
            tick: sim.world().tick,
            phi: rec.metrics.phi,
            tau: rec.metrics.tau,
            lambda: rec.metrics.lambda,
        });
        frames.push(FrameRecord::capture(sim.world(), &config.world));
    }
    Ok(Replay {
        frames,
        metrics,
        lambda: sim.lambda()?,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes trajectory, metrics and one SVG frame every `frame_every` ticks.
/// Returns the frame paths.
pub fn write_replay(
    replay: &Replay,
    config: &WorldConfig,
    out_dir: &Path,
    frame_every: u64,
) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(out_dir.join(FRAME_DIR)).map_err(io_err(out_dir))?;

    let path = out_dir.join(TRAJECTORY_FILE);
    let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    for f in &replay.frames {
        let line = serde_json::to_string(f).expect("frame serializes");
        writeln!(w, "{line}").map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = out_dir.join(METRICS_FILE);
    let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    writeln!(w, "tick,phi,tau,lambda").map_err(io_err(&path))?;
    for m in &replay.metrics {
        let l = m.lambda.map(|l| l.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{l}", m.tick, m.phi, m.tau).map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let horizon = replay.frames.len().saturating_sub(1) as u64;
    let bounds = Bounds::of(&replay.frames, config.sense_range * 0.25);
    let mut paths = Vec::new();
    let mut tick = 0;
    while tick < horizon.max(1) {
        let frame = &replay.frames[tick as usize];
        let p = out_dir.join(FRAME_DIR).join(format!("frame_{tick:05}.svg"));
        fs::write(&p, render_svg(frame, config, &bounds)).map_err(io_err(&p))?;
        paths.push(p);
        tick += frame_every.max(1);
    }
    Ok(paths)
}

#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn of(frames: &[FrameRecord], margin: f64) -> Self {
        let mut b = Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for a in frames.iter().flat_map(|f| &f.agents) {
            b.min_x = b.min_x.min(a.x);
            b.min_y = b.min_y.min(a.y);
            b.max_x = b.max_x.max(a.x);
            b.max_y = b.max_y.max(a.y);
        }
        if !b.min_x.is_finite() {
            b = Bounds {
                min_x: 0.0,
                min_y: 0.0,
                max_x: 0.0,
                max_y: 0.0,
            };
        }
        b.min_x -= margin;
        b.min_y -= margin;
        b.max_x += margin;
        b.max_y += margin;
        b
    }
}

/// Renders one state. World y points up, so the drawing is flipped.
pub fn render_svg(frame: &FrameRecord, config: &WorldConfig, bounds: &Bounds) -> String {
    let w = bounds.max_x - bounds.min_x;
    let h = bounds.max_y - bounds.min_y;
    let r = config.agent_radius;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.4} {:.4} {:.4} {:.4}" width="800" height="{:.0}" data-tick="{}">"#,
        bounds.min_x,
        -bounds.max_y,
        w,
        h,
        800.0 * h / w.max(1e-9),
        frame.tick
    );
    let _ = writeln!(
        s,
        r##"<rect x="{:.4}" y="{:.4}" width="{w:.4}" height="{h:.4}" fill="#ffffff"/>"##,
        bounds.min_x, -bounds.max_y
    );
    for (i, a) in frame.agents.iter().enumerate() {
        let cone = Cone::new(&AgentState::at(a.x, a.y, a.theta), config);
        let color = if a.sensor { "#2e9e44" } else { "#9a9a9a" };
        let (l, rr) = (a.theta + cone.half_angle, a.theta - cone.half_angle);
        let (lx, ly) = (a.x + cone.range * l.cos(), a.y + cone.range * l.sin());
        let (rx, ry) = (a.x + cone.range * rr.cos(), a.y + cone.range * rr.sin());
        let large = u8::from(2.0 * cone.half_angle > std::f64::consts::PI);
        let _ = writeln!(
            s,
            r#"<path d="M {:.4} {:.4} L {rx:.4} {:.4} A {:.4} {:.4} 0 {large} 0 {lx:.4} {:.4} Z" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="0.01" data-agent="{i}" data-sensor="{}"/>"#,
            a.x,
            -a.y,
            -ry,
            cone.range,
            cone.range,
            -ly,
            u8::from(a.sensor)
        );
        let _ = writeln!(
            s,
            r##"<circle cx="{:.4}" cy="{:.4}" r="{r:.4}" fill="#1f4e99" data-agent="{i}"/>"##,
            a.x, -a.y
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}" stroke="#000000" stroke-width="0.02"/>"##,
            a.x,
            -a.y,
            a.x + 2.0 * r * a.theta.cos(),
            -(a.y + 2.0 * r * a.theta.sin())
        );
    }
    s.push_str("</svg>\n");
    s
}
