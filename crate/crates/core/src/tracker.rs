//! Forward integration of keypoints through a flow sequence.
//!
//! Each step adds the flow sampled at the point's current sub-pixel position.
//! Points leaving the frame are clamped to the border, flagged as exited and
//! held there for the rest of the sequence, so every trajectory has the same
//! length.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{format_err, invalid, Result};
use crate::flow::FlowField;
use crate::sampler::KeypointSet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    /// Flow at the nearest pixel (ablation).
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub point_id: usize,
    pub positions: Vec<(T, T)>,
    pub exited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet<T> {
    width: usize,
    height: usize,
    frames: usize,
    trajectories: Vec<Trajectory<T>>,
}

impl<T: Scalar> TrajectorySet<T> {
    /// The frame count is taken from the trajectories (0 when there are none).
    pub fn new(width: usize, height: usize, trajectories: Vec<Trajectory<T>>) -> Result<Self> {
        let frames = trajectories.first().map_or(0, |t| t.positions.len());
        Self::with_frames(width, height, frames, trajectories)
    }

    /// As [`TrajectorySet::new`] with an explicit frame count, which an empty
    /// set keeps.
    pub fn with_frames(width: usize, height: usize, frames: usize, trajectories: Vec<Trajectory<T>>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid!("trajectory frame must be nonempty, got {width}x{height}"));
        }
        if let Some(first) = trajectories.first() {
            let len = first.positions.len();
            if len == 0 {
                return Err(invalid!("trajectories must have at least one position"));
            }
            if trajectories.iter().any(|t| t.positions.len() != len) {
                return Err(invalid!("trajectories have differing lengths"));
            }
            if len != frames {
                return Err(invalid!("trajectories have {len} positions, expected {frames}"));
            }
        }
        let mut ids: Vec<usize> = trajectories.iter().map(|t| t.point_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid!("trajectory ids must be unique"));
        }
        let (xmax, ymax) = (T::of((width - 1) as f64), T::of((height - 1) as f64));
        for t in &trajectories {
            if t.positions.iter().any(|&(x, y)| {
                !x.is_finite() || !y.is_finite() || x < T::zero() || y < T::zero() || x > xmax || y > ymax
            }) {
                return Err(invalid!("trajectory {} leaves the {width}x{height} frame", t.point_id));
            }
        }
        Ok(Self { width, height, frames, trajectories })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn trajectories(&self) -> &[Trajectory<T>] {
        &self.trajectories
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Positions per trajectory (`flows + 1`).
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn get(&self, point_id: usize) -> Option<&Trajectory<T>> {
        self.trajectories.iter().find(|t| t.point_id == point_id)
    }

    /// `positions[t + 1] - positions[t]` of trajectory `point_id`.
    pub fn displacement_at(&self, point_id: usize, t: usize) -> Result<(T, T)> {
        let traj = self
            .get(point_id)
            .ok_or_else(|| invalid!("no trajectory with id {point_id}"))?;
        traj.displacement_at(t)
    }
}

impl<T: Scalar> Trajectory<T> {
    pub fn displacement_at(&self, t: usize) -> Result<(T, T)> {
        if t + 1 >= self.positions.len() {
            return Err(invalid!(
                "step {t} out of range for trajectory of {} positions",
                self.positions.len()
            ));
        }
        let (x0, y0) = self.positions[t];
        let (x1, y1) = self.positions[t + 1];
        Ok((x1 - x0, y1 - y0))
    }
}

pub fn propagate<T: Scalar>(keypoints: &KeypointSet, flows: &[FlowField<T>]) -> Result<TrajectorySet<T>> {
    propagate_with(keypoints, flows, Interpolation::Bilinear)
}

pub fn propagate_with<T: Scalar>(
    keypoints: &KeypointSet,
    flows: &[FlowField<T>],
    interpolation: Interpolation,
) -> Result<TrajectorySet<T>> {
    let first = flows.first().ok_or_else(|| invalid!("flow sequence is empty"))?;
    let (width, height) = (first.width(), first.height());
    if flows.iter().any(|f| !f.same_dims(first)) {
        return Err(invalid!("flow fields have differing dimensions"));
    }
    if let Some(&(x, y)) = keypoints.points().iter().find(|&&(x, y)| x >= width || y >= height) {
        return Err(invalid!("keypoint ({x}, {y}) outside the {width}x{height} flow"));
    }
    let starts: Vec<(T, T)> = keypoints
        .points()
        .iter()
        .map(|&(x, y)| (T::of(x as f64), T::of(y as f64)))
        .collect();
    let trajectories = starts
        .into_iter()
        .enumerate()
        .map(|(id, start)| integrate(id, start, flows, interpolation))
        .collect::<Result<Vec<_>>>()?;
    TrajectorySet::with_frames(width, height, flows.len() + 1, trajectories)
}

fn integrate<T: Scalar>(
    point_id: usize,
    start: (T, T),
    flows: &[FlowField<T>],
    interpolation: Interpolation,
) -> Result<Trajectory<T>> {
    let (width, height) = (flows[0].width(), flows[0].height());
    let xmax = T::of((width - 1) as f64);
    let ymax = T::of((height - 1) as f64);
    let mut positions = Vec::with_capacity(flows.len() + 1);
    positions.push(start);
    let (mut x, mut y) = start;
    let mut exited = false;
    for flow in flows {
        if !exited {
            let (u, v) = match interpolation {
                Interpolation::Bilinear => flow.sample_bilinear(x, y)?,
                Interpolation::Nearest => {
                    let xi = x.round().to_usize().unwrap_or(0).min(width - 1);
                    let yi = y.round().to_usize().unwrap_or(0).min(height - 1);
                    flow.get(xi, yi)
                }
            };
            let (nx, ny) = (x + u, y + v);
            if nx < T::zero() || ny < T::zero() || nx > xmax || ny > ymax {
                exited = true;
            }
            x = nx.max(T::zero()).min(xmax);
            y = ny.max(T::zero()).min(ymax);
        }
        positions.push((x, y));
    }
    Ok(Trajectory { point_id, positions, exited })
}

#[derive(Serialize, Deserialize)]
struct Header {
    width: usize,
    height: usize,
    frames: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: usize,
    exited: bool,
    points: Vec<[f64; 2]>,
}

/// Writes the line-delimited JSON form: a header line
/// `{"width","height","frames","count"}` followed by one
/// `{"id","exited","points":[[x,y],...]}` line per trajectory.
pub fn write_jsonl<T: Scalar, W: Write>(set: &TrajectorySet<T>, mut out: W) -> Result<()> {
    let header = Header { width: set.width, height: set.height, frames: set.frames(), count: set.len() };
    serde_json::to_writer(&mut out, &header).map_err(|e| format_err!("{e}"))?;
    out.write_all(b"\n")?;
    for t in &set.trajectories {
        let record = Record {
            id: t.point_id,
            exited: t.exited,
            points: t.positions.iter().map(|&(x, y)| [x.as_f64(), y.as_f64()]).collect(),
        };
        serde_json::to_writer(&mut out, &record).map_err(|e| format_err!("{e}"))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl_string<T: Scalar>(set: &TrajectorySet<T>) -> String {
    let mut buf = Vec::new();
    write_jsonl(set, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn read_jsonl<T: Scalar, R: BufRead>(input: R) -> Result<TrajectorySet<T>> {
    let mut lines = input.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let header_line = lines.next().ok_or_else(|| format_err!("trajectory file is empty"))??;
    let header: Header = serde_json::from_str(&header_line).map_err(|e| format_err!("bad trajectory header: {e}"))?;
    let mut trajectories = Vec::with_capacity(header.count);
    for line in lines {
        let line = line?;
        let record: Record = serde_json::from_str(&line).map_err(|e| format_err!("bad trajectory record: {e}"))?;
        if record.points.len() != header.frames {
            return Err(format_err!(
                "trajectory {} has {} points, header says {}",
                record.id,
                record.points.len(),
                header.frames
            ));
        }
        trajectories.push(Trajectory {
            point_id: record.id,
            exited: record.exited,
            positions: record.points.iter().map(|&[x, y]| (T::of(x), T::of(y))).collect(),
        });
    }
    if trajectories.len() != header.count {
        return Err(format_err!("header count {} but {} trajectories", header.count, trajectories.len()));
    }
    TrajectorySet::with_frames(header.width, header.height, header.frames, trajectories).map_err(|e| format_err!("{e}"))
}
