//! Synthetic scenes with analytically known flow and point tracks.
//!
//! A textured sprite moves rigidly over a weakly textured static background.
//! Its pose at frame `t` is a center `c(t)` and an orientation `θ(t)`; a point
//! `p` on the sprite at `t` moves to
//!
//! ```text
//! c(t+1) + R(θ(t+1) - θ(t)) (p - c(t))
//! ```
//!
//! Translation and waypoint motion keep `θ = 0`. Circular motion rotates the
//! sprite rigidly about the orbit center, so the flow is the chord
//! `c(t+1) - c(t)` plus a rotational term. Textures are sums of seeded
//! sinusoids evaluated in sprite-local coordinates, so every frame is an exact
//! function of the pose.
//!
//! # Scene files
//!
//! Plain `key = value` lines; `#` starts a comment. Keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `width`, `height` | canvas in pixels | 128, 96 |
//! | `frames` | sequence length (≥ 2) | 30 |
//! | `seed` | texture seed | 0 |
//! | `shape` | `disc`, `square` or `ring` | `disc` |
//! | `size` | diameter or side in pixels (≥ 4) | 24 |
//! | `texture` | sprite speckle amplitude | 0.3 |
//! | `background` | background texture amplitude | 0.15 |
//! | `motion` | `translate`, `circular` or `waypoints` | `translate` |
//! | `start`, `velocity` | translate: `x y` pairs | `40 48`, `1.5 0.5` |
//! | `center`, `radius`, `rate`, `phase` | circular orbit (rate in rad/frame) | `64 48`, 30, 0.1, 0 |
//! | `waypoints` | `frame:x,y` list, linear in between | none |

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{format_err, invalid, Result};
use crate::flow::FlowField;
use crate::frame::Frame;
use crate::rng::{stage_rng, Stage};
use crate::scalar::Scalar;

const SPRITE_BASE: f64 = 0.62;
const BACKGROUND_BASE: f64 = 0.25;
const SPRITE_WAVES: usize = 8;
const BACKGROUND_WAVES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Disc,
    Square,
    /// Annulus with inner diameter half the outer one.
    Ring,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Disc => "disc",
            Shape::Square => "square",
            Shape::Ring => "ring",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "disc" => Ok(Shape::Disc),
            "square" => Ok(Shape::Square),
            "ring" => Ok(Shape::Ring),
            other => Err(invalid!("unknown sprite shape {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpriteSpec {
    pub shape: Shape,
    pub size: f64,
    pub texture: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MotionKind {
    Translate { start: (f64, f64), velocity: (f64, f64) },
    Circular { center: (f64, f64), radius: f64, rate: f64, phase: f64 },
    Waypoints(Vec<Waypoint>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSpec {
    pub kind: MotionKind,
    pub duration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub sprite: SpriteSpec,
    pub motion: MotionSpec,
    pub background: f64,
    pub seed: u64,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            width: 128,
            height: 96,
            sprite: SpriteSpec { shape: Shape::Disc, size: 24.0, texture: 0.3 },
            motion: MotionSpec {
                kind: MotionKind::Translate { start: (40.0, 48.0), velocity: (1.5, 0.5) },
                duration: 30,
            },
            background: 0.15,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pose {
    cx: f64,
    cy: f64,
    theta: f64,
}

impl MotionSpec {
    fn pose(&self, t: usize) -> Pose {
        let tf = t as f64;
        match &self.kind {
            MotionKind::Translate { start, velocity } => {
                Pose { cx: start.0 + tf * velocity.0, cy: start.1 + tf * velocity.1, theta: 0.0 }
            }
            MotionKind::Circular { center, radius, rate, phase } => {
                let a = phase + rate * tf;
                Pose { cx: center.0 + radius * a.cos(), cy: center.1 + radius * a.sin(), theta: rate * tf }
            }
            MotionKind::Waypoints(points) => {
                let last = points[points.len() - 1];
                if t >= last.frame {
                    return Pose { cx: last.x, cy: last.y, theta: 0.0 };
                }
                let k = points.windows(2).position(|w| t < w[1].frame).unwrap();
                let (a, b) = (points[k], points[k + 1]);
                let s = (tf - a.frame as f64) / (b.frame - a.frame) as f64;
                Pose { cx: a.x + s * (b.x - a.x), cy: a.y + s * (b.y - a.y), theta: 0.0 }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.duration < 2 {
            return Err(invalid!("scene needs at least 2 frames, got {}", self.duration));
        }
        match &self.kind {
            MotionKind::Translate { start, velocity } => {
                if ![start.0, start.1, velocity.0, velocity.1].iter().all(|v| v.is_finite()) {
                    return Err(invalid!("translate parameters must be finite"));
                }
            }
            MotionKind::Circular { center, radius, rate, phase } => {
                if ![center.0, center.1, *radius, *rate, *phase].iter().all(|v| v.is_finite()) || *radius < 0.0 {
                    return Err(invalid!("circular parameters must be finite with radius >= 0"));
                }
            }
            MotionKind::Waypoints(points) => {
                if points.is_empty() || points[0].frame != 0 {
                    return Err(invalid!("waypoints must start at frame 0"));
                }
                if points.windows(2).any(|w| w[1].frame <= w[0].frame) {
                    return Err(invalid!("waypoint frames must increase strictly"));
                }
                if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                    return Err(invalid!("waypoint coordinates must be finite"));
                }
            }
        }
        Ok(())
    }
}

impl SpriteSpec {
    /// Signed distance to the sprite boundary in sprite-local coordinates
    /// (negative inside).
    fn signed_distance(&self, qx: f64, qy: f64) -> f64 {
        let half = self.size / 2.0;
        match self.shape {
            Shape::Disc => qx.hypot(qy) - half,
            Shape::Square => qx.abs().max(qy.abs()) - half,
            Shape::Ring => {
                let r = qx.hypot(qy);
                (r - half).max(half / 2.0 - r)
            }
        }
    }

    fn bounding_radius(&self) -> f64 {
        match self.shape {
            Shape::Square => self.size / 2.0 * std::f64::consts::SQRT_2,
            Shape::Disc | Shape::Ring => self.size / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
}

#[derive(Debug, Clone)]
struct Texture {
    waves: Vec<Wave>,
}

impl Texture {
    fn random<R: Rng>(rng: &mut R, count: usize, min_wavelength: f64, max_wavelength: f64) -> Self {
        let waves = (0..count)
            .map(|_| {
                let dir = rng.gen::<f64>() * 2.0 * PI;
                let wavelength = min_wavelength + rng.gen::<f64>() * (max_wavelength - min_wavelength);
                let k = 2.0 * PI / wavelength;
                Wave { kx: k * dir.cos(), ky: k * dir.sin(), phase: rng.gen::<f64>() * 2.0 * PI }
            })
            .collect();
        Self { waves }
    }

    /// Zero-mean value in `[-1, 1]`.
    fn eval(&self, x: f64, y: f64) -> f64 {
        let s: f64 = self.waves.iter().map(|w| (w.kx * x + w.ky * y + w.phase).sin()).sum();
        s / self.waves.len() as f64
    }
}

struct Textures {
    sprite: Texture,
    background: Texture,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(invalid!("canvas must be nonempty"));
        }
        if !self.sprite.size.is_finite() || self.sprite.size < 4.0 {
            return Err(invalid!("sprite size must be at least 4 px, got {}", self.sprite.size));
        }
        if !(0.0..=1.0).contains(&self.sprite.texture) || !(0.0..=1.0).contains(&self.background) {
            return Err(invalid!("texture amplitudes must lie in [0, 1]"));
        }
        self.motion.validate()?;
        let rb = self.sprite.bounding_radius();
        let (xmax, ymax) = ((self.width - 1) as f64, (self.height - 1) as f64);
        for t in 0..self.motion.duration {
            let p = self.motion.pose(t);
            if p.cx - rb < 0.0 || p.cy - rb < 0.0 || p.cx + rb > xmax || p.cy + rb > ymax {
                return Err(invalid!(
                    "sprite exits the {}x{} frame at t = {t} (center {:.2}, {:.2})",
                    self.width,
                    self.height,
                    p.cx,
                    p.cy
                ));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> usize {
        self.motion.duration
    }

    /// Sprite center at frame `t`.
    pub fn center(&self, t: usize) -> (f64, f64) {
        let p = self.motion.pose(t);
        (p.cx, p.cy)
    }

    fn textures(&self) -> Textures {
        let mut rng = stage_rng(self.seed, Stage::Render);
        let sprite = Texture::random(&mut rng, SPRITE_WAVES, 4.0, 9.0);
        let background = Texture::random(&mut rng, BACKGROUND_WAVES, 6.0, 14.0);
        Textures { sprite, background }
    }

    fn to_local(&self, pose: Pose, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - pose.cx, y - pose.cy);
        let (s, c) = pose.theta.sin_cos();
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Whether pixel `(x, y)` lies on the sprite at frame `t`.
    pub fn on_sprite(&self, t: usize, x: f64, y: f64) -> bool {
        let pose = self.motion.pose(t);
        let (qx, qy) = self.to_local(pose, x, y);
        self.sprite.signed_distance(qx, qy) <= 0.0
    }

    /// Row-major sprite support at frame `t`.
    pub fn support(&self, t: usize) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(self.on_sprite(t, x as f64, y as f64));
            }
        }
        out
    }

    /// Where the sprite point at `(x, y)` in frame `t` lands in frame `t + 1`.
    fn advance(&self, t: usize, x: f64, y: f64) -> (f64, f64) {
        let a = self.motion.pose(t);
        let b = self.motion.pose(t + 1);
        let (s, c) = (b.theta - a.theta).sin_cos();
        let (dx, dy) = (x - a.cx, y - a.cy);
        (b.cx + c * dx - s * dy, b.cy + s * dx + c * dy)
    }
}

/// Renders every frame of the scene.
pub fn render<T: Scalar>(scene: &Scene) -> Result<Vec<Frame<T>>> {
    scene.validate()?;
    let textures = scene.textures();
    (0..scene.duration()).map(|t| render_frame(scene, &textures, t)).collect()
}

fn render_frame<T: Scalar>(scene: &Scene, textures: &Textures, t: usize) -> Result<Frame<T>> {
    let pose = scene.motion.pose(t);
    Frame::from_fn(scene.width, scene.height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let bg = BACKGROUND_BASE + scene.background * textures.background.eval(xf, yf);
        let (qx, qy) = scene.to_local(pose, xf, yf);
        let d = scene.sprite.signed_distance(qx, qy);
        // one-pixel antialiased edge
        let coverage = (0.5 - d).clamp(0.0, 1.0);
        let value = if coverage > 0.0 {
            let fg = SPRITE_BASE + scene.sprite.texture * textures.sprite.eval(qx, qy);
            coverage * fg + (1.0 - coverage) * bg
        } else {
            bg
        };
        T::of(value.clamp(0.0, 1.0))
    })
}

/// Exact flow from frame `t` to `t + 1`: the rigid motion on the sprite
/// support, zero elsewhere.
pub fn ground_truth_flow<T: Scalar>(scene: &Scene, t: usize) -> Result<FlowField<T>> {
    scene.validate()?;
    if t + 1 >= scene.duration() {
        return Err(invalid!("flow step {t} out of range for {} frames", scene.duration()));
    }
    FlowField::from_fn(scene.width, scene.height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        if scene.on_sprite(t, xf, yf) {
            let (nx, ny) = scene.advance(t, xf, yf);
            (T::of(nx - xf), T::of(ny - yf))
        } else {
            (T::zero(), T::zero())
        }
    })
}

/// Closed-form path of the sprite point at `start` in frame 0, one position
/// per frame.
pub fn ground_truth_track<T: Scalar>(scene: &Scene, start: (f64, f64)) -> Result<Vec<(T, T)>> {
    scene.validate()?;
    if !scene.on_sprite(0, start.0, start.1) {
        return Err(invalid!("start ({}, {}) is not on the sprite", start.0, start.1));
    }
    let p0 = scene.motion.pose(0);
    Ok((0..scene.duration())
        .map(|t| {
            let p = scene.motion.pose(t);
            let (s, c) = (p.theta - p0.theta).sin_cos();
            let (dx, dy) = (start.0 - p0.cx, start.1 - p0.cy);
            (T::of(p.cx + c * dx - s * dy), T::of(p.cy + s * dx + c * dy))
        })
        .collect())
}

impl Scene {
    pub fn parse(text: &str) -> Result<Self> {
        let mut scene = Scene::default();
        let mut motion = "translate".to_string();
        let (mut start, mut velocity) = ((40.0, 48.0), (1.5, 0.5));
        let (mut center, mut radius, mut rate, mut phase) = ((64.0, 48.0), 30.0, 0.1, 0.0);
        let mut waypoints: Option<Vec<Waypoint>> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format_err!("line {}: expected `key = value`", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = |e: String| format_err!("line {}: {key}: {e}", lineno + 1);
            match key {
                "width" => scene.width = parse_num(value).map_err(ctx)?,
                "height" => scene.height = parse_num(value).map_err(ctx)?,
                "frames" => scene.motion.duration = parse_num(value).map_err(ctx)?,
                "seed" => scene.seed = parse_num(value).map_err(ctx)?,
                "shape" => scene.sprite.shape = Shape::parse(value).map_err(|e| ctx(e.to_string()))?,
                "size" => scene.sprite.size = parse_num(value).map_err(ctx)?,
                "texture" => scene.sprite.texture = parse_num(value).map_err(ctx)?,
                "background" => scene.background = parse_num(value).map_err(ctx)?,
                "motion" => motion = value.to_string(),
                "start" => start = parse_pair(value).map_err(ctx)?,
                "velocity" => velocity = parse_pair(value).map_err(ctx)?,
                "center" => center = parse_pair(value).map_err(ctx)?,
                "radius" => radius = parse_num(value).map_err(ctx)?,
                "rate" => rate = parse_num(value).map_err(ctx)?,
                "phase" => phase = parse_num(value).map_err(ctx)?,
                "waypoints" => waypoints = Some(parse_waypoints(value).map_err(ctx)?),
                other => return Err(format_err!("line {}: unknown key {other:?}", lineno + 1)),
            }
        }
        scene.motion.kind = match motion.as_str() {
            "translate" => MotionKind::Translate { start, velocity },
            "circular" => MotionKind::Circular { center, radius, rate, phase },
            "waypoints" => {
                MotionKind::Waypoints(waypoints.ok_or_else(|| format_err!("waypoints motion needs a `waypoints` key"))?)
            }
            other => return Err(format_err!("unknown motion {other:?}")),
        };
        Ok(scene)
    }

    /// Canonical scene file; `Scene::parse` reads it back to an equal scene.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "height = {}", self.height);
        let _ = writeln!(s, "frames = {}", self.motion.duration);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "shape = {}", self.sprite.shape.name());
        let _ = writeln!(s, "size = {:?}", self.sprite.size);
        let _ = writeln!(s, "texture = {:?}", self.sprite.texture);
        let _ = writeln!(s, "background = {:?}", self.background);
        match &self.motion.kind {
            MotionKind::Translate { start, velocity } => {
                let _ = writeln!(s, "motion = translate");
                let _ = writeln!(s, "start = {:?} {:?}", start.0, start.1);
                let _ = writeln!(s, "velocity = {:?} {:?}", velocity.0, velocity.1);
            }
            MotionKind::Circular { center, radius, rate, phase } => {
                let _ = writeln!(s, "motion = circular");
                let _ = writeln!(s, "center = {:?} {:?}", center.0, center.1);
                let _ = writeln!(s, "radius = {radius:?}");
                let _ = writeln!(s, "rate = {rate:?}");
                let _ = writeln!(s, "phase = {phase:?}");
            }
            MotionKind::Waypoints(points) => {
                let _ = writeln!(s, "motion = waypoints");
                let list: Vec<String> = points.iter().map(|p| format!("{}:{:?},{:?}", p.frame, p.x, p.y)).collect();
                let _ = writeln!(s, "waypoints = {}", list.join(" "));
            }
        }
        s
    }
}

fn parse_num<N: std::str::FromStr>(s: &str) -> std::result::Result<N, String> {
    s.parse().map_err(|_| format!("cannot parse {s:?}"))
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    match parts.as_slice() {
        [a, b] => Ok((parse_num(a)?, parse_num(b)?)),
        _ => Err(format!("expected two numbers, got {s:?}")),
    }
}

fn parse_waypoints(s: &str) -> std::result::Result<Vec<Waypoint>, String> {
    s.split_whitespace()
        .map(|item| {
            let (frame, xy) = item.split_once(':').ok_or_else(|| format!("bad waypoint {item:?}"))?;
            let (x, y) = xy.split_once(',').ok_or_else(|| format!("bad waypoint {item:?}"))?;
            Ok(Waypoint { frame: parse_num(frame)?, x: parse_num(x)?, y: parse_num(y)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::sampler::KeypointSet;
    use crate::tracker::propagate;

    fn translate(velocity: (f64, f64), frames: usize) -> Scene {
        Scene {
            motion: MotionSpec { kind: MotionKind::Translate { start: (40.0, 48.0), velocity }, duration: frames },
            ..Scene::default()
        }
    }

    fn circular(frames: usize) -> Scene {
        Scene {
            sprite: SpriteSpec { shape: Shape::Disc, size: 16.0, texture: 0.3 },
            motion: MotionSpec {
                kind: MotionKind::Circular { center: (64.0, 48.0), radius: 30.0, rate: 2.0 * PI / 60.0, phase: 0.0 },
                duration: frames,
            },
            ..Scene::default()
        }
    }

    fn centroid(scene: &Scene, t: usize) -> (f64, f64) {
        let s = scene.support(t);
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for (i, &on) in s.iter().enumerate() {
            if on {
                sx += (i % scene.width) as f64;
                sy += (i / scene.width) as f64;
                n += 1.0;
            }
        }
        (sx / n, sy / n)
    }

    #[test]
    fn translating_disc_advances() {
        let scene = translate((2.0, 0.0), 5);
        let frames = render::<f64>(&scene).unwrap();
        assert_eq!(frames.len(), 5);
        for t in 0..4 {
            let (a, b) = (centroid(&scene, t), centroid(&scene, t + 1));
            assert!((b.0 - a.0 - 2.0).abs() < 1e-9 && (b.1 - a.1).abs() < 1e-9);
        }
        // the sprite pattern moves with it: f1(x + 2, y) == f0(x, y) on the sprite
        let (f0, f1) = (&frames[0], &frames[1]);
        for y in 40..56 {
            for x in 34..46 {
                if scene.on_sprite(0, x as f64, y as f64) && scene.sprite.signed_distance(x as f64 - 40.0, y as f64 - 48.0) < -1.0 {
                    assert!((f1.get(x + 2, y) - f0.get(x, y)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn static_scene_repeats() {
        let scene = translate((0.0, 0.0), 2);
        let frames = render::<f64>(&scene).unwrap();
        assert_eq!(frames[0], frames[1]);
        assert_eq!(ground_truth_flow::<f64>(&scene, 0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn full_revolution_closes() {
        // 60 steps of 2π/60: frame 60 is frame 0
        let frames = render::<f64>(&circular(61)).unwrap();
        let diff = frames[0].data().iter().zip(frames[60].data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "max diff {diff}");
    }

    #[test]
    fn translate_flow_is_constant_on_support() {
        let scene = translate((2.0, 0.0), 4);
        let flow = ground_truth_flow::<f64>(&scene, 1).unwrap();
        let support = scene.support(1);
        for (i, &on) in support.iter().enumerate() {
            let expected = if on { (2.0, 0.0) } else { (0.0, 0.0) };
            assert_eq!((flow.u()[i], flow.v()[i]), expected);
        }
        assert!(matches!(ground_truth_flow::<f64>(&scene, 3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn circular_flow_is_chord_plus_rotation() {
        let scene = circular(20);
        let t = 5;
        let flow = ground_truth_flow::<f64>(&scene, t).unwrap();
        let (c0, c1) = (scene.center(t), scene.center(t + 1));
        // pixel nearest the center moves by the chord (up to the rotation of
        // its sub-pixel offset)
        let (px, py) = (c0.0.round(), c0.1.round());
        let (u, v) = flow.get(px as usize, py as usize);
        let omega = 2.0 * PI / 60.0;
        let (dx, dy) = (px - c0.0, py - c0.1);
        let rot = (omega.cos() * dx - omega.sin() * dy - dx, omega.sin() * dx + omega.cos() * dy - dy);
        assert!((u - (c1.0 - c0.0 + rot.0)).abs() < 1e-9);
        assert!((v - (c1.1 - c0.1 + rot.1)).abs() < 1e-9);
        // every on-sprite vector equals the finite difference of the exact track
        let scene_t = Scene {
            motion: MotionSpec { kind: MotionKind::Circular { center: (64.0, 48.0), radius: 30.0, rate: omega, phase: omega * t as f64 }, duration: 2 },
            ..scene.clone()
        };
        for (i, &on) in scene.support(t).iter().enumerate() {
            if on {
                let (x, y) = ((i % scene.width) as f64, (i / scene.width) as f64);
                let track = ground_truth_track::<f64>(&scene_t, (x, y)).unwrap();
                assert!((flow.u()[i] - (track[1].0 - x)).abs() < 1e-9);
                assert!((flow.v()[i] - (track[1].1 - y)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tracks() {
        let scene = Scene {
            motion: MotionSpec { kind: MotionKind::Translate { start: (12.0, 12.0), velocity: (1.0, 1.0) }, duration: 5 },
            sprite: SpriteSpec { shape: Shape::Square, size: 8.0, texture: 0.3 },
            ..Scene::default()
        };
        let tr = ground_truth_track::<f64>(&scene, (10.0, 10.0)).unwrap();
        assert_eq!(tr, vec![(10.0, 10.0), (11.0, 11.0), (12.0, 12.0), (13.0, 13.0), (14.0, 14.0)]);
        let still = translate((0.0, 0.0), 4);
        let tr = ground_truth_track::<f64>(&still, (41.0, 47.0)).unwrap();
        assert!(tr.iter().all(|&p| p == (41.0, 47.0)));
        assert!(matches!(ground_truth_track::<f64>(&still, (2.0, 2.0)), Err(Error::InvalidInput(_))));

        let circ = circular(30);
        let start = (circ.center(0).0 + 3.0, circ.center(0).1 - 2.0);
        let tr = ground_truth_track::<f64>(&circ, start).unwrap();
        let omega = 2.0 * PI / 60.0;
        for (t, &(x, y)) in tr.iter().enumerate() {
            // a point at offset (3, -2) from the orbit point rotates with the orbit
            let a = omega * t as f64;
            let (ox, oy) = (33.0, -2.0);
            let ex = 64.0 + a.cos() * ox - a.sin() * oy;
            let ey = 48.0 + a.sin() * ox + a.cos() * oy;
            assert!((x - ex).abs() < 1e-9 && (y - ey).abs() < 1e-9);
        }
    }

    #[test]
    fn propagated_ground_truth_matches_tracks() {
        for scene in [translate((1.25, -0.5), 12), circular(12)] {
            let flows: Vec<FlowField<f64>> = (0..scene.duration() - 1).map(|t| ground_truth_flow(&scene, t).unwrap()).collect();
            let (cx, cy) = scene.center(0);
            let starts = [(cx.round() as usize, cy.round() as usize), (cx.round() as usize + 3, cy.round() as usize - 2)];
            let set = propagate(&KeypointSet::new(starts.to_vec()).unwrap(), &flows).unwrap();
            let tol = if matches!(scene.motion.kind, MotionKind::Translate { .. }) { 1e-6 } else { 0.05 };
            for (tr, &s) in set.trajectories().iter().zip(&starts) {
                let oracle = ground_truth_track::<f64>(&scene, (s.0 as f64, s.1 as f64)).unwrap();
                for (p, q) in tr.positions.iter().zip(&oracle) {
                    assert!((p.0 - q.0).abs() <= tol && (p.1 - q.1).abs() <= tol, "{p:?} vs {q:?}");
                }
            }
        }
    }

    #[test]
    fn waypoints_interpolate_and_hold() {
        let scene = Scene {
            motion: MotionSpec {
                kind: MotionKind::Waypoints(vec![
                    Waypoint { frame: 0, x: 30.0, y: 40.0 },
                    Waypoint { frame: 4, x: 38.0, y: 40.0 },
                    Waypoint { frame: 6, x: 38.0, y: 44.0 },
                ]),
                duration: 9,
            },
            ..Scene::default()
        };
        assert_eq!(scene.center(2), (34.0, 40.0));
        assert_eq!(scene.center(5), (38.0, 42.0));
        assert_eq!(scene.center(8), (38.0, 44.0));
        let flow = ground_truth_flow::<f64>(&scene, 1).unwrap();
        assert_eq!(flow.get(30, 40), (2.0, 0.0));
    }

    #[test]
    fn sprite_exit_and_other_errors() {
        let scene = translate((5.0, 0.0), 30);
        assert!(matches!(render::<f64>(&scene), Err(Error::InvalidInput(_))));
        assert!(matches!(render::<f64>(&translate((0.0, 0.0), 1)), Err(Error::InvalidInput(_))));
        let tiny = Scene { sprite: SpriteSpec { size: 3.0, ..Scene::default().sprite }, ..Scene::default() };
        assert!(matches!(render::<f64>(&tiny), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rendering_is_deterministic_and_seeded() {
        let a = render::<f64>(&Scene::default()).unwrap();
        let b = render::<f64>(&Scene::default()).unwrap();
        assert_eq!(a, b);
        let c = render::<f64>(&Scene { seed: 1, ..Scene::default() }).unwrap();
        assert_ne!(a[0], c[0]);
    }

    #[test]
    fn config_roundtrip() {
        for scene in [Scene::default(), circular(40), Scene {
            motion: MotionSpec { kind: MotionKind::Waypoints(vec![Waypoint { frame: 0, x: 30.5, y: 40.0 }, Waypoint { frame: 9, x: 60.0, y: 41.25 }]), duration: 12 },
            sprite: SpriteSpec { shape: Shape::Ring, size: 20.0, texture: 0.25 },
            seed: 99,
            ..Scene::default()
        }] {
            assert_eq!(Scene::parse(&scene.to_config_string()).unwrap(), scene);
        }
        let text = "# demo\nwidth = 64\nshape = square  # box\nmotion = circular\nradius = 5\n";
        let s = Scene::parse(text).unwrap();
        assert_eq!((s.width, s.sprite.shape), (64, Shape::Square));
        assert!(matches!(s.motion.kind, MotionKind::Circular { radius, .. } if radius == 5.0));
        assert!(matches!(Scene::parse("colour = red"), Err(Error::Format(_))));
        assert!(matches!(Scene::parse("width"), Err(Error::Format(_))));
        assert!(matches!(Scene::parse("motion = waypoints"), Err(Error::Format(_))));
    }
}
