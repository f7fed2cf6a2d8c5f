use std::io::BufReader;
use std::path::Path;

use rayon::prelude::*;
use sparseflow::conditioning::{gaussian_kernel, rasterize, smooth, write_conditioning};
use sparseflow::eval::{endpoint_error, sampling_fit, trajectory_error, MetricReport, MAX_FIT_CANDIDATES};
use sparseflow::flow::{estimate_flow, write_flo};
use sparseflow::frame::write_pgm;
use sparseflow::pipeline::{track as run_track, TrackConfig};
use sparseflow::rng::{stage_rng, Stage};
use sparseflow::sampler::{build_candidate_grid, SamplingPlan};
use sparseflow::synthetic::{ground_truth_flow, ground_truth_track, render, Scene};
use sparseflow::tracker::{read_jsonl, to_jsonl_string};
use sparseflow::{FlowField64, FlowParams64, Frame64, TrajectorySet64};

use crate::config::Settings;
use crate::files::{self, frame_name, io_err};
use crate::overlay::draw_polyline;
use crate::CliError;

/// First-draw trials behind the reported chi-square statistic.
const FIT_TRIALS: usize = 100_000;
const SYNTH_MAXVAL: u16 = 65535;

fn load_frames(dir: &Path) -> Result<Vec<Frame64>, CliError> {
    let paths = files::list(dir, None, "pgm")?;
    if paths.len() < 2 {
        return Err(CliError::Usage(format!("need at least 2 .pgm frames in {}, found {}", dir.display(), paths.len())));
    }
    paths.iter().map(|p| files::load_frame(p).map(|(f, _)| f)).collect()
}

fn compute_flows(frames: &[Frame64], params: &FlowParams64) -> Result<Vec<FlowField64>, CliError> {
    let flows: Result<Vec<_>, _> = frames.par_windows(2).map(|w| estimate_flow(&w[0], &w[1], params)).collect();
    Ok(flows?)
}

fn load_flows(dir: &Path) -> Result<Vec<FlowField64>, CliError> {
    let paths = files::list(dir, None, "flo")?;
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no .flo files in {}", dir.display())));
    }
    paths.iter().map(|p| files::load_flow(p)).collect()
}

fn load_trajectories(path: &Path) -> Result<TrajectorySet64, CliError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_jsonl(BufReader::new(file)).map_err(|e| io_err(path, e))
}

fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Scene::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn flow(s: &Settings) -> Result<(), CliError> {
    let input = s.require(&s.input, "input")?;
    let output = s.require(&s.output, "output")?;
    let frames = load_frames(input)?;
    let flows = compute_flows(&frames, &s.flow)?;
    files::create_dir(output)?;
    for (t, f) in flows.iter().enumerate() {
        files::write(&output.join(frame_name("flow", t, "flo")), &write_flo(f))?;
    }
    Ok(())
}

pub fn track(s: &Settings) -> Result<(), CliError> {
    let output = s.require(&s.output, "output")?;
    let flows = match (&s.input, &s.flow_dir) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --input or --flow-dir, not both".into())),
        (None, None) => return Err(CliError::Usage("missing flow input: pass --input <frames> or --flow-dir <dir>".into())),
        (Some(frames), None) => compute_flows(&load_frames(frames)?, &s.flow)?,
        (None, Some(dir)) => load_flows(dir)?,
    };
    let config = TrackConfig { stride: s.lambda, n_max: s.n_max, seed: s.seed(), ..TrackConfig::default() };
    let tracked = run_track(&flows, &config)?;
    eprintln!("N={} lambda={} seed={}", tracked.keypoints.len(), s.lambda, s.seed());
    files::create_dir(output)?;
    files::write(&output.join("trajectories.jsonl"), to_jsonl_string(&tracked.trajectories).as_bytes())
}

pub fn condition(s: &Settings) -> Result<(), CliError> {
    let output = s.require(&s.output, "output")?;
    let set = load_trajectories(s.require(&s.trajectories, "trajectories")?)?;
    let kernel = gaussian_kernel(s.kernel_radius, s.sigma).map_err(|e| CliError::Usage(e.to_string()))?;
    let steps = set.frames().saturating_sub(1);
    let maps: Result<Vec<Vec<u8>>, CliError> = (0..steps)
        .into_par_iter()
        .map(|t| Ok(write_conditioning(&smooth(&rasterize(&set, t)?, &kernel))))
        .collect();
    files::create_dir(output)?;
    for (t, bytes) in maps?.iter().enumerate() {
        files::write(&output.join(frame_name("cond", t, "bin")), bytes)?;
    }
    Ok(())
}

pub fn synth(s: &Settings) -> Result<(), CliError> {
    let output = s.require(&s.output, "output")?;
    let mut scene = match &s.scene {
        Some(path) => load_scene(path)?,
        None => Scene::default(),
    };
    if let Some(seed) = s.seed {
        scene.seed = seed;
    }
    scene.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let frames = render::<f64>(&scene)?;
    // (flow, support mask) file bytes per step
    let truth: Result<Vec<_>, CliError> = (0..scene.duration() - 1)
        .into_par_iter()
        .map(|t| {
            let flow = write_flo(&ground_truth_flow::<f64>(&scene, t)?);
            let mask = files::mask_pgm(scene.width, scene.height, &scene.support(t))?;
            Ok::<_, CliError>((flow, mask))
        })
        .collect();
    let truth_dir = output.join("truth");
    files::create_dir(&truth_dir)?;
    for (t, frame) in frames.iter().enumerate() {
        files::write(&output.join(frame_name("frame", t, "pgm")), &write_pgm(frame, SYNTH_MAXVAL)?)?;
    }
    for (t, (flow, mask)) in truth?.iter().enumerate() {
        files::write(&truth_dir.join(frame_name("gt_flow", t, "flo")), flow)?;
        files::write(&truth_dir.join(frame_name("support", t, "pgm")), mask)?;
    }
    files::write(&output.join("scene.txt"), scene.to_config_string().as_bytes())
}

pub fn eval(s: &Settings) -> Result<(), CliError> {
    let mut report = MetricReport::default();
    let mut scored = false;

    if let Some(input) = &s.input {
        let truth_dir = s.require(&s.truth, "truth")?;
        let estimated = load_flows(input)?;
        let truth = load_flows(truth_dir)?;
        if estimated.len() != truth.len() {
            return Err(CliError::Usage(format!("{} estimated flows but {} ground-truth flows", estimated.len(), truth.len())));
        }
        let masks = match &s.mask_dir {
            Some(dir) => {
                let paths = files::list(dir, None, "pgm")?;
                if paths.len() != truth.len() {
                    return Err(CliError::Usage(format!("{} masks for {} flows", paths.len(), truth.len())));
                }
                Some(paths.iter().map(|p| files::load_mask(p)).collect::<Result<Vec<_>, _>>()?)
            }
            None => None,
        };
        let (mut sum, mut pixels) = (0.0, 0usize);
        for (t, (est, gt)) in estimated.iter().zip(&truth).enumerate() {
            let mask = masks.as_ref().map(|m| m[t].as_slice());
            let (mean, max) = endpoint_error(est, gt, mask)?;
            let n = mask.map_or(est.width() * est.height(), |m| m.iter().filter(|&&b| b).count());
            sum += mean * n as f64;
            pixels += n;
            report.max_epe = report.max_epe.max(max);
        }
        report.mean_epe = sum / pixels as f64;

        let first = &estimated[0];
        let grid = build_candidate_grid(first.width(), first.height(), s.lambda, &mut stage_rng(s.seed(), Stage::Grid))?;
        if grid.len() <= MAX_FIT_CANDIDATES {
            let plan = SamplingPlan::from_flow(first, &grid, s.n_max, s.seed())?;
            report.chi_square_stat = sampling_fit(&grid, &plan, FIT_TRIALS, &mut stage_rng(s.seed(), Stage::Eval))?;
        }
        scored = true;
    }

    if let Some(path) = &s.trajectories {
        let scene = load_scene(s.require(&s.scene, "scene")?)?;
        let set = load_trajectories(path)?;
        // the oracle only covers points that start on the sprite
        let on_sprite: Vec<_> = set
            .trajectories()
            .iter()
            .filter(|tr| scene.on_sprite(0, tr.positions[0].0, tr.positions[0].1))
            .cloned()
            .collect();
        if !on_sprite.is_empty() {
            let oracle = on_sprite
                .iter()
                .map(|tr| ground_truth_track(&scene, tr.positions[0]))
                .collect::<Result<Vec<Vec<(f64, f64)>>, _>>()?;
            let subset = TrajectorySet64::new(set.width(), set.height(), on_sprite)?;
            report.per_step_trajectory_error = trajectory_error(&subset, &oracle)?;
            report.sample_count = subset.len();
        }
        scored = true;
    }

    if !scored {
        return Err(CliError::Usage("nothing to evaluate: pass --input with --truth, or --trajectories with --scene".into()));
    }
    let json = report.to_json();
    println!("{json}");
    if let Some(out) = &s.output {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            files::create_dir(parent)?;
        }
        files::write(out, format!("{json}\n").as_bytes())?;
    }
    Ok(())
}

pub fn overlay(s: &Settings) -> Result<(), CliError> {
    let input = s.require(&s.input, "input")?;
    let output = s.require(&s.output, "output")?;
    let set = load_trajectories(s.require(&s.trajectories, "trajectories")?)?;
    let paths = files::list(input, None, "pgm")?;
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no .pgm frames in {}", input.display())));
    }
    let rendered: Result<Vec<Vec<u8>>, CliError> = paths
        .par_iter()
        .enumerate()
        .map(|(t, path)| {
            let original = files::read(path)?;
            let pgm = sparseflow::frame::read_pgm::<f64>(&original).map_err(|e| io_err(path, e))?;
            let mut frame = pgm.frame;
            if !set.is_empty() && (frame.width() != set.width() || frame.height() != set.height()) {
                return Err(CliError::Failed(format!(
                    "{}: frame is {}x{}, trajectories are {}x{}",
                    path.display(),
                    frame.width(),
                    frame.height(),
                    set.width(),
                    set.height()
                )));
            }
            let mut touched = false;
            for traj in set.trajectories() {
                let end = (t + 1).min(traj.positions.len());
                touched |= draw_polyline(&mut frame, &traj.positions[..end]);
            }
            // untouched frames are copied verbatim, header comments included
            if touched {
                Ok(write_pgm(&frame, pgm.maxval)?)
            } else {
                Ok(original)
            }
        })
        .collect();
    files::create_dir(output)?;
    for (path, bytes) in paths.iter().zip(rendered?) {
        files::write(&output.join(path.file_name().expect("listed files have names")), &bytes)?;
    }
    Ok(())
}
