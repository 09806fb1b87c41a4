//! The five CLI operations: synth, recognize, eval, bench, track.
//!
//! Each returns a categorized error so `main` can map failures onto the
//! documented exit codes (1 usage, 2 data, 3 internal).

use std::fs;
use std::path::Path;
use std::time::Instant;

use handpose_core::{
    apply_noise, clamp_pose, default_bounds, forward_kinematics, pso, random_pose, render_depth,
    render_pose, rng, synthesize_observation, CostBreakdown, Evaluator, HandDimensions, HandPose,
    Observation, POSE_DIM,
};
use thiserror::Error;

use crate::config::RunConfig;
use crate::io::{
    load_dimensions, load_observation, load_pose, save_gray_pgm, save_observation, save_pose,
    IoError, ObservationPaths,
};
use crate::parallel::{evaluate_batch, BatchError, ParallelEvaluator};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] IoError),
    #[error("{0}")]
    DataOther(String),
    #[error("{0}")]
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data(_) | AppError::DataOther(_) => 2,
            AppError::Internal(_) => 3,
        }
    }
}

impl From<pso::PsoError> for AppError {
    fn from(e: pso::PsoError) -> Self {
        AppError::Internal(e.to_string())
    }
}

impl From<BatchError> for AppError {
    fn from(e: BatchError) -> Self {
        AppError::Internal(e.to_string())
    }
}

fn ensure_dir(dir: &Path) -> Result<(), AppError> {
    fs::create_dir_all(dir).map_err(|source| {
        AppError::Data(IoError::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}

fn load_dims(cfg: &RunConfig) -> Result<HandDimensions, AppError> {
    match &cfg.dims_file {
        Some(p) => Ok(load_dimensions(p)?),
        None => Ok(HandDimensions::default()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|source| {
        AppError::Data(IoError::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

/// Renders a reference pose into observation files (with optional noise).
pub fn cmd_synth(pose_path: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<(), AppError> {
    let dims = load_dims(cfg)?;
    let pose = load_pose(pose_path)?;
    let bounds = default_bounds();
    let clamped = clamp_pose(&pose, &bounds);
    if clamped != pose {
        eprintln!("warning: pose outside joint limits; clamped");
    }
    let cam = cfg.camera();
    let mut o = synthesize_observation(&clamped, &dims, &cam);
    if !cfg.noise.is_zero() {
        o = apply_noise(&o, &cfg.noise, &mut rng::seeded(cfg.seed));
    }
    ensure_dir(out_dir)?;
    save_observation(&o, &ObservationPaths::in_dir(out_dir, "observation"))?;
    save_pose(&out_dir.join("reference_pose.txt"), &clamped)?;
    cfg.save(&out_dir.join("config.txt"))?;
    println!(
        "synth: {} hand pixels at {}x{} -> {}",
        o.mask.count_ones(),
        cam.width,
        cam.height,
        out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// recognize
// ---------------------------------------------------------------------------

pub struct Recognition {
    pub pose: HandPose,
    pub cost: f64,
    pub trace: Vec<f64>,
}

/// The full optimizer run against one observation; shared by recognize and
/// track.
pub fn recognize_observation(
    o: &Observation,
    dims: &HandDimensions,
    cfg: &RunConfig,
    warm: Option<&HandPose>,
) -> Result<Recognition, AppError> {
    let bounds = default_bounds();
    let search = pso::SearchBounds::from(&bounds);
    let params = cfg.pso_with_seed();
    let warm_start = warm.map(|h| pso::WarmStart {
        center: h.to_vector().to_vec(),
        radius: warm_radius(cfg),
    });
    let mut objective = ParallelEvaluator {
        observation: o,
        dims: dims.clone(),
        params: cfg.cost,
        workers: cfg.workers,
    };
    let result = pso::run(&mut objective, &search, &params, warm_start.as_ref())?;
    Ok(Recognition {
        pose: HandPose::from_vector(&result.best_position),
        cost: result.best_cost,
        trace: result.trace,
    })
}

fn warm_radius(cfg: &RunConfig) -> Vec<f64> {
    (0..POSE_DIM)
        .map(|d| {
            if d < 3 {
                cfg.track_radius_pos
            } else {
                cfg.track_radius_deg
            }
        })
        .collect()
}

fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("generation,best_cost\n");
    for (i, c) in trace.iter().enumerate() {
        s.push_str(&format!("{},{}\n", i + 1, c));
    }
    s
}

/// |observed − recognized| scaled to 8-bit; pixels covered by exactly one
/// image render white, agreement renders black.
fn difference_image(o: &Observation, r: &handpose_core::DepthImage, d_max: f64) -> Vec<u8> {
    o.depth
        .data
        .iter()
        .zip(&r.data)
        .map(|(&od, &rd)| match (od, rd) {
            (0, 0) => 0u8,
            (0, _) | (_, 0) => 255,
            (od, rd) => {
                let diff = (od as f64 - rd as f64).abs().min(d_max);
                (diff / d_max * 255.0) as u8
            }
        })
        .collect()
}

fn write_recognition_artifacts(
    out_dir: &Path,
    o: &Observation,
    dims: &HandDimensions,
    cfg: &RunConfig,
    rec: &Recognition,
) -> Result<(), AppError> {
    ensure_dir(out_dir)?;
    save_pose(&out_dir.join("pose.txt"), &rec.pose)?;
    write_text(&out_dir.join("trace.csv"), &trace_csv(&rec.trace))?;
    let recovered = render_pose(&rec.pose, dims, &o.cam);
    crate::io::save_depth_pgm(&out_dir.join("observed_depth.pgm"), &o.depth)?;
    crate::io::save_depth_pgm(&out_dir.join("recovered_depth.pgm"), &recovered)?;
    save_gray_pgm(
        &out_dir.join("diff.pgm"),
        o.depth.width,
        o.depth.height,
        &difference_image(o, &recovered, cfg.cost.d_max),
    )?;
    cfg.save(&out_dir.join("config.txt"))?;
    Ok(())
}

pub fn cmd_recognize(
    obs_dir: &Path,
    out_dir: &Path,
    cfg: &RunConfig,
    warm_path: Option<&Path>,
) -> Result<(), AppError> {
    let dims = load_dims(cfg)?;
    let o = load_observation(&ObservationPaths::in_dir(obs_dir, "observation"))?;
    let warm = warm_path.map(load_pose).transpose()?;
    let rec = recognize_observation(&o, &dims, cfg, warm.as_ref())?;
    write_recognition_artifacts(out_dir, &o, &dims, cfg, &rec)?;
    println!(
        "recognize: final cost {} after {} generations -> {}",
        rec.cost,
        rec.trace.len(),
        out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

pub fn cmd_eval(pose_path: &Path, obs_dir: &Path, cfg: &RunConfig) -> Result<(), AppError> {
    let dims = load_dims(cfg)?;
    let pose = load_pose(pose_path)?;
    let o = load_observation(&ObservationPaths::in_dir(obs_dir, "observation"))?;
    let b: CostBreakdown = Evaluator::new(dims, cfg.cost)
        .objective(&pose, &o)
        .map_err(|e| AppError::DataOther(e.to_string()))?;
    println!("depth_term = {}", b.depth_term);
    println!("area_term = {}", b.area_term);
    println!("penalty_term = {}", b.penalty_term);
    println!("total = {}", b.total);
    Ok(())
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

/// Renders each pose on its own, in parallel chunks; returns a checksum so
/// the work cannot be optimized away.
fn render_batch(
    poses: &[HandPose],
    dims: &HandDimensions,
    cam: &handpose_core::CameraIntrinsics,
    workers: usize,
) -> u64 {
    let workers = workers.max(1).min(poses.len().max(1));
    let chunk = poses.len().div_ceil(workers);
    let mut sums = vec![0u64; poses.len().div_ceil(chunk.max(1)).max(1)];
    std::thread::scope(|scope| {
        for (pose_chunk, sum) in poses.chunks(chunk.max(1)).zip(sums.iter_mut()) {
            scope.spawn(move || {
                let mut acc = 0u64;
                for h in pose_chunk {
                    let d = render_depth(&forward_kinematics(h, dims), cam);
                    acc = acc.wrapping_add(d.data.iter().map(|&z| z as u64).sum());
                }
                *sum = acc;
            });
        }
    });
    sums.iter().fold(0u64, |a, &b| a.wrapping_add(b))
}

/// Times the render phase and the full objective phase for several worker
/// counts and checks that costs do not depend on the worker count.
pub fn cmd_bench(cfg: &RunConfig) -> Result<(), AppError> {
    let dims = load_dims(cfg)?;
    let cam = cfg.camera();
    let bounds = default_bounds();
    let mut rng = rng::seeded(cfg.seed);
    let reference = random_pose(&mut rng, &bounds);
    let o = synthesize_observation(&reference, &dims, &cam);
    let n = cfg.pso.n_particles.max(1);
    let poses: Vec<HandPose> = (0..n).map(|_| random_pose(&mut rng, &bounds)).collect();

    let mut counts = vec![1usize, 4];
    if !counts.contains(&cfg.workers) {
        counts.push(cfg.workers);
    }
    let mut reference_costs: Option<Vec<u64>> = None;
    let mut identical = true;
    println!(
        "bench: {} poses at {}x{}",
        poses.len(),
        cam.width,
        cam.height
    );
    for &w in &counts {
        let t0 = Instant::now();
        let checksum = render_batch(&poses, &dims, &cam, w);
        let render_ms = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let results = evaluate_batch(&poses, &o, &dims, &cfg.cost, w)?;
        let objective_ms = t1.elapsed().as_secs_f64() * 1e3;
        let bits: Vec<u64> = results.iter().map(|b| b.total.to_bits()).collect();
        match &reference_costs {
            None => reference_costs = Some(bits),
            Some(r) => identical &= r == &bits,
        }
        println!(
            "workers={w} render_ms={render_ms:.2} objective_ms={objective_ms:.2} total_ms={:.2} checksum={checksum}",
            render_ms + objective_ms
        );
    }
    println!("costs identical across worker counts: {identical}");
    if !identical {
        return Err(AppError::Internal(
            "costs varied with worker count".to_string(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// track
// ---------------------------------------------------------------------------

/// Finds `frame_<k>_depth.pgm` trios and checks the numbering has no gaps.
fn scan_frames(dir: &Path) -> Result<Vec<(usize, String)>, AppError> {
    let entries = fs::read_dir(dir).map_err(|source| {
        AppError::Data(IoError::Io {
            path: dir.to_path_buf(),
            source,
        })
    })?;
    let mut frames = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| {
            AppError::Data(IoError::Io {
                path: dir.to_path_buf(),
                source,
            })
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix("_depth.pgm") {
            if let Some(num) = stem.strip_prefix("frame_") {
                if let Ok(k) = num.parse::<usize>() {
                    frames.push((k, stem.to_string()));
                }
            }
        }
    }
    if frames.is_empty() {
        return Err(AppError::DataOther(format!(
            "{}: no frame_<k>_depth.pgm files found",
            dir.display()
        )));
    }
    frames.sort();
    let first = frames[0].0;
    for (offset, (k, _)) in frames.iter().enumerate() {
        let expected = first + offset;
        if *k != expected {
            return Err(AppError::DataOther(format!(
                "{}: missing frame {expected} (no frame_{expected:04}_depth.pgm)",
                dir.display()
            )));
        }
    }
    Ok(frames)
}

fn poses_csv_header() -> String {
    let mut names = vec![
        "x_c", "y_c", "z_c", "theta_x", "theta_y", "theta_z",
    ]
    .into_iter()
    .map(str::to_string)
    .collect::<Vec<_>>();
    for f in ["thumb", "index", "middle", "ring", "little"] {
        for j in ["mp_x", "mp_z", "pip", "dip"] {
            names.push(format!("{f}_{j}"));
        }
    }
    format!("frame,cost,{}\n", names.join(","))
}

/// Recognizes every frame in sequence, warm-starting each frame's swarm
/// around the previous frame's solution.
pub fn cmd_track(seq_dir: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<(), AppError> {
    let dims = load_dims(cfg)?;
    let frames = scan_frames(seq_dir)?;
    ensure_dir(out_dir)?;
    let mut csv = poses_csv_header();
    let mut previous: Option<HandPose> = None;
    for (k, stem) in &frames {
        let o = load_observation(&ObservationPaths::in_dir(seq_dir, stem))?;
        let rec = recognize_observation(&o, &dims, cfg, previous.as_ref())?;
        save_pose(&out_dir.join(format!("pose_{k:04}.txt")), &rec.pose)?;
        let vals: Vec<String> = rec
            .pose
            .to_vector()
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        csv.push_str(&format!("{k},{},{}\n", rec.cost, vals.join(",")));
        println!("track: frame {k} cost {}", rec.cost);
        previous = Some(rec.pose);
    }
    write_text(&out_dir.join("poses.csv"), &csv)?;
    cfg.save(&out_dir.join("config.txt"))?;
    Ok(())
}
