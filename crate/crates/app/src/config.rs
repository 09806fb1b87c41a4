//! Run configuration: every tunable of a run in one serializable value.
//!
//! The on-disk form is `key = value` text with `#` comments; unknown keys
//! are errors so typos fail loudly. Every run copies its effective config
//! into its output directory for provenance.

use std::path::{Path, PathBuf};

use handpose_core::{CostParams, NoiseSpec, PsoParams};

use crate::io::{parse_key_values, IoError};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub workers: usize,
    pub cost: CostParams,
    pub pso: PsoParams,
    pub noise: NoiseSpec,
    /// Optional hand-measurement overrides.
    pub dims_file: Option<PathBuf>,
    /// Warm-start half-width for tracking, wrist position (meters).
    pub track_radius_pos: f64,
    /// Warm-start half-width for tracking, all angles (degrees).
    pub track_radius_deg: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            width: 160,
            height: 120,
            seed: 0,
            workers: default_workers(),
            cost: CostParams::default(),
            pso: PsoParams::default(),
            noise: NoiseSpec::default(),
            dims_file: None,
            track_radius_pos: 0.05,
            track_radius_deg: 20.0,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunConfig {
    /// Applies `key = value` overrides from a config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), IoError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        for (key, value) in parse_key_values(path, &text)? {
            self.apply(&key, &value).map_err(|msg| IoError::Format {
                path: path.to_path_buf(),
                msg,
            })?;
        }
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value for {key}: {value:?}"))
        }
        match key {
            "width" => self.width = num(key, value)?,
            "height" => self.height = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "d_m" => self.cost.d_m = num(key, value)?,
            "d_max" => self.cost.d_max = num(key, value)?,
            "lambda" => self.cost.lambda = num(key, value)?,
            "lambda_k" => self.cost.lambda_k = num(key, value)?,
            "depth_scale" => self.cost.depth_scale = num(key, value)?,
            "clamp_at_dm" => self.cost.clamp_at_dm = num(key, value)?,
            "n_particles" => self.pso.n_particles = num(key, value)?,
            "max_generations" => self.pso.max_generations = num(key, value)?,
            "stop_threshold" => self.pso.stop_threshold = num(key, value)?,
            "c1" => self.pso.c1 = num(key, value)?,
            "c2" => self.pso.c2 = num(key, value)?,
            "mutation_period" => self.pso.mutation_period = num(key, value)?,
            "mutation_fraction" => self.pso.mutation_fraction = num(key, value)?,
            "per_dimension_r" => self.pso.per_dimension_r = num(key, value)?,
            "depth_sigma" => self.noise.depth_sigma = num(key, value)?,
            "dropout_prob" => self.noise.dropout_prob = num(key, value)?,
            "mask_flip_prob" => self.noise.mask_flip_prob = num(key, value)?,
            "dims_file" => self.dims_file = Some(PathBuf::from(value)),
            "track_radius_pos" => self.track_radius_pos = num(key, value)?,
            "track_radius_deg" => self.track_radius_deg = num(key, value)?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Full serialization; parsing this text reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("width", self.width.to_string());
        kv("height", self.height.to_string());
        kv("seed", self.seed.to_string());
        kv("workers", self.workers.to_string());
        kv("d_m", self.cost.d_m.to_string());
        kv("d_max", self.cost.d_max.to_string());
        kv("lambda", self.cost.lambda.to_string());
        kv("lambda_k", self.cost.lambda_k.to_string());
        kv("depth_scale", self.cost.depth_scale.to_string());
        kv("clamp_at_dm", self.cost.clamp_at_dm.to_string());
        kv("n_particles", self.pso.n_particles.to_string());
        kv("max_generations", self.pso.max_generations.to_string());
        kv("stop_threshold", self.pso.stop_threshold.to_string());
        kv("c1", self.pso.c1.to_string());
        kv("c2", self.pso.c2.to_string());
        kv("mutation_period", self.pso.mutation_period.to_string());
        kv("mutation_fraction", self.pso.mutation_fraction.to_string());
        kv("per_dimension_r", self.pso.per_dimension_r.to_string());
        kv("depth_sigma", self.noise.depth_sigma.to_string());
        kv("dropout_prob", self.noise.dropout_prob.to_string());
        kv("mask_flip_prob", self.noise.mask_flip_prob.to_string());
        if let Some(p) = &self.dims_file {
            kv("dims_file", p.display().to_string());
        }
        kv("track_radius_pos", self.track_radius_pos.to_string());
        kv("track_radius_deg", self.track_radius_deg.to_string());
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        std::fs::write(path, self.to_text()).map_err(|source| IoError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn camera(&self) -> handpose_core::CameraIntrinsics {
        handpose_core::CameraIntrinsics::for_resolution(self.width, self.height)
    }

    /// PSO parameters with the run seed folded in.
    pub fn pso_with_seed(&self) -> PsoParams {
        PsoParams {
            seed: self.seed,
            ..self.pso.clone()
        }
    }
}
