//! Bounded particle swarm with constriction weight and periodic worst-half
//! subdimensional mutation.
//!
//! The optimizer is generic over the search dimensionality; the hand
//! recognizer uses 26 dimensions with the 20 finger angles as the mutation
//! subspace, and the test functions use whatever they like. The control
//! loop is single-threaded; the per-generation batch of evaluations is
//! handed to a [`BatchObjective`], which may fan out over workers as long
//! as it returns the same costs it would sequentially.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::hand_model::{PoseBounds, FINGER_OFFSET, POSE_DIM};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoParams {
    pub n_particles: usize,
    pub max_generations: usize,
    pub stop_threshold: f64,
    pub c1: f64,
    pub c2: f64,
    /// Mutate every this many generations.
    pub mutation_period: usize,
    /// Fraction of the swarm (the worst-ranked part) that is reseeded.
    pub mutation_fraction: f64,
    /// Coordinates reseeded by mutation.
    pub mutation_dims: Vec<usize>,
    /// Draw r1, r2 per dimension instead of per particle.
    pub per_dimension_r: bool,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams {
            n_particles: 64,
            max_generations: 30,
            stop_threshold: 1.0,
            c1: 2.8,
            c2: 1.3,
            mutation_period: 3,
            mutation_fraction: 0.5,
            mutation_dims: (FINGER_OFFSET..POSE_DIM).collect(),
            per_dimension_r: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PsoError {
    /// c1 + c2 must exceed 4 for the constriction weight to be real.
    ConstrictionDomain,
    InvalidParams(&'static str),
}

impl fmt::Display for PsoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsoError::ConstrictionDomain => {
                write!(f, "constriction weight requires c1 + c2 > 4")
            }
            PsoError::InvalidParams(msg) => write!(f, "invalid PSO parameters: {msg}"),
        }
    }
}

impl PsoParams {
    pub fn validate(&self, dim: usize) -> Result<(), PsoError> {
        if self.c1 + self.c2 <= 4.0 {
            return Err(PsoError::ConstrictionDomain);
        }
        if self.n_particles < 2 {
            return Err(PsoError::InvalidParams("need at least 2 particles"));
        }
        if !(0.0..=1.0).contains(&self.mutation_fraction) {
            return Err(PsoError::InvalidParams("mutation_fraction outside [0, 1]"));
        }
        if self.max_generations == 0 {
            return Err(PsoError::InvalidParams("max_generations must be positive"));
        }
        if self.mutation_period == 0 {
            return Err(PsoError::InvalidParams("mutation_period must be positive"));
        }
        if self.mutation_dims.iter().any(|&d| d >= dim) {
            return Err(PsoError::InvalidParams("mutation dimension out of range"));
        }
        Ok(())
    }
}

/// w = 2 / |2 - psi - sqrt(psi^2 - 4 psi)| with psi = c1 + c2.
pub fn constriction_weight(c1: f64, c2: f64) -> Result<f64, PsoError> {
    let psi = c1 + c2;
    if psi <= 4.0 {
        return Err(PsoError::ConstrictionDomain);
    }
    Ok(2.0 / (2.0 - psi - libm::sqrt(psi * psi - 4.0 * psi)).abs())
}

/// Box bounds of the search space, any dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        SearchBounds { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }
}

impl From<&PoseBounds> for SearchBounds {
    fn from(b: &PoseBounds) -> Self {
        SearchBounds {
            lower: b.lower.to_vec(),
            upper: b.upper.to_vec(),
        }
    }
}

/// Evaluates a whole generation of candidate positions.
pub trait BatchObjective {
    fn evaluate(&mut self, positions: &[Vec<f64>], costs: &mut [f64]);
}

/// Any pointwise function is a (sequential) batch objective.
impl<F: FnMut(&[f64]) -> f64> BatchObjective for F {
    fn evaluate(&mut self, positions: &[Vec<f64>], costs: &mut [f64]) {
        for (c, p) in costs.iter_mut().zip(positions) {
            *c = self(p);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_cost: f64,
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best: Vec<f64>,
    pub global_best_cost: f64,
    /// Completed evaluation rounds (1 after initialization).
    pub generation: usize,
    pub bounds: SearchBounds,
    params: PsoParams,
    weight: f64,
    rng: Rng,
    batch: Vec<Vec<f64>>,
    costs: Vec<f64>,
}

/// Warm-start region: the swarm is seeded inside center +- radius clipped
/// to the bounds.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
}

/// Seeds positions uniformly (or inside the warm-start region) with zero
/// initial velocities. Personal bests are set by the first evaluation.
///
/// With a warm start, particle 0 is placed exactly on the (clamped) center,
/// so a run seeded on a global minimum can never end above it.
pub fn init_swarm(
    bounds: &SearchBounds,
    params: &PsoParams,
    warm: Option<&WarmStart>,
) -> Result<Swarm, PsoError> {
    let dim = bounds.dim();
    params.validate(dim)?;
    let weight = constriction_weight(params.c1, params.c2)?;
    let mut rng = rng::seeded(params.seed);
    let mut particles = Vec::with_capacity(params.n_particles);
    for _ in 0..params.n_particles {
        let mut position = vec![0.0; dim];
        for d in 0..dim {
            let (mut lo, mut hi) = (bounds.lower[d], bounds.upper[d]);
            if let Some(w) = warm {
                lo = (w.center[d] - w.radius[d]).clamp(lo, hi);
                hi = (w.center[d] + w.radius[d]).clamp(lo, hi);
            }
            position[d] = rng::uniform(&mut rng, lo, hi);
        }
        particles.push(Particle {
            best_position: position.clone(),
            position,
            velocity: vec![0.0; dim],
            best_cost: f64::INFINITY,
        });
    }
    if let Some(w) = warm {
        let p0 = &mut particles[0];
        for d in 0..dim {
            p0.position[d] = w.center[d].clamp(bounds.lower[d], bounds.upper[d]);
        }
        p0.best_position.copy_from_slice(&p0.position);
    }
    Ok(Swarm {
        particles,
        global_best: vec![0.0; dim],
        global_best_cost: f64::INFINITY,
        generation: 0,
        bounds: bounds.clone(),
        params: params.clone(),
        weight,
        rng,
        batch: Vec::new(),
        costs: Vec::new(),
    })
}

impl Swarm {
    pub fn params(&self) -> &PsoParams {
        &self.params
    }

    pub fn constriction(&self) -> f64 {
        self.weight
    }

    /// Scores every particle's current position and refreshes personal and
    /// global bests. Counts as one generation.
    pub fn evaluate(&mut self, objective: &mut dyn BatchObjective) {
        self.batch.clear();
        self.batch
            .extend(self.particles.iter().map(|p| p.position.clone()));
        self.costs.resize(self.particles.len(), 0.0);
        objective.evaluate(&self.batch, &mut self.costs);
        for (p, &cost) in self.particles.iter_mut().zip(&self.costs) {
            if cost < p.best_cost {
                p.best_cost = cost;
                p.best_position.copy_from_slice(&p.position);
            }
        }
        for p in &self.particles {
            if p.best_cost < self.global_best_cost {
                self.global_best_cost = p.best_cost;
                self.global_best = p.best_position.clone();
            }
        }
        self.generation += 1;
    }

    /// One velocity/position update followed by re-evaluation. Positions
    /// are clamped to the bounds; a clamped coordinate has its velocity
    /// component zeroed (absorbing walls).
    pub fn step(&mut self, objective: &mut dyn BatchObjective) {
        let dim = self.bounds.dim();
        for p in self.particles.iter_mut() {
            let (mut r1, mut r2) = (0.0, 0.0);
            if !self.params.per_dimension_r {
                r1 = rng::unit(&mut self.rng);
                r2 = rng::unit(&mut self.rng);
            }
            for d in 0..dim {
                if self.params.per_dimension_r {
                    r1 = rng::unit(&mut self.rng);
                    r2 = rng::unit(&mut self.rng);
                }
                let v = self.weight
                    * (p.velocity[d]
                        + self.params.c1 * r1 * (p.best_position[d] - p.position[d])
                        + self.params.c2 * r2 * (self.global_best[d] - p.position[d]));
                let mut x = p.position[d] + v;
                let (lo, hi) = (self.bounds.lower[d], self.bounds.upper[d]);
                if x < lo {
                    x = lo;
                    p.velocity[d] = 0.0;
                } else if x > hi {
                    x = hi;
                    p.velocity[d] = 0.0;
                } else {
                    p.velocity[d] = v;
                }
                p.position[d] = x;
            }
        }
        self.evaluate(objective);
    }

    /// Reseeds the mutation dimensions of the worst-ranked fraction of the
    /// swarm uniformly within bounds, zeroing those velocity components.
    /// Personal bests are kept, so the global best stays monotone.
    pub fn mutate(&mut self) {
        let n = self.particles.len();
        let k = (n as f64 * self.params.mutation_fraction) as usize;
        if k == 0 || self.params.mutation_dims.is_empty() {
            return;
        }
        let mut order: Vec<usize> = (0..n).collect();
        // Worst first; ties broken by index for determinism.
        order.sort_by(|&a, &b| {
            self.particles[b]
                .best_cost
                .partial_cmp(&self.particles[a].best_cost)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(k) {
            let p = &mut self.particles[i];
            for &d in &self.params.mutation_dims {
                p.position[d] =
                    rng::uniform(&mut self.rng, self.bounds.lower[d], self.bounds.upper[d]);
                p.velocity[d] = 0.0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    /// Global best cost after each generation.
    pub trace: Vec<f64>,
}

/// Full optimization loop: evaluate, then step (with mutation on schedule)
/// until the stop threshold is crossed or the generation budget is spent.
pub fn run(
    objective: &mut dyn BatchObjective,
    bounds: &SearchBounds,
    params: &PsoParams,
    warm: Option<&WarmStart>,
) -> Result<RunResult, PsoError> {
    let mut swarm = init_swarm(bounds, params, warm)?;
    let mut trace = Vec::with_capacity(params.max_generations);
    swarm.evaluate(objective);
    trace.push(swarm.global_best_cost);
    while swarm.generation < params.max_generations
        && swarm.global_best_cost >= params.stop_threshold
    {
        if swarm.generation % params.mutation_period == 0 {
            swarm.mutate();
        }
        swarm.step(objective);
        trace.push(swarm.global_best_cost);
    }
    Ok(RunResult {
        best_position: swarm.global_best.clone(),
        best_cost: swarm.global_best_cost,
        trace,
    })
}
