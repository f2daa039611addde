//! Constrained mixed-variable MAP-Elites.
//!
//! Serves both as a standalone QD baseline on exact evaluators and as the
//! auxiliary solver for the surrogate infill problem. Each generation
//! selects parents uniformly from the archive genomes, mutates every
//! coordinate independently with a fixed probability (Gaussian steps in
//! normalized space for continuous coordinates, uniform resampling among
//! the other levels for discrete/categorical ones), evaluates the children
//! and offers them to the archive under the constraint-dominance rule.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::{Archive, FeatureGrid};
use crate::error::Error;
use crate::space::{lhs_sample, MixedPoint, MixedSpace};

/// MAP-Elites settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapElitesConfig {
    /// Initial population size.
    pub population_size: usize,
    /// Children evaluated per generation.
    pub batch_size: usize,
    pub generations: usize,
    /// Per-coordinate mutation probability.
    pub mutation_prob: f64,
    /// Gaussian mutation standard deviation in normalized `[0,1]` space.
    pub mutation_sd: f64,
    pub seed: u64,
}

impl Default for MapElitesConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            batch_size: 10,
            generations: 4000,
            mutation_prob: 0.4,
            mutation_sd: 0.3,
            seed: 0,
        }
    }
}

impl MapElitesConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.population_size == 0 {
            return Err(Error::InvalidConfig("population_size must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.mutation_prob > 0.0 && self.mutation_prob <= 1.0) {
            return Err(Error::InvalidConfig("mutation_prob must be in (0, 1]".into()));
        }
        if !(self.mutation_sd > 0.0) {
            return Err(Error::InvalidConfig("mutation_sd must be > 0".into()));
        }
        Ok(())
    }
}

type Objective = dyn Fn(&MixedPoint) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&MixedPoint) -> Vec<f64> + Send + Sync;

/// A QD problem: objective, feature and constraint evaluators over a mixed
/// space, with the feature grid defining the archive.
pub struct QdProblem {
    space: MixedSpace,
    grid: FeatureGrid,
    objective: Box<Objective>,
    features: Box<VectorFn>,
    constraints: Box<VectorFn>,
    n_features: usize,
    n_constraints: usize,
}

impl QdProblem {
    pub fn new(
        space: MixedSpace,
        grid: FeatureGrid,
        n_features: usize,
        n_constraints: usize,
        objective: impl Fn(&MixedPoint) -> f64 + Send + Sync + 'static,
        features: impl Fn(&MixedPoint) -> Vec<f64> + Send + Sync + 'static,
        constraints: impl Fn(&MixedPoint) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            space,
            grid,
            objective: Box::new(objective),
            features: Box::new(features),
            constraints: Box::new(constraints),
            n_features,
            n_constraints,
        }
    }

    pub fn space(&self) -> &MixedSpace {
        &self.space
    }

    pub fn grid(&self) -> &FeatureGrid {
        &self.grid
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_constraints(&self) -> usize {
        self.n_constraints
    }

    pub fn objective(&self, p: &MixedPoint) -> f64 {
        (self.objective)(p)
    }

    pub fn features(&self, p: &MixedPoint) -> Vec<f64> {
        (self.features)(p)
    }

    pub fn constraints(&self, p: &MixedPoint) -> Vec<f64> {
        (self.constraints)(p)
    }

    /// Objective, features and constraints in one call.
    pub fn evaluate(&self, p: &MixedPoint) -> Evaluation {
        Evaluation {
            objective: (self.objective)(p),
            features: (self.features)(p),
            constraints: (self.constraints)(p),
        }
    }
}

/// One exact or surrogate evaluation of a point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    pub features: Vec<f64>,
    pub constraints: Vec<f64>,
}

/// Mutates each coordinate independently with `cfg.mutation_prob`.
///
/// Continuous coordinates move by a Gaussian step of `cfg.mutation_sd` in
/// normalized space and are clamped to the bounds; a selected discrete or
/// categorical coordinate resamples uniformly among its *other* levels, so
/// a single-level variable never changes.
pub fn mutate<R: Rng>(
    p: &MixedPoint,
    space: &MixedSpace,
    cfg: &MapElitesConfig,
    rng: &mut R,
) -> MixedPoint {
    let mut normalized = space.normalize(p);
    for u in normalized.continuous.iter_mut() {
        if rng.gen::<f64>() < cfg.mutation_prob {
            let step: f64 = {
                // Box-Muller keeps the dependency surface small and the
                // draw count per coordinate fixed.
                let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            };
            *u = (*u + cfg.mutation_sd * step).clamp(0.0, 1.0);
        }
    }
    let mut point = space.denormalize(&normalized);
    for (i, z) in point.discrete.iter_mut().enumerate() {
        let levels = space.discrete_levels()[i].len();
        if levels > 1 && rng.gen::<f64>() < cfg.mutation_prob {
            let pick = rng.gen_range(0..levels - 1);
            *z = if pick >= *z { pick + 1 } else { pick };
        }
    }
    for (i, z) in point.categorical.iter_mut().enumerate() {
        let levels = space.categorical_level_counts()[i];
        if levels > 1 && rng.gen::<f64>() < cfg.mutation_prob {
            let pick = rng.gen_range(0..levels - 1);
            *z = if pick >= *z { pick + 1 } else { pick };
        }
    }
    point
}

/// Convergence metrics after a batch of evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// Cumulative evaluator calls.
    pub evaluations: usize,
    pub qd_score: f64,
    pub niche_count: usize,
}

/// Result of a MAP-Elites run.
#[derive(Debug)]
pub struct MapElitesRun {
    pub archive: Archive,
    pub evaluations: usize,
    /// One record after the initial population and one per generation.
    pub history: Vec<HistoryRecord>,
}

/// Runs MAP-Elites on `problem`.
///
/// The initial population is `initial` when given, otherwise an LHS of
/// `population_size` points drawn from `cfg.seed`. When the archive is
/// still empty at selection time, parents come from a fresh LHS batch.
/// Total evaluations equal `initial size + generations * batch_size`.
pub fn run_map_elites(
    problem: &QdProblem,
    cfg: &MapElitesConfig,
    initial: Option<Vec<MixedPoint>>,
) -> Result<MapElitesRun, Error> {
    cfg.validate()?;
    let space = problem.space();
    let initial = match initial {
        Some(points) => {
            if let Some(bad) = points.iter().find(|p| !space.contains(p)) {
                return Err(Error::InvalidConfig(format!(
                    "initial point outside the space: {bad:?}"
                )));
            }
            points
        }
        None => lhs_sample(space, cfg.population_size, cfg.seed)?,
    };

    // The evolution stream is decoupled from the LHS stream so that runs
    // sharing a seed also share their initial samples exactly.
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1));

    let mut archive = Archive::new(problem.grid().clone());
    let mut evaluations = 0usize;
    let mut history = Vec::with_capacity(cfg.generations + 1);

    let evaluated: Vec<Evaluation> = initial.par_iter().map(|p| problem.evaluate(p)).collect();
    for (p, e) in initial.iter().zip(evaluated) {
        archive.try_insert(p.clone(), e.objective, e.features, e.constraints);
        evaluations += 1;
    }
    history.push(HistoryRecord {
        evaluations,
        qd_score: archive.qd_score(),
        niche_count: archive.niche_count(),
    });

    for _ in 0..cfg.generations {
        let children: Vec<MixedPoint> = if archive.is_empty() {
            lhs_sample(space, cfg.batch_size, rng.gen())?
        } else {
            let genomes: Vec<&MixedPoint> = archive.entries().map(|e| &e.point).collect();
            (0..cfg.batch_size)
                .map(|_| {
                    let parent = genomes[rng.gen_range(0..genomes.len())];
                    mutate(parent, space, cfg, &mut rng)
                })
                .collect()
        };
        let evaluated: Vec<Evaluation> =
            children.par_iter().map(|p| problem.evaluate(p)).collect();
        for (p, e) in children.into_iter().zip(evaluated) {
            archive.try_insert(p, e.objective, e.features, e.constraints);
            evaluations += 1;
        }
        history.push(HistoryRecord {
            evaluations,
            qd_score: archive.qd_score(),
            niche_count: archive.niche_count(),
        });
    }

    Ok(MapElitesRun { archive, evaluations, history })
}
