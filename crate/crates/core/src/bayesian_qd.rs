//! Surrogate-assisted Quality-Diversity loop.
//!
//! Outer iterations alternate between (1) fitting one Gaussian process per
//! modeled function — objective, each feature, each constraint — on the
//! exactly evaluated design of experiments, (2) illuminating an auxiliary
//! archive with MAP-Elites where the objective is the Lower Confidence
//! Bound, features are posterior means, and each constraint is the
//! Expected Violation thresholded at `t_i`, and (3) exactly evaluating a
//! small batch of elites chosen from the auxiliary archive by a Sobol'
//! walk over the feature space. The exact archive only ever receives
//! exactly evaluated, exactly feasible entries, so surrogate error can
//! waste budget but never corrupt the result.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::{Archive, FeatureGrid};
use crate::error::Error;
use crate::gp::GpModel;
use crate::kernels::KernelMode;
use crate::map_elites::{run_map_elites, Evaluation, HistoryRecord, MapElitesConfig, QdProblem};
use crate::sobol::SobolSequence;
use crate::space::{lhs_sample, MixedPoint};

/// Default Expected-Violation threshold per constraint.
pub const DEFAULT_EV_THRESHOLD: f64 = 1e-4;

/// Bayesian QD settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BqdConfig {
    pub kernel_mode: KernelMode,
    /// Exploration factor `k` of the Lower Confidence Bound.
    pub exploration_k: f64,
    /// Expected-Violation thresholds, one per constraint; empty means the
    /// default threshold for every constraint.
    pub ev_thresholds: Vec<f64>,
    /// Elites exactly evaluated per outer iteration.
    pub batch_p: usize,
    /// Exact-evaluation budget, initial design included.
    pub max_evaluations: usize,
    /// Stop after this many consecutive outer iterations without an
    /// accepted exact-archive insertion.
    pub stagnation_iters: usize,
    /// Initial design size; `0` selects `10 * (d_c + d_z)`.
    pub initial_doe_size: usize,
    /// Auxiliary MAP-Elites settings (its seed is re-derived per
    /// iteration).
    pub aux_solver: MapElitesConfig,
    pub seed: u64,
}

impl Default for BqdConfig {
    fn default() -> Self {
        Self {
            kernel_mode: KernelMode::Gower,
            exploration_k: 2.0,
            ev_thresholds: vec![],
            batch_p: 10,
            max_evaluations: 200,
            stagnation_iters: 10,
            initial_doe_size: 0,
            aux_solver: MapElitesConfig::default(),
            seed: 0,
        }
    }
}

/// Lower Confidence Bound: posterior mean minus `k` standard deviations.
pub fn lcb(gp_objective: &GpModel, p: &MixedPoint, k: f64) -> f64 {
    let (mean, sd) = gp_objective.predict(p);
    mean - k * sd
}

/// Expected Violation from posterior moments:
/// `mean * Phi(mean/sd) + sd * phi(mean/sd)`, degrading to `max(mean, 0)`
/// as the posterior collapses. Always nonnegative.
pub fn ev_from_moments(mean: f64, sd: f64) -> f64 {
    if sd < 1e-12 {
        return mean.max(0.0);
    }
    let z = mean / sd;
    (mean * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

/// Expected Violation of a constraint model at `p`.
pub fn expected_violation(gp_constraint: &GpModel, p: &MixedPoint) -> f64 {
    let (mean, sd) = gp_constraint.predict(p);
    ev_from_moments(mean, sd)
}

fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.3989422804014327;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Assembles the auxiliary infill problem over the given models: LCB
/// objective, posterior-mean features, and `EV_i - t_i` constraints so the
/// archive's dominance rule applies unchanged.
pub fn build_auxiliary_problem(
    objective_gp: Arc<GpModel>,
    feature_gps: Vec<Arc<GpModel>>,
    constraint_gps: Vec<Arc<GpModel>>,
    grid: FeatureGrid,
    exploration_k: f64,
    ev_thresholds: Vec<f64>,
) -> Result<QdProblem, Error> {
    if feature_gps.len() != grid.n_features() {
        return Err(Error::InvalidConfig(format!(
            "{} feature models for a {}-feature grid",
            feature_gps.len(),
            grid.n_features()
        )));
    }
    if ev_thresholds.len() != constraint_gps.len() {
        return Err(Error::InvalidConfig(format!(
            "{} thresholds for {} constraint models",
            ev_thresholds.len(),
            constraint_gps.len()
        )));
    }
    let m = objective_gp.train_len();
    if feature_gps.iter().chain(&constraint_gps).any(|g| g.train_len() != m) {
        return Err(Error::InvalidConfig("models trained on different input sets".into()));
    }

    let space = objective_gp.space().clone();
    let n = feature_gps.len();
    let n_g = constraint_gps.len();
    Ok(QdProblem::new(
        space,
        grid,
        n,
        n_g,
        move |p| lcb(&objective_gp, p, exploration_k),
        move |p| feature_gps.iter().map(|g| g.predict_mean(p)).collect(),
        move |p| {
            constraint_gps
                .iter()
                .zip(&ev_thresholds)
                .map(|(g, t)| expected_violation(g, p) - t)
                .collect()
        },
    ))
}

/// Selects up to `p` distinct elites from the auxiliary archive with a
/// Sobol' walk over the normalized feature box: each Sobol' point maps to
/// the nearest occupied bin center, duplicates are skipped, and the walk
/// continues until `min(p, occupied)` distinct elites are found. A nonzero
/// `seed` digitally shifts the Sobol' sequence.
pub fn select_elites_sobol(
    aux_archive: &Archive,
    p: usize,
    grid: &FeatureGrid,
    seed: u64,
) -> Vec<MixedPoint> {
    let occupied: Vec<_> = aux_archive.entries().collect();
    if occupied.is_empty() || p == 0 {
        return vec![];
    }
    let (lo, hi) = grid.bounds();
    let span: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| (h - l).max(f64::MIN_POSITIVE)).collect();
    let centers: Vec<Vec<f64>> = occupied
        .iter()
        .map(|e| {
            grid.bin_center(&e.bin)
                .iter()
                .zip(&lo)
                .zip(&span)
                .map(|((c, l), s)| (c - l) / s)
                .collect()
        })
        .collect();

    let target = p.min(occupied.len());
    let mut seq = match SobolSequence::new(grid.n_features(), seed) {
        Ok(seq) => seq,
        Err(_) => return vec![],
    };
    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    let budget = 128 * target;
    for _ in 0..budget {
        if chosen.len() == target {
            break;
        }
        let point = seq.next_point();
        let nearest = centers
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let d2: f64 = c.iter().zip(&point).map(|(a, b)| (a - b) * (a - b)).sum();
                (i, d2)
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .unwrap();
        if !chosen.contains(&nearest) {
            chosen.push(nearest);
        }
    }
    // A bin whose Voronoi cell the walk has not hit yet: fill
    // deterministically so the contract on the count always holds.
    for i in 0..occupied.len() {
        if chosen.len() == target {
            break;
        }
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    chosen.into_iter().map(|i| occupied[i].point.clone()).collect()
}

/// Result of a Bayesian QD run.
#[derive(Debug)]
pub struct BqdRun {
    pub archive: Archive,
    /// One record after the initial design and one per outer iteration.
    pub history: Vec<HistoryRecord>,
    pub evaluations: usize,
}

fn mix_seed(seed: u64, salt: u64, round: u64) -> u64 {
    // splitmix64 finalizer over the combined state.
    let mut z = seed ^ salt.wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(round + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Runs the surrogate-assisted QD loop on exact evaluators.
///
/// Stops when the exact budget is exhausted or when `stagnation_iters`
/// consecutive outer iterations leave the exact archive unchanged. A GP
/// training failure downgrades that iteration to random LHS candidates.
pub fn run_bqd(problem: &QdProblem, cfg: &BqdConfig) -> Result<BqdRun, Error> {
    let space = problem.space();
    let doe_size = if cfg.initial_doe_size == 0 {
        10 * (space.n_continuous() + space.n_level_vars())
    } else {
        cfg.initial_doe_size
    };
    if cfg.batch_p == 0 {
        return Err(Error::InvalidConfig("batch_p must be >= 1".into()));
    }
    if cfg.max_evaluations < doe_size {
        return Err(Error::InvalidConfig(format!(
            "max_evaluations {} below initial design size {doe_size}",
            cfg.max_evaluations
        )));
    }
    if cfg.exploration_k < 0.0 {
        return Err(Error::InvalidConfig("exploration_k must be >= 0".into()));
    }
    let n_g = problem.n_constraints();
    let thresholds = if cfg.ev_thresholds.is_empty() {
        vec![DEFAULT_EV_THRESHOLD; n_g]
    } else if cfg.ev_thresholds.len() == n_g {
        cfg.ev_thresholds.clone()
    } else {
        return Err(Error::InvalidConfig(format!(
            "{} EV thresholds for {n_g} constraints",
            cfg.ev_thresholds.len()
        )));
    };
    if thresholds.iter().any(|t| *t < 0.0) {
        return Err(Error::InvalidConfig("EV thresholds must be >= 0".into()));
    }

    let mut inputs = lhs_sample(space, doe_size, cfg.seed)?;
    let mut outcomes: Vec<Evaluation> = inputs.par_iter().map(|p| problem.evaluate(p)).collect();

    let mut archive = Archive::new(problem.grid().clone());
    for (p, e) in inputs.iter().zip(&outcomes) {
        archive.try_insert(p.clone(), e.objective, e.features.clone(), e.constraints.clone());
    }
    let mut evaluations = inputs.len();
    let mut history = vec![HistoryRecord {
        evaluations,
        qd_score: archive.qd_score(),
        niche_count: archive.niche_count(),
    }];

    let mut fallback_rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, 0xFA11BACC, 0));
    let mut stagnation = 0usize;
    let mut iter = 0u64;

    while evaluations < cfg.max_evaluations && stagnation < cfg.stagnation_iters {
        iter += 1;
        let batch = cfg.batch_p.min(cfg.max_evaluations - evaluations);

        let candidates = match fit_models(problem, cfg, &inputs, &outcomes) {
            Ok((objective_gp, feature_gps, constraint_gps)) => {
                let aux_problem = build_auxiliary_problem(
                    objective_gp,
                    feature_gps,
                    constraint_gps,
                    problem.grid().clone(),
                    cfg.exploration_k,
                    thresholds.clone(),
                )?;
                let aux_cfg = MapElitesConfig {
                    seed: mix_seed(cfg.seed, 0xAA00AA00, iter),
                    ..cfg.aux_solver.clone()
                };
                let aux_run = run_map_elites(&aux_problem, &aux_cfg, None)?;
                let selected = select_elites_sobol(
                    &aux_run.archive,
                    batch,
                    problem.grid(),
                    mix_seed(cfg.seed, 0x50B01AA0, iter),
                );
                if selected.is_empty() {
                    log::warn!(
                        "auxiliary archive empty at iteration {iter}; sampling fresh LHS candidates"
                    );
                    lhs_sample(space, batch, fallback_rng.gen())?
                } else {
                    selected
                }
            }
            Err(err) => {
                log::warn!(
                    "gp training failed at iteration {iter} ({err}); sampling fresh LHS candidates"
                );
                lhs_sample(space, batch, fallback_rng.gen())?
            }
        };

        let new_outcomes: Vec<Evaluation> =
            candidates.par_iter().map(|p| problem.evaluate(p)).collect();
        let mut improved = false;
        for (p, e) in candidates.iter().zip(&new_outcomes) {
            let outcome = archive.try_insert(
                p.clone(),
                e.objective,
                e.features.clone(),
                e.constraints.clone(),
            );
            improved |= outcome.accepted();
        }
        evaluations += candidates.len();
        inputs.extend(candidates);
        outcomes.extend(new_outcomes);

        stagnation = if improved { 0 } else { stagnation + 1 };
        history.push(HistoryRecord {
            evaluations,
            qd_score: archive.qd_score(),
            niche_count: archive.niche_count(),
        });
    }

    Ok(BqdRun { archive, history, evaluations })
}

type ModelSet = (Arc<GpModel>, Vec<Arc<GpModel>>, Vec<Arc<GpModel>>);

/// Fits the 1 + n + n_g models in parallel on the current design.
fn fit_models(
    problem: &QdProblem,
    cfg: &BqdConfig,
    inputs: &[MixedPoint],
    outcomes: &[Evaluation],
) -> Result<ModelSet, Error> {
    let n = problem.n_features();
    let n_g = problem.n_constraints();
    let mut targets: Vec<Vec<f64>> = Vec::with_capacity(1 + n + n_g);
    targets.push(outcomes.iter().map(|e| e.objective).collect());
    for j in 0..n {
        targets.push(outcomes.iter().map(|e| e.features[j]).collect());
    }
    for i in 0..n_g {
        targets.push(outcomes.iter().map(|e| e.constraints[i]).collect());
    }

    let mut models: Vec<Arc<GpModel>> = targets
        .par_iter()
        .map(|y| GpModel::fit(problem.space(), inputs, y, cfg.kernel_mode, cfg.seed).map(Arc::new))
        .collect::<Result<_, _>>()?;

    let constraint_gps = models.split_off(1 + n);
    let feature_gps = models.split_off(1);
    let objective_gp = models.pop().expect("objective model");
    Ok((objective_gp, feature_gps, constraint_gps))
}
