//! Mixed search space: continuous bounds, discrete level sets, categorical
//! level counts, plus the sampling primitives used by every solver.
//!
//! Discrete and categorical variables are both represented as level
//! *indices*; a discrete variable additionally carries its ordered real
//! level values. Solvers treat the two alike, so most code addresses them
//! through a unified "level variable" index: discrete variables first, then
//! categorical ones.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A mixed continuous / discrete / categorical search domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSpace {
    continuous_bounds: Vec<(f64, f64)>,
    discrete_levels: Vec<Vec<f64>>,
    categorical_levels: Vec<usize>,
}

impl MixedSpace {
    /// Builds a space, validating bounds and level sets.
    pub fn new(
        continuous_bounds: Vec<(f64, f64)>,
        discrete_levels: Vec<Vec<f64>>,
        categorical_levels: Vec<usize>,
    ) -> Result<Self, Error> {
        for (i, (lo, hi)) in continuous_bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSpace(format!(
                    "continuous bound {i} must satisfy lower < upper, got ({lo}, {hi})"
                )));
            }
        }
        for (i, levels) in discrete_levels.iter().enumerate() {
            if levels.is_empty() {
                return Err(Error::InvalidSpace(format!("discrete variable {i} has no levels")));
            }
            if levels.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidSpace(format!(
                    "discrete variable {i} levels must be strictly increasing"
                )));
            }
        }
        for (i, &count) in categorical_levels.iter().enumerate() {
            if count == 0 {
                return Err(Error::InvalidSpace(format!("categorical variable {i} has no levels")));
            }
        }
        Ok(Self { continuous_bounds, discrete_levels, categorical_levels })
    }

    /// Convenience constructor for a purely continuous space.
    pub fn continuous(bounds: Vec<(f64, f64)>) -> Result<Self, Error> {
        Self::new(bounds, vec![], vec![])
    }

    pub fn n_continuous(&self) -> usize {
        self.continuous_bounds.len()
    }

    pub fn n_discrete(&self) -> usize {
        self.discrete_levels.len()
    }

    pub fn n_categorical(&self) -> usize {
        self.categorical_levels.len()
    }

    /// Number of level-indexed variables (discrete + categorical).
    pub fn n_level_vars(&self) -> usize {
        self.n_discrete() + self.n_categorical()
    }

    pub fn continuous_bounds(&self) -> &[(f64, f64)] {
        &self.continuous_bounds
    }

    pub fn discrete_levels(&self) -> &[Vec<f64>] {
        &self.discrete_levels
    }

    pub fn categorical_level_counts(&self) -> &[usize] {
        &self.categorical_levels
    }

    /// Level count of unified level variable `z` (discrete first, then
    /// categorical).
    pub fn level_count(&self, z: usize) -> usize {
        if z < self.discrete_levels.len() {
            self.discrete_levels[z].len()
        } else {
            self.categorical_levels[z - self.discrete_levels.len()]
        }
    }

    /// Whether `p` satisfies this space's bounds and level ranges.
    pub fn contains(&self, p: &MixedPoint) -> bool {
        p.continuous.len() == self.n_continuous()
            && p.discrete.len() == self.n_discrete()
            && p.categorical.len() == self.n_categorical()
            && p.continuous
                .iter()
                .zip(&self.continuous_bounds)
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
            && p.discrete.iter().zip(&self.discrete_levels).all(|(z, lv)| *z < lv.len())
            && p.categorical.iter().zip(&self.categorical_levels).all(|(z, n)| z < n)
    }

    /// Maps continuous coordinates affinely onto `[0,1]`; level indices are
    /// unchanged.
    pub fn normalize(&self, p: &MixedPoint) -> MixedPoint {
        let continuous = p
            .continuous
            .iter()
            .zip(&self.continuous_bounds)
            .map(|(x, (lo, hi))| (x - lo) / (hi - lo))
            .collect();
        MixedPoint { continuous, discrete: p.discrete.clone(), categorical: p.categorical.clone() }
    }

    /// Inverse of [`normalize`](Self::normalize).
    pub fn denormalize(&self, p: &MixedPoint) -> MixedPoint {
        let continuous = p
            .continuous
            .iter()
            .zip(&self.continuous_bounds)
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect();
        MixedPoint { continuous, discrete: p.discrete.clone(), categorical: p.categorical.clone() }
    }
}

/// One candidate solution: continuous coordinates plus discrete and
/// categorical level indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPoint {
    pub continuous: Vec<f64>,
    pub discrete: Vec<usize>,
    pub categorical: Vec<usize>,
}

impl MixedPoint {
    pub fn new(continuous: Vec<f64>, discrete: Vec<usize>, categorical: Vec<usize>) -> Self {
        Self { continuous, discrete, categorical }
    }

    /// Level index of unified level variable `z` (discrete first).
    pub fn level(&self, z: usize) -> usize {
        if z < self.discrete.len() {
            self.discrete[z]
        } else {
            self.categorical[z - self.discrete.len()]
        }
    }
}

/// Latin Hypercube sample of size `m`.
///
/// Continuous coordinates are stratified: per dimension, each of the `m`
/// equal-width strata receives exactly one point, at a uniform position
/// inside its stratum, and strata are assigned to points by a random
/// permutation. Discrete and categorical indices are drawn uniformly and
/// independently. Deterministic for a fixed `seed`.
pub fn lhs_sample(space: &MixedSpace, m: usize, seed: u64) -> Result<Vec<MixedPoint>, Error> {
    if m == 0 {
        return Err(Error::InvalidSpace("lhs_sample requires m >= 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let d_c = space.n_continuous();

    let mut continuous = vec![vec![0.0; d_c]; m];
    for (dim, (lo, hi)) in space.continuous_bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..m).collect();
        // Fisher-Yates
        for i in (1..m).rev() {
            let j = rng.gen_range(0..=i);
            strata.swap(i, j);
        }
        let width = (hi - lo) / m as f64;
        for (point, &stratum) in continuous.iter_mut().zip(&strata) {
            let u: f64 = rng.gen();
            point[dim] = (lo + (stratum as f64 + u) * width).min(*hi);
        }
    }

    let points = continuous
        .into_iter()
        .map(|cont| {
            let discrete =
                space.discrete_levels.iter().map(|lv| rng.gen_range(0..lv.len())).collect();
            let categorical =
                space.categorical_levels.iter().map(|&n| rng.gen_range(0..n)).collect();
            MixedPoint::new(cont, discrete, categorical)
        })
        .collect();
    Ok(points)
}
