//! Feature-grid niche archive with constraint-dominated insertion and the
//! QD metrics computed on it.
//!
//! The feature space is discretized by per-feature edge vectors; each bin
//! (niche) holds at most one entry, the best feasible solution whose
//! feature values fall in that bin. Bins are half-open with the last bin
//! right-closed; feature vectors outside the grid are rejected rather than
//! clamped so that illuminated-niche counts stay honest. Minimization
//! throughout: an insertion with objective equal to the incumbent's
//! replaces it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::space::MixedPoint;

/// Rectangular discretization of the feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGrid {
    edges: Vec<Vec<f64>>,
}

impl FeatureGrid {
    /// `edges` holds one strictly increasing vector of at least two nodes
    /// per feature.
    pub fn new(edges: Vec<Vec<f64>>) -> Result<Self, Error> {
        if edges.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one feature".into()));
        }
        for (j, e) in edges.iter().enumerate() {
            if e.len() < 2 {
                return Err(Error::InvalidGrid(format!("feature {j} needs at least two edges")));
            }
            if e.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidGrid(format!(
                    "feature {j} edges must be strictly increasing"
                )));
            }
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    pub fn n_features(&self) -> usize {
        self.edges.len()
    }

    /// Total number of bins.
    pub fn bin_count(&self) -> usize {
        self.edges.iter().map(|e| e.len() - 1).product()
    }

    /// Bin index of a feature vector, or `None` when any coordinate falls
    /// outside the grid. Bins are half-open `[e_i, e_{i+1})`; the last bin
    /// also contains its upper edge.
    pub fn bin_index(&self, features: &[f64]) -> Option<Vec<usize>> {
        if features.len() != self.edges.len() {
            return None;
        }
        features
            .iter()
            .zip(&self.edges)
            .map(|(&f, e)| {
                let last = e.len() - 1;
                if f < e[0] || f > e[last] || f.is_nan() {
                    None
                } else if f == e[last] {
                    Some(last - 1)
                } else {
                    Some(e.partition_point(|&edge| edge <= f) - 1)
                }
            })
            .collect()
    }

    /// Midpoint of a bin, per feature.
    pub fn bin_center(&self, bin: &[usize]) -> Vec<f64> {
        bin.iter().zip(&self.edges).map(|(&i, e)| 0.5 * (e[i] + e[i + 1])).collect()
    }

    /// Lower/upper corners of the whole grid.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.edges.iter().map(|e| e[0]).collect();
        let hi = self.edges.iter().map(|e| e[e.len() - 1]).collect();
        (lo, hi)
    }
}

/// One stored elite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub point: MixedPoint,
    pub objective: f64,
    pub features: Vec<f64>,
    pub constraints: Vec<f64>,
    pub bin: Vec<usize>,
}

/// Outcome of [`Archive::try_insert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    /// Some constraint value was positive; archive unchanged.
    RejectInfeasible,
    /// Features fell outside the grid; archive unchanged.
    RejectOutOfGrid,
    /// Bin occupied by a strictly better incumbent; archive unchanged.
    RejectWorse,
    /// First entry in its bin.
    NewNiche,
    /// Replaced the incumbent (ties replace).
    Improved,
}

impl InsertOutcome {
    /// Whether the archive changed.
    pub fn accepted(self) -> bool {
        matches!(self, InsertOutcome::NewNiche | InsertOutcome::Improved)
    }
}

/// Map from occupied bins to their current elites.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Archive {
    grid: FeatureGrid,
    cells: BTreeMap<Vec<usize>, ArchiveEntry>,
}

impl Archive {
    pub fn new(grid: FeatureGrid) -> Self {
        Self { grid, cells: BTreeMap::new() }
    }

    pub fn grid(&self) -> &FeatureGrid {
        &self.grid
    }

    /// Constraint-dominance insertion: feasible (all constraints <= 0) and
    /// in-grid candidates enter when their bin is empty or their objective
    /// does not exceed the incumbent's.
    pub fn try_insert(
        &mut self,
        point: MixedPoint,
        objective: f64,
        features: Vec<f64>,
        constraints: Vec<f64>,
    ) -> InsertOutcome {
        if constraints.iter().any(|g| *g > 0.0 || g.is_nan()) {
            return InsertOutcome::RejectInfeasible;
        }
        let Some(bin) = self.grid.bin_index(&features) else {
            return InsertOutcome::RejectOutOfGrid;
        };
        match self.cells.get(&bin) {
            Some(existing) if existing.objective < objective => InsertOutcome::RejectWorse,
            occupied => {
                let outcome = if occupied.is_some() {
                    InsertOutcome::Improved
                } else {
                    InsertOutcome::NewNiche
                };
                self.cells.insert(
                    bin.clone(),
                    ArchiveEntry { point, objective, features, constraints, bin },
                );
                outcome
            }
        }
    }

    /// Sum of stored objectives over illuminated niches (lower is better).
    pub fn qd_score(&self) -> f64 {
        self.cells.values().map(|e| e.objective).sum()
    }

    /// Number of illuminated niches.
    pub fn niche_count(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Entries in deterministic (bin-lexicographic) order.
    pub fn entries(&self) -> impl Iterator<Item = &ArchiveEntry> {
        self.cells.values()
    }

    pub fn get(&self, bin: &[usize]) -> Option<&ArchiveEntry> {
        self.cells.get(bin)
    }

    /// JSON document with the grid edges and every occupied cell.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": { "edges": self.grid.edges },
            "cells": self.cells.values().collect::<Vec<_>>(),
        })
    }
}
