//! Repetition-level experiment orchestration.
//!
//! Runs a solver over several seeded repetitions, aligns the per-run
//! convergence histories onto a common evaluation grid (step function,
//! last value carried forward) and aggregates median / 25th / 75th
//! quantiles per checkpoint. Repetition `r` always uses
//! `base_seed + r`, so experiments sharing a base seed also share their
//! initial samples across algorithms.

use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::Archive;
use crate::bayesian_qd::{run_bqd, BqdConfig};
use crate::benchmarks::suite_by_name;
use crate::error::Error;
use crate::kernels::KernelMode;
use crate::map_elites::{run_map_elites, HistoryRecord, MapElitesConfig, QdProblem};

/// Which solver an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    MapElites,
    BqdGower,
    BqdHypersphere,
}

impl Algorithm {
    /// Stable token used in configs and CSV output.
    pub fn token(self) -> &'static str {
        match self {
            Algorithm::MapElites => "MAP_ELITES",
            Algorithm::BqdGower => "BQD_GOWER",
            Algorithm::BqdHypersphere => "BQD_HYPERSPHERE",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "MAP_ELITES" => Some(Algorithm::MapElites),
            "BQD_GOWER" => Some(Algorithm::BqdGower),
            "BQD_HYPERSPHERE" => Some(Algorithm::BqdHypersphere),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One experiment: a suite, a solver configuration and a repetition count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub suite: String,
    pub algorithm: Algorithm,
    /// Used when `algorithm` is `MapElites`.
    pub map_elites: MapElitesConfig,
    /// Used for the BQD algorithms; its kernel mode is overridden to match
    /// `algorithm`.
    pub bqd: BqdConfig,
    pub repetitions: usize,
    pub base_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        if suite_by_name(&self.suite).is_none() {
            return Err(Error::InvalidConfig(format!("unknown suite '{}'", self.suite)));
        }
        Ok(())
    }
}

/// Convergence history of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSeries {
    pub repetition: usize,
    pub rows: Vec<HistoryRecord>,
}

/// Aggregated quantiles at one evaluation checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub evals: usize,
    pub median_qd: f64,
    pub q25_qd: f64,
    pub q75_qd: f64,
    pub median_niches: f64,
    pub q25_niches: f64,
    pub q75_niches: f64,
}

/// Everything produced by one experiment.
#[derive(Debug)]
pub struct ExperimentResult {
    pub suite: String,
    pub algorithm: Algorithm,
    pub repetitions: Vec<RepetitionSeries>,
    pub aggregate: Vec<AggregateRow>,
    pub final_archives: Vec<Archive>,
}

impl ExperimentResult {
    /// Final-checkpoint summary: `(median qd_score, median niche_count)`.
    pub fn final_medians(&self) -> (f64, f64) {
        match self.aggregate.last() {
            Some(row) => (row.median_qd, row.median_niches),
            None => (0.0, 0.0),
        }
    }

    pub fn summary_line(&self) -> String {
        let (qd, niches) = self.final_medians();
        format!(
            "{} {} reps={} final median qd_score={qd} niche_count={niches}",
            self.suite,
            self.algorithm,
            self.repetitions.len()
        )
    }
}

/// Runs every repetition of `spec` (in parallel) and aggregates.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, Error> {
    spec.validate()?;
    let problem = suite_by_name(&spec.suite).expect("validated suite");
    run_experiment_on(spec, &problem)
}

/// As [`run_experiment`], with an explicit problem (used by callers that
/// build their own evaluators).
pub fn run_experiment_on(
    spec: &ExperimentSpec,
    problem: &QdProblem,
) -> Result<ExperimentResult, Error> {
    if spec.repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    let outcomes: Vec<Result<(Vec<HistoryRecord>, Archive), Error>> = (0..spec.repetitions)
        .into_par_iter()
        .map(|r| {
            let seed = spec.base_seed.wrapping_add(r as u64);
            match spec.algorithm {
                Algorithm::MapElites => {
                    let cfg = MapElitesConfig { seed, ..spec.map_elites.clone() };
                    run_map_elites(problem, &cfg, None).map(|run| (run.history, run.archive))
                }
                Algorithm::BqdGower | Algorithm::BqdHypersphere => {
                    let kernel_mode = if spec.algorithm == Algorithm::BqdGower {
                        KernelMode::Gower
                    } else {
                        KernelMode::Hypersphere
                    };
                    let cfg = BqdConfig { seed, kernel_mode, ..spec.bqd.clone() };
                    run_bqd(problem, &cfg).map(|run| (run.history, run.archive))
                }
            }
        })
        .collect();

    let completed = outcomes.iter().filter(|o| o.is_ok()).count();
    let mut repetitions = Vec::with_capacity(spec.repetitions);
    let mut final_archives = Vec::with_capacity(spec.repetitions);
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok((rows, archive)) => {
                repetitions.push(RepetitionSeries { repetition: r, rows });
                final_archives.push(archive);
            }
            Err(err) => {
                return Err(Error::Experiment { completed, cause: err.to_string() });
            }
        }
    }

    let checkpoints = shared_checkpoints(&repetitions);
    let series: Vec<&[HistoryRecord]> = repetitions.iter().map(|r| r.rows.as_slice()).collect();
    let aggregate = aggregate_quantiles(&series, &checkpoints);

    Ok(ExperimentResult {
        suite: spec.suite.clone(),
        algorithm: spec.algorithm,
        repetitions,
        aggregate,
        final_archives,
    })
}

/// Union of all evaluation counts seen across repetitions, ascending.
pub fn shared_checkpoints(repetitions: &[RepetitionSeries]) -> Vec<usize> {
    let mut all: Vec<usize> =
        repetitions.iter().flat_map(|r| r.rows.iter().map(|row| row.evaluations)).collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// Step-function value of a history at `checkpoint` (last record with
/// `evaluations <= checkpoint`, or the first record before any data).
fn value_at(rows: &[HistoryRecord], checkpoint: usize) -> &HistoryRecord {
    let mut current = &rows[0];
    for row in rows {
        if row.evaluations <= checkpoint {
            current = row;
        } else {
            break;
        }
    }
    current
}

/// Linear-interpolation quantile of unsorted `values`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Median / 25th / 75th quantiles of qd-score and niche count per
/// checkpoint, with step-function alignment of each repetition.
pub fn aggregate_quantiles(
    series: &[&[HistoryRecord]],
    checkpoints: &[usize],
) -> Vec<AggregateRow> {
    assert!(!series.is_empty(), "aggregate_quantiles requires at least one repetition");
    checkpoints
        .iter()
        .map(|&evals| {
            let qd: Vec<f64> = series.iter().map(|rows| value_at(rows, evals).qd_score).collect();
            let niches: Vec<f64> =
                series.iter().map(|rows| value_at(rows, evals).niche_count as f64).collect();
            AggregateRow {
                evals,
                median_qd: quantile(&qd, 0.5),
                q25_qd: quantile(&qd, 0.25),
                q75_qd: quantile(&qd, 0.75),
                median_niches: quantile(&niches, 0.5),
                q25_niches: quantile(&niches, 0.25),
                q75_niches: quantile(&niches, 0.75),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Output rendering
// ---------------------------------------------------------------------------

/// Per-repetition convergence rows as CSV (LF endings, `.` decimals).
pub fn runs_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("algorithm,suite,repetition,evals,qd_score,niche_count\n");
    for rep in &result.repetitions {
        for row in &rep.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                result.algorithm,
                result.suite,
                rep.repetition,
                row.evaluations,
                row.qd_score,
                row.niche_count
            ));
        }
    }
    out
}

/// Aggregated quantile rows as CSV.
pub fn aggregate_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(
        "algorithm,suite,evals,median_qd,q25_qd,q75_qd,median_niches,q25_niches,q75_niches\n",
    );
    for row in &result.aggregate {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            result.algorithm,
            result.suite,
            row.evals,
            row.median_qd,
            row.q25_qd,
            row.q75_qd,
            row.median_niches,
            row.q25_niches,
            row.q75_niches
        ));
    }
    out
}

/// Writes a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Error> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes the per-run CSV, aggregate CSV and one archive JSON per
/// repetition into `dir`.
pub fn write_outputs(dir: &Path, result: &ExperimentResult) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    let stem = format!("{}_{}", result.suite, result.algorithm);
    write_atomic(&dir.join(format!("{stem}_runs.csv")), &runs_csv(result))?;
    write_atomic(&dir.join(format!("{stem}_aggregate.csv")), &aggregate_csv(result))?;
    for (rep, archive) in result.final_archives.iter().enumerate() {
        let json = serde_json::to_string_pretty(&archive.to_json())
            .expect("archive serialization is infallible");
        write_atomic(&dir.join(format!("{stem}_rep{rep}_archive.json")), &json)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn record(evals: usize, qd: f64, niches: usize) -> HistoryRecord {
        HistoryRecord { evaluations: evals, qd_score: qd, niche_count: niches }
    }

    #[test]
    fn quantile_convention() {
        assert_relative_eq!(quantile(&[0.0, 1.0], 0.5), 0.5, epsilon = 1e-15);
        assert_relative_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75, epsilon = 1e-15);
        assert_relative_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0, epsilon = 1e-15);
        assert_relative_eq!(quantile(&[-1.0, -2.0, -3.0], 0.5), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn aggregation_examples() {
        let a = vec![record(10, -1.0, 1), record(20, -2.0, 2)];
        let b = vec![record(10, -2.0, 1), record(20, -3.0, 3)];
        let c = vec![record(10, -3.0, 2), record(20, -4.0, 4)];
        let series: Vec<&[HistoryRecord]> = vec![&a, &b, &c];
        let rows = aggregate_quantiles(&series, &[10, 15, 20]);
        assert_eq!(rows[0].median_qd, -2.0);
        // Step alignment: at 15 evaluations every run still reports its
        // 10-evaluation state.
        assert_eq!(rows[1], AggregateRow { evals: 15, ..rows[0].clone() });
        assert_eq!(rows[2].median_qd, -3.0);
        assert_eq!(rows[2].median_niches, 3.0);
    }

    #[test]
    fn aggregation_identical_reps_collapse() {
        let a = vec![record(5, -1.5, 2), record(10, -2.5, 3)];
        let series: Vec<&[HistoryRecord]> = vec![&a, &a, &a];
        let rows = aggregate_quantiles(&series, &[5, 10]);
        for row in rows {
            assert_eq!(row.median_qd, row.q25_qd);
            assert_eq!(row.median_qd, row.q75_qd);
        }
    }

    #[test]
    fn aggregation_order_invariant() {
        let a = vec![record(10, -1.0, 1)];
        let b = vec![record(10, -5.0, 3)];
        let c = vec![record(10, -3.0, 2)];
        let forward: Vec<&[HistoryRecord]> = vec![&a, &b, &c];
        let backward: Vec<&[HistoryRecord]> = vec![&c, &b, &a];
        assert_eq!(aggregate_quantiles(&forward, &[10]), aggregate_quantiles(&backward, &[10]));
    }

    #[test]
    fn single_repetition_median_is_the_series() {
        let spec = ExperimentSpec {
            suite: "rosenbrock".into(),
            algorithm: Algorithm::MapElites,
            map_elites: MapElitesConfig { generations: 6, ..MapElitesConfig::default() },
            bqd: BqdConfig::default(),
            repetitions: 1,
            base_seed: 3,
        };
        let result = run_experiment(&spec).unwrap();
        assert_eq!(result.repetitions.len(), 1);
        let rows = &result.repetitions[0].rows;
        assert_eq!(result.aggregate.len(), rows.len());
        for (agg, row) in result.aggregate.iter().zip(rows) {
            assert_eq!(agg.evals, row.evaluations);
            assert_eq!(agg.median_qd, row.qd_score);
            assert_eq!(agg.q25_qd, row.qd_score);
            assert_eq!(agg.median_niches, row.niche_count as f64);
        }
    }

    #[test]
    fn shared_base_seed_shares_initial_samples() {
        // With the MAP-Elites population equal to the BQD design size and
        // a budget that stops BQD after its design, both algorithms see
        // exactly the same initial samples.
        let me_spec = ExperimentSpec {
            suite: "rosenbrock".into(),
            algorithm: Algorithm::MapElites,
            map_elites: MapElitesConfig {
                population_size: 12,
                generations: 0,
                ..MapElitesConfig::default()
            },
            bqd: BqdConfig::default(),
            repetitions: 2,
            base_seed: 77,
        };
        let bqd_spec = ExperimentSpec {
            suite: "rosenbrock".into(),
            algorithm: Algorithm::BqdGower,
            map_elites: MapElitesConfig::default(),
            bqd: BqdConfig {
                initial_doe_size: 12,
                max_evaluations: 12,
                ..BqdConfig::default()
            },
            repetitions: 2,
            base_seed: 77,
        };
        let me = run_experiment(&me_spec).unwrap();
        let bqd = run_experiment(&bqd_spec).unwrap();
        for r in 0..2 {
            assert_eq!(me.repetitions[r].rows[0], bqd.repetitions[r].rows[0]);
        }
    }

    #[test]
    fn unknown_suite_rejected() {
        let spec = ExperimentSpec {
            suite: "wing".into(),
            algorithm: Algorithm::MapElites,
            map_elites: MapElitesConfig::default(),
            bqd: BqdConfig::default(),
            repetitions: 1,
            base_seed: 0,
        };
        let err = run_experiment(&spec).unwrap_err();
        assert!(err.to_string().contains("wing"));
    }

    #[test]
    fn csv_rendering_deterministic() {
        let spec = ExperimentSpec {
            suite: "trid".into(),
            algorithm: Algorithm::MapElites,
            map_elites: MapElitesConfig { generations: 4, ..MapElitesConfig::default() },
            bqd: BqdConfig::default(),
            repetitions: 3,
            base_seed: 5,
        };
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(runs_csv(&a), runs_csv(&b));
        assert_eq!(aggregate_csv(&a), aggregate_csv(&b));
        assert!(runs_csv(&a).starts_with("algorithm,suite,repetition,evals,qd_score,niche_count\n"));
        assert!(!runs_csv(&a).contains('\r'));
    }

    #[test]
    fn outputs_written_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec {
            suite: "trid".into(),
            algorithm: Algorithm::MapElites,
            map_elites: MapElitesConfig { generations: 2, ..MapElitesConfig::default() },
            bqd: BqdConfig::default(),
            repetitions: 2,
            base_seed: 1,
        };
        let result = run_experiment(&spec).unwrap();
        write_outputs(dir.path(), &result).unwrap();
        for name in [
            "trid_MAP_ELITES_runs.csv",
            "trid_MAP_ELITES_aggregate.csv",
            "trid_MAP_ELITES_rep0_archive.json",
            "trid_MAP_ELITES_rep1_archive.json",
        ] {
            assert!(dir.path().join(name).exists(), "missing {name}");
            assert!(!dir.path().join(format!("{name}.tmp")).exists());
        }
    }
}
