// Scratch probe for timing and criterion feasibility checks.
use std::time::Instant;

use bqd_core::benchmarks::{styblinski_suite, trid_suite, rosenbrock_suite};
use bqd_core::{run_bqd, run_map_elites, BqdConfig, MapElitesConfig};
use bqd_core::kernels::KernelMode;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "trid".into());
    match which.as_str() {
        "trid-me-long" => {
            // Reachable-niche estimate: very long MAP-Elites run.
            let problem = trid_suite();
            for seed in 0..3 {
                let cfg = MapElitesConfig {
                    population_size: 10,
                    batch_size: 10,
                    generations: 9999,
                    seed,
                    ..MapElitesConfig::default()
                };
                let t = Instant::now();
                let run = run_map_elites(&problem, &cfg, None).unwrap();
                println!(
                    "trid ME 100k evals seed={seed}: niches={} qd={:.3} ({:?})",
                    run.archive.niche_count(),
                    run.archive.qd_score(),
                    t.elapsed()
                );
            }
        }
        "sty-me-long" => {
            let problem = styblinski_suite();
            for seed in 0..3 {
                let cfg = MapElitesConfig {
                    population_size: 10,
                    batch_size: 10,
                    generations: 9999,
                    seed,
                    ..MapElitesConfig::default()
                };
                let run = run_map_elites(&problem, &cfg, None).unwrap();
                println!(
                    "sty ME 100k evals seed={seed}: niches={} qd={:.3}",
                    run.archive.niche_count(),
                    run.archive.qd_score()
                );
            }
        }
        "rosen-me-long" => {
            let problem = rosenbrock_suite();
            for seed in 0..3 {
                let cfg = MapElitesConfig {
                    population_size: 10,
                    batch_size: 10,
                    generations: 2999,
                    seed,
                    ..MapElitesConfig::default()
                };
                let run = run_map_elites(&problem, &cfg, None).unwrap();
                println!(
                    "rosen ME 30k evals seed={seed}: niches={} qd={:.3}",
                    run.archive.niche_count(),
                    run.archive.qd_score()
                );
            }
        }
        "me-budget" => {
            // MAP-Elites at the paper budgets.
            for (name, problem, budget) in [
                ("rosen", rosenbrock_suite(), 160usize),
                ("trid", trid_suite(), 240),
                ("sty", styblinski_suite(), 220),
            ] {
                for seed in 0..5 {
                    let cfg = MapElitesConfig {
                        population_size: 10,
                        batch_size: 10,
                        generations: (budget - 10) / 10,
                        seed,
                        ..MapElitesConfig::default()
                    };
                    let run = run_map_elites(&problem, &cfg, None).unwrap();
                    println!(
                        "{name} ME {budget} evals seed={seed}: niches={} qd={:.3}",
                        run.archive.niche_count(),
                        run.archive.qd_score()
                    );
                }
            }
        }
        "trid" | "rosen" | "sty" => {
            let (problem, budget, doe) = match which.as_str() {
                "trid" => (trid_suite(), 240usize, 60usize),
                "rosen" => (rosenbrock_suite(), 160, 40),
                _ => (styblinski_suite(), 220, 90),
            };
            let mode = match std::env::args().nth(2).as_deref() {
                Some("hyp") => KernelMode::Hypersphere,
                _ => KernelMode::Gower,
            };
            let seed: u64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0);
            let cfg = BqdConfig {
                kernel_mode: mode,
                max_evaluations: budget,
                initial_doe_size: doe,
                seed,
                ..BqdConfig::default()
            };
            let t = Instant::now();
            let run = run_bqd(&problem, &cfg).unwrap();
            println!(
                "{which} BQD {:?} seed={seed}: evals={} niches={} qd={:.3} time={:?}",
                mode,
                run.evaluations,
                run.archive.niche_count(),
                run.archive.qd_score(),
                t.elapsed()
            );
            let cats: std::collections::BTreeSet<Vec<usize>> =
                run.archive.entries().map(|e| e.point.categorical.clone()).collect();
            println!("  distinct categorical tuples: {}", cats.len());
            for rec in run.history.iter() {
                println!("  evals={} qd={:.3} niches={}", rec.evaluations, rec.qd_score, rec.niche_count);
            }
        }
        other => eprintln!("unknown probe {other}"),
    }
}
