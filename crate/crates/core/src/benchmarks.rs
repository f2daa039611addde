//! Analytical mixed-variable QD benchmark problems.
//!
//! Three modified classical test functions, each with categorical
//! variables steering a coefficient table, one or two inequality
//! constraints, two feature functions and a fixed feature grid. All
//! evaluators are pure and cheap; these suites exist to compare solver
//! behavior under a controlled evaluation budget.

use crate::archive::FeatureGrid;
use crate::map_elites::QdProblem;
use crate::space::MixedSpace;

/// Per-suite shape summary for listings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteInfo {
    pub name: &'static str,
    pub d_c: usize,
    pub d_q: usize,
    pub n_features: usize,
    pub n_constraints: usize,
    pub bin_count: usize,
}

/// Names accepted by [`suite_by_name`].
pub const SUITE_NAMES: [&str; 3] = ["rosenbrock", "trid", "styblinski"];

/// Looks a suite up by its listing name.
pub fn suite_by_name(name: &str) -> Option<QdProblem> {
    match name {
        "rosenbrock" => Some(rosenbrock_suite()),
        "trid" => Some(trid_suite()),
        "styblinski" => Some(styblinski_suite()),
        _ => None,
    }
}

/// Shape summaries for every suite, in listing order.
pub fn suite_infos() -> Vec<SuiteInfo> {
    SUITE_NAMES
        .iter()
        .map(|name| {
            let p = suite_by_name(name).expect("known suite");
            SuiteInfo {
                name,
                d_c: p.space().n_continuous(),
                d_q: p.space().n_categorical(),
                n_features: p.n_features(),
                n_constraints: p.n_constraints(),
                bin_count: p.grid().bin_count(),
            }
        })
        .collect()
}

fn edges(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

// ---------------------------------------------------------------------------
// Rosenbrock
// ---------------------------------------------------------------------------

/// Coefficient row of the Rosenbrock suite; `r` is the integer feature
/// exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosenbrockCoeffs {
    pub a: f64,
    pub b: f64,
    pub e: f64,
    pub f: f64,
    pub j: f64,
    pub k: f64,
    pub r: i32,
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

const fn rc(
    a: f64,
    b: f64,
    e: f64,
    f: f64,
    j: f64,
    k: f64,
    r: i32,
    s: f64,
    t: f64,
    u: f64,
    v: f64,
) -> RosenbrockCoeffs {
    RosenbrockCoeffs { a, b, e, f, j, k, r, s, t, u, v }
}

/// Rows indexed `[x1q][x2q]` with `x1q` in `0..6`, `x2q` in `0..2`.
const ROSENBROCK_TABLE: [[RosenbrockCoeffs; 2]; 6] = [
    [
        rc(100.0, 1.0, 0.7, 2000.0, 1.0, 0.0, 1, -1.2, 0.0, 0.0, -1.0),
        rc(103.0, 1.6, 0.2, 1950.0, -1.0, 0.0, 1, -0.2, 0.0, 0.0, 0.97),
    ],
    [
        rc(98.0, 2.0, 0.3, 2100.0, 1.0, 0.0, 1, -0.7, 0.0, 0.0, 0.95),
        rc(100.0, 1.7, 0.5, 2020.0, 1.0, 0.0, 1, 0.15, 0.0, 0.0, 1.1),
    ],
    [
        rc(95.0, 4.7, 1.5, 1970.0, 1.0, 0.15, 2, 0.0, 0.5, 0.0, -0.8),
        rc(97.0, 2.4, 1.2, 2100.0, 1.0, -0.55, 2, 0.4, 0.0, -0.8, 0.7),
    ],
    [
        rc(103.0, 1.7, 2.5, 2070.0, -1.0, -1.15, 2, 0.0, -1.5, 0.0, 1.8),
        rc(100.0, 0.2, 1.0, 1890.0, 1.0, -1.3, 2, 1.4, 0.0, 0.8, -1.7),
    ],
    [
        rc(96.0, 1.1, 0.5, 2140.0, -1.0, 0.5, 2, 0.0, -2.3, 0.0, -0.8),
        rc(104.0, 1.5, 2.0, 1930.0, -1.0, 1.4, 2, -2.4, 0.0, 1.8, -0.8),
    ],
    [
        rc(99.0, 1.1, 0.5, 2140.0, 1.0, -1.5, 2, 0.0, 2.0, 0.0, -0.9),
        rc(104.0, 1.5, 2.0, 2030.0, 1.0, 1.8, 2, 0.4, 0.0, 1.0, -0.3),
    ],
];

/// Coefficient lookup for categorical levels `(x1q, x2q)`.
pub fn rosenbrock_coeffs(x1q: usize, x2q: usize) -> RosenbrockCoeffs {
    ROSENBROCK_TABLE[x1q][x2q]
}

/// Modified Rosenbrock QD problem: two continuous variables on
/// `[-5, 5]^2`, categorical levels `{0..5} x {0..1}`, one constraint, a
/// 10 x 13 feature grid.
pub fn rosenbrock_suite() -> QdProblem {
    let space = MixedSpace::new(vec![(-5.0, 5.0), (-5.0, 5.0)], vec![], vec![6, 2]).unwrap();
    let grid = FeatureGrid::new(vec![edges(-50.0, 10.0, 11), edges(-50.0, 10.0, 14)]).unwrap();
    QdProblem::new(
        space,
        grid,
        2,
        1,
        |p| {
            let c = rosenbrock_coeffs(p.categorical[0], p.categorical[1]);
            let x = &p.continuous;
            let mut sum = 0.0;
            for i in 0..x.len() - 1 {
                sum += c.a * (x[i + 1] - x[i] * x[i]).powi(2) + c.b * (c.e - x[i + 1]).powi(2);
            }
            -sum / c.f
        },
        |p| {
            let c = rosenbrock_coeffs(p.categorical[0], p.categorical[1]);
            let x = &p.continuous;
            vec![c.j * (x[0] - c.k).powi(c.r) + c.s, c.v * (x[1] - c.t).powi(2) + c.u]
        },
        |p| {
            let x = &p.continuous;
            vec![((x[0] - 0.5).powi(2) + x[1] - 5.6) / 10.0]
        },
    )
}

// ---------------------------------------------------------------------------
// Trid
// ---------------------------------------------------------------------------

/// Coefficient row of the Trid suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TridCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub f: f64,
    pub j: f64,
    pub k: f64,
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub u: f64,
}

const fn tc(
    a: f64,
    b: f64,
    c: f64,
    e: f64,
    f: f64,
    j: f64,
    k: f64,
    r: f64,
    s: f64,
    t: f64,
    u: f64,
) -> TridCoeffs {
    TridCoeffs { a, b, c, e, f, j, k, r, s, t, u }
}

/// Rows indexed `[x1q][x2q]` with `x1q` in `0..3`, `x2q` in `0..2`.
const TRID_TABLE: [[TridCoeffs; 2]; 3] = [
    [
        tc(1.0, 1.0, 1.0, 1.0, 1.0, 0.7, 1.0, 1.0, 1.5, 1.0, 0.4),
        tc(1.1, 0.7, 1.0, 1.0, 1.0, 0.7, 1.0, 1.0, 0.7, 1.0, 1.4),
    ],
    [
        tc(0.95, 1.0, 1.1, 0.8, 1.0, 0.4, 1.1, 1.0, 1.9, 1.0, 0.1),
        tc(0.7, 0.5, 0.4, 1.5, 1.0, 1.7, 0.7, 0.7, 0.5, 1.0, 0.9),
    ],
    [
        tc(1.0, 1.3, 0.97, 1.1, 0.8, 0.1, 1.0, 0.9, 1.5, 1.1, 0.4),
        tc(0.7, 1.0, 1.5, 1.0, 1.3, 0.91, 1.0, 1.0, 1.5, 0.7, 0.1),
    ],
];

/// Coefficient lookup for categorical levels `(x1q, x2q)`.
pub fn trid_coeffs(x1q: usize, x2q: usize) -> TridCoeffs {
    TRID_TABLE[x1q][x2q]
}

/// Modified Trid QD problem: four continuous variables on `[0, 1]^4`,
/// categorical levels `{0..2} x {0..1}`, one constraint, a 6 x 5 feature
/// grid.
pub fn trid_suite() -> QdProblem {
    let space = MixedSpace::new(vec![(0.0, 1.0); 4], vec![], vec![3, 2]).unwrap();
    let grid = FeatureGrid::new(vec![edges(-1.5, 1.0, 7), edges(-2.5, 1.0, 6)]).unwrap();
    QdProblem::new(
        space,
        grid,
        2,
        1,
        |p| {
            let c = trid_coeffs(p.categorical[0], p.categorical[1]);
            let x = &p.continuous;
            let quad: f64 = x.iter().map(|xi| c.a * (xi - c.b).powi(2)).sum();
            let cross: f64 = (1..x.len()).map(|i| c.c * x[i] * x[i - 1]).sum();
            quad - cross
        },
        |p| {
            let c = trid_coeffs(p.categorical[0], p.categorical[1]);
            let x = &p.continuous;
            vec![
                c.e * x[2] + (c.f * x[0] - c.j).powi(2) + c.k * x[1],
                c.r * x[1] - c.s + (c.t * x[3] * x[2] - c.u).powi(2),
            ]
        },
        |p| {
            let x = &p.continuous;
            vec![(x[0] - 0.4).powi(2) + 1.5 * x[2] - 1.3]
        },
    )
}

// ---------------------------------------------------------------------------
// Styblinski-Tang
// ---------------------------------------------------------------------------

/// Coefficient row of the Styblinski-Tang suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StyblinskiCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub f: f64,
    pub j: f64,
    pub k: f64,
}

const fn sc(a: f64, b: f64, c: f64, e: f64, f: f64, j: f64, k: f64) -> StyblinskiCoeffs {
    StyblinskiCoeffs { a, b, c, e, f, j, k }
}

/// Rows indexed `[x1q][x2q][x3q]`, each level binary.
const STYBLINSKI_TABLE: [[[StyblinskiCoeffs; 2]; 2]; 2] = [
    [
        [sc(1.0, 16.0, 5.0, 1.2, 0.7, 3.5, 0.7), sc(0.75, 10.0, 7.0, 2.2, 1.7, 1.5, 0.5)],
        [sc(0.94, 12.0, 6.9, 1.4, 0.2, 1.4, 0.2), sc(1.1, 18.0, 4.2, 1.9, 0.7, 2.7, 0.4)],
    ],
    [
        [sc(1.1, 18.0, 6.1, 1.4, 0.9, 3.8, 0.2), sc(1.2, 19.0, 4.2, 1.5, 2.9, 1.4, 1.2)],
        [sc(0.95, 17.0, 4.9, 1.7, 1.3, 2.8, 0.7), sc(0.97, 12.0, 1.9, 0.7, 2.3, 3.8, 0.4)],
    ],
];

/// Coefficient lookup for categorical levels `(x1q, x2q, x3q)`.
pub fn styblinski_coeffs(x1q: usize, x2q: usize, x3q: usize) -> StyblinskiCoeffs {
    STYBLINSKI_TABLE[x1q][x2q][x3q]
}

/// Modified Styblinski-Tang QD problem: six continuous variables on
/// `[-5, 5]^6` (the classical Styblinski-Tang domain), three binary
/// categorical variables, two constraints, a 6 x 5 feature grid.
pub fn styblinski_suite() -> QdProblem {
    let space = MixedSpace::new(vec![(-5.0, 5.0); 6], vec![], vec![2, 2, 2]).unwrap();
    let grid = FeatureGrid::new(vec![edges(0.0, 2.0, 7), edges(-5.0, 2.0, 6)]).unwrap();
    QdProblem::new(
        space,
        grid,
        2,
        2,
        |p| {
            let c = styblinski_coeffs(p.categorical[0], p.categorical[1], p.categorical[2]);
            p.continuous.iter().map(|xi| c.a * xi.powi(4) - c.b * xi.powi(2) + c.c * xi).sum()
        },
        |p| {
            let c = styblinski_coeffs(p.categorical[0], p.categorical[1], p.categorical[2]);
            let x = &p.continuous;
            vec![(x[2] - c.e).powi(2) + (x[4] - c.f).powi(2), x[1] + c.j + (x[3] - c.k).powi(2)]
        },
        |p| {
            let x = &p.continuous;
            vec![x[0] + x[1] - 1.0, x[3] + x[5] - 2.0]
        },
    )
}
