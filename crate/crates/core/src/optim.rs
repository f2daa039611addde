//! Bounded Nelder-Mead simplex search used for hyperparameter training.
//!
//! Box constraints are handled by projecting every trial point onto the
//! bounds before evaluation. The search is deterministic.

/// Result of one local search.
pub(crate) struct LocalMinimum {
    pub x: Vec<f64>,
    pub value: f64,
}

fn clamp_to(bounds: &[(f64, f64)], x: &mut [f64]) {
    for (xi, (lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(*lo, *hi);
    }
}

/// Minimizes `f` over the box `bounds` starting from `start`, spending at
/// most `max_evals` function evaluations.
pub(crate) fn nelder_mead<F>(
    mut f: F,
    start: &[f64],
    bounds: &[(f64, f64)],
    max_evals: usize,
    tol: f64,
) -> LocalMinimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    assert_eq!(bounds.len(), n);
    let evals = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    if n == 0 {
        let value = eval(start);
        return LocalMinimum { x: vec![], value };
    }

    // Initial simplex: start plus one vertex per dimension, stepping 5% of
    // the box width (reflected inward at the upper bound).
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start_clamped = start.to_vec();
    clamp_to(bounds, &mut start_clamped);
    simplex.push(start_clamped.clone());
    for i in 0..n {
        let (lo, hi) = bounds[i];
        let step = 0.05 * (hi - lo);
        let mut v = start_clamped.clone();
        v[i] = if v[i] + step <= hi { v[i] + step } else { v[i] - step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    while evals.get() < max_evals {
        // Order ascending by value (stable: ties keep insertion order).
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        if values[n] - values[0] <= tol * (1.0 + values[0].abs()) {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64)
            .collect();

        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(&simplex[n])
            .map(|(c, w)| c + ALPHA * (c - w))
            .collect();
        clamp_to(bounds, &mut reflected);
        let fr = eval(&reflected);

        if fr < values[0] {
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(&reflected)
                .map(|(c, r)| c + GAMMA * (r - c))
                .collect();
            clamp_to(bounds, &mut expanded);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let mut contracted: Vec<f64> = if fr < values[n] {
                centroid.iter().zip(&reflected).map(|(c, r)| c + RHO * (r - c)).collect()
            } else {
                centroid.iter().zip(&simplex[n]).map(|(c, w)| c + RHO * (w - c)).collect()
            };
            clamp_to(bounds, &mut contracted);
            let fc = eval(&contracted);
            let against = if fr < values[n] { fr } else { values[n] };
            if fc < against {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + SIGMA * (v - b))
                        .collect();
                    simplex[i] = shrunk;
                    values[i] = eval(&simplex[i]);
                    if evals.get() >= max_evals {
                        break;
                    }
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    LocalMinimum { x: simplex[best].clone(), value: values[best] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_within_box() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 1.2).powi(2);
        let out = nelder_mead(f, &[2.0, 2.0], &[(-3.0, 3.0), (-3.0, 3.0)], 400, 1e-12);
        assert!((out.x[0] - 0.3).abs() < 1e-4, "x0 = {}", out.x[0]);
        assert!((out.x[1] + 1.2).abs() < 1e-4, "x1 = {}", out.x[1]);
    }

    #[test]
    fn respects_bounds_when_optimum_outside() {
        let f = |x: &[f64]| (x[0] - 10.0).powi(2);
        let out = nelder_mead(f, &[0.0], &[(-1.0, 1.0)], 200, 1e-12);
        assert!((out.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| x.iter().map(|v| v.cos()).sum::<f64>();
        let a = nelder_mead(f, &[0.1, 0.2, 0.3], &[(-2.0, 2.0); 3], 300, 1e-10);
        let b = nelder_mead(f, &[0.1, 0.2, 0.3], &[(-2.0, 2.0); 3], 300, 1e-10);
        assert_eq!(a.x, b.x);
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn handles_infinite_regions() {
        // Objective undefined (infinite) on half the box.
        let f = |x: &[f64]| if x[0] < 0.0 { f64::INFINITY } else { (x[0] - 0.5).powi(2) };
        let out = nelder_mead(f, &[0.9], &[(-1.0, 1.0)], 200, 1e-12);
        assert!((out.x[0] - 0.5).abs() < 1e-5);
    }
}
