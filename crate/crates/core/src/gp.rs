//! Gaussian-process regression with a constant (ordinary-kriging) mean.
//!
//! Training minimizes the negative log-marginal likelihood over the kernel
//! hyperparameters with a derivative-free local search from 20 quasi-random
//! starts. The constant mean has a closed generalized-least-squares form
//! per hyperparameter trial and is not a search variable. Outputs are
//! standardized to zero mean / unit variance before training so that the
//! fixed hyperparameter bounds are scale-free; predictions are returned in
//! the original units. Noise is fixed at zero (deterministic simulators),
//! leaving only the diagonal nugget, which escalates by factors of ten if a
//! Cholesky factorization fails.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::error::Error;
use crate::kernels::{
    kernel_matrix, CompiledKernel, KernelHyperparams, KernelMode,
    LevelParams, NUGGET,
};
use crate::sobol::sobol_points;
use crate::space::{MixedPoint, MixedSpace};

const LN_2PI: f64 = 1.8378770664093453;

const LENGTHSCALE_LOG_BOUNDS: (f64, f64) = (-4.605170185988091, 4.605170185988092); // [1e-2, 1e2]
const AMPLITUDE_LOG_BOUNDS: (f64, f64) = (-6.907755278982137, 6.907755278982137); // [1e-3, 1e3]
const THETA_LOG_BOUNDS: (f64, f64) = LENGTHSCALE_LOG_BOUNDS;
const ANGLE_BOUNDS: (f64, f64) = (0.0, std::f64::consts::FRAC_PI_2);

/// Escalation ladder for the diagonal jitter.
const JITTERS: [f64; 4] = [NUGGET, 1e-5, 1e-4, 1e-3];

const MULTISTARTS: usize = 20;

/// Lower bound used as the predictive variance of a degenerate
/// (constant-output) model, equal to the amplitude search floor.
const AMPLITUDE_FLOOR: f64 = 1e-3;

/// Negative log-marginal likelihood of the data under the given
/// hyperparameters and constant mean:
/// `0.5 [ log det K + (y - mean)' K^-1 (y - mean) + M log 2pi ]`
/// where `K` is [`kernel_matrix`] (nugget included).
pub fn neg_log_marginal_likelihood(
    space: &MixedSpace,
    inputs: &[MixedPoint],
    outputs: &[f64],
    hp: &KernelHyperparams,
    mean: f64,
) -> Result<f64, Error> {
    if inputs.len() != outputs.len() || inputs.is_empty() {
        return Err(Error::Gp(format!(
            "inconsistent training set: {} inputs, {} outputs",
            inputs.len(),
            outputs.len()
        )));
    }
    let k = kernel_matrix(inputs, hp, space)?;
    let chol = Cholesky::new(k).ok_or_else(|| Error::Gp("covariance factorization failed".into()))?;
    let m = inputs.len();
    let r = DVector::from_iterator(m, outputs.iter().map(|y| y - mean));
    let solved = chol.solve(&r);
    let quad = r.dot(&solved);
    let logdet = 2.0 * (0..m).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>();
    Ok(0.5 * (logdet + quad + m as f64 * LN_2PI))
}

/// Parameter-vector layout of the hyperparameter search.
struct ParamLayout {
    d_c: usize,
    z_levels: Vec<usize>,
    mode: KernelMode,
}

impl ParamLayout {
    fn new(space: &MixedSpace, mode: KernelMode) -> Self {
        let z_levels = (0..space.n_level_vars()).map(|z| space.level_count(z)).collect();
        Self { d_c: space.n_continuous(), z_levels, mode }
    }

    fn n_level_params(&self) -> usize {
        match self.mode {
            KernelMode::Gower => self.z_levels.len(),
            KernelMode::Hypersphere => self.z_levels.iter().map(|l| l * (l - 1) / 2).sum(),
        }
    }

    fn n_params(&self) -> usize {
        self.d_c + self.n_level_params() + 1
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![LENGTHSCALE_LOG_BOUNDS; self.d_c];
        match self.mode {
            KernelMode::Gower => bounds.extend(vec![THETA_LOG_BOUNDS; self.z_levels.len()]),
            KernelMode::Hypersphere => bounds.extend(vec![ANGLE_BOUNDS; self.n_level_params()]),
        }
        bounds.push(AMPLITUDE_LOG_BOUNDS);
        bounds
    }

    fn decode(&self, params: &[f64]) -> KernelHyperparams {
        let cont_lengthscales = params[..self.d_c].iter().map(|p| p.exp()).collect();
        let level_slice = &params[self.d_c..params.len() - 1];
        let level_params = match self.mode {
            KernelMode::Gower => {
                LevelParams::Gower { thetas: level_slice.iter().map(|p| p.exp()).collect() }
            }
            KernelMode::Hypersphere => {
                let mut angles = Vec::with_capacity(self.z_levels.len());
                let mut offset = 0;
                for &levels in &self.z_levels {
                    let n = levels * (levels - 1) / 2;
                    angles.push(level_slice[offset..offset + n].to_vec());
                    offset += n;
                }
                LevelParams::Hypersphere { angles }
            }
        };
        KernelHyperparams {
            amplitude: params[params.len() - 1].exp(),
            cont_lengthscales,
            level_params,
            noise_variance: 0.0,
        }
    }
}

/// Pairwise training-data cache so each likelihood evaluation costs one
/// `exp` per pair plus the factorization.
struct PairCache {
    m: usize,
    d_c: usize,
    d_z: usize,
    sq_diffs: Vec<f64>,       // (pair, cont dim), lower triangle i > j
    level_pairs: Vec<(u8, u8)>, // (pair, level var)
}

impl PairCache {
    fn new(space: &MixedSpace, inputs: &[MixedPoint]) -> Self {
        let m = inputs.len();
        let d_c = space.n_continuous();
        let d_z = space.n_level_vars();
        let n_pairs = m * (m - 1) / 2;
        let mut sq_diffs = Vec::with_capacity(n_pairs * d_c);
        let mut level_pairs = Vec::with_capacity(n_pairs * d_z);
        for i in 1..m {
            for j in 0..i {
                for c in 0..d_c {
                    let d = inputs[i].continuous[c] - inputs[j].continuous[c];
                    sq_diffs.push(d * d);
                }
                for z in 0..d_z {
                    level_pairs.push((inputs[i].level(z) as u8, inputs[j].level(z) as u8));
                }
            }
        }
        Self { m, d_c, d_z, sq_diffs, level_pairs }
    }

    /// Builds the covariance matrix without its diagonal jitter.
    fn build(&self, layout: &ParamLayout, params: &[f64]) -> Result<DMatrix<f64>, Error> {
        let amp = params[params.len() - 1].exp();
        let inv_two_lsq: Vec<f64> =
            params[..self.d_c].iter().map(|p| 1.0 / (2.0 * (2.0 * p).exp())).collect();
        let level_slice = &params[self.d_c..params.len() - 1];

        let mut k = DMatrix::zeros(self.m, self.m);
        match layout.mode {
            KernelMode::Gower => {
                let thetas: Vec<f64> = level_slice.iter().map(|p| p.exp()).collect();
                let mut pair = 0;
                for i in 1..self.m {
                    for j in 0..i {
                        let mut exponent = 0.0;
                        let sq = &self.sq_diffs[pair * self.d_c..(pair + 1) * self.d_c];
                        for (s, inv) in sq.iter().zip(&inv_two_lsq) {
                            exponent -= s * inv;
                        }
                        let lv = &self.level_pairs[pair * self.d_z..(pair + 1) * self.d_z];
                        for ((a, b), theta) in lv.iter().zip(&thetas) {
                            if a != b {
                                exponent -= theta;
                            }
                        }
                        let v = amp * exponent.exp();
                        k[(i, j)] = v;
                        k[(j, i)] = v;
                        pair += 1;
                    }
                }
            }
            KernelMode::Hypersphere => {
                let mut mats = Vec::with_capacity(layout.z_levels.len());
                let mut offset = 0;
                for &levels in &layout.z_levels {
                    let n = levels * (levels - 1) / 2;
                    mats.push(crate::kernels::hypersphere_corr_matrix(
                        levels,
                        &level_slice[offset..offset + n],
                    )?);
                    offset += n;
                }
                let mut pair = 0;
                for i in 1..self.m {
                    for j in 0..i {
                        let mut exponent = 0.0;
                        let sq = &self.sq_diffs[pair * self.d_c..(pair + 1) * self.d_c];
                        for (s, inv) in sq.iter().zip(&inv_two_lsq) {
                            exponent -= s * inv;
                        }
                        let mut v = amp * exponent.exp();
                        let lv = &self.level_pairs[pair * self.d_z..(pair + 1) * self.d_z];
                        for ((a, b), mat) in lv.iter().zip(&mats) {
                            v *= mat[(*a as usize, *b as usize)];
                        }
                        k[(i, j)] = v;
                        k[(j, i)] = v;
                        pair += 1;
                    }
                }
            }
        }
        for i in 0..self.m {
            k[(i, i)] = amp;
        }
        Ok(k)
    }
}

/// Factorizes with escalating jitter; returns the factorization and the
/// jitter that succeeded.
fn cholesky_with_escalation(base: &DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, f64)> {
    for &jitter in &JITTERS {
        let mut k = base.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(k) {
            return Some((chol, jitter));
        }
    }
    None
}

/// NLML with the closed-form GLS mean; `None` when factorization fails at
/// every jitter level.
fn nlml_gls(cache: &PairCache, layout: &ParamLayout, y: &DVector<f64>, params: &[f64]) -> Option<f64> {
    let base = cache.build(layout, params).ok()?;
    let (chol, _) = cholesky_with_escalation(&base)?;
    let m = cache.m;
    let ones = DVector::from_element(m, 1.0);
    let kinv_y = chol.solve(y);
    let kinv_1 = chol.solve(&ones);
    let denom = ones.dot(&kinv_1);
    if denom.abs() < 1e-300 {
        return None;
    }
    let mu = ones.dot(&kinv_y) / denom;
    let quad = y.dot(&kinv_y) - 2.0 * mu * ones.dot(&kinv_y) + mu * mu * denom;
    let logdet = 2.0 * (0..m).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>();
    let nlml = 0.5 * (logdet + quad + m as f64 * LN_2PI);
    nlml.is_finite().then_some(nlml)
}

/// Multistart diagnostics kept on a fitted model.
#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    /// NLML at the returned optimum.
    pub best_nlml: f64,
    /// NLML at each multistart initial point (infinite when it failed).
    pub start_nlmls: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Kind {
    Fitted {
        hp: KernelHyperparams,
        mean_std: f64,
        chol: Cholesky<f64, Dyn>,
        alpha: DVector<f64>,
        compiled: CompiledKernel,
    },
    Constant { value: f64, sd: f64 },
}

/// A trained Gaussian process over a mixed space.
#[derive(Debug, Clone)]
pub struct GpModel {
    space: MixedSpace,
    inputs: Vec<MixedPoint>,
    outputs: Vec<f64>,
    y_offset: f64,
    y_scale: f64,
    kind: Kind,
    /// Present on models produced by [`GpModel::fit`].
    pub diagnostics: Option<FitDiagnostics>,
}

impl GpModel {
    /// Trains hyperparameters by NLML minimization with 20 deterministic
    /// quasi-random multistarts.
    ///
    /// Constant outputs yield a degenerate model that predicts the constant
    /// with variance pinned at the amplitude search floor. `seed` is kept
    /// for interface stability; training is deterministic in the data.
    pub fn fit(
        space: &MixedSpace,
        inputs: &[MixedPoint],
        outputs: &[f64],
        kernel_mode: KernelMode,
        _seed: u64,
    ) -> Result<Self, Error> {
        let m = inputs.len();
        if m < 2 {
            return Err(Error::Gp(format!("fit requires at least 2 points, got {m}")));
        }
        if outputs.len() != m {
            return Err(Error::Gp("inputs/outputs length mismatch".into()));
        }
        if outputs.iter().any(|y| !y.is_finite()) {
            return Err(Error::Gp("non-finite training output".into()));
        }

        let y_offset = outputs.iter().sum::<f64>() / m as f64;
        let variance = outputs.iter().map(|y| (y - y_offset).powi(2)).sum::<f64>() / m as f64;
        let y_scale = variance.sqrt();
        if y_scale < 1e-12 * (1.0 + y_offset.abs()) {
            return Ok(Self {
                space: space.clone(),
                inputs: inputs.to_vec(),
                outputs: outputs.to_vec(),
                y_offset,
                y_scale: 1.0,
                kind: Kind::Constant { value: y_offset, sd: AMPLITUDE_FLOOR.sqrt() },
                diagnostics: None,
            });
        }

        let y_std =
            DVector::from_iterator(m, outputs.iter().map(|y| (y - y_offset) / y_scale));
        let layout = ParamLayout::new(space, kernel_mode);
        let bounds = layout.bounds();
        let n = layout.n_params();
        let cache = PairCache::new(space, inputs);

        // One extra point so the all-zero first Sobol' point (a corner of
        // the box) is skipped.
        let unit_starts = sobol_points(n, MULTISTARTS + 1, 0)?;
        let starts: Vec<Vec<f64>> = unit_starts[1..]
            .iter()
            .map(|u| {
                u.iter().zip(&bounds).map(|(ui, (lo, hi))| lo + ui * (hi - lo)).collect()
            })
            .collect();

        let max_evals = (28 * n).clamp(120, 400);
        let results: Vec<(f64, f64, Vec<f64>)> = starts
            .par_iter()
            .map(|start| {
                let start_nlml =
                    nlml_gls(&cache, &layout, &y_std, start).unwrap_or(f64::INFINITY);
                let out = crate::optim::nelder_mead(
                    |p| nlml_gls(&cache, &layout, &y_std, p).unwrap_or(f64::INFINITY),
                    start,
                    &bounds,
                    max_evals,
                    1e-7,
                );
                (start_nlml, out.value, out.x)
            })
            .collect();

        let start_nlmls: Vec<f64> = results.iter().map(|r| r.0).collect();
        let best = results
            .iter()
            .enumerate()
            .filter(|(_, r)| r.1.is_finite())
            .min_by(|(ia, a), (ib, b)| {
                a.1.partial_cmp(&b.1).unwrap().then(ia.cmp(ib))
            });
        let (_, (_, best_nlml, best_params)) =
            best.ok_or_else(|| Error::Gp("all multistart restarts failed to factorize".into()))?;

        let hp = layout.decode(best_params);
        let base = cache.build(&layout, best_params)?;
        let (chol, _) = cholesky_with_escalation(&base)
            .ok_or_else(|| Error::Gp("final covariance factorization failed".into()))?;
        let ones = DVector::from_element(m, 1.0);
        let kinv_1 = chol.solve(&ones);
        let kinv_y = chol.solve(&y_std);
        let mean_std = ones.dot(&kinv_y) / ones.dot(&kinv_1);
        let alpha = chol.solve(&(&y_std - &ones * mean_std));
        let compiled = CompiledKernel::new(&hp, space)?;

        Ok(Self {
            space: space.clone(),
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
            y_offset,
            y_scale,
            kind: Kind::Fitted { hp, mean_std, chol, alpha, compiled },
            diagnostics: Some(FitDiagnostics { best_nlml: *best_nlml, start_nlmls }),
        })
    }

    /// Builds a model with fixed hyperparameters and no output
    /// standardization; the constant mean is still estimated in closed
    /// form. Accepts a single training point.
    pub fn with_hyperparams(
        space: &MixedSpace,
        inputs: &[MixedPoint],
        outputs: &[f64],
        hp: KernelHyperparams,
    ) -> Result<Self, Error> {
        let m = inputs.len();
        if m == 0 || outputs.len() != m {
            return Err(Error::Gp("with_hyperparams requires a nonempty, consistent set".into()));
        }
        let k = kernel_matrix(inputs, &hp, space)?;
        let (chol, _) = cholesky_with_escalation(&{
            let mut base = k;
            for i in 0..m {
                base[(i, i)] -= NUGGET; // escalation re-adds the ladder
            }
            base
        })
        .ok_or_else(|| Error::Gp("covariance factorization failed".into()))?;
        let y = DVector::from_column_slice(outputs);
        let ones = DVector::from_element(m, 1.0);
        let mean_std = ones.dot(&chol.solve(&y)) / ones.dot(&chol.solve(&ones));
        let alpha = chol.solve(&(&y - &ones * mean_std));
        let compiled = CompiledKernel::new(&hp, space)?;
        Ok(Self {
            space: space.clone(),
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
            y_offset: 0.0,
            y_scale: 1.0,
            kind: Kind::Fitted { hp, mean_std, chol, alpha, compiled },
            diagnostics: None,
        })
    }

    /// Posterior mean and standard deviation at `p`, in original units.
    pub fn predict(&self, p: &MixedPoint) -> (f64, f64) {
        match &self.kind {
            Kind::Constant { value, sd } => (*value, *sd),
            Kind::Fitted { hp, mean_std, chol, alpha, compiled } => {
                let k_star = self.k_star(compiled, p);
                let mean = mean_std + k_star.dot(alpha);
                let var = (hp.amplitude - k_star.dot(&chol.solve(&k_star))).max(0.0);
                (self.y_offset + self.y_scale * mean, self.y_scale * var.sqrt())
            }
        }
    }

    /// Posterior mean only; skips the variance solve.
    pub fn predict_mean(&self, p: &MixedPoint) -> f64 {
        match &self.kind {
            Kind::Constant { value, .. } => *value,
            Kind::Fitted { mean_std, alpha, compiled, .. } => {
                let k_star = self.k_star(compiled, p);
                self.y_offset + self.y_scale * (mean_std + k_star.dot(alpha))
            }
        }
    }

    fn k_star(&self, compiled: &CompiledKernel, p: &MixedPoint) -> DVector<f64> {
        DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|x| compiled.eval(p, x)))
    }

    pub fn space(&self) -> &MixedSpace {
        &self.space
    }

    pub fn train_len(&self) -> usize {
        self.inputs.len()
    }

    pub fn train_inputs(&self) -> &[MixedPoint] {
        &self.inputs
    }

    pub fn train_outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Fitted hyperparameters; `None` for a degenerate constant model.
    pub fn hyperparams(&self) -> Option<&KernelHyperparams> {
        match &self.kind {
            Kind::Fitted { hp, .. } => Some(hp),
            Kind::Constant { .. } => None,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.kind, Kind::Constant { .. })
    }

    /// Output standardization applied at training time: `(offset, scale)`.
    pub fn standardization(&self) -> (f64, f64) {
        (self.y_offset, self.y_scale)
    }

    /// Estimated constant mean in standardized units.
    pub fn mean_std(&self) -> f64 {
        match &self.kind {
            Kind::Fitted { mean_std, .. } => *mean_std,
            Kind::Constant { .. } => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line_space() -> MixedSpace {
        MixedSpace::continuous(vec![(0.0, 1.0)]).unwrap()
    }

    fn pt(x: f64) -> MixedPoint {
        MixedPoint::new(vec![x], vec![], vec![])
    }

    fn simple_hp(d_c: usize, amplitude: f64) -> KernelHyperparams {
        KernelHyperparams {
            amplitude,
            cont_lengthscales: vec![1.0; d_c],
            level_params: LevelParams::Gower { thetas: vec![] },
            noise_variance: 0.0,
        }
    }

    #[test]
    fn nlml_single_point_closed_form() {
        let space = line_space();
        let hp = simple_hp(1, 1.0);
        let nlml =
            neg_log_marginal_likelihood(&space, &[pt(0.4)], &[0.0], &hp, 0.0).unwrap();
        // K = [[1 + nugget]]; the closed form is
        // 0.5 (log(1+nugget) + log 2pi).
        let expected = 0.5 * ((1.0 + NUGGET).ln() + LN_2PI);
        assert_relative_eq!(nlml, expected, epsilon = 1e-12);
        assert!((nlml - 0.91894).abs() < 1e-4);
    }

    #[test]
    fn nlml_quadratic_term_scales() {
        let space = line_space();
        let hp = simple_hp(1, 1.0);
        let inputs = [pt(0.1), pt(0.9)];
        let base = neg_log_marginal_likelihood(&space, &inputs, &[0.3, -0.2], &hp, 0.0).unwrap();
        let scaled =
            neg_log_marginal_likelihood(&space, &inputs, &[3.0, -2.0], &hp, 0.0).unwrap();
        // Same log-det; the quadratic form grows by exactly 100x.
        let m_logdet_part = {
            let k = kernel_matrix(&inputs, &hp, &space).unwrap();
            let chol = Cholesky::new(k).unwrap();
            2.0 * (0..2).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>()
        };
        let quad_base = 2.0 * base - m_logdet_part - 2.0 * LN_2PI;
        let quad_scaled = 2.0 * scaled - m_logdet_part - 2.0 * LN_2PI;
        assert_relative_eq!(quad_scaled, 100.0 * quad_base, epsilon = 1e-9);
    }

    #[test]
    fn nlml_matches_direct_density_oracle() {
        // Independent oracle: hand-inverted 2x2 Gaussian density on the
        // same jittered covariance.
        let space = line_space();
        let hp = simple_hp(1, 1.3);
        let inputs = [pt(0.2), pt(0.7)];
        let y = [0.4, -0.6];
        let mean = 0.1;
        let k = kernel_matrix(&inputs, &hp, &space).unwrap();
        let (a, b, c) = (k[(0, 0)], k[(0, 1)], k[(1, 1)]);
        let det = a * c - b * b;
        let r = [y[0] - mean, y[1] - mean];
        let quad = (c * r[0] * r[0] - 2.0 * b * r[0] * r[1] + a * r[1] * r[1]) / det;
        let oracle = 0.5 * (det.ln() + quad + 2.0 * LN_2PI);
        let nlml = neg_log_marginal_likelihood(&space, &inputs, &y, &hp, mean).unwrap();
        assert_relative_eq!(nlml, oracle, epsilon = 1e-9);
    }

    #[test]
    fn fit_interpolates_line() {
        let space = line_space();
        let inputs: Vec<MixedPoint> = [0.0, 0.25, 0.5, 0.75, 1.0].map(pt).to_vec();
        let outputs: Vec<f64> = inputs.iter().map(|p| p.continuous[0]).collect();
        let model = GpModel::fit(&space, &inputs, &outputs, KernelMode::Gower, 0).unwrap();
        let (mean, _) = model.predict(&pt(0.5));
        assert!((mean - 0.5).abs() < 0.05, "predicted {mean}");
        for (x, y) in inputs.iter().zip(&outputs) {
            let (m, sd) = model.predict(x);
            assert!((m - y).abs() <= 1e-3, "interpolation error {} at {:?}", (m - y).abs(), x);
            let amp = model.hyperparams().unwrap().amplitude;
            assert!(sd <= 1e-2 * amp.sqrt() * model.standardization().1);
        }
    }

    #[test]
    fn fit_constant_outputs_degenerate() {
        let space = line_space();
        let inputs: Vec<MixedPoint> = [0.0, 0.5, 1.0].map(pt).to_vec();
        let model = GpModel::fit(&space, &inputs, &[3.0, 3.0, 3.0], KernelMode::Gower, 0).unwrap();
        assert!(model.is_degenerate());
        let (mean, sd) = model.predict(&pt(0.123));
        assert_eq!(mean, 3.0);
        assert_relative_eq!(sd, AMPLITUDE_FLOOR.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn fit_deterministic() {
        let space = line_space();
        let inputs: Vec<MixedPoint> = [0.0, 0.3, 0.6, 1.0].map(pt).to_vec();
        let outputs = vec![0.1, -0.4, 0.9, 0.2];
        let a = GpModel::fit(&space, &inputs, &outputs, KernelMode::Gower, 7).unwrap();
        let b = GpModel::fit(&space, &inputs, &outputs, KernelMode::Gower, 7).unwrap();
        assert_eq!(a.hyperparams(), b.hyperparams());
        assert_eq!(a.predict(&pt(0.41)), b.predict(&pt(0.41)));
    }

    #[test]
    fn fit_rejects_undersized_sets() {
        let space = line_space();
        assert!(GpModel::fit(&space, &[pt(0.1)], &[1.0], KernelMode::Gower, 0).is_err());
    }

    #[test]
    fn one_point_model_closed_form() {
        let space = line_space();
        let model =
            GpModel::with_hyperparams(&space, &[pt(0.5)], &[2.0], simple_hp(1, 1.0)).unwrap();
        // K = [[1 + nugget]], GLS mean = y1; at the training point the
        // posterior is mean = y1, var = 1 - 1/(1 + nugget).
        let (mean, sd) = model.predict(&pt(0.5));
        assert_relative_eq!(mean, 2.0, epsilon = 1e-9);
        let var_expected = 1.0 - 1.0 / (1.0 + NUGGET);
        assert_relative_eq!(sd, var_expected.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn prior_reversion_far_away() {
        let space = MixedSpace::new(vec![(0.0, 1000.0)], vec![], vec![2]).unwrap();
        let hp = KernelHyperparams {
            amplitude: 2.0,
            cont_lengthscales: vec![1.0],
            level_params: LevelParams::Gower { thetas: vec![50.0] },
            noise_variance: 0.0,
        };
        let inputs = vec![
            MixedPoint::new(vec![0.0], vec![], vec![0]),
            MixedPoint::new(vec![1.0], vec![], vec![0]),
        ];
        let model = GpModel::with_hyperparams(&space, &inputs, &[1.0, 3.0], hp).unwrap();
        let far = MixedPoint::new(vec![900.0], vec![], vec![1]);
        let (mean, sd) = model.predict(&far);
        assert_relative_eq!(mean, model.mean_std(), epsilon = 1e-6);
        assert!((sd - 2.0f64.sqrt()).abs() / 2.0f64.sqrt() < 0.01);
    }

    #[test]
    fn posterior_variance_bounded_by_amplitude() {
        let space = line_space();
        let inputs: Vec<MixedPoint> = [0.1, 0.4, 0.8].map(pt).to_vec();
        let model =
            GpModel::with_hyperparams(&space, &inputs, &[0.7, -0.2, 0.5], simple_hp(1, 1.5))
                .unwrap();
        for i in 0..=20 {
            let (_, sd) = model.predict(&pt(i as f64 / 20.0));
            assert!(sd * sd <= 1.5 + 1e-8);
        }
    }

    #[test]
    fn extra_point_never_raises_variance() {
        let space = line_space();
        let hp = simple_hp(1, 1.0);
        let small: Vec<MixedPoint> = [0.2, 0.8].map(pt).to_vec();
        let big: Vec<MixedPoint> = [0.2, 0.8, 0.5].map(pt).to_vec();
        let m_small =
            GpModel::with_hyperparams(&space, &small, &[0.1, 0.4], hp.clone()).unwrap();
        let m_big = GpModel::with_hyperparams(&space, &big, &[0.1, 0.4, 0.9], hp).unwrap();
        for i in 0..=10 {
            let x = pt(i as f64 / 10.0);
            let (_, sd_small) = m_small.predict(&x);
            let (_, sd_big) = m_big.predict(&x);
            assert!(sd_big <= sd_small + 1e-9, "variance rose at {x:?}");
        }
    }

    #[test]
    fn fitted_nlml_not_worse_than_any_start() {
        let space = line_space();
        let inputs: Vec<MixedPoint> = [0.0, 0.2, 0.5, 0.7, 1.0].map(pt).to_vec();
        let outputs = vec![0.0, 0.4, -0.3, 0.8, 0.1];
        let model = GpModel::fit(&space, &inputs, &outputs, KernelMode::Gower, 0).unwrap();
        let diag = model.diagnostics.as_ref().unwrap();
        for s in &diag.start_nlmls {
            assert!(diag.best_nlml <= s + 1e-9);
        }
    }

    #[test]
    fn mixed_fit_with_hypersphere_runs() {
        let space = MixedSpace::new(vec![(0.0, 1.0)], vec![], vec![3]).unwrap();
        let inputs = crate::space::lhs_sample(&space, 12, 4).unwrap();
        let outputs: Vec<f64> = inputs
            .iter()
            .map(|p| p.continuous[0].sin() + p.categorical[0] as f64)
            .collect();
        let model =
            GpModel::fit(&space, &inputs, &outputs, KernelMode::Hypersphere, 0).unwrap();
        for (x, y) in inputs.iter().zip(&outputs) {
            let (m, _) = model.predict(x);
            let range = 2.0 + 1.0;
            assert!((m - y).abs() <= 1e-3 * range, "err {}", (m - y).abs());
        }
    }
}
